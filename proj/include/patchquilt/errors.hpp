#pragma once
#include <stdexcept>
#include <string>

namespace patchquilt {

// Error classes map to CLI exit codes: ParseError/IoError -> 2,
// GeometryError -> 3, HashMismatchError -> 4, anything else -> 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

struct GeometryError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct HashMismatchError : Error {
    using Error::Error;
};

}  // namespace patchquilt
