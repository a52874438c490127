#pragma once
#include <cstdint>
#include <vector>

#include "patchquilt/mesh.hpp"
#include "patchquilt/mesh_io.hpp"

namespace patchquilt {

struct PunchResult {
    Mesh damaged;
    std::vector<RemovedVertex> removed;  // original indices and positions
    std::vector<Vec3> centers;           // hole centers actually punched
};

/// Removes vertices (and incident faces) within hole_diameter/2 of each hole
/// center. Centers come from farthest-point sampling on vertices with minimum
/// geodesic spacing `spacing`; a center whose removal would disconnect the
/// mesh is skipped with a warning.
PunchResult punch_holes(const Mesh& mesh, double hole_diameter, double spacing,
                        uint64_t seed = 0);

/// Flags exactly round(ratio * |V|) vertices invalid; connectivity retained.
Mesh mark_missing_vertices(const Mesh& mesh, double ratio, uint64_t seed = 0);

}  // namespace patchquilt
