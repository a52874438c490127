#pragma once
#include <cstdint>

#include "patchquilt/mesh.hpp"

namespace patchquilt {

/// Stratified area-uniform surface sampling. Expected point count is
/// density * total area; per-face counts are proportional to face area.
/// Deterministic for a given (mesh, density, seed). Throws GeometryError on
/// a zero-area mesh. Records the source face of every point.
PointCloud sample_surface_points(const Mesh& mesh, double density, uint64_t seed = 0);

}  // namespace patchquilt
