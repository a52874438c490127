#pragma once
#include "patchquilt/mesh.hpp"

namespace patchquilt {

/// One midpoint (1-to-4) subdivision pass. |V'| = |V| + |E|.
Mesh midpoint_subdivide(const Mesh& mesh);

/// Quadric edge-collapse decimation down to target_vertex_count. Requires an
/// edge-manifold input; throws GeometryError listing offending edges.
Mesh quadric_decimate(const Mesh& mesh, int target_vertex_count);

/// Brings |V| within +-10% of the target by midpoint subdivision and/or
/// quadric edge collapse.
Mesh resample_to_resolution(const Mesh& mesh, int target_vertex_count);

}  // namespace patchquilt
