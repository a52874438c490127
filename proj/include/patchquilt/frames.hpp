#pragma once
#include <string>
#include <vector>

#include "patchquilt/quadmesh.hpp"
#include "patchquilt/vec.hpp"

namespace patchquilt {

class TriangleBvh;

/// Rigid local coordinate system at a seed point. Rows of `rotation` are the
/// X, Y, Z axes, so to_local(p) = R * (p - origin).
struct ReferenceFrame {
    Vec3 origin;
    Mat3 rotation;

    Vec3 to_local(const Vec3& p) const { return rotation * (p - origin); }
    Vec3 to_global(const Vec3& q) const { return rotation.transposed() * q + origin; }

    /// R orthonormal within 1e-9 and det = +1.
    bool is_rigid() const;
};

struct Seed {
    Vec3 point;
    ReferenceFrame frame;
    int source_quad = -1;
    int offset_id = 0;  // 0 = quad center, 1..4k = offsets
};

using SeedSet = std::vector<Seed>;

/// Per-quad frames: origin = centroid, Z = quad normal, X/Y from the quad
/// edges, then a breadth-first traversal per connected component (root =
/// lowest quad id) snaps every X axis to the neighbor's under the 4-fold
/// symmetry. Deterministic.
std::vector<ReferenceFrame> quad_frames(const QuadMesh& qm);

/// One center seed per quad plus 4 offset seeds per ring j in 1..k, displaced
/// by (j/(k+1)) * (L/2) along +-X and +-Y of the quad frame, where L is the
/// quad's edge length. Offsets are re-projected to the closest point on
/// `projection_surface` when given; all seeds reuse the quad's frame.
SeedSet seed_points_with_offsets(const QuadMesh& qm, const std::vector<ReferenceFrame>& frames,
                                 int overlap_level,
                                 const TriangleBvh* projection_surface = nullptr);

/// Debug table: one line "quad_id ox oy oz r00..r22" per frame.
void export_frames(const std::vector<ReferenceFrame>& frames, const std::string& path);

}  // namespace patchquilt
