#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "patchquilt/vec.hpp"

namespace patchquilt {

/// Indexed triangle mesh. `valid` is either empty (all vertices valid) or one
/// flag per vertex; it carries the missing-vertex labels for the inpainting
/// experiments.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<uint8_t> valid;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int face_count() const { return static_cast<int>(faces.size()); }

    bool all_valid() const;
    bool is_valid_vertex(int v) const { return valid.empty() || valid[v] != 0; }

    BBox bounds() const;
    double total_area() const;
    double face_area(int f) const;
    Vec3 face_normal(int f) const;  // unit, zero for degenerate faces

    /// Throws GeometryError on out-of-range indices, degenerate faces or
    /// non-finite coordinates.
    void validate() const;

    /// One-ring vertex adjacency, each list sorted ascending.
    std::vector<std::vector<int>> vertex_adjacency() const;
    /// Faces incident to each vertex.
    std::vector<std::vector<int>> vertex_faces() const;
    /// Edges incident to more than two faces (as sorted vertex pairs).
    std::vector<std::array<int, 2>> non_manifold_edges() const;
    /// Edges incident to exactly one face.
    std::vector<std::array<int, 2>> boundary_edges() const;
    bool is_closed() const { return boundary_edges().empty(); }

    std::vector<Vec3> vertex_normals() const;  // area-weighted, unit
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<int> source_face;  // optional, empty or one entry per point
};

/// Uniform scale + translation taking a mesh into the unit cube;
/// normalized = (p - offset) * scale.
struct NormalizeRecord {
    double scale = 1.0;
    Vec3 offset{0, 0, 0};

    Vec3 apply(const Vec3& p) const { return (p - offset) * scale; }
    Vec3 invert(const Vec3& p) const { return p / scale + offset; }
};

/// Fits the bounding box into [0,1]^3 with uniform scale, longest axis
/// mapped to exactly [0,1]. Throws GeometryError on a zero-extent box.
Mesh normalize_unit_cube(const Mesh& mesh, NormalizeRecord* record = nullptr);
Mesh denormalize(const Mesh& mesh, const NormalizeRecord& record);

/// Uniform-weight Laplacian smoothing with damping lambda per iteration.
/// Connectivity and validity flags are unchanged; 0 iterations is identity.
Mesh laplacian_smooth(const Mesh& mesh, int iterations, double lambda = 0.5);

/// Replaces positions of invalid vertices by iterated means of already-known
/// neighbors (breadth-first from the valid region). Validity flags are kept.
/// Throws GeometryError if a connected component has no valid vertex.
Mesh fill_invalid_from_neighbors(const Mesh& mesh);

}  // namespace patchquilt
