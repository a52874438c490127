#pragma once
#include <array>
#include <string>
#include <vector>

#include "patchquilt/mesh.hpp"

namespace patchquilt {

/// Coarse all-quad mesh supplying seed points and frame orientations.
struct QuadMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> quads;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int quad_count() const { return static_cast<int>(quads.size()); }

    Vec3 quad_centroid(int q) const;
    /// Newell's method, unit length.
    Vec3 quad_normal(int q) const;
    double quad_edge_length(int q) const;  // mean of the 4 edges
    double average_edge_length() const;

    /// Quad pairs sharing an edge; for each quad, the neighbor ids (sorted).
    std::vector<std::vector<int>> adjacency() const;

    /// Checks the structural invariants: indices in range, quads planar
    /// within 0.25 x edge length, edge-manifold. If requested_length > 0 the
    /// average edge length must be within +-30% of it. Throws GeometryError.
    void validate(double requested_length = 0) const;
};

/// Reads an all-quad OBJ. Triangle or polygon faces are rejected with the
/// offending face index; the invariants are validated.
QuadMesh import_quad_mesh(const std::string& path);
void export_quad_mesh(const QuadMesh& qm, const std::string& path);

/// Splits each quad into 4^level bilinear sub-quads and each sub-quad into
/// two triangles. Vertices on shared edges are merged, so the result is the
/// connectivity donor for reconstruction.
Mesh subdivide_quad_mesh(const QuadMesh& qm, int level);

}  // namespace patchquilt
