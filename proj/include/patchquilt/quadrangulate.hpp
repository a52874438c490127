#pragma once
#include "patchquilt/mesh.hpp"
#include "patchquilt/quadmesh.hpp"

namespace patchquilt {

struct QuadrangulateOptions {
    int orientation_iterations = 300;
    /// Mean per-vertex change below which the orientation field is considered
    /// converged.
    double convergence_tol = 1e-5;
    /// A field still changing more than this at the iteration cap raises an
    /// error carrying the residual.
    double divergence_tol = 5e-2;
};

/// Field-aligned quadrangulation of a smoothed proxy: a per-vertex 4-RoSy
/// orientation field (curvature-seeded, symmetry-aware averaging), then a
/// lattice grown over the surface by stepping target_quad_length along the
/// field directions and projecting back, merging fronts where they meet, and
/// closing quads from the resulting link graph. Rejects non-manifold input.
QuadMesh quadrangulate(const Mesh& proxy, double target_quad_length,
                       const QuadrangulateOptions& options = {});

}  // namespace patchquilt
