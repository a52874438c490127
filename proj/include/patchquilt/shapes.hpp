#pragma once
#include <cstdint>

#include "patchquilt/mesh.hpp"

namespace patchquilt {

/// Procedural fixtures shared by the evaluation harness and the tests.

/// Regular nx x ny triangulated grid in the z=0 plane, spanning
/// [0,width] x [0,height].
Mesh make_grid(int nx, int ny, double width = 1.0, double height = 1.0);

/// Icosphere: icosahedron subdivided `subdivisions` times, radius `radius`,
/// centered at the origin.
Mesh make_icosphere(int subdivisions, double radius = 1.0);

/// Unit-cube surface [0,1]^3 as a welded triangulated grid, `n` cells per
/// edge.
Mesh make_cube_surface(int n);

/// Torus with major radius R, minor radius r, nu x nv resolution.
Mesh make_torus(double R, double r, int nu, int nv);

/// Sphere with radial sinusoidal displacement:
/// p = u * (radius + amplitude * sin(frequency*u.x) * cos(frequency*u.y))
/// for unit direction u.
Mesh make_displaced_sphere(double radius, double amplitude, double frequency,
                           int subdivisions);

/// Torus displaced along its surface normal by the same sinusoid (evaluated
/// on the normalized position), used for corpus variety in the studies.
Mesh make_displaced_torus(double R, double r, double amplitude, double frequency,
                          int nu, int nv);

/// Gaussian jitter of every vertex, sigma in model units. Deterministic.
Mesh add_gaussian_noise(const Mesh& mesh, double sigma, uint64_t seed = 0);

/// Rigid motion: rotation (row-major axes) then translation.
Mesh apply_rigid(const Mesh& mesh, const Mat3& rotation, const Vec3& translation);

}  // namespace patchquilt
