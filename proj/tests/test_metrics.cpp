#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "patchquilt/bvh.hpp"
#include "patchquilt/errors.hpp"
#include "patchquilt/mesh_io.hpp"
#include "patchquilt/metrics.hpp"
#include "patchquilt/sampling.hpp"
#include "patchquilt/shapes.hpp"

using namespace patchquilt;

namespace {

// Brute-force oracle: scan every triangle.
double brute_force_distance(const Vec3& p, const Mesh& mesh) {
    double best = 1e300;
    for (const auto& t : mesh.faces) {
        Vec3 cp = closest_point_on_triangle(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                            mesh.vertices[t[2]]);
        best = std::min(best, norm(p - cp));
    }
    return best;
}

}  // namespace

TEST_CASE("sampling: planar containment and count") {
    Mesh square = make_grid(1, 1);  // unit square, 2 triangles
    PointCloud c = sample_surface_points(square, 10000, 1);
    CHECK(c.points.size() > 9700);
    CHECK(c.points.size() < 10300);
    for (const auto& p : c.points) {
        CHECK(p.z == 0.0);
        CHECK(p.x >= 0.0);
        CHECK(p.x <= 1.0);
    }
}

TEST_CASE("sampling: count scales linearly with density") {
    Mesh square = make_grid(1, 1);
    auto n1 = sample_surface_points(square, 5000, 2).points.size();
    auto n4 = sample_surface_points(square, 20000, 2).points.size();
    CHECK(std::abs(double(n4) - 4.0 * double(n1)) < 0.05 * 4.0 * double(n1));
}

TEST_CASE("sampling: per-face counts proportional to area") {
    Mesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {3, 0, 1}, {7, 0, 1}, {3, 4, 1}};
    m.faces = {{0, 1, 2}, {3, 4, 5}};  // areas 0.5 and 8
    PointCloud c = sample_surface_points(m, 4000, 3);
    int counts[2] = {0, 0};
    for (int f : c.source_face) ++counts[f];
    CHECK(double(counts[1]) / double(counts[0]) == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("sampling: points stay on the sampled sphere faces") {
    Mesh sphere = make_icosphere(3, 1.0);
    PointCloud c = sample_surface_points(sphere, 10000, 5);
    // all points lie within the max face deviation of the analytic sphere
    double max_dev = 0;
    for (const auto& t : sphere.faces) {
        Vec3 centroid =
            (sphere.vertices[t[0]] + sphere.vertices[t[1]] + sphere.vertices[t[2]]) / 3.0;
        max_dev = std::max(max_dev, 1.0 - norm(centroid));
    }
    for (const auto& p : c.points) {
        CHECK(norm(p) <= 1.0 + 1e-12);
        CHECK(norm(p) >= 1.0 - max_dev - 1e-12);
    }
}

TEST_CASE("sampling is deterministic given a seed") {
    Mesh sphere = make_icosphere(2, 1.0);
    PointCloud a = sample_surface_points(sphere, 3000, 42);
    PointCloud b = sample_surface_points(sphere, 3000, 42);
    REQUIRE(a.points.size() == b.points.size());
    for (size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i] == b.points[i]);
}

TEST_CASE("sampling rejects bad inputs") {
    Mesh square = make_grid(1, 1);
    CHECK_THROWS_AS(sample_surface_points(square, 0), GeometryError);
    Mesh degenerate;
    degenerate.vertices = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    degenerate.faces = {{0, 1, 2}};
    CHECK_THROWS_AS((void)sample_surface_points(degenerate, 10), GeometryError);
}

TEST_CASE("cloud_to_mesh_error: on-surface points give zero") {
    Mesh sphere = make_icosphere(2, 1.0);
    PointCloud c = sample_surface_points(sphere, 2000, 0);
    CHECK(cloud_to_mesh_error(c, sphere) < 1e-12);
}

TEST_CASE("cloud_to_mesh_error: offset point above a square") {
    Mesh square = make_grid(1, 1);
    PointCloud c;
    c.points = {{0.0, 0.0, 2.0}};
    CHECK(cloud_to_mesh_error(c, square) == doctest::Approx(2.0));
}

TEST_CASE("BVH equals brute force on random points vs bunny") {
    Mesh bunny = load_mesh(std::string(PATCHQUILT_DATA_DIR) + "/bunny.obj");
    TriangleBvh bvh(bunny);
    BBox b = bunny.bounds();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-0.2, 1.2);
    for (int i = 0; i < 100; ++i) {
        Vec3 p = b.lo + Vec3{uni(rng) * b.extent().x, uni(rng) * b.extent().y,
                             uni(rng) * b.extent().z};
        double fast = bvh.closest(p).distance;
        double slow = brute_force_distance(p, bunny);
        CHECK(std::abs(fast - slow) < 1e-12);
    }
}

TEST_CASE("psnr: identical meshes hit the cap") {
    Mesh sphere = make_icosphere(2, 1.0);
    CHECK(psnr(sphere, sphere) == kPsnrCap);
}

TEST_CASE("psnr: closed form for a uniform normal offset") {
    // unit square offset by 0.001 along z: every vertex of either mesh is
    // exactly 0.001 from the other's surface, so the symmetric RMS is 0.001
    // and peak = bbox diagonal = sqrt(2)
    Mesh square = make_grid(8, 8);
    Mesh shifted = square;
    for (auto& v : shifted.vertices) v.z += 0.001;
    double expected = 20.0 * std::log10(std::sqrt(2.0) / 0.001);
    CHECK(psnr(shifted, square) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("psnr is invariant to rigid motion of both meshes") {
    Mesh a = make_displaced_sphere(0.4, 0.01, 8.0, 3);
    Mesh b = add_gaussian_noise(a, 0.002, 5);
    double p0 = psnr(b, a);
    double angle = 0.7;
    Mat3 rot = Mat3::from_rows({std::cos(angle), -std::sin(angle), 0},
                               {std::sin(angle), std::cos(angle), 0}, {0, 0, 1});
    Vec3 t{0.3, -1.0, 2.0};
    double p1 = psnr(apply_rigid(b, rot, t), apply_rigid(a, rot, t));
    // the error term is rigid-invariant; the peak (axis-aligned bbox diagonal)
    // moves slightly under rotation, so allow a small dB drift
    CHECK(std::abs(p0 - p1) < 0.1);
}

TEST_CASE("vertex_rmse basic") {
    Mesh a = make_grid(2, 2);
    Mesh b = a;
    b.vertices[4].z += 0.3;
    CHECK(vertex_rmse(b, a, {4}) == doctest::Approx(0.3 / std::sqrt(3.0)));
    CHECK(vertex_rmse(b, a, {}) == 0.0);
}
