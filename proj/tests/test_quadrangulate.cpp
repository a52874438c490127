#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "patchquilt/errors.hpp"
#include "patchquilt/mesh_io.hpp"
#include "patchquilt/quadrangulate.hpp"
#include "patchquilt/resample.hpp"
#include "patchquilt/shapes.hpp"

using namespace patchquilt;

namespace {

// fraction of mesh vertices within `radius` of some quad centroid
double coverage(const Mesh& mesh, const QuadMesh& qm, double radius) {
    std::vector<Vec3> centroids(qm.quad_count());
    for (int q = 0; q < qm.quad_count(); ++q) centroids[q] = qm.quad_centroid(q);
    int covered = 0;
    for (const Vec3& v : mesh.vertices) {
        double best = 1e9;
        for (const Vec3& c : centroids) best = std::min(best, norm(v - c));
        if (best <= radius) ++covered;
    }
    return double(covered) / mesh.vertex_count();
}

}  // namespace

TEST_CASE("plane quadrangulation hits the requested scale") {
    Mesh plane = make_grid(40, 40);
    const double L = 0.1;
    QuadMesh qm = quadrangulate(plane, L);
    qm.validate(L);
    CHECK(qm.quad_count() > 50);
    CHECK(qm.quad_count() < 160);
    CHECK(coverage(plane, qm, 1.5 * L) > 0.95);
    for (int q = 0; q < qm.quad_count(); ++q)
        for (int i : qm.quads[q]) CHECK(std::abs(qm.vertices[i].z) < 1e-6);
}

TEST_CASE("quadrangulation is deterministic") {
    Mesh sphere = make_icosphere(3, 0.4);
    QuadMesh a = quadrangulate(sphere, 0.12);
    QuadMesh b = quadrangulate(sphere, 0.12);
    REQUIRE(a.quad_count() == b.quad_count());
    REQUIRE(a.vertex_count() == b.vertex_count());
    for (int v = 0; v < a.vertex_count(); ++v) CHECK(norm(a.vertices[v] - b.vertices[v]) == 0);
    for (int q = 0; q < a.quad_count(); ++q) CHECK(a.quads[q] == b.quads[q]);
}

TEST_CASE("sphere quadrangulation: scale, coverage, surface fit") {
    Mesh sphere = make_icosphere(4, 0.4);
    const double L = 0.1;
    QuadMesh qm = quadrangulate(sphere, L);
    qm.validate(L);
    // area 4*pi*0.16 ~ 2.0 -> about 200 quads
    CHECK(qm.quad_count() > 100);
    CHECK(qm.quad_count() < 350);
    CHECK(coverage(sphere, qm, 1.5 * L) > 0.9);
    double worst = 0;
    for (const Vec3& v : qm.vertices) worst = std::max(worst, std::abs(norm(v) - 0.4));
    CHECK(worst < 0.02);
}

TEST_CASE("cube surface quadrangulates") {
    Mesh cube = make_cube_surface(30);
    const double L = 0.15;
    QuadMesh qm = quadrangulate(cube, L);
    qm.validate(L);
    CHECK(qm.quad_count() > 100);
    CHECK(coverage(cube, qm, 2.0 * L) > 0.85);
}

TEST_CASE("bunny quadrangulates after normalization") {
    Mesh bunny = load_mesh(std::string(PATCHQUILT_DATA_DIR) + "/bunny.obj");
    bunny = normalize_unit_cube(bunny);
    bunny = resample_to_resolution(bunny, 15000);
    const double L = 0.05;
    QuadMesh qm = quadrangulate(bunny, L);
    qm.validate(L);
    CHECK(coverage(bunny, qm, 2.0 * L) > 0.85);
}

TEST_CASE("invalid inputs are rejected") {
    Mesh plane = make_grid(10, 10);
    CHECK_THROWS_AS(quadrangulate(plane, 0.0), GeometryError);
    CHECK_THROWS_AS(quadrangulate(plane, -1.0), GeometryError);
    CHECK_THROWS_AS(quadrangulate(plane, 10.0), GeometryError);  // above diag/4

    Mesh bad = make_grid(4, 4);
    bad.faces.push_back(bad.faces.front());  // edge used three times
    CHECK_THROWS_AS(quadrangulate(bad, 0.2), GeometryError);
}
