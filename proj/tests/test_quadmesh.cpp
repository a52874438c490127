#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "patchquilt/errors.hpp"
#include "patchquilt/quadmesh.hpp"

using namespace patchquilt;

namespace {

// nx x ny planar quad grid with spacing h in z=0
QuadMesh grid_quads(int nx, int ny, double h = 1.0) {
    QuadMesh qm;
    for (int y = 0; y <= ny; ++y)
        for (int x = 0; x <= nx; ++x) qm.vertices.push_back({x * h, y * h, 0});
    auto id = [&](int x, int y) { return y * (nx + 1) + x; };
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
            qm.quads.push_back({id(x, y), id(x + 1, y), id(x + 1, y + 1), id(x, y + 1)});
    return qm;
}

std::string temp_path(const std::string& name) {
    return std::string("/tmp/pq_quadmesh_") + name;
}

}  // namespace

TEST_CASE("quad centroid, normal and edge length on a unit quad") {
    QuadMesh qm = grid_quads(1, 1);
    Vec3 c = qm.quad_centroid(0);
    CHECK(norm(c - Vec3{0.5, 0.5, 0}) == doctest::Approx(0).epsilon(1e-15));
    Vec3 n = qm.quad_normal(0);
    CHECK(n.z == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(qm.quad_edge_length(0) == doctest::Approx(1.0));
    CHECK(qm.average_edge_length() == doctest::Approx(1.0));
}

TEST_CASE("adjacency counts on a 3x3 grid") {
    QuadMesh qm = grid_quads(3, 3);
    auto adj = qm.adjacency();
    REQUIRE(adj.size() == 9);
    CHECK(adj[4].size() == 4);  // center quad
    CHECK(adj[0].size() == 2);  // corner
    CHECK(adj[1].size() == 3);  // edge
    for (size_t q = 0; q < adj.size(); ++q)
        CHECK(std::is_sorted(adj[q].begin(), adj[q].end()));
}

TEST_CASE("validate accepts a planar grid and enforces the requested length") {
    QuadMesh qm = grid_quads(4, 4, 0.25);
    qm.validate();
    qm.validate(0.25);
    CHECK_THROWS_AS(qm.validate(1.0), GeometryError);
}

TEST_CASE("validate rejects structural violations") {
    SUBCASE("index out of range") {
        QuadMesh qm = grid_quads(1, 1);
        qm.quads[0][2] = 99;
        CHECK_THROWS_AS(qm.validate(), GeometryError);
    }
    SUBCASE("repeated vertex in a quad") {
        QuadMesh qm = grid_quads(1, 1);
        qm.quads[0][3] = qm.quads[0][0];
        CHECK_THROWS_AS(qm.validate(), GeometryError);
    }
    SUBCASE("non-planar quad") {
        QuadMesh qm = grid_quads(1, 1);
        // saddle: opposite corners raised, plane deviation h/2 vs mean edge
        // sqrt(1+h^2) -- violates the 0.25x bound for h = 1
        qm.vertices[0].z = 1.0;
        qm.vertices[3].z = 1.0;
        CHECK_THROWS_AS(qm.validate(), GeometryError);
    }
    SUBCASE("edge shared by three quads") {
        QuadMesh qm = grid_quads(1, 1);
        qm.vertices.push_back({0, 0, 1});
        qm.vertices.push_back({1, 0, 1});
        qm.vertices.push_back({0, 0, -1});
        qm.vertices.push_back({1, 0, -1});
        qm.quads.push_back({0, 1, 5, 4});
        qm.quads.push_back({0, 1, 7, 6});
        CHECK_THROWS_AS(qm.validate(), GeometryError);
    }
}

TEST_CASE("import/export round trip") {
    QuadMesh qm = grid_quads(3, 2, 0.5);
    std::string path = temp_path("roundtrip.obj");
    export_quad_mesh(qm, path);
    QuadMesh back = import_quad_mesh(path);
    REQUIRE(back.vertex_count() == qm.vertex_count());
    REQUIRE(back.quad_count() == qm.quad_count());
    for (int v = 0; v < qm.vertex_count(); ++v)
        CHECK(norm(back.vertices[v] - qm.vertices[v]) == doctest::Approx(0).epsilon(1e-15));
    for (int q = 0; q < qm.quad_count(); ++q) CHECK(back.quads[q] == qm.quads[q]);
    std::remove(path.c_str());
}

TEST_CASE("import rejects triangle faces naming the face") {
    std::string path = temp_path("tri.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    }
    CHECK_THROWS_WITH_AS(import_quad_mesh(path),
                         doctest::Contains("face 0"), GeometryError);
    std::remove(path.c_str());
}

TEST_CASE("subdivision of a single unit quad") {
    QuadMesh qm = grid_quads(1, 1);
    Mesh m = subdivide_quad_mesh(qm, 1);
    CHECK(m.vertex_count() == 9);
    CHECK(m.face_count() == 8);
    CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-12));
    for (const Vec3& v : m.vertices) CHECK(v.z == doctest::Approx(0).epsilon(1e-15));
    m.validate();
}

TEST_CASE("subdivision merges shared edge vertices across quads") {
    QuadMesh qm = grid_quads(2, 1);
    Mesh m = subdivide_quad_mesh(qm, 2);
    // two quads at level 2: 25 vertices each, 5 shared on the common edge
    CHECK(m.vertex_count() == 45);
    CHECK(m.face_count() == 2 * 32);
    CHECK(m.is_closed() == false);
    CHECK(m.non_manifold_edges().empty());
    CHECK(m.total_area() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("subdivision interior points are bilinear") {
    QuadMesh qm;
    qm.vertices = {{0, 0, 0}, {2, 0, 0}, {2, 2, 0.2}, {0, 2, 0.2}};
    qm.quads.push_back({0, 1, 2, 3});
    Mesh m = subdivide_quad_mesh(qm, 3);
    for (const Vec3& v : m.vertices) {
        double u = v.x / 2.0;
        (void)u;
        // bilinear over this quad: z = 0.2 * (y/2)
        CHECK(v.z == doctest::Approx(0.2 * v.y / 2.0).epsilon(1e-12));
    }
}
