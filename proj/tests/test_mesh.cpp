#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "patchquilt/errors.hpp"
#include "patchquilt/mesh.hpp"
#include "patchquilt/mesh_io.hpp"
#include "patchquilt/shapes.hpp"

using namespace patchquilt;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/pq_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

// Independent line-oriented OBJ counter, used as a second parser.
std::pair<int, int> count_obj_entities(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    int v = 0, f = 0;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    return {v, f};
}

}  // namespace

TEST_CASE("load single-triangle OBJ") {
    auto path = write_temp("tri.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    Mesh m = load_mesh(path);
    CHECK(m.vertex_count() == 3);
    CHECK(m.face_count() == 1);
    CHECK(m.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("OBJ face index 0 is rejected") {
    auto path = write_temp("bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
    CHECK_THROWS_AS(load_mesh(path), ParseError);
}

TEST_CASE("OBJ out-of-range face index is rejected with line number") {
    auto path = write_temp("oob.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
    try {
        load_mesh(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":4:") != std::string::npos);
    }
}

TEST_CASE("bunny OBJ counts match an independent parse") {
    std::string path = std::string(PATCHQUILT_DATA_DIR) + "/bunny.obj";
    Mesh m = load_mesh(path);
    auto [v, f] = count_obj_entities(path);
    CHECK(m.vertex_count() == v);
    CHECK(m.face_count() == f);
    CHECK(m.vertex_count() > 1000);
}

TEST_CASE("save/load round trip: triangle connectivity identical") {
    Mesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    for (auto fmt : {MeshFormat::OBJ, MeshFormat::PLY}) {
        std::string path = fmt == MeshFormat::OBJ ? "/tmp/pq_rt.obj" : "/tmp/pq_rt.ply";
        save_mesh(m, path, fmt);
        Mesh r = load_mesh(path, fmt);
        CHECK(r.faces == m.faces);
        for (int i = 0; i < 3; ++i) CHECK(norm(r.vertices[i] - m.vertices[i]) == 0);
    }
}

TEST_CASE("save/load round trip on a large mesh stays within 1e-6") {
    Mesh m = make_icosphere(5, 0.9876543);
    save_mesh(m, "/tmp/pq_big.obj");
    Mesh r = load_mesh("/tmp/pq_big.obj");
    REQUIRE(r.vertex_count() == m.vertex_count());
    CHECK(r.faces == m.faces);
    double worst = 0;
    for (int i = 0; i < m.vertex_count(); ++i)
        worst = std::max(worst, norm(r.vertices[i] - m.vertices[i]));
    CHECK(worst < 1e-6);
}

TEST_CASE("validity flags survive a PLY round trip") {
    Mesh m = make_grid(4, 4);
    m.valid.assign(m.vertex_count(), 1);
    m.valid[3] = 0;
    m.valid[7] = 0;
    save_mesh(m, "/tmp/pq_valid.ply");
    Mesh r = load_mesh("/tmp/pq_valid.ply");
    REQUIRE(r.valid.size() == m.valid.size());
    CHECK(r.valid == m.valid);
}

TEST_CASE("polygon faces are fan-triangulated") {
    auto path = write_temp("quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    Mesh m = load_mesh(path);
    CHECK(m.face_count() == 2);
}

TEST_CASE("normalize_unit_cube maps a [-1,1] cube to [0,1]") {
    Mesh m;
    m.vertices = {{-1, -1, -1}, {1, 1, 1}};
    NormalizeRecord rec;
    Mesh n = normalize_unit_cube(m, &rec);
    CHECK(rec.scale == doctest::Approx(0.5));
    CHECK(norm(n.vertices[0] - Vec3{0, 0, 0}) == doctest::Approx(0).epsilon(1e-12));
    CHECK(norm(n.vertices[1] - Vec3{1, 1, 1}) == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("normalize of an already-normalized mesh is the identity record") {
    Mesh m;
    m.vertices = {{0, 0, 0}, {1, 0.5, 0.25}};
    NormalizeRecord rec;
    normalize_unit_cube(m, &rec);
    CHECK(rec.scale == doctest::Approx(1.0));
    CHECK(norm(rec.offset) == doctest::Approx(0.0));
}

TEST_CASE("normalize then inverse record is the identity within 1e-9") {
    Mesh m = make_icosphere(2, 3.7);
    for (auto& v : m.vertices) v += {5, -2, 9};
    NormalizeRecord rec;
    Mesh n = normalize_unit_cube(m, &rec);
    BBox nb = n.bounds();
    CHECK(std::max({nb.extent().x, nb.extent().y, nb.extent().z}) == doctest::Approx(1.0));
    Mesh back = denormalize(n, rec);
    double worst = 0;
    for (int i = 0; i < m.vertex_count(); ++i)
        worst = std::max(worst, norm(back.vertices[i] - m.vertices[i]));
    CHECK(worst < 1e-9);
}

TEST_CASE("normalize bunny: longest axis exactly 1, aspect preserved") {
    Mesh m = load_mesh(std::string(PATCHQUILT_DATA_DIR) + "/bunny.obj");
    BBox before = m.bounds();
    Mesh n = normalize_unit_cube(m);
    BBox after = n.bounds();
    double longest = std::max({after.extent().x, after.extent().y, after.extent().z});
    CHECK(longest == doctest::Approx(1.0).epsilon(1e-12));
    // extent ratios preserved under uniform scale
    double r0 = before.extent().x / before.extent().y;
    double r1 = after.extent().x / after.extent().y;
    CHECK(r0 == doctest::Approx(r1).epsilon(1e-9));
}

TEST_CASE("degenerate bounding box is rejected") {
    Mesh m;
    m.vertices = {{1, 2, 3}, {1, 2, 3}};
    CHECK_THROWS_AS(normalize_unit_cube(m), GeometryError);
}

TEST_CASE("laplacian_smooth with 0 iterations is the identity") {
    Mesh m = make_icosphere(2);
    Mesh s = laplacian_smooth(m, 0);
    CHECK(s.vertices == m.vertices);
}

TEST_CASE("laplacian_smooth keeps a planar grid flat") {
    Mesh m = make_grid(10, 10);
    Mesh s = laplacian_smooth(m, 30);
    REQUIRE(s.faces == m.faces);
    for (const auto& v : s.vertices) CHECK(std::abs(v.z) < 1e-9);
}

TEST_CASE("laplacian_smooth reduces radial noise on a sphere") {
    Mesh clean = make_icosphere(4, 1.0);
    Mesh noisy = clean;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-0.02, 0.02);
    for (auto& v : noisy.vertices) v = normalized(v) * (1.0 + uni(rng));
    auto max_radial_dev = [](const Mesh& m) {
        double worst = 0;
        for (const auto& v : m.vertices) worst = std::max(worst, std::abs(norm(v) - 1.0));
        return worst;
    };
    Mesh s = laplacian_smooth(noisy, 30);
    // shrinkage moves the mean radius inward; compare deviation from the
    // smoothed mesh's own mean radius against the input's noise level
    double mean_r = 0;
    for (const auto& v : s.vertices) mean_r += norm(v);
    mean_r /= s.vertex_count();
    double worst = 0;
    for (const auto& v : s.vertices) worst = std::max(worst, std::abs(norm(v) - mean_r));
    CHECK(worst < max_radial_dev(noisy));
}

TEST_CASE("laplacian_smooth does not grow surface area of a closed mesh") {
    Mesh m = make_icosphere(3, 1.0);
    Mesh s = laplacian_smooth(m, 10);
    CHECK(s.total_area() <= m.total_area() + 1e-12);
}

TEST_CASE("fill_invalid_from_neighbors interpolates missing positions") {
    Mesh m = make_grid(4, 4);
    m.valid.assign(m.vertex_count(), 1);
    m.valid[12] = 0;  // interior vertex
    m.vertices[12] = {100, 100, 100};
    Mesh f = fill_invalid_from_neighbors(m);
    CHECK(std::abs(f.vertices[12].z) < 1e-12);
    CHECK(norm(f.vertices[12]) < 10);
}

TEST_CASE("validate rejects bad meshes") {
    Mesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 3}};
    CHECK_THROWS_AS(m.validate(), GeometryError);
    m.faces = {{0, 1, 1}};
    CHECK_THROWS_AS(m.validate(), GeometryError);
}

TEST_CASE("removed-vertex ground truth round trip") {
    std::vector<RemovedVertex> removed = {{3, {0.5, -1.25, 2.0}}, {9, {1e-9, 0, 42}}};
    save_removed_vertices(removed, "/tmp/pq_removed.txt");
    auto back = load_removed_vertices("/tmp/pq_removed.txt");
    REQUIRE(back.size() == removed.size());
    for (size_t i = 0; i < removed.size(); ++i) {
        CHECK(back[i].index == removed[i].index);
        CHECK(norm(back[i].position - removed[i].position) == 0);
    }
}
