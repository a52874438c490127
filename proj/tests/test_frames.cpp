#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "patchquilt/bvh.hpp"
#include "patchquilt/errors.hpp"
#include "patchquilt/frames.hpp"
#include "patchquilt/quadmesh.hpp"
#include "patchquilt/shapes.hpp"

using namespace patchquilt;

namespace {

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

}  // namespace

TEST_CASE("frame of a unit quad: origin, axes, rigidity") {
    QuadMesh qm = grid_quads(1, 1);
    auto frames = quad_frames(qm);
    REQUIRE(frames.size() == 1);
    const ReferenceFrame& f = frames[0];
    CHECK(norm(f.origin - Vec3{0.5, 0.5, 0}) == doctest::Approx(0).epsilon(1e-15));
    CHECK(std::abs(f.rotation.row(2).z) == doctest::Approx(1.0).epsilon(1e-12));
    // X spans midpoint(v1,v2) - midpoint(v3,v0) = (1,0.5) - (0,0.5)
    CHECK(norm(f.rotation.row(0) - Vec3{1, 0, 0}) == doctest::Approx(0).epsilon(1e-12));
    CHECK(f.is_rigid());
    Vec3 y_expected = cross(f.rotation.row(2), f.rotation.row(0));
    CHECK(norm(f.rotation.row(1) - y_expected) == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("to_local and to_global invert each other") {
    QuadMesh qm = grid_quads(2, 2, 0.5);
    auto frames = quad_frames(qm);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1, 1);
    for (const auto& f : frames)
        for (int i = 0; i < 20; ++i) {
            Vec3 p{uni(rng), uni(rng), uni(rng)};
            CHECK(norm(f.to_global(f.to_local(p)) - p) < 1e-12);
        }
}

TEST_CASE("traversal aligns X axes across a grid despite rotated quad windings") {
    QuadMesh qm = grid_quads(5, 5);
    // rotate vertex order of some quads; frames before alignment then differ
    std::mt19937_64 rng(11);
    for (auto& q : qm.quads) {
        int shift = int(rng() % 4);
        std::array<int, 4> rot;
        for (int i = 0; i < 4; ++i) rot[i] = q[(i + shift) % 4];
        q = rot;
    }
    auto frames = quad_frames(qm);
    auto adj = qm.adjacency();
    for (int q = 0; q < qm.quad_count(); ++q)
        for (int nb : adj[q]) {
            double d = dot(frames[q].rotation.row(0), frames[nb].rotation.row(0));
            CHECK(d > std::cos(3.14159265 / 4));  // within the 4-fold sector
        }
}

TEST_CASE("frame computation is deterministic") {
    Mesh sphere = make_icosphere(3, 1.0);
    QuadMesh qm = grid_quads(4, 4);
    auto a = quad_frames(qm);
    auto b = quad_frames(qm);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(norm(a[i].origin - b[i].origin) == 0);
        for (int r = 0; r < 3; ++r) CHECK(norm(a[i].rotation.row(r) - b[i].rotation.row(r)) == 0);
    }
    (void)sphere;
}

TEST_CASE("seed layout for overlap level 1") {
    QuadMesh qm = grid_quads(2, 2);
    auto frames = quad_frames(qm);
    SeedSet seeds = seed_points_with_offsets(qm, frames, 1);
    REQUIRE(seeds.size() == size_t(5 * qm.quad_count()));
    for (int q = 0; q < qm.quad_count(); ++q) {
        const Seed& center = seeds[q * 5];
        CHECK(center.offset_id == 0);
        CHECK(center.source_quad == q);
        CHECK(norm(center.point - frames[q].origin) == 0);
        // offsets at (1/2) * (edge/2) along the frame axes
        double step = qm.quad_edge_length(q) / 2 / 2;
        for (int o = 1; o <= 4; ++o) {
            const Seed& s = seeds[q * 5 + o];
            CHECK(s.offset_id == o);
            CHECK(norm(s.point - frames[q].origin) == doctest::Approx(step).epsilon(1e-12));
            CHECK(norm(s.frame.rotation.row(0) - frames[q].rotation.row(0)) == 0);
        }
    }
}

TEST_CASE("overlap level 0 yields only center seeds") {
    QuadMesh qm = grid_quads(3, 1);
    auto frames = quad_frames(qm);
    SeedSet seeds = seed_points_with_offsets(qm, frames, 0);
    CHECK(seeds.size() == size_t(qm.quad_count()));
    CHECK_THROWS_AS(seed_points_with_offsets(qm, frames, -1), GeometryError);
}

TEST_CASE("offset seeds project onto the given surface") {
    QuadMesh qm = grid_quads(2, 2);
    auto frames = quad_frames(qm);
    // project onto a plane lifted to z = 0.1
    Mesh plane = make_grid(8, 8, 4.0, 4.0);
    for (auto& v : plane.vertices) v.z = 0.1;
    TriangleBvh bvh(plane);
    SeedSet seeds = seed_points_with_offsets(qm, frames, 1, &bvh);
    for (const Seed& s : seeds)
        if (s.offset_id != 0) CHECK(s.point.z == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("frame export writes one line per frame") {
    QuadMesh qm = grid_quads(2, 3);
    auto frames = quad_frames(qm);
    std::string path = "/tmp/pq_frames.txt";
    export_frames(frames, path);
    std::ifstream in(path);
    int lines = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == qm.quad_count());
    std::remove(path.c_str());
}
