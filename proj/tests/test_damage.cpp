#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "patchquilt/damage.hpp"
#include "patchquilt/errors.hpp"
#include "patchquilt/shapes.hpp"

using namespace patchquilt;

namespace {

// Boundary-loop oracle: counts closed cycles among boundary edges and checks
// every boundary vertex has degree 2.
int boundary_loop_count(const Mesh& mesh) {
    auto edges = mesh.boundary_edges();
    std::map<int, std::vector<int>> adj;
    for (const auto& e : edges) {
        adj[e[0]].push_back(e[1]);
        adj[e[1]].push_back(e[0]);
    }
    for (const auto& [v, nb] : adj) REQUIRE(nb.size() == 2);
    std::set<int> seen;
    int loops = 0;
    for (const auto& [v, nb] : adj) {
        if (seen.count(v)) continue;
        ++loops;
        int cur = v, prev = -1;
        while (!seen.count(cur)) {
            seen.insert(cur);
            int next = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
            prev = cur;
            cur = next;
        }
    }
    return loops;
}

}  // namespace

TEST_CASE("spacing larger than the mesh diameter gives exactly one hole") {
    Mesh sphere = make_icosphere(3, 0.5);
    auto res = punch_holes(sphere, 0.1, 100.0, 3);
    CHECK(res.centers.size() == 1);
    CHECK(!res.removed.empty());
}

TEST_CASE("tiny holes remove at most one vertex each") {
    Mesh sphere = make_icosphere(4, 1.0);
    // min edge length at subdiv 4 is ~0.07; hole radius below half of that
    auto res = punch_holes(sphere, 0.03, 0.8, 1);
    CHECK(res.removed.size() == res.centers.size());
}

TEST_CASE("hole boundaries form single closed cycles on a sphere") {
    Mesh sphere = make_icosphere(5, 1.0);
    auto res = punch_holes(sphere, 0.05 * 2, 0.6, 7);
    REQUIRE(res.centers.size() >= 2);
    CHECK(boundary_loop_count(res.damaged) == static_cast<int>(res.centers.size()));
}

TEST_CASE("ground truth lists removed vertices with original positions") {
    Mesh sphere = make_icosphere(3, 1.0);
    auto res = punch_holes(sphere, 0.3, 10.0, 0);
    for (const auto& r : res.removed) {
        CHECK(norm(r.position - sphere.vertices[r.index]) == 0);
        CHECK(norm(r.position - res.centers[0]) <= 0.15 + 1e-12);
    }
    CHECK(res.damaged.vertex_count() + static_cast<int>(res.removed.size()) ==
          sphere.vertex_count());
}

TEST_CASE("punch rejects spacing <= diameter") {
    Mesh sphere = make_icosphere(2, 1.0);
    CHECK_THROWS_AS(punch_holes(sphere, 0.2, 0.2, 0), GeometryError);
}

TEST_CASE("mark_missing_vertices flags the exact count") {
    Mesh m = make_icosphere(3, 1.0);  // 642 vertices
    Mesh r0 = mark_missing_vertices(m, 0.0, 5);
    CHECK(r0.all_valid());
    Mesh r5 = mark_missing_vertices(m, 0.5, 5);
    int invalid = 0;
    for (auto f : r5.valid)
        if (!f) ++invalid;
    CHECK(invalid == 321);
    CHECK(r5.faces == m.faces);
}

TEST_CASE("mark_missing_vertices is deterministic per seed") {
    Mesh m = make_icosphere(2, 1.0);
    CHECK(mark_missing_vertices(m, 0.2, 9).valid == mark_missing_vertices(m, 0.2, 9).valid);
    CHECK(mark_missing_vertices(m, 0.2, 9).valid != mark_missing_vertices(m, 0.2, 10).valid);
}
