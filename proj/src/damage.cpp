#include "patchquilt/damage.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <queue>
#include <random>

#include "patchquilt/errors.hpp"

namespace patchquilt {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Components of the face graph (faces joined through shared vertices),
// restricted to faces whose vertices are all alive.
int face_component_count(const Mesh& mesh, const std::vector<uint8_t>& vertex_alive) {
    UnionFind uf(mesh.vertex_count());
    std::vector<uint8_t> used(mesh.vertex_count(), 0);
    for (const auto& t : mesh.faces) {
        if (!vertex_alive[t[0]] || !vertex_alive[t[1]] || !vertex_alive[t[2]]) continue;
        uf.unite(t[0], t[1]);
        uf.unite(t[1], t[2]);
        for (int k = 0; k < 3; ++k) used[t[k]] = 1;
    }
    std::vector<int> roots;
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (used[v]) roots.push_back(uf.find(v));
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    return static_cast<int>(roots.size());
}

// Incremental multi-source Dijkstra over the edge graph: relaxes `dist`
// (min geodesic distance to the chosen center set) from a new source.
void relax_from(const Mesh& mesh, const std::vector<std::vector<int>>& adj, int source,
                std::vector<double>& dist) {
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[source] = 0;
    pq.push({0, source});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        for (int u : adj[v]) {
            double nd = d + norm(mesh.vertices[u] - mesh.vertices[v]);
            if (nd < dist[u]) {
                dist[u] = nd;
                pq.push({nd, u});
            }
        }
    }
}

}  // namespace

PunchResult punch_holes(const Mesh& mesh, double hole_diameter, double spacing, uint64_t seed) {
    if (spacing <= hole_diameter) throw GeometryError("hole spacing must exceed hole diameter");
    mesh.validate();
    auto adj = mesh.vertex_adjacency();

    // farthest-point sampling of hole centers with min spacing
    std::mt19937_64 rng(seed);
    int start = static_cast<int>(rng() % static_cast<uint64_t>(mesh.vertex_count()));
    std::vector<double> dist(mesh.vertex_count(), 1e300);
    std::vector<int> centers{start};
    relax_from(mesh, adj, start, dist);
    while (true) {
        int best = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        if (dist[best] < spacing) break;
        centers.push_back(best);
        relax_from(mesh, adj, best, dist);
    }
    std::sort(centers.begin(), centers.end());

    std::vector<uint8_t> alive(mesh.vertex_count(), 1);
    int base_components = face_component_count(mesh, alive);
    double radius = hole_diameter / 2;

    PunchResult result;
    for (int c : centers) {
        std::vector<int> to_remove;
        for (int v = 0; v < mesh.vertex_count(); ++v)
            if (alive[v] && norm(mesh.vertices[v] - mesh.vertices[c]) <= radius)
                to_remove.push_back(v);
        if (to_remove.empty()) continue;
        for (int v : to_remove) alive[v] = 0;
        if (face_component_count(mesh, alive) > base_components) {
            for (int v : to_remove) alive[v] = 1;
            std::cerr << "warning: skipping hole at vertex " << c
                      << " (would disconnect the mesh)\n";
            continue;
        }
        result.centers.push_back(mesh.vertices[c]);
        for (int v : to_remove) result.removed.push_back({v, mesh.vertices[v]});
    }
    std::sort(result.removed.begin(), result.removed.end(),
              [](const RemovedVertex& a, const RemovedVertex& b) { return a.index < b.index; });

    std::vector<int> remap(mesh.vertex_count(), -1);
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (alive[v]) {
            remap[v] = result.damaged.vertex_count();
            result.damaged.vertices.push_back(mesh.vertices[v]);
        }
    for (const auto& t : mesh.faces)
        if (alive[t[0]] && alive[t[1]] && alive[t[2]])
            result.damaged.faces.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    return result;
}

Mesh mark_missing_vertices(const Mesh& mesh, double ratio, uint64_t seed) {
    if (ratio < 0 || ratio >= 1) throw GeometryError("missing ratio must be in [0,1)");
    Mesh out = mesh;
    out.valid.assign(mesh.vertex_count(), 1);
    int count = static_cast<int>(std::lround(ratio * mesh.vertex_count()));
    std::vector<int> order(mesh.vertex_count());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < count; ++i) out.valid[order[i]] = 0;
    return out;
}

}  // namespace patchquilt
