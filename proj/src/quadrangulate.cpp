#include "patchquilt/quadrangulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "patchquilt/bvh.hpp"
#include "patchquilt/errors.hpp"

namespace patchquilt {

namespace {

Vec3 project_tangent(const Vec3& v, const Vec3& n) { return v - n * dot(v, n); }

// Representative of u's 4-RoSy orientation closest to `ref`.
Vec3 compat_orientation(const Vec3& o_u, const Vec3& n_u, const Vec3& ref) {
    Vec3 t = cross(n_u, o_u);
    Vec3 best = o_u;
    double best_dot = dot(ref, o_u);
    for (const Vec3& cand : {t, -o_u, -t}) {
        double d = dot(ref, cand);
        if (d > best_dot) {
            best_dot = d;
            best = cand;
        }
    }
    return best;
}

// Deterministic tangent fallback: global axis least aligned with the normal.
Vec3 fallback_tangent(const Vec3& n) {
    Vec3 axis = std::abs(n.x) <= std::abs(n.y) && std::abs(n.x) <= std::abs(n.z)
                    ? Vec3{1, 0, 0}
                    : (std::abs(n.y) <= std::abs(n.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
    return normalized(project_tangent(axis, n));
}

// Principal curvature direction from a least-squares fit of the shape
// operator over the one-ring; falls back when the vertex is umbilic.
Vec3 curvature_direction(const Mesh& mesh, const std::vector<Vec3>& normals,
                         const std::vector<std::vector<int>>& adj, int v) {
    const Vec3& n = normals[v];
    Vec3 e1 = fallback_tangent(n);
    Vec3 e2 = cross(n, e1);
    // normal equations for symmetric S = [a b; b c]
    double A[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    for (int u : adj[v]) {
        Vec3 d = mesh.vertices[u] - mesh.vertices[v];
        Vec3 dn = normals[u] - normals[v];
        double w1 = dot(d, e1), w2 = dot(d, e2);
        double g1 = dot(dn, e1), g2 = dot(dn, e2);
        // row (w1, w2, 0) -> g1 ; row (0, w1, w2) -> g2
        A[0][0] += w1 * w1;
        A[0][1] += w1 * w2;
        A[1][1] += w2 * w2 + w1 * w1;
        A[1][2] += w1 * w2;
        A[2][2] += w2 * w2;
        rhs[0] += w1 * g1;
        rhs[1] += w2 * g1 + w1 * g2;
        rhs[2] += w2 * g2;
    }
    A[1][0] = A[0][1];
    A[2][1] = A[1][2];
    A[0][2] = A[2][0] = 0;
    // solve 3x3 via Cramer
    Mat3 M;
    M.m = {A[0][0], A[0][1], A[0][2], A[1][0], A[1][1], A[1][2], A[2][0], A[2][1], A[2][2]};
    double det = M.det();
    if (std::abs(det) < 1e-14) return fallback_tangent(n);
    auto col_solve = [&](int c) {
        Mat3 T = M;
        for (int r = 0; r < 3; ++r) T(r, c) = rhs[r];
        return T.det() / det;
    };
    double a = col_solve(0), b = col_solve(1), c = col_solve(2);
    // eigenvector of [a b; b c] for the eigenvalue of largest magnitude
    double tr = a + c, diff = a - c;
    double disc = std::sqrt(diff * diff + 4 * b * b);
    double l1 = (tr + disc) / 2, l2 = (tr - disc) / 2;
    double lead = std::abs(l1) >= std::abs(l2) ? l1 : l2;
    if (disc < 0.05 * std::max(1e-12, std::abs(lead))) return fallback_tangent(n);  // umbilic
    double ex, ey;
    if (std::abs(b) > 1e-14) {
        ex = lead - c;
        ey = b;
    } else if (std::abs(a - lead) < std::abs(c - lead)) {
        ex = 1;
        ey = 0;
    } else {
        ex = 0;
        ey = 1;
    }
    Vec3 dir = e1 * ex + e2 * ey;
    double len = norm(dir);
    return len > 0 ? dir / len : fallback_tangent(n);
}

// Spatial hash over lattice nodes for merge queries.
class NodeGrid {
public:
    explicit NodeGrid(double cell) : cell_(cell) {}

    void insert(int id, const Vec3& p) {
        grid_[key(p)].push_back(id);
    }

    template <class Positions>
    int nearest_within(const Vec3& p, double radius, const Positions& pos) const {
        int kx = coord(p.x), ky = coord(p.y), kz = coord(p.z);
        int best = -1;
        double best_d = radius;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = grid_.find(pack(kx + dx, ky + dy, kz + dz));
                    if (it == grid_.end()) continue;
                    for (int id : it->second) {
                        double d = norm(pos[id] - p);
                        if (d < best_d || (d == best_d && best >= 0 && id < best)) {
                            best_d = d;
                            best = id;
                        }
                    }
                }
        return best;
    }

private:
    int coord(double x) const { return static_cast<int>(std::floor(x / cell_)); }
    int64_t pack(int x, int y, int z) const {
        auto u = [](int v) { return static_cast<int64_t>(v + (1 << 20)) & ((1 << 21) - 1); };
        return (u(x) << 42) | (u(y) << 21) | u(z);
    }
    int64_t key(const Vec3& p) const { return pack(coord(p.x), coord(p.y), coord(p.z)); }

    double cell_;
    std::unordered_map<int64_t, std::vector<int>> grid_;
};

}  // namespace

QuadMesh quadrangulate(const Mesh& proxy, double target_quad_length,
                       const QuadrangulateOptions& options) {
    proxy.validate();
    if (target_quad_length <= 0 || target_quad_length >= proxy.bounds().diagonal() / 4)
        throw GeometryError("target quad length must be in (0, bbox diagonal / 4)");
    if (!proxy.non_manifold_edges().empty())
        throw GeometryError("quadrangulation requires an edge-manifold proxy");

    const double L = target_quad_length;
    const int n = proxy.vertex_count();
    auto adj = proxy.vertex_adjacency();
    auto normals = proxy.vertex_normals();

    // ---- orientation field ----
    std::vector<Vec3> orient(n);
    for (int v = 0; v < n; ++v) {
        orient[v] = curvature_direction(proxy, normals, adj, v);
        if (norm(orient[v]) == 0) orient[v] = fallback_tangent(normals[v]);
    }
    double change = 0;
    for (int it = 0; it < options.orientation_iterations; ++it) {
        change = 0;
        for (int v = 0; v < n; ++v) {
            Vec3 acc = orient[v];
            for (int u : adj[v]) acc += compat_orientation(orient[u], normals[u], orient[v]);
            Vec3 next = normalized(project_tangent(acc, normals[v]));
            if (norm(next) == 0) next = orient[v];
            change += norm(next - compat_orientation(orient[v], normals[v], next));
            orient[v] = next;
        }
        change /= n;
        if (change < options.convergence_tol) break;
    }
    if (change > options.divergence_tol)
        throw GeometryError("orientation field failed to converge (residual " +
                            std::to_string(change) + ")");

    // ---- lattice growth over the surface ----
    // Nodes are placed on the surface roughly L apart by walking the four
    // field directions from each frontier node and projecting back with the
    // BVH; candidates landing near an existing node merge into it, which
    // knits fronts together where they meet.
    TriangleBvh bvh(proxy);

    // surface probe: interpolated normal + field orientation at a point
    auto probe = [&](const Vec3& p, Vec3& out_point, Vec3& out_normal, Vec3& out_orient) {
        ClosestHit hit = bvh.closest(p);
        const auto& f = proxy.faces[hit.face];
        const Vec3 &a = proxy.vertices[f[0]], &b = proxy.vertices[f[1]],
                   &c = proxy.vertices[f[2]];
        // barycentric coordinates of the hit point
        Vec3 v0 = b - a, v1 = c - a, v2 = hit.point - a;
        double d00 = dot(v0, v0), d01 = dot(v0, v1), d11 = dot(v1, v1);
        double d20 = dot(v2, v0), d21 = dot(v2, v1);
        double denom = d00 * d11 - d01 * d01;
        double bv = 0, bw = 0;
        if (std::abs(denom) > 1e-30) {
            bv = (d11 * d20 - d01 * d21) / denom;
            bw = (d00 * d21 - d01 * d20) / denom;
        }
        double bu = 1 - bv - bw;
        Vec3 nrm = normals[f[0]] * bu + normals[f[1]] * bv + normals[f[2]] * bw;
        double len = norm(nrm);
        nrm = len > 0 ? nrm / len : proxy.face_normal(hit.face);
        int lead = bu >= bv && bu >= bw ? f[0] : (bv >= bw ? f[1] : f[2]);
        Vec3 o = normalized(project_tangent(orient[lead], nrm));
        if (norm(o) == 0) o = fallback_tangent(nrm);
        out_point = hit.point;
        out_normal = nrm;
        out_orient = o;
    };

    std::vector<Vec3> node_pos, node_normal, node_orient;
    std::vector<std::set<int>> links;
    NodeGrid grid(L);
    // Fronts meeting with a half-cell phase offset leave duplicates ~0.7L
    // apart; anything under the legitimate ~1.0L neighbor spacing may merge.
    const double merge_radius = 0.7 * L;
    const size_t node_budget =
        static_cast<size_t>(6.0 * proxy.total_area() / (L * L)) + 256;

    auto add_node = [&](const Vec3& p, const Vec3& nrm, const Vec3& o) {
        int id = static_cast<int>(node_pos.size());
        node_pos.push_back(p);
        node_normal.push_back(nrm);
        node_orient.push_back(o);
        links.emplace_back();
        grid.insert(id, p);
        return id;
    };

    {
        Vec3 p, nrm, o;
        probe(proxy.vertices[0], p, nrm, o);
        add_node(p, nrm, o);
    }
    std::queue<int> frontier;
    frontier.push(0);
    while (!frontier.empty() && node_pos.size() < node_budget) {
        int cur = frontier.front();
        frontier.pop();
        Vec3 o = node_orient[cur];
        Vec3 o2 = cross(node_normal[cur], o);
        for (const Vec3& dir : {o, o2, -o, -o2}) {
            Vec3 p, nrm, field;
            probe(node_pos[cur] + dir * L, p, nrm, field);
            double step = norm(p - node_pos[cur]);
            if (step < 0.55 * L || step > 1.45 * L) continue;
            // refuse jumps to a back-facing sheet (thin features)
            if (dot(nrm, node_normal[cur]) < 0.3) continue;
            int hitnode = grid.nearest_within(p, merge_radius, node_pos);
            if (hitnode < 0) {
                Vec3 aligned = compat_orientation(field, nrm, dir);
                hitnode = add_node(p, nrm, aligned);
                frontier.push(hitnode);
            }
            if (hitnode == cur) continue;
            double d = norm(node_pos[hitnode] - node_pos[cur]);
            if (d < 0.55 * L || d > 1.45 * L) continue;
            links[cur].insert(hitnode);
            links[hitnode].insert(cur);
        }
    }

    // ---- stitch: where fronts met, lattice-adjacent nodes often ended up
    //      unlinked; connect pairs whose step direction both frames read as
    //      one of their four axes ----
    auto stitch = [&] {
        const double cos_axis = std::cos(30.0 * M_PI / 180.0);
        auto axis_aligned = [&](int node, const Vec3& step) {
            Vec3 d = normalized(project_tangent(step, node_normal[node]));
            if (norm(d) == 0) return false;
            const Vec3& o = node_orient[node];
            Vec3 o2 = cross(node_normal[node], o);
            return std::max(std::abs(dot(d, o)), std::abs(dot(d, o2))) > cos_axis;
        };
        for (int a = 0; a < static_cast<int>(node_pos.size()); ++a) {
            for (int b = a + 1; b < static_cast<int>(node_pos.size()); ++b) {
                if (links[a].count(b)) continue;
                Vec3 step = node_pos[b] - node_pos[a];
                double d = norm(step);
                if (d < 0.55 * L || d > 1.35 * L) continue;
                if (dot(node_normal[a], node_normal[b]) < 0.3) continue;
                if (!axis_aligned(a, step) || !axis_aligned(b, step)) continue;
                links[a].insert(b);
                links[b].insert(a);
            }
        }
    };
    stitch();

    // ---- relax: growth accumulates curvature misfit far from the seed;
    //      spring iterations with rest length L (reprojected onto the
    //      surface) spread it out so seam cells can close ----
    for (int it = 0; it < 15; ++it) {
        std::vector<Vec3> next = node_pos;
        for (size_t i = 0; i < node_pos.size(); ++i) {
            if (links[i].empty()) continue;
            Vec3 acc{0, 0, 0};
            for (int j : links[i]) {
                Vec3 away = node_pos[i] - node_pos[j];
                double d = norm(away);
                acc += node_pos[j] + (d > 0 ? away * (L / d) : away);
            }
            Vec3 p, nrm, field;
            probe(acc / double(links[i].size()), p, nrm, field);
            next[i] = p;
            node_normal[i] = nrm;
            node_orient[i] = compat_orientation(field, nrm, node_orient[i]);
        }
        node_pos.swap(next);
    }
    // ---- close cells by parallelogram completion: each node matches its
    //      four frame directions to nearby nodes, and a corner pair (b, c)
    //      plus the node nearest to pos[b] + pos[c] - pos[a] closes a cell.
    //      This needs no link bookkeeping, so seams close wherever the node
    //      cloud supports a cell ----
    NodeGrid relaxed_grid(L);
    for (size_t i = 0; i < node_pos.size(); ++i)
        relaxed_grid.insert(static_cast<int>(i), node_pos[i]);

    // ---- fill gaps: slivers where fronts met can be left with no node at
    //      all; probe each unclaimed lattice site and seed a node there ----
    const size_t grown = node_pos.size();
    for (size_t a = 0; a < grown; ++a) {
        Vec3 o = node_orient[a];
        Vec3 o2 = cross(node_normal[a], o);
        for (const Vec3& dir : {o, o2, -o, -o2}) {
            Vec3 p, nrm, field;
            probe(node_pos[a] + dir * L, p, nrm, field);
            if (dot(nrm, node_normal[a]) < 0.3) continue;
            double step = norm(p - node_pos[a]);
            if (step < 0.55 * L || step > 1.45 * L) continue;
            if (relaxed_grid.nearest_within(p, 0.65 * L, node_pos) >= 0) continue;
            Vec3 aligned = compat_orientation(field, nrm, dir);
            relaxed_grid.insert(add_node(p, nrm, aligned), p);
        }
    }

    const size_t node_count = node_pos.size();
    const double match_radius = 0.6 * L;
    std::set<std::array<int, 4>> found;
    for (int a = 0; a < static_cast<int>(node_count); ++a) {
        Vec3 o = node_orient[a];
        Vec3 o2 = cross(node_normal[a], o);
        int nb[4];
        const Vec3 dirs[4] = {o, o2, -o, -o2};
        for (int k = 0; k < 4; ++k)
            nb[k] = relaxed_grid.nearest_within(node_pos[a] + dirs[k] * L, match_radius,
                                                node_pos);
        for (int k = 0; k < 4; ++k) {
            int b = nb[k], c = nb[(k + 1) % 4];
            if (b < 0 || c < 0 || b == a || c == a || b == c) continue;
            Vec3 expected = node_pos[b] + node_pos[c] - node_pos[a];
            int d = relaxed_grid.nearest_within(expected, match_radius, node_pos);
            if (d < 0 || d == a || d == b || d == c) continue;
            int cycle[4] = {a, b, d, c};
            // consistent outward winding from the node normals
            Vec3 avg_n =
                node_normal[a] + node_normal[b] + node_normal[c] + node_normal[d];
            if (dot(cross(node_pos[b] - node_pos[a], node_pos[c] - node_pos[a]), avg_n) < 0)
                std::swap(cycle[1], cycle[3]);
            int lo = 0;
            for (int j = 1; j < 4; ++j)
                if (cycle[j] < cycle[lo]) lo = j;
            found.insert(
                {cycle[lo], cycle[(lo + 1) % 4], cycle[(lo + 2) % 4], cycle[(lo + 3) % 4]});
        }
    }

    // ---- assemble, dropping quads that break edge-manifoldness ----
    QuadMesh qm;
    std::map<std::array<int, 2>, int> edge_use;
    std::set<std::set<int>> vertex_sets;
    std::vector<int> node_vertex(node_count, -1);
    auto vertex_id = [&](int node) {
        if (node_vertex[node] < 0) {
            node_vertex[node] = qm.vertex_count();
            qm.vertices.push_back(node_pos[node]);
        }
        return node_vertex[node];
    };
    // Competing cycles share edges at the seams and the edge-manifold guard
    // keeps whichever comes first, so emit the squarest cells first: score by
    // edge-length deviation plus corner skew (lower is better).
    std::vector<std::pair<double, std::array<int, 4>>> ranked;
    ranked.reserve(found.size());
    for (const auto& quad : found) {
        double score = 0;
        for (int k = 0; k < 4; ++k) {
            const Vec3& p = node_pos[quad[k]];
            const Vec3& prev = node_pos[quad[(k + 3) % 4]];
            const Vec3& next = node_pos[quad[(k + 1) % 4]];
            score += std::abs(norm(next - p) - L) / L;
            score += std::abs(dot(normalized(prev - p), normalized(next - p)));
        }
        ranked.push_back({score, quad});
    }
    std::sort(ranked.begin(), ranked.end());
    for (const auto& [score, quad] : ranked) {
        std::set<int> vs(quad.begin(), quad.end());
        if (vertex_sets.count(vs)) continue;
        bool manifold = true;
        for (int k = 0; k < 4; ++k) {
            int x = quad[k], y = quad[(k + 1) % 4];
            if (x > y) std::swap(x, y);
            if (edge_use[{x, y}] >= 2) manifold = false;
        }
        if (!manifold) continue;
        // edge-length guard: keep the global mean near the requested length
        double edge_len = 0;
        bool edges_ok = true;
        for (int k = 0; k < 4; ++k) {
            double e = norm(node_pos[quad[(k + 1) % 4]] - node_pos[quad[k]]);
            if (e < 0.5 * L || e > 1.5 * L) edges_ok = false;
            edge_len += e / 4;
        }
        if (!edges_ok) continue;
        // planarity guard, matching the QuadMesh invariant
        Vec3 c = (node_pos[quad[0]] + node_pos[quad[1]] + node_pos[quad[2]] +
                  node_pos[quad[3]]) *
                 0.25;
        Vec3 nrm{0, 0, 0};
        for (int k = 0; k < 4; ++k) {
            const Vec3& p = node_pos[quad[k]];
            const Vec3& q = node_pos[quad[(k + 1) % 4]];
            nrm += cross(p - c, q - c);
        }
        double nlen = norm(nrm);
        if (nlen == 0) continue;
        nrm = nrm / nlen;
        bool planar = true;
        for (int k = 0; k < 4 && planar; ++k)
            if (std::abs(dot(node_pos[quad[k]] - c, nrm)) > 0.24 * edge_len) planar = false;
        if (!planar) continue;
        for (int k = 0; k < 4; ++k) {
            int x = quad[k], y = quad[(k + 1) % 4];
            if (x > y) std::swap(x, y);
            ++edge_use[{x, y}];
        }
        vertex_sets.insert(vs);
        qm.quads.push_back({vertex_id(quad[0]), vertex_id(quad[1]), vertex_id(quad[2]),
                            vertex_id(quad[3])});
    }
    if (qm.quad_count() == 0) throw GeometryError("quad extraction produced no quads");
    return qm;
}

}  // namespace patchquilt
