#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include "patchquilt/errors.hpp"
#include "patchquilt/pipeline.hpp"

namespace patchquilt {

HoleSpec detect_holes(const Mesh& mesh) {
    // directed boundary edges: a boundary edge appears in exactly one face
    std::map<std::array<int, 2>, int> edge_faces;
    for (const auto& t : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            ++edge_faces[{std::min(a, b), std::max(a, b)}];
        }
    std::map<int, int> next;  // outgoing directed boundary edge per vertex
    for (const auto& t : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            if (edge_faces[{std::min(a, b), std::max(a, b)}] != 1) continue;
            // the face uses a->b, so the boundary is walked b->a
            if (next.count(b))
                throw GeometryError("non-manifold boundary at vertex " + std::to_string(b));
            next[b] = a;
        }

    HoleSpec spec;
    std::map<int, uint8_t> visited;
    for (const auto& [start, _] : next) {
        if (visited.count(start)) continue;
        std::vector<int> loop;
        int v = start;
        do {
            if (visited.count(v))
                throw GeometryError("non-manifold boundary at vertex " + std::to_string(v));
            visited[v] = 1;
            loop.push_back(v);
            auto it = next.find(v);
            if (it == next.end())
                throw GeometryError("open boundary chain at vertex " + std::to_string(v));
            v = it->second;
        } while (v != start);
        spec.loops.push_back(std::move(loop));
    }
    return spec;
}

namespace {

struct Weight {
    double angle = 0;  // max dihedral deviation, radians
    double area = 0;

    bool operator<(const Weight& o) const {
        if (angle != o.angle) return angle < o.angle;
        return area < o.area;
    }
    Weight operator+(const Weight& o) const {
        return {std::max(angle, o.angle), area + o.area};
    }
};

double dihedral(const Vec3& n1, const Vec3& n2) {
    double c = std::clamp(dot(n1, n2), -1.0, 1.0);
    return std::acos(c);
}

Vec3 tri_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    return normalized(cross(b - a, c - a));
}

}  // namespace

Mesh triangulate_hole(const Mesh& mesh, const std::vector<int>& loop,
                      std::vector<int>* inserted) {
    const int n = static_cast<int>(loop.size());
    if (n < 3) throw GeometryError("hole loop needs at least 3 vertices");
    Mesh out = mesh;

    std::vector<uint8_t> seen(mesh.vertex_count(), 0);
    bool simple = true;
    for (int v : loop) {
        if (seen[v]) simple = false;
        seen[v] = 1;
    }

    std::vector<Vec3> P(n);
    for (int i = 0; i < n; ++i) P[i] = mesh.vertices[loop[i]];
    double mean_edge = 0;
    for (int i = 0; i < n; ++i) mean_edge += norm(P[(i + 1) % n] - P[i]);
    mean_edge /= n;

    // normals of the existing faces on each loop edge, for boundary dihedrals.
    // the loop runs opposite to the face orientation, so edge i is
    // (loop[i+1], loop[i]) in some existing face.
    std::map<std::array<int, 2>, Vec3> face_normal_on_edge;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.faces[f];
        Vec3 nrm = mesh.face_normal(f);
        for (int k = 0; k < 3; ++k)
            face_normal_on_edge[{t[k], t[(k + 1) % 3]}] = nrm;
    }
    auto boundary_normal = [&](int i, int j) -> const Vec3* {
        auto it = face_normal_on_edge.find({loop[j], loop[i]});
        return it == face_normal_on_edge.end() ? nullptr : &it->second;
    };

    std::vector<std::array<int, 3>> fill;
    if (simple) {
        // minimum-weight triangulation, Liepa-style lexicographic weights
        std::vector<std::vector<Weight>> W(n, std::vector<Weight>(n));
        std::vector<std::vector<int>> pick(n, std::vector<int>(n, -1));
        std::vector<std::vector<Vec3>> normals(n, std::vector<Vec3>(n));
        for (int span = 2; span < n; ++span)
            for (int i = 0; i + span < n; ++i) {
                int k = i + span;
                Weight best{std::numeric_limits<double>::max(), 0};
                for (int j = i + 1; j < k; ++j) {
                    Vec3 nrm = tri_normal(P[i], P[j], P[k]);
                    Weight w{0, 0.5 * norm(cross(P[k] - P[i], P[j] - P[i]))};
                    if (j > i + 1)
                        w.angle = std::max(w.angle, dihedral(nrm, normals[i][j]));
                    else if (const Vec3* bn = boundary_normal(i, j))
                        w.angle = std::max(w.angle, dihedral(nrm, *bn));
                    if (k > j + 1)
                        w.angle = std::max(w.angle, dihedral(nrm, normals[j][k]));
                    else if (const Vec3* bn = boundary_normal(j, k))
                        w.angle = std::max(w.angle, dihedral(nrm, *bn));
                    if (i == 0 && k == n - 1)
                        if (const Vec3* bn = boundary_normal(k, i))
                            w.angle = std::max(w.angle, dihedral(nrm, *bn));
                    Weight total = W[i][j] + W[j][k] + w;
                    if (total < best) {
                        best = total;
                        pick[i][k] = j;
                        normals[i][k] = nrm;
                    }
                }
                W[i][k] = best;
            }
        // recover the triangles
        std::vector<std::array<int, 2>> stack{{0, n - 1}};
        while (!stack.empty()) {
            auto [i, k] = stack.back();
            stack.pop_back();
            if (k - i < 2) continue;
            int j = pick[i][k];
            fill.push_back({loop[i], loop[j], loop[k]});
            stack.push_back({i, j});
            stack.push_back({j, k});
        }
    } else {
        std::cerr << "warning: hole loop repeats a vertex, falling back to fan triangulation\n";
        for (int j = 1; j + 1 < n; ++j) fill.push_back({loop[0], loop[j], loop[j + 1]});
    }

    // refinement: split oversized interior edges of the fill region, then
    // relax the inserted midpoints by 1-ring averaging
    const double threshold = mean_edge * std::sqrt(2.0);
    std::vector<int> new_vertices;
    for (int round = 0; round < 20; ++round) {
        std::map<std::array<int, 2>, std::vector<int>> edge_to_fill;
        for (int f = 0; f < static_cast<int>(fill.size()); ++f)
            for (int k = 0; k < 3; ++k) {
                int a = fill[f][k], b = fill[f][(k + 1) % 3];
                edge_to_fill[{std::min(a, b), std::max(a, b)}].push_back(f);
            }
        std::vector<uint8_t> dirty(fill.size(), 0);
        bool split_any = false;
        for (const auto& [edge, faces] : edge_to_fill) {
            if (faces.size() != 2) continue;  // loop edge, shared with the mesh
            if (dirty[faces[0]] || dirty[faces[1]]) continue;
            if (norm(out.vertices[edge[0]] - out.vertices[edge[1]]) <= threshold) continue;
            int mid = out.vertex_count();
            out.vertices.push_back((out.vertices[edge[0]] + out.vertices[edge[1]]) * 0.5);
            if (!out.valid.empty()) out.valid.push_back(1);
            new_vertices.push_back(mid);
            for (int f : faces) {
                dirty[f] = 1;
                std::array<int, 3> t = fill[f];
                int apex = -1, a = -1, b = -1;
                for (int k = 0; k < 3; ++k) {
                    int u = t[k], v = t[(k + 1) % 3];
                    if (std::min(u, v) == edge[0] && std::max(u, v) == edge[1]) {
                        a = u;
                        b = v;
                        apex = t[(k + 2) % 3];
                    }
                }
                fill[f] = {a, mid, apex};
                fill.push_back({mid, b, apex});
                dirty.push_back(1);
            }
            split_any = true;
        }
        if (!split_any) break;
    }

    if (!new_vertices.empty()) {
        std::vector<std::vector<int>> nbrs(out.vertex_count());
        for (const auto& t : fill)
            for (int k = 0; k < 3; ++k) {
                nbrs[t[k]].push_back(t[(k + 1) % 3]);
                nbrs[t[k]].push_back(t[(k + 2) % 3]);
            }
        for (auto& a : nbrs) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
        for (int it = 0; it < 50; ++it) {
            double max_move = 0;
            std::vector<Vec3> updated(new_vertices.size());
            for (size_t i = 0; i < new_vertices.size(); ++i) {
                Vec3 acc;
                for (int u : nbrs[new_vertices[i]]) acc += out.vertices[u];
                updated[i] = acc / double(nbrs[new_vertices[i]].size());
            }
            for (size_t i = 0; i < new_vertices.size(); ++i) {
                max_move = std::max(max_move, norm(updated[i] - out.vertices[new_vertices[i]]));
                out.vertices[new_vertices[i]] = updated[i];
            }
            if (max_move < 1e-12) break;
        }
    }

    out.faces.insert(out.faces.end(), fill.begin(), fill.end());
    if (inserted) inserted->insert(inserted->end(), new_vertices.begin(), new_vertices.end());
    return out;
}

Mesh close_holes_geometric(const Mesh& damaged, std::vector<int>* inserted) {
    HoleSpec holes = detect_holes(damaged);
    Mesh out = damaged;
    for (const auto& loop : holes.loops) out = triangulate_hole(out, loop, inserted);
    return out;
}

}  // namespace patchquilt
