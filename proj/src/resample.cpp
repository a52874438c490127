#include "patchquilt/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "patchquilt/errors.hpp"

namespace patchquilt {

Mesh midpoint_subdivide(const Mesh& mesh) {
    Mesh out;
    out.vertices = mesh.vertices;
    std::map<std::array<int, 2>, int> midpoint;
    auto mid_index = [&](int a, int b) {
        std::array<int, 2> key{std::min(a, b), std::max(a, b)};
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        int idx = out.vertex_count();
        out.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto& t : mesh.faces) {
        int m01 = mid_index(t[0], t[1]);
        int m12 = mid_index(t[1], t[2]);
        int m20 = mid_index(t[2], t[0]);
        out.faces.push_back({t[0], m01, m20});
        out.faces.push_back({t[1], m12, m01});
        out.faces.push_back({t[2], m20, m12});
        out.faces.push_back({m01, m12, m20});
    }
    if (!mesh.valid.empty()) {
        out.valid.assign(out.vertex_count(), 1);
        std::copy(mesh.valid.begin(), mesh.valid.end(), out.valid.begin());
    }
    return out;
}

namespace {

// Symmetric 4x4 plane quadric, upper triangle.
struct Quadric {
    double a[10] = {0};

    void add_plane(double nx, double ny, double nz, double d, double w) {
        double p[4] = {nx, ny, nz, d};
        int idx = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) a[idx++] += w * p[i] * p[j];
    }
    Quadric& operator+=(const Quadric& o) {
        for (int i = 0; i < 10; ++i) a[i] += o.a[i];
        return *this;
    }
    // error = v^T Q v with v = (x,y,z,1)
    double eval(const Vec3& v) const {
        const double x = v.x, y = v.y, z = v.z;
        return a[0] * x * x + 2 * a[1] * x * y + 2 * a[2] * x * z + 2 * a[3] * x +
               a[4] * y * y + 2 * a[5] * y * z + 2 * a[6] * y +
               a[7] * z * z + 2 * a[8] * z + a[9];
    }
    // Minimizer of the quadric; false if the 3x3 system is near-singular.
    bool minimum(Vec3& out) const {
        Mat3 A;
        A.m = {a[0], a[1], a[2], a[1], a[4], a[5], a[2], a[5], a[7]};
        double det = A.det();
        if (std::abs(det) < 1e-12) return false;
        Vec3 b{-a[3], -a[6], -a[8]};
        // Cramer's rule
        auto solve_col = [&](int c) {
            Mat3 M = A;
            for (int r = 0; r < 3; ++r) M(r, c) = b[r];
            return M.det() / det;
        };
        out = {solve_col(0), solve_col(1), solve_col(2)};
        return is_finite(out);
    }
};

struct HeapEntry {
    double cost;
    int u, v;
    uint32_t version;  // sum of endpoint versions at push time
    bool operator<(const HeapEntry& o) const { return cost > o.cost; }
};

}  // namespace

Mesh quadric_decimate(const Mesh& mesh, int target_vertex_count) {
    if (target_vertex_count < 4) throw GeometryError("decimation target must be >= 4");
    auto bad = mesh.non_manifold_edges();
    if (!bad.empty()) {
        std::string msg = "non-manifold edges:";
        for (size_t i = 0; i < bad.size() && i < 16; ++i)
            msg += " (" + std::to_string(bad[i][0]) + "," + std::to_string(bad[i][1]) + ")";
        if (bad.size() > 16) msg += " ...";
        throw GeometryError(msg);
    }

    std::vector<Vec3> pos = mesh.vertices;
    std::vector<Quadric> quadrics(pos.size());
    std::vector<std::set<int>> vv(pos.size());
    std::vector<std::set<int>> vf(pos.size());
    std::vector<std::array<int, 3>> faces = mesh.faces;
    std::vector<uint8_t> face_alive(faces.size(), 1);
    std::vector<uint8_t> vert_alive(pos.size(), 1);
    std::vector<uint32_t> version(pos.size(), 0);

    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
        const auto& t = faces[f];
        Vec3 n = cross(pos[t[1]] - pos[t[0]], pos[t[2]] - pos[t[0]]);
        double area2 = norm(n);
        if (area2 <= 0) continue;
        Vec3 un = n / area2;
        double d = -dot(un, pos[t[0]]);
        for (int k = 0; k < 3; ++k) {
            quadrics[t[k]].add_plane(un.x, un.y, un.z, d, area2 * 0.5);
            vv[t[k]].insert(t[(k + 1) % 3]);
            vv[t[k]].insert(t[(k + 2) % 3]);
            vf[t[k]].insert(f);
        }
    }

    // Boundary constraint planes keep open borders in place.
    for (const auto& e : mesh.boundary_edges()) {
        Vec3 a = pos[e[0]], b = pos[e[1]];
        Vec3 edge = b - a;
        // normal of any adjacent face
        Vec3 fn;
        for (int f : vf[e[0]])
            if (vf[e[1]].count(f)) fn = mesh.face_normal(f);
        Vec3 n = normalized(cross(edge, fn));
        if (norm(n) == 0) continue;
        double d = -dot(n, a);
        double w = norm2(edge) * 100.0;
        quadrics[e[0]].add_plane(n.x, n.y, n.z, d, w);
        quadrics[e[1]].add_plane(n.x, n.y, n.z, d, w);
    }

    auto collapse_cost = [&](int u, int v, Vec3& best) {
        Quadric q = quadrics[u];
        q += quadrics[v];
        if (!q.minimum(best)) {
            Vec3 mid = (pos[u] + pos[v]) * 0.5;
            double cm = q.eval(mid), cu = q.eval(pos[u]), cv = q.eval(pos[v]);
            best = mid;
            double c = cm;
            if (cu < c) { c = cu; best = pos[u]; }
            if (cv < c) { c = cv; best = pos[v]; }
            return c;
        }
        return q.eval(best);
    };

    std::priority_queue<HeapEntry> heap;
    auto push_edge = [&](int u, int v) {
        if (u > v) std::swap(u, v);
        Vec3 best;
        double c = collapse_cost(u, v, best);
        heap.push({c, u, v, version[u] + version[v]});
    };
    for (size_t u = 0; u < pos.size(); ++u)
        for (int v : vv[u])
            if (static_cast<int>(u) < v) push_edge(static_cast<int>(u), v);

    int alive_count = static_cast<int>(pos.size());
    while (alive_count > target_vertex_count && !heap.empty()) {
        HeapEntry e = heap.top();
        heap.pop();
        int u = e.u, v = e.v;
        if (!vert_alive[u] || !vert_alive[v]) continue;
        if (version[u] + version[v] != e.version) continue;
        if (!vv[u].count(v)) continue;

        // link condition: shared neighbors must be exactly the faces' apexes
        std::vector<int> shared;
        for (int w : vv[u])
            if (vv[v].count(w)) shared.push_back(w);
        std::set<int> apexes;
        for (int f : vf[u])
            if (vf[v].count(f))
                for (int k = 0; k < 3; ++k)
                    if (faces[f][k] != u && faces[f][k] != v) apexes.insert(faces[f][k]);
        if (shared.size() != apexes.size()) continue;

        Vec3 best;
        collapse_cost(u, v, best);

        // reject collapses that flip a surviving face
        bool flips = false;
        for (int w : {u, v}) {
            for (int f : vf[w]) {
                const auto& t = faces[f];
                if (vf[u].count(f) && vf[v].count(f)) continue;  // face dies
                Vec3 p[3], q[3];
                for (int k = 0; k < 3; ++k) {
                    p[k] = pos[t[k]];
                    q[k] = (t[k] == u || t[k] == v) ? best : pos[t[k]];
                }
                Vec3 n0 = cross(p[1] - p[0], p[2] - p[0]);
                Vec3 n1 = cross(q[1] - q[0], q[2] - q[0]);
                if (dot(n0, n1) <= 0) { flips = true; break; }
            }
            if (flips) break;
        }
        if (flips) continue;

        // collapse v into u
        pos[u] = best;
        quadrics[u] += quadrics[v];
        for (int f : std::vector<int>(vf[v].begin(), vf[v].end())) {
            auto& t = faces[f];
            if (vf[u].count(f)) {
                face_alive[f] = 0;
                for (int k = 0; k < 3; ++k) vf[t[k]].erase(f);
                continue;
            }
            for (int k = 0; k < 3; ++k)
                if (t[k] == v) t[k] = u;
            vf[u].insert(f);
        }
        vf[v].clear();
        for (int w : vv[v]) {
            vv[w].erase(v);
            if (w != u) {
                vv[w].insert(u);
                vv[u].insert(w);
            }
        }
        vv[u].erase(v);
        vv[v].clear();
        vert_alive[v] = 0;
        ++version[u];
        --alive_count;

        for (int w : vv[u]) push_edge(u, w);
    }

    Mesh out;
    std::vector<int> remap(pos.size(), -1);
    for (size_t i = 0; i < pos.size(); ++i)
        if (vert_alive[i]) {
            remap[i] = out.vertex_count();
            out.vertices.push_back(pos[i]);
        }
    for (size_t f = 0; f < faces.size(); ++f) {
        if (!face_alive[f]) continue;
        const auto& t = faces[f];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
        out.faces.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    }
    return out;
}

Mesh resample_to_resolution(const Mesh& mesh, int target_vertex_count) {
    if (target_vertex_count < 4) throw GeometryError("resample target must be >= 4");
    Mesh cur = mesh;
    auto within = [&](int n) {
        return std::abs(n - target_vertex_count) <= 0.1 * target_vertex_count;
    };
    if (within(cur.vertex_count())) return cur;
    while (cur.vertex_count() < target_vertex_count && !within(cur.vertex_count()))
        cur = midpoint_subdivide(cur);
    if (within(cur.vertex_count())) return cur;
    return quadric_decimate(cur, target_vertex_count);
}

}  // namespace patchquilt
