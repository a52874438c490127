#include "patchquilt/quadmesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "patchquilt/errors.hpp"

namespace patchquilt {

Vec3 QuadMesh::quad_centroid(int q) const {
    const auto& t = quads[q];
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]] + vertices[t[3]]) * 0.25;
}

Vec3 QuadMesh::quad_normal(int q) const {
    const auto& t = quads[q];
    Vec3 n;
    for (int k = 0; k < 4; ++k) {
        const Vec3& a = vertices[t[k]];
        const Vec3& b = vertices[t[(k + 1) % 4]];
        n += {(a.y - b.y) * (a.z + b.z), (a.z - b.z) * (a.x + b.x), (a.x - b.x) * (a.y + b.y)};
    }
    return normalized(n);
}

double QuadMesh::quad_edge_length(int q) const {
    const auto& t = quads[q];
    double sum = 0;
    for (int k = 0; k < 4; ++k) sum += norm(vertices[t[(k + 1) % 4]] - vertices[t[k]]);
    return sum / 4;
}

double QuadMesh::average_edge_length() const {
    double sum = 0;
    for (int q = 0; q < quad_count(); ++q) sum += quad_edge_length(q);
    return quad_count() ? sum / quad_count() : 0;
}

std::vector<std::vector<int>> QuadMesh::adjacency() const {
    std::map<std::array<int, 2>, std::vector<int>> edge_quads;
    for (int q = 0; q < quad_count(); ++q)
        for (int k = 0; k < 4; ++k) {
            int a = quads[q][k], b = quads[q][(k + 1) % 4];
            if (a > b) std::swap(a, b);
            edge_quads[{a, b}].push_back(q);
        }
    std::vector<std::vector<int>> adj(quad_count());
    for (const auto& [e, qs] : edge_quads)
        if (qs.size() == 2) {
            adj[qs[0]].push_back(qs[1]);
            adj[qs[1]].push_back(qs[0]);
        }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

void QuadMesh::validate(double requested_length) const {
    const int n = vertex_count();
    for (int q = 0; q < quad_count(); ++q) {
        const auto& t = quads[q];
        for (int k = 0; k < 4; ++k)
            if (t[k] < 0 || t[k] >= n)
                throw GeometryError("quad " + std::to_string(q) + " index out of range");
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                if (t[a] == t[b])
                    throw GeometryError("quad " + std::to_string(q) + " has a repeated vertex");
        // planarity: max deviation from the best-fit (centroid+normal) plane
        Vec3 c = quad_centroid(q);
        Vec3 nrm = quad_normal(q);
        if (norm(nrm) == 0) throw GeometryError("quad " + std::to_string(q) + " is degenerate");
        double edge = quad_edge_length(q);
        for (int k = 0; k < 4; ++k)
            if (std::abs(dot(vertices[t[k]] - c, nrm)) > 0.25 * edge)
                throw GeometryError("quad " + std::to_string(q) + " violates planarity");
    }
    std::map<std::array<int, 2>, int> edge_count;
    for (const auto& t : quads)
        for (int k = 0; k < 4; ++k) {
            int a = t[k], b = t[(k + 1) % 4];
            if (a > b) std::swap(a, b);
            ++edge_count[{a, b}];
        }
    for (const auto& [e, c] : edge_count)
        if (c > 2)
            throw GeometryError("edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                                ") shared by more than two quads");
    if (requested_length > 0 && quad_count() > 0) {
        double avg = average_edge_length();
        if (avg < 0.7 * requested_length || avg > 1.3 * requested_length)
            throw GeometryError("average quad edge length " + std::to_string(avg) +
                                " outside +-30% of requested " + std::to_string(requested_length));
    }
}

QuadMesh import_quad_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    QuadMesh qm;
    std::string line;
    int lineno = 0, face_index = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z))
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad vertex line");
            qm.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok) {
                int idx = std::stoi(tok.substr(0, tok.find('/')));
                if (idx < 1 || idx > qm.vertex_count())
                    throw ParseError(path + ":" + std::to_string(lineno) +
                                     ": face index out of range");
                poly.push_back(idx - 1);
            }
            if (poly.size() != 4)
                throw GeometryError(path + ": face " + std::to_string(face_index) + " has " +
                                    std::to_string(poly.size()) + " vertices, expected 4");
            qm.quads.push_back({poly[0], poly[1], poly[2], poly[3]});
            ++face_index;
        }
    }
    qm.validate();
    return qm;
}

void export_quad_mesh(const QuadMesh& qm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[128];
    for (const auto& v : qm.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& q : qm.quads)
        out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
    if (!out) throw IoError("write failure on " + path);
}

Mesh subdivide_quad_mesh(const QuadMesh& qm, int level) {
    if (level < 0) throw GeometryError("subdivision level must be >= 0");
    const int g = 1 << level;  // sub-quads per side
    Mesh out;
    // shared ids: corners by quad vertex, edge points by (sorted edge, step)
    std::vector<int> corner_id(qm.vertex_count(), -1);
    std::map<std::array<int, 3>, int> edge_id;

    auto corner = [&](int v) {
        if (corner_id[v] < 0) {
            corner_id[v] = out.vertex_count();
            out.vertices.push_back(qm.vertices[v]);
        }
        return corner_id[v];
    };
    // point k of g along edge a->b (0 < k < g); interpolation is linear, so
    // both incident quads generate the same position
    auto edge_point = [&](int a, int b, int k) {
        int lo = std::min(a, b), hi = std::max(a, b);
        int step = a < b ? k : g - k;
        std::array<int, 3> key{lo, hi, step};
        auto it = edge_id.find(key);
        if (it != edge_id.end()) return it->second;
        int idx = out.vertex_count();
        Vec3 p = qm.vertices[lo] + (qm.vertices[hi] - qm.vertices[lo]) * (double(step) / g);
        out.vertices.push_back(p);
        edge_id.emplace(key, idx);
        return idx;
    };

    for (int q = 0; q < qm.quad_count(); ++q) {
        const auto& t = qm.quads[q];
        const Vec3 &p0 = qm.vertices[t[0]], &p1 = qm.vertices[t[1]], &p2 = qm.vertices[t[2]],
                   &p3 = qm.vertices[t[3]];
        std::vector<int> grid((g + 1) * (g + 1));
        for (int j = 0; j <= g; ++j)
            for (int i = 0; i <= g; ++i) {
                int id;
                if ((i == 0 || i == g) && (j == 0 || j == g)) {
                    int c = i == 0 ? (j == 0 ? t[0] : t[3]) : (j == 0 ? t[1] : t[2]);
                    id = corner(c);
                } else if (j == 0) {
                    id = edge_point(t[0], t[1], i);
                } else if (j == g) {
                    id = edge_point(t[3], t[2], i);
                } else if (i == 0) {
                    id = edge_point(t[0], t[3], j);
                } else if (i == g) {
                    id = edge_point(t[1], t[2], j);
                } else {
                    double u = double(i) / g, v = double(j) / g;
                    Vec3 p = p0 * ((1 - u) * (1 - v)) + p1 * (u * (1 - v)) + p2 * (u * v) +
                             p3 * ((1 - u) * v);
                    id = out.vertex_count();
                    out.vertices.push_back(p);
                }
                grid[j * (g + 1) + i] = id;
            }
        for (int j = 0; j < g; ++j)
            for (int i = 0; i < g; ++i) {
                int a = grid[j * (g + 1) + i], b = grid[j * (g + 1) + i + 1];
                int c = grid[(j + 1) * (g + 1) + i + 1], d = grid[(j + 1) * (g + 1) + i];
                out.faces.push_back({a, b, c});
                out.faces.push_back({a, c, d});
            }
    }
    return out;
}

}  // namespace patchquilt
