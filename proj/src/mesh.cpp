#include "patchquilt/mesh.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <string>

#include "patchquilt/errors.hpp"

namespace patchquilt {

bool Mesh::all_valid() const {
    if (valid.empty()) return true;
    return std::all_of(valid.begin(), valid.end(), [](uint8_t f) { return f != 0; });
}

BBox Mesh::bounds() const {
    BBox b;
    for (const auto& v : vertices) b.expand(v);
    return b;
}

double Mesh::face_area(int f) const {
    const auto& t = faces[f];
    return 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

Vec3 Mesh::face_normal(int f) const {
    const auto& t = faces[f];
    return normalized(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

double Mesh::total_area() const {
    double a = 0;
    for (int f = 0; f < face_count(); ++f) a += face_area(f);
    return a;
}

void Mesh::validate() const {
    const int n = vertex_count();
    for (int i = 0; i < n; ++i)
        if (!is_finite(vertices[i]))
            throw GeometryError("vertex " + std::to_string(i) + " has non-finite coordinates");
    for (int f = 0; f < face_count(); ++f) {
        const auto& t = faces[f];
        for (int k = 0; k < 3; ++k)
            if (t[k] < 0 || t[k] >= n)
                throw GeometryError("face " + std::to_string(f) + " references vertex " +
                                    std::to_string(t[k]) + " out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw GeometryError("face " + std::to_string(f) + " is degenerate (repeated index)");
    }
    if (!valid.empty() && static_cast<int>(valid.size()) != n)
        throw GeometryError("validity flag count does not match vertex count");
}

std::vector<std::vector<int>> Mesh::vertex_adjacency() const {
    std::vector<std::vector<int>> adj(vertex_count());
    for (const auto& t : faces)
        for (int k = 0; k < 3; ++k) {
            adj[t[k]].push_back(t[(k + 1) % 3]);
            adj[t[k]].push_back(t[(k + 2) % 3]);
        }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

std::vector<std::vector<int>> Mesh::vertex_faces() const {
    std::vector<std::vector<int>> vf(vertex_count());
    for (int f = 0; f < face_count(); ++f)
        for (int k = 0; k < 3; ++k) vf[faces[f][k]].push_back(f);
    return vf;
}

namespace {

std::map<std::array<int, 2>, int> edge_face_counts(const Mesh& mesh) {
    std::map<std::array<int, 2>, int> count;
    for (const auto& t : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            ++count[{a, b}];
        }
    return count;
}

}  // namespace

std::vector<std::array<int, 2>> Mesh::non_manifold_edges() const {
    std::vector<std::array<int, 2>> bad;
    for (const auto& [e, c] : edge_face_counts(*this))
        if (c > 2) bad.push_back(e);
    return bad;
}

std::vector<std::array<int, 2>> Mesh::boundary_edges() const {
    std::vector<std::array<int, 2>> edges;
    for (const auto& [e, c] : edge_face_counts(*this))
        if (c == 1) edges.push_back(e);
    return edges;
}

std::vector<Vec3> Mesh::vertex_normals() const {
    std::vector<Vec3> normals(vertex_count());
    for (const auto& t : faces) {
        Vec3 n = cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
        for (int k = 0; k < 3; ++k) normals[t[k]] += n;  // weighted by 2*area
    }
    for (auto& n : normals) n = normalized(n);
    return normals;
}

Mesh normalize_unit_cube(const Mesh& mesh, NormalizeRecord* record) {
    if (mesh.vertices.empty()) throw GeometryError("cannot normalize an empty mesh");
    BBox b = mesh.bounds();
    Vec3 ext = b.extent();
    double longest = std::max({ext.x, ext.y, ext.z});
    if (longest <= 0) throw GeometryError("degenerate (zero-extent) bounding box");
    NormalizeRecord rec;
    rec.scale = 1.0 / longest;
    rec.offset = b.lo;
    Mesh out = mesh;
    for (auto& v : out.vertices) v = rec.apply(v);
    if (record) *record = rec;
    return out;
}

Mesh denormalize(const Mesh& mesh, const NormalizeRecord& record) {
    Mesh out = mesh;
    for (auto& v : out.vertices) v = record.invert(v);
    return out;
}

Mesh laplacian_smooth(const Mesh& mesh, int iterations, double lambda) {
    Mesh out = mesh;
    if (iterations <= 0) return out;
    auto adj = mesh.vertex_adjacency();
    std::vector<Vec3> next(out.vertices.size());
    for (int it = 0; it < iterations; ++it) {
        for (size_t v = 0; v < out.vertices.size(); ++v) {
            if (adj[v].empty()) {
                next[v] = out.vertices[v];
                continue;
            }
            Vec3 mean;
            for (int u : adj[v]) mean += out.vertices[u];
            mean = mean / static_cast<double>(adj[v].size());
            next[v] = out.vertices[v] + (mean - out.vertices[v]) * lambda;
        }
        out.vertices.swap(next);
    }
    return out;
}

Mesh fill_invalid_from_neighbors(const Mesh& mesh) {
    Mesh out = mesh;
    if (mesh.valid.empty()) return out;
    auto adj = mesh.vertex_adjacency();
    std::vector<uint8_t> known(mesh.valid.begin(), mesh.valid.end());
    std::deque<int> frontier;
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (!known[v]) frontier.push_back(v);

    size_t stall = 0;
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop_front();
        Vec3 mean;
        int n = 0;
        for (int u : adj[v])
            if (known[u]) {
                mean += out.vertices[u];
                ++n;
            }
        if (n > 0) {
            out.vertices[v] = mean / n;
            known[v] = 1;
            stall = 0;
        } else {
            frontier.push_back(v);
            if (++stall > frontier.size())
                throw GeometryError("a connected component has no valid vertex");
        }
    }
    return out;
}

}  // namespace patchquilt
