#include "patchquilt/bvh.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "patchquilt/errors.hpp"

namespace patchquilt {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return a;

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

namespace {

double box_distance2(const BBox& b, const Vec3& p) {
    double d2 = 0;
    for (int k = 0; k < 3; ++k) {
        double v = p[k];
        if (v < b.lo[k]) d2 += (b.lo[k] - v) * (b.lo[k] - v);
        else if (v > b.hi[k]) d2 += (v - b.hi[k]) * (v - b.hi[k]);
    }
    return d2;
}

}  // namespace

TriangleBvh::TriangleBvh(const Mesh& mesh) : mesh_(mesh) {
    if (mesh.faces.empty()) throw GeometryError("BVH over an empty mesh");
    order_.resize(mesh.faces.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<Vec3> centroids(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        centroids[f] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
    }
    nodes_.reserve(2 * mesh.faces.size());
    build(0, static_cast<int>(order_.size()), centroids);
}

int TriangleBvh::build(int begin, int end, std::vector<Vec3>& centroids) {
    int idx = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    BBox box;
    for (int i = begin; i < end; ++i) {
        const auto& t = mesh_.faces[order_[i]];
        for (int k = 0; k < 3; ++k) box.expand(mesh_.vertices[t[k]]);
    }
    nodes_[idx].box = box;
    if (end - begin <= 4) {
        nodes_[idx].begin = begin;
        nodes_[idx].end = end;
        return idx;
    }
    Vec3 ext = box.extent();
    int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
    int l = build(begin, mid, centroids);
    int r = build(mid, end, centroids);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
}

void TriangleBvh::search(int node, const Vec3& q, ClosestHit& best) const {
    const Node& n = nodes_[node];
    if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            int f = order_[i];
            const auto& t = mesh_.faces[f];
            Vec3 cp = closest_point_on_triangle(q, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                                mesh_.vertices[t[2]]);
            double d2 = norm2(q - cp);
            if (d2 < best.distance) {
                best.distance = d2;
                best.point = cp;
                best.face = f;
            }
        }
        return;
    }
    double dl = box_distance2(nodes_[n.left].box, q);
    double dr = box_distance2(nodes_[n.right].box, q);
    int first = n.left, second = n.right;
    if (dr < dl) {
        std::swap(first, second);
        std::swap(dl, dr);
    }
    if (dl < best.distance) search(first, q, best);
    if (dr < best.distance) search(second, q, best);
}

ClosestHit TriangleBvh::closest(const Vec3& query) const {
    ClosestHit best;
    best.distance = std::numeric_limits<double>::max();
    search(0, query, best);
    best.distance = std::sqrt(best.distance);
    return best;
}

}  // namespace patchquilt
