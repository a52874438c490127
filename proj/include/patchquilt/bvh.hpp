#pragma once
#include <vector>

#include "patchquilt/mesh.hpp"
#include "patchquilt/vec.hpp"

namespace patchquilt {

/// Closest point on triangle (a,b,c) to p (Ericson, Real-Time Collision
/// Detection, 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestHit {
    double distance = 0;
    Vec3 point;
    int face = -1;
};

/// Axis-aligned BVH over mesh triangles for exact nearest-point queries.
/// Results match a brute-force scan over all triangles.
class TriangleBvh {
public:
    explicit TriangleBvh(const Mesh& mesh);

    ClosestHit closest(const Vec3& query) const;

private:
    struct Node {
        BBox box;
        int left = -1, right = -1;  // interior when left >= 0
        int begin = 0, end = 0;     // leaf triangle range in order_
    };

    const Mesh& mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;

    int build(int begin, int end, std::vector<Vec3>& centroids);
    void search(int node, const Vec3& q, ClosestHit& best) const;
};

}  // namespace patchquilt
