#include "patchquilt/frames.hpp"

#include <cstdio>
#include <deque>
#include <fstream>

#include "patchquilt/bvh.hpp"
#include "patchquilt/errors.hpp"

namespace patchquilt {

bool ReferenceFrame::is_rigid() const {
    Mat3 rrt = rotation * rotation.transposed();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(rrt(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9) return false;
    return std::abs(rotation.det() - 1.0) < 1e-9;
}

std::vector<ReferenceFrame> quad_frames(const QuadMesh& qm) {
    std::vector<ReferenceFrame> frames(qm.quad_count());
    for (int q = 0; q < qm.quad_count(); ++q) {
        const auto& t = qm.quads[q];
        Vec3 z = qm.quad_normal(q);
        if (norm(z) == 0) throw GeometryError("quad " + std::to_string(q) + " has zero normal");
        // X spans the quad between the midpoints of opposite edges e1,e3
        Vec3 m1 = (qm.vertices[t[1]] + qm.vertices[t[2]]) * 0.5;
        Vec3 m3 = (qm.vertices[t[3]] + qm.vertices[t[0]]) * 0.5;
        Vec3 x = m1 - m3;
        x = normalized(x - z * dot(x, z));
        if (norm(x) == 0) throw GeometryError("quad " + std::to_string(q) + " is degenerate");
        Vec3 y = cross(z, x);
        frames[q].origin = qm.quad_centroid(q);
        frames[q].rotation = Mat3::from_rows(x, y, z);
    }

    // 4-fold symmetry resolution by BFS from the lowest quad id per component
    auto adj = qm.adjacency();
    std::vector<uint8_t> visited(qm.quad_count(), 0);
    for (int root = 0; root < qm.quad_count(); ++root) {
        if (visited[root]) continue;
        visited[root] = 1;
        std::deque<int> queue{root};
        while (!queue.empty()) {
            int q = queue.front();
            queue.pop_front();
            Vec3 px = frames[q].rotation.row(0);
            for (int nb : adj[q]) {
                if (visited[nb]) continue;
                visited[nb] = 1;
                Vec3 x = frames[nb].rotation.row(0);
                Vec3 y = frames[nb].rotation.row(1);
                Vec3 z = frames[nb].rotation.row(2);
                Vec3 best = x;
                double best_dot = dot(px, x);
                for (const Vec3& cand : {y, -x, -y})
                    if (dot(px, cand) > best_dot) {
                        best_dot = dot(px, cand);
                        best = cand;
                    }
                frames[nb].rotation = Mat3::from_rows(best, cross(z, best), z);
                queue.push_back(nb);
            }
        }
    }
    return frames;
}

SeedSet seed_points_with_offsets(const QuadMesh& qm, const std::vector<ReferenceFrame>& frames,
                                 int overlap_level, const TriangleBvh* projection_surface) {
    if (overlap_level < 0) throw GeometryError("overlap level must be >= 0");
    SeedSet seeds;
    seeds.reserve(size_t(qm.quad_count()) * (4 * overlap_level + 1));
    for (int q = 0; q < qm.quad_count(); ++q) {
        const ReferenceFrame& f = frames[q];
        seeds.push_back({f.origin, f, q, 0});
        double half = qm.quad_edge_length(q) / 2;
        int offset_id = 1;
        for (int ring = 1; ring <= overlap_level; ++ring) {
            double step = half * ring / (overlap_level + 1);
            const Vec3 dirs[4] = {f.rotation.row(0), -f.rotation.row(0), f.rotation.row(1),
                                  -f.rotation.row(1)};
            for (const Vec3& d : dirs) {
                Vec3 p = f.origin + d * step;
                if (projection_surface) p = projection_surface->closest(p).point;
                ReferenceFrame sf = f;
                sf.origin = p;
                seeds.push_back({p, sf, q, offset_id++});
            }
        }
    }
    return seeds;
}

void export_frames(const std::vector<ReferenceFrame>& frames, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[360];
    for (size_t q = 0; q < frames.size(); ++q) {
        const auto& f = frames[q];
        std::snprintf(buf, sizeof buf,
                      "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                      q, f.origin.x, f.origin.y, f.origin.z, f.rotation(0, 0), f.rotation(0, 1),
                      f.rotation(0, 2), f.rotation(1, 0), f.rotation(1, 1), f.rotation(1, 2),
                      f.rotation(2, 0), f.rotation(2, 1), f.rotation(2, 2));
        out << buf;
    }
}

}  // namespace patchquilt
