#include "patchquilt/patch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "patchquilt/errors.hpp"
#include "patchquilt/parallel.hpp"

namespace patchquilt {

void PatchParams::validate() const {
    if (grid_resolution < 2) throw GeometryError("grid resolution N must be >= 2");
    if (radius <= 0) throw GeometryError("patch radius must be positive");
    if (overlap_level < 0) throw GeometryError("overlap level must be >= 0");
}

int Patch::observed_count() const {
    return static_cast<int>(std::count(mask.begin(), mask.end(), uint8_t(1)));
}

bool Patch::fully_observed() const { return observed_count() == static_cast<int>(mask.size()); }

namespace {

uint64_t cell_key(int64_t x, int64_t y, int64_t z) {
    // 21 bits per axis, offset to positive range
    return (uint64_t(x + (1 << 20)) << 42) | (uint64_t(y + (1 << 20)) << 21) |
           uint64_t(z + (1 << 20));
}

}  // namespace

PointGrid::PointGrid(const PointCloud& cloud, double cell_size)
    : cloud_(cloud), cell_(cell_size) {
    if (cell_size <= 0) throw GeometryError("point grid cell size must be positive");
    for (int i = 0; i < static_cast<int>(cloud.points.size()); ++i) {
        const Vec3& p = cloud.points[i];
        cells_[cell_key(int64_t(std::floor(p.x / cell_)), int64_t(std::floor(p.y / cell_)),
                        int64_t(std::floor(p.z / cell_)))]
            .push_back(i);
    }
}

std::vector<int> PointGrid::radius_query(const Vec3& center, double radius) const {
    std::vector<int> result;
    int64_t x0 = int64_t(std::floor((center.x - radius) / cell_));
    int64_t x1 = int64_t(std::floor((center.x + radius) / cell_));
    int64_t y0 = int64_t(std::floor((center.y - radius) / cell_));
    int64_t y1 = int64_t(std::floor((center.y + radius) / cell_));
    int64_t z0 = int64_t(std::floor((center.z - radius) / cell_));
    int64_t z1 = int64_t(std::floor((center.z + radius) / cell_));
    double r2 = radius * radius;
    for (int64_t x = x0; x <= x1; ++x)
        for (int64_t y = y0; y <= y1; ++y)
            for (int64_t z = z0; z <= z1; ++z) {
                auto it = cells_.find(cell_key(x, y, z));
                if (it == cells_.end()) continue;
                for (int i : it->second)
                    if (norm2(cloud_.points[i] - center) <= r2) result.push_back(i);
            }
    std::sort(result.begin(), result.end());
    return result;
}

Patch extract_patch(const PointCloud& cloud, const PointGrid& index,
                    const ReferenceFrame& frame, const PatchParams& params) {
    params.validate();
    const int N = params.grid_resolution;
    const double L = params.side();
    Patch patch;
    patch.heights.assign(params.bin_count(), 0.0);
    patch.mask.assign(params.bin_count(), 0);
    std::vector<int> counts(params.bin_count(), 0);
    for (int i : index.radius_query(frame.origin, params.radius)) {
        Vec3 q = frame.to_local(cloud.points[i]);
        if (std::abs(q.x) >= L / 2 || std::abs(q.y) >= L / 2) continue;
        int bx = static_cast<int>(std::floor((q.x + L / 2) / L * N));
        int by = static_cast<int>(std::floor((q.y + L / 2) / L * N));
        bx = std::clamp(bx, 0, N - 1);
        by = std::clamp(by, 0, N - 1);
        int bin = by * N + bx;
        patch.heights[bin] += q.z;
        ++counts[bin];
    }
    for (int b = 0; b < params.bin_count(); ++b) {
        if (counts[b] > 0) {
            patch.heights[b] /= counts[b];
            patch.mask[b] = 1;
        } else {
            patch.heights[b] = 0;
        }
    }
    return patch;
}

PatchSet extract_patch_set(const PointCloud& cloud, const SeedSet& seeds,
                           const PatchParams& params) {
    params.validate();
    PointGrid index(cloud, params.radius);
    PatchSet ps;
    ps.params = params;
    ps.settings = seeds;
    ps.patches.resize(seeds.size());
    parallel_for(seeds.size(), [&](size_t i) {
        ps.patches[i] = extract_patch(cloud, index, seeds[i].frame, params);
        ps.patches[i].seed_id = static_cast<int>(i);
    });
    return ps;
}

PointCloud reconstruct_point_cloud(const PatchSet& ps) {
    const int N = ps.params.grid_resolution;
    const double L = ps.params.side();
    PointCloud cloud;
    for (size_t p = 0; p < ps.patches.size(); ++p) {
        const Patch& patch = ps.patches[p];
        const ReferenceFrame& frame = ps.settings[p].frame;
        for (int by = 0; by < N; ++by)
            for (int bx = 0; bx < N; ++bx) {
                int bin = by * N + bx;
                if (!patch.mask[bin]) continue;
                double cx = -L / 2 + (bx + 0.5) * L / N;
                double cy = -L / 2 + (by + 0.5) * L / N;
                cloud.points.push_back(frame.to_global({cx, cy, patch.heights[bin]}));
            }
    }
    return cloud;
}

VertexBinMap build_vertex_bin_map(const Mesh& donor, const SeedSet& seeds,
                                  const PatchParams& params) {
    params.validate();
    const int N = params.grid_resolution;
    const double L = params.side();
    PointCloud donor_cloud;
    donor_cloud.points = donor.vertices;
    PointGrid grid(donor_cloud, params.radius);
    VertexBinMap map;
    map.entries.resize(donor.vertices.size());
    std::vector<std::vector<VertexBinMap::Slot>> per_seed(seeds.size());
    parallel_for(seeds.size(), [&](size_t s) {
        const ReferenceFrame& frame = seeds[s].frame;
        for (int i : grid.radius_query(frame.origin, params.radius)) {
            Vec3 q = frame.to_local(donor.vertices[i]);
            if (std::abs(q.x) >= L / 2 || std::abs(q.y) >= L / 2) continue;
            int bx = std::clamp(static_cast<int>(std::floor((q.x + L / 2) / L * N)), 0, N - 1);
            int by = std::clamp(static_cast<int>(std::floor((q.y + L / 2) / L * N)), 0, N - 1);
            per_seed[s].push_back({i, by * N + bx});
        }
    });
    for (size_t s = 0; s < seeds.size(); ++s)
        for (const auto& slot : per_seed[s])
            map.entries[slot.patch].push_back({static_cast<int>(s), slot.bin});
    return map;
}

Mesh reconstruct_mesh(const PatchSet& ps, const VertexBinMap& map,
                      const std::vector<std::array<int, 3>>& donor_faces,
                      const std::vector<Vec3>* fallback_positions) {
    const int N = ps.params.grid_resolution;
    const double L = ps.params.side();
    const size_t nv = map.entries.size();

    Mesh out;
    out.vertices.assign(nv, {0, 0, 0});
    out.faces = donor_faces;
    std::vector<uint8_t> resolved(nv, 0);

    parallel_for(nv, [&](size_t v) {
        Vec3 acc;
        int count = 0;
        for (const auto& slot : map.entries[v]) {
            const Patch& patch = ps.patches[slot.patch];
            if (!patch.mask[slot.bin]) continue;
            int bx = slot.bin % N, by = slot.bin / N;
            double cx = -L / 2 + (bx + 0.5) * L / N;
            double cy = -L / 2 + (by + 0.5) * L / N;
            acc += ps.settings[slot.patch].frame.to_global({cx, cy, patch.heights[slot.bin]});
            ++count;
        }
        if (count > 0) {
            out.vertices[v] = acc / count;
            resolved[v] = 1;
        }
    });

    // breadth-first 1-ring fill of unresolved vertices
    std::vector<std::vector<int>> adj(nv);
    for (const auto& t : donor_faces)
        for (int k = 0; k < 3; ++k) {
            adj[t[k]].push_back(t[(k + 1) % 3]);
            adj[t[k]].push_back(t[(k + 2) % 3]);
        }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    size_t unresolved = std::count(resolved.begin(), resolved.end(), uint8_t(0));
    while (unresolved > 0) {
        std::vector<int> frontier;
        for (size_t v = 0; v < nv; ++v) {
            if (resolved[v]) continue;
            for (int u : adj[v])
                if (resolved[u]) {
                    frontier.push_back(static_cast<int>(v));
                    break;
                }
        }
        if (frontier.empty()) {
            if (fallback_positions) {
                // components without any estimate keep their donor geometry
                for (size_t v = 0; v < nv; ++v)
                    if (!resolved[v]) out.vertices[v] = (*fallback_positions)[v];
                break;
            }
            // find one offending component for the error message
            for (size_t v = 0; v < nv; ++v)
                if (!resolved[v] && !adj[v].empty())
                    throw GeometryError(
                        "connected component around donor vertex " + std::to_string(v) +
                        " has no resolved vertex");
            // remaining vertices are isolated; leave them at the origin
            break;
        }
        std::vector<Vec3> values(frontier.size());
        for (size_t i = 0; i < frontier.size(); ++i) {
            Vec3 acc;
            int count = 0;
            for (int u : adj[frontier[i]])
                if (resolved[u]) {
                    acc += out.vertices[u];
                    ++count;
                }
            values[i] = acc / count;
        }
        for (size_t i = 0; i < frontier.size(); ++i) {
            out.vertices[frontier[i]] = values[i];
            resolved[frontier[i]] = 1;
        }
        unresolved -= frontier.size();
    }
    return out;
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("truncated file: " + path);
    return value;
}

constexpr uint32_t kPatchSetVersion = 1;

}  // namespace

void save_patch_set(const PatchSet& ps, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("PSET", 4);
    write_raw(out, kPatchSetVersion);
    write_raw(out, uint32_t(ps.params.grid_resolution));
    write_raw(out, double(ps.params.radius));
    write_raw(out, uint32_t(ps.patches.size()));
    const int bins = ps.params.bin_count();
    for (size_t p = 0; p < ps.patches.size(); ++p) {
        const auto& seed = ps.settings[p];
        write_raw(out, seed.point.x);
        write_raw(out, seed.point.y);
        write_raw(out, seed.point.z);
        for (double r : seed.frame.rotation.m) write_raw(out, r);
        for (int b = 0; b < bins; ++b) write_raw(out, float(ps.patches[p].heights[b]));
        std::vector<uint8_t> packed((bins + 7) / 8, 0);
        for (int b = 0; b < bins; ++b)
            if (ps.patches[p].mask[b]) packed[b / 8] |= uint8_t(1 << (b % 8));
        out.write(reinterpret_cast<const char*>(packed.data()), packed.size());
    }
    if (!out) throw IoError("write failure on " + path);
}

PatchSet load_patch_set(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PSET", 4) != 0) throw IoError("bad magic in " + path);
    if (read_raw<uint32_t>(in, path) != kPatchSetVersion)
        throw IoError("unsupported PSET version in " + path);
    PatchSet ps;
    ps.params.grid_resolution = static_cast<int>(read_raw<uint32_t>(in, path));
    ps.params.radius = read_raw<double>(in, path);
    uint32_t count = read_raw<uint32_t>(in, path);
    const int bins = ps.params.bin_count();
    for (uint32_t p = 0; p < count; ++p) {
        Seed seed;
        seed.point.x = read_raw<double>(in, path);
        seed.point.y = read_raw<double>(in, path);
        seed.point.z = read_raw<double>(in, path);
        for (double& r : seed.frame.rotation.m) r = read_raw<double>(in, path);
        seed.frame.origin = seed.point;
        Patch patch;
        patch.seed_id = static_cast<int>(p);
        patch.heights.resize(bins);
        for (int b = 0; b < bins; ++b) patch.heights[b] = read_raw<float>(in, path);
        std::vector<uint8_t> packed((bins + 7) / 8);
        in.read(reinterpret_cast<char*>(packed.data()), packed.size());
        if (!in) throw IoError("truncated file: " + path);
        patch.mask.resize(bins);
        for (int b = 0; b < bins; ++b)
            patch.mask[b] = (packed[b / 8] >> (b % 8)) & 1;
        ps.settings.push_back(seed);
        ps.patches.push_back(std::move(patch));
    }
    return ps;
}

}  // namespace patchquilt
