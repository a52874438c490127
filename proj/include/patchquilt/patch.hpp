#pragma once
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "patchquilt/frames.hpp"
#include "patchquilt/mesh.hpp"

namespace patchquilt {

struct PatchParams {
    double radius = 0;     // r, model units
    int grid_resolution = 16;  // N bins per side
    int overlap_level = 1;

    /// Grid side length L = sqrt(2) * r (the grid inscribes the r-ball's
    /// equator).
    double side() const { return std::sqrt(2.0) * radius; }
    double bin_size() const { return side() / grid_resolution; }
    int bin_count() const { return grid_resolution * grid_resolution; }
    void validate() const;
};

/// Fixed-size masked height map over a seed's reference frame. Masked-off
/// bins carry height 0.
struct Patch {
    std::vector<double> heights;  // N^2, row-major (y-major)
    std::vector<uint8_t> mask;    // N^2, 1 = observed
    int seed_id = -1;

    int observed_count() const;
    bool fully_observed() const;
};

struct PatchSet {
    PatchParams params;
    std::vector<Patch> patches;
    SeedSet settings;  // (seed, transform) per patch, same order
};

/// Spatial hash over a point cloud for radius queries.
class PointGrid {
public:
    PointGrid(const PointCloud& cloud, double cell_size);
    /// Indices of points within `radius` of `center` (exact test), ascending.
    std::vector<int> radius_query(const Vec3& center, double radius) const;

private:
    const PointCloud& cloud_;
    double cell_;
    std::unordered_map<uint64_t, std::vector<int>> cells_;
};

/// Points within r of the seed are mapped to frame coordinates; each falls in
/// bin (floor((x+L/2)/L*N), floor((y+L/2)/L*N)); bin height = mean Z. Points
/// with |x| or |y| >= L/2 are discarded. Empty bins are masked off.
Patch extract_patch(const PointCloud& cloud, const PointGrid& index,
                    const ReferenceFrame& frame, const PatchParams& params);

PatchSet extract_patch_set(const PointCloud& cloud, const SeedSet& seeds,
                           const PatchParams& params);

/// Every observed bin emits T_s^{-1} (bin-center x, bin-center y, height).
PointCloud reconstruct_point_cloud(const PatchSet& ps);

/// Per donor vertex: the (patch, bin) slots where the vertex would be sampled
/// under the extraction rules.
struct VertexBinMap {
    struct Slot {
        int patch;
        int bin;
    };
    std::vector<std::vector<Slot>> entries;  // one list per donor vertex
};

VertexBinMap build_vertex_bin_map(const Mesh& donor, const SeedSet& seeds,
                                  const PatchParams& params);

/// Vertex estimates are averaged over observed mapped bins; vertices without
/// any observed estimate are filled breadth-first by 1-ring averaging of
/// already-resolved neighbors. Output connectivity = donor faces. A connected
/// component with no resolved vertex falls back to `fallback_positions` when
/// given, otherwise raises GeometryError.
Mesh reconstruct_mesh(const PatchSet& ps, const VertexBinMap& map,
                      const std::vector<std::array<int, 3>>& donor_faces,
                      const std::vector<Vec3>* fallback_positions = nullptr);

/// PSET binary format (little-endian): magic "PSET", u32 version, u32 N,
/// f64 r, u32 count; per patch seed xyz f64x3, rotation f64x9, N^2 f32
/// heights, packed N^2-bit mask.
void save_patch_set(const PatchSet& ps, const std::string& path);
PatchSet load_patch_set(const std::string& path);

}  // namespace patchquilt
