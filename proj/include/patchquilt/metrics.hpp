#pragma once
#include <cstdint>

#include "patchquilt/mesh.hpp"

namespace patchquilt {

/// PSNR of an exact reconstruction is reported as this sentinel instead of
/// infinity.
constexpr double kPsnrCap = 200.0;

struct MetricsReport {
    double cloud_to_mesh = 0;      // mean distance, model units
    double rmse = 0;               // RMSE of recovered coordinates
    double psnr_db = 0;            // peak = reference bbox diameter
    int64_t mesh_entities = 0;     // 3*faces + vertices
    int64_t patch_entities = 0;    // sparsity*patches + quad-mesh entities
    double compression_factor = 0; // mesh entities / patch entities
};

/// Mean over points of the exact point-to-triangle distance to `reference`.
double cloud_to_mesh_error(const PointCloud& points, const Mesh& reference);

/// RMS of point-to-mesh distances (used by the symmetric PSNR metric).
double cloud_to_mesh_rms(const PointCloud& points, const Mesh& reference);

/// 20*log10(bbox_diameter(reference) / symmetric RMS error), capped at
/// kPsnrCap. The symmetric error pools vertex-to-mesh distances in both
/// directions.
double psnr(const Mesh& reconstructed, const Mesh& reference);

/// RMSE between corresponding vertices of two meshes restricted to the given
/// indices (coordinate-wise, matching the missing-vertex tables).
double vertex_rmse(const Mesh& reconstructed, const Mesh& reference,
                   const std::vector<int>& indices);

}  // namespace patchquilt
