#include "patchquilt/metrics.hpp"

#include <cmath>

#include "patchquilt/bvh.hpp"
#include "patchquilt/errors.hpp"

namespace patchquilt {

double cloud_to_mesh_error(const PointCloud& points, const Mesh& reference) {
    if (points.points.empty()) throw GeometryError("empty point cloud");
    TriangleBvh bvh(reference);
    double sum = 0;
    for (const auto& p : points.points) sum += bvh.closest(p).distance;
    return sum / static_cast<double>(points.points.size());
}

double cloud_to_mesh_rms(const PointCloud& points, const Mesh& reference) {
    if (points.points.empty()) throw GeometryError("empty point cloud");
    TriangleBvh bvh(reference);
    double sum = 0;
    for (const auto& p : points.points) {
        double d = bvh.closest(p).distance;
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(points.points.size()));
}

double psnr(const Mesh& reconstructed, const Mesh& reference) {
    TriangleBvh to_ref(reference);
    TriangleBvh to_rec(reconstructed);
    double sum = 0;
    size_t n = 0;
    for (const auto& v : reconstructed.vertices) {
        double d = to_ref.closest(v).distance;
        sum += d * d;
        ++n;
    }
    for (const auto& v : reference.vertices) {
        double d = to_rec.closest(v).distance;
        sum += d * d;
        ++n;
    }
    double rms = std::sqrt(sum / static_cast<double>(n));
    double peak = reference.bounds().diagonal();
    if (rms <= 0) return kPsnrCap;
    return std::min(kPsnrCap, 20.0 * std::log10(peak / rms));
}

double vertex_rmse(const Mesh& reconstructed, const Mesh& reference,
                   const std::vector<int>& indices) {
    if (indices.empty()) return 0;
    double sum = 0;
    for (int i : indices) sum += norm2(reconstructed.vertices[i] - reference.vertices[i]);
    // per-coordinate RMSE: every x/y/z deviation counts as one sample
    return std::sqrt(sum / (3.0 * static_cast<double>(indices.size())));
}

}  // namespace patchquilt
