#include "patchquilt/sampling.hpp"

#include <cmath>
#include <random>

#include "patchquilt/errors.hpp"

namespace patchquilt {

PointCloud sample_surface_points(const Mesh& mesh, double density, uint64_t seed) {
    if (density <= 0) throw GeometryError("sampling density must be positive");
    if (mesh.total_area() <= 0) throw GeometryError("cannot sample a zero-area mesh");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PointCloud cloud;
    for (int f = 0; f < mesh.face_count(); ++f) {
        double expected = density * mesh.face_area(f);
        int count = static_cast<int>(expected);
        if (uni(rng) < expected - count) ++count;  // fractional remainder
        const auto& t = mesh.faces[f];
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        for (int i = 0; i < count; ++i) {
            double su = std::sqrt(uni(rng));
            double v = uni(rng);
            // barycentric: (1-su, su*(1-v), su*v) is uniform on the triangle
            Vec3 p = a * (1 - su) + b * (su * (1 - v)) + c * (su * v);
            cloud.points.push_back(p);
            cloud.source_face.push_back(f);
        }
    }
    return cloud;
}

}  // namespace patchquilt
