#include "patchquilt/shapes.hpp"

#include <cmath>
#include <map>
#include <random>

#include "patchquilt/resample.hpp"

namespace patchquilt {

Mesh make_grid(int nx, int ny, double width, double height) {
    Mesh mesh;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.vertices.push_back({width * i / nx, height * j / ny, 0});
    auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            mesh.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            mesh.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    return mesh;
}

Mesh make_icosphere(int subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Mesh mesh;
    mesh.vertices = {{-1, t, 0},  {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                     {0, -1, t},  {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                     {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                  {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                  {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) mesh = midpoint_subdivide(mesh);
    for (auto& v : mesh.vertices) v = normalized(v) * radius;
    return mesh;
}

Mesh make_cube_surface(int n) {
    Mesh mesh;
    std::map<std::array<long long, 3>, int> dedup;
    auto vid = [&](double x, double y, double z) {
        std::array<long long, 3> key{std::llround(x * 1e9), std::llround(y * 1e9),
                                     std::llround(z * 1e9)};
        auto it = dedup.find(key);
        if (it != dedup.end()) return it->second;
        int idx = mesh.vertex_count();
        mesh.vertices.push_back({x, y, z});
        dedup.emplace(key, idx);
        return idx;
    };
    // u/v axes per face, fixed coordinate last
    struct Face {
        int axis;
        double value;
        bool flip;
    };
    const Face sides[6] = {{0, 0, true}, {0, 1, false}, {1, 0, false},
                           {1, 1, true}, {2, 0, true},  {2, 1, false}};
    for (const auto& side : sides) {
        int ua = (side.axis + 1) % 3, va = (side.axis + 2) % 3;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                auto corner = [&](int di, int dj) {
                    double c[3];
                    c[side.axis] = side.value;
                    c[ua] = double(i + di) / n;
                    c[va] = double(j + dj) / n;
                    return vid(c[0], c[1], c[2]);
                };
                int a = corner(0, 0), b = corner(1, 0), c = corner(1, 1), d = corner(0, 1);
                if (side.flip) {
                    mesh.faces.push_back({a, c, b});
                    mesh.faces.push_back({a, d, c});
                } else {
                    mesh.faces.push_back({a, b, c});
                    mesh.faces.push_back({a, c, d});
                }
            }
    }
    return mesh;
}

Mesh make_torus(double R, double r, int nu, int nv) {
    Mesh mesh;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            double u = 2 * M_PI * i / nu, v = 2 * M_PI * j / nv;
            mesh.vertices.push_back({(R + r * std::cos(v)) * std::cos(u),
                                     (R + r * std::cos(v)) * std::sin(u), r * std::sin(v)});
        }
    auto vid = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            mesh.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            mesh.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    return mesh;
}

Mesh make_displaced_sphere(double radius, double amplitude, double frequency,
                           int subdivisions) {
    Mesh mesh = make_icosphere(subdivisions, 1.0);
    for (auto& v : mesh.vertices) {
        Vec3 u = normalized(v);
        double d = amplitude * std::sin(frequency * u.x) * std::cos(frequency * u.y);
        v = u * (radius + d);
    }
    return mesh;
}

Mesh make_displaced_torus(double R, double r, double amplitude, double frequency,
                          int nu, int nv) {
    Mesh mesh = make_torus(R, r, nu, nv);
    auto normals = mesh.vertex_normals();
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        Vec3 u = normalized(mesh.vertices[i]);
        double d = amplitude * std::sin(frequency * u.x) * std::cos(frequency * u.y);
        mesh.vertices[i] += normals[i] * d;
    }
    return mesh;
}

Mesh add_gaussian_noise(const Mesh& mesh, double sigma, uint64_t seed) {
    Mesh out = mesh;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (auto& v : out.vertices) {
        double dx = gauss(rng), dy = gauss(rng), dz = gauss(rng);
        v += {dx, dy, dz};
    }
    return out;
}

Mesh apply_rigid(const Mesh& mesh, const Mat3& rotation, const Vec3& translation) {
    Mesh out = mesh;
    for (auto& v : out.vertices) v = rotation * v + translation;
    return out;
}

}  // namespace patchquilt
