#include "patchquilt/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>

#include "patchquilt/bvh.hpp"
#include "patchquilt/errors.hpp"
#include "patchquilt/parallel.hpp"
#include "patchquilt/quadrangulate.hpp"
#include "patchquilt/sampling.hpp"

namespace patchquilt {

PatchParams PipelineParams::patch_params() const {
    PatchParams pp;
    pp.radius = radius();
    pp.grid_resolution = grid_resolution;
    pp.overlap_level = overlap_level;
    return pp;
}

double PipelineParams::sample_density() const {
    double bin = patch_params().bin_size();
    return samples_per_bin / (bin * bin);
}

namespace {

/// Donor density ~ one vertex per 1-2 bins along a quad edge.
int donor_level(const PipelineParams& params) {
    int n2 = params.grid_resolution * params.grid_resolution;
    int level = static_cast<int>(std::ceil(std::log(n2 / 4.0) / std::log(4.0)));
    return std::clamp(level, 1, 4);
}

Eigen::VectorXd patch_signal(const Patch& patch) {
    Eigen::VectorXd x(patch.heights.size());
    for (size_t i = 0; i < patch.heights.size(); ++i) x(i) = patch.heights[i];
    return x;
}

/// Fills masked bins with the mean of their observed 8-neighborhood,
/// frontier-first, so small sampling gaps do not disqualify a patch.
void inpaint_patch(Patch& patch, int n) {
    bool changed = true;
    while (changed) {
        changed = false;
        Patch snapshot = patch;
        for (int by = 0; by < n; ++by)
            for (int bx = 0; bx < n; ++bx) {
                int idx = by * n + bx;
                if (snapshot.mask[idx]) continue;
                double sum = 0;
                int count = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int x = bx + dx, y = by + dy;
                        if (x < 0 || y < 0 || x >= n || y >= n) continue;
                        int j = y * n + x;
                        if (!snapshot.mask[j]) continue;
                        sum += snapshot.heights[j];
                        ++count;
                    }
                if (count == 0) continue;
                patch.heights[idx] = sum / count;
                patch.mask[idx] = 1;
                changed = true;
            }
    }
}

void check_dictionary_match(const Dictionary& dict, const PatchParams& pp) {
    if (dict.grid_resolution != pp.grid_resolution)
        throw GeometryError("dictionary grid resolution " +
                            std::to_string(dict.grid_resolution) + " != requested " +
                            std::to_string(pp.grid_resolution));
    if (std::abs(dict.patch_radius - pp.radius) > 1e-9 * std::max(1.0, pp.radius))
        throw GeometryError("dictionary patch radius " + std::to_string(dict.patch_radius) +
                            " != requested " + std::to_string(pp.radius));
}

/// Sparse-codes every patch; fully observed ones with plain OMP, partial ones
/// with masked OMP, patches below the observed-fraction floor are skipped.
void encode_patches(const PatchSet& ps, const Dictionary& dict, const PipelineParams& params,
                    std::vector<SparseCode>& codes, std::vector<uint8_t>& skipped) {
    const int bins = ps.params.bin_count();
    codes.resize(ps.patches.size());
    skipped.assign(ps.patches.size(), 0);
    parallel_for(ps.patches.size(), [&](size_t i) {
        const Patch& patch = ps.patches[i];
        int observed = patch.observed_count();
        if (observed < params.min_observed_fraction * bins) {
            skipped[i] = 1;
            return;
        }
        Eigen::VectorXd x = patch_signal(patch);
        if (observed == bins) {
            codes[i] = omp_encode(x, dict, params.sparsity);
        } else {
            // fewer observations support fewer atoms: scale the sparsity with
            // the observed fraction so the rim is not overfit and the hidden
            // bins extrapolate smoothly
            int k = std::max(1, static_cast<int>(std::lround(
                                    params.sparsity * double(observed) / bins)));
            codes[i] = masked_omp_encode(x, patch.mask, dict, k);
        }
    });
}

/// Decoded patches: heights = D*y with a full mask (the donor limits which
/// bins are read); skipped patches stay fully masked.
PatchSet decode_patches(const SeedSet& seeds, const std::vector<SparseCode>& codes,
                        const std::vector<uint8_t>& skipped, const Dictionary& dict,
                        const PatchParams& pp) {
    PatchSet ps;
    ps.params = pp;
    ps.settings = seeds;
    ps.patches.resize(seeds.size());
    parallel_for(seeds.size(), [&](size_t i) {
        Patch& patch = ps.patches[i];
        patch.seed_id = static_cast<int>(i);
        patch.heights.assign(pp.bin_count(), 0.0);
        patch.mask.assign(pp.bin_count(), skipped[i] ? 0 : 1);
        if (skipped[i]) return;
        Eigen::VectorXd x = reconstruct_signal(dict, codes[i]);
        for (int b = 0; b < pp.bin_count(); ++b) patch.heights[b] = x(b);
    });
    return ps;
}

}  // namespace

ShapeScaffold scaffold_from_quads(const QuadMesh& qm, const PipelineParams& params) {
    ShapeScaffold s;
    s.quad_mesh = qm;
    s.frames = quad_frames(qm);
    s.donor = subdivide_quad_mesh(qm, donor_level(params));
    TriangleBvh bvh(s.donor);
    s.seeds = seed_points_with_offsets(qm, s.frames, params.overlap_level, &bvh);
    return s;
}

ShapeScaffold build_scaffold(const Mesh& proxy, const PipelineParams& params) {
    return scaffold_from_quads(quadrangulate(proxy, params.quad_length), params);
}

std::array<uint8_t, 32> dictionary_hash(const Dictionary& dict) {
    auto bytes = dict_bytes(dict);
    std::array<uint8_t, 32> hash{};
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), hash.data(), &len, EVP_sha256(), nullptr);
    return hash;
}

std::string hash_hex(const std::array<uint8_t, 32>& hash) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (uint8_t b : hash) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

Dictionary learn_dictionary(const std::vector<Mesh>& meshes, DictProvenance scope,
                            const PipelineParams& params, const LearnConfig& config,
                            std::vector<double>* objective_trace) {
    if (meshes.empty()) throw GeometryError("no training meshes");
    if (scope == DictProvenance::Local && meshes.size() != 1)
        throw GeometryError("local dictionary requires exactly one mesh");
    PatchParams pp = params.patch_params();
    const int bins = pp.bin_count();

    std::vector<Eigen::VectorXd> signals;
    for (const Mesh& mesh : meshes) {
        bool damaged = !mesh.all_valid();
        Mesh proxy = damaged ? fill_invalid_from_neighbors(mesh) : mesh;
        proxy = laplacian_smooth(proxy, params.smoothing_iterations);
        ShapeScaffold s = build_scaffold(proxy, params);

        // sample only faces whose vertices are all observed
        Mesh observed = mesh;
        if (damaged) {
            observed.faces.clear();
            for (const auto& t : mesh.faces)
                if (mesh.is_valid_vertex(t[0]) && mesh.is_valid_vertex(t[1]) &&
                    mesh.is_valid_vertex(t[2]))
                    observed.faces.push_back(t);
        }
        PointCloud cloud = sample_surface_points(observed, params.sample_density(), params.seed);
        PatchSet ps = extract_patch_set(cloud, s.seeds, pp);
        // Random surface sampling leaves a few empty bins even over fully
        // observed regions; train on patches at least 90% observed and fill
        // the stragglers from their bin neighborhoods. A damaged mesh loses
        // every face touching an invalid vertex, so its patches are far
        // sparser; accept 40% there and lean on the neighborhood fill.
        const int train_floor = static_cast<int>(std::ceil((damaged ? 0.4 : 0.9) * bins));
        for (const Patch& patch : ps.patches) {
            int observed = patch.observed_count();
            if (observed < train_floor) continue;
            if (observed == bins) {
                signals.push_back(patch_signal(patch));
                continue;
            }
            Patch filled = patch;
            inpaint_patch(filled, pp.grid_resolution);
            if (filled.observed_count() == bins) signals.push_back(patch_signal(filled));
        }
    }
    if (static_cast<int>(signals.size()) < config.atom_count)
        throw GeometryError("only " + std::to_string(signals.size()) +
                            " usable training patches for " +
                            std::to_string(config.atom_count) + " atoms");
    if (params.max_training_signals > 0 &&
        static_cast<int>(signals.size()) > params.max_training_signals) {
        std::mt19937_64 rng(params.seed);
        std::shuffle(signals.begin(), signals.end(), rng);
        signals.resize(params.max_training_signals);
    }

    Eigen::MatrixXd X(bins, signals.size());
    for (size_t i = 0; i < signals.size(); ++i) X.col(i) = signals[i];
    Dictionary dict = ksvd_learn(X, config, objective_trace);
    dict.grid_resolution = pp.grid_resolution;
    dict.patch_radius = pp.radius;
    dict.provenance = scope;
    return dict;
}

EncodedShape encode_shape(const Mesh& mesh, const Dictionary& dict,
                          const PipelineParams& params) {
    PatchParams pp = params.patch_params();
    check_dictionary_match(dict, pp);
    Mesh proxy = laplacian_smooth(mesh, params.smoothing_iterations);
    ShapeScaffold s = build_scaffold(proxy, params);
    PointCloud cloud = sample_surface_points(mesh, params.sample_density(), params.seed);
    PatchSet ps = extract_patch_set(cloud, s.seeds, pp);

    EncodedShape enc;
    enc.quad_mesh = s.quad_mesh;
    enc.params = pp;
    enc.dictionary_hash = dictionary_hash(dict);
    encode_patches(ps, dict, params, enc.codes, enc.skipped);
    return enc;
}

Mesh decode_shape(const EncodedShape& enc, const Dictionary& dict,
                  const PipelineParams& params) {
    if (enc.dictionary_hash != dictionary_hash(dict))
        throw HashMismatchError("dictionary hash does not match the encoded shape");
    PipelineParams p = params;
    p.grid_resolution = enc.params.grid_resolution;
    p.patch_radius = enc.params.radius;
    p.overlap_level = enc.params.overlap_level;
    ShapeScaffold s = scaffold_from_quads(enc.quad_mesh, p);
    if (s.seeds.size() != enc.codes.size())
        throw GeometryError("encoded shape has " + std::to_string(enc.codes.size()) +
                            " codes but the quad mesh yields " +
                            std::to_string(s.seeds.size()) + " seeds");
    PatchSet ps = decode_patches(s.seeds, enc.codes, enc.skipped, dict, enc.params);
    VertexBinMap map = build_vertex_bin_map(s.donor, s.seeds, enc.params);
    return reconstruct_mesh(ps, map, s.donor.faces, &s.donor.vertices);
}

Mesh recover_missing_vertices(const Mesh& flagged, const Dictionary& dict,
                              const PipelineParams& params) {
    PatchParams pp = params.patch_params();
    check_dictionary_match(dict, pp);
    bool damaged = !flagged.all_valid();
    Mesh filled = damaged ? fill_invalid_from_neighbors(flagged) : flagged;
    Mesh proxy = laplacian_smooth(filled, params.smoothing_iterations);
    ShapeScaffold s = build_scaffold(proxy, params);

    PointCloud cloud;
    for (int v = 0; v < flagged.vertex_count(); ++v)
        if (flagged.is_valid_vertex(v)) cloud.points.push_back(flagged.vertices[v]);
    PatchSet ps = extract_patch_set(cloud, s.seeds, pp);

    std::vector<SparseCode> codes;
    std::vector<uint8_t> skipped;
    encode_patches(ps, dict, params, codes, skipped);
    PatchSet decoded = decode_patches(s.seeds, codes, skipped, dict, pp);

    // map donor: observed vertices at their positions, missing ones at the
    // neighbor-initialized estimate
    Mesh donor = flagged;
    donor.vertices = filled.vertices;
    for (int v = 0; v < flagged.vertex_count(); ++v)
        if (flagged.is_valid_vertex(v)) donor.vertices[v] = flagged.vertices[v];
    VertexBinMap map = build_vertex_bin_map(donor, s.seeds, pp);
    Mesh out = reconstruct_mesh(decoded, map, flagged.faces, &donor.vertices);
    out.valid.clear();
    return out;
}

Mesh fill_holes(const Mesh& damaged, const Dictionary& dict, const PipelineParams& params,
                std::vector<int>* inserted) {
    PatchParams pp = params.patch_params();
    check_dictionary_match(dict, pp);

    HoleSpec holes = detect_holes(damaged);
    for (const auto& loop : holes.loops) {
        double diameter = 0;
        for (size_t a = 0; a < loop.size(); ++a)
            for (size_t b = a + 1; b < loop.size(); ++b)
                diameter = std::max(diameter,
                                    norm(damaged.vertices[loop[a]] - damaged.vertices[loop[b]]));
        if (diameter > pp.side())
            std::cerr << "warning: hole of diameter " << diameter
                      << " exceeds the patch side " << pp.side() << "\n";
    }

    std::vector<int> local_inserted;
    Mesh closed = damaged;
    for (const auto& loop : holes.loops) closed = triangulate_hole(closed, loop, &local_inserted);
    if (inserted) *inserted = local_inserted;

    Mesh proxy = laplacian_smooth(closed, params.smoothing_iterations);
    ShapeScaffold s = build_scaffold(proxy, params);
    // sample only the original faces so masks reflect the unobserved regions
    PointCloud cloud = sample_surface_points(damaged, params.sample_density(), params.seed);
    PatchSet ps = extract_patch_set(cloud, s.seeds, pp);

    std::vector<SparseCode> codes;
    std::vector<uint8_t> skipped;
    encode_patches(ps, dict, params, codes, skipped);
    PatchSet decoded = decode_patches(s.seeds, codes, skipped, dict, pp);
    VertexBinMap map = build_vertex_bin_map(closed, s.seeds, pp);
    return reconstruct_mesh(decoded, map, closed.faces, &closed.vertices);
}

Mesh denoise(const Mesh& noisy, const Dictionary& dict, const PipelineParams& params) {
    return decode_shape(encode_shape(noisy, dict, params), dict, params);
}

int64_t mesh_entities(const Mesh& mesh) {
    return 3 * int64_t(mesh.face_count()) + mesh.vertex_count();
}

int64_t quad_entities(const QuadMesh& qm) {
    return 4 * int64_t(qm.quad_count()) + qm.vertex_count();
}

int64_t patch_entities(const EncodedShape& enc, int sparsity) {
    return int64_t(sparsity) * int64_t(enc.codes.size()) + quad_entities(enc.quad_mesh);
}

namespace {

constexpr uint32_t kShapeVersion = 1;
constexpr uint16_t kSkippedSentinel = 0xFFFF;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ParseError("truncated shape file: " + path);
    return value;
}

}  // namespace

void save_encoded_shape(const EncodedShape& enc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("ESHP", 4);
    write_raw(out, kShapeVersion);
    out.write(reinterpret_cast<const char*>(enc.dictionary_hash.data()), 32);
    write_raw(out, uint32_t(enc.quad_mesh.vertex_count()));
    write_raw(out, uint32_t(enc.quad_mesh.quad_count()));
    for (const Vec3& v : enc.quad_mesh.vertices) {
        write_raw(out, v.x);
        write_raw(out, v.y);
        write_raw(out, v.z);
    }
    for (const auto& q : enc.quad_mesh.quads)
        for (int i : q) write_raw(out, uint32_t(i));
    write_raw(out, uint32_t(enc.params.grid_resolution));
    write_raw(out, double(enc.params.radius));
    write_raw(out, uint32_t(enc.params.overlap_level));
    write_raw(out, uint32_t(enc.codes.size()));
    for (size_t i = 0; i < enc.codes.size(); ++i) {
        if (enc.skipped[i]) {
            write_raw(out, kSkippedSentinel);
            continue;
        }
        const SparseCode& code = enc.codes[i];
        write_raw(out, uint16_t(code.support.size()));
        for (size_t t = 0; t < code.support.size(); ++t) {
            write_raw(out, uint32_t(code.support[t]));
            write_raw(out, float(code.coefficients[t]));
        }
    }
    if (!out) throw IoError("write failure on " + path);
}

EncodedShape load_encoded_shape(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ESHP", 4) != 0)
        throw ParseError("bad magic in shape file " + path);
    if (read_raw<uint32_t>(in, path) != kShapeVersion)
        throw ParseError("unsupported shape version in " + path);
    EncodedShape enc;
    in.read(reinterpret_cast<char*>(enc.dictionary_hash.data()), 32);
    if (!in) throw ParseError("truncated shape file: " + path);
    uint32_t nv = read_raw<uint32_t>(in, path);
    uint32_t nq = read_raw<uint32_t>(in, path);
    enc.quad_mesh.vertices.resize(nv);
    for (Vec3& v : enc.quad_mesh.vertices) {
        v.x = read_raw<double>(in, path);
        v.y = read_raw<double>(in, path);
        v.z = read_raw<double>(in, path);
    }
    enc.quad_mesh.quads.resize(nq);
    for (auto& q : enc.quad_mesh.quads)
        for (int& i : q) i = static_cast<int>(read_raw<uint32_t>(in, path));
    enc.params.grid_resolution = static_cast<int>(read_raw<uint32_t>(in, path));
    enc.params.radius = read_raw<double>(in, path);
    enc.params.overlap_level = static_cast<int>(read_raw<uint32_t>(in, path));
    uint32_t count = read_raw<uint32_t>(in, path);
    enc.codes.resize(count);
    enc.skipped.assign(count, 0);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t size = read_raw<uint16_t>(in, path);
        if (size == kSkippedSentinel) {
            enc.skipped[i] = 1;
            continue;
        }
        enc.codes[i].support.resize(size);
        enc.codes[i].coefficients.resize(size);
        for (uint16_t t = 0; t < size; ++t) {
            enc.codes[i].support[t] = static_cast<int>(read_raw<uint32_t>(in, path));
            enc.codes[i].coefficients[t] = read_raw<float>(in, path);
        }
    }
    enc.quad_mesh.validate();
    return enc;
}

}  // namespace patchquilt
