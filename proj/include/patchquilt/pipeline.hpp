#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "patchquilt/frames.hpp"
#include "patchquilt/mesh.hpp"
#include "patchquilt/patch.hpp"
#include "patchquilt/quadmesh.hpp"
#include "patchquilt/sparse.hpp"

namespace patchquilt {

struct PipelineParams {
    double quad_length = 0.03;
    int grid_resolution = 16;
    double patch_radius = 0;  // 0 = auto: quad_length * 0.73
    int overlap_level = 1;
    int sparsity = 20;
    int smoothing_iterations = 30;
    /// Surface sampling density is chosen to land this many points in an
    /// average bin.
    double samples_per_bin = 3.0;
    /// Patches with fewer observed bins than this fraction are skipped; their
    /// vertices resolve through neighboring patches or the 1-ring fill.
    double min_observed_fraction = 0.25;
    /// Dictionary learning subsamples the pooled training patches down to this
    /// many signals (seeded). 0 disables the cap.
    int max_training_signals = 20000;
    uint64_t seed = 1;

    double radius() const { return patch_radius > 0 ? patch_radius : quad_length * 0.73; }
    PatchParams patch_params() const;
    double sample_density() const;  // points per unit area
};

/// Quadrangulation scaffold shared by every pipeline stage: smoothed proxy,
/// quad mesh, frames, seeds (offset seeds reprojected onto the subdivided
/// quad mesh so they are reproducible from the quad mesh alone), and the
/// subdivided quad mesh used as reconstruction donor.
struct ShapeScaffold {
    QuadMesh quad_mesh;
    std::vector<ReferenceFrame> frames;
    SeedSet seeds;
    Mesh donor;  // triangulated subdivision of the quad mesh
};

/// Builds the scaffold from an already-smoothed proxy mesh.
ShapeScaffold scaffold_from_quads(const QuadMesh& qm, const PipelineParams& params);
ShapeScaffold build_scaffold(const Mesh& proxy, const PipelineParams& params);

struct EncodedShape {
    QuadMesh quad_mesh;
    PatchParams params;
    std::vector<SparseCode> codes;   // one per seed
    std::vector<uint8_t> skipped;    // one per seed, 1 = patch not encoded
    std::array<uint8_t, 32> dictionary_hash{};
};

std::array<uint8_t, 32> dictionary_hash(const Dictionary& dict);
std::string hash_hex(const std::array<uint8_t, 32>& hash);

/// Pools patches over all inputs (each mesh gets its own quadrangulation),
/// keeps only fully observed ones, and runs dictionary learning on them.
/// scope Local requires exactly one mesh. Throws when fewer clean patches
/// than atoms are available.
Dictionary learn_dictionary(const std::vector<Mesh>& meshes, DictProvenance scope,
                            const PipelineParams& params, const LearnConfig& config,
                            std::vector<double>* objective_trace = nullptr);

EncodedShape encode_shape(const Mesh& mesh, const Dictionary& dict,
                          const PipelineParams& params);
Mesh decode_shape(const EncodedShape& enc, const Dictionary& dict,
                  const PipelineParams& params);

/// Recovers vertices flagged invalid. The proxy comes from valid-neighbor
/// initialization plus smoothing; patches are extracted from the valid
/// vertices and masked-encoded; every vertex of the output is reconstructed
/// through the vertex-bin map on the input connectivity.
Mesh recover_missing_vertices(const Mesh& flagged, const Dictionary& dict,
                              const PipelineParams& params);

struct HoleSpec {
    std::vector<std::vector<int>> loops;  // ordered vertex cycles
};

/// Boundary loops by walking boundary edges; loops start at their lowest
/// vertex id and are listed by that id. Throws on non-manifold boundary.
HoleSpec detect_holes(const Mesh& mesh);

/// Closes one boundary loop: minimum-weight triangulation with
/// (max dihedral, area) lexicographic weights, then refinement splitting
/// oversized interior edges and relaxing inserted vertices by 1-ring
/// averaging. Inserted vertex indices are appended to *inserted when given.
Mesh triangulate_hole(const Mesh& mesh, const std::vector<int>& loop,
                      std::vector<int>* inserted = nullptr);

/// Geometric hole closing only (the comparison baseline for fill_holes).
Mesh close_holes_geometric(const Mesh& damaged, std::vector<int>* inserted = nullptr);

/// Dictionary-based hole filling: triangulate holes, build a fresh scaffold
/// from the smoothed closed mesh, sample only original faces, masked-encode
/// patches overlapping holes, reconstruct on the hole-closed connectivity.
Mesh fill_holes(const Mesh& damaged, const Dictionary& dict, const PipelineParams& params,
                std::vector<int>* inserted = nullptr);

/// Re-expresses every patch of the noisy mesh in the clean dictionary
/// (plain encode/decode composition; local frames absorb global pose).
Mesh denoise(const Mesh& noisy, const Dictionary& dict, const PipelineParams& params);

int64_t mesh_entities(const Mesh& mesh);        // 3*faces + vertices
int64_t quad_entities(const QuadMesh& qm);      // 4*quads + vertices
int64_t patch_entities(const EncodedShape& enc, int sparsity);

/// ESHP file: magic "ESHP", u32 version, 32-byte dictionary hash, quad mesh
/// (u32 nv, u32 nq, f64 xyz, u32x4 quads), u32 N, f64 r, u32 overlap, u32
/// code count, per code u16 support size (0xFFFF = skipped patch) + (u32
/// atom, f32 coefficient) pairs. Little-endian.
void save_encoded_shape(const EncodedShape& enc, const std::string& path);
EncodedShape load_encoded_shape(const std::string& path);

/// Studies: "atoms-curve", "local-vs-global", "dataset-size",
/// "holesize-curve". Writes a CSV (header row included) and returns it as a
/// string.
std::string run_study(const std::string& study, const std::vector<Mesh>& corpus,
                      const PipelineParams& params, const LearnConfig& config,
                      const std::string& csv_path);

}  // namespace patchquilt
