#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "patchquilt/damage.hpp"
#include "patchquilt/errors.hpp"
#include "patchquilt/mesh_io.hpp"
#include "patchquilt/metrics.hpp"
#include "patchquilt/parallel.hpp"
#include "patchquilt/pipeline.hpp"
#include "patchquilt/resample.hpp"

using json = nlohmann::json;
using namespace patchquilt;

namespace {

struct GlobalOpts {
    PipelineParams params;
    LearnConfig learn;
    int threads = -1;  // -1: PATCHQUILT_THREADS or hardware
    bool json_output = false;
};

void emit(const GlobalOpts& g, const json& machine, const std::string& human) {
    if (g.json_output)
        std::cout << machine.dump(2) << "\n";
    else
        std::cout << human;
}

void apply_threads(const GlobalOpts& g) {
    int threads = g.threads;
    if (threads < 0) {
        const char* env = std::getenv("PATCHQUILT_THREADS");
        threads = env ? std::atoi(env) : 0;
    }
    set_thread_count(threads < 0 ? 0 : threads);
}

void save_normalize_record(const NormalizeRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[160];
    std::snprintf(buf, sizeof buf, "scale %.17g\noffset %.17g %.17g %.17g\n", rec.scale,
                  rec.offset.x, rec.offset.y, rec.offset.z);
    out << buf;
}

NormalizeRecord load_normalize_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    NormalizeRecord rec;
    std::string key;
    if (!(in >> key >> rec.scale) || key != "scale")
        throw ParseError(path + ": expected 'scale <value>'");
    if (!(in >> key >> rec.offset.x >> rec.offset.y >> rec.offset.z) || key != "offset")
        throw ParseError(path + ": expected 'offset <x> <y> <z>'");
    return rec;
}

DictProvenance parse_scope(const std::string& scope) {
    if (scope == "local") return DictProvenance::Local;
    if (scope == "global") return DictProvenance::Global;
    if (scope == "self-similar") return DictProvenance::SelfSimilar;
    throw ParseError("unknown scope: " + scope);
}

std::string scope_name(DictProvenance p) {
    switch (p) {
        case DictProvenance::Local: return "local";
        case DictProvenance::Global: return "global";
        default: return "self-similar";
    }
}

std::vector<Mesh> load_meshes(const std::vector<std::string>& paths) {
    std::vector<Mesh> meshes;
    for (const auto& p : paths) meshes.push_back(load_mesh(p));
    return meshes;
}

int run(int argc, char** argv) {
    CLI::App app{"patchquilt: mesh patch-dictionary codec"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config")->configurable(false);

    GlobalOpts g;
    app.parse_complete_callback([&] { apply_threads(g); });
    app.add_flag("--json", g.json_output, "machine-readable output")->configurable(true);
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
    app.add_option("--seed", g.params.seed, "random seed");
    app.add_option("--quad-length", g.params.quad_length, "target quad edge length");
    app.add_option("--grid-resolution", g.params.grid_resolution, "bins per patch side");
    app.add_option("--patch-radius", g.params.patch_radius,
                   "patch radius (0 = quad length x 0.73)");
    app.add_option("--overlap", g.params.overlap_level, "seed offset rings per quad");
    app.add_option("--sparsity", g.params.sparsity, "atoms per patch code");
    app.add_option("--smooth-iters", g.params.smoothing_iterations,
                   "proxy smoothing iterations");
    app.add_option("--samples-per-bin", g.params.samples_per_bin,
                   "surface sampling density per bin");
    app.add_option("--min-observed", g.params.min_observed_fraction,
                   "observed-bin fraction below which patches are skipped");
    app.add_option("--max-train", g.params.max_training_signals,
                   "training patch cap for learning (0 = all)");
    app.add_option("--atoms", g.learn.atom_count, "dictionary size");
    app.add_option("--iterations", g.learn.iterations, "dictionary learning iterations");
    app.add_option("--tol", g.learn.convergence_tol, "learning early-stop tolerance");

    // normalize
    auto* cmd_norm = app.add_subcommand("normalize", "fit a mesh into the unit cube");
    std::string in_path, out_path, record_path, dict_path, ref_path;
    int target_vertices = 0;
    bool denorm = false;
    cmd_norm->add_option("input", in_path)->required();
    cmd_norm->add_option("--out", out_path)->required();
    cmd_norm->add_option("--record", record_path, "inversion record path (default <out>.norm)");
    cmd_norm->add_option("--target-vertices", target_vertices, "resample to this vertex count");
    cmd_norm->add_flag("--denormalize", denorm, "apply the inverse of --record instead");
    cmd_norm->callback([&] {
        Mesh mesh = load_mesh(in_path);
        if (denorm) {
            if (record_path.empty()) throw ParseError("--denormalize requires --record");
            NormalizeRecord rec = load_normalize_record(record_path);
            Mesh out = denormalize(mesh, rec);
            save_mesh(out, out_path);
            emit(g, {{"output", out_path}, {"vertices", out.vertex_count()}},
                 "denormalized " + std::to_string(out.vertex_count()) + " vertices -> " +
                     out_path + "\n");
            return;
        }
        NormalizeRecord rec;
        Mesh out = normalize_unit_cube(mesh, &rec);
        if (target_vertices > 0) out = resample_to_resolution(out, target_vertices);
        std::string rp = record_path.empty() ? out_path + ".norm" : record_path;
        save_mesh(out, out_path);
        save_normalize_record(rec, rp);
        emit(g,
             {{"output", out_path},
              {"record", rp},
              {"vertices", out.vertex_count()},
              {"faces", out.face_count()},
              {"scale", rec.scale},
              {"offset", {rec.offset.x, rec.offset.y, rec.offset.z}}},
             "normalized " + std::to_string(out.vertex_count()) + " vertices -> " + out_path +
                 " (record " + rp + ")\n");
    });

    // punch
    auto* cmd_punch = app.add_subcommand("punch", "damage fixtures: holes or missing flags");
    double hole_diameter = 0, hole_spacing = 0, missing_ratio = -1;
    cmd_punch->add_option("input", in_path)->required();
    cmd_punch->add_option("--out", out_path)->required();
    cmd_punch->add_option("--hole-diameter", hole_diameter);
    cmd_punch->add_option("--spacing", hole_spacing, "geodesic spacing between hole centers");
    cmd_punch->add_option("--missing-ratio", missing_ratio,
                          "flag this fraction of vertices invalid instead of cutting holes");
    cmd_punch->callback([&] {
        Mesh mesh = load_mesh(in_path);
        if (missing_ratio >= 0) {
            Mesh out = mark_missing_vertices(mesh, missing_ratio, g.params.seed);
            save_mesh(out, out_path);
            int flagged = 0;
            for (int v = 0; v < out.vertex_count(); ++v)
                if (!out.is_valid_vertex(v)) ++flagged;
            emit(g, {{"output", out_path}, {"flagged", flagged}},
                 "flagged " + std::to_string(flagged) + " vertices -> " + out_path + "\n");
            return;
        }
        if (hole_diameter <= 0 || hole_spacing <= 0)
            throw ParseError("punch needs --hole-diameter and --spacing, or --missing-ratio");
        PunchResult result = punch_holes(mesh, hole_diameter, hole_spacing, g.params.seed);
        save_mesh(result.damaged, out_path);
        save_removed_vertices(result.removed, out_path + ".removed");
        json centers = json::array();
        for (const Vec3& c : result.centers) centers.push_back({c.x, c.y, c.z});
        emit(g,
             {{"output", out_path},
              {"removed", out_path + ".removed"},
              {"holes", result.centers.size()},
              {"removed_vertices", result.removed.size()},
              {"centers", centers}},
             "punched " + std::to_string(result.centers.size()) + " holes (" +
                 std::to_string(result.removed.size()) + " vertices) -> " + out_path + "\n");
    });

    // learn
    auto* cmd_learn = app.add_subcommand("learn", "learn a patch dictionary");
    std::vector<std::string> input_paths;
    std::string scope = "local";
    cmd_learn->add_option("inputs", input_paths)->required()->expected(-1);
    cmd_learn->add_option("--scope", scope, "local | global | self-similar");
    cmd_learn->add_option("--out", dict_path)->required();
    cmd_learn->callback([&] {
        LearnConfig cfg = g.learn;
        cfg.seed = g.params.seed;
        cfg.sparsity = std::min(g.params.sparsity, cfg.atom_count);
        cfg.on_iteration = [](int iter, double objective) {
            std::cerr << "iteration " << iter << " objective " << objective << "\n";
        };
        std::vector<double> trace;
        Dictionary dict = learn_dictionary(load_meshes(input_paths), parse_scope(scope),
                                           g.params, cfg, &trace);
        dict_save(dict, dict_path);
        emit(g,
             {{"output", dict_path},
              {"atoms", dict.atom_count()},
              {"signal_dim", dict.signal_dim()},
              {"scope", scope_name(dict.provenance)},
              {"iterations", trace.size()},
              {"objective", trace.empty() ? 0.0 : trace.back()},
              {"hash", hash_hex(dictionary_hash(dict))}},
             "learned " + std::to_string(dict.atom_count()) + "-atom " + scope +
                 " dictionary -> " + dict_path + "\n");
    });

    // encode
    auto* cmd_encode = app.add_subcommand("encode", "encode a mesh against a dictionary");
    cmd_encode->add_option("input", in_path)->required();
    cmd_encode->add_option("--dict", dict_path)->required();
    cmd_encode->add_option("--out", out_path)->required();
    cmd_encode->callback([&] {
        Mesh mesh = load_mesh(in_path);
        Dictionary dict = dict_load(dict_path);
        EncodedShape enc = encode_shape(mesh, dict, g.params);
        save_encoded_shape(enc, out_path);
        emit(g,
             {{"output", out_path},
              {"patches", enc.codes.size()},
              {"quads", enc.quad_mesh.quad_count()},
              {"hash", hash_hex(enc.dictionary_hash)}},
             "encoded " + std::to_string(enc.codes.size()) + " patches over " +
                 std::to_string(enc.quad_mesh.quad_count()) + " quads -> " + out_path + "\n");
    });

    // decode
    auto* cmd_decode = app.add_subcommand("decode", "reconstruct a mesh from an encoding");
    cmd_decode->add_option("input", in_path)->required();
    cmd_decode->add_option("--dict", dict_path)->required();
    cmd_decode->add_option("--out", out_path)->required();
    cmd_decode->callback([&] {
        EncodedShape enc = load_encoded_shape(in_path);
        Dictionary dict = dict_load(dict_path);
        Mesh out = decode_shape(enc, dict, g.params);
        save_mesh(out, out_path);
        emit(g, {{"output", out_path}, {"vertices", out.vertex_count()}, {"faces", out.face_count()}},
             "decoded " + std::to_string(out.vertex_count()) + " vertices -> " + out_path + "\n");
    });

    // recover
    auto* cmd_recover = app.add_subcommand("recover", "recover flagged missing vertices");
    cmd_recover->add_option("input", in_path)->required();
    cmd_recover->add_option("--dict", dict_path)->required();
    cmd_recover->add_option("--out", out_path)->required();
    cmd_recover->add_option("--reference", ref_path, "ground truth for RMSE reporting");
    cmd_recover->callback([&] {
        Mesh flagged = load_mesh(in_path);
        Dictionary dict = dict_load(dict_path);
        Mesh out = recover_missing_vertices(flagged, dict, g.params);
        save_mesh(out, out_path);
        json report = {{"output", out_path}, {"vertices", out.vertex_count()}};
        std::string human =
            "recovered mesh (" + std::to_string(out.vertex_count()) + " vertices) -> " +
            out_path + "\n";
        if (!ref_path.empty()) {
            Mesh reference = load_mesh(ref_path);
            std::vector<int> flagged_ids;
            for (int v = 0; v < flagged.vertex_count(); ++v)
                if (!flagged.is_valid_vertex(v)) flagged_ids.push_back(v);
            double rmse = vertex_rmse(out, reference, flagged_ids);
            report["rmse"] = rmse;
            report["recovered_vertices"] = flagged_ids.size();
            human += "RMSE over " + std::to_string(flagged_ids.size()) +
                     " recovered vertices: " + std::to_string(rmse) + "\n";
        }
        emit(g, report, human);
    });

    // fill
    auto* cmd_fill = app.add_subcommand("fill", "fill holes with the dictionary");
    std::string baseline_path;
    cmd_fill->add_option("input", in_path)->required();
    cmd_fill->add_option("--dict", dict_path)->required();
    cmd_fill->add_option("--out", out_path)->required();
    cmd_fill->add_option("--baseline", baseline_path,
                         "also write the geometric-only fill to this path");
    cmd_fill->callback([&] {
        Mesh damaged = load_mesh(in_path);
        Dictionary dict = dict_load(dict_path);
        std::vector<int> inserted;
        Mesh out = fill_holes(damaged, dict, g.params, &inserted);
        save_mesh(out, out_path);
        if (!baseline_path.empty()) save_mesh(close_holes_geometric(damaged), baseline_path);
        emit(g,
             {{"output", out_path},
              {"inserted_vertices", inserted.size()},
              {"vertices", out.vertex_count()}},
             "filled holes (" + std::to_string(inserted.size()) + " inserted vertices) -> " +
                 out_path + "\n");
    });

    // denoise
    auto* cmd_denoise = app.add_subcommand("denoise", "re-express patches in a clean dictionary");
    cmd_denoise->add_option("input", in_path)->required();
    cmd_denoise->add_option("--dict", dict_path)->required();
    cmd_denoise->add_option("--out", out_path)->required();
    cmd_denoise->callback([&] {
        Mesh noisy = load_mesh(in_path);
        Dictionary dict = dict_load(dict_path);
        Mesh out = denoise(noisy, dict, g.params);
        save_mesh(out, out_path);
        emit(g, {{"output", out_path}, {"vertices", out.vertex_count()}},
             "denoised mesh -> " + out_path + "\n");
    });

    // stats
    auto* cmd_stats = app.add_subcommand("stats", "compression accounting and PSNR");
    cmd_stats->add_option("input", in_path)->required();
    cmd_stats->add_option("--dict", dict_path)->required();
    cmd_stats->callback([&] {
        Mesh mesh = load_mesh(in_path);
        Dictionary dict = dict_load(dict_path);
        EncodedShape enc = encode_shape(mesh, dict, g.params);
        Mesh decoded = decode_shape(enc, dict, g.params);
        MetricsReport report;
        report.mesh_entities = mesh_entities(mesh);
        report.patch_entities = patch_entities(enc, g.params.sparsity);
        report.compression_factor = double(report.mesh_entities) / double(report.patch_entities);
        report.psnr_db = psnr(decoded, mesh);
        PointCloud cloud;
        cloud.points = decoded.vertices;
        report.cloud_to_mesh = cloud_to_mesh_error(cloud, mesh);
        char row[256];
        std::snprintf(row, sizeof row,
                      "mesh_entities %lld patches %zu patch_entities %lld "
                      "compression_factor %.3f psnr_db %.2f mean_error %.6g\n",
                      static_cast<long long>(report.mesh_entities), enc.codes.size(),
                      static_cast<long long>(report.patch_entities), report.compression_factor,
                      report.psnr_db, report.cloud_to_mesh);
        emit(g,
             {{"mesh_entities", report.mesh_entities},
              {"patches", enc.codes.size()},
              {"quad_entities", quad_entities(enc.quad_mesh)},
              {"patch_entities", report.patch_entities},
              {"compression_factor", report.compression_factor},
              {"psnr_db", report.psnr_db},
              {"mean_error", report.cloud_to_mesh}},
             row);
    });

    // study
    auto* cmd_study = app.add_subcommand("study", "evaluation sweeps, CSV output");
    std::string study_name;
    cmd_study->add_option("name", study_name,
                          "atoms-curve | local-vs-global | dataset-size | holesize-curve")
        ->required();
    cmd_study->add_option("inputs", input_paths)->required()->expected(-1);
    cmd_study->add_option("--out", out_path)->required();
    cmd_study->callback([&] {
        LearnConfig cfg = g.learn;
        cfg.seed = g.params.seed;
        cfg.sparsity = std::min(g.params.sparsity, cfg.atom_count);
        std::string csv = run_study(study_name, load_meshes(input_paths), g.params, cfg, out_path);
        emit(g, {{"output", out_path}, {"rows", std::count(csv.begin(), csv.end(), '\n') - 1}},
             csv);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const HashMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const GeometryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
