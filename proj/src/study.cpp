#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "patchquilt/damage.hpp"
#include "patchquilt/errors.hpp"
#include "patchquilt/metrics.hpp"
#include "patchquilt/pipeline.hpp"

namespace patchquilt {

namespace {

double decode_error(const Mesh& mesh, const Dictionary& dict, const PipelineParams& params) {
    Mesh decoded = decode_shape(encode_shape(mesh, dict, params), dict, params);
    PointCloud cloud;
    cloud.points = decoded.vertices;
    return cloud_to_mesh_error(cloud, mesh);
}

std::string atoms_curve(const std::vector<Mesh>& corpus, const PipelineParams& params,
                        const LearnConfig& config) {
    std::ostringstream csv;
    csv << "study,mesh,atoms,error\n";
    for (size_t m = 0; m < corpus.size(); ++m)
        for (int p : {5, 10, 25, 50, 100}) {
            LearnConfig cfg = config;
            cfg.atom_count = p;
            cfg.sparsity = std::min(config.sparsity, p);
            Dictionary dict =
                learn_dictionary({corpus[m]}, DictProvenance::Local, params, cfg);
            double err = decode_error(corpus[m], dict, params);
            csv << "atoms-curve," << m << "," << p << "," << err << "\n";
            std::cerr << "atoms-curve mesh " << m << " p=" << p << " error=" << err << "\n";
        }
    return csv.str();
}

std::string local_vs_global(const std::vector<Mesh>& corpus, const PipelineParams& params,
                            const LearnConfig& config) {
    if (corpus.size() < 2) throw GeometryError("local-vs-global study needs >= 2 meshes");
    Dictionary global = learn_dictionary(corpus, DictProvenance::Global, params, config);
    std::ostringstream csv;
    csv << "study,mesh,atoms,error_local,error_global\n";
    for (size_t m = 0; m < corpus.size(); ++m) {
        Dictionary local =
            learn_dictionary({corpus[m]}, DictProvenance::Local, params, config);
        double err_local = decode_error(corpus[m], local, params);
        double err_global = decode_error(corpus[m], global, params);
        csv << "local-vs-global," << m << "," << config.atom_count << "," << err_local << ","
            << err_global << "\n";
        std::cerr << "local-vs-global mesh " << m << " local=" << err_local
                  << " global=" << err_global << "\n";
    }
    return csv.str();
}

std::string dataset_size(const std::vector<Mesh>& corpus, const PipelineParams& params,
                         const LearnConfig& config) {
    if (corpus.size() < 2) throw GeometryError("dataset-size study needs >= 2 meshes");
    std::ostringstream csv;
    csv << "study,shapes,atoms,error\n";
    for (size_t k = 1; k <= corpus.size(); ++k) {
        std::vector<Mesh> subset(corpus.begin(), corpus.begin() + k);
        Dictionary dict = learn_dictionary(subset, DictProvenance::Global, params, config);
        double err = decode_error(corpus[0], dict, params);
        csv << "dataset-size," << k << "," << config.atom_count << "," << err << "\n";
        std::cerr << "dataset-size shapes=" << k << " error=" << err << "\n";
    }
    return csv.str();
}

/// Mean distance to `reference` of output vertices within the hole radii of
/// the punched centers.
double hole_region_error(const Mesh& output, const Mesh& reference,
                         const std::vector<Vec3>& centers, double hole_radius) {
    PointCloud region;
    for (const Vec3& v : output.vertices)
        for (const Vec3& c : centers)
            if (norm(v - c) <= hole_radius) {
                region.points.push_back(v);
                break;
            }
    if (region.points.empty()) return 0;
    return cloud_to_mesh_error(region, reference);
}

std::string holesize_curve(const std::vector<Mesh>& corpus, const PipelineParams& params,
                           const LearnConfig& config) {
    const Mesh& mesh = corpus.front();
    Dictionary dict = learn_dictionary({mesh}, DictProvenance::Local, params, config);
    double side = params.patch_params().side();
    std::ostringstream csv;
    csv << "study,ratio,error_fill,error_baseline\n";
    for (double ratio : {0.3, 0.5, 0.8}) {
        double diameter = ratio * side;
        PunchResult punched = punch_holes(mesh, diameter, 6 * side, params.seed);
        Mesh ours = fill_holes(punched.damaged, dict, params);
        Mesh baseline = close_holes_geometric(punched.damaged);
        double err_ours = hole_region_error(ours, mesh, punched.centers, diameter / 2);
        double err_base = hole_region_error(baseline, mesh, punched.centers, diameter / 2);
        csv << "holesize-curve," << ratio << "," << err_ours << "," << err_base << "\n";
        std::cerr << "holesize-curve ratio=" << ratio << " fill=" << err_ours
                  << " baseline=" << err_base << "\n";
    }
    return csv.str();
}

}  // namespace

std::string run_study(const std::string& study, const std::vector<Mesh>& corpus,
                      const PipelineParams& params, const LearnConfig& config,
                      const std::string& csv_path) {
    if (corpus.empty()) throw GeometryError("study corpus is empty");
    std::string csv;
    if (study == "atoms-curve")
        csv = atoms_curve(corpus, params, config);
    else if (study == "local-vs-global")
        csv = local_vs_global(corpus, params, config);
    else if (study == "dataset-size")
        csv = dataset_size(corpus, params, config);
    else if (study == "holesize-curve")
        csv = holesize_curve(corpus, params, config);
    else
        throw GeometryError("unknown study: " + study);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw IoError("cannot write " + csv_path);
        out << csv;
    }
    return csv;
}

}  // namespace patchquilt
