#include "patchquilt/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "patchquilt/errors.hpp"
#include "patchquilt/parallel.hpp"

namespace patchquilt {

void Dictionary::validate() const {
    if (!atoms.allFinite()) throw GeometryError("dictionary has non-finite entries");
    for (int j = 0; j < atom_count(); ++j) {
        double n = atoms.col(j).norm();
        if (std::abs(n - 1.0) > 1e-9)
            throw GeometryError("dictionary atom " + std::to_string(j) +
                                " has norm " + std::to_string(n) + ", expected 1");
    }
}

namespace {

/// Greedy OMP over an explicit system matrix. selection_scale[j] divides the
/// correlation with atom j during selection (0 = atom excluded); least squares
/// always uses the unscaled columns.
SparseCode omp_core(const Eigen::MatrixXd& D, const Eigen::VectorXd& x, int k,
                    double residual_tol, const Eigen::VectorXd* selection_scale) {
    const int m = static_cast<int>(D.rows());
    const int p = static_cast<int>(D.cols());
    k = std::min(k, std::min(m, p));
    SparseCode code;
    if (k <= 0 || x.norm() == 0) return code;

    Eigen::VectorXd residual = x;
    Eigen::MatrixXd L(k, k);           // Cholesky of D_S^T D_S
    Eigen::MatrixXd Ds(m, k);          // selected columns
    Eigen::VectorXd dtx(k);            // D_S^T x
    std::vector<uint8_t> used(p, 0);
    Eigen::VectorXd coeffs;

    while (static_cast<int>(code.support.size()) < k && residual.norm() > residual_tol) {
        Eigen::VectorXd corr = D.transpose() * residual;
        int best = -1;
        double best_val = 0;
        for (int j = 0; j < p; ++j) {
            if (used[j]) continue;
            double scale = selection_scale ? (*selection_scale)(j) : 1.0;
            if (scale == 0) continue;
            double val = std::abs(corr(j)) / scale;
            if (val > best_val) {
                best_val = val;
                best = j;
            }
        }
        if (best < 0 || best_val < 1e-12) break;

        int s = static_cast<int>(code.support.size());
        Ds.col(s) = D.col(best);
        dtx(s) = D.col(best).dot(x);
        if (s == 0) {
            L(0, 0) = D.col(best).norm();
        } else {
            Eigen::VectorXd w = Ds.leftCols(s).transpose() * D.col(best);
            Eigen::VectorXd v =
                L.topLeftCorner(s, s).triangularView<Eigen::Lower>().solve(w);
            double diag2 = D.col(best).squaredNorm() - v.squaredNorm();
            if (diag2 <= 1e-12) break;  // atom linearly dependent on support
            L.row(s).head(s) = v.transpose();
            L(s, s) = std::sqrt(diag2);
        }
        used[best] = 1;
        code.support.push_back(best);
        ++s;
        coeffs = L.topLeftCorner(s, s).triangularView<Eigen::Lower>().solve(dtx.head(s));
        L.topLeftCorner(s, s).transpose().triangularView<Eigen::Upper>().solveInPlace(coeffs);
        residual = x - Ds.leftCols(s) * coeffs;
    }
    code.coefficients.assign(coeffs.data(), coeffs.data() + code.support.size());
    return code;
}

}  // namespace

SparseCode omp_encode(const Eigen::VectorXd& x, const Dictionary& dict, int k,
                      double residual_tol) {
    if (x.size() != dict.signal_dim())
        throw GeometryError("signal dimension " + std::to_string(x.size()) +
                            " does not match dictionary rows " +
                            std::to_string(dict.signal_dim()));
    return omp_core(dict.atoms, x, k, residual_tol, nullptr);
}

SparseCode masked_omp_encode(const Eigen::VectorXd& x, const std::vector<uint8_t>& mask,
                             const Dictionary& dict, int k, double residual_tol) {
    const int m = dict.signal_dim();
    if (x.size() != m || static_cast<int>(mask.size()) != m)
        throw GeometryError("signal/mask dimension does not match dictionary rows");
    std::vector<int> rows;
    for (int i = 0; i < m; ++i)
        if (mask[i]) rows.push_back(i);
    if (rows.empty()) throw GeometryError("fully masked signal cannot be encoded");
    if (static_cast<int>(rows.size()) == m) return omp_core(dict.atoms, x, k, residual_tol, nullptr);

    Eigen::MatrixXd Dr(rows.size(), dict.atom_count());
    Eigen::VectorXd xr(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        Dr.row(i) = dict.atoms.row(rows[i]);
        xr(i) = x(rows[i]);
    }
    Eigen::VectorXd scale(dict.atom_count());
    for (int j = 0; j < dict.atom_count(); ++j) {
        double n = Dr.col(j).norm();
        scale(j) = n < 1e-8 ? 0.0 : n;
    }
    return omp_core(Dr, xr, k, residual_tol, &scale);
}

Eigen::VectorXd reconstruct_signal(const Dictionary& dict, const SparseCode& code) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dict.signal_dim());
    for (size_t t = 0; t < code.support.size(); ++t)
        out += code.coefficients[t] * dict.atoms.col(code.support[t]);
    return out;
}

namespace {

double residual_norm2(const Eigen::MatrixXd& X, const Dictionary& dict,
                      const SparseCode& code, int i) {
    return (X.col(i) - reconstruct_signal(dict, code)).squaredNorm();
}

}  // namespace

Dictionary ksvd_learn(const Eigen::MatrixXd& signals, const LearnConfig& config,
                      std::vector<double>* objective_trace,
                      std::vector<SparseCode>* final_codes) {
    const int m = static_cast<int>(signals.rows());
    const int n = static_cast<int>(signals.cols());
    const int p = config.atom_count;
    if (config.sparsity < 1 || p < config.sparsity)
        throw GeometryError("need atom count >= sparsity >= 1");
    if (config.iterations < 1) throw GeometryError("need at least one iteration");
    if (n < p)
        throw GeometryError("need at least as many training signals (" + std::to_string(n) +
                            ") as atoms (" + std::to_string(p) + ")");

    Dictionary dict;
    dict.atoms.resize(m, p);
    std::mt19937_64 rng(config.seed);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int filled = 0;
    for (int i : order) {
        if (filled == p) break;
        double norm = signals.col(i).norm();
        if (norm < 1e-12) continue;
        dict.atoms.col(filled++) = signals.col(i) / norm;
    }
    while (filled < p) {  // degenerate training sets: random unit atoms
        Eigen::VectorXd a(m);
        for (int i = 0; i < m; ++i) a(i) = gauss(rng);
        dict.atoms.col(filled++) = a.normalized();
    }

    std::vector<SparseCode> codes(n);
    std::vector<double> residuals(n, 0.0);
    bool have_codes = false;
    double prev_objective = -1;

    for (int iter = 0; iter < config.iterations; ++iter) {
        // coding stage; keep a signal's previous code when re-encoding loses
        parallel_for(size_t(n), [&](size_t i) {
            SparseCode fresh = omp_core(dict.atoms, signals.col(i), config.sparsity, 0.0, nullptr);
            double fresh_res =
                (signals.col(i) - reconstruct_signal(dict, fresh)).squaredNorm();
            if (have_codes) {
                double old_res = residual_norm2(signals, dict, codes[i], int(i));
                if (old_res < fresh_res) {
                    residuals[i] = old_res;
                    return;
                }
            }
            codes[i] = std::move(fresh);
            residuals[i] = fresh_res;
        });
        have_codes = true;

        // atom update stage
        std::vector<std::vector<int>> users(p);
        for (int i = 0; i < n; ++i)
            for (int a : codes[i].support) users[a].push_back(i);
        for (int j = 0; j < p; ++j) {
            if (users[j].empty()) {
                int worst =
                    int(std::max_element(residuals.begin(), residuals.end()) - residuals.begin());
                double norm = signals.col(worst).norm();
                if (norm > 1e-12) dict.atoms.col(j) = signals.col(worst) / norm;
                continue;
            }
            const auto& ids = users[j];
            Eigen::MatrixXd E(m, ids.size());
            std::vector<int> slot(ids.size());
            for (size_t c = 0; c < ids.size(); ++c) {
                int i = ids[c];
                Eigen::VectorXd e = signals.col(i);
                for (size_t t = 0; t < codes[i].support.size(); ++t) {
                    if (codes[i].support[t] == j) {
                        slot[c] = static_cast<int>(t);
                        continue;
                    }
                    e -= codes[i].coefficients[t] * dict.atoms.col(codes[i].support[t]);
                }
                E.col(c) = e;
            }
            // leading singular pair by power iteration seeded with the old atom
            Eigen::VectorXd u = dict.atoms.col(j);
            Eigen::VectorXd v;
            for (int it = 0; it < 40; ++it) {
                v = E.transpose() * u;
                Eigen::VectorXd u_next = E * v;
                double norm = u_next.norm();
                if (norm < 1e-14) break;
                u_next /= norm;
                double delta = (u_next - u).norm();
                u = u_next;
                if (delta < 1e-12) break;
            }
            v = E.transpose() * u;
            dict.atoms.col(j) = u;
            for (size_t c = 0; c < ids.size(); ++c)
                codes[ids[c]].coefficients[slot[c]] = v(c);
        }

        double objective = 0;
        for (int i = 0; i < n; ++i) {
            residuals[i] = residual_norm2(signals, dict, codes[i], i);
            objective += 0.5 * residuals[i];
        }
        if (objective_trace) objective_trace->push_back(objective);
        if (config.on_iteration) config.on_iteration(iter, objective);
        if (iter > 0 && prev_objective > 0 &&
            (prev_objective - objective) / prev_objective < config.convergence_tol)
            break;
        prev_objective = objective;
    }
    if (final_codes) *final_codes = std::move(codes);
    return dict;
}

namespace {

constexpr uint32_t kDictVersion = 1;

template <typename T>
void append_raw(std::vector<uint8_t>& buf, const T& value) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(&value);
    buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ParseError("truncated dictionary file: " + path);
    return value;
}

}  // namespace

std::vector<uint8_t> dict_bytes(const Dictionary& dict) {
    std::vector<uint8_t> buf;
    buf.insert(buf.end(), {'P', 'D', 'C', 'T'});
    append_raw(buf, kDictVersion);
    append_raw(buf, uint32_t(dict.grid_resolution));
    append_raw(buf, uint32_t(dict.signal_dim()));
    append_raw(buf, uint32_t(dict.atom_count()));
    append_raw(buf, double(dict.patch_radius));
    append_raw(buf, uint8_t(dict.provenance));
    for (int j = 0; j < dict.atom_count(); ++j)
        for (int i = 0; i < dict.signal_dim(); ++i) append_raw(buf, dict.atoms(i, j));
    return buf;
}

void dict_save(const Dictionary& dict, const std::string& path) {
    auto buf = dict_bytes(dict);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
    if (!out) throw IoError("write failure on " + path);
}

Dictionary dict_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PDCT", 4) != 0)
        throw ParseError("bad magic in dictionary file " + path);
    if (read_raw<uint32_t>(in, path) != kDictVersion)
        throw ParseError("unsupported dictionary version in " + path);
    Dictionary dict;
    dict.grid_resolution = static_cast<int>(read_raw<uint32_t>(in, path));
    uint32_t m = read_raw<uint32_t>(in, path);
    uint32_t p = read_raw<uint32_t>(in, path);
    dict.patch_radius = read_raw<double>(in, path);
    uint8_t prov = read_raw<uint8_t>(in, path);
    if (prov > 2) throw ParseError("invalid provenance tag in " + path);
    dict.provenance = static_cast<DictProvenance>(prov);
    dict.atoms.resize(m, p);
    for (uint32_t j = 0; j < p; ++j)
        for (uint32_t i = 0; i < m; ++i) dict.atoms(i, j) = read_raw<double>(in, path);
    try {
        dict.validate();
    } catch (const GeometryError& e) {
        throw ParseError(std::string("invalid dictionary in ") + path + ": " + e.what());
    }
    return dict;
}

}  // namespace patchquilt
