#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace patchquilt {

enum class DictProvenance : uint8_t { Local = 0, Global = 1, SelfSimilar = 2 };

struct Dictionary {
    Eigen::MatrixXd atoms;  // m x p, unit-norm columns
    int grid_resolution = 0;
    double patch_radius = 0;
    DictProvenance provenance = DictProvenance::Local;

    int signal_dim() const { return static_cast<int>(atoms.rows()); }
    int atom_count() const { return static_cast<int>(atoms.cols()); }
    /// Unit column norms (±1e-9) and finite entries.
    void validate() const;
};

struct SparseCode {
    std::vector<int> support;
    std::vector<double> coefficients;
};

struct LearnConfig {
    int atom_count = 100;
    int sparsity = 20;
    int iterations = 30;
    /// Early stop when the relative objective improvement drops below this.
    double convergence_tol = 1e-4;
    uint64_t seed = 1;
    /// Called after each iteration with (iteration index, objective).
    std::function<void(int, double)> on_iteration;
};

/// Greedy OMP: pick the atom best correlated with the residual, refit by least
/// squares on the support (incremental Cholesky), stop at k atoms or residual
/// norm <= residual_tol. Ties break on the lowest atom index.
SparseCode omp_encode(const Eigen::VectorXd& x, const Dictionary& dict, int k,
                      double residual_tol = 1e-10);

/// OMP on the row-restricted system given by mask (1 = observed). Selection
/// normalizes the restricted atoms; atoms with restricted norm < 1e-8 are
/// excluded. Coefficients apply to the full atoms, so D*y extrapolates the
/// signal into masked rows.
SparseCode masked_omp_encode(const Eigen::VectorXd& x, const std::vector<uint8_t>& mask,
                             const Dictionary& dict, int k, double residual_tol = 1e-10);

Eigen::VectorXd reconstruct_signal(const Dictionary& dict, const SparseCode& code);

/// KSVD: alternate OMP coding of all columns with per-atom rank-1 updates.
/// Atoms used by no signal are replaced with the worst-represented signal.
/// The recorded objective sum(0.5*|x_i - D y_i|^2), one entry per iteration,
/// is non-increasing. Codes of the final iteration are returned via
/// final_codes when non-null.
Dictionary ksvd_learn(const Eigen::MatrixXd& signals, const LearnConfig& config,
                      std::vector<double>* objective_trace = nullptr,
                      std::vector<SparseCode>* final_codes = nullptr);

/// Serialized form (also what dict_save writes): magic "PDCT", u32 version,
/// u32 N, u32 m, u32 p, f64 patch_radius, u8 provenance, m*p f64
/// little-endian column-major.
std::vector<uint8_t> dict_bytes(const Dictionary& dict);
void dict_save(const Dictionary& dict, const std::string& path);
Dictionary dict_load(const std::string& path);

}  // namespace patchquilt
