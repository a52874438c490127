#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "patchquilt/errors.hpp"
#include "patchquilt/sparse.hpp"

using namespace patchquilt;

namespace {

Dictionary random_dictionary(int m, int p, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0, 1);
    Dictionary d;
    d.atoms.resize(m, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < m; ++i) d.atoms(i, j) = gauss(rng);
        d.atoms.col(j).normalize();
    }
    d.grid_resolution = m;
    d.patch_radius = 1;
    return d;
}

Eigen::VectorXd random_signal(int m, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0, 1);
    Eigen::VectorXd x(m);
    for (int i = 0; i < m; ++i) x(i) = gauss(rng);
    return x;
}

/// exhaustive best 1-sparse approximation
std::pair<int, double> best_one_sparse(const Dictionary& d, const Eigen::VectorXd& x) {
    int best = -1;
    double best_err = std::numeric_limits<double>::max(), best_c = 0;
    for (int j = 0; j < d.atom_count(); ++j) {
        double c = d.atoms.col(j).dot(x) / d.atoms.col(j).squaredNorm();
        double err = (x - c * d.atoms.col(j)).squaredNorm();
        if (err < best_err) {
            best_err = err;
            best = j;
            best_c = c;
        }
    }
    return {best, best_c};
}

}  // namespace

TEST_CASE("scaled atom recovered with k=1") {
    Dictionary d;
    d.atoms = Eigen::MatrixXd::Identity(8, 8);
    d.grid_resolution = 8;
    Eigen::VectorXd x = 3.0 * d.atoms.col(2);
    SparseCode code = omp_encode(x, d, 1);
    REQUIRE(code.support.size() == 1);
    CHECK(code.support[0] == 2);
    CHECK(code.coefficients[0] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("zero signal gives empty support") {
    Dictionary d = random_dictionary(8, 6, 1);
    SparseCode code = omp_encode(Eigen::VectorXd::Zero(8), d, 3);
    CHECK(code.support.empty());
    CHECK(code.coefficients.empty());
}

TEST_CASE("k=1 equals exhaustive one-sparse search") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 300; ++t) {
        Dictionary d = random_dictionary(8, 6, 1000 + t);
        Eigen::VectorXd x = random_signal(8, rng);
        SparseCode code = omp_encode(x, d, 1);
        auto [atom, coeff] = best_one_sparse(d, x);
        REQUIRE(code.support.size() == 1);
        CHECK(code.support[0] == atom);
        CHECK(code.coefficients[0] == doctest::Approx(coeff).epsilon(1e-12));
    }
}

TEST_CASE("residual orthogonal to support and non-increasing in k") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        Dictionary d = random_dictionary(16, 10, 2000 + t);
        Eigen::VectorXd x = random_signal(16, rng);
        double prev_norm = x.norm();
        for (int k = 1; k <= 4; ++k) {
            SparseCode code = omp_encode(x, d, k);
            Eigen::VectorXd r = x - reconstruct_signal(d, code);
            for (int a : code.support) CHECK(std::abs(d.atoms.col(a).dot(r)) <= 1e-8);
            CHECK(r.norm() <= prev_norm + 1e-12);
            prev_norm = r.norm();
        }
    }
}

TEST_CASE("scaling the signal scales the coefficients, support unchanged") {
    std::mt19937_64 rng(3);
    Dictionary d = random_dictionary(12, 9, 5);
    Eigen::VectorXd x = random_signal(12, rng);
    SparseCode a = omp_encode(x, d, 3);
    SparseCode b = omp_encode((-2.5 * x).eval(), d, 3);
    REQUIRE(a.support == b.support);
    for (size_t i = 0; i < a.coefficients.size(); ++i)
        CHECK(b.coefficients[i] == doctest::Approx(-2.5 * a.coefficients[i]).epsilon(1e-10));
}

TEST_CASE("full-rank square dictionary with k=m represents exactly") {
    std::mt19937_64 rng(9);
    Dictionary d = random_dictionary(6, 6, 77);
    Eigen::VectorXd x = random_signal(6, rng);
    SparseCode code = omp_encode(x, d, 6);
    CHECK((x - reconstruct_signal(d, code)).norm() <= 1e-8);
}

TEST_CASE("masked encode with full mask matches the unmasked result") {
    std::mt19937_64 rng(13);
    Dictionary d = random_dictionary(10, 7, 21);
    Eigen::VectorXd x = random_signal(10, rng);
    std::vector<uint8_t> mask(10, 1);
    SparseCode a = omp_encode(x, d, 3);
    SparseCode b = masked_omp_encode(x, mask, d, 3);
    CHECK(a.support == b.support);
    REQUIRE(a.coefficients.size() == b.coefficients.size());
    for (size_t i = 0; i < a.coefficients.size(); ++i)
        CHECK(a.coefficients[i] == b.coefficients[i]);
}

TEST_CASE("masked encode recovers an atom from partial observations") {
    // low-coherence dictionary: random 64-dim atoms
    Dictionary d = random_dictionary(64, 16, 31);
    double coherence = 0;
    for (int a = 0; a < 16; ++a)
        for (int b = a + 1; b < 16; ++b)
            coherence = std::max(coherence, std::abs(d.atoms.col(a).dot(d.atoms.col(b))));
    REQUIRE(coherence < 0.5);
    Eigen::VectorXd x = d.atoms.col(0);
    std::vector<uint8_t> mask(64, 1);
    std::mt19937_64 rng(4);
    int masked = 0;
    while (masked < 19) {
        int i = int(rng() % 64);
        if (mask[i]) {
            mask[i] = 0;
            ++masked;
        }
    }
    SparseCode code = masked_omp_encode(x, mask, d, 1);
    REQUIRE(code.support.size() == 1);
    CHECK(code.support[0] == 0);
    CHECK(code.coefficients[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("masked encode stops at the rank of the restricted system") {
    Dictionary d = random_dictionary(12, 8, 55);
    std::mt19937_64 rng(6);
    Eigen::VectorXd x = random_signal(12, rng);
    std::vector<uint8_t> mask(12, 0);
    mask[3] = mask[7] = 1;
    SparseCode code = masked_omp_encode(x, mask, d, 5);
    CHECK(code.support.size() <= 2);
}

TEST_CASE("fully masked signal is rejected") {
    Dictionary d = random_dictionary(8, 5, 2);
    std::vector<uint8_t> mask(8, 0);
    CHECK_THROWS_AS(masked_omp_encode(Eigen::VectorXd::Ones(8), mask, d, 2), GeometryError);
}

TEST_CASE("learning recovers orthonormal signals up to sign and permutation") {
    const int m = 8, p = 6;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(m, p);
    for (int j = 0; j < p; ++j) X(j, j) = 1.0;
    LearnConfig cfg;
    cfg.atom_count = p;
    cfg.sparsity = 1;
    cfg.iterations = 20;
    cfg.convergence_tol = 0;
    cfg.seed = 5;
    Dictionary d = ksvd_learn(X, cfg);
    d.validate();
    for (int j = 0; j < p; ++j) {
        double best = 0;
        for (int a = 0; a < p; ++a)
            best = std::max(best, std::abs(d.atoms.col(a).dot(X.col(j))));
        CHECK(best == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("learning objective is non-increasing on random data") {
    std::mt19937_64 rng(17);
    Eigen::MatrixXd X(20, 60);
    for (int i = 0; i < X.size(); ++i) X(i / 60, i % 60) = random_signal(1, rng)(0);
    LearnConfig cfg;
    cfg.atom_count = 10;
    cfg.sparsity = 3;
    cfg.iterations = 30;
    cfg.convergence_tol = 0;
    std::vector<double> trace;
    Dictionary d = ksvd_learn(X, cfg, &trace);
    d.validate();
    REQUIRE(trace.size() == 30);
    for (size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i] <= trace[i - 1] * (1 + 1e-9) + 1e-15);
}

TEST_CASE("more iterations never hurt the objective") {
    std::mt19937_64 rng(23);
    Eigen::MatrixXd X(12, 40);
    for (int c = 0; c < 40; ++c) X.col(c) = random_signal(12, rng);
    auto objective_after = [&](int iters) {
        LearnConfig cfg;
        cfg.atom_count = 8;
        cfg.sparsity = 2;
        cfg.iterations = iters;
        cfg.convergence_tol = 0;
        std::vector<double> trace;
        ksvd_learn(X, cfg, &trace);
        return trace.back();
    };
    CHECK(objective_after(5) <= objective_after(1) * (1 + 1e-9));
}

TEST_CASE("too few training signals is an error") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(8, 4);
    LearnConfig cfg;
    cfg.atom_count = 6;
    cfg.sparsity = 2;
    CHECK_THROWS_AS(ksvd_learn(X, cfg), GeometryError);
}

TEST_CASE("final codes reconstruct as well as the reported objective") {
    std::mt19937_64 rng(29);
    Eigen::MatrixXd X(10, 30);
    for (int c = 0; c < 30; ++c) X.col(c) = random_signal(10, rng);
    LearnConfig cfg;
    cfg.atom_count = 8;
    cfg.sparsity = 3;
    cfg.iterations = 5;
    cfg.convergence_tol = 0;
    std::vector<double> trace;
    std::vector<SparseCode> codes;
    Dictionary d = ksvd_learn(X, cfg, &trace, &codes);
    REQUIRE(codes.size() == 30);
    double objective = 0;
    for (int c = 0; c < 30; ++c)
        objective += 0.5 * (X.col(c) - reconstruct_signal(d, codes[c])).squaredNorm();
    CHECK(objective == doctest::Approx(trace.back()).epsilon(1e-9));
}

TEST_CASE("dictionary file round trip is byte exact") {
    Dictionary d = random_dictionary(16, 5, 91);
    d.grid_resolution = 4;
    d.patch_radius = 0.05;
    d.provenance = DictProvenance::Global;
    std::string path = "/tmp/pq_dict.pdct";
    dict_save(d, path);
    Dictionary back = dict_load(path);
    CHECK(back.grid_resolution == 4);
    CHECK(back.patch_radius == 0.05);
    CHECK(back.provenance == DictProvenance::Global);
    CHECK(dict_bytes(back) == dict_bytes(d));
    std::remove(path.c_str());
}

TEST_CASE("truncated dictionary file is rejected") {
    Dictionary d = random_dictionary(8, 3, 12);
    auto bytes = dict_bytes(d);
    std::string path = "/tmp/pq_dict_trunc.pdct";
    {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size() / 2);
    }
    CHECK_THROWS_AS(dict_load(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("non-unit atom is rejected on load") {
    Dictionary d = random_dictionary(8, 3, 12);
    d.atoms(0, 1) += 0.1;  // break the unit norm
    std::string path = "/tmp/pq_dict_bad.pdct";
    auto bytes = dict_bytes(d);
    {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    CHECK_THROWS_AS(dict_load(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("bad magic is rejected") {
    std::string path = "/tmp/pq_dict_magic.pdct";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPEnonsense";
    }
    CHECK_THROWS_AS(dict_load(path), ParseError);
    std::remove(path.c_str());
}
