#pragma once

// Dense complex matrix kernel. Everything numeric in the library funnels
// through these helpers so tolerances live in one place.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "freeball/errors.hpp"

namespace freeball {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Relative accuracy targeted by the SVD/eigen routines.
inline constexpr double kSpectralTol = 1e-10;
/// Default singularity threshold for inverse(), relative to opnorm.
inline constexpr double kSingularTol = 1e-12;

inline bool all_finite(const CMatrix& a) {
    return a.allFinite();
}

inline CMatrix checked(CMatrix a, const char* what = "matrix") {
    if (!all_finite(a)) throw NonFinite(std::string(what) + " has non-finite entries");
    return a;
}

inline CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline CMatrix direct_sum(const CMatrix& a, const CMatrix& b) {
    CMatrix out = CMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

inline CMatrix direct_sum(std::span<const CMatrix> blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    CMatrix out = CMatrix::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dimensions differ");
    return a * b;
}

inline RVector singular_values(const CMatrix& a) {
    if (a.size() == 0) return RVector();
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues();
}

inline double opnorm(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    return singular_values(a)(0);
}

inline double min_singular_value(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    const RVector s = singular_values(a);
    // A wide or tall matrix has min(rows, cols) singular values; square is the interesting case.
    return s(s.size() - 1);
}

struct InverseResult {
    CMatrix value;
    double cond = 1.0;
};

/// Inverse with a condition estimate. Throws Singular when the smallest
/// singular value falls below rel_tol * opnorm(a).
inline InverseResult inverse_with_cond(const CMatrix& a, double rel_tol = kSingularTol) {
    if (a.rows() != a.cols()) throw DimensionMismatch("inverse: matrix is not square");
    if (a.rows() == 0) return {CMatrix(0, 0), 1.0};
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RVector& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (!(smin > rel_tol * smax) || smax == 0.0)
        throw Singular("inverse: matrix is numerically singular", smin);
    CMatrix inv = svd.matrixV() * s.cwiseInverse().cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
    return {std::move(inv), smax / smin};
}

inline CMatrix inverse(const CMatrix& a, double rel_tol = kSingularTol) {
    return inverse_with_cond(a, rel_tol).value;
}

/// Solves a x = b via LU, after the same singularity screen as inverse().
inline CMatrix solve(const CMatrix& a, const CMatrix& b, double rel_tol = kSingularTol) {
    if (a.rows() != a.cols()) throw DimensionMismatch("solve: matrix is not square");
    if (a.rows() != b.rows()) throw DimensionMismatch("solve: right-hand side has wrong height");
    const RVector s = singular_values(a);
    if (s.size() == 0) return b;
    if (!(s(s.size() - 1) > rel_tol * s(0)) || s(0) == 0.0)
        throw Singular("solve: matrix is numerically singular", s(s.size() - 1));
    return a.partialPivLu().solve(b);
}

inline CVector eigenvalues(const CMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("eigenvalues: matrix is not square");
    if (a.rows() == 0) return CVector();
    Eigen::ComplexEigenSolver<CMatrix> es(a, false);
    return es.eigenvalues();
}

struct EigenPairs {
    CVector values;
    CMatrix vectors;  // columns
};

inline EigenPairs eigen_decomposition(const CMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("eigen_decomposition: matrix is not square");
    Eigen::ComplexEigenSolver<CMatrix> es(a, true);
    return {es.eigenvalues(), es.eigenvectors()};
}

inline double spec_radius(const CMatrix& a) {
    const CVector ev = eigenvalues(a);
    double r = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) r = std::max(r, std::abs(ev(i)));
    return r;
}

/// kappa(S) = ||S^-1|| ||S|| in the spectral norm.
inline double cond2(const CMatrix& s) {
    if (s.rows() != s.cols()) throw DimensionMismatch("cond2: matrix is not square");
    const RVector sv = singular_values(s);
    const double smin = sv(sv.size() - 1);
    if (!(smin > kSingularTol * sv(0))) throw Singular("cond2: matrix is singular", smin);
    return sv(0) / smin;
}

inline CMatrix hermitian_part(const CMatrix& a) {
    return (a + a.adjoint()) * 0.5;
}

/// Smallest eigenvalue of Re a = (a + a*)/2; nonnegative iff a is accretive.
inline double min_real_eig_hermitian_part(const CMatrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("min_real_eig_hermitian_part: not square");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// Column-space rank with a relative singular-value cut.
inline Eigen::Index numerical_rank(const CMatrix& a, double rel_tol = kSpectralTol) {
    const RVector s = singular_values(a);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("max_abs_diff: shapes differ");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Deterministic randomness

/// splitmix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    return mix_seed(mix_seed(mix_seed(seed ^ mix_seed(a)) ^ mix_seed(b + 0x51ed27ULL)) ^ mix_seed(c + 0xa5a5ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }  // [0, 1)
    std::uint64_t next() { return engine_(); }

    cplx complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * M_SQRT1_2, im * M_SQRT1_2};
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Ginibre-style matrix: iid complex Gaussian entries of variance 1/rows.
inline CMatrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    CMatrix m(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(rows, 1)));
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_normal() * scale;
    return m;
}

inline CMatrix ginibre(Eigen::Index n, Rng& rng) { return ginibre(n, n, rng); }

inline CVector random_vector(Eigen::Index n, Rng& rng) {
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex_normal();
    return v;
}

}  // namespace freeball
