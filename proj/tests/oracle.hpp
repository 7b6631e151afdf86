#pragma once

// Reference computations for tests. Each one avoids the library routine it checks.

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <string>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "freeball/freeball.hpp"

namespace oracle {

using freeball::CMatrix;
using freeball::cplx;
using freeball::MatrixTuple;
using freeball::Word;

inline double opnorm(const CMatrix& a) {
    if (a.size() == 0) return 0.0;
    const CMatrix g = a.adjoint() * a;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double min_sv(const CMatrix& a) {
    const CMatrix g = a.adjoint() * a;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
}

// Gauss-Jordan with partial pivoting.
inline CMatrix inverse(CMatrix a) {
    const Eigen::Index n = a.rows();
    CMatrix inv = CMatrix::Identity(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index piv = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (std::abs(a(piv, c)) < 1e-300) throw std::runtime_error("oracle: singular");
        a.row(c).swap(a.row(piv));
        inv.row(c).swap(inv.row(piv));
        const cplx p = a(c, c);
        a.row(c) /= p;
        inv.row(c) /= p;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == c) continue;
            const cplx f = a(r, c);
            a.row(r) -= f * a.row(c);
            inv.row(r) -= f * inv.row(c);
        }
    }
    return inv;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

inline CMatrix pencil(const std::vector<CMatrix>& a, const std::vector<CMatrix>& x) {
    const Eigen::Index m = a[0].rows(), n = x[0].rows();
    CMatrix out = CMatrix::Identity(m * n, m * n);
    for (std::size_t j = 0; j < a.size(); ++j) out -= kron(a[j], x[j]);
    return out;
}

inline CMatrix word_eval(const Word& w, const MatrixTuple& x) {
    CMatrix out = CMatrix::Identity(x.level(), x.level());
    for (const std::size_t letter : w) out = out * x[letter];
    return out;
}

// sum_w kron(c_w, X^w) written out term by term.
inline CMatrix poly_eval(const std::vector<std::pair<Word, CMatrix>>& terms, const MatrixTuple& x) {
    const Eigen::Index k = terms.front().second.rows(), n = x.level();
    CMatrix out = CMatrix::Zero(k * n, k * n);
    for (const auto& [w, c] : terms) out += kron(c, word_eval(w, x));
    return out;
}

inline double max_abs(const CMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline CMatrix random_matrix(Eigen::Index n, std::mt19937_64& gen, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, 1.0);
    CMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(nd(gen), nd(gen)) * scale;
    return m;
}

// Uniform in the open unit ball of the operator norm, up to the shrink factor.
inline CMatrix random_contraction(Eigen::Index n, std::mt19937_64& gen, double shrink = 0.95) {
    const CMatrix m = random_matrix(n, gen);
    return m * (shrink / opnorm(m));
}

inline MatrixTuple random_bidisk_point(Eigen::Index n, std::mt19937_64& gen, double shrink = 0.95) {
    std::uniform_real_distribution<double> u(0.0, shrink);
    return MatrixTuple({random_contraction(n, gen, u(gen)), random_contraction(n, gen, u(gen))});
}

// Scalar polynomials that appear in the worked examples.
inline freeball::MatPoly scalar(std::size_t d, const std::vector<std::pair<Word, double>>& terms) {
    freeball::MatPoly p(d, 1);
    for (const auto& [w, c] : terms) p.add_term(w, CMatrix::Constant(1, 1, c));
    return p;
}

inline freeball::MatPoly symmetric_example() { return scalar(2, {{{}, 1.0}, {{0, 1}, -0.5}, {{1, 0}, -0.5}}); }

inline freeball::MatPoly boundary_zero_example() {
    return scalar(2, {{{}, 1.0}, {{0}, -2.0 / 3.0}, {{1}, -2.0 / 3.0}, {{0, 1}, 1.0 / 3.0}});
}

inline freeball::MatPoly third_example() {
    return scalar(2, {{{}, 1.0}, {{0, 0, 1}, 0.25}, {{1}, -0.5}, {{1, 0, 1}, 0.3}});
}


// A random rational expression as text together with a direct evaluator that bypasses the parser.
struct GeneratedExpr {
    std::string text;
    std::function<CMatrix(const MatrixTuple&)> eval;
};

inline GeneratedExpr random_expr(std::mt19937_64& gen, int depth, std::size_t d = 2) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 5);
    std::uniform_int_distribution<std::size_t> letter(0, d - 1);
    std::uniform_real_distribution<double> coef(-0.9, 0.9);
    switch (pick(gen)) {
        case 0: {
            const std::size_t j = letter(gen);
            return {"Z" + std::to_string(j + 1), [j](const MatrixTuple& x) { return CMatrix(x[j]); }};
        }
        case 1: {
            char buf[32];
            const double c = std::round(coef(gen) * 100.0) / 100.0;
            std::snprintf(buf, sizeof buf, "(%.2f)", c);
            return {buf, [c](const MatrixTuple& x) { return CMatrix(c * CMatrix::Identity(x.level(), x.level())); }};
        }
        case 2: {
            auto a = random_expr(gen, depth - 1, d), b = random_expr(gen, depth - 1, d);
            return {"(" + a.text + " + " + b.text + ")", [a, b](const MatrixTuple& x) { return CMatrix(a.eval(x) + b.eval(x)); }};
        }
        case 3: {
            auto a = random_expr(gen, depth - 1, d), b = random_expr(gen, depth - 1, d);
            return {"(" + a.text + " - " + b.text + ")", [a, b](const MatrixTuple& x) { return CMatrix(a.eval(x) - b.eval(x)); }};
        }
        case 4: {
            auto a = random_expr(gen, depth - 1, d), b = random_expr(gen, depth - 1, d);
            return {a.text + " * " + b.text, [a, b](const MatrixTuple& x) { return CMatrix(a.eval(x) * b.eval(x)); }};
        }
        default: {
            // inv(1 - c a) stays defined near the origin.
            auto a = random_expr(gen, depth - 1, d);
            const double c = std::round(coef(gen) * 100.0) / 100.0;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", c);
            return {"inv(1 - (" + std::string(buf) + ") * " + a.text + ")", [a, c](const MatrixTuple& x) {
                        const CMatrix id = CMatrix::Identity(x.level(), x.level());
                        return inverse(CMatrix(id - c * a.eval(x)));
                    }};
        }
    }
}

}  // namespace oracle
