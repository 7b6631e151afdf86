#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "freeball/freepoly.hpp"
#include "freeball/linalg.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/ncball.hpp"
#include "freeball/pencil.hpp"

namespace freeball {

// Certificate diag(p, I_pad) = F * L_A * G with F upper and G lower uni-triangular.
struct Linearization {
    struct Step {
        Eigen::Index row = 0, col = 0;  // entry of the matrix the word was taken from
        Word word;
        cplx coeff{0.0};
    };

    MatPoly p;
    Eigen::Index pad = 0;
    MatPoly F, G, F_inv, G_inv;
    MatPoly M;       // the pencil I - sum_j A_j Z_j as a matrix polynomial
    MatrixTuple A;
    std::vector<Eigen::Index> perm;  // perm[i] = coordinate of the untrimmed pencil kept at position i
    std::vector<Step> steps;

    Eigen::Index size() const { return p.k() + pad; }
};

struct HigmanStep {
    MatPoly M;      // size + 1
    MatPoly F_s;    // I + y1 E_{row, new}
    MatPoly G_s;    // I + y2 E_{new, col}
    Linearization::Step record;
};

namespace detail {

inline MatPoly scalar_word(std::size_t d, const Word& w, cplx c) { return MatPoly::scalar_monomial(d, w, c); }

inline MatPoly unit_plus(std::size_t d, Eigen::Index k, Eigen::Index i, Eigen::Index j, const MatPoly& entry) {
    MatPoly out = MatPoly::identity(d, k);
    out.add_to_entry(i, j, entry);
    return out;
}

}  // namespace detail

/// One application of Higman's identity to the largest (deg-lex) word of maximal degree.
inline HigmanStep higman_step(const MatPoly& m) {
    const int deg = m.degree();
    if (deg < 2) throw InvalidArgument("higman_step: every entry already has degree at most 1");
    const Eigen::Index k = m.k();
    // Highest word of maximal degree; ties go to the first entry in row-major order.
    const Word* best_word = nullptr;
    Eigen::Index bi = 0, bj = 0;
    for (auto it = m.terms().rbegin(); it != m.terms().rend(); ++it) {
        const auto& [w, c] = *it;
        if (static_cast<int>(w.size()) < deg) break;
        for (Eigen::Index i = 0; i < k && !best_word; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                if (c(i, j) != cplx(0.0)) {
                    best_word = &w;
                    bi = i;
                    bj = j;
                    break;
                }
        if (best_word) break;
    }
    const Word w = *best_word;
    const cplx c = m.coeff(w)(bi, bj);
    const std::size_t half = (w.size() + 1) / 2;
    const Word w1(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(half));
    const Word w2(w.begin() + static_cast<std::ptrdiff_t>(half), w.end());
    const double s = std::sqrt(std::abs(c));
    const std::size_t d = m.d();
    // y1 * y2 = -c w, so the removed term c w equals -y1 y2 as the identity requires.
    const MatPoly y1 = detail::scalar_word(d, w1, -(c / std::abs(c)) * s);
    const MatPoly y2 = detail::scalar_word(d, w2, s);

    HigmanStep out;
    out.M = m.pad(1);
    out.M.add_to_entry(bi, bj, detail::scalar_word(d, w, -c));
    out.M.add_to_entry(bi, k, -y1);
    out.M.add_to_entry(k, bj, -y2);
    out.F_s = detail::unit_plus(d, k + 1, bi, k, y1);
    out.G_s = detail::unit_plus(d, k + 1, k, bj, y2);
    out.record = {bi, bj, w, c};
    return out;
}

namespace detail {

inline MatrixTuple pencil_coefficients(const MatPoly& m) {
    std::vector<CMatrix> a;
    for (std::size_t j = 0; j < m.d(); ++j) {
        CMatrix c = -m.coeff({j});
        c.array() += cplx(0.0);  // -0 -> +0
        a.push_back(std::move(c));
    }
    return MatrixTuple(std::move(a));
}

inline constexpr double kMonicTol = 1e-12;

}  // namespace detail

inline Linearization linearize(const MatPoly& p) {
    const Eigen::Index k = p.k();
    if (max_abs_diff(p.constant_term(), identity(k)) > detail::kMonicTol)
        throw NotMonicAtZero("linearize: constant term is not the identity; normalize by P(0)^-1 first");
    Linearization lin;
    lin.p = p;
    lin.M = p;
    lin.F = MatPoly::identity(p.d(), k);
    lin.G = MatPoly::identity(p.d(), k);
    while (lin.M.degree() >= 2) {
        HigmanStep st = higman_step(lin.M);
        lin.F = lin.F.pad(1) * st.F_s;
        lin.G = st.G_s * lin.G.pad(1);
        lin.M = std::move(st.M);
        lin.steps.push_back(st.record);
    }
    lin.pad = lin.M.k() - k;
    lin.F_inv = unitriangular_inverse(lin.F);
    lin.G_inv = unitriangular_inverse(lin.G);
    lin.A = detail::pencil_coefficients(lin.M);
    lin.perm.resize(static_cast<std::size_t>(lin.M.k()));
    for (Eigen::Index i = 0; i < lin.M.k(); ++i) lin.perm[static_cast<std::size_t>(i)] = i;
    return lin;
}

/// Drops padding coordinates that the pencil decouples into an identity block.
inline Linearization trim(const Linearization& lin) {
    Linearization out = lin;
    bool changed = true;
    while (changed) {
        changed = false;
        const Eigen::Index n = out.M.k();
        for (Eigen::Index i = n - 1; i >= out.p.k(); --i) {
            bool decoupled = true;
            for (const auto& [w, c] : out.M.terms()) {
                for (Eigen::Index t = 0; t < n && decoupled; ++t) {
                    const cplx expect_row = (w.empty() && t == i) ? cplx(1.0) : cplx(0.0);
                    if (c(i, t) != expect_row || c(t, i) != expect_row) decoupled = false;
                }
                if (!decoupled) break;
            }
            if (!decoupled) continue;
            auto column_clear = [&](const MatPoly& f) {
                for (const auto& [w, c] : f.terms())
                    for (Eigen::Index t = 0; t < n; ++t)
                        if (t != i && c(t, i) != cplx(0.0)) return false;
                return true;
            };
            auto row_clear = [&](const MatPoly& g) {
                for (const auto& [w, c] : g.terms())
                    for (Eigen::Index t = 0; t < n; ++t)
                        if (t != i && c(i, t) != cplx(0.0)) return false;
                return true;
            };
            // The cross term F[:, i] G[i, :] vanishes if either factor does.
            if (!column_clear(out.F) && !row_clear(out.G)) continue;
            std::vector<Eigen::Index> keep;
            for (Eigen::Index t = 0; t < n; ++t)
                if (t != i) keep.push_back(t);
            out.M = out.M.submatrix(keep);
            out.F = out.F.submatrix(keep);
            out.G = out.G.submatrix(keep);
            out.perm.erase(out.perm.begin() + i);
            --out.pad;
            changed = true;
            break;
        }
    }
    out.F_inv = unitriangular_inverse(out.F);
    out.G_inv = unitriangular_inverse(out.G);
    out.A = detail::pencil_coefficients(out.M);
    return out;
}

// ---------------------------------------------------------------------------
// Verification

struct LinearizationCheck {
    double symbolic_residual = 0.0;   // max coefficient gap of diag(p, I) - F L_A G
    double inverse_residual = 0.0;    // max coefficient gap of F F_inv - I and G G_inv - I
    double numeric_residual = 0.0;    // max over samples of ||diag(p, I)(x) - F(x) L_A(x) G(x)||
    bool unitriangular = false;
    std::size_t points = 0;
    bool ok = false;
};

inline MatPoly identity_residual(const Linearization& lin) {
    return lin.p.pad(lin.pad) - lin.F * lin.M * lin.G;
}

inline LinearizationCheck verify(const Linearization& lin, const BallSpec& spec, std::size_t trials = 100,
                                 std::uint64_t seed = 0, double tol = 1e-10) {
    LinearizationCheck chk;
    const MatPoly lhs = lin.p.pad(lin.pad);
    const MatPoly rhs = lin.F * lin.M * lin.G;
    chk.symbolic_residual = lhs.coeff_distance(rhs);
    const MatPoly id = MatPoly::identity(lin.p.d(), lin.M.k());
    chk.inverse_residual = std::max((lin.F * lin.F_inv).coeff_distance(id), (lin.G * lin.G_inv).coeff_distance(id));
    chk.unitriangular = is_upper_unitriangular(lin.F) && is_lower_unitriangular(lin.G);
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, 0x11, t));
        const Eigen::Index level = 1 + static_cast<Eigen::Index>(t % 3);
        const MatrixTuple x = sample_one(spec, level, 1.0, SampleMode::Interior, rng);
        const CMatrix a = lhs.eval(x);
        const CMatrix b = lin.F.eval(x) * pencil_eval(lin.A, x) * lin.G.eval(x);
        chk.numeric_residual = std::max(chk.numeric_residual, opnorm(a - b));
        ++chk.points;
    }
    chk.ok = chk.unitriangular && chk.symbolic_residual <= 1e-12 && chk.inverse_residual <= 1e-12 &&
             chk.numeric_residual <= tol;
    return chk;
}

// ---------------------------------------------------------------------------
// Atom certificate

struct AtomReport {
    bool atom = false;  // false means Inconclusive
    std::string reason;
    Linearization linearization;
    IrreducibilityReport irreducibility;
};

inline AtomReport atom_certificate(const MatPoly& p, std::uint64_t seed = 0) {
    const CMatrix p0 = p.constant_term();
    CMatrix p0_inv;
    try {
        p0_inv = inverse(p0);
    } catch (const Singular&) {
        throw NotMonicAtZero("atom_certificate: P(0) is not invertible");
    }
    const MatPoly q = p.right_mul(p0_inv);
    AtomReport rep;
    rep.linearization = trim(linearize(q));
    rep.irreducibility = irreducible(rep.linearization.A, seed);
    if (rep.irreducibility.irreducible) {
        rep.atom = true;
        rep.reason = "stably associated to an irreducible pencil";
    } else {
        rep.reason = "Higman pencil is reducible (algebra dimension " +
                     std::to_string(rep.irreducibility.algebra_dim) + " < " +
                     std::to_string(rep.irreducibility.m * rep.irreducibility.m) +
                     "); this does not decide atomhood";
    }
    return rep;
}

}  // namespace freeball
