#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "freeball/freepoly.hpp"
#include "freeball/linalg.hpp"
#include "freeball/linearize.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/ncball.hpp"
#include "freeball/pencil.hpp"
#include "freeball/ratexpr.hpp"

namespace freeball {

// r(Z) = b^* L_A(Z)^-1 c
struct Descriptor {
    MatrixTuple A;
    CVector b;
    CVector c;

    Eigen::Index dim() const { return b.size(); }
};

// Realization of a k x k matrix of rationals: r(Z) = B^* L_A(Z)^-1 C.
struct BlockDescriptor {
    MatrixTuple A;
    CMatrix B;  // N x k
    CMatrix C;  // N x k
    Eigen::Index k = 1;
};

inline constexpr double kPencilDomainTol = 1e-12;

namespace detail {

inline CMatrix checked_pencil_solve(const MatrixTuple& a, const MatrixTuple& x, const CMatrix& rhs) {
    const CMatrix l = pencil_eval(a, x);
    const RVector s = singular_values(l);
    const double smin = s(s.size() - 1);
    if (!(smin > kPencilDomainTol * s(0)))
        throw OutOfPencilDomain("pencil is singular at the evaluation point", smin);
    return l.partialPivLu().solve(rhs);
}

inline MatrixTuple zero_tuple(std::size_t d, Eigen::Index n) { return MatrixTuple::zeros(d, n); }

}  // namespace detail

inline CMatrix eval_descriptor(const Descriptor& r, const MatrixTuple& x) {
    const Eigen::Index n = x.level();
    const CMatrix id = identity(n);
    const CMatrix sol = detail::checked_pencil_solve(r.A, x, kron(r.c, id));
    return kron(CMatrix(r.b.adjoint()), id) * sol;
}

inline CMatrix eval_descriptor(const BlockDescriptor& r, const MatrixTuple& x) {
    const Eigen::Index n = x.level();
    const CMatrix id = identity(n);
    const CMatrix sol = detail::checked_pencil_solve(r.A, x, kron(r.C, id));
    return kron(CMatrix(r.B.adjoint()), id) * sol;
}

// ---------------------------------------------------------------------------
// Synthesis from expressions

namespace detail {

inline Descriptor desc_const(std::size_t d, cplx a) {
    Descriptor r{MatrixTuple::zeros(d, 1), CVector::Ones(1), CVector::Constant(1, a)};
    return r;
}

inline Descriptor desc_var(std::size_t d, std::size_t j) {
    std::vector<CMatrix> a(d, CMatrix::Zero(2, 2));
    a[j](0, 1) = 1.0;
    CVector b = CVector::Zero(2), c = CVector::Zero(2);
    b(0) = 1.0;
    c(1) = 1.0;
    return {MatrixTuple(std::move(a)), b, c};
}

inline Descriptor desc_add(const Descriptor& r1, const Descriptor& r2) {
    std::vector<CMatrix> a;
    for (std::size_t j = 0; j < r1.A.d(); ++j) a.push_back(direct_sum(r1.A[j], r2.A[j]));
    CVector b(r1.dim() + r2.dim()), c(r1.dim() + r2.dim());
    b << r1.b, r2.b;
    c << r1.c, r2.c;
    return {MatrixTuple(std::move(a)), b, c};
}

inline Descriptor desc_scale(Descriptor r, cplx s) {
    r.c *= s;
    return r;
}

// Series coupling: A_j = [[A1_j, c1 b2^* A2_j], [0, A2_j]], b = (b1; 0), c = (c1 (b2^* c2); c2).
inline Descriptor desc_mul(const Descriptor& r1, const Descriptor& r2) {
    const Eigen::Index n1 = r1.dim(), n2 = r2.dim();
    const CMatrix couple = r1.c * r2.b.adjoint();
    std::vector<CMatrix> a;
    for (std::size_t j = 0; j < r1.A.d(); ++j) {
        CMatrix m = CMatrix::Zero(n1 + n2, n1 + n2);
        m.topLeftCorner(n1, n1) = r1.A[j];
        m.topRightCorner(n1, n2) = couple * r2.A[j];
        m.bottomRightCorner(n2, n2) = r2.A[j];
        a.push_back(std::move(m));
    }
    CVector b = CVector::Zero(n1 + n2), c(n1 + n2);
    b.head(n1) = r1.b;
    c << r1.c * r2.b.dot(r2.c), r2.c;
    return {MatrixTuple(std::move(a)), b, c};
}

// r = a + b^* T L^-1 c with a = b^* c is the FM form (A, B_j = A_j c, C = b^*, D = a).
// Its inverse is the FM system (A_j (I - c b^* / a), A_j c / a, -b^* / a, 1 / a), embedded as a descriptor.
inline Descriptor desc_inv(const Descriptor& r) {
    const cplx a = r.b.dot(r.c);
    const double scale = std::max(1.0, r.b.norm() * r.c.norm());
    if (std::abs(a) <= 1e-12 * scale)
        throw DegenerateExpression("synth: inverted subexpression vanishes at the origin; no descriptor exists");
    const Eigen::Index n = r.dim();
    const CMatrix proj = identity(n) - (r.c * r.b.adjoint()) / a;
    std::vector<CMatrix> at;
    for (std::size_t j = 0; j < r.A.d(); ++j) {
        CMatrix m = CMatrix::Zero(n + 1, n + 1);
        m.block(1, 0, n, 1) = r.A[j] * r.c / a;
        m.bottomRightCorner(n, n) = r.A[j] * proj;
        at.push_back(std::move(m));
    }
    // b~^* = (1/a, -b^*/a)
    CVector bt(n + 1), ct = CVector::Zero(n + 1);
    bt(0) = std::conj(1.0 / a);
    bt.tail(n) = -r.b / std::conj(a);
    ct(0) = 1.0;
    return {MatrixTuple(std::move(at)), bt, ct};
}

// (alpha + sum_j beta_j Z_j)^-1 = (1/alpha) (1 - sum_j (-beta_j/alpha) Z_j)^-1
inline std::optional<Descriptor> desc_inv_affine(const RatExpr& e, std::size_t d) {
    const auto p = expr_is_polynomial(e, d);
    if (!p || p->degree() > 1) return std::nullopt;
    const cplx alpha = p->constant_term()(0, 0);
    if (alpha == cplx(0.0))
        throw DegenerateExpression("synth: inverted affine expression vanishes at the origin; no descriptor exists");
    std::vector<CMatrix> a;
    for (std::size_t j = 0; j < d; ++j) a.push_back(CMatrix::Constant(1, 1, -p->coeff({j})(0, 0) / alpha));
    return Descriptor{MatrixTuple(std::move(a)), CVector::Ones(1), CVector::Constant(1, 1.0 / alpha)};
}

inline Descriptor synth_rec(const RatExpr& e, std::size_t d) {
    switch (e->op) {
        case Op::Const: return desc_const(d, e->value);
        case Op::Var:
            if (e->var >= d) throw UnknownVariable("synth: variable exceeds d");
            return desc_var(d, e->var);
        case Op::Add: return desc_add(synth_rec(e->lhs, d), synth_rec(e->rhs, d));
        case Op::Sub: return desc_add(synth_rec(e->lhs, d), desc_scale(synth_rec(e->rhs, d), -1.0));
        case Op::Mul: return desc_mul(synth_rec(e->lhs, d), synth_rec(e->rhs, d));
        case Op::Neg: return desc_scale(synth_rec(e->lhs, d), -1.0);
        case Op::Scale: return desc_scale(synth_rec(e->lhs, d), e->value);
        case Op::Inv: {
            if (auto r = desc_inv_affine(e->lhs, d)) return *r;
            return desc_inv(synth_rec(e->lhs, d));
        }
    }
    throw InvalidArgument("synth: unknown node");
}

}  // namespace detail

/// Compositional descriptor realization (not minimized).
inline Descriptor synth(const RatExpr& e, std::size_t d = 0) {
    if (d == 0) d = std::max<std::size_t>(var_count(e), 1);
    return detail::synth_rec(e, d);
}

struct SynthCheck {
    Eigen::Index dimension = 0;
    std::size_t points = 0;             // common-domain points compared
    double max_error = 0.0;             // relative to max(1, ||value||)
    std::size_t domain_extensions = 0;  // expression undefined but descriptor evaluates
    std::size_t pencil_failures = 0;    // expression defined but pencil singular
    bool ok = false;
};

inline SynthCheck synth_check(const RatExpr& e, const Descriptor& r, std::size_t d, std::size_t points = 100,
                              std::uint64_t seed = 0, double tol = 1e-8, Eigen::Index max_level = 3) {
    SynthCheck chk;
    chk.dimension = r.dim();
    const std::size_t budget = 10 * points;
    for (std::size_t t = 0; t < budget && chk.points < points; ++t) {
        Rng rng(derive_seed(seed, 0x5c, t));
        const Eigen::Index level = 1 + static_cast<Eigen::Index>(t % static_cast<std::size_t>(max_level));
        const MatrixTuple x = random_tuple(d, level, rng);
        CMatrix want;
        try {
            want = eval_expr(e, x);
        } catch (const OutOfDomain&) {
            try {
                eval_descriptor(r, x);
                ++chk.domain_extensions;
            } catch (const OutOfPencilDomain&) {
            }
            continue;
        }
        CMatrix got;
        try {
            got = eval_descriptor(r, x);
        } catch (const OutOfPencilDomain&) {
            ++chk.pencil_failures;
            continue;
        }
        chk.max_error = std::max(chk.max_error, opnorm(got - want) / std::max(1.0, opnorm(want)));
        ++chk.points;
    }
    chk.ok = chk.points > 0 && chk.max_error <= tol;
    return chk;
}

// ---------------------------------------------------------------------------
// Block assembly

/// Entries in row-major (lambda, mu) order; b_{lambda,mu} sits in column lambda of B, c_{lambda,mu} in column mu of C.
inline BlockDescriptor assemble(const std::vector<Descriptor>& entries, Eigen::Index k) {
    if (static_cast<Eigen::Index>(entries.size()) != k * k) throw DimensionMismatch("assemble: expected k*k entries");
    const std::size_t d = entries.front().A.d();
    Eigen::Index total = 0;
    for (const auto& e : entries) {
        if (e.A.d() != d) throw DimensionMismatch("assemble: entries have different d");
        total += e.dim();
    }
    std::vector<CMatrix> a(d, CMatrix::Zero(total, total));
    BlockDescriptor out;
    out.k = k;
    out.B = CMatrix::Zero(total, k);
    out.C = CMatrix::Zero(total, k);
    Eigen::Index off = 0;
    for (Eigen::Index lam = 0; lam < k; ++lam)
        for (Eigen::Index mu = 0; mu < k; ++mu) {
            const Descriptor& e = entries[static_cast<std::size_t>(lam * k + mu)];
            const Eigen::Index n = e.dim();
            for (std::size_t j = 0; j < d; ++j) a[j].block(off, off, n, n) = e.A[j];
            out.B.block(off, lam, n, 1) = e.b;
            out.C.block(off, mu, n, 1) = e.c;
            off += n;
        }
    out.A = MatrixTuple(std::move(a));
    return out;
}

inline BlockDescriptor synth_matrix(const MatExpr& m, std::size_t d = 0) {
    if (d == 0) d = std::max<std::size_t>(var_count(m), 1);
    std::vector<Descriptor> entries;
    for (const auto& e : m.entries) entries.push_back(synth(e, d));
    return assemble(entries, m.k);
}

// ---------------------------------------------------------------------------
// Bordered factorization alpha = beta * diag(I, I, r) * gamma

struct SimilarityBound {
    double kappa = 1.0;
    double dual_norm = 0.0;  // ||B||_{Q°} (< 1)
};

struct ThmCCheck {
    std::size_t points = 0;
    double max_residual = 0.0;        // ||alpha - beta diag(I,I,r) gamma|| / max(1, ||alpha||)
    double max_gamma_residual = 0.0;  // ||gamma gamma^-1 - I||
    double min_sv_dilated = INFINITY; // smallest singular value of L_A(s x) seen
    double max_bound_ratio = 0.0;     // ||L_A(x)^-1|| / (kappa / (1 - ||B||)) when a bound is supplied
    bool bound_checked = false;
};

/// r_eval is an evaluation of the realized matrix that does not go through the descriptor.
inline ThmCCheck factorization_check_thmC(const Evaluator& r_eval, const BlockDescriptor& br, const BallSpec& spec,
                                          double s, std::size_t trials = 100, std::uint64_t seed = 0,
                                          std::optional<SimilarityBound> bound = std::nullopt, double tol = 1e-8) {
    if (!(s > 1.0)) throw InvalidArgument("factorization_check_thmC: s must exceed 1");
    ThmCCheck chk;
    const Eigen::Index big = br.A.level();
    const Eigen::Index k = br.k;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, 0x7c, t));
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(t % 3);
        const MatrixTuple x = sample_one(spec, n, 1.0, SampleMode::Interior, rng);
        const CMatrix idk = identity(k * n);
        const CMatrix l = pencil_eval(br.A, x);
        const CMatrix l_inv = inverse(l);
        const CMatrix cbar = kron(br.C, identity(n));
        const CMatrix bstar = kron(CMatrix(br.B.adjoint()), identity(n));
        const CMatrix r = r_eval(x);
        const Eigen::Index e = 2 * k * n + big * n;
        const Eigen::Index o1 = k * n, o2 = k * n + big * n;
        CMatrix alpha = CMatrix::Zero(e, e), beta = CMatrix::Zero(e, e), gamma = CMatrix::Zero(e, e),
                gamma_inv = CMatrix::Zero(e, e), mid = CMatrix::Identity(e, e);
        alpha.block(0, 0, o1, o1) = idk;
        alpha.block(0, o2, o1, o1) = idk;
        alpha.block(o1, 0, big * n, o1) = cbar;
        alpha.block(o1, o1, big * n, big * n) = l;
        alpha.block(o2, o1, o1, big * n) = bstar;
        beta.block(0, 0, o1, o1) = idk;
        beta.block(o1, 0, big * n, o1) = cbar;
        beta.block(o1, o1, big * n, big * n) = l;
        beta.block(o2, o1, o1, big * n) = bstar;
        beta.block(o2, o2, o1, o1) = idk;
        mid.block(o2, o2, o1, o1) = r;
        gamma.setIdentity();
        gamma.block(0, o2, o1, o1) = idk;
        gamma.block(o1, o2, big * n, o1) = -l_inv * cbar;
        gamma_inv.setIdentity();
        gamma_inv.block(0, o2, o1, o1) = -idk;
        gamma_inv.block(o1, o2, big * n, o1) = l_inv * cbar;
        const double res = opnorm(alpha - beta * mid * gamma) / std::max(1.0, opnorm(alpha));
        const double gres = opnorm(gamma * gamma_inv - CMatrix::Identity(e, e));
        chk.max_residual = std::max(chk.max_residual, res);
        chk.max_gamma_residual = std::max(chk.max_gamma_residual, gres);
        chk.min_sv_dilated = std::min(chk.min_sv_dilated, min_singular_value(pencil_eval(br.A, x.scaled(s))));
        if (res > tol || gres > tol)
            throw IdentityViolation("factorization_check_thmC: bordered identity fails at a sampled point", res);
        if (bound) {
            const double limit = bound->kappa / (1.0 - bound->dual_norm);
            const double ratio = opnorm(l_inv) / limit;
            chk.max_bound_ratio = std::max(chk.max_bound_ratio, ratio);
            chk.bound_checked = true;
            if (opnorm(l_inv) > limit + 1e-9)
                throw IdentityViolation("factorization_check_thmC: resolvent bound kappa/(1-||B||) fails", ratio);
        }
        ++chk.points;
    }
    return chk;
}

// ---------------------------------------------------------------------------
// FM realizations: P(Z)^-1 = D + C^* L_A(Z)^-1 B(Z), B(Z) = sum_j B_j Z_j

struct FMRealization {
    MatrixTuple A;
    std::vector<CMatrix> B;  // N x k each
    CMatrix C;               // N x k
    CMatrix D;               // k x k

    Eigen::Index k() const { return D.rows(); }
};

inline CMatrix fm_b_of(const FMRealization& fm, const MatrixTuple& x) {
    const Eigen::Index n = x.level();
    CMatrix out = CMatrix::Zero(fm.C.rows() * n, fm.k() * n);
    for (std::size_t j = 0; j < fm.B.size(); ++j) out += kron(fm.B[j], x[j]);
    return out;
}

inline CMatrix eval_fm(const FMRealization& fm, const MatrixTuple& x) {
    const Eigen::Index n = x.level();
    const CMatrix sol = detail::checked_pencil_solve(fm.A, x, fm_b_of(fm, x));
    return kron(fm.D, identity(n)) + kron(CMatrix(fm.C.adjoint()), identity(n)) * sol;
}

/// Candidate FM data from a linearization: C = E (first k coordinates), B_j = A_j E, D = I.
inline FMRealization fm_from_linearization(const Linearization& lin) {
    const Eigen::Index k = lin.p.k(), n = lin.M.k();
    FMRealization fm;
    fm.A = lin.A;
    fm.C = CMatrix::Zero(n, k);
    fm.C.topRows(k) = identity(k);
    for (std::size_t j = 0; j < lin.A.d(); ++j) fm.B.push_back(lin.A[j] * fm.C);
    fm.D = identity(k);
    return fm;
}

struct FMCheck {
    std::size_t points = 0;
    std::size_t skipped = 0;
    double max_residual = 0.0;
    bool irreducible = false;
    Eigen::Index algebra_dim = 0;
};

inline FMCheck fm_check(const MatPoly& p, const FMRealization& fm, const BallSpec& spec, std::size_t trials = 100,
                        std::uint64_t seed = 0, double tol = 1e-8) {
    if (p.k() != fm.k()) throw DimensionMismatch("fm_check: polynomial and realization sizes differ");
    FMCheck chk;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, 0xf3, t));
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(t % 3);
        const MatrixTuple x = sample_one(spec, n, 1.0, SampleMode::Interior, rng);
        CMatrix want;
        try {
            want = inverse(p.eval(x));
        } catch (const Singular&) {
            ++chk.skipped;
            continue;
        }
        const CMatrix got = eval_fm(fm, x);
        const double res = opnorm(got - want) / std::max(1.0, opnorm(want));
        chk.max_residual = std::max(chk.max_residual, res);
        if (res > tol) throw IdentityViolation("fm_check: P(x)^-1 differs from the FM realization", res);
        ++chk.points;
    }
    const auto irr = irreducible(fm.A, seed);
    chk.irreducible = irr.irreducible;
    chk.algebra_dim = irr.algebra_dim;
    return chk;
}

struct FMBound {
    double left = 0.0;           // ||[I, 0; -C^*, I]||
    double right_at_ones = 0.0;  // ||[I, -B(r,...,r); 0, I]||
    double right_sampled = 0.0;  // sampled lower bound of ||[I, -B(rZ); 0, I]||_Q
    double right = 0.0;          // max of the two, an estimate of the sup
    double pencil_bound = 0.0;   // 1 / (1 - r), valid when A lies in the closed dual ball
    double pencil_sampled = 0.0; // sampled ||L_A(rX)^-1||
    bool pencil_bound_certified = false;
    DualCertificate certificate;
    double value = 0.0;          // left * pencil_bound * right
};

inline double fm_left_factor(const FMRealization& fm) {
    const Eigen::Index n = fm.C.rows(), k = fm.k();
    CMatrix m = CMatrix::Identity(n + k, n + k);
    m.block(n, 0, k, n) = -fm.C.adjoint();
    return opnorm(m);
}

inline double fm_right_factor_at(const FMRealization& fm, const MatrixTuple& x) {
    const CMatrix b = fm_b_of(fm, x);
    CMatrix m = CMatrix::Identity(b.rows() + b.cols(), b.rows() + b.cols());
    m.block(0, b.rows(), b.rows(), b.cols()) = -b;
    return opnorm(m);
}

inline FMBound fm_bound(const FMRealization& fm, const BallSpec& spec, double r, const Budget& budget = {}) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("fm_bound: r must lie in [0, 1]");
    FMBound out;
    out.left = fm_left_factor(fm);
    std::vector<cplx> ones(fm.A.d(), cplx(r));
    out.right_at_ones = fm_right_factor_at(fm, MatrixTuple::scalars(ones));
    if (r > 0.0) {
        Budget b = budget;
        b.radius = r;
        out.right_sampled =
            norm_over_ball([&](const MatrixTuple& x) {
                const CMatrix bx = fm_b_of(fm, x);
                CMatrix m = CMatrix::Identity(bx.rows() + bx.cols(), bx.rows() + bx.cols());
                m.block(0, bx.rows(), bx.rows(), bx.cols()) = -bx;
                return m;
            }, spec, b).lower_bound;
        out.pencil_sampled =
            norm_over_ball([&](const MatrixTuple& x) { return pencil_inv(fm.A, x); }, spec, b).lower_bound;
    } else {
        out.right_sampled = 1.0;
        out.pencil_sampled = 1.0;
    }
    out.right = std::max(out.right_at_ones, out.right_sampled);
    out.certificate = dual_membership(spec, fm.A, budget);
    out.pencil_bound_certified = out.certificate.verdict == DualCertificate::Verdict::CertifiedInside;
    out.pencil_bound = r < 1.0 ? 1.0 / (1.0 - r) : INFINITY;
    out.value = out.left * out.pencil_bound * out.right;
    return out;
}

/// 1 + left * right * sum_j j ||P_j||: the NGN-type constant once ||(P^(r))^-1|| <= left * right / (1 - r).
inline double fm_ngn_constant(double left, double right, double weighted_part_sum) {
    return 1.0 + left * right * weighted_part_sum;
}

}  // namespace freeball
