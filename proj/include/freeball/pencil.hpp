#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "freeball/freepoly.hpp"
#include "freeball/linalg.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/ncball.hpp"
#include "freeball/parallel.hpp"

namespace freeball {

// Monic pencil L_A(X) = I - sum_j A_j (x) X_j; the coefficient tuple A is stored as a MatrixTuple.

inline CMatrix a_times_x(const MatrixTuple& a, const MatrixTuple& x) { return tensor_pair(a, x); }

inline CMatrix pencil_eval(const MatrixTuple& a, const MatrixTuple& x) {
    CMatrix t = a_times_x(a, x);
    return identity(t.rows()) - t;
}

inline CMatrix pencil_inv(const MatrixTuple& a, const MatrixTuple& x, double rel_tol = kSingularTol) {
    return inverse(pencil_eval(a, x), rel_tol);
}

struct NeumannResult {
    CMatrix value;
    double truncation_bound = 0.0;  // q^(N+1) / (1 - q), or 0 once the powers vanish
    double q = 0.0;                 // ||sum_j A_j (x) X_j||
    std::size_t terms = 0;
    bool within_resolvent_bound = true;  // ||value|| <= 1/(1-q) + tol
};

inline NeumannResult neumann_inv(const MatrixTuple& a, const MatrixTuple& x, std::size_t max_terms = 10000,
                                 double tol = 1e-14) {
    const CMatrix t = a_times_x(a, x);
    NeumannResult r;
    r.q = opnorm(t);
    if (r.q >= 1.0) throw NotContractive("neumann_inv: ||A (x) X|| >= 1", r.q);
    const Eigen::Index n = t.rows();
    r.value = identity(n);
    CMatrix power = identity(n);
    r.terms = 1;
    double bound = r.q / (1.0 - r.q);
    while (r.terms < max_terms) {
        power = power * t;
        if (power.isZero(0.0)) {
            bound = 0.0;
            break;
        }
        r.value += power;
        ++r.terms;
        bound = std::pow(r.q, static_cast<double>(r.terms)) / (1.0 - r.q);
        if (bound <= tol) break;
    }
    r.truncation_bound = bound;
    r.within_resolvent_bound = opnorm(r.value) <= 1.0 / (1.0 - r.q) + 1e-9;
    return r;
}

/// Row-ball joint spectral radius: sqrt of the spectral radius of S -> sum_j T_j S T_j^*.
inline double jsr_rowball(const MatrixTuple& t) {
    if (t.d() == 0) return 0.0;
    const Eigen::Index m = t.level();
    CMatrix cp = CMatrix::Zero(m * m, m * m);
    // vec(T S T^*) = (conj(T) (x) T) vec(S) for column-major vec.
    for (const auto& tj : t.matrices()) cp += kron(tj.conjugate(), tj);
    return std::sqrt(spec_radius(cp));
}

// ---------------------------------------------------------------------------
// Invertibility radius (singular-witness search)

struct RadiusOptions {
    double r_max = 2.0;
    std::size_t bisection_steps = 20;
    std::size_t samples_per_level = 500;
    std::vector<Eigen::Index> levels{1, 2, 3};
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::size_t max_witnesses = 3;
};

struct RadiusReport {
    std::optional<double> r_witness;  // certified: rho_{Q°}(A) >= 1 / r_witness
    double r_clean = 0.0;             // evidence only
    std::vector<MatrixTuple> witnesses;
    std::vector<double> witness_singular_values;
};

namespace detail {

// Sampled directions X with ||Q(X)|| < 1; along the complex line through X,
// L_A first becomes singular at radius ||Q(X)|| / rho(A (x) X).
struct Direction {
    MatrixTuple x;
    double q = 0.0;
    cplx mu{0.0};  // eigenvalue of A (x) X of largest modulus
};

inline std::vector<Direction> radius_directions(const MatrixTuple& a, const BallSpec& spec, const RadiusOptions& opt) {
    std::vector<Direction> dirs;
    for (const Eigen::Index level : opt.levels) {
        std::vector<Direction> chunk(opt.samples_per_level);
        parallel_for(opt.samples_per_level, opt.jobs, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(level), i, 0x7a));
            const SampleMode mode = boundary_slot(i, 0.7) ? SampleMode::Boundary : SampleMode::Interior;
            Direction dir{sample_one(spec, level, 1.0, mode, rng), 0.0, 0.0};
            dir.q = q_norm(spec, dir.x);
            const CVector ev = eigenvalues(a_times_x(a, dir.x));
            for (Eigen::Index k = 0; k < ev.size(); ++k)
                if (std::abs(ev(k)) > std::abs(dir.mu)) dir.mu = ev(k);
            chunk[i] = std::move(dir);
        });
        for (auto& c : chunk) dirs.push_back(std::move(c));
    }
    return dirs;
}

}  // namespace detail

/// Bisection over r in (0, r_max] for singular points of L_A inside r * D_Q.
inline RadiusReport invertibility_radius(const MatrixTuple& a, const BallSpec& spec, const RadiusOptions& opt = {}) {
    if (a.d() != spec.d) throw DimensionMismatch("invertibility_radius: pencil and ball have different d");
    const auto dirs = detail::radius_directions(a, spec, opt);
    // X / mu is a singular point of L_A with ||Q(X / mu)|| = q / |mu|; it lies in r * D_Q iff q / |mu| < r.
    auto witness_at = [&](double r) {
        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < dirs.size(); ++i)
            if (std::abs(dirs[i].mu) > 0.0 && dirs[i].q / std::abs(dirs[i].mu) < r) hits.push_back(i);
        return hits;
    };
    RadiusReport rep;
    if (witness_at(opt.r_max).empty()) {
        rep.r_clean = opt.r_max;
        return rep;
    }
    double lo = 0.0, hi = opt.r_max;
    for (std::size_t s = 0; s < opt.bisection_steps; ++s) {
        const double mid = 0.5 * (lo + hi);
        if (witness_at(mid).empty())
            lo = mid;
        else
            hi = mid;
    }
    rep.r_clean = lo;
    auto hits = witness_at(hi);
    std::sort(hits.begin(), hits.end(),
              [&](std::size_t i, std::size_t j) { return std::abs(dirs[i].mu) > std::abs(dirs[j].mu); });
    for (auto i : hits) {
        if (rep.witnesses.size() >= opt.max_witnesses) break;
        const MatrixTuple w = dirs[i].x.scaled(1.0 / dirs[i].mu);
        const RVector s = singular_values(pencil_eval(a, w));
        const double smin = s(s.size() - 1);
        if (smin > 1e-8 * s(0)) continue;  // eigenvalue too inaccurate to certify
        rep.witnesses.push_back(w);
        rep.witness_singular_values.push_back(smin);
    }
    if (rep.witnesses.empty()) {
        rep.r_clean = opt.r_max;
        return rep;
    }
    rep.r_witness = hi;
    return rep;
}

// ---------------------------------------------------------------------------
// Burnside irreducibility

struct IrreducibilityReport {
    bool irreducible = false;
    Eigen::Index algebra_dim = 0;
    Eigen::Index m = 0;
    std::vector<Word> witness_words;
    std::optional<CMatrix> invariant_subspace;  // orthonormal columns of a proper invariant subspace
};

namespace detail {

inline CMatrix orth_columns(const CMatrix& v, double rel_tol = 1e-8) {
    if (v.cols() == 0) return v;
    Eigen::JacobiSVD<CMatrix> svd(v, Eigen::ComputeThinU);
    const RVector& s = svd.singularValues();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return svd.matrixU().leftCols(r);
}

// Smallest subspace containing v and invariant under every matrix in `basis`.
inline CMatrix cyclic_subspace(const std::vector<CMatrix>& basis, const CVector& v) {
    CMatrix cols(v.size(), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) cols.col(static_cast<Eigen::Index>(i)) = basis[i] * v;
    return orth_columns(cols);
}

inline std::optional<CMatrix> invariant_subspace(const std::vector<CMatrix>& algebra, std::uint64_t seed) {
    if (algebra.empty()) return std::nullopt;
    const Eigen::Index m = algebra.front().rows();
    Rng rng(seed);
    for (int attempt = 0; attempt < 4; ++attempt) {
        for (bool adjoint : {false, true}) {
            std::vector<CMatrix> alg;
            for (const auto& b : algebra) alg.push_back(adjoint ? CMatrix(b.adjoint()) : b);
            CMatrix r = CMatrix::Zero(m, m);
            for (const auto& b : alg) r += rng.complex_normal() * b;
            const auto eig = eigen_decomposition(r);
            for (Eigen::Index k = 0; k < m; ++k) {
                const CMatrix sub = cyclic_subspace(alg, eig.vectors.col(k));
                if (sub.cols() == 0 || sub.cols() >= m) continue;
                if (!adjoint) return sub;
                // U invariant under the adjoints means its orthogonal complement is invariant.
                Eigen::JacobiSVD<CMatrix> svd(sub, Eigen::ComputeFullU);
                return CMatrix(svd.matrixU().rightCols(m - sub.cols()));
            }
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Dimension of the unital algebra generated by A_1..A_d; irreducible iff it is m^2.
inline IrreducibilityReport irreducible(const MatrixTuple& a, std::uint64_t seed = 0) {
    IrreducibilityReport rep;
    const Eigen::Index m = a.level();
    rep.m = m;
    if (m == 0) return rep;
    std::vector<CVector> ortho;       // orthonormal basis of the span, vectorized
    std::vector<CMatrix> mats;        // the spanning word evaluations
    auto try_add = [&](const CMatrix& c, const Word& w) {
        const double nc = c.norm();
        if (nc == 0.0) return false;
        CVector v = c.reshaped();
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : ortho) v -= q.dot(v) * q;
        const double nv = v.norm();
        if (nv <= 1e-10 * nc) return false;
        ortho.push_back(v / nv);
        mats.push_back(c);
        rep.witness_words.push_back(w);
        return true;
    };
    try_add(identity(m), {});
    std::deque<std::size_t> queue{0};
    const auto full = m * m;
    while (!queue.empty() && static_cast<Eigen::Index>(ortho.size()) < full) {
        const std::size_t i = queue.front();
        queue.pop_front();
        for (std::size_t j = 0; j < a.d(); ++j) {
            Word w{j};
            w.insert(w.end(), rep.witness_words[i].begin(), rep.witness_words[i].end());
            // Normalize to keep powers of large or small coefficients in range.
            CMatrix c = a[j] * mats[i];
            const double nc = c.norm();
            if (nc > 0.0) c /= nc;
            if (try_add(c, w)) queue.push_back(mats.size() - 1);
            if (static_cast<Eigen::Index>(ortho.size()) >= full) break;
        }
    }
    rep.algebra_dim = static_cast<Eigen::Index>(ortho.size());
    rep.irreducible = rep.algebra_dim == full;
    if (!rep.irreducible) rep.invariant_subspace = detail::invariant_subspace(mats, derive_seed(seed, 0x1b));
    return rep;
}

// ---------------------------------------------------------------------------
// Similarity into the closed dual ball

struct SimilarityOptions {
    Budget budget{{1, 2, 3}, 150, 100, 0.7, 1.0, 0, 1};
    std::size_t refine_steps = 300;
    std::uint64_t seed = 0;
    double accept_tol = 1e-6;  // sampled certificates must satisfy max norm <= 1 + accept_tol
};

struct SimilarityResult {
    bool found = false;
    int stage = -1;  // 0: identity, 1: eigenvector matrix, 2: refined
    CMatrix S;
    MatrixTuple B;
    double kappa = 0.0;
    DualCertificate certificate;
    bool irreducible = true;
    std::string reason;
};

namespace detail {

/// Eigenvectors of sum_j A_j as columns: unit norm, largest entry real positive,
/// ordered by decreasing eigenvalue modulus (then real part).
inline std::optional<CMatrix> eigenvector_similarity(const MatrixTuple& a) {
    const Eigen::Index m = a.level();
    CMatrix sum = CMatrix::Zero(m, m);
    for (const auto& aj : a.matrices()) sum += aj;
    const auto eig = eigen_decomposition(sum);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        const double ai = std::abs(eig.values(i)), aj = std::abs(eig.values(j));
        if (std::abs(ai - aj) > 1e-12 * std::max(1.0, ai)) return ai > aj;
        return eig.values(i).real() > eig.values(j).real();
    });
    CMatrix s(m, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        CVector v = eig.vectors.col(order[static_cast<std::size_t>(c)]);
        v /= v.norm();
        Eigen::Index big = 0;
        for (Eigen::Index r = 1; r < m; ++r)
            if (std::abs(v(r)) > std::abs(v(big)) + 1e-12) big = r;
        v *= std::conj(v(big)) / std::abs(v(big));
        v(big) = std::abs(v(big));
        s.col(c) = v;
    }
    const RVector sv = singular_values(s);
    if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) return std::nullopt;
    return s;
}

}  // namespace detail

inline SimilarityResult similarity_to_dual_ball(const MatrixTuple& a, const BallSpec& spec,
                                                const SimilarityOptions& opt = {}) {
    if (a.d() != spec.d) throw DimensionMismatch("similarity_to_dual_ball: pencil and ball have different d");
    SimilarityResult res;
    res.irreducible = irreducible(a, opt.seed).irreducible;
    Budget budget = opt.budget;
    budget.seed = derive_seed(opt.seed, 0xd0);
    auto accept = [&](const CMatrix& s, int stage, const DualCertificate& cert, const MatrixTuple& b) {
        res.found = true;
        res.stage = stage;
        res.S = s;
        res.B = b;
        res.kappa = stage == 0 ? 1.0 : cond2(s);
        res.certificate = cert;
    };

    // Stage 0: A itself.
    {
        const DualCertificate cert = dual_membership(spec, a, budget);
        if (cert.inside(opt.accept_tol)) {
            accept(identity(a.level()), 0, cert, a);
            return res;
        }
    }

    // Stage 1: eigenvectors of A_1 + ... + A_d.
    auto s1 = detail::eigenvector_similarity(a);
    if (s1) {
        const CMatrix s_inv = inverse(*s1);
        const MatrixTuple b = a.similar(*s1, s_inv);
        const DualCertificate cert = dual_membership(spec, b, budget);
        if (cert.inside(opt.accept_tol)) {
            accept(*s1, 1, cert, b);
            return res;
        }
    }

    // Stage 2: derivative-free refinement of S on a fixed sample set.
    Budget probe = budget;
    probe.samples_per_level = 60;
    probe.hill_climb_steps = 20;
    probe.levels = {1, 2};
    auto objective = [&](const CMatrix& s) -> double {
        const RVector sv = singular_values(s);
        if (!(sv(sv.size() - 1) > 1e-8 * sv(0))) return INFINITY;
        const MatrixTuple b = a.similar(s, inverse(s));
        if (spec.kind == BallSpec::Kind::Polydisk)
            if (auto f = rank_one_factors(b)) return opnorm(f->U) * opnorm(f->V);
        return norm_over_ball([&](const MatrixTuple& x) { return tensor_pair(b, x); }, spec, probe).lower_bound;
    };
    CMatrix s = s1 ? *s1 : identity(a.level());
    double best = objective(s);
    Rng rng(derive_seed(opt.seed, 0x5e));
    double step = 0.2;
    for (std::size_t it = 0; it < opt.refine_steps && best > 1.0; ++it) {
        CMatrix cand = s + step * ginibre(a.level(), rng);
        const double v = objective(cand);
        if (v < best) {
            best = v;
            s = cand;
            step = std::min(step * 1.3, 1.0);
        } else {
            step = std::max(step * 0.9, 1e-4);
        }
    }
    const MatrixTuple b = a.similar(s, inverse(s));
    const DualCertificate cert = dual_membership(spec, b, budget);
    if (cert.inside(opt.accept_tol)) {
        accept(s, 2, cert, b);
        return res;
    }
    res.reason = "no similarity into the dual ball found within budget (best sampled norm " + std::to_string(best) + ")";
    return res;
}

}  // namespace freeball
