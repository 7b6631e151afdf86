#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "freeball/freepoly.hpp"
#include "freeball/linalg.hpp"
#include "freeball/linearize.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/ncball.hpp"
#include "freeball/parallel.hpp"
#include "freeball/pencil.hpp"
#include "freeball/ratexpr.hpp"

namespace freeball {

// A bound input: exact values come from closed forms or certificates, estimated ones from sampling.
struct Value {
    double value = 0.0;
    bool exact = false;
};

// ---------------------------------------------------------------------------
// Closed-form bounds

struct Lemma31Bound {
    double weighted = 0.0;          // sum_j j ||P_j||
    std::optional<double> coarse;   // N (N + 1) / 2 * ||P||
    bool exact = false;
};

inline Lemma31Bound bound_lemma31(const MatPoly& p, const std::vector<Value>& part_norms,
                                  std::optional<Value> p_norm = std::nullopt) {
    const int n = std::max(p.degree(), 0);
    if (static_cast<int>(part_norms.size()) != n + 1)
        throw InvalidArgument("bound_lemma31: expected one norm per homogeneous part (degree + 1 values)");
    Lemma31Bound out;
    out.exact = true;
    for (int j = 1; j <= n; ++j) {
        out.weighted += j * part_norms[static_cast<std::size_t>(j)].value;
        out.exact = out.exact && part_norms[static_cast<std::size_t>(j)].exact;
    }
    if (p_norm) out.coarse = 0.5 * n * (n + 1) * p_norm->value;
    return out;
}

struct PairBound {
    double left = 0.0;   // bound on sup ||(P^(r))^-1 P||
    double right = 0.0;  // bound on sup ||P (P^(r))^-1||
};

inline PairBound bound_lemma32(double f_norm, double f_inv_norm, int n) {
    if (n < 0) throw InvalidArgument("bound_lemma32: degree must be non-negative");
    const double prod = f_norm * f_inv_norm;
    return {1.0 + (n * n + n + 1) * prod, 2.0 * prod};
}

inline PairBound bound_theoremA(double f_norm, double f_inv_norm, int n, double g_norm, double g_inv_norm, int m) {
    if (n < 0 || m < 0) throw InvalidArgument("bound_theoremA: degrees must be non-negative");
    const double f = f_norm * f_inv_norm, g = g_norm * g_inv_norm;
    return {(1.0 + (n * n + n + 1) * f) * g, (1.0 + (m * m + m + 1) * g) * f};
}

inline double bound_prop36(double kappa, double weighted_part_sum) { return 1.0 + kappa * weighted_part_sum; }

/// Sampled lower bounds of ||P_j||_Q; zero parts are exact zeros.
inline std::vector<Value> homogeneous_part_norms(const MatPoly& p, const BallSpec& spec, const Budget& budget) {
    std::vector<Value> out;
    for (const MatPoly& part : p.homogeneous_parts()) {
        if (part.degree() < 0) {
            out.push_back({0.0, true});
            continue;
        }
        const double v = norm_over_ball([&](const MatrixTuple& x) { return part.eval(x); }, spec, budget).lower_bound;
        out.push_back({v, false});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Empirical suprema

inline const std::vector<double>& default_r_grid() {
    static const std::vector<double> grid{0.0, 0.5, 0.9, 0.99, 0.999};
    return grid;
}

struct SupWitness {
    double r = 0.0;
    MatrixTuple x;
};

struct EmpiricalSup {
    struct Row {
        double r = 0.0;
        double left = 0.0;
        double right = 0.0;
    };
    double sup_left = 0.0;
    double sup_right = 0.0;
    std::optional<SupWitness> witness_left;
    std::optional<SupWitness> witness_right;
    std::vector<Row> rows;
    std::size_t skipped = 0;
    bool stability_violation = false;
    std::optional<MatrixTuple> violation_point;  // the dilated point r x where P was singular
};

namespace detail {

// One sided quotient: chained product of P_i(rx)^-1 P_i(x) (left) or P_i(x) P_i(rx)^-1 (right).
inline CMatrix ngn_quotient(const std::vector<MatPoly>& factors, const MatrixTuple& x, double r, bool left) {
    const MatrixTuple rx = x.scaled(r);
    CMatrix out;
    for (const MatPoly& f : factors) {
        const CMatrix inv = inverse(f.eval(rx));
        const CMatrix q = left ? CMatrix(inv * f.eval(x)) : CMatrix(f.eval(x) * inv);
        out = out.size() == 0 ? q : CMatrix(out * q);
    }
    return out;
}

inline void track_side(double r, const NormEstimate& est, double& sup, std::optional<SupWitness>& witness) {
    // Ties keep the smallest r, which is where r_grid starts.
    if (!witness || est.lower_bound > sup * (1.0 + 1e-9)) {
        sup = est.lower_bound;
        if (est.witness) witness = SupWitness{r, *est.witness};
    }
}

}  // namespace detail

/// Sampled max over r in r_grid of ||P_1(rx)^-1 P_1(x) ... P_l(rx)^-1 P_l(x)|| and its right-handed twin.
inline EmpiricalSup empirical_sup_chain(const std::vector<MatPoly>& factors, const BallSpec& spec,
                                        const std::vector<double>& r_grid, const Budget& budget) {
    if (factors.empty()) throw InvalidArgument("empirical_sup: no factors given");
    EmpiricalSup out;
    for (const double r : r_grid) {
        if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("empirical_sup: r must lie in [0, 1)");
        EmpiricalSup::Row row{r, 0.0, 0.0};
        for (const bool left : {true, false}) {
            NormEstimate est;
            try {
                est = norm_over_ball([&](const MatrixTuple& x) { return detail::ngn_quotient(factors, x, r, left); },
                                     spec, budget);
            } catch (const AllSamplesOutOfDomain&) {
                out.stability_violation = true;
                continue;
            }
            if (est.skipped > 0) {
                out.stability_violation = true;
                if (!out.violation_point && est.first_skipped) out.violation_point = est.first_skipped->scaled(r);
            }
            out.skipped += est.skipped;
            if (left) {
                row.left = est.lower_bound;
                detail::track_side(r, est, out.sup_left, out.witness_left);
            } else {
                row.right = est.lower_bound;
                detail::track_side(r, est, out.sup_right, out.witness_right);
            }
        }
        out.rows.push_back(row);
    }
    return out;
}

inline EmpiricalSup empirical_sup(const MatPoly& p, const BallSpec& spec,
                                  const std::vector<double>& r_grid = default_r_grid(), const Budget& budget = {}) {
    return empirical_sup_chain({p}, spec, r_grid, budget);
}

// ---------------------------------------------------------------------------
// Jordan pencil

struct JordanRow {
    double r = 0.0;
    double closed_form = 0.0;  // r / ((1 - r)(1 + r)^2)
    double top_right = 0.0;    // |entry (0,1)| of L_A(rX)^-1 L_A(X) at X = r, computed numerically
    double total_norm = 0.0;
};

inline MatrixTuple jordan_pencil() {
    CMatrix a(2, 2);
    a << 1.0, 1.0, 0.0, 1.0;
    return MatrixTuple({a});
}

inline MatPoly jordan_pencil_poly() {
    MatPoly p = MatPoly::identity(1, 2);
    p.add_term({0}, -jordan_pencil()[0]);
    return p;
}

inline std::vector<JordanRow> jordan_demo(const std::vector<double>& r_grid) {
    const MatrixTuple a = jordan_pencil();
    std::vector<JordanRow> rows;
    for (const double r : r_grid) {
        if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("jordan_demo: r must lie in (0, 1)");
        const MatrixTuple x = MatrixTuple::scalars({cplx(r)}, 1);
        const CMatrix q = pencil_inv(a, x.scaled(r)) * pencil_eval(a, x);
        rows.push_back({r, r / ((1.0 - r) * (1.0 + r) * (1.0 + r)), std::abs(q(0, 1)), opnorm(q)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Stability scan

struct StabilityScan {
    bool witness_found = false;
    std::optional<MatrixTuple> witness;
    double min_observed_sv = INFINITY;
    std::size_t samples = 0;
    std::size_t out_of_domain = 0;
};

struct ScanOptions {
    std::vector<Eigen::Index> levels{1, 2, 3, 4};
    std::size_t samples_per_level = 2500;
    std::size_t descent_starts = 4;
    std::size_t descent_steps = 200;
    double boundary_fraction = 0.5;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    double rel_tol = 1e-10;
    std::size_t refine_steps = 400;
};

/// NoWitness is evidence only: the scan samples the open ball and descends sigma_min from the worst samples.
inline StabilityScan stability_scan(const Evaluator& f, const BallSpec& spec, const ScanOptions& opt = {}) {
    StabilityScan out;
    // Descent stays off the boundary so that boundary zeros are not reported as interior witnesses.
    constexpr double kInner = 1.0 - 1e-6;
    struct Probe {
        double sv = INFINITY;
        double ratio = INFINITY;
        bool domain = true;
    };
    auto probe = [&](const MatrixTuple& x) {
        Probe p;
        try {
            const CMatrix v = f(x);
            const RVector s = singular_values(v);
            p.sv = s(s.size() - 1);
            p.ratio = p.sv / std::max(1.0, s(0));
        } catch (const OutOfDomain& e) {
            p.sv = e.smallest_singular_value();
            p.ratio = 0.0;
            p.domain = false;
        } catch (const Singular& e) {
            p.sv = e.smallest_singular_value();
            p.ratio = 0.0;
            p.domain = false;
        }
        return p;
    };
    auto record = [&](const MatrixTuple& x, const Probe& p) {
        out.min_observed_sv = std::min(out.min_observed_sv, p.sv);
        if (!p.domain) ++out.out_of_domain;
        if (!out.witness_found && p.ratio <= opt.rel_tol) {
            out.witness_found = true;
            out.witness = x;
        }
    };
    for (const Eigen::Index level : opt.levels) {
        const MatrixTuple origin = MatrixTuple::zeros(spec.d, level);
        record(origin, probe(origin));
        ++out.samples;
        const std::size_t count = opt.samples_per_level;
        std::vector<MatrixTuple> pts(count);
        std::vector<Probe> vals(count);
        parallel_for(count, opt.jobs, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(level), i, 0x5e));
            const SampleMode mode =
                detail::boundary_slot(i, opt.boundary_fraction) ? SampleMode::Boundary : SampleMode::Interior;
            pts[i] = sample_one(spec, level, 1.0, mode, rng);
            vals[i] = probe(pts[i]);
        });
        for (std::size_t i = 0; i < count; ++i) record(pts[i], vals[i]);
        out.samples += count;
        // Descend from the samples with the smallest relative singular value.
        std::vector<std::size_t> order(count);
        for (std::size_t i = 0; i < count; ++i) order[i] = i;
        const std::size_t starts = std::min(opt.descent_starts, count);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts), order.end(),
                          [&](std::size_t a, std::size_t b) { return vals[a].ratio < vals[b].ratio; });
        std::vector<std::pair<MatrixTuple, Probe>> climbed(starts);
        parallel_for(starts, opt.jobs, [&](std::size_t c) {
            Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(level), c, 0xde));
            const Evaluator g = [&](const MatrixTuple& x) {
                const Probe p = probe(x);
                return CMatrix::Constant(1, 1, cplx(1.0 / std::max(p.ratio, 1e-300)));
            };
            const std::size_t i = order[c];
            if (vals[i].ratio <= 0.0) {
                climbed[c] = {pts[i], vals[i]};
                return;
            }
            auto [x, v] = hill_climb(g, spec, pts[i], 1.0 / vals[i].ratio, opt.descent_steps, kInner, rng);
            Probe best = probe(x);
            // Near a simple zero the distance to it is comparable to sigma_min, so steps track sigma_min.
            double factor = 1.0;
            for (std::size_t t = 0; t < opt.refine_steps && best.ratio > opt.rel_tol && best.domain; ++t) {
                MatrixTuple y = detail::project_to_cap(
                    spec, x + random_tuple(spec.d, x.level(), rng).scaled(factor * best.sv), kInner);
                const Probe q = probe(y);
                if (q.ratio < best.ratio) {
                    x = std::move(y);
                    best = q;
                    factor = 1.0;
                } else {
                    factor = std::max(factor * 0.7, 1e-3);
                }
            }
            climbed[c] = {x, best};
        });
        for (const auto& [x, p] : climbed) record(x, p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cyclicity approximants

struct CyclicityRow {
    std::size_t n = 0;
    double r = 0.0;
    double sup_estimate = 0.0;          // sampled ||H_n||_Q
    std::vector<double> pointwise;      // ||H_n(x) - target(x)|| at each probe point
    double resolvent_norm = 0.0;        // sampled ||(P_1^(r))^-1||_Q, finite for each fixed r
    std::size_t skipped = 0;
};

struct CyclicityReport {
    std::vector<CyclicityRow> rows;
    double max_sup = 0.0;
    bool stability_violation = false;
};

inline std::vector<double> dyadic_r_seq(std::size_t n_max) {
    std::vector<double> out;
    for (std::size_t n = 1; n <= n_max; ++n) out.push_back(1.0 - std::ldexp(1.0, -static_cast<int>(n)));
    return out;
}

/// H_n = g (P_1^(r_n))^-1 P_1 P_2 ... P_l, compared pointwise with g P_2 ... P_l.
inline CyclicityReport cyclicity_approximants(const std::vector<MatPoly>& factors, const Evaluator& g,
                                              const std::vector<double>& r_seq, const BallSpec& spec,
                                              const Budget& budget, const std::vector<MatrixTuple>& points = {}) {
    if (factors.empty()) throw InvalidArgument("cyclicity_approximants: no factors given");
    const MatPoly& p1 = factors.front();
    auto tail = [&](const MatrixTuple& x) {
        CMatrix t = identity(p1.k() * x.level());
        for (std::size_t i = 1; i < factors.size(); ++i) t = t * factors[i].eval(x);
        return t;
    };
    auto g_at = [&](const MatrixTuple& x) { return g ? g(x) : identity(p1.k() * x.level()); };
    CyclicityReport rep;
    for (std::size_t i = 0; i < r_seq.size(); ++i) {
        const double r = r_seq[i];
        if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("cyclicity_approximants: r must lie in [0, 1)");
        auto h = [&](const MatrixTuple& x) {
            return CMatrix(g_at(x) * inverse(p1.eval(x.scaled(r))) * p1.eval(x) * tail(x));
        };
        CyclicityRow row;
        row.n = i + 1;
        row.r = r;
        const NormEstimate est = norm_over_ball(h, spec, budget);
        row.sup_estimate = est.lower_bound;
        row.skipped = est.skipped;
        if (est.skipped > 0) rep.stability_violation = true;
        row.resolvent_norm =
            norm_over_ball([&](const MatrixTuple& x) { return inverse(p1.eval(x.scaled(r))); }, spec, budget)
                .lower_bound;
        for (const MatrixTuple& x : points) row.pointwise.push_back(opnorm(h(x) - g_at(x) * tail(x)));
        rep.max_sup = std::max(rep.max_sup, row.sup_estimate);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Parallel sum and accretive functions

/// (I - X)(2I - X - Y)^-1 (I - Y)
inline CMatrix psum_eval(const CMatrix& x, const CMatrix& y) {
    if (x.rows() != y.rows() || x.rows() != x.cols() || y.rows() != y.cols())
        throw DimensionMismatch("psum_eval: X and Y must be square of equal size");
    const CMatrix id = identity(x.rows());
    return (id - x) * solve(2.0 * id - x - y, id - y);
}

inline CMatrix psum_eval(const MatrixTuple& z) {
    if (z.d() != 2) throw DimensionMismatch("psum_eval: the parallel sum takes two variables");
    return psum_eval(z[0], z[1]);
}

/// (I - Y)^-1 (2I - X - Y) (I - X)^-1
inline CMatrix psum_inverse_eval(const CMatrix& x, const CMatrix& y) {
    const CMatrix id = identity(x.rows());
    return solve(id - y, 2.0 * id - x - y) * inverse(id - x);
}

inline const std::vector<std::string>& psum_forms() {
    static const std::vector<std::string> forms{
        "(1 - Z) * inv(2 - Z - W) * (1 - W)",
        "(1 - W) * inv(2 - Z - W) * (1 - Z)",
        "inv(inv(1 - Z) + inv(1 - W))",
    };
    return forms;
}

struct LambdaRow {
    double lambda = 0.0;
    double max_resolvent = 0.0;       // max ||F_lambda||
    double max_product = 0.0;         // max ||F F_lambda||
    double max_pointwise = 0.0;       // max ||F F_lambda - I||
    double mean_pointwise = 0.0;
    bool ok = false;                  // ||F_lambda|| <= 1/lambda + tol and ||F F_lambda|| <= 1 + tol
};

struct AccretivityReport {
    std::size_t samples = 0;
    double max_norm = 0.0;
    double min_re = INFINITY;                 // min eigenvalue of Re F
    double min_re_inv_minus_identity = INFINITY;  // min eigenvalue of Re F^-1 - I
    double min_half_plane = INFINITY;         // min eigenvalue of Re (I - Z)^-1 - I/2 over D_1
    std::size_t half_plane_samples = 0;
    std::vector<LambdaRow> lambdas;
    bool ok = false;
};

struct AccretiveOptions {
    std::vector<Eigen::Index> levels{1, 2, 3, 4};
    std::size_t samples_per_level = 250;
    std::vector<double> lambdas{1.0, 0.1, 0.01};
    double boundary_fraction = 0.5;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    double tol = 1e-9;
};

namespace detail {

inline std::vector<MatrixTuple> accretive_samples(const BallSpec& spec, const AccretiveOptions& opt, std::uint64_t tag) {
    std::vector<MatrixTuple> pts;
    for (const Eigen::Index level : opt.levels)
        for (std::size_t i = 0; i < opt.samples_per_level; ++i) {
            Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(level), i, tag));
            const SampleMode mode =
                boundary_slot(i, opt.boundary_fraction) ? SampleMode::Boundary : SampleMode::Interior;
            pts.push_back(sample_one(spec, level, 1.0, mode, rng));
        }
    return pts;
}

inline std::vector<LambdaRow> lambda_sweep(const std::vector<CMatrix>& values, const std::vector<double>& lambdas,
                                           double tol, std::size_t jobs) {
    std::vector<LambdaRow> rows;
    for (const double lam : lambdas) {
        if (!(lam > 0.0)) throw InvalidArgument("accretive_approximant: lambda must be positive");
        std::vector<std::array<double, 3>> stats(values.size());
        parallel_for(values.size(), jobs, [&](std::size_t i) {
            const CMatrix& f = values[i];
            const CMatrix id = identity(f.rows());
            const CMatrix fl = inverse(f + lam * id);
            const CMatrix prod = f * fl;
            stats[i] = {opnorm(fl), opnorm(prod), opnorm(prod - id)};
        });
        LambdaRow row;
        row.lambda = lam;
        for (const auto& s : stats) {
            row.max_resolvent = std::max(row.max_resolvent, s[0]);
            row.max_product = std::max(row.max_product, s[1]);
            row.max_pointwise = std::max(row.max_pointwise, s[2]);
            row.mean_pointwise += s[2];
        }
        if (!stats.empty()) row.mean_pointwise /= static_cast<double>(stats.size());
        row.ok = row.max_resolvent <= 1.0 / lam + tol && row.max_product <= 1.0 + tol;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

/// F_lambda = (F + lambda I)^-1 at samples; throws NotAccretive when Re F fails to be positive semidefinite.
inline std::vector<LambdaRow> accretive_approximant(const Evaluator& f, const BallSpec& spec,
                                                    const AccretiveOptions& opt = {}) {
    const auto pts = detail::accretive_samples(spec, opt, 0xac);
    std::vector<CMatrix> values(pts.size());
    parallel_for(pts.size(), opt.jobs, [&](std::size_t i) { values[i] = f(pts[i]); });
    double min_re = INFINITY;
    for (const CMatrix& v : values) min_re = std::min(min_re, min_real_eig_hermitian_part(v));
    if (min_re < -opt.tol) throw NotAccretive("accretive_approximant: Re F has a negative eigenvalue at a sample", min_re);
    return detail::lambda_sweep(values, opt.lambdas, opt.tol, opt.jobs);
}

inline AccretivityReport psum_check(const AccretiveOptions& opt = {}) {
    const BallSpec bidisk = BallSpec::polydisk(2);
    const auto pts = detail::accretive_samples(bidisk, opt, 0x95);
    AccretivityReport rep;
    rep.samples = pts.size();
    std::vector<CMatrix> values(pts.size());
    std::vector<std::array<double, 3>> stats(pts.size());
    parallel_for(pts.size(), opt.jobs, [&](std::size_t i) {
        values[i] = psum_eval(pts[i]);
        const CMatrix inv = psum_inverse_eval(pts[i][0], pts[i][1]);
        stats[i] = {opnorm(values[i]), min_real_eig_hermitian_part(values[i]),
                    min_real_eig_hermitian_part(inv - identity(inv.rows()))};
    });
    for (const auto& s : stats) {
        rep.max_norm = std::max(rep.max_norm, s[0]);
        rep.min_re = std::min(rep.min_re, s[1]);
        rep.min_re_inv_minus_identity = std::min(rep.min_re_inv_minus_identity, s[2]);
    }
    const BallSpec disk = BallSpec::polydisk(1);
    const auto zs = detail::accretive_samples(disk, opt, 0x96);
    rep.half_plane_samples = zs.size();
    for (const MatrixTuple& z : zs) {
        const CMatrix id = identity(z.level());
        rep.min_half_plane = std::min(rep.min_half_plane, min_real_eig_hermitian_part(inverse(id - z[0]) - 0.5 * id));
    }
    rep.lambdas = detail::lambda_sweep(values, opt.lambdas, opt.tol, opt.jobs);
    bool lambdas_ok = true;
    for (const auto& row : rep.lambdas) lambdas_ok = lambdas_ok && row.ok;
    rep.ok = rep.max_norm <= 1.0 + opt.tol && rep.min_re >= -opt.tol && rep.min_re_inv_minus_identity >= -opt.tol &&
             rep.min_half_plane >= -opt.tol && lambdas_ok;
    return rep;
}

// ---------------------------------------------------------------------------
// Decoupled parallel sums

struct DecoupledRow {
    double t = 0.0;
    double norm_x = 0.0;
    double norm_y = 0.0;
    bool in_ball = false;
    double norm_left = 0.0;   // ||(2I - X - Y)^-1 (I - X)(I - Y)||
    double norm_right = 0.0;  // ||(I - X)(I - Y)(2I - X - Y)^-1||
};

struct DecoupledReport {
    std::vector<DecoupledRow> rows;
    EquivalenceVerdict left_swap;   // P_L(Z, W) vs P_L(W, Z)
    EquivalenceVerdict right_swap;  // P_R(Z, W) vs P_R(W, Z)
};

inline const std::string& psum_left_form() {
    static const std::string s = "inv(2 - Z - W) * (1 - Z) * (1 - W)";
    return s;
}

inline const std::string& psum_right_form() {
    static const std::string s = "(1 - Z) * (1 - W) * inv(2 - Z - W)";
    return s;
}

inline std::pair<CMatrix, CMatrix> decoupled_witness(double t) {
    const double c = std::cos(t), s = std::sin(t);
    CMatrix x(2, 2), y(2, 2);
    x << c, s, s, -c;
    y << c, -s, -s, -c;
    return {c * x, c * y};
}

inline DecoupledReport decoupled_psum_demo(const std::vector<double>& t_grid, const EquivalenceOptions& eq = {}) {
    DecoupledReport rep;
    for (const double t : t_grid) {
        if (!(t > 0.0 && t < std::numbers::pi / 2)) throw InvalidArgument("decoupled_psum_demo: t must lie in (0, pi/2)");
        const auto [x, y] = decoupled_witness(t);
        const CMatrix id = identity(2);
        const CMatrix num = (id - x) * (id - y);
        const CMatrix den = 2.0 * id - x - y;
        DecoupledRow row;
        row.t = t;
        row.norm_x = opnorm(x);
        row.norm_y = opnorm(y);
        row.in_ball = row.norm_x < 1.0 && row.norm_y < 1.0;
        row.norm_left = opnorm(solve(den, num));
        row.norm_right = opnorm(num * inverse(den));
        rep.rows.push_back(row);
    }
    const RatExpr pl = parse_expr(psum_left_form(), 2), pr = parse_expr(psum_right_form(), 2);
    const std::vector<std::size_t> swap{1, 0};
    rep.left_swap = equivalent(pl, substitute(pl, swap), eq, 2);
    rep.right_swap = equivalent(pr, substitute(pr, swap), eq, 2);
    return rep;
}

// ---------------------------------------------------------------------------
// Bound report

struct BoundEntry {
    std::string name;
    std::string formula;
    double left = 0.0;
    double right = 0.0;
    std::vector<std::pair<std::string, Value>> inputs;
    bool comparable = true;  // bounds sup_r ||(P^(r))^-1 P|| and its twin directly

    bool exact() const {
        return std::all_of(inputs.begin(), inputs.end(), [](const auto& in) { return in.second.exact; });
    }
};

struct BoundOptions {
    Budget budget{{1, 2, 3}, 120, 80, 0.7, 1.0, 0, 1};
    std::vector<double> r_grid = default_r_grid();
    std::map<std::string, double> exact_inputs;  // user-supplied exact values override estimates by name
    SimilarityOptions similarity{};
    double tol = 1e-6;
};

struct BoundReport {
    enum class Verdict { Consistent, Inconsistent, Inconclusive };
    MatPoly p;
    Linearization linearization;
    SimilarityResult similarity;
    std::vector<BoundEntry> entries;
    EmpiricalSup empirical;
    Verdict verdict = Verdict::Consistent;
    std::string note;
};

inline const char* verdict_name(BoundReport::Verdict v) {
    switch (v) {
        case BoundReport::Verdict::Consistent: return "consistent";
        case BoundReport::Verdict::Inconsistent: return "inconsistent";
        case BoundReport::Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace detail {

inline Value pick(const std::map<std::string, double>& overrides, const std::string& name,
                  const std::function<double()>& estimate) {
    if (auto it = overrides.find(name); it != overrides.end()) return {it->second, true};
    return {estimate(), false};
}

}  // namespace detail

inline BoundReport bound_report(const MatPoly& p, const BallSpec& spec, const BoundOptions& opt = {}) {
    if (p.d() != spec.d) throw DimensionMismatch("bound_report: polynomial and ball have different d");
    BoundReport rep;
    rep.p = p;
    rep.linearization = trim(linearize(p));
    const Linearization& lin = rep.linearization;
    const Budget& budget = opt.budget;
    const auto& ov = opt.exact_inputs;

    // Weighted part sum: bounds ||P - P^(r)|| / (1 - r), not the NGN quantities themselves.
    const auto estimated_parts = homogeneous_part_norms(p, spec, budget);
    std::vector<Value> parts;
    for (std::size_t j = 0; j < estimated_parts.size(); ++j) {
        const std::string name = "part_norm_" + std::to_string(j);
        auto it = ov.find(name);
        parts.push_back(it != ov.end() ? Value{it->second, true} : estimated_parts[j]);
    }
    const Value p_norm = detail::pick(ov, "norm_P", [&] {
        return norm_over_ball([&](const MatrixTuple& x) { return p.eval(x); }, spec, budget).lower_bound;
    });
    const Lemma31Bound l31 = bound_lemma31(p, parts, p_norm);
    {
        BoundEntry e{"lemma31", "sum_j j ||P_j||_Q", l31.weighted, l31.weighted, {}, false};
        for (std::size_t j = 1; j < parts.size(); ++j) e.inputs.push_back({"part_norm_" + std::to_string(j), parts[j]});
        rep.entries.push_back(e);
        BoundEntry c{"lemma31_coarse", "N (N + 1) / 2 * ||P||_Q", *l31.coarse, *l31.coarse, {{"norm_P", p_norm}}, false};
        rep.entries.push_back(c);
    }

    rep.similarity = similarity_to_dual_ball(lin.A, spec, opt.similarity);
    if (!rep.similarity.found) {
        rep.note = "no similarity to the closed dual ball was found; theoremA and prop36 entries omitted: " +
                   rep.similarity.reason;
    } else {
        // diag(P, I) = (F S~) L_B (S~^-1 G) with S~ = S on the pencil coordinates.
        const CMatrix s = rep.similarity.S;
        const CMatrix s_inv = inverse(s);
        auto with_right = [&](const MatPoly& f, const CMatrix& m) {
            return [&f, m](const MatrixTuple& x) { return CMatrix(f.eval(x) * kron(m, identity(x.level()))); };
        };
        auto with_left = [&](const MatPoly& g, const CMatrix& m) {
            return [&g, m](const MatrixTuple& x) { return CMatrix(kron(m, identity(x.level())) * g.eval(x)); };
        };
        auto est = [&](const Evaluator& f) { return norm_over_ball(f, spec, budget).lower_bound; };
        const Value f_norm = detail::pick(ov, "norm_F", [&] { return est(with_right(lin.F, s)); });
        const Value f_inv = detail::pick(ov, "norm_F_inv", [&] { return est(with_left(lin.F_inv, s_inv)); });
        const Value g_norm = detail::pick(ov, "norm_G", [&] { return est(with_left(lin.G, s_inv)); });
        const Value g_inv = detail::pick(ov, "norm_G_inv", [&] { return est(with_right(lin.G_inv, s)); });
        const int n = std::max(lin.F.degree(), 0), m = std::max(lin.G.degree(), 0);
        const PairBound ta = bound_theoremA(f_norm.value, f_inv.value, n, g_norm.value, g_inv.value, m);
        rep.entries.push_back({"theoremA",
                               "[1 + (N^2 + N + 1) ||F^-1|| ||F||] ||G^-1|| ||G|| and its twin",
                               ta.left,
                               ta.right,
                               {{"norm_F", f_norm},
                                {"norm_F_inv", f_inv},
                                {"norm_G", g_norm},
                                {"norm_G_inv", g_inv},
                                {"N", {static_cast<double>(n), true}},
                                {"M", {static_cast<double>(m), true}}},
                               true});
        if (p.k() == 1) {
            const bool certified =
                rep.similarity.certificate.verdict == DualCertificate::Verdict::CertifiedInside;
            Value kappa{rep.similarity.kappa, certified};
            if (auto it = ov.find("kappa"); it != ov.end()) kappa = {it->second, true};
            const double b = bound_prop36(kappa.value, l31.weighted);
            BoundEntry e{"prop36", "1 + kappa(S) sum_j j ||P_j||_Q", b, b, {{"kappa", kappa}}, true};
            for (std::size_t j = 1; j < parts.size(); ++j)
                e.inputs.push_back({"part_norm_" + std::to_string(j), parts[j]});
            rep.entries.push_back(e);
        }
    }

    rep.empirical = empirical_sup(p, spec, opt.r_grid, budget);
    if (rep.empirical.stability_violation) {
        rep.verdict = BoundReport::Verdict::Inconclusive;
        rep.note += rep.note.empty() ? "" : "; ";
        rep.note += "P(rx) was singular at a sampled point; the polynomial is not stable on the ball";
        return rep;
    }
    for (const auto& e : rep.entries) {
        if (!e.comparable) continue;
        const bool violated = rep.empirical.sup_left > e.left + opt.tol || rep.empirical.sup_right > e.right + opt.tol;
        if (!violated) continue;
        if (e.exact()) {
            rep.verdict = BoundReport::Verdict::Inconsistent;
        } else if (rep.verdict == BoundReport::Verdict::Consistent) {
            rep.verdict = BoundReport::Verdict::Inconclusive;
        }
    }
    return rep;
}

}  // namespace freeball
