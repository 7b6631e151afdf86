#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "freeball/linalg.hpp"
#include "freeball/matrix_tuple.hpp"
#include "freeball/parallel.hpp"

namespace freeball {

// The NC operator ball D_Q = { X : ||Q(X)|| < 1 }, Q(X) = sum_j Q_j (x) X_j.
struct BallSpec {
    enum class Kind { RowBall, Polydisk, General };

    Kind kind = Kind::Polydisk;
    std::size_t d = 1;
    std::vector<CMatrix> Q;  // General only

    static BallSpec rowball(std::size_t d) { return {Kind::RowBall, d, {}}; }
    static BallSpec polydisk(std::size_t d) { return {Kind::Polydisk, d, {}}; }

    static BallSpec general(std::vector<CMatrix> q) {
        if (q.empty()) throw InvalidArgument("BallSpec: general ball needs at least one coefficient");
        const auto l = q.front().rows();
        CMatrix stacked(l * l, static_cast<Eigen::Index>(q.size()));
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (q[j].rows() != l || q[j].cols() != l)
                throw DimensionMismatch("BallSpec: coefficients must be square of equal size");
            if (!q[j].allFinite()) throw NonFinite("BallSpec: non-finite coefficient");
            stacked.col(static_cast<Eigen::Index>(j)) = q[j].reshaped();
        }
        if (numerical_rank(stacked) != static_cast<Eigen::Index>(q.size()))
            throw InvalidArgument("BallSpec: coefficients are linearly dependent");
        const std::size_t d = q.size();
        return {Kind::General, d, std::move(q)};
    }

    std::string kind_name() const {
        switch (kind) {
            case Kind::RowBall: return "rowball";
            case Kind::Polydisk: return "polydisk";
            case Kind::General: return "general";
        }
        return "?";
    }
};

inline CMatrix q_eval(const BallSpec& spec, const MatrixTuple& x) {
    if (x.d() != spec.d) throw DimensionMismatch("q_eval: tuple has wrong number of variables");
    const Eigen::Index n = x.level();
    switch (spec.kind) {
        case BallSpec::Kind::RowBall: {
            CMatrix row(n, n * static_cast<Eigen::Index>(spec.d));
            for (std::size_t j = 0; j < spec.d; ++j) row.middleCols(static_cast<Eigen::Index>(j) * n, n) = x[j];
            return row;
        }
        case BallSpec::Kind::Polydisk: return direct_sum(std::span<const CMatrix>(x.matrices()));
        case BallSpec::Kind::General: {
            const auto l = spec.Q.front().rows();
            CMatrix out = CMatrix::Zero(l * n, l * n);
            for (std::size_t j = 0; j < spec.d; ++j) out += kron(spec.Q[j], x[j]);
            return out;
        }
    }
    return {};
}

inline double q_norm(const BallSpec& spec, const MatrixTuple& x) {
    if (spec.kind == BallSpec::Kind::Polydisk) {
        if (x.d() != spec.d) throw DimensionMismatch("q_norm: tuple has wrong number of variables");
        return x.norm();
    }
    return opnorm(q_eval(spec, x));
}

enum class Membership { Interior, Boundary, Outside };

inline const char* to_string(Membership m) {
    switch (m) {
        case Membership::Interior: return "Interior";
        case Membership::Boundary: return "Boundary";
        case Membership::Outside: return "Outside";
    }
    return "?";
}

inline Membership membership(const BallSpec& spec, const MatrixTuple& x, double tol = 1e-9) {
    const double q = q_norm(spec, x);
    if (q < 1.0 - tol) return Membership::Interior;
    if (q <= 1.0 + tol) return Membership::Boundary;
    return Membership::Outside;
}

enum class SampleMode { Interior, Boundary };

inline constexpr double kBoundaryRadius = 1.0 - 1e-6;

/// One sample: a Ginibre tuple rescaled so that ||Q(X)|| = s * rho.
inline MatrixTuple sample_one(const BallSpec& spec, Eigen::Index level, double rho, SampleMode mode, Rng& rng) {
    for (;;) {
        MatrixTuple x = random_tuple(spec.d, level, rng);
        const double q = q_norm(spec, x);
        if (!(q > 0.0)) continue;
        double s = kBoundaryRadius;
        if (mode == SampleMode::Interior) s = std::min(1.0 - rng.uniform(), kBoundaryRadius);
        return x.scaled(s * rho / q);
    }
}

inline std::vector<MatrixTuple> sample(const BallSpec& spec, Eigen::Index level, double rho, std::size_t count,
                                       std::uint64_t seed, SampleMode mode = SampleMode::Interior) {
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("sample: target radius must lie in (0, 1]");
    if (level < 1) throw InvalidArgument("sample: level must be positive");
    std::vector<MatrixTuple> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(level), i, 0x5a));
        out.push_back(sample_one(spec, level, rho, mode, rng));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Norm over the ball (lower bound only)

struct Budget {
    std::vector<Eigen::Index> levels{1, 2, 3, 4};
    std::size_t samples_per_level = 200;
    std::size_t hill_climb_steps = 200;
    double boundary_fraction = 0.7;
    double radius = 1.0;  // samples live in radius * D_Q
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct NormEstimate {
    double lower_bound = 0.0;
    std::optional<MatrixTuple> witness;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
    std::optional<MatrixTuple> first_skipped;
};

namespace detail {

// Samples are grouped in fixed chunks; each chunk's best point seeds one climb.
inline constexpr std::size_t kClimbChunk = 50;

inline bool boundary_slot(std::size_t i, double fraction) {
    const auto tenths = static_cast<std::size_t>(std::lround(fraction * 10.0));
    return i % 10 < tenths;
}

struct Probe {
    bool ok = false;
    double value = 0.0;
};

inline Probe probe(const Evaluator& f, const MatrixTuple& x) {
    try {
        return {true, opnorm(f(x))};
    } catch (const OutOfDomain&) {
    } catch (const Singular&) {
    } catch (const OutOfPencilDomain&) {
    }
    return {};
}

// Polydisk coordinates are clipped one at a time so that saturated coordinates stay put.
inline MatrixTuple project_to_cap(const BallSpec& spec, MatrixTuple y, double cap) {
    if (spec.kind == BallSpec::Kind::Polydisk) {
        std::vector<CMatrix> m = y.matrices();
        bool changed = false;
        for (auto& c : m) {
            const double q = opnorm(c);
            if (q > cap) {
                c *= cap / q;
                changed = true;
            }
        }
        return changed ? MatrixTuple(std::move(m)) : y;
    }
    const double q = q_norm(spec, y);
    return q > cap ? y.scaled(cap / q) : y;
}

}  // namespace detail

/// Random local perturbation hill climb, projected back into radius * D_Q.
inline std::pair<MatrixTuple, double> hill_climb(const Evaluator& f, const BallSpec& spec, MatrixTuple x, double value,
                                                 std::size_t steps, double radius, Rng& rng) {
    const double cap = radius * (1.0 - 1e-8);
    double step = 0.1 * radius;
    for (std::size_t s = 0; s < steps; ++s) {
        // The step collapses on curved ridges; periodic restarts recover it.
        if (s % 40 == 0) step = std::max(step, 0.05 * radius);
        MatrixTuple y = detail::project_to_cap(spec, x + random_tuple(spec.d, x.level(), rng).scaled(step), cap);
        const auto p = detail::probe(f, y);
        if (p.ok && p.value > value) {
            x = std::move(y);
            value = p.value;
            step = std::min(step * 1.5, radius);
        } else {
            step = std::max(step * 0.8, 1e-7 * radius);
        }
    }
    return {std::move(x), value};
}

/// Certified lower bound on sup_{X in D_Q} ||f(X)||. Never an upper bound.
inline NormEstimate norm_over_ball(const Evaluator& f, const BallSpec& spec, const Budget& budget) {
    NormEstimate est;
    std::vector<std::pair<MatrixTuple, double>> per_level;
    for (const Eigen::Index level : budget.levels) {
        const std::size_t count = budget.samples_per_level;
        std::vector<detail::Probe> vals(count);
        std::vector<MatrixTuple> pts(count);
        parallel_for(count, budget.jobs, [&](std::size_t i) {
            Rng rng(derive_seed(budget.seed, static_cast<std::uint64_t>(level), i, 0x5a));
            const SampleMode mode =
                detail::boundary_slot(i, budget.boundary_fraction) ? SampleMode::Boundary : SampleMode::Interior;
            pts[i] = sample_one(spec, level, budget.radius, mode, rng);
            vals[i] = detail::probe(f, pts[i]);
        });
        const std::size_t chunks = (count + detail::kClimbChunk - 1) / detail::kClimbChunk;
        std::vector<std::pair<std::optional<MatrixTuple>, double>> climbed(chunks, {std::nullopt, -1.0});
        parallel_for(chunks, budget.jobs, [&](std::size_t c) {
            std::size_t best = count;
            for (std::size_t i = c * detail::kClimbChunk; i < std::min(count, (c + 1) * detail::kClimbChunk); ++i)
                if (vals[i].ok && (best == count || vals[i].value > vals[best].value)) best = i;
            if (best == count) return;
            Rng rng(derive_seed(budget.seed, static_cast<std::uint64_t>(level), c, 0xc1));
            auto [x, v] = hill_climb(f, spec, pts[best], vals[best].value, budget.hill_climb_steps, budget.radius, rng);
            climbed[c] = {std::move(x), v};
        });
        for (std::size_t i = 0; i < count; ++i) {
            if (!vals[i].ok) {
                ++est.skipped;
                if (!est.first_skipped) est.first_skipped = pts[i];
                continue;
            }
            ++est.evaluated;
        }
        std::optional<MatrixTuple> level_best;
        double level_value = -1.0;
        for (std::size_t i = 0; i < count; ++i)
            if (vals[i].ok && vals[i].value > level_value) {
                level_value = vals[i].value;
                level_best = pts[i];
            }
        for (auto& [x, v] : climbed)
            if (x && v > level_value) {
                level_value = v;
                level_best = *x;
            }
        if (level_best) per_level.push_back({std::move(*level_best), level_value});
    }
    if (per_level.empty()) throw AllSamplesOutOfDomain("norm_over_ball: every sample fell outside the domain");
    for (const auto& [x, v] : per_level) est.lower_bound = std::max(est.lower_bound, v);
    // Witness: the lowest level whose best value is within 1e-6 (relative) of the overall maximum.
    for (const auto& [x, v] : per_level)
        if (v >= est.lower_bound - 1e-6 * std::max(1.0, est.lower_bound)) {
            est.witness = x;
            break;
        }
    return est;
}

// ---------------------------------------------------------------------------
// Polar dual membership

struct DualCertificate {
    enum class Verdict { CertifiedInside, SampledInside, OutsideWitness };
    enum class Method { RankOne, Sampling };

    Verdict verdict = Verdict::SampledInside;
    Method method = Method::Sampling;
    double max_norm = 0.0;  // rank-one: ||U|| ||V||; sampling: largest observed norm
    double u_norm = 0.0;
    double v_norm = 0.0;
    std::optional<MatrixTuple> witness;

    static const char* verdict_name(Verdict v) {
        switch (v) {
            case Verdict::CertifiedInside: return "CertifiedInside";
            case Verdict::SampledInside: return "SampledInside";
            case Verdict::OutsideWitness: return "OutsideWitness";
        }
        return "?";
    }
    static const char* method_name(Method m) { return m == Method::RankOne ? "RankOne" : "Sampling"; }

    bool inside(double sampled_tol = 1e-6) const {
        return verdict == Verdict::CertifiedInside ||
               (verdict == Verdict::SampledInside && max_norm <= 1.0 + sampled_tol);
    }
};

struct RankOneFactors {
    CMatrix U;  // columns u_j
    CMatrix V;  // columns v_j, with B_j = u_j v_j^*
};

/// Balanced factorization B_j = u_j v_j^*, or nullopt if some B_j has rank > 1.
inline std::optional<RankOneFactors> rank_one_factors(const MatrixTuple& b) {
    const Eigen::Index m = b.level();
    RankOneFactors f{CMatrix::Zero(m, static_cast<Eigen::Index>(b.d())), CMatrix::Zero(m, static_cast<Eigen::Index>(b.d()))};
    for (std::size_t j = 0; j < b.d(); ++j) {
        Eigen::JacobiSVD<CMatrix> svd(b[j], Eigen::ComputeFullU | Eigen::ComputeFullV);
        const RVector& s = svd.singularValues();
        if (s(0) == 0.0) continue;
        if (s.size() > 1 && s(1) > kSpectralTol * s(0)) return std::nullopt;
        const double root = std::sqrt(s(0));
        f.U.col(static_cast<Eigen::Index>(j)) = root * svd.matrixU().col(0);
        f.V.col(static_cast<Eigen::Index>(j)) = root * svd.matrixV().col(0);
    }
    return f;
}

/// Rebalances column scalings u_j -> t_j u_j, v_j -> v_j / t_j to shrink ||U|| ||V||.
inline double balance_rank_one(RankOneFactors& f, std::size_t sweeps = 40) {
    auto cost = [&] { return opnorm(f.U) * opnorm(f.V); };
    double best = cost();
    for (std::size_t s = 0; s < sweeps; ++s) {
        bool improved = false;
        for (Eigen::Index j = 0; j < f.U.cols(); ++j) {
            for (double t : {1.1, 1.0 / 1.1, 1.01, 1.0 / 1.01}) {
                f.U.col(j) *= t;
                f.V.col(j) /= t;
                const double c = cost();
                if (c < best - 1e-15) {
                    best = c;
                    improved = true;
                } else {
                    f.U.col(j) /= t;
                    f.V.col(j) *= t;
                }
            }
        }
        if (!improved) break;
    }
    return best;
}

/// Membership of b in the closed polar dual of D_Q.
inline DualCertificate dual_membership(const BallSpec& spec, const MatrixTuple& b, const Budget& budget = {}) {
    if (b.d() != spec.d) throw DimensionMismatch("dual_membership: tuple has wrong number of variables");
    DualCertificate cert;
    if (spec.kind == BallSpec::Kind::Polydisk) {
        if (auto f = rank_one_factors(b)) {
            const double un = opnorm(f->U), vn = opnorm(f->V);
            if (un * vn <= 1.0 + 1e-10) {
                cert.verdict = DualCertificate::Verdict::CertifiedInside;
                cert.method = DualCertificate::Method::RankOne;
                cert.u_norm = un;
                cert.v_norm = vn;
                cert.max_norm = un * vn;
                return cert;
            }
            RankOneFactors g = *f;
            const double c = balance_rank_one(g);
            if (c <= 1.0 + 1e-10) {
                cert.verdict = DualCertificate::Verdict::CertifiedInside;
                cert.method = DualCertificate::Method::RankOne;
                cert.u_norm = opnorm(g.U);
                cert.v_norm = opnorm(g.V);
                cert.max_norm = c;
                return cert;
            }
        }
    }
    const NormEstimate est = norm_over_ball([&](const MatrixTuple& x) { return tensor_pair(b, x); }, spec, budget);
    cert.method = DualCertificate::Method::Sampling;
    cert.max_norm = est.lower_bound;
    if (est.lower_bound > 1.0 + 1e-9) {
        cert.verdict = DualCertificate::Verdict::OutsideWitness;
        cert.witness = est.witness;
    } else {
        cert.verdict = DualCertificate::Verdict::SampledInside;
    }
    return cert;
}

}  // namespace freeball
