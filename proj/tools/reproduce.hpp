#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "freeball/freeball.hpp"

namespace freeball::cli {

using json = nlohmann::ordered_json;

struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::vector<Eigen::Index> levels{1, 2, 3, 4};
    std::size_t samples_per_level = 200;
    std::vector<double> r_grid = default_r_grid();
    double tol = 1e-8;
    std::string output;

    json to_json() const {
        return json{{"seed", seed},
                    {"jobs", jobs},
                    {"levels", levels},
                    {"samples_per_level", samples_per_level},
                    {"r_grid", r_grid},
                    {"tol", tol}};
    }

    Budget budget() const {
        Budget b;
        b.levels = levels;
        b.samples_per_level = samples_per_level;
        b.seed = seed;
        b.jobs = jobs;
        return b;
    }
};

inline MatPoly scalar_poly(std::size_t d, const std::vector<std::pair<Word, double>>& terms) {
    MatPoly p(d, 1);
    for (const auto& [w, c] : terms) p.add_term(w, CMatrix::Constant(1, 1, c));
    return p;
}

// 1 - ZW/2 - WZ/2
inline MatPoly example_symmetric() { return scalar_poly(2, {{{}, 1.0}, {{0, 1}, -0.5}, {{1, 0}, -0.5}}); }

// 1 - 2Z/3 - 2W/3 + ZW/3
inline MatPoly example_boundary_zero() {
    return scalar_poly(2, {{{}, 1.0}, {{0}, -2.0 / 3.0}, {{1}, -2.0 / 3.0}, {{0, 1}, 1.0 / 3.0}});
}

inline MatrixTuple displayed_pencil() {
    const double s = std::sqrt(0.5);
    CMatrix az = CMatrix::Zero(3, 3), aw = CMatrix::Zero(3, 3);
    az(0, 2) = s;
    az(1, 0) = s;
    aw(0, 1) = s;
    aw(2, 0) = s;
    return MatrixTuple({az, aw});
}

inline FMRealization golden_fm() {
    const double s = std::sqrt(0.5);
    FMRealization fm;
    fm.A = displayed_pencil();
    CMatrix bz = CMatrix::Zero(3, 1), bw = CMatrix::Zero(3, 1), c = CMatrix::Zero(3, 1);
    bz(1, 0) = s;
    bw(2, 0) = s;
    c(0, 0) = 1.0;
    fm.B = {bz, bw};
    fm.C = c;
    fm.D = identity(1);
    return fm;
}

inline double matrix_unit_residual(const MatrixTuple& a) {
    const CMatrix& z = a[0];
    const CMatrix& w = a[1];
    auto unit = [](Eigen::Index i, Eigen::Index j) {
        CMatrix e = CMatrix::Zero(3, 3);
        e(i, j) = 1.0;
        return e;
    };
    const double r2 = 2.0 * std::sqrt(2.0);
    return std::max({max_abs_diff(r2 * z * w * w, unit(0, 1)), max_abs_diff(r2 * z * z * w, unit(1, 0)),
                     max_abs_diff(2.0 * z * z, unit(1, 2)), max_abs_diff(2.0 * w * w, unit(2, 1))});
}

/// Smallest distance from (x, y) to the orbit (e^{i t} iI, e^{-i t} iI), a symmetry of words with equal Z and W counts.
inline double orbit_distance_to_ii(const MatrixTuple& x) {
    const CMatrix ii = cplx(0.0, 1.0) * identity(x.level());
    auto dist = [&](double t) {
        const cplx u = std::polar(1.0, t);
        return std::max(opnorm(x[0] - u * ii), opnorm(x[1] - std::conj(u) * ii));
    };
    constexpr int kGrid = 3600;
    double best_t = 0.0, best = INFINITY;
    for (int k = 0; k < kGrid; ++k) {
        const double t = 2.0 * std::numbers::pi * k / kGrid;
        if (const double v = dist(t); v < best) {
            best = v;
            best_t = t;
        }
    }
    double lo = best_t - 0.01, hi = best_t + 0.01;
    for (int it = 0; it < 100; ++it) {
        const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
        if (dist(a) < dist(b)) hi = b;
        else lo = a;
    }
    return std::min(best, dist(0.5 * (lo + hi)));
}

inline json reproduce_eg26(const RunConfig& cfg) {
    const MatPoly p = example_symmetric();
    const Linearization lin = trim(linearize(p));
    const auto chk = verify(lin, BallSpec::polydisk(2), 100, cfg.seed, 1e-10);
    const auto irr = irreducible(lin.A, cfg.seed);
    json perm = json::array();
    for (auto i : lin.perm) perm.push_back(i);
    return json{{"size", lin.size()},
                {"A_Z", json_io::to_json(lin.A[0])},
                {"A_W", json_io::to_json(lin.A[1])},
                {"permutation", perm},
                {"pencil_gap", std::max(max_abs_diff(lin.A[0], displayed_pencil()[0]),
                                        max_abs_diff(lin.A[1], displayed_pencil()[1]))},
                {"symbolic_residual", chk.symbolic_residual},
                {"inverse_residual", chk.inverse_residual},
                {"numeric_residual", chk.numeric_residual},
                {"points", chk.points},
                {"unitriangular", chk.unitriangular},
                {"matrix_unit_residual", matrix_unit_residual(lin.A)},
                {"algebra_dim", irr.algebra_dim}};
}

inline json reproduce_ex33(const RunConfig&) {
    const auto rows = jordan_demo({0.5, 0.9, 0.99, 0.999, 1.0 - 1e-4});
    json table = json::array();
    double gap = 0.0;
    for (const auto& r : rows) {
        table.push_back(json{{"r", r.r}, {"closed_form", r.closed_form}, {"top_right", r.top_right},
                             {"total_norm", r.total_norm}});
        gap = std::max(gap, std::abs(r.top_right - r.closed_form) / std::max(1.0, r.closed_form));
    }
    return json{{"table", table},
                {"closed_form_gap", gap},
                {"value_r_0_5", rows[0].top_right},
                {"value_r_0_99", rows[2].top_right},
                {"value_r_1_minus_1e-4", rows[4].top_right}};
}

inline json reproduce_ex37_1(const RunConfig& cfg) {
    const MatPoly p = example_symmetric();
    const BallSpec bidisk = BallSpec::polydisk(2);
    const PairBound ta = bound_theoremA(2.0, 2.0, 1, 2.0, 2.0, 1);
    const auto l31 = bound_lemma31(p, {{1.0, true}, {0.0, true}, {1.0, true}});
    const double p36 = bound_prop36(1.0, l31.weighted);
    Budget b = cfg.budget();
    const EmpiricalSup es = empirical_sup(p, bidisk, cfg.r_grid, b);
    const auto atom = atom_certificate(p, cfg.seed);
    json out{{"theoremA_left", ta.left},
             {"theoremA_right", ta.right},
             {"weighted_part_sum", l31.weighted},
             {"prop36", p36},
             {"sup_left", es.sup_left},
             {"sup_right", es.sup_right},
             {"atom", atom.atom},
             {"algebra_dim", atom.irreducibility.algebra_dim},
             {"stability_violation", es.stability_violation}};
    if (es.witness_left) {
        out["witness_r"] = es.witness_left->r;
        out["witness"] = json_io::to_json(es.witness_left->x);
        out["witness_orbit_distance"] = orbit_distance_to_ii(es.witness_left->x);
    }
    return out;
}

inline json reproduce_ex37_2(const RunConfig& cfg) {
    const MatPoly p = example_boundary_zero();
    const BallSpec bidisk = BallSpec::polydisk(2);
    const Linearization lin = trim(linearize(p));
    SimilarityOptions so;
    so.seed = cfg.seed;
    so.budget.jobs = cfg.jobs;
    const SimilarityResult sim = similarity_to_dual_ball(lin.A, bidisk, so);
    const auto atom = atom_certificate(p, cfg.seed);
    const auto l31 = bound_lemma31(p, {{1.0, true}, {4.0 / 3.0, true}, {1.0 / 3.0, true}});
    ScanOptions scan;
    scan.seed = cfg.seed;
    scan.jobs = cfg.jobs;
    const auto sc = stability_scan([&](const MatrixTuple& x) { return p.eval(x); }, bidisk, scan);
    const RatExpr factored = parse_expr("0.33333333333333331 * ((2 - Z) * (2 - W) - 1)", 2);
    const CMatrix at_ones = eval_expr(factored, MatrixTuple::scalars({1.0, 1.0}, 1));
    json out{{"A_Z", json_io::to_json(lin.A[0])},
             {"A_W", json_io::to_json(lin.A[1])},
             {"atom", atom.atom},
             {"algebra_dim", atom.irreducibility.algebra_dim},
             {"similarity_found", sim.found},
             {"similarity_stage", sim.stage},
             {"weighted_part_sum", l31.weighted},
             {"stability_samples", sc.samples},
             {"stability_witness", sc.witness_found},
             {"stability_min_sv", sc.min_observed_sv},
             {"eval_at_ones_abs", std::abs(at_ones(0, 0))}};
    if (sim.found) {
        out["kappa"] = sim.kappa;
        out["S"] = json_io::to_json(sim.S);
        out["B_Z"] = json_io::to_json(sim.B[0]);
        out["B_W"] = json_io::to_json(sim.B[1]);
        const double s3 = std::sqrt(3.0);
        CMatrix bz(2, 2), bw(2, 2);
        bz << 0.5, -0.5 / s3, -0.5 / s3, 1.0 / 6.0;
        bw << 0.5, 0.5 / s3, 0.5 / s3, 1.0 / 6.0;
        out["B_gap"] = std::max(max_abs_diff(sim.B[0], bz), max_abs_diff(sim.B[1], bw));
        out["certificate"] = DualCertificate::verdict_name(sim.certificate.verdict);
        out["rank_one_norm_product"] = sim.certificate.u_norm * sim.certificate.v_norm;
        out["prop36"] = bound_prop36(sim.kappa, l31.weighted);
    }
    return out;
}

inline json reproduce_sec61(const RunConfig& cfg) {
    const MatPoly p = example_symmetric();
    const BallSpec bidisk = BallSpec::polydisk(2);
    const FMRealization fm = golden_fm();
    const FMCheck chk = fm_check(p, fm, bidisk, 100, cfg.seed, 1e-8);
    Budget b = cfg.budget();
    b.levels = {1, 2};
    b.samples_per_level = 100;
    const FMBound bound = fm_bound(fm, bidisk, 1.0, b);
    const FMRealization derived = fm_from_linearization(trim(linearize(p)));
    double derived_gap = std::max(max_abs_diff(derived.C, fm.C), max_abs_diff(derived.D, fm.D));
    for (std::size_t j = 0; j < 2; ++j) derived_gap = std::max(derived_gap, max_abs_diff(derived.B[j], fm.B[j]));
    return json{{"fm_residual", chk.max_residual},
                {"points", chk.points},
                {"irreducible", chk.irreducible},
                {"left_factor", bound.left},
                {"right_factor_at_ones", bound.right_at_ones},
                {"right_factor_sampled", bound.right_sampled},
                {"right_factor", bound.right},
                {"dual_certificate", DualCertificate::verdict_name(bound.certificate.verdict)},
                {"ngn_constant", fm_ngn_constant(bound.left, bound.right, 2.0)},
                {"linearization_fm_gap", derived_gap}};
}

inline json reproduce_psum(const RunConfig& cfg) {
    AccretiveOptions opt;
    opt.seed = cfg.seed;
    opt.jobs = cfg.jobs;
    const AccretivityReport rep = psum_check(opt);
    json lambdas = json::array();
    bool lambdas_ok = true;
    for (const auto& row : rep.lambdas) {
        lambdas.push_back(json{{"lambda", row.lambda},
                               {"max_resolvent", row.max_resolvent},
                               {"max_product", row.max_product},
                               {"max_pointwise", row.max_pointwise},
                               {"ok", row.ok}});
        lambdas_ok = lambdas_ok && row.ok;
    }
    EquivalenceOptions eq;
    eq.seed = cfg.seed;
    eq.jobs = cfg.jobs;
    const auto& forms = psum_forms();
    bool all_equivalent = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < forms.size(); ++i)
        for (std::size_t j = i + 1; j < forms.size(); ++j) {
            const auto v = equivalent(parse_expr(forms[i], 2), parse_expr(forms[j], 2), eq, 2);
            all_equivalent = all_equivalent && v.equivalent;
            worst = std::max(worst, v.max_discrepancy);
        }
    return json{{"samples", rep.samples},
                {"max_norm", rep.max_norm},
                {"min_re", rep.min_re},
                {"min_re_inv_minus_identity", rep.min_re_inv_minus_identity},
                {"min_half_plane", rep.min_half_plane},
                {"lambdas", lambdas},
                {"lambdas_ok", lambdas_ok},
                {"forms_equivalent", all_equivalent},
                {"forms_max_discrepancy", worst}};
}

inline json reproduce_ex56(const RunConfig& cfg) {
    const std::vector<double> grid{0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02};
    EquivalenceOptions eq;
    eq.seed = cfg.seed;
    eq.jobs = cfg.jobs;
    const DecoupledReport rep = decoupled_psum_demo(grid, eq);
    json table = json::array();
    bool all_in_ball = true, increasing = true;
    double best_small_t = 0.0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        table.push_back(json{{"t", r.t}, {"norm_x", r.norm_x}, {"norm_y", r.norm_y}, {"in_ball", r.in_ball},
                             {"norm_left", r.norm_left}, {"norm_right", r.norm_right}});
        all_in_ball = all_in_ball && r.in_ball;
        if (i > 0) increasing = increasing && r.norm_left > rep.rows[i - 1].norm_left;
        if (r.t <= 0.1) best_small_t = std::max(best_small_t, r.norm_left);
    }
    return json{{"table", table},
                {"all_in_ball", all_in_ball},
                {"increasing_as_t_decreases", increasing},
                {"max_norm_left_t_le_0_1", best_small_t},
                {"left_swap_distinct", !rep.left_swap.equivalent},
                {"right_swap_distinct", !rep.right_swap.equivalent}};
}

inline const std::map<std::string, std::function<json(const RunConfig&)>>& reproducers() {
    static const std::map<std::string, std::function<json(const RunConfig&)>> table{
        {"eg2.6", reproduce_eg26},   {"ex3.3", reproduce_ex33},     {"ex3.7-1", reproduce_ex37_1},
        {"ex3.7-2", reproduce_ex37_2}, {"sec6.1", reproduce_sec61}, {"psum", reproduce_psum},
        {"ex5.6", reproduce_ex56},
    };
    return table;
}

// Expected files: {"checks": [{"name", "op": approx|le|ge|eq, "value", "tol"?, "provenance", "note"}]}
inline json run_checks(const json& values, const json& expected, bool& all_pass) {
    json out = json::array();
    all_pass = true;
    for (const json& c : expected.at("checks")) {
        const std::string name = c.at("name").get<std::string>();
        const std::string op = c.at("op").get<std::string>();
        json row{{"name", name}, {"op", op}, {"expected", c.at("value")}};
        bool pass = false;
        if (!values.contains(name)) {
            row["got"] = nullptr;
        } else {
            const json& got = values.at(name);
            row["got"] = got;
            if (op == "eq") {
                pass = got == c.at("value");
            } else if (got.is_number()) {
                const double g = got.get<double>(), v = c.at("value").get<double>();
                if (op == "approx") pass = std::abs(g - v) <= c.at("tol").get<double>();
                if (op == "le") pass = g <= v;
                if (op == "ge") pass = g >= v;
            }
        }
        row["pass"] = pass;
        all_pass = all_pass && pass;
        out.push_back(row);
    }
    return out;
}

}  // namespace freeball::cli
