#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reproduce.hpp"

using namespace freeball;
using freeball::cli::json;
using freeball::cli::RunConfig;

namespace {

constexpr int kExitVerdict = 1;
constexpr int kExitInput = 2;

// Verdict-type failures carry a computed witness; anything else is bad input.
bool is_verdict_error(const Error& e) {
    static const std::vector<std::string> kinds{"IdentityViolation", "StabilityViolation", "NotAccretive",
                                                "OutOfDomain",       "OutOfPencilDomain",  "Singular"};
    return std::find(kinds.begin(), kinds.end(), e.kind()) != kinds.end();
}

json error_json(const Error& e) {
    json j{{"error", e.kind()}, {"message", e.what()}};
    if (const auto* s = dynamic_cast<const SyntaxError*>(&e)) {
        j["line"] = s->line();
        j["column"] = s->column();
    }
    if (const auto* s = dynamic_cast<const OutOfDomain*>(&e)) {
        j["path"] = s->path();
        j["smallest_singular_value"] = s->smallest_singular_value();
    }
    if (const auto* s = dynamic_cast<const Singular*>(&e)) j["smallest_singular_value"] = s->smallest_singular_value();
    if (const auto* s = dynamic_cast<const OutOfPencilDomain*>(&e))
        j["smallest_singular_value"] = s->smallest_singular_value();
    if (const auto* s = dynamic_cast<const IdentityViolation*>(&e)) j["residual"] = s->residual();
    return j;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Session {
    RunConfig cfg;
    std::string command;
    json result;
    int exit_code = 0;

    void emit() const {
        json out{{"tool", "freeball"},  {"version", kVersion}, {"command", command},
                 {"config", cfg.to_json()}, {"timestamp", utc_timestamp()}, {"result", result}};
        const std::string text = out.dump(2) + "\n";
        if (cfg.output.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(cfg.output);
            if (!f) throw InvalidArgument("cannot write " + cfg.output);
            f << text;
        }
    }
};

BallSpec ball_from_arg(const std::string& arg, std::size_t d) {
    if (arg == "rowball") return BallSpec::rowball(d);
    if (arg == "polydisk") return BallSpec::polydisk(d);
    BallSpec b = json_io::ball_from_json(json_io::read_file(arg));
    if (b.d != d) throw DimensionMismatch("ball has d = " + std::to_string(b.d) + " but the input uses " + std::to_string(d));
    return b;
}

std::size_t expr_d(const std::variant<RatExpr, MatExpr>& e, std::size_t d_flag) {
    if (d_flag > 0) return d_flag;
    const std::size_t v = std::visit([](const auto& x) { return var_count(x); }, e);
    return std::max<std::size_t>(v, 1);
}

json linearization_check_json(const LinearizationCheck& c) {
    return json{{"symbolic_residual", c.symbolic_residual}, {"inverse_residual", c.inverse_residual},
                {"numeric_residual", c.numeric_residual},   {"unitriangular", c.unitriangular},
                {"points", c.points},                       {"ok", c.ok}};
}

json irreducibility_json(const IrreducibilityReport& r) {
    json words = json::array();
    for (const Word& w : r.witness_words) words.push_back(json_io::word_to_json(w));
    json out{{"irreducible", r.irreducible}, {"algebra_dim", r.algebra_dim}, {"m", r.m}, {"witness_words", words}};
    if (r.invariant_subspace) out["invariant_subspace"] = json_io::to_json(*r.invariant_subspace);
    return out;
}

json empirical_json(const EmpiricalSup& es) {
    json rows = json::array();
    for (const auto& r : es.rows) rows.push_back(json{{"r", r.r}, {"left", r.left}, {"right", r.right}});
    json out{{"sup_left", es.sup_left}, {"sup_right", es.sup_right}, {"rows", rows},
             {"stability_violation", es.stability_violation}, {"skipped", es.skipped}};
    if (es.witness_left)
        out["witness_left"] = json{{"r", es.witness_left->r}, {"x", json_io::to_json(es.witness_left->x)}};
    if (es.witness_right)
        out["witness_right"] = json{{"r", es.witness_right->r}, {"x", json_io::to_json(es.witness_right->x)}};
    if (es.violation_point) out["violation_point"] = json_io::to_json(*es.violation_point);
    return out;
}

json bound_report_json(const BoundReport& rep) {
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json inputs = json::array();
        for (const auto& [name, v] : e.inputs)
            inputs.push_back(json{{"name", name}, {"value", v.value}, {"flag", v.exact ? "exact" : "estimated"}});
        entries.push_back(json{{"name", e.name},
                               {"formula", e.formula},
                               {"left", e.left},
                               {"right", e.right},
                               {"comparable", e.comparable},
                               {"inputs", inputs}});
    }
    json sim{{"found", rep.similarity.found}, {"stage", rep.similarity.stage}, {"reason", rep.similarity.reason}};
    if (rep.similarity.found) {
        sim["kappa"] = rep.similarity.kappa;
        sim["S"] = json_io::to_json(rep.similarity.S);
        sim["B"] = json_io::to_json(rep.similarity.B, true);
        sim["certificate"] = DualCertificate::verdict_name(rep.similarity.certificate.verdict);
    }
    return json{{"polynomial", json_io::to_json(rep.p)},
                {"pencil", json_io::to_json(rep.linearization.A, true)},
                {"similarity", sim},
                {"entries", entries},
                {"empirical", empirical_json(rep.empirical)},
                {"verdict", verdict_name(rep.verdict)},
                {"note", rep.note}};
}

std::string data_dir() {
    if (const char* env = std::getenv("FREEBALL_DATA_DIR")) return env;
    return FREEBALL_DATA_DIR;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"freeball: free polynomials and NC rational functions over NC operator balls"};
    app.require_subcommand(1);
    app.fallthrough();
    Session s;
    if (const char* env = std::getenv("FREEBALL_SEED")) {
        try {
            s.cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << json{{"error", "InvalidArgument"}, {"message", "FREEBALL_SEED is not an integer"}}.dump() << "\n";
            return kExitInput;
        }
    }
    app.add_option("--seed", s.cfg.seed, "random seed (default: FREEBALL_SEED or 0)");
    app.add_option("--jobs", s.cfg.jobs, "worker cap (0 = hardware concurrency)");
    app.add_option("--levels", s.cfg.levels, "matrix levels to sample");
    app.add_option("--samples", s.cfg.samples_per_level, "samples per level");
    app.add_option("--r-grid", s.cfg.r_grid, "dilation radii for NGN suprema");
    app.add_option("--tol", s.cfg.tol, "tolerance for identity checks");
    app.add_option("-o,--output", s.cfg.output, "write the report here instead of stdout");

    std::string expr_text, point_file, poly_file, tuple_file, ball_arg = "polydisk", fm_file, example_id;
    std::size_t d_flag = 0;
    bool verify_flag = false, no_trim = false, psum_check_flag = false, psum_decoupled_flag = false;
    double fm_r = 1.0;

    auto* eval_cmd = app.add_subcommand("eval", "evaluate an expression at a matrix tuple");
    eval_cmd->add_option("--expr", expr_text, "expression")->required();
    eval_cmd->add_option("--point", point_file, "tuple JSON")->required();

    auto* lin_cmd = app.add_subcommand("linearize", "Higman linearization of a matrix polynomial");
    lin_cmd->add_option("--poly", poly_file, "polynomial JSON")->required();
    lin_cmd->add_flag("--verify", verify_flag, "check the identity symbolically and at sample points");
    lin_cmd->add_flag("--no-trim", no_trim, "keep decoupled padding coordinates");

    auto* atom_cmd = app.add_subcommand("atom", "atom certificate via an irreducible linearization");
    atom_cmd->add_option("--poly", poly_file, "polynomial JSON")->required();

    auto* irr_cmd = app.add_subcommand("irreducible", "irreducibility of a matrix tuple");
    irr_cmd->add_option("--tuple", tuple_file, "tuple JSON")->required();

    auto* spec_cmd = app.add_subcommand("specrad", "row-ball joint spectral radius");
    spec_cmd->add_option("--tuple", tuple_file, "tuple JSON")->required();
    spec_cmd->add_option("--ball", ball_arg, "only rowball is supported")->required();

    auto* stable_cmd = app.add_subcommand("stable", "sampled stability scan");
    stable_cmd->add_option("--expr", expr_text, "expression")->required();
    stable_cmd->add_option("--ball", ball_arg, "rowball, polydisk or a ball JSON file");
    stable_cmd->add_option("--d", d_flag, "number of variables (default: inferred)");

    auto* ngn_cmd = app.add_subcommand("ngn", "NGN bound report");
    ngn_cmd->add_option("--poly", poly_file, "polynomial JSON")->required();
    ngn_cmd->add_option("--ball", ball_arg, "rowball, polydisk or a ball JSON file");

    auto* realize_cmd = app.add_subcommand("realize", "descriptor realization of an expression");
    realize_cmd->add_option("--expr", expr_text, "expression or [a, b; c, d] matrix")->required();
    realize_cmd->add_option("--d", d_flag, "number of variables (default: inferred)");

    auto* fm_cmd = app.add_subcommand("fm-check", "verify an FM realization of P^-1 and its bound factors");
    fm_cmd->add_option("--poly", poly_file, "polynomial JSON")->required();
    fm_cmd->add_option("--fm", fm_file, "FM JSON {A, B, C, D}")->required();
    fm_cmd->add_option("--ball", ball_arg, "rowball, polydisk or a ball JSON file");
    fm_cmd->add_option("--r", fm_r, "dilation radius for the bound factors");

    auto* psum_cmd = app.add_subcommand("psum", "parallel sum suites");
    auto* psum_check_opt = psum_cmd->add_flag("--check", psum_check_flag, "accretivity suite");
    auto* psum_dec_opt = psum_cmd->add_flag("--decoupled", psum_decoupled_flag, "decoupled witness family");
    psum_check_opt->excludes(psum_dec_opt);

    auto* repro_cmd = app.add_subcommand("reproduce", "rerun a worked example and diff against stored values");
    repro_cmd->add_option("id", example_id, "eg2.6, ex3.3, ex3.7-1, ex3.7-2, sec6.1, psum or ex5.6")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
        return kExitInput;
    }

    try {
        if (*eval_cmd) {
            s.command = "eval";
            const MatrixTuple x = json_io::tuple_from_json(json_io::read_file(point_file));
            const auto e = parse(expr_text, x.d());
            try {
                const CMatrix v = std::visit([&](const auto& ex) { return eval_expr(ex, x); }, e);
                s.result = json{{"expr", expr_text}, {"in_domain", true}, {"value", json_io::to_json(v)}};
            } catch (const OutOfDomain& err) {
                s.result = json{{"expr", expr_text}, {"in_domain", false}, {"detail", error_json(err)}};
                s.exit_code = kExitVerdict;
            }
        } else if (*lin_cmd) {
            s.command = "linearize";
            const MatPoly p = json_io::poly_from_json(json_io::read_file(poly_file));
            Linearization lin = linearize(p);
            if (!no_trim) lin = trim(lin);
            s.result = json{{"linearization", json_io::to_json(lin)}};
            if (verify_flag) {
                const auto chk = verify(lin, BallSpec::polydisk(p.d()), 100, s.cfg.seed, 1e-10);
                s.result["check"] = linearization_check_json(chk);
                if (!chk.ok) s.exit_code = kExitVerdict;
            }
        } else if (*atom_cmd) {
            s.command = "atom";
            const MatPoly p = json_io::poly_from_json(json_io::read_file(poly_file));
            const AtomReport rep = atom_certificate(p, s.cfg.seed);
            s.result = json{{"verdict", rep.atom ? "Atom" : "Inconclusive"},
                            {"reason", rep.reason},
                            {"pencil", json_io::to_json(rep.linearization.A, true)},
                            {"irreducibility", irreducibility_json(rep.irreducibility)}};
            if (!rep.atom) s.exit_code = kExitVerdict;
        } else if (*irr_cmd) {
            s.command = "irreducible";
            const MatrixTuple a = json_io::tuple_from_json(json_io::read_file(tuple_file));
            const auto rep = irreducible(a, s.cfg.seed);
            s.result = irreducibility_json(rep);
            if (!rep.irreducible) s.exit_code = kExitVerdict;
        } else if (*spec_cmd) {
            s.command = "specrad";
            if (ball_arg != "rowball") throw InvalidArgument("specrad: only --ball rowball has a closed formula");
            const MatrixTuple t = json_io::tuple_from_json(json_io::read_file(tuple_file));
            s.result = json{{"ball", "rowball"}, {"value", jsr_rowball(t)}};
        } else if (*stable_cmd) {
            s.command = "stable";
            const auto parsed = parse(expr_text, d_flag);
            const std::size_t d = expr_d(parsed, d_flag);
            const BallSpec spec = ball_from_arg(ball_arg, d);
            ScanOptions opt;
            opt.levels = s.cfg.levels;
            opt.seed = s.cfg.seed;
            opt.jobs = s.cfg.jobs;
            const Evaluator f = [&](const MatrixTuple& x) {
                return std::visit([&](const auto& ex) { return eval_expr(ex, x); }, parsed);
            };
            const StabilityScan sc = stability_scan(f, spec, opt);
            s.result = json{{"expr", expr_text},
                            {"ball", json_io::to_json(spec)},
                            {"verdict", sc.witness_found ? "SingularWitness" : "NoWitness"},
                            {"min_observed_sv", sc.min_observed_sv},
                            {"samples", sc.samples},
                            {"out_of_domain", sc.out_of_domain},
                            {"note", "NoWitness is sampling evidence, not a proof of stability"}};
            if (sc.witness) s.result["witness"] = json_io::to_json(*sc.witness);
            if (sc.witness_found) s.exit_code = kExitVerdict;
        } else if (*ngn_cmd) {
            s.command = "ngn";
            const MatPoly p = json_io::poly_from_json(json_io::read_file(poly_file));
            const BallSpec spec = ball_from_arg(ball_arg, p.d());
            BoundOptions opt;
            opt.budget = s.cfg.budget();
            opt.r_grid = s.cfg.r_grid;
            opt.similarity.seed = s.cfg.seed;
            opt.similarity.budget.jobs = s.cfg.jobs;
            const BoundReport rep = bound_report(p, spec, opt);
            s.result = bound_report_json(rep);
            if (rep.verdict == BoundReport::Verdict::Inconsistent) s.exit_code = kExitVerdict;
        } else if (*realize_cmd) {
            s.command = "realize";
            const auto parsed = parse(expr_text, d_flag);
            const std::size_t d = expr_d(parsed, d_flag);
            if (const auto* e = std::get_if<RatExpr>(&parsed)) {
                const Descriptor r = synth(*e, d);
                const SynthCheck chk = synth_check(*e, r, d, 100, s.cfg.seed, s.cfg.tol);
                s.result = json{{"expr", expr_text},
                                {"descriptor", json_io::to_json(r)},
                                {"check",
                                 {{"points", chk.points},
                                  {"max_error", chk.max_error},
                                  {"domain_extensions", chk.domain_extensions},
                                  {"pencil_failures", chk.pencil_failures},
                                  {"ok", chk.ok}}}};
                if (!chk.ok) s.exit_code = kExitVerdict;
            } else {
                const MatExpr& m = std::get<MatExpr>(parsed);
                const BlockDescriptor r = synth_matrix(m, d);
                double worst = 0.0;
                std::size_t points = 0;
                for (std::size_t t = 0; t < 1000 && points < 100; ++t) {
                    Rng rng(derive_seed(s.cfg.seed, 0x5d, t));
                    const MatrixTuple x = random_tuple(d, 1 + static_cast<Eigen::Index>(t % 3), rng);
                    try {
                        const CMatrix want = eval_expr(m, x);
                        const CMatrix got = eval_descriptor(r, x);
                        worst = std::max(worst, opnorm(got - want) / std::max(1.0, opnorm(want)));
                        ++points;
                    } catch (const OutOfDomain&) {
                    } catch (const OutOfPencilDomain&) {
                    }
                }
                s.result = json{{"expr", expr_text},
                                {"descriptor",
                                 {{"k", r.k},
                                  {"dim", r.A.level()},
                                  {"A", json_io::to_json(r.A, true)},
                                  {"B", json_io::to_json(r.B)},
                                  {"C", json_io::to_json(r.C)}}},
                                {"check", {{"points", points}, {"max_error", worst}, {"ok", points > 0 && worst <= s.cfg.tol}}}};
                if (!(points > 0 && worst <= s.cfg.tol)) s.exit_code = kExitVerdict;
            }
        } else if (*fm_cmd) {
            s.command = "fm-check";
            const MatPoly p = json_io::poly_from_json(json_io::read_file(poly_file));
            const FMRealization fm = json_io::fm_from_json(json_io::read_file(fm_file));
            const BallSpec spec = ball_from_arg(ball_arg, p.d());
            const FMCheck chk = fm_check(p, fm, spec, 100, s.cfg.seed, s.cfg.tol);
            Budget b = s.cfg.budget();
            const FMBound bound = fm_bound(fm, spec, fm_r, b);
            double weighted = 0.0;
            const auto parts = homogeneous_part_norms(p, spec, b);
            for (std::size_t j = 1; j < parts.size(); ++j) weighted += static_cast<double>(j) * parts[j].value;
            s.result = json{{"check",
                             {{"points", chk.points},
                              {"skipped", chk.skipped},
                              {"max_residual", chk.max_residual},
                              {"irreducible", chk.irreducible},
                              {"algebra_dim", chk.algebra_dim}}},
                            {"bound",
                             {{"r", fm_r},
                              {"left_factor", bound.left},
                              {"right_factor_at_ones", bound.right_at_ones},
                              {"right_factor_sampled", bound.right_sampled},
                              {"right_factor", bound.right},
                              {"pencil_factor", bound.pencil_bound},
                              {"pencil_factor_sampled", bound.pencil_sampled},
                              {"pencil_factor_certified", bound.pencil_bound_certified},
                              {"dual_certificate", DualCertificate::verdict_name(bound.certificate.verdict)},
                              {"value", bound.value}}},
                            {"weighted_part_sum", {{"value", weighted}, {"flag", "estimated"}}},
                            {"ngn_constant", fm_ngn_constant(bound.left, bound.right, weighted)}};
        } else if (*psum_cmd) {
            s.command = "psum";
            if (!psum_check_flag && !psum_decoupled_flag) throw InvalidArgument("psum: pass --check or --decoupled");
            s.result = psum_check_flag ? cli::reproduce_psum(s.cfg) : cli::reproduce_ex56(s.cfg);
        } else if (*repro_cmd) {
            s.command = "reproduce";
            const auto& table = cli::reproducers();
            const auto it = table.find(example_id);
            if (it == table.end()) throw InvalidArgument("unknown example id " + example_id);
            const json values = it->second(s.cfg);
            const json expected = json_io::read_file(data_dir() + "/expected/" + example_id + ".json");
            bool pass = false;
            const json checks = cli::run_checks(values, expected, pass);
            s.result = json{{"id", example_id}, {"values", values}, {"checks", checks}, {"pass", pass}};
            if (!pass) s.exit_code = kExitVerdict;
        }
        s.emit();
        return s.exit_code;
    } catch (const Error& e) {
        std::cerr << error_json(e).dump() << "\n";
        return is_verdict_error(e) ? kExitVerdict : kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << json{{"error", "InvalidArgument"}, {"message", e.what()}}.dump() << "\n";
        return kExitInput;
    }
}
