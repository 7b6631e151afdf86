#include <gtest/gtest.h>

#include <cstdio>
#include <numbers>
#include <random>

#include "freeball/freeball.hpp"
#include "oracle.hpp"

using namespace freeball;

namespace {

MatrixTuple displayed_pencil() {
    const double s = std::sqrt(0.5);
    CMatrix az = CMatrix::Zero(3, 3), aw = CMatrix::Zero(3, 3);
    az(0, 2) = s;
    az(1, 0) = s;
    aw(0, 1) = s;
    aw(2, 0) = s;
    return MatrixTuple({az, aw});
}

CMatrix unit3(Eigen::Index i, Eigen::Index j) {
    CMatrix e = CMatrix::Zero(3, 3);
    e(i, j) = 1.0;
    return e;
}

Budget budget(std::vector<Eigen::Index> levels, std::size_t samples) {
    Budget b;
    b.levels = std::move(levels);
    b.samples_per_level = samples;
    return b;
}

// Distance from x to the set {(u iI, conj(u) iI) : |u| = 1}, on which 1 - ZW/2 - WZ/2 is constant.
double orbit_distance_to_ii(const MatrixTuple& x) {
    const CMatrix ii = cplx(0.0, 1.0) * CMatrix::Identity(x.level(), x.level());
    double best = INFINITY;
    for (int k = 0; k < 20000; ++k) {
        const cplx u = std::polar(1.0, 2.0 * std::numbers::pi * k / 20000.0);
        best = std::min(best, std::max(oracle::opnorm(x[0] - u * ii), oracle::opnorm(x[1] - std::conj(u) * ii)));
    }
    return best;
}

// ||sum_{|w| = n} T_w T_w^*||^(1/2n)
double jsr_truncated(const MatrixTuple& t, int n) {
    CMatrix s = CMatrix::Identity(t.level(), t.level());
    for (int i = 0; i < n; ++i) {
        CMatrix next = CMatrix::Zero(t.level(), t.level());
        for (const CMatrix& m : t.matrices()) next += m * s * m.adjoint();
        s = next;
    }
    return std::pow(oracle::opnorm(s), 1.0 / (2.0 * n));
}

const std::map<std::string, std::string>& descriptions() {
    static const std::map<std::string, std::string> d{
        {"Criterion01_LinearizationExactness", "linearization of 1 - ZW/2 - WZ/2 is exact"},
        {"Criterion02_Atomhood", "both worked polynomials are atoms, algebra dims 9 and 4"},
        {"Criterion03_SymmetricBoundLedger", "52, 3 and empirical sup in [1.99, 2 + 1e-6]"},
        {"Criterion04_BoundaryZeroBoundLedger", "kappa = 2 + sqrt 3, 5 + 2 sqrt 3, no interior witness"},
        {"Criterion05_JordanDivergence", "Jordan pencil quotient matches closed form and diverges"},
        {"Criterion06_FMExample", "FM realization, golden ratio factors, constant 6.2360679"},
        {"Criterion07_ParallelSumSuite", "parallel sum is a contractive accretive function"},
        {"Criterion08_DecoupledParallelSums", "decoupled parallel sums are unbounded and distinct"},
        {"Criterion09_CyclicityHarness", "cyclicity approximants bounded and convergent, Jordan blows up"},
        {"Criterion10_OracleCoherence", "realization, joint spectral radius and Neumann oracles agree"},
    };
    return d;
}

class CriterionPrinter : public ::testing::EmptyTestEventListener {
    void OnTestEnd(const ::testing::TestInfo& info) override {
        const std::string name = info.name();
        const auto it = descriptions().find(name);
        const int number = std::stoi(name.substr(9, 2));
        std::printf("%s criterion %d: %s\n", info.result()->Passed() ? "PASS" : "FAIL", number,
                    it == descriptions().end() ? name.c_str() : it->second.c_str());
        std::fflush(stdout);
    }
};

}  // namespace

TEST(Acceptance, Criterion01_LinearizationExactness)
{
    const MatPoly p = oracle::symmetric_example();
    const Linearization lin = trim(linearize(p));
    ASSERT_EQ(lin.size(), 3);
    const MatrixTuple shown = displayed_pencil();
    // Permutation is recorded; the trimmed pencil is returned in the displayed order.
    ASSERT_EQ(lin.perm.size(), 3u);
    for (std::size_t j = 0; j < 2; ++j) {
        CMatrix permuted(3, 3);
        for (Eigen::Index r = 0; r < 3; ++r)
            for (Eigen::Index c = 0; c < 3; ++c)
                permuted(r, c) = lin.A[j](static_cast<Eigen::Index>(lin.perm[r]), static_cast<Eigen::Index>(lin.perm[c]));
        EXPECT_TRUE(lin.A[j] == shown[j] || permuted == shown[j]) << "A_" << j;
    }
    const LinearizationCheck chk = verify(lin, BallSpec::polydisk(2), 100, 0, 1e-10);
    EXPECT_TRUE(chk.ok);
    EXPECT_EQ(chk.points, 100u);
    // Coefficients are products of sqrt(1/2); exact up to the rounding of that constant.
    EXPECT_LE(chk.symbolic_residual, 4.0 * std::numeric_limits<double>::epsilon());
    std::mt19937_64 gen(1001);
    const MatPoly padded = lin.p.pad(lin.pad);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const MatrixTuple x = oracle::random_bidisk_point(1 + t % 4, gen);
        const CMatrix lhs = oracle::poly_eval({padded.terms().begin(), padded.terms().end()}, x);
        const CMatrix rhs = oracle::poly_eval({lin.F.terms().begin(), lin.F.terms().end()}, x) *
                            oracle::pencil(lin.A.matrices(), x.matrices()) *
                            oracle::poly_eval({lin.G.terms().begin(), lin.G.terms().end()}, x);
        worst = std::max(worst, oracle::max_abs(lhs - rhs));
    }
    EXPECT_LE(worst, 1e-10);
    const CMatrix& z = lin.A[0];
    const CMatrix& w = lin.A[1];
    const double r2 = 2.0 * std::sqrt(2.0);
    const double eps = 4.0 * std::numeric_limits<double>::epsilon();
    EXPECT_LE(oracle::max_abs(r2 * z * w * w - unit3(0, 1)), eps);
    EXPECT_LE(oracle::max_abs(r2 * z * z * w - unit3(1, 0)), eps);
    EXPECT_LE(oracle::max_abs(2.0 * z * z - unit3(1, 2)), eps);
    EXPECT_LE(oracle::max_abs(2.0 * w * w - unit3(2, 1)), eps);
}

TEST(Acceptance, Criterion02_Atomhood)
{
    const AtomReport a = atom_certificate(oracle::symmetric_example());
    const AtomReport b = atom_certificate(oracle::boundary_zero_example());
    EXPECT_TRUE(a.atom);
    EXPECT_TRUE(b.atom);
    EXPECT_EQ(irreducible(trim(linearize(oracle::symmetric_example())).A).algebra_dim, 9);
    EXPECT_EQ(irreducible(trim(linearize(oracle::boundary_zero_example())).A).algebra_dim, 4);
}

TEST(Acceptance, Criterion03_SymmetricBoundLedger)
{
    const PairBound ta = bound_theoremA(2.0, 2.0, 1, 2.0, 2.0, 1);
    EXPECT_EQ(ta.left, 52.0);
    EXPECT_EQ(ta.right, 52.0);
    EXPECT_EQ(bound_prop36(1.0, 2.0), 3.0);
    BoundOptions opt;
    opt.exact_inputs = {{"norm_F", 2.0}, {"norm_F_inv", 2.0}, {"norm_G", 2.0}, {"norm_G_inv", 2.0}, {"kappa", 1.0},
                        {"part_norm_1", 0.0}, {"part_norm_2", 1.0}};
    opt.budget = budget({1, 2}, 60);
    opt.r_grid = {0.0};
    const BoundReport rep = bound_report(oracle::symmetric_example(), BallSpec::polydisk(2), opt);
    for (const BoundEntry& e : rep.entries) {
        if (e.name == "theoremA") EXPECT_EQ(e.left, 52.0);
        if (e.name == "prop36") EXPECT_EQ(e.left, 3.0);
    }

    const EmpiricalSup es =
        empirical_sup(oracle::symmetric_example(), BallSpec::polydisk(2), default_r_grid(), budget({1, 2, 3, 4}, 200));
    EXPECT_GE(es.sup_left, 1.99);
    EXPECT_LE(es.sup_left, 2.0 + 1e-6);
    EXPECT_GE(es.sup_right, 1.99);
    EXPECT_LE(es.sup_right, 2.0 + 1e-6);
    ASSERT_TRUE(es.witness_left.has_value());
    EXPECT_LE(es.witness_left->r, 0.5);
    EXPECT_LE(orbit_distance_to_ii(es.witness_left->x), 1e-2);
}

TEST(Acceptance, Criterion04_BoundaryZeroBoundLedger)
{
    const MatPoly p = oracle::boundary_zero_example();
    const Linearization lin = trim(linearize(p));
    const SimilarityResult sim = similarity_to_dual_ball(lin.A, BallSpec::polydisk(2));
    ASSERT_TRUE(sim.found);
    EXPECT_NEAR(sim.kappa, 2.0 + std::sqrt(3.0), 1e-8);
    const double s3 = std::sqrt(3.0);
    CMatrix bz(2, 2), bw(2, 2);
    bz << 0.5, -0.5 / s3, -0.5 / s3, 1.0 / 6.0;
    bw << 0.5, 0.5 / s3, 0.5 / s3, 1.0 / 6.0;
    EXPECT_LE(oracle::max_abs(sim.B[0] - bz), 1e-10);
    EXPECT_LE(oracle::max_abs(sim.B[1] - bw), 1e-10);
    // B_Z = u u^t, B_W = v v^t
    CMatrix uv(2, 2);
    uv << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0);
    EXPECT_LE(oracle::max_abs(uv.col(0) * uv.col(0).transpose() - bz), 1e-15);
    EXPECT_NEAR(std::pow(oracle::opnorm(uv), 2), 1.0, 1e-10);
    EXPECT_EQ(sim.certificate.verdict, DualCertificate::Verdict::CertifiedInside);
    EXPECT_NEAR(sim.certificate.u_norm * sim.certificate.v_norm, 1.0, 1e-10);
    const auto l31 = bound_lemma31(p, {{1.0, true}, {4.0 / 3.0, true}, {1.0 / 3.0, true}});
    EXPECT_NEAR(bound_prop36(sim.kappa, l31.weighted), 5.0 + 2.0 * s3, 1e-8);

    const ScanOptions scan;
    ASSERT_EQ(scan.levels.size() * scan.samples_per_level, 10000u);
    const StabilityScan sc = stability_scan([&](const MatrixTuple& x) { return p.eval(x); }, BallSpec::polydisk(2), scan);
    EXPECT_GE(sc.samples, 10000u);
    EXPECT_FALSE(sc.witness_found);
    // 1 - 2Z/3 - 2W/3 + ZW/3 = ((2 - Z)(2 - W) - 1) / 3 for commuting scalars.
    const RatExpr factored = parse_expr("0.33333333333333331 * ((2 - Z) * (2 - W) - 1)", 2);
    EXPECT_EQ(eval_expr(factored, MatrixTuple::scalars({1.0, 1.0}))(0, 0), cplx(0.0, 0.0));
}

TEST(Acceptance, Criterion05_JordanDivergence)
{
    auto direct = [](double r) {
        CMatrix l_rx(2, 2), l_x(2, 2);
        l_rx << 1.0 - r * r, -r * r, 0.0, 1.0 - r * r;
        l_x << 1.0 - r, -r, 0.0, 1.0 - r;
        return std::abs((oracle::inverse(l_rx) * l_x)(0, 1));
    };
    const auto rows = jordan_demo({0.5, 0.9, 0.99, 0.999, 1.0 - 1e-4});
    for (const JordanRow& row : rows) {
        const double cf = row.r / ((1.0 - row.r) * (1.0 + row.r) * (1.0 + row.r));
        EXPECT_NEAR(row.top_right, cf, 1e-10 * std::max(1.0, cf));
        EXPECT_NEAR(row.top_right, direct(row.r), 1e-10 * std::max(1.0, cf));
    }
    EXPECT_NEAR(rows[2].top_right, 24.99937, 5e-6);
    EXPECT_GT(rows[4].top_right, 2.4e3);
}

TEST(Acceptance, Criterion06_FMExample)
{
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
    const FMCheck chk = fm_check(oracle::symmetric_example(), fm, BallSpec::polydisk(2), 100, 0, 1e-8);
    EXPECT_EQ(chk.points, 100u);
    EXPECT_LE(chk.max_residual, 1e-8);
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const FMBound bound = fm_bound(fm, BallSpec::polydisk(2), 1.0, budget({1, 2}, 100));
    EXPECT_NEAR(bound.left, phi, 1e-9);
    EXPECT_NEAR(bound.right, phi, 1e-9);
    EXPECT_NEAR(fm_ngn_constant(bound.left, bound.right, 2.0), 1.0 + std::pow(1.0 + std::sqrt(5.0), 2) / 2.0, 1e-8);
    EXPECT_NEAR(fm_ngn_constant(bound.left, bound.right, 2.0), 6.2360679, 1e-7);
}

TEST(Acceptance, Criterion07_ParallelSumSuite)
{
    const AccretiveOptions opt;
    const AccretivityReport rep = psum_check(opt);
    EXPECT_GE(rep.samples, 1000u);
    EXPECT_LE(rep.max_norm, 1.0 + 1e-9);
    EXPECT_GE(rep.min_re, -1e-9);
    EXPECT_GE(rep.min_re_inv_minus_identity, -1e-9);
    EXPECT_GE(rep.min_half_plane, -1e-9);
    ASSERT_EQ(rep.lambdas.size(), 3u);
    for (const LambdaRow& row : rep.lambdas) {
        EXPECT_LE(row.max_resolvent, 1.0 / row.lambda + 1e-9);
        EXPECT_LE(row.max_product, 1.0 + 1e-9);
    }
    EXPECT_TRUE(rep.ok);
    // Spot-check the sampled property against the oracle.
    std::mt19937_64 gen(1007);
    for (int t = 0; t < 50; ++t) {
        const MatrixTuple z = oracle::random_bidisk_point(1 + t % 4, gen);
        const CMatrix id = CMatrix::Identity(z.level(), z.level());
        const CMatrix ps = oracle::inverse(CMatrix(oracle::inverse(id - z[0]) + oracle::inverse(id - z[1])));
        EXPECT_LE(oracle::opnorm(ps), 1.0 + 1e-9);
    }
    EquivalenceOptions eq;
    eq.trials = 200;
    const auto& forms = psum_forms();
    ASSERT_EQ(forms.size(), 3u);
    for (std::size_t i = 0; i < forms.size(); ++i)
        for (std::size_t j = i + 1; j < forms.size(); ++j)
            EXPECT_TRUE(equivalent(parse_expr(forms[i], 2), parse_expr(forms[j], 2), eq, 2).equivalent) << i << j;
}

TEST(Acceptance, Criterion08_DecoupledParallelSums)
{
    const std::vector<double> grid{0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02};
    const DecoupledReport rep = decoupled_psum_demo(grid);
    ASSERT_EQ(rep.rows.size(), grid.size());
    double best_small = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto [x, y] = decoupled_witness(grid[i]);
        EXPECT_LT(oracle::opnorm(x), 1.0);
        EXPECT_LT(oracle::opnorm(y), 1.0);
        EXPECT_TRUE(rep.rows[i].in_ball);
        const CMatrix id = CMatrix::Identity(2, 2);
        const double left = oracle::opnorm(oracle::inverse(CMatrix(2.0 * id - x - y)) * (id - x) * (id - y));
        EXPECT_NEAR(rep.rows[i].norm_left, left, 1e-9 * left);
        if (i > 0) EXPECT_GT(rep.rows[i].norm_left, rep.rows[i - 1].norm_left);
        if (grid[i] <= 0.1) best_small = std::max(best_small, left);
    }
    EXPECT_GE(best_small, 10.0);
    EXPECT_FALSE(rep.left_swap.equivalent);
    EXPECT_TRUE(rep.left_swap.witness.has_value());
}

TEST(Acceptance, Criterion09_CyclicityHarness)
{
    const MatrixTuple probe = MatrixTuple::scalars({cplx(0.0, 0.5), cplx(0.0, 0.5)}, 2);
    const CyclicityReport rep = cyclicity_approximants({oracle::symmetric_example()}, nullptr, dyadic_r_seq(16),
                                                       BallSpec::polydisk(2), budget({1, 2, 3}, 100), {probe});
    ASSERT_EQ(rep.rows.size(), 16u);
    EXPECT_LE(rep.max_sup, 2.0 + 1e-6);
    for (const CyclicityRow& row : rep.rows) EXPECT_LE(row.sup_estimate, 2.0 + 1e-6) << row.n;
    EXPECT_LT(rep.rows[11].pointwise[0], 1e-3);
    // Independent value at the probe: |(1 + 1/4) / (1 + r^2 / 4) - 1|.
    const double r = rep.rows[11].r;
    EXPECT_NEAR(rep.rows[11].pointwise[0], std::abs(1.25 / (1.0 + r * r / 4.0) - 1.0), 1e-12);

    const CyclicityReport jordan = cyclicity_approximants({jordan_pencil_poly()}, nullptr, dyadic_r_seq(7),
                                                          BallSpec::polydisk(1), budget({1, 2, 3}, 100));
    EXPECT_GT(jordan.rows[6].sup_estimate, 20.0);
}

TEST(Acceptance, Criterion10_OracleCoherence)
{
    std::mt19937_64 gen(1010);
    std::size_t corpus = 0;
    double worst = 0.0;
    for (int attempt = 0; corpus < 50 && attempt < 500; ++attempt) {
        const oracle::GeneratedExpr g = oracle::random_expr(gen, 3);
        const RatExpr e = parse_expr(g.text, 2);
        Descriptor r;
        try {
            r = synth(e, 2);
        } catch (const DegenerateExpression&) {
            continue;
        }
        ++corpus;
        std::size_t points = 0;
        for (int t = 0; points < 100 && t < 1000; ++t) {
            const MatrixTuple x = oracle::random_bidisk_point(1 + t % 3, gen);
            CMatrix want, got;
            try {
                want = g.eval(x);
                got = eval_descriptor(r, x);
            } catch (const std::exception&) {
                continue;
            }
            worst = std::max(worst, oracle::max_abs(got - want) / std::max(1.0, oracle::max_abs(want)));
            ++points;
        }
        EXPECT_EQ(points, 100u) << g.text;
        const SynthCheck chk = synth_check(e, r, 2, 100, corpus);
        EXPECT_EQ(chk.points, 100u) << g.text;
        EXPECT_LE(chk.max_error, 1e-8) << g.text;
    }
    EXPECT_EQ(corpus, 50u);
    EXPECT_LE(worst, 1e-8);

    for (int t = 0; t < 20; ++t) {
        const MatrixTuple a({oracle::random_matrix(3, gen), oracle::random_matrix(3, gen)});
        const double exact = jsr_rowball(a), approx = jsr_truncated(a, 12);
        EXPECT_LT(std::abs(exact - approx) / approx, 0.05) << t;
    }

    for (int t = 0; t < 100; ++t) {
        const Eigen::Index m = 1 + t % 3;
        const MatrixTuple a({oracle::random_contraction(m, gen, 0.6), oracle::random_contraction(m, gen, 0.35)});
        const MatrixTuple x = oracle::random_bidisk_point(1 + t % 2, gen, 0.99);
        const NeumannResult nr = neumann_inv(a, x, 10000, 1e-9);
        const CMatrix direct = oracle::inverse(oracle::pencil(a.matrices(), x.matrices()));
        EXPECT_LE(oracle::opnorm(nr.value - direct), nr.truncation_bound + 1e-12) << t;
    }
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionPrinter);
    return RUN_ALL_TESTS();
}
