#include <gtest/gtest.h>

#include <random>

#include "freeball/ncball.hpp"
#include "oracle.hpp"

using namespace freeball;

namespace {

double rowball_norm(const MatrixTuple& x) {
    CMatrix g = CMatrix::Zero(x.level(), x.level());
    for (const CMatrix& m : x.matrices()) g += m * m.adjoint();
    return std::sqrt(oracle::opnorm(g));
}

}  // namespace

TEST(NCBall, QNormMatchesDefinitions)
{
    std::mt19937_64 gen(31);
    for (int t = 0; t < 20; ++t) {
        const MatrixTuple x({oracle::random_matrix(3, gen), oracle::random_matrix(3, gen)});
        EXPECT_NEAR(q_norm(BallSpec::rowball(2), x), rowball_norm(x), 1e-10 * rowball_norm(x));
        EXPECT_NEAR(q_norm(BallSpec::polydisk(2), x),
                    std::max(oracle::opnorm(x[0]), oracle::opnorm(x[1])), 1e-10 * rowball_norm(x));
        // General ball with Q = diag(E11, E22) is the polydisk again.
        CMatrix e1 = CMatrix::Zero(2, 2), e2 = CMatrix::Zero(2, 2);
        e1(0, 0) = 1.0;
        e2(1, 1) = 1.0;
        const BallSpec gen_ball = BallSpec::general({e1, e2});
        EXPECT_NEAR(q_norm(gen_ball, x), q_norm(BallSpec::polydisk(2), x), 1e-10 * rowball_norm(x));
    }
}

TEST(NCBall, GeneralBallRejectsDependentCoefficients)
{
    EXPECT_THROW(BallSpec::general({identity(2), 2.0 * identity(2)}), InvalidArgument);
    EXPECT_THROW(BallSpec::general({identity(2), identity(3)}), DimensionMismatch);
    EXPECT_THROW(BallSpec::general({}), InvalidArgument);
}

TEST(NCBall, Membership)
{
    const BallSpec bidisk = BallSpec::polydisk(2);
    EXPECT_EQ(membership(bidisk, MatrixTuple::scalars({0.5, 0.5})), Membership::Interior);
    EXPECT_EQ(membership(bidisk, MatrixTuple::scalars({1.0, 0.5})), Membership::Boundary);
    EXPECT_EQ(membership(bidisk, MatrixTuple::scalars({1.0, 1.1})), Membership::Outside);
    const BallSpec row = BallSpec::rowball(2);
    EXPECT_EQ(membership(row, MatrixTuple::scalars({0.8, 0.6})), Membership::Boundary);
    EXPECT_EQ(membership(row, MatrixTuple::scalars({0.8, 0.7})), Membership::Outside);
}

TEST(NCBall, SamplesLieInsideAndAreSeeded)
{
    for (const BallSpec& spec : {BallSpec::rowball(2), BallSpec::polydisk(3)}) {
        for (const SampleMode mode : {SampleMode::Interior, SampleMode::Boundary}) {
            const auto pts = sample(spec, 3, 1.0, 50, 7, mode);
            for (const MatrixTuple& x : pts) {
                EXPECT_LT(q_norm(spec, x), 1.0);
                if (mode == SampleMode::Boundary) EXPECT_NEAR(q_norm(spec, x), 1.0, 1e-5);
            }
            const auto again = sample(spec, 3, 1.0, 50, 7, mode);
            for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(pts[i][0], again[i][0]);
        }
    }
    EXPECT_THROW(sample(BallSpec::polydisk(2), 1, 1.5, 1, 0), InvalidArgument);
}

TEST(NCBall, NormOverBallIsLowerBound)
{
    // sup over the row ball of ||X1 + X2|| is sqrt 2; over the bidisk it is 2.
    const Evaluator sum = [](const MatrixTuple& x) { return CMatrix(x[0] + x[1]); };
    Budget b;
    b.levels = {1, 2};
    const double row = norm_over_ball(sum, BallSpec::rowball(2), b).lower_bound;
    EXPECT_LE(row, std::sqrt(2.0) + 1e-9);
    EXPECT_GT(row, 1.40);
    const double bi = norm_over_ball(sum, BallSpec::polydisk(2), b).lower_bound;
    EXPECT_LE(bi, 2.0 + 1e-9);
    EXPECT_GT(bi, 1.99);
}

TEST(NCBall, NormOverBallDeterministicAcrossJobs)
{
    const Evaluator f = [](const MatrixTuple& x) { return CMatrix(x[0] * x[1] - x[1] * x[0]); };
    Budget b;
    b.levels = {2, 3};
    b.jobs = 1;
    const double one = norm_over_ball(f, BallSpec::polydisk(2), b).lower_bound;
    b.jobs = 4;
    EXPECT_EQ(norm_over_ball(f, BallSpec::polydisk(2), b).lower_bound, one);
}

TEST(NCBall, AllSamplesOutOfDomain)
{
    const Evaluator f = [](const MatrixTuple&) -> CMatrix { throw Singular("always", 0.0); };
    EXPECT_THROW(norm_over_ball(f, BallSpec::polydisk(1), {}), AllSamplesOutOfDomain);
}

TEST(NCBall, DualMembershipRankOne)
{
    CMatrix e11 = CMatrix::Zero(2, 2);
    e11(0, 0) = 1.0;
    const BallSpec bidisk = BallSpec::polydisk(2);
    const DualCertificate in = dual_membership(bidisk, MatrixTuple({0.5 * e11, 0.5 * e11}));
    EXPECT_EQ(in.verdict, DualCertificate::Verdict::CertifiedInside);
    EXPECT_NEAR(in.max_norm, 1.0, 1e-12);
    const DualCertificate out = dual_membership(bidisk, MatrixTuple({e11, e11}));
    EXPECT_EQ(out.verdict, DualCertificate::Verdict::OutsideWitness);
    EXPECT_GT(out.max_norm, 1.9);
    EXPECT_TRUE(out.witness.has_value());
}
