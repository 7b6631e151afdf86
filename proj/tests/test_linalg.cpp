#include <gtest/gtest.h>

#include <random>

#include "freeball/linalg.hpp"
#include "freeball/matrix_tuple.hpp"
#include "oracle.hpp"

using namespace freeball;

TEST(Linalg, OpnormMatchesGramEigenvalue)
{
    std::mt19937_64 gen(1);
    for (int n : {1, 2, 3, 5, 8}) {
        for (int t = 0; t < 20; ++t) {
            const CMatrix a = oracle::random_matrix(n, gen);
            EXPECT_NEAR(opnorm(a), oracle::opnorm(a), 1e-10 * oracle::opnorm(a));
            EXPECT_NEAR(min_singular_value(a), oracle::min_sv(a), 1e-8 * oracle::opnorm(a));
        }
    }
}

TEST(Linalg, OpnormKnownValues)
{
    CMatrix j(2, 2);
    j << 1.0, 1.0, 0.0, 1.0;
    EXPECT_NEAR(opnorm(j), (1.0 + std::sqrt(5.0)) / 2.0, 1e-14);
    EXPECT_DOUBLE_EQ(opnorm(identity(4)), 1.0);
    EXPECT_DOUBLE_EQ(opnorm(CMatrix::Zero(3, 3)), 0.0);
}

TEST(Linalg, InverseMatchesGaussJordan)
{
    std::mt19937_64 gen(2);
    for (int n : {1, 2, 4, 7}) {
        for (int t = 0; t < 20; ++t) {
            const CMatrix a = oracle::random_matrix(n, gen) + 3.0 * identity(n);
            EXPECT_LT(oracle::max_abs(inverse(a) - oracle::inverse(a)), 1e-10);
            const CMatrix b = oracle::random_matrix(n, gen);
            EXPECT_LT(oracle::max_abs(solve(a, b) - oracle::inverse(a) * b), 1e-10);
        }
    }
}

TEST(Linalg, InverseThrowsOnSingular)
{
    CMatrix a(2, 2);
    a << 1.0, 2.0, 2.0, 4.0;
    EXPECT_THROW(inverse(a), Singular);
    EXPECT_THROW(solve(a, identity(2)), Singular);
    EXPECT_THROW(inverse(CMatrix::Zero(2, 3)), DimensionMismatch);
    try {
        inverse(a);
    } catch (const Singular& e) {
        EXPECT_LT(e.smallest_singular_value(), 1e-12);
    }
}

TEST(Linalg, KronMatchesLoops)
{
    std::mt19937_64 gen(3);
    const CMatrix a = oracle::random_matrix(2, gen), b = oracle::random_matrix(3, gen);
    EXPECT_LT(oracle::max_abs(kron(a, b) - oracle::kron(a, b)), 1e-15);
    // ||A (x) B|| = ||A|| ||B||
    EXPECT_NEAR(opnorm(kron(a, b)), opnorm(a) * opnorm(b), 1e-10);
}

TEST(Linalg, DirectSumIsBlockDiagonal)
{
    std::mt19937_64 gen(4);
    const CMatrix a = oracle::random_matrix(2, gen), b = oracle::random_matrix(3, gen);
    const CMatrix s = direct_sum(a, b);
    ASSERT_EQ(s.rows(), 5);
    EXPECT_EQ(s.topLeftCorner(2, 2), a);
    EXPECT_EQ(s.bottomRightCorner(3, 3), b);
    EXPECT_EQ(s.topRightCorner(2, 3), CMatrix::Zero(2, 3));
    EXPECT_NEAR(opnorm(s), std::max(opnorm(a), opnorm(b)), 1e-12);
}

TEST(Linalg, SpectralRadiusAndCondition)
{
    CMatrix n(2, 2);
    n << 0.0, 5.0, 0.0, 0.0;
    EXPECT_NEAR(spec_radius(n), 0.0, 1e-12);
    CMatrix s(2, 2);
    s << std::sqrt(3.0), 1.0, 1.0, std::sqrt(3.0);
    EXPECT_NEAR(cond2(s), 2.0 + std::sqrt(3.0), 1e-12);
    std::mt19937_64 gen(5);
    const CMatrix a = oracle::random_matrix(4, gen);
    EXPECT_LE(spec_radius(a), opnorm(a) * (1.0 + 1e-12));
}

TEST(Linalg, HermitianPartAndRank)
{
    CMatrix a(2, 2);
    a << cplx(1.0, 2.0), cplx(0.0, 1.0), cplx(0.0, 1.0), cplx(-3.0, 0.0);
    const CMatrix h = hermitian_part(a);
    EXPECT_LT(oracle::max_abs(h - h.adjoint()), 1e-15);
    EXPECT_NEAR(min_real_eig_hermitian_part(a), -3.0, 1e-12);
    CMatrix r(3, 3);
    r << 1, 2, 3, 2, 4, 6, 0, 0, 1;
    EXPECT_EQ(numerical_rank(r), 2);
}

TEST(Linalg, SeededRngIsReproducible)
{
    Rng a(42), b(42), c(43);
    const CMatrix x = ginibre(3, a), y = ginibre(3, b), z = ginibre(3, c);
    EXPECT_EQ(x, y);
    EXPECT_NE(x, z);
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
}

TEST(Linalg, NonFiniteRejected)
{
    CMatrix a = identity(2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(all_finite(a));
    EXPECT_THROW(checked(a), NonFinite);
    EXPECT_THROW(MatrixTuple({a}), NonFinite);
}

TEST(MatrixTupleOps, TensorPairMatchesKron)
{
    std::mt19937_64 gen(6);
    const MatrixTuple a({oracle::random_matrix(2, gen), oracle::random_matrix(2, gen)});
    const MatrixTuple x({oracle::random_matrix(3, gen), oracle::random_matrix(3, gen)});
    const CMatrix expect = oracle::kron(a[0], x[0]) + oracle::kron(a[1], x[1]);
    EXPECT_LT(oracle::max_abs(tensor_pair(a, x) - expect), 1e-13);
}

TEST(MatrixTupleOps, ShapeChecks)
{
    EXPECT_THROW(MatrixTuple({identity(2), identity(3)}), DimensionMismatch);
    const MatrixTuple x = MatrixTuple::scalars({0.5, cplx(0.0, 1.0)}, 2);
    EXPECT_EQ(x.d(), 2u);
    EXPECT_EQ(x.level(), 2);
    EXPECT_DOUBLE_EQ(x.norm(), 1.0);
    EXPECT_DOUBLE_EQ(x.scaled(0.5).norm(), 0.5);
}
