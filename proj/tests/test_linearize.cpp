#include <gtest/gtest.h>

#include <random>

#include "freeball/linearize.hpp"
#include "oracle.hpp"

using namespace freeball;

namespace {

std::vector<MatPoly> worked_examples() {
    return {oracle::symmetric_example(), oracle::boundary_zero_example(), oracle::third_example()};
}

CMatrix eval_terms(const MatPoly& p, const MatrixTuple& x) {
    return oracle::poly_eval({p.terms().begin(), p.terms().end()}, x);
}

}  // namespace

TEST(Linearize, IdentityHoldsOnCoefficientsAndPoints)
{
    std::mt19937_64 gen(51);
    for (const MatPoly& p : worked_examples()) {
        for (const bool trimmed : {false, true}) {
            const Linearization lin = trimmed ? trim(linearize(p)) : linearize(p);
            const LinearizationCheck chk = verify(lin, BallSpec::polydisk(2), 60, 3);
            EXPECT_TRUE(chk.ok);
            EXPECT_LE(chk.symbolic_residual, 1e-15);
            EXPECT_TRUE(chk.unitriangular);
            for (int n : {1, 2, 3}) {
                const MatrixTuple x = oracle::random_bidisk_point(n, gen);
                const CMatrix lhs = eval_terms(lin.p.pad(lin.pad), x);
                const CMatrix rhs =
                    eval_terms(lin.F, x) * oracle::pencil(lin.A.matrices(), x.matrices()) * eval_terms(lin.G, x);
                EXPECT_LT(oracle::max_abs(lhs - rhs), 1e-12);
            }
        }
    }
}

TEST(Linearize, PencilIsLinear)
{
    for (const MatPoly& p : worked_examples()) {
        const Linearization lin = trim(linearize(p));
        EXPECT_LE(lin.M.degree(), 1);
        EXPECT_EQ(lin.A.level(), lin.size());
        EXPECT_EQ(lin.perm.size(), static_cast<std::size_t>(lin.size()));
    }
}

TEST(Linearize, InverseFromPencilResolvent)
{
    // p(x)^-1 is the top-left block of G^-1 L_A^-1 F^-1.
    std::mt19937_64 gen(52);
    for (const MatPoly& p : worked_examples()) {
        const Linearization lin = trim(linearize(p));
        for (int n : {1, 2}) {
            const MatrixTuple x = oracle::random_bidisk_point(n, gen, 0.5);
            const CMatrix full = eval_terms(lin.G_inv, x) *
                                 oracle::inverse(oracle::pencil(lin.A.matrices(), x.matrices())) *
                                 eval_terms(lin.F_inv, x);
            const CMatrix want = oracle::inverse(eval_terms(p, x));
            EXPECT_LT(oracle::max_abs(full.topLeftCorner(n, n) - want), 1e-10);
        }
    }
}

TEST(Linearize, SymmetricExampleMatchesDisplayedPencil)
{
    const Linearization lin = trim(linearize(oracle::symmetric_example()));
    ASSERT_EQ(lin.size(), 3);
    const double s = std::sqrt(0.5);
    CMatrix az = CMatrix::Zero(3, 3), aw = CMatrix::Zero(3, 3);
    az(0, 2) = s;
    az(1, 0) = s;
    aw(0, 1) = s;
    aw(2, 0) = s;
    EXPECT_EQ(lin.A[0], az);
    EXPECT_EQ(lin.A[1], aw);
}

TEST(Linearize, AffineNeedsNoSteps)
{
    const MatPoly p = oracle::scalar(2, {{{}, 1.0}, {{0}, -0.5}, {{1}, 0.25}});
    const Linearization lin = linearize(p);
    EXPECT_TRUE(lin.steps.empty());
    EXPECT_EQ(lin.size(), 1);
    EXPECT_DOUBLE_EQ(lin.A[0](0, 0).real(), 0.5);
    EXPECT_DOUBLE_EQ(lin.A[1](0, 0).real(), -0.25);
}

TEST(Linearize, HigmanStepLowersTopWord)
{
    const MatPoly p = oracle::scalar(2, {{{}, 1.0}, {{0, 1, 0}, 1.0}});
    const HigmanStep st = higman_step(p);
    EXPECT_EQ(st.M.k(), 2);
    EXPECT_EQ(st.M.degree(), 2);
    const MatPoly lhs = p.pad(1);
    EXPECT_LE(lhs.coeff_distance(st.F_s * st.M * st.G_s), 1e-15);
    EXPECT_THROW(higman_step(MatPoly::identity(2, 1)), InvalidArgument);
}

TEST(Linearize, RejectsNonMonic)
{
    EXPECT_THROW(linearize(oracle::scalar(1, {{{}, 2.0}, {{0}, 1.0}})), NotMonicAtZero);
    EXPECT_THROW(atom_certificate(oracle::scalar(1, {{{0}, 1.0}})), NotMonicAtZero);
}

TEST(Linearize, MatrixValuedPolynomial)
{
    std::mt19937_64 gen(53);
    MatPoly p = MatPoly::identity(2, 2);
    p.add_term({0, 1}, oracle::random_matrix(2, gen, 0.3));
    p.add_term({1, 1, 0}, oracle::random_matrix(2, gen, 0.3));
    const Linearization lin = trim(linearize(p));
    const LinearizationCheck chk = verify(lin, BallSpec::rowball(2), 40);
    EXPECT_TRUE(chk.ok);
}

TEST(Atom, WorkedExamplesAreAtoms)
{
    const AtomReport a = atom_certificate(oracle::symmetric_example());
    EXPECT_TRUE(a.atom);
    EXPECT_EQ(a.irreducibility.algebra_dim, 9);
    const AtomReport b = atom_certificate(oracle::boundary_zero_example());
    EXPECT_TRUE(b.atom);
    EXPECT_EQ(b.irreducibility.algebra_dim, 4);
}

TEST(Atom, ProductIsInconclusive)
{
    // (1 - Z)(1 - W) factors, so its pencil is reducible.
    const MatPoly p = oracle::scalar(2, {{{}, 1.0}, {{0}, -1.0}, {{1}, -1.0}, {{0, 1}, 1.0}});
    const AtomReport r = atom_certificate(p);
    EXPECT_FALSE(r.atom);
    EXPECT_FALSE(r.irreducibility.irreducible);
}

TEST(Atom, NormalizesConstantTerm)
{
    const MatPoly p = oracle::scalar(2, {{{}, 2.0}, {{0, 1}, -1.0}, {{1, 0}, -1.0}});
    EXPECT_TRUE(atom_certificate(p).atom);
}
