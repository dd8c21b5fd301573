#include <dualact/algdual.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace dualact;

namespace {

Mat row(std::initializer_list<double> v)
{
    Mat m(1, static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double x : v)
        m(0, i++) = x;
    return m;
}

Vec vec(std::initializer_list<double> v)
{
    Vec out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

Mat random_matrix(std::mt19937_64& rng, int r, int c)
{
    std::uniform_real_distribution<double> u(-1, 1);
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            m(i, j) = u(rng);
    return m;
}

} // namespace

TEST(SolveInner, LinearClosedForm)
{
    auto sys = linear_system(row({1, 1}), vec({2}));
    auto h = AuxiliaryPotential::shifted_quadratic(Vec::Zero(2), 1.0);
    Vec x = solve_inner(sys, h, vec({-1}), AlgConfig{});
    EXPECT_LE((x - vec({1, 1})).norm(), 1e-12);
}

TEST(SolveInner, ZeroMultiplierGivesBase)
{
    auto h = AuxiliaryPotential::shifted_quadratic(vec({0.3, -0.2}), 2.0);
    Vec x = solve_inner(circle_line(), h, Vec::Zero(2), AlgConfig{});
    EXPECT_LE((x - h.base).norm(), 1e-14);
}

TEST(SolveInner, ScalarQuadraticClosedForm)
{
    auto h = AuxiliaryPotential::shifted_quadratic(vec({1}), 2.0);
    EXPECT_NEAR(solve_inner(scalar_quadratic(), h, vec({0}), AlgConfig{})[0], 1.0, 1e-12);
    EXPECT_NEAR(solve_inner(scalar_quadratic(), h, vec({-2}), AlgConfig{})[0], -1.0, 1e-12);
}

TEST(DualObjective, GradientIsResidualAtInnerSolution)
{
    auto sys = linear_system(row({1, 1}), vec({2}));
    auto h = AuxiliaryPotential::shifted_quadratic(Vec::Zero(2), 1.0);
    EXPECT_NEAR(dual_value_grad(sys, h, vec({-1}), AlgConfig{}).grad[0], 0.0, 1e-12);
    auto h2 = AuxiliaryPotential::shifted_quadratic(vec({0.2, 0.7}), 3.0);
    auto st = dual_value_grad(circle_line(), h2, Vec::Zero(2), AlgConfig{});
    EXPECT_LE((st.grad - circle_line().residual(h2.base)).norm(), 1e-14);
}

TEST(DualObjective, GradientMatchesFiniteDifferences)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    auto h = AuxiliaryPotential::shifted_quadratic(vec({1, 0.5}), 2.0);
    AlgConfig cfg;
    for (int s = 0; s < 10; ++s) {
        Vec z = vec({u(rng), u(rng)});
        Vec g = dual_value_grad(circle_line(), h, z, cfg).grad;
        Vec fd = fd_gradient([&](const Vec& y) { return dual_value_grad(circle_line(), h, y, cfg).value; }, z, 1e-6);
        EXPECT_LE((g - fd).norm() / std::max(1.0, g.norm()), 1e-6);
    }
}

TEST(DualObjective, HessianMatchesFiniteDifferences)
{
    auto h = AuxiliaryPotential::shifted_quadratic(vec({1, 0.5}), 2.0);
    AlgConfig cfg;
    Vec z = vec({0.1, -0.2});
    Vec x = solve_inner(circle_line(), h, z, cfg);
    Mat hess = dual_hessian(circle_line(), h, z, x);
    Mat fd = fd_jacobian([&](const Vec& y) { return dual_value_grad(circle_line(), h, y, cfg).grad; }, z, 1e-6);
    EXPECT_LE((hess - fd).norm(), 1e-6);
}

TEST(SolveDual, MinimumNormSolution)
{
    auto r = solve_dual(linear_system(row({1, 1}), vec({2})), AuxiliaryPotential::shifted_quadratic(Vec::Zero(2), 1.0),
                        Vec::Zero(1), AlgConfig{});
    ASSERT_TRUE(r.cp.converged);
    EXPECT_LE((r.x - vec({1, 1})).norm(), 1e-10);
}

TEST(SolveDual, CircleLineRoot)
{
    auto r = solve_dual(circle_line(), AuxiliaryPotential::shifted_quadratic(vec({1, 0}), 4.0), Vec::Zero(2),
                        AlgConfig{});
    ASSERT_TRUE(r.cp.converged);
    EXPECT_NEAR(r.x[0], 1 / std::sqrt(2.0), 1e-8);
    EXPECT_NEAR(r.x[1], 1 / std::sqrt(2.0), 1e-8);
    EXPECT_LE(circle_line().residual(r.x).norm(), 1e-8);
}

TEST(SolveDual, InconsistentSystemIsFlagged)
{
    Mat a(2, 1);
    a << 1, 1;
    auto r = solve_dual(linear_system(a, vec({0, 1})), AuxiliaryPotential::shifted_quadratic(Vec::Zero(1), 1.0),
                        Vec::Zero(2), AlgConfig{});
    EXPECT_FALSE(r.cp.converged);
    // min over x of ‖(x, x − 1)‖ is 1/√2.
    EXPECT_GE(r.best_primal_residual, 0.49);
}

TEST(HInvariance, CircleLineAcrossCoefficients)
{
    auto rep = h_invariance_check(circle_line(), AuxiliaryPotential::shifted_quadratic(vec({1, 0}), 4.0),
                                  AuxiliaryPotential::shifted_quadratic(vec({1, 0}), 40.0), Vec::Zero(2), AlgConfig{});
    EXPECT_TRUE(rep.pass);
    EXPECT_LE(rep.gap, 1e-6);
}

TEST(HInvariance, SquareLinearSystem)
{
    std::mt19937_64 rng(3);
    Mat a = random_matrix(rng, 4, 4);
    Vec b = random_matrix(rng, 4, 1).col(0);
    auto rep = h_invariance_check(linear_system(a, b), AuxiliaryPotential::shifted_quadratic(Vec::Zero(4), 1.0),
                                  AuxiliaryPotential::shifted_quadratic(Vec::Zero(4), 7.0), Vec::Zero(4), AlgConfig{});
    ASSERT_TRUE(rep.first_converged && rep.second_converged);
    EXPECT_LE(rep.gap, 1e-10);
}

TEST(HInvariance, BaseSelectsTheRoot)
{
    auto rep = h_invariance_check(scalar_quadratic(), AuxiliaryPotential::shifted_quadratic(vec({1}), 2.0),
                                  AuxiliaryPotential::shifted_quadratic(vec({-1}), 2.0), Vec::Zero(1), AlgConfig{});
    ASSERT_TRUE(rep.first_converged && rep.second_converged);
    EXPECT_NEAR(rep.gap, 2.0, 1e-10);
    EXPECT_FALSE(rep.pass);
}

TEST(LeastSquares, ConsistentAgreesWithDual)
{
    auto r = least_squares_compare(row({1, 1}), vec({2}), 1.0);
    EXPECT_TRUE(r.ls_regularized);  // ĀᵀĀ is singular here
    EXPECT_LE((r.x_ls - vec({1, 1})).norm(), 1e-10);
    EXPECT_LE((r.x_dual - vec({1, 1})).norm(), 1e-10);

    auto id = least_squares_compare(Mat::Identity(2, 2), vec({3, 4}), 1.0);
    EXPECT_FALSE(id.ls_regularized);
    EXPECT_LE((id.x_ls - vec({3, 4})).norm(), 1e-12);
    EXPECT_LE((id.x_dual - vec({3, 4})).norm(), 1e-10);
}

TEST(LeastSquares, InconsistentReturnsLeastSquares)
{
    Mat a(2, 2);
    a << 1, 0, 0, 0;
    auto r = least_squares_compare(a, vec({1, 1}), 1.0);
    EXPECT_LE((r.x_ls - vec({1, 0})).norm(), 1e-10);
    EXPECT_FALSE(r.dual_converged);
}

TEST(MinNormOracle, Examples)
{
    EXPECT_LE((minnorm_oracle(row({1, 1}), vec({2})) - vec({1, 1})).norm(), 1e-12);
    EXPECT_LE((minnorm_oracle(row({2, 0}), vec({4})) - vec({2, 0})).norm(), 1e-12);
}

TEST(MinNormOracle, RandomSystemIsOrthogonalToNullSpace)
{
    std::mt19937_64 rng(9);
    Mat a = random_matrix(rng, 3, 6);
    Vec b = a * random_matrix(rng, 6, 1).col(0);
    Vec x = minnorm_oracle(a, b);
    EXPECT_LE((a * x - b).norm(), 1e-10);
    Eigen::FullPivLU<Mat> lu(a);
    EXPECT_LE((lu.kernel().transpose() * x).norm(), 1e-10);
}

TEST(MinNormOracle, InconsistentThrows)
{
    Mat a(2, 1);
    a << 1, 1;
    EXPECT_THROW(minnorm_oracle(a, vec({0, 1})), SolveError);
}

TEST(AuxiliaryPotentialTest, RejectsNonPositiveCoefficient)
{
    EXPECT_THROW(AuxiliaryPotential::shifted_quadratic(Vec::Zero(2), 0.0), ConfigError);
}
