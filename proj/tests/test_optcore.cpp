#include <dualact/causal.hpp>
#include <dualact/optcore.hpp>
#include <dualact/parallel.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace dualact;

namespace {

Vec v2(double a, double b)
{
    Vec v(2);
    v << a, b;
    return v;
}

} // namespace

TEST(NewtonCritical, LinearGradientConvergesImmediately)
{
    auto grad = [](const Vec& z) { return z; };
    auto hess = [](const Vec& z) { return Mat(Mat::Identity(z.size(), z.size())); };
    auto r = newton_critical(grad, hess, Vec::Constant(1, 5.0), NewtonConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, 2);
    EXPECT_NEAR(r.point[0], 0.0, 1e-12);
}

TEST(NewtonCritical, CubicRootIsFound)
{
    auto grad = [](const Vec& z) { return Vec((z.array() - 3).cube()); };
    auto hess = [](const Vec& z) { return Mat((3 * (z.array() - 3).square()).matrix().asDiagonal()); };
    NewtonConfig cfg;
    cfg.max_iter = 200;
    auto r = newton_critical(grad, hess, Vec::Zero(2), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.grad_norm, cfg.grad_tol);
    EXPECT_NEAR(r.point[0], 3.0, 1e-3);
}

TEST(NewtonCritical, ConstantGradientReportsFailure)
{
    auto grad = [](const Vec& z) { return Vec(Vec::Ones(z.size())); };
    auto hess = [](const Vec& z) { return Mat(Mat::Zero(z.size(), z.size())); };
    auto r = newton_critical(grad, hess, Vec::Zero(1), NewtonConfig{});
    EXPECT_FALSE(r.converged);
    EXPECT_DOUBLE_EQ(r.grad_norm, 1.0);
}

TEST(NewtonCritical, TraceIndicesAreMonotone)
{
    auto grad = [](const Vec& z) { return Vec(z.array().sinh()); };
    auto hess = [](const Vec& z) { return Mat(z.array().cosh().matrix().asDiagonal()); };
    auto r = newton_critical(grad, hess, Vec::Constant(3, 2.0), NewtonConfig{});
    ASSERT_TRUE(r.converged);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        EXPECT_EQ(r.trace[i].iteration, r.trace[i - 1].iteration + 1);
}

TEST(NewtonConfigTest, RejectsBadSettings)
{
    NewtonConfig c;
    c.grad_tol = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.shrink = 1;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SolveSymmetric, IdentityAndIndefiniteDiagonal)
{
    EXPECT_TRUE(solve_symmetric(Mat(Mat::Identity(2, 2)), v2(1, 2), 1e-12).isApprox(v2(1, 2)));
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = -3;
    EXPECT_TRUE(solve_symmetric(d, v2(2, 3), 1e-12).isApprox(v2(1, -1)));
    auto sp = SparseSymmetricMatrix::from_dense(d);
    EXPECT_TRUE(solve_symmetric(sp, v2(2, 3), 1e-12).isApprox(v2(1, -1)));
}

TEST(SolveSymmetric, SingularConsistentMeetsResidual)
{
    Mat a = Mat::Ones(2, 2);
    Vec x = solve_symmetric(a, v2(2, 2), 1e-10);
    EXPECT_LE((a * x - v2(2, 2)).norm(), 1e-10);
}

TEST(SolveSymmetric, SingularInconsistentThrows)
{
    Mat a = Mat::Ones(2, 2);
    EXPECT_THROW(solve_symmetric(a, v2(1, -1), 1e-10), SolveError);
}

TEST(SolveSymmetric, LargeSparseIndefinite)
{
    const int n = 3000;
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, (i % 2 ? 4.0 : -4.0));
        if (i + 1 < n) {
            t.emplace_back(i + 1, i, 1.0);
            t.emplace_back(i, i + 1, 1.0);
        }
    }
    SpMat a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    Vec x = Vec::LinSpaced(n, -1, 1);
    Vec b = a * x;
    Vec y = solve_symmetric(SparseSymmetricMatrix::from_full(a), b, 1e-10);
    EXPECT_LE((y - x).norm(), 1e-8);
}

TEST(FdGradient, Examples)
{
    auto half_norm = [](const Vec& z) { return 0.5 * z.squaredNorm(); };
    EXPECT_LE((fd_gradient(half_norm, v2(1, 2), 1e-6) - v2(1, 2)).norm(), 1e-8);
    auto prod = [](const Vec& z) { return z[0] * z[1]; };
    EXPECT_LE((fd_gradient(prod, v2(3, 4), 1e-6) - v2(4, 3)).norm(), 1e-8);
}

TEST(CausalFactorization, MatchesDirectSolve)
{
    // Block lower-triangular matrix with 3 levels of 4 unknowns.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    const int lev = 3, m = 4, n = lev * m;
    std::vector<Triplet> t;
    std::vector<int> rl(n), cl(n);
    for (int i = 0; i < n; ++i) {
        rl[i] = cl[i] = i / m;
        for (int j = 0; j < n; ++j)
            if (j / m <= i / m && (u(rng) > 0.3 || i == j))
                t.emplace_back(i, j, i == j ? 4 + u(rng) : u(rng));
    }
    SpMat a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    CausalFactorization fac(a, rl, cl);
    Vec b = Vec::LinSpaced(n, 1, 2);
    Mat dense(a);
    EXPECT_LE((fac.solve(b) - dense.fullPivLu().solve(b)).norm(), 1e-12);
    EXPECT_LE((fac.solve_transpose(b) - dense.transpose().fullPivLu().solve(b)).norm(), 1e-12);
}

TEST(CausalFactorization, RejectsAnticausalCoupling)
{
    SpMat a(2, 2);
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, 1.0}, {0, 1, 1.0}};
    a.setFromTriplets(t.begin(), t.end());
    EXPECT_ANY_THROW(CausalFactorization(a, {0, 1}, {0, 1}));
}

TEST(ParallelFor, ResultIndependentOfWorkerCount)
{
    std::vector<double> a(5000), b(5000);
    setenv("DUALACT_THREADS", "1", 1);
    parallel_for(5000, [&](long i) { a[i] = std::sin(0.1 * i); });
    setenv("DUALACT_THREADS", "4", 1);
    parallel_for(5000, [&](long i) { b[i] = std::sin(0.1 * i); });
    unsetenv("DUALACT_THREADS");
    EXPECT_EQ(a, b);
}

TEST(ParallelFor, PropagatesExceptions)
{
    setenv("DUALACT_THREADS", "2", 1);
    EXPECT_THROW(parallel_for(1000, [](long i) {
        if (i == 700)
            throw std::runtime_error("boom");
    }),
                 std::runtime_error);
    unsetenv("DUALACT_THREADS");
}
