#include <dualact/fdmpoint.hpp>

#include <gtest/gtest.h>

using namespace dualact;

namespace {

Mat3 random_mat(std::mt19937_64& rng, double amp)
{
    std::uniform_real_distribution<double> u(-amp, amp);
    Mat3 m;
    for (int i = 0; i < 9; ++i)
        m.data()[i] = u(rng);
    return m;
}

PrimalPointState random_state(std::mt19937_64& rng)
{
    PrimalPointState s;
    s.W = Mat3::Identity() + random_mat(rng, 0.3);
    s.rho = 1 + std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
    s.v = random_mat(rng, 0.5).col(0);
    s.alpha = random_mat(rng, 0.5);
    return s;
}

VelocityLaw random_linear_law(std::mt19937_64& rng)
{
    VelocityLaw law;
    law.V0 = random_mat(rng, 1).col(1);
    for (int s = 0; s < 3; ++s) {
        law.K_alpha[s] = random_mat(rng, 0.5);
        law.K_W[s] = random_mat(rng, 0.5);
    }
    law.k_rho = random_mat(rng, 0.5).col(2);
    return law;
}

Vec3 row(const Mat3& m, int i) { return m.row(i).transpose(); }

// Same density written with cross products, curls and matrix contractions.
double density_by_vector_identities(const DualDerivativeData& d, const PrimalPointState& u, const MaterialPoint& m)
{
    const Vec3 V = m.V.value(u, m.rho_bar);
    Mat3 G = d.grad_lambda;
    double s = -(u.W.cwiseProduct(d.dt_A)).sum() + (d.B.cwiseProduct(u.alpha)).sum();
    for (int i = 0; i < 3; ++i) {
        double div = d.grad_A(i, 0, 0) + d.grad_A(i, 1, 1) + d.grad_A(i, 2, 2);
        s -= row(u.W, i).dot(u.v) * div;
        s -= row(d.A, i).dot(row(u.alpha, i).cross(u.v));
        s -= row(d.A, i).dot(row(u.alpha, i).cross(V));
        Vec3 curl(d.grad_B(i, 2, 1) - d.grad_B(i, 1, 2), d.grad_B(i, 0, 2) - d.grad_B(i, 2, 0),
                  d.grad_B(i, 1, 0) - d.grad_B(i, 0, 1));
        s += row(u.W, i).dot(curl);
    }
    s -= u.rho * (d.dt_theta + u.v.dot(d.grad_theta) + u.v.dot(d.dt_lambda) + u.v.dot(G * u.v));
    s -= u.rho * ((u.W.transpose() * m.psi_prime(u.W)).cwiseProduct(G)).sum();
    return s + m.H(u);
}

} // namespace

TEST(FdmPoint, PackRoundTrip)
{
    std::mt19937_64 rng(1);
    auto s = random_state(rng);
    EXPECT_EQ(PrimalPointState::unpack(s.pack()).pack(), s.pack());
    auto d = random_derivative_data(rng, 1);
    EXPECT_EQ(DualDerivativeData::unflatten(d.flatten()).flatten(), d.flatten());
    EXPECT_LE(d.max_abs(), 1.0);
    EXPECT_NO_THROW(d.validate(1));
    EXPECT_THROW(d.validate(0.01), ConfigError);
}

TEST(FdmPoint, ZeroDataAtBase)
{
    MaterialPoint m;
    DualDerivativeData d;
    EXPECT_EQ(lagrangian_density(d, m.base(), m), 0.0);
    EXPECT_EQ(invert_residual(d, m.base(), m).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(FdmPoint, DensityIsLinearInData)
{
    std::mt19937_64 rng(2);
    MaterialPoint m;
    m.V = random_linear_law(rng);
    auto u = random_state(rng);
    auto d1 = random_derivative_data(rng, 1), d2 = random_derivative_data(rng, 1);
    auto sum = DualDerivativeData::unflatten(2 * d1.flatten() - 3 * d2.flatten());
    double h = m.H(u);
    double lhs = lagrangian_density(sum, u, m) - h;
    double rhs = 2 * (lagrangian_density(d1, u, m) - h) - 3 * (lagrangian_density(d2, u, m) - h);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST(FdmPoint, MatchesVectorIdentityForm)
{
    std::mt19937_64 rng(3);
    for (int s = 0; s < 20; ++s) {
        MaterialPoint m;
        m.V = random_linear_law(rng);
        auto u = random_state(rng);
        auto d = random_derivative_data(rng, 1);
        double a = lagrangian_density(d, u, m), b = density_by_vector_identities(d, u, m);
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST(FdmPoint, ResidualIsGradientOfDensity)
{
    std::mt19937_64 rng(4);
    for (int s = 0; s < 20; ++s) {
        MaterialPoint m;
        m.c_W = m.c_rho = m.c_v = m.c_alpha = 3;
        m.V = random_linear_law(rng);
        auto u = random_state(rng);
        auto d = random_derivative_data(rng, 1);
        Vec fd = fd_gradient([&](const Vec& x) { return lagrangian_density(d, PrimalPointState::unpack(x), m); },
                             u.pack(), 1e-5);
        Vec g = invert_residual(d, u, m);
        EXPECT_LE((fd - g).norm() / std::max(1.0, g.norm()), 1e-6);
    }
}

TEST(FdmPoint, ConstantVelocityHandReduction)
{
    // Only A is nonzero, with v = 0, W = I and ρ = ρ̄: ℒ = −Σ_i A_i·(α_i × V) + ½c_α‖α‖².
    std::mt19937_64 rng(5);
    MaterialPoint m;
    m.V.V0 = Vec3(1, -2, 0.5);
    DualDerivativeData d;
    d.A = random_mat(rng, 1);
    PrimalPointState u = m.base();
    u.alpha = random_mat(rng, 1);
    double expect = 0.5 * m.c_alpha * u.alpha.squaredNorm();
    for (int i = 0; i < 3; ++i)
        expect -= row(d.A, i).dot(row(u.alpha, i).cross(m.V.V0));
    EXPECT_NEAR(lagrangian_density(d, u, m), expect, 1e-12 * std::abs(expect));
}

TEST(FdmPoint, ZeroDataSolvesToBase)
{
    MaterialPoint m;
    m.rho_bar = 1.7;
    auto r = solve_pointwise(DualDerivativeData{}, m, m.base(), PointSolveConfig{});
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(distance_from_base(r.state, m), 0.0);
    EXPECT_TRUE(r.warning.empty());
}

TEST(FdmPoint, VelocityBlockClosedForm)
{
    // With only ∇θ and ∂tλ nonzero: v = ρ g / c_v, ρ = ρ̄ / (1 − |g|²/(c_v c_ρ)), W = I, α = 0.
    MaterialPoint m;
    m.c_v = 50;
    m.c_rho = 40;
    DualDerivativeData d;
    d.grad_theta = Vec3(0.3, -0.2, 0.1);
    d.dt_lambda = Vec3(0.5, 0.4, -0.6);
    Vec3 g = d.grad_theta + d.dt_lambda;
    double rho = m.rho_bar / (1 - g.squaredNorm() / (m.c_v * m.c_rho));
    auto r = solve_pointwise(d, m, m.base(), PointSolveConfig{});
    EXPECT_NEAR(r.state.rho, rho, 1e-10);
    EXPECT_LE((r.state.v - rho * g / m.c_v).norm(), 1e-10);
    EXPECT_LE((r.state.W - Mat3::Identity()).norm(), 1e-10);
    EXPECT_LE(r.state.alpha.norm(), 1e-10);
}

TEST(FdmPoint, RandomSamplesConverge)
{
    std::mt19937_64 rng(6);
    MaterialPoint m;
    m.V = random_linear_law(rng);
    for (int s = 0; s < 20; ++s) {
        auto d = random_derivative_data(rng, 1);
        auto r = solve_pointwise(d, m, m.base(), PointSolveConfig{});
        EXPECT_LE(r.residual, 1e-10);
        EXPECT_LE(invert_residual(d, r.state, m).lpNorm<Eigen::Infinity>(), 1e-10);
    }
}

TEST(FdmPoint, DistanceShrinksWithCoefficients)
{
    std::mt19937_64 rng(7);
    auto d = random_derivative_data(rng, 1);
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {1e3, 1e4, 1e5}) {
        MaterialPoint m;
        m.c_W = m.c_rho = m.c_v = m.c_alpha = c;
        double dist = distance_from_base(solve_pointwise(d, m, m.base(), PointSolveConfig{}).state, m);
        EXPECT_LT(dist, prev);
        prev = dist;
    }
}

TEST(FdmPoint, WeakCoefficientsWarn)
{
    std::mt19937_64 rng(8);
    MaterialPoint m;
    m.c_W = m.c_rho = m.c_v = m.c_alpha = 5;
    auto d = DualDerivativeData::unflatten(0.01 * random_derivative_data(rng, 1).flatten());
    auto r = solve_pointwise(d, m, m.base(), PointSolveConfig{});
    EXPECT_FALSE(r.warning.empty());
    EXPECT_LE(r.residual, 1e-10);
}

TEST(FdmPoint, RejectsBadCoefficients)
{
    MaterialPoint m;
    m.c_v = 0;
    EXPECT_THROW(solve_pointwise(DualDerivativeData{}, m, m.base(), PointSolveConfig{}), ConfigError);
}
