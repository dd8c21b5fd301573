#include <dualact/dislocdual.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace dualact;

namespace {

PlaneGrid grid(int n, int nt, double T)
{
    PlaneGrid g;
    g.nx = g.ny = n;
    g.nt = nt;
    g.T = T;
    return g;
}

std::function<double(double, double)> blob(double amp, double sigma, double xc, double yc)
{
    return [=](double x, double y) {
        return amp * std::exp(-((x - xc) * (x - xc) + (y - yc) * (y - yc)) / (2 * sigma * sigma));
    };
}

Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double amp)
{
    std::uniform_real_distribution<double> u(-amp, amp);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = u(rng);
    return v;
}

// ρ w_tt = μ Δw with w = φ on the boundary, leapfrog on a refined node grid;
// returns v = w_t at the coarse nodes for every coarse level.
std::vector<Vec> leapfrog_velocity(const std::function<double(double, double)>& phi, const PlaneGrid& g, double mu,
                                   double rho, int refine)
{
    const int nf = refine * (g.nx - 1) + 1;
    const double hf = g.hx() / refine, c2 = mu / rho;
    const int sub = std::max(1, static_cast<int>(std::ceil(g.dt() * std::sqrt(2 * c2) / (0.5 * hf))));
    const double dtf = g.dt() / sub;
    const int steps = sub * (g.nt - 1);
    auto at = [nf](int i, int j) { return j * nf + i; };
    std::vector<Vec> w(steps + 2, Vec::Zero(nf * nf));
    for (int j = 0; j < nf; ++j)
        for (int i = 0; i < nf; ++i)
            w[0][at(i, j)] = phi(g.x_min + i * hf, g.y_min + j * hf);
    auto lap = [&](const Vec& a, int i, int j) {
        return (a[at(i + 1, j)] + a[at(i - 1, j)] + a[at(i, j + 1)] + a[at(i, j - 1)] - 4 * a[at(i, j)]) / (hf * hf);
    };
    w[1] = w[0];
    for (int j = 1; j < nf - 1; ++j)
        for (int i = 1; i < nf - 1; ++i)
            w[1][at(i, j)] += 0.5 * dtf * dtf * c2 * lap(w[0], i, j);
    for (int n = 1; n <= steps; ++n) {
        w[n + 1] = w[n];
        for (int j = 1; j < nf - 1; ++j)
            for (int i = 1; i < nf - 1; ++i)
                w[n + 1][at(i, j)] = 2 * w[n][at(i, j)] - w[n - 1][at(i, j)] + dtf * dtf * c2 * lap(w[n], i, j);
    }
    std::vector<Vec> v;
    for (int k = 0; k < g.nt; ++k) {
        Vec vk = Vec::Zero(g.nx * g.ny);
        int n = k * sub;
        if (n > 0)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    int f = at(i * refine, j * refine);
                    vk[g.slot(i, j)] = (w[n + 1][f] - w[n - 1][f]) / (2 * dtf);
                }
        v.push_back(vk);
    }
    return v;
}

} // namespace

TEST(AntiPlane, InitialDistortionIsCurlConsistent)
{
    PlaneGrid g = grid(12, 5, 0.1);
    auto s = make_antiplane(1, 1, g, constant_velocity(1, 0), blob(1, 0.1, 0.5, 0.5), blob(0.1, 0.2, 0.4, 0.5),
                            blob(0.1, 0.2, 0.6, 0.5));
    EXPECT_NO_THROW(s.validate());
    s.alpha0[g.slot(3, 3)] += 1e-6;
    EXPECT_THROW(s.validate(), ConfigError);
    EXPECT_THROW(make_antiplane(-1, 1, g, constant_velocity(0, 0), {}).validate(), ConfigError);
}

TEST(AssembleP, ZeroDualGivesZero)
{
    DislocProblem pb(make_antiplane(1, 1, grid(8, 5, 0.1), constant_velocity(1, 0), blob(1, 0.1, 0.5, 0.5)), {});
    EXPECT_EQ(pb.assemble_p(Vec::Zero(pb.dual_unknowns())).norm(), 0.0);
}

TEST(AssembleP, LambdaEqualsTime)
{
    const double rho = 2.5;
    PlaneGrid g = grid(9, 7, 0.3);
    DislocProblem pb(make_antiplane(1.3, rho, g, constant_velocity(1, 0), blob(1, 0.1, 0.5, 0.5)), {});
    Vec full = Vec::Zero(static_cast<Eigen::Index>(pb.free_mask().size()));
    for (int k = 0; k < g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                full[g.node(i, j, k) * 4] = g.t(k);
    Vec p = pb.assemble_p(pb.restrict_free(full));
    for (int k = 1; k + 1 < g.nt; ++k)
        for (int j = 2; j + 2 < g.ny; ++j)
            for (int i = 2; i + 2 < g.nx; ++i) {
                int n = g.node(i, j, k);
                EXPECT_NEAR(p[n * 4 + field_v], -rho, 1e-10);
                EXPECT_NEAR(p[n * 4 + field_U1], 0, 1e-10);
                EXPECT_NEAR(p[n * 4 + field_U2], 0, 1e-10);
                EXPECT_NEAR(p[n * 4 + field_alpha], 0, 1e-10);
            }
}

TEST(AssembleP, MatchesPairingDerivative)
{
    PlaneGrid g = grid(6, 4, 0.1);
    DislocProblem pb(make_antiplane(1, 1, g, constant_velocity(0.7, -0.4), blob(1, 0.2, 0.5, 0.5)), {});
    std::mt19937_64 rng(2);
    Vec d = random_vec(rng, pb.dual_unknowns(), 1);
    Vec q = random_vec(rng, static_cast<Eigen::Index>(g.nodes()) * 4, 1);
    Vec fd = fd_gradient([&](const Vec& y) { return pb.pairing(d, y); }, q, 1e-4);
    const Vec& w = pb.engine().system().W;
    for (int n = 0; n < g.nodes(); ++n)
        fd.segment(n * 4, 4) /= w[n];
    EXPECT_LE((pb.assemble_p(d) - fd).norm() / std::max(1.0, fd.norm()), 1e-6);
}

TEST(LegendreMap, Examples)
{
    Vec c = Vec::Constant(1, 2.0);
    auto [q0, m0] = legendre_map(c, Vec::Zero(1), Vec::Zero(1));
    EXPECT_EQ(q0[0], 0.0);
    EXPECT_EQ(m0, 0.0);
    auto [q, m] = legendre_map(c, Vec::Zero(1), Vec::Constant(1, 4.0));
    EXPECT_DOUBLE_EQ(q[0], 2.0);
    EXPECT_DOUBLE_EQ(m, 4.0);
}

TEST(LegendreMap, GradientOfConjugateIsPrimal)
{
    std::mt19937_64 rng(6);
    Vec c = Vec::Constant(4, 1.0) + random_vec(rng, 4, 0.5).cwiseAbs();
    Vec base = random_vec(rng, 4, 1);
    for (int s = 0; s < 10; ++s) {
        Vec p = random_vec(rng, 4, 2);
        Vec fd = fd_gradient([&](const Vec& y) { return legendre_map(c, base, y).second; }, p, 1e-6);
        EXPECT_LE((fd - legendre_map(c, base, p).first).norm(), 1e-8);
    }
}

TEST(Solve, ElastodynamicsMatchesLeapfrog)
{
    PlaneGrid g = grid(24, 16, 0.2);
    auto phi = blob(0.01, 0.1, 0.5, 0.5);
    DislocProblem pb(make_antiplane(1, 1, g, constant_velocity(0, 0), {}, phi), {});
    auto r = pb.solve(NewtonConfig{});
    ASSERT_TRUE(r.cp.converged);
    auto ref = leapfrog_velocity(phi, g, 1, 1, 4);
    double num = 0, vmax = 0;
    int cnt = 0;
    for (int k = 0; k < g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double e = r.primal.at(field_v, i, j, k) - ref[k][g.slot(i, j)];
                num += e * e;
                ++cnt;
                vmax = std::max(vmax, std::abs(ref[k][g.slot(i, j)]));
            }
    EXPECT_LE(std::sqrt(num / cnt) / vmax, 5e-2);
}

TEST(Solve, SelfEquilibratedDistortionStaysAtRest)
{
    PlaneGrid g = grid(20, 10, 0.2);
    auto spec = make_antiplane(1, 1, g, constant_velocity(0, 0), {}, {}, blob(0.01, 0.1, 0.5, 0.5));
    DislocProblem pb(spec, {});
    auto r = pb.solve(NewtonConfig{});
    ASSERT_TRUE(r.cp.converged);
    double vmax = 0, adrift = 0;
    for (int k = 0; k < g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                vmax = std::max(vmax, std::abs(r.primal.at(field_v, i, j, k)));
                if (spec.has_slot(field_alpha, i, j))
                    adrift = std::max(adrift, std::abs(r.primal.at(field_alpha, i, j, k) - spec.alpha0[g.slot(i, j)]));
            }
    EXPECT_LE(vmax, 1e-3);
    EXPECT_LE(adrift, 1e-8);
}

TEST(Solve, TransportedDensity)
{
    PlaneGrid g = grid(24, 12, 30.0 / 124);
    auto a0 = blob(1, 0.08, 0.35, 0.5);
    DislocProblem pb(make_antiplane(1, 1, g, constant_velocity(1, 0), a0), {});
    auto r = pb.solve(NewtonConfig{});
    ASSERT_TRUE(r.cp.converged);
    EXPECT_LE(pb.curl_consistency(r.primal), 1e-6);
    auto content = pb.cell_content(r.primal);
    for (double c : content)
        EXPECT_NEAR(c, content.front(), 1e-3 * std::abs(content.front()));
    EXPECT_LE(alpha_error(r.primal, alpha_transport_oracle(a0, constant_velocity(1, 0), g)), 5e-2);
}

TEST(Solve, IndependentOfPotentialCoefficients)
{
    PlaneGrid g = grid(16, 8, 0.2);
    auto spec = make_antiplane(1, 1, g, vortex_velocity(2, 0.5, 0.5), blob(1, 0.08, 0.6, 0.5));
    QuadraticM a, b;
    b.c_v = b.c_U = b.c_alpha = 10;
    b.initial_base = true;
    auto ra = DislocProblem(spec, a).solve(NewtonConfig{});
    auto rb = DislocProblem(spec, b).solve(NewtonConfig{});
    ASSERT_TRUE(ra.cp.converged && rb.cp.converged);
    EXPECT_LE((ra.primal.values - rb.primal.values).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(AlphaOracle, ZeroVelocityKeepsDensity)
{
    PlaneGrid g = grid(9, 5, 0.5);
    auto a0 = blob(1, 0.1, 0.5, 0.5);
    auto o = alpha_transport_oracle(a0, constant_velocity(0, 0), g);
    for (int k = 1; k < g.nt; ++k)
        EXPECT_EQ(o.levels[k], o.levels[0]);
}

TEST(AlphaOracle, ConstantDensityStaysConstantInside)
{
    PlaneGrid g = grid(9, 5, 0.2);
    auto o = alpha_transport_oracle([](double, double) { return 1.0; }, constant_velocity(1, 0.5), g);
    // Upwind cells reach one cell per refined step; outflow walls accumulate under the zero boundary flux.
    const int reach = o.substeps * (g.nt - 1);
    for (int j = reach + 1; j + 1 < o.nfy; ++j)
        for (int i = reach + 1; i + 1 < o.nfx; ++i)
            EXPECT_NEAR(o.levels.back()[j * o.nfx + i], 1.0, 1e-12);
    EXPECT_NEAR(o.content(g.nt - 1), o.content(0), 1e-12);
}

TEST(AlphaOracle, PeakMovesWithVelocity)
{
    PlaneGrid g = grid(33, 5, 0.1);
    auto o = alpha_transport_oracle(blob(1, 0.05, 0.3, 0.5), constant_velocity(1, 0), g, 4);
    const Vec& last = o.levels.back();
    Eigen::Index arg;
    last.maxCoeff(&arg);
    double xpeak = o.x_min + (arg % o.nfx + 0.5) * o.hf_x;
    EXPECT_NEAR(xpeak, 0.3 + 0.1, o.hf_x);
}

TEST(AlphaOracle, SubstepsMeetCfl)
{
    PlaneGrid g = grid(9, 3, 1.0);
    auto o = alpha_transport_oracle(blob(1, 0.1, 0.5, 0.5), constant_velocity(5, 5), g);
    EXPECT_GE(o.substeps, 1);
    double vmax = 5 / o.hf_x + 5 / o.hf_y;
    EXPECT_LE(g.dt() / o.substeps * vmax, 1 + 1e-9);
}

TEST(BurgersContent, Examples)
{
    PlaneGrid g = grid(7, 3, 0.1);
    EXPECT_EQ(burgers_content(Vec::Zero(g.nodes()), g)[1], 0.0);
    EXPECT_NEAR(burgers_content(Vec::Ones(g.nodes()), g)[2], 1.0, 1e-14);
}
