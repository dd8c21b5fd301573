#pragma once

#include "runner.hpp"

namespace dualact::app {

struct Check {
    std::string name;
    double value = 0;
    double tol = 0;
    bool pass = false;
};

struct VerifySettings {
    std::uint64_t seed = 1;
    double tol_scale = 1;
};

namespace detail {

inline double rel_diff(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double amp)
{
    std::uniform_real_distribution<double> u(-amp, amp);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = u(rng);
    return v;
}

inline Mat random_mat(std::mt19937_64& rng, int r, int c)
{
    Mat m(r, c);
    for (int j = 0; j < c; ++j)
        m.col(j) = random_vec(rng, r, 1);
    return m;
}

template <class F>
Vec central_gradient(F&& f, const Vec& x, double h)
{
    Vec g(x.size());
    Vec y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        y[i] = x[i] + h;
        double fp = f(y);
        y[i] = x[i] - h;
        double fm = f(y);
        y[i] = x[i];
        g[i] = (fp - fm) / (2 * h);
    }
    return g;
}

inline double action_fd_error(const IbvpProblem& pb, std::mt19937_64& rng, double amp)
{
    DualFieldSet d = pb.zero_dual();
    d.set_unknowns(random_vec(rng, d.unknowns().size(), amp));
    Vec analytic = pb.action_gradient(d);
    Vec fd = central_gradient(
        [&](const Vec& x) {
            DualFieldSet e = d;
            e.set_unknowns(x);
            return pb.dual_action(e);
        },
        d.unknowns(), 1e-6);
    return rel_diff(analytic, fd);
}

} // namespace detail

inline std::vector<Check> verify_suite(const VerifySettings& vs)
{
    using namespace detail;
    std::vector<Check> out;
    auto add = [&](std::string name, double value, double tol) {
        double t = tol * vs.tol_scale;
        out.push_back({std::move(name), value, t, std::isfinite(value) && value <= t});
    };
    std::mt19937_64 rng(vs.seed);
    std::uniform_real_distribution<double> unit(0, 1);

    // Algebraic duality on a consistent underdetermined system.
    {
        Mat a = random_mat(rng, 4, 8);
        Vec b = a * random_vec(rng, 8, 1);
        AlgConfig cfg;
        DualSolveResult r = solve_dual(linear_system(a, b), AuxiliaryPotential::shifted_quadratic(Vec::Zero(8), 1.0),
                                       Vec::Zero(4), cfg);
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
        add("algebraic_min_norm_gap", r.cp.converged ? (r.x - cod.pseudoInverse() * b).norm() : INFINITY, 1e-6);
        add("algebraic_primal_residual", (a * r.x - b).norm(), 1e-8);

        Vec z = random_vec(rng, 4, 1);
        AuxiliaryPotential h = AuxiliaryPotential::shifted_quadratic(Vec::Zero(8), 1.0);
        ResidualSystem sys = linear_system(a, b);
        Vec g = dual_value_grad(sys, h, z, cfg).grad;
        Vec fd = central_gradient([&](const Vec& y) { return dual_value_grad(sys, h, y, cfg).value; }, z, 1e-6);
        add("fd_gradient_dual_objective", rel_diff(g, fd), 1e-6);
    }
    // Inconsistent system: non-convergence is reported and x_ls is finite.
    {
        Mat a = random_mat(rng, 6, 3) * random_mat(rng, 3, 8);
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
        Vec b = a * random_vec(rng, 8, 1);
        Vec e = random_vec(rng, 6, 1);
        Vec perp = e - a * cod.solve(e);
        b += perp / perp.norm();
        LeastSquaresReport ls = least_squares_compare(a, b, 1.0);
        add("algebraic_inconsistency_flagged", (!ls.dual_converged && ls.x_ls.allFinite()) ? 0.0 : 1.0, 0.0);
    }
    // Circle-line root is independent of H.
    {
        double c1 = 1 + unit(rng);
        Vec base = Vec{{1.0, 0.5}} + random_vec(rng, 2, 0.1);
        AlgConfig cfg;
        InvarianceReport inv = h_invariance_check(circle_line(), AuxiliaryPotential::shifted_quadratic(base, c1),
                                                  AuxiliaryPotential::shifted_quadratic(base, 4 * c1), Vec::Zero(2), cfg);
        add("circle_line_h_gap", inv.gap, 1e-6);
        add("circle_line_residual", inv.first_converged ? circle_line().residual(inv.x_first).norm() : INFINITY, 1e-8);
    }
    // Dual action gradients against central differences.
    {
        SpaceTimeGrid g{8, 8, 0, 1, 0.1};
        IbvpProblem heat(heat_spec(1, heat_initial("sin_pi")), g, {});
        add("fd_gradient_action_heat", action_fd_error(heat, rng, 1), 1e-6);
        SpaceTimeGrid gt{8, 8, 0, 1, 0.25};
        IbvpProblem tr(transport_spec(1, transport_initial("gaussian")), gt, {});
        add("fd_gradient_action_transport", action_fd_error(tr, rng, 1), 1e-6);
        SpacetimePotential pb;
        pb.c_u = 10;
        const double w = 2 * std::numbers::pi;
        IbvpProblem bu(burgers_spec([w](double x) { return 1 + 0.2 * std::sin(w * x); },
                                    [w](double x) { return 0.2 * w * std::cos(w * x); }),
                       SpaceTimeGrid{8, 8, 0, 1, 0.2}, pb);
        add("fd_gradient_action_burgers", action_fd_error(bu, rng, 0.1), 1e-6);
    }
    // Dislocation pairing: p = W⁻¹ ∂Π/∂Q.
    {
        PlaneGrid g;
        g.nx = g.ny = 6;
        g.nt = 4;
        g.T = 0.1;
        AntiPlaneSpec spec = make_antiplane(1, 1, g, constant_velocity(1, 0.5), gaussian_2d(1, 0.2, 0.5, 0.5));
        DislocProblem pb(spec, {});
        Vec d = random_vec(rng, pb.dual_unknowns(), 1);
        Vec q = random_vec(rng, static_cast<Eigen::Index>(g.nodes()) * 4, 1);
        Vec fd = central_gradient([&](const Vec& y) { return pb.pairing(d, y); }, q, 1e-3);
        const Vec& wn = pb.engine().system().W;
        for (int n = 0; n < g.nodes(); ++n)
            fd.segment(n * 4, 4) /= wn[n];
        add("fd_gradient_disloc_pairing", rel_diff(pb.assemble_p(d), fd), 1e-6);
    }
    // Fenchel equality M(U_H) + M*(P) = U_H·P, with closed-form M* for quadratic M,
    // and stationarity ∇M(U_H) = P for the Burgers closure.
    {
        double worst = 0;
        const int nodes = 1000;
        NodalPotential quad;
        quad.coeff = Vec::Constant(3, 1.0) + random_vec(rng, 3, 0.5).cwiseAbs() * 10;
        quad.base = random_vec(rng, 3 * nodes, 1);
        for (int n = 0; n < nodes; ++n) {
            Vec p = random_vec(rng, 3, 5);
            Vec u = legendre_node(quad, n, p, Vec()).u;
            Vec base = quad.base.segment(n * 3, 3);
            double mstar = base.dot(p) + 0.5 * p.cwiseProduct(p).cwiseQuotient(quad.coeff).sum();
            double gap = quad.value(n, u, Vec()) + mstar - u.dot(p);
            worst = std::max(worst, std::abs(gap) / std::max(1.0, std::abs(mstar)));
        }
        NodalPotential bu;
        bu.coeff = Vec::Constant(1, 10);
        bu.base = Vec::Zero(nodes);
        FluxClosure fl;
        fl.value = [](const Vec& u) { return scalar(-0.5 * u[0] * u[0]); };
        fl.jacobian = [](const Vec& u) { return Mat::Constant(1, 1, -u[0]); };
        fl.weighted_hessian = [](const Vec&, const Vec& w) { return Mat::Constant(1, 1, -w[0]); };
        bu.flux = fl;
        for (int n = 0; n < nodes; ++n) {
            Vec p = random_vec(rng, 1, 2), l = random_vec(rng, 1, 2);
            Vec u = legendre_node(bu, n, p, l).u;
            double grad = 10 * u[0] - l[0] * (-u[0]);
            worst = std::max(worst, std::abs(grad - p[0]) / std::max(1.0, std::abs(p[0])));
        }
        add("fenchel_equality", worst, 1e-12);
    }
    // Burgers Legendre example: c_u = 10, P_u = 1, ∂xλ = ±1.
    {
        NodalPotential bu;
        bu.coeff = Vec::Constant(1, 10);
        bu.base = Vec::Zero(1);
        FluxClosure fl;
        fl.value = [](const Vec& u) { return scalar(-0.5 * u[0] * u[0]); };
        fl.jacobian = [](const Vec& u) { return Mat::Constant(1, 1, -u[0]); };
        fl.weighted_hessian = [](const Vec&, const Vec& w) { return Mat::Constant(1, 1, -w[0]); };
        bu.flux = fl;
        double up = legendre_node(bu, 0, scalar(1), scalar(-1)).u[0];
        double um = legendre_node(bu, 0, scalar(1), scalar(1)).u[0];
        add("burgers_legendre_example", std::max(std::abs(up - 1.0 / 9), std::abs(um - 1.0 / 11)), 1e-12);
    }
    // Oracle comparisons for the IBVP instances.
    {
        NewtonConfig cfg;
        SpaceTimeGrid g{16, 16, 0, 1, 0.1};
        ScalarFn ic = heat_initial("sin_pi");
        IbvpProblem heat(heat_spec(1, ic), g, {});
        auto r = heat.solve(cfg);
        add("heat_oracle_error", r.cp.converged ? heat.l2_error(r.primal, heat_reference(ic, 1, g)) : INFINITY, 2e-3);

        SpaceTimeGrid gt{16, 16, 0, 1, 0.25};
        ScalarFn u0 = transport_initial("gaussian");
        IbvpProblem tr(transport_spec(1, u0), gt, {});
        auto rt = tr.solve(cfg);
        add("transport_oracle_error", rt.cp.converged ? tr.l2_error(rt.primal, transport_reference(u0, 1, gt)) : INFINITY,
            5e-2);

        // λ = t on free λ entries gives P_u = 1 at interior space-time nodes.
        DualFieldSet d = heat.zero_dual();
        for (int k = 0; k < g.nt; ++k)
            for (int i = 0; i < g.nx; ++i)
                if (d.free[d.index(0, 0, i, k)])
                    d.at(0, 0, i, k) = g.t(k);
        PFields p = heat.assemble_P(d);
        double worst = 0;
        for (int k = 1; k + 1 < g.nt; ++k)
            for (int i = 1; i + 1 < g.nx; ++i)
                worst = std::max(worst, std::abs(p.P[g.node(i, k) * 2] - 1));
        add("heat_p_u_of_lambda_t", worst, 1e-10);
    }
    // Dislocation reduction.
    {
        DislocCase k;
        PlaneGrid g;
        g.nx = g.ny = 20;
        g.nt = 10;
        g.T = 30.0 / 124;
        k.alpha0 = gaussian_2d(1, 0.08, 0.35, 0.5);
        k.spec = make_antiplane(1, 1, g, constant_velocity(1, 0), k.alpha0);
        DislocMetrics m = run_disloc_case(k, NewtonConfig{});
        bool ok = m.result.cp.converged;
        add("disloc_alpha_oracle_error", ok ? m.alpha_error : INFINITY, 5e-2);
        add("disloc_burgers_content_drift", ok ? m.content_drift : INFINITY, 1e-3);
        add("disloc_curl_consistency", ok ? m.curl_consistency : INFINITY, 1e-6);
        add("disloc_m_independence", m.m_gap, 1e-8);
    }
    // Pointwise inversion.
    {
        FdmStudy f;
        f.n_samples = 5;
        f.velocity = "linear";
        f.seed = vs.seed;
        auto samples = run_fdm_study(f);
        double worst = 0;
        bool mono = true;
        for (const auto& s : samples) {
            if (!s.error.empty())
                worst = INFINITY;
            for (const auto& r : s.solves)
                worst = std::max(worst, r.residual);
            mono = mono && s.monotone;
        }
        add("fdmpoint_residual", worst, 1e-10);
        add("fdmpoint_monotone_sweep", mono ? 0.0 : 1.0, 0.0);
    }
    return out;
}

inline std::string format_check(const Check& c)
{
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s %-34s %.3e <= %.3e", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.tol);
    return buf;
}

inline Outcome run_verify(const VerifySettings& vs, const std::filesystem::path& dir, std::ostream& log)
{
    Outcome o;
    auto checks = verify_suite(vs);
    bool all = true;
    json list = json::object();
    std::string csv = "index,check,pass\n";
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const Check& c = checks[i];
        log << format_check(c) << "\n";
        all = all && c.pass;
        list[c.name] = {{"pass", c.pass}, {"value", c.value}, {"tol", c.tol}};
        csv += std::to_string(i) + "," + c.name + "," + (c.pass ? "1" : "0") + "\n";
    }
    write_file(dir / "convergence.csv", csv);
    o.summary = {{"checks", list}, {"all_pass", all}, {"seed", vs.seed}, {"tol_scale", vs.tol_scale}};
    o.exit_code = all ? exit_ok : exit_failure;
    return o;
}

// Entry point shared by the executable and the tests.
inline int run_command(const std::string& sub, const std::filesystem::path& config_path,
                       const std::optional<std::filesystem::path>& out_override, std::ostream& log, std::ostream& err)
{
    try {
        Config c = Config::load(config_path);
        std::filesystem::path dir = c.text("run", "out", "dualact_out");
        if (out_override)
            dir = *out_override;
        seed_from(c);
        std::function<Outcome()> job;
        if (sub == "algebraic") {
            auto k = algebraic_case_from(c);
            job = [k, dir] { return run_algebraic(k, dir); };
        } else if (sub == "ibvp") {
            auto k = ibvp_case_from(c);
            auto cfg = newton_from(c);
            job = [k, cfg, dir] { return run_ibvp(k, cfg, dir); };
        } else if (sub == "disloc") {
            auto k = disloc_case_from(c);
            auto cfg = newton_from(c);
            job = [k, cfg, dir] { return run_disloc(k, cfg, dir); };
        } else if (sub == "fdmpoint") {
            auto f = fdm_study_from(c);
            job = [f, dir] { return run_fdmpoint(f, dir); };
        } else if (sub == "verify") {
            VerifySettings vs;
            vs.seed = seed_from(c);
            vs.tol_scale = c.real("verify", "tol_scale", 1);
            if (vs.tol_scale < 0)
                throw ConfigError("[verify] tol_scale must be non-negative");
            job = [vs, dir, &log] { return run_verify(vs, dir, log); };
        } else {
            throw ConfigError("unknown subcommand '" + sub + "'");
        }
        c.reject_unknown();
        std::filesystem::create_directories(dir);
        auto t0 = std::chrono::steady_clock::now();
        Outcome o = job();
        o.summary["subcommand"] = sub;
        o.summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_json(dir / "summary.json", o.summary);
        if (sub != "verify")
            log << sub << ": " << (o.exit_code == exit_ok ? "converged" : "not converged") << " (" << dir.string()
                << ")\n";
        return o.exit_code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace dualact::app
