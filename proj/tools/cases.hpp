#pragma once

#include "config.hpp"

#include <dualact/algdual.hpp>
#include <dualact/dislocdual.hpp>
#include <dualact/fdmpoint.hpp>
#include <dualact/ibvpdual.hpp>

#include <random>

namespace dualact::app {

using ScalarFn = std::function<double(double)>;

inline NewtonConfig newton_from(const Config& c)
{
    NewtonConfig n;
    n.grad_tol = c.real("solver", "grad_tol", n.grad_tol);
    n.max_iter = c.integer("solver", "max_iter", n.max_iter);
    n.shrink = c.real("solver", "shrink", n.shrink);
    n.sufficient_decrease = c.real("solver", "sufficient_decrease", n.sufficient_decrease);
    n.levenberg_shift = c.real("solver", "levenberg_shift", n.levenberg_shift);
    n.max_backtracks = c.integer("solver", "max_backtracks", n.max_backtracks);
    n.validate();
    return n;
}

inline std::uint64_t seed_from(const Config& c)
{
    int s = c.integer("run", "seed", 1);
    if (s < 0)
        throw ConfigError("[run] seed must be non-negative");
    return static_cast<std::uint64_t>(s);
}

// ---- ibvp ----

struct IbvpCase {
    IbvpSpec spec;
    SpaceTimeGrid grid;
    SpacetimePotential pot;
    std::function<Vec(const SpaceTimeGrid&)> reference;
};

inline ScalarFn heat_initial(const std::string& name)
{
    const double pi = std::numbers::pi;
    if (name == "sin_pi")
        return [pi](double x) { return std::sin(pi * x); };
    if (name == "sin_2pi")
        return [pi](double x) { return std::sin(2 * pi * x); };
    return [](double x) { return x * (1 - x); };
}

inline ScalarFn transport_initial(const std::string& name)
{
    const double pi = std::numbers::pi;
    if (name == "gaussian")
        return [](double x) { return std::exp(-(x - 0.3) * (x - 0.3) / 0.02); };
    return [pi](double x) { return std::sin(2 * pi * x); };
}

inline SpaceTimeGrid grid_from(const Config& c, const std::string& sec, int nx, int nt, double T)
{
    SpaceTimeGrid g;
    g.nx = c.integer(sec, "nx", nx);
    g.nt = c.integer(sec, "nt", nt);
    g.T = c.real(sec, "T", T);
    g.validate();
    return g;
}

inline SpacetimePotential potential_from(const Config& c, double c_u)
{
    SpacetimePotential p;
    p.c_u = c.real("potential", "c_u", c_u);
    p.c_B = c.real("potential", "c_B", 1);
    p.c_C = c.real("potential", "c_C", 1);
    std::string base = c.choice("potential", "base", "data", {"zero", "ic", "data"});
    p.base = base == "zero" ? BaseMode::zero : base == "ic" ? BaseMode::ic : BaseMode::data;
    p.validate();
    return p;
}

inline IbvpCase ibvp_case_from(const Config& c)
{
    std::vector<std::string> present;
    for (const char* f : {"heat", "transport", "burgers_flux", "manufactured"})
        if (c.has(f))
            present.emplace_back(f);
    if (present.size() != 1)
        throw ConfigError("ibvp needs exactly one of [heat], [transport], [burgers_flux], [manufactured]");
    const std::string fam = present.front();
    IbvpCase k;
    if (fam == "heat") {
        double kappa = c.real(fam, "kappa", 1);
        ScalarFn ic = heat_initial(c.choice(fam, "ic", "sin_pi", {"sin_pi", "sin_2pi", "parabola"}));
        k.grid = grid_from(c, fam, 64, 64, 0.1);
        k.spec = heat_spec(kappa, ic);
        k.pot = potential_from(c, 1);
        k.reference = [ic, kappa](const SpaceTimeGrid& g) { return heat_reference(ic, kappa, g); };
    } else if (fam == "transport") {
        double cadv = c.real(fam, "c_adv", 1);
        ScalarFn u0 = transport_initial(c.choice(fam, "ic", "gaussian", {"gaussian", "sin_2pi"}));
        std::string inflow = c.choice(fam, "inflow", "characteristic", {"characteristic", "zero"});
        k.grid = grid_from(c, fam, 64, 64, 0.25);
        if (inflow == "zero") {
            // Extension of u0 by zero outside the domain.
            ScalarFn ext = [u0](double x) { return (x < 0 || x > 1) ? 0.0 : u0(x); };
            k.spec = transport_spec(cadv, u0, [](double) { return 0.0; });
            k.reference = [ext, cadv](const SpaceTimeGrid& g) { return transport_reference(ext, cadv, g); };
        } else {
            k.spec = transport_spec(cadv, u0);
            k.reference = [u0, cadv](const SpaceTimeGrid& g) { return transport_reference(u0, cadv, g); };
        }
        k.pot = potential_from(c, 1);
    } else if (fam == "burgers_flux") {
        double mean = c.real(fam, "mean", 1);
        double amp = c.real(fam, "amplitude", 0.2);
        if (!(mean > std::abs(amp)))
            throw ConfigError("[burgers_flux] mean must exceed |amplitude| so that the left end is inflow");
        k.grid = grid_from(c, fam, 64, 64, 0.2);
        const double w = 2 * std::numbers::pi;
        if (amp != 0 && !(k.grid.T * std::abs(amp) * w < 1))
            throw ConfigError("[burgers_flux] T must precede shock formation, T < 1/(2π|amplitude|)");
        ScalarFn u0 = [=](double x) { return mean + amp * std::sin(w * x); };
        ScalarFn du0 = [=](double x) { return amp * w * std::cos(w * x); };
        k.spec = burgers_spec(u0, du0);
        k.pot = potential_from(c, 10);
        k.reference = [u0, du0](const SpaceTimeGrid& g) { return burgers_reference(u0, du0, g); };
    } else {
        Manufactured mf;
        mf.kappa = c.real(fam, "kappa", 1);
        mf.adv = c.real(fam, "adv", 0.5);
        mf.react = c.real(fam, "react", 0.2);
        int order = c.integer(fam, "order", 1);
        k.grid = grid_from(c, fam, 32, 32, 0.1);
        k.spec = manufactured_spec(mf, order);
        k.pot = potential_from(c, 1);
        k.reference = [mf](const SpaceTimeGrid& g) {
            Vec u(g.nodes());
            for (int kk = 0; kk < g.nt; ++kk)
                for (int i = 0; i < g.nx; ++i)
                    u[g.node(i, kk)] = mf.u(g.x(i), g.t(kk));
            return u;
        };
    }
    return k;
}

// ---- disloc ----

struct DislocCase {
    AntiPlaneSpec spec;
    QuadraticM m;
    std::function<double(double, double)> alpha0;
    int refine = 4;
    double m_scale = 10;
};

inline std::function<double(double, double)> gaussian_2d(double amp, double sigma, double xc, double yc)
{
    return [=](double x, double y) {
        return amp * std::exp(-((x - xc) * (x - xc) + (y - yc) * (y - yc)) / (2 * sigma * sigma));
    };
}

inline DislocCase disloc_case_from(const Config& c)
{
    const std::string s = "antiplane";
    if (!c.has(s))
        throw ConfigError("disloc needs an [antiplane] section");
    DislocCase k;
    PlaneGrid g;
    g.nx = c.integer(s, "nx", 32);
    g.ny = c.integer(s, "ny", 32);
    g.nt = c.integer(s, "nt", 16);
    g.T = c.real(s, "T", 30.0 / 124);
    g.validate();
    double mu = c.real(s, "mu", 1);
    double rho = c.real(s, "rho_m", 1);

    Velocity vel;
    if (c.choice(s, "V", "const", {"const", "vortex"}) == "const") {
        vel = constant_velocity(c.real(s, "V1", 1), c.real(s, "V2", 0));
    } else {
        vel = vortex_velocity(c.real(s, "omega", 1), c.real(s, "vortex_x", 0.5), c.real(s, "vortex_y", 0.5));
    }
    std::function<double(double, double)> a0 = [](double, double) { return 0.0; };
    if (c.choice(s, "alpha0", "gaussian", {"gaussian", "zero"}) == "gaussian") {
        double sigma = c.real(s, "sigma", 0.08);
        if (!(sigma > 0))
            throw ConfigError("[antiplane] sigma must be positive");
        a0 = gaussian_2d(c.real(s, "amplitude", 1), sigma, c.real(s, "center_x", 0.35), c.real(s, "center_y", 0.5));
    }
    std::function<double(double, double)> phi, psi;
    std::string extra = c.choice(s, "distortion", "none", {"none", "gradient", "stream"});
    double damp = c.real(s, "distortion_amplitude", 0.01);
    if (extra == "gradient")
        phi = gaussian_2d(damp, 0.1, 0.5, 0.5);
    else if (extra == "stream")
        psi = gaussian_2d(damp, 0.1, 0.5, 0.5);

    k.spec = make_antiplane(mu, rho, g, vel, a0, phi, psi);
    k.alpha0 = a0;
    k.m.c_v = c.real("potential", "c_v", 1);
    k.m.c_U = c.real("potential", "c_U", 1);
    k.m.c_alpha = c.real("potential", "c_alpha", 1);
    k.m.initial_base = c.choice("potential", "base", "zero", {"zero", "initial"}) == "initial";
    k.m.validate();
    k.refine = c.integer(s, "refine", 4);
    if (k.refine < 1)
        throw ConfigError("[antiplane] refine must be at least 1");
    k.m_scale = c.real(s, "m_scale", 10);
    if (k.m_scale < 0)
        throw ConfigError("[antiplane] m_scale must be non-negative");
    k.spec.validate();
    return k;
}

struct DislocMetrics {
    DislocSolveResult result;
    double alpha_error = NAN;
    int oracle_substeps = 0;
    double content_drift = 0;  // relative when the initial content is nonzero
    double curl_consistency = 0;
    double m_gap = NAN;
    std::array<NormPair, 4> residuals{};
};

inline DislocMetrics run_disloc_case(const DislocCase& k, const NewtonConfig& cfg)
{
    DislocMetrics out;
    DislocProblem pb(k.spec, k.m);
    out.result = pb.solve(cfg);
    AlphaOracle o = alpha_transport_oracle(k.alpha0, k.spec.V, k.spec.grid, k.refine);
    out.alpha_error = alpha_error(out.result.primal, o);
    out.oracle_substeps = o.substeps;
    auto content = pb.cell_content(out.result.primal);
    double scale = std::abs(content.front()) > 1e-300 ? std::abs(content.front()) : 1.0;
    for (double cval : content)
        out.content_drift = std::max(out.content_drift, std::abs(cval - content.front()) / scale);
    out.curl_consistency = pb.curl_consistency(out.result.primal);
    out.residuals = pb.residuals(out.result.primal);
    if (k.m_scale > 0) {
        QuadraticM m2 = k.m;
        m2.c_v *= k.m_scale;
        m2.c_U *= k.m_scale;
        m2.c_alpha *= k.m_scale;
        DislocProblem pb2(k.spec, m2);
        DislocSolveResult r2 = pb2.solve(cfg);
        out.m_gap = (r2.primal.values - out.result.primal.values).lpNorm<Eigen::Infinity>();
    }
    return out;
}

// ---- fdmpoint ----

inline VelocityLaw velocity_law(const std::string& kind, std::mt19937_64& rng, double slope)
{
    VelocityLaw v;
    std::uniform_real_distribution<double> u(-1, 1);
    for (int s = 0; s < 3; ++s)
        v.V0[s] = u(rng);
    if (kind == "linear") {
        for (int s = 0; s < 3; ++s) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    v.K_alpha[s](i, j) = slope * u(rng);
                    v.K_W[s](i, j) = slope * u(rng);
                }
            v.k_rho[s] = slope * u(rng);
        }
    }
    return v;
}

struct FdmSample {
    std::vector<PointSolveResult> solves;  // one per coefficient
    std::vector<double> distances;
    bool monotone = true;
    std::string error;
};

struct FdmStudy {
    std::vector<double> coeffs{1e3, 1e4, 1e5};
    int n_samples = 20;
    double cap = 1;
    double rho_bar = 1;
    std::string velocity = "constant";
    double slope = 0.1;
    std::uint64_t seed = 1;
};

inline FdmStudy fdm_study_from(const Config& c)
{
    const std::string s = "fdmpoint";
    FdmStudy f;
    auto co = c.reals(s, "coeffs");
    if (!co.empty())
        f.coeffs = co;
    for (double v : f.coeffs)
        if (!(v > 0))
            throw ConfigError("[fdmpoint] coeffs must be positive");
    f.n_samples = c.integer(s, "n_samples", f.n_samples);
    if (f.n_samples < 1)
        throw ConfigError("[fdmpoint] n_samples must be at least 1");
    f.cap = c.real(s, "cap", f.cap);
    if (!(f.cap > 0))
        throw ConfigError("[fdmpoint] cap must be positive");
    f.rho_bar = c.real(s, "rho_bar", f.rho_bar);
    f.velocity = c.choice(s, "velocity", f.velocity, {"constant", "linear"});
    f.slope = c.real(s, "slope", f.slope);
    f.seed = seed_from(c);
    return f;
}

inline std::vector<FdmSample> run_fdm_study(const FdmStudy& f)
{
    std::mt19937_64 rng(f.seed);
    std::vector<DualDerivativeData> data;
    std::vector<VelocityLaw> laws;
    for (int i = 0; i < f.n_samples; ++i) {
        data.push_back(random_derivative_data(rng, f.cap));
        laws.push_back(velocity_law(f.velocity, rng, f.slope));
    }
    std::vector<FdmSample> out(f.n_samples);
    parallel_for(
        f.n_samples,
        [&](long i) {
            FdmSample& smp = out[i];
            try {
                for (double cval : f.coeffs) {
                    MaterialPoint m;
                    m.V = laws[i];
                    m.rho_bar = f.rho_bar;
                    m.c_W = m.c_rho = m.c_v = m.c_alpha = cval;
                    PointSolveConfig pc;
                    pc.cap = f.cap;
                    smp.solves.push_back(solve_pointwise(data[i], m, m.base(), pc));
                    smp.distances.push_back(distance_from_base(smp.solves.back().state, m));
                }
            } catch (const std::exception& e) {
                smp.error = e.what();
            }
            for (std::size_t j = 1; j < smp.distances.size(); ++j)
                if (f.coeffs[j] > f.coeffs[j - 1] && !(smp.distances[j] < smp.distances[j - 1]))
                    smp.monotone = false;
        },
        1);
    return out;
}

// ---- algebraic ----

struct AlgebraicCase {
    std::string family;
    ResidualSystem sys;
    Mat abar;  // linear families only
    Vec b;
    Vec base;
    Vec z0;
    double c = 1;
    double c_compare = 0;
    AlgConfig cfg;
};

inline Vec vec_of(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline AlgebraicCase algebraic_case_from(const Config& c)
{
    const std::string s = "algebraic";
    if (!c.has(s))
        throw ConfigError("algebraic needs an [algebraic] section");
    AlgebraicCase k;
    k.family = c.choice(s, "family", "random_linear", {"linear", "random_linear", "circle_line", "scalar_quadratic"});
    if (k.family == "linear") {
        int rows = c.integer(s, "rows", 0), cols = c.integer(s, "cols", 0);
        if (rows < 1 || cols < 1)
            throw ConfigError("[algebraic] rows and cols must be positive");
        auto m = c.reals(s, "matrix");
        auto rhs = c.reals(s, "rhs");
        if (static_cast<int>(m.size()) != rows * cols)
            throw ConfigError("[algebraic] matrix must hold rows*cols entries (row-major)");
        if (static_cast<int>(rhs.size()) != rows)
            throw ConfigError("[algebraic] rhs must hold rows entries");
        k.abar = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(m.data(), rows, cols);
        k.b = vec_of(rhs);
    } else if (k.family == "random_linear") {
        int rows = c.integer(s, "rows", 10), cols = c.integer(s, "cols", 20);
        if (rows < 1 || cols < 1)
            throw ConfigError("[algebraic] rows and cols must be positive");
        bool consistent = c.boolean(s, "consistent", true);
        int rank = c.integer(s, "rank", std::min(rows, cols));
        if (rank < 1 || rank > std::min(rows, cols))
            throw ConfigError("[algebraic] rank must lie in [1, min(rows, cols)]");
        std::mt19937_64 rng(seed_from(c));
        std::uniform_real_distribution<double> u(-1, 1);
        auto draw = [&](int r, int cc) {
            Mat m(r, cc);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < cc; ++j)
                    m(i, j) = u(rng);
            return m;
        };
        k.abar = rank == std::min(rows, cols) ? draw(rows, cols) : Mat(draw(rows, rank) * draw(rank, cols));
        k.b = k.abar * draw(cols, 1).col(0);
        if (!consistent) {
            Eigen::CompleteOrthogonalDecomposition<Mat> cod(k.abar);
            if (cod.rank() == rows)
                throw ConfigError("[algebraic] consistent = false needs rank < rows");
            Vec e = draw(rows, 1).col(0);
            Vec perp = e - k.abar * cod.solve(e);
            k.b += perp / perp.norm();
        }
    }
    if (!k.abar.size()) {
        k.sys = k.family == "circle_line" ? circle_line() : scalar_quadratic();
    } else {
        k.sys = linear_system(k.abar, k.b);
    }
    auto base = c.reals(s, "base");
    k.base = base.empty() ? Vec(Vec::Zero(k.sys.n)) : vec_of(base);
    if (base.empty() && k.family == "scalar_quadratic")
        k.base = Vec::Constant(1, 0.5);
    if (base.empty() && k.family == "circle_line")
        k.base = Vec{{1.0, 0.5}};
    if (k.base.size() != k.sys.n)
        throw ConfigError("[algebraic] base must have one entry per unknown");
    auto z0 = c.reals(s, "z0");
    k.z0 = z0.empty() ? Vec(Vec::Zero(k.sys.N)) : vec_of(z0);
    if (k.z0.size() != k.sys.N)
        throw ConfigError("[algebraic] z0 must have one entry per equation");
    k.c = c.real(s, "c", 1);
    if (!(k.c > 0))
        throw ConfigError("[algebraic] c must be positive");
    k.c_compare = c.real(s, "c_compare", 0);
    if (k.c_compare < 0)
        throw ConfigError("[algebraic] c_compare must be non-negative");
    k.cfg.newton = newton_from(c);
    k.cfg.inner_tol = c.real("solver", "inner_tol", k.cfg.inner_tol);
    k.cfg.inner_max_iter = c.integer("solver", "inner_max_iter", k.cfg.inner_max_iter);
    k.cfg.tol_primal = c.real("solver", "tol_primal", k.cfg.tol_primal);
    if (!(k.cfg.inner_tol > 0) || k.cfg.inner_max_iter < 1 || !(k.cfg.tol_primal > 0))
        throw ConfigError("[solver] inner_tol, inner_max_iter and tol_primal must be positive");
    return k;
}

} // namespace dualact::app
