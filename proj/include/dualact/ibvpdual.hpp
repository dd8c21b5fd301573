#pragma once

#include "spacetime.hpp"

#include <numbers>

namespace dualact {

struct SpaceTimeGrid {
    int nx = 3;
    int nt = 3;
    double x_min = 0;
    double x_max = 1;
    double T = 1;

    void validate() const
    {
        if (nx < 3 || nt < 3)
            throw ConfigError("nx and nt must be at least 3");
        if (!(x_max > x_min))
            throw ConfigError("x_max must exceed x_min");
        if (!(T > 0))
            throw ConfigError("T must be positive");
    }
    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dt() const { return T / (nt - 1); }
    double x(int i) const { return x_min + i * dx(); }
    double t(int k) const { return k * dt(); }
    int node(int i, int k) const { return k * nx + i; }
    int nodes() const { return nx * nt; }

    // Trapezoid weights in space and time.
    double wx(int i) const { return (i == 0 || i == nx - 1) ? 0.5 * dx() : dx(); }
    double wt(int k) const { return (k == 0 || k == nt - 1) ? 0.5 * dt() : dt(); }
};

enum class EndpointKind { none, tau, dirichlet, gradient };

// One endpoint of the boundary partition. `state` is the prescribed state ū(t)
// (Dirichlet value, or the inflow state parametrizing τ̄ = (𝔄(ū) + 𝔹ū)·n).
struct Endpoint {
    EndpointKind kind = EndpointKind::none;
    std::function<Vec(double)> state;
};

// Closure R^q -> R^n acting on the node state (u, B, C).
struct NodeClosure {
    std::function<Vec(const Vec&)> value;
    std::function<Mat(const Vec&)> jacobian;
    std::function<Mat(const Vec&, const Vec&)> weighted_hessian;
};

// u_t = 𝔸u + 𝔹u_x + ℂB_x + 𝔣 + (𝔄)_x,  B = u_x,  C = B_x  (one space dimension).
struct IbvpSpec {
    std::string name;
    int n = 1;
    int order = 1;
    Mat A, B, C;
    std::optional<NodeClosure> source;  // 𝔣
    std::optional<NodeClosure> flux;    // 𝔄
    std::function<Vec(double)> ic;
    Endpoint left, right;

    int q() const { return n * (order + 1); }
    bool nonlinear() const { return source.has_value() || flux.has_value(); }

    void validate() const
    {
        if (n < 1)
            throw ConfigError("system size n must be positive");
        if (order < 0 || order > 2)
            throw ConfigError("order must be 0, 1 or 2");
        auto square = [&](const Mat& m, const char* what) {
            if (m.rows() != n || m.cols() != n)
                throw ConfigError(std::string(what) + " must be n×n");
        };
        square(A, "A");
        square(B, "B");
        square(C, "C");
        if (!ic)
            throw ConfigError("initial condition missing");
        for (const Endpoint* e : {&left, &right})
            if (e->kind != EndpointKind::none && !e->state)
                throw ConfigError("boundary datum missing");
    }
};

enum class BaseMode { zero, ic, data };

struct SpacetimePotential {
    double c_u = 1;
    double c_B = 1;
    double c_C = 1;
    BaseMode base = BaseMode::data;

    void validate() const
    {
        if (!(c_u > 0))
            throw ConfigError("c_u must be positive");
        if (!(c_B > 0))
            throw ConfigError("c_B must be positive");
        if (!(c_C > 0))
            throw ConfigError("c_C must be positive");
    }
};

// Dual fields (λ, γ, ρ) with q = n(order+1) entries per node.
struct DualFieldSet {
    SpaceTimeGrid grid;
    int n = 1;
    int order = 1;
    Vec values;
    std::vector<char> free;

    int qd() const { return n * (order + 1); }
    int index(int field, int comp, int i, int k) const { return grid.node(i, k) * qd() + field * n + comp; }
    double& at(int field, int comp, int i, int k) { return values[index(field, comp, i, k)]; }
    double at(int field, int comp, int i, int k) const { return values[index(field, comp, i, k)]; }

    Vec unknowns() const
    {
        std::vector<double> v;
        for (Eigen::Index j = 0; j < values.size(); ++j)
            if (free[j])
                v.push_back(values[j]);
        return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    void set_unknowns(const Vec& d)
    {
        Eigen::Index r = 0;
        for (Eigen::Index j = 0; j < values.size(); ++j)
            if (free[j])
                values[j] = d[r++];
        if (r != d.size())
            throw std::invalid_argument("dual unknown count mismatch");
    }
};

// Nodal primal fields (u, B, C).
struct PrimalFieldSet {
    SpaceTimeGrid grid;
    int n = 1;
    int order = 1;
    Vec values;

    int q() const { return n * (order + 1); }
    double at(int field, int comp, int i, int k) const { return values[grid.node(i, k) * q() + field * n + comp]; }
};

struct PFields {
    Vec P;  // nodes·q, per node (P_u, P_B, P_C)
    Vec L;  // nodes·2n, per node (λ-part, −∂λ-part); empty for linear specs
};

struct ResidualReport {
    std::vector<NormPair> equation;  // per cascade line: λ rows, γ rows, ρ rows
    NormPair ic;
    NormPair bc;
};

struct IbvpSolveResult {
    DualFieldSet dual;
    CriticalPointResult cp;
    PrimalFieldSet primal;  // U_H with data substituted at data nodes
};

enum class IbvpScheme { nodal, box };

class IbvpProblem {
public:
    IbvpProblem(IbvpSpec spec, SpaceTimeGrid grid, SpacetimePotential pot)
        : spec_(std::move(spec)), grid_(grid), pot_(pot)
    {
        spec_.validate();
        grid_.validate();
        pot_.validate();
        classify();
        build();
    }

    const IbvpSpec& spec() const { return spec_; }
    const SpaceTimeGrid& grid() const { return grid_; }
    IbvpScheme scheme() const { return scheme_; }
    const DualEngine& engine() const { return *engine_; }
    int tau_side() const { return tau_side_; }

    DualFieldSet zero_dual() const
    {
        DualFieldSet d;
        d.grid = grid_;
        d.n = spec_.n;
        d.order = spec_.order;
        d.values = Vec::Zero(static_cast<Eigen::Index>(grid_.nodes()) * d.qd());
        d.free = free_;
        return d;
    }

    PFields assemble_P(const DualFieldSet& d) const
    {
        auto [p, l] = engine_->adjoint(d.unknowns());
        return {p, l};
    }

    // Discrete pairing Σ R D (E U + EF F − g) for arbitrary U and F.
    double pairing(const DualFieldSet& d, const Vec& u, const Vec& f) const
    {
        const RowSystem& s = engine_->system();
        Vec r = s.E * u - s.g;
        if (s.nF > 0)
            r += s.EF * f;
        return s.R.cwiseProduct(d.unknowns()).dot(r);
    }

    Vec legendre_inverse(int node, const Vec& p, const Vec& l) const
    {
        return legendre_node(engine_->potential(), node, p, l).u;
    }

    double dual_action(const DualFieldSet& d) const { return engine_->action(d.unknowns()); }
    Vec action_gradient(const DualFieldSet& d) const { return engine_->gradient(d.unknowns()); }

    PrimalFieldSet recover_primal(const DualFieldSet& d) const
    {
        return wrap(engine_->evaluate(d.unknowns()).U);
    }

    PrimalFieldSet with_data(const PrimalFieldSet& p) const { return wrap(engine_->substitute_data(p.values)); }

    IbvpSolveResult solve(const NewtonConfig& cfg) const
    {
        IbvpSolveResult out;
        out.dual = zero_dual();
        out.cp = engine_->solve(out.dual.unknowns(), cfg);
        out.dual.set_unknowns(out.cp.point);
        out.primal = with_data(recover_primal(out.dual));
        return out;
    }

    ResidualReport primal_residual(const PrimalFieldSet& p) const
    {
        const RowSystem& s = engine_->system();
        Vec r = engine_->rows(p.values);
        ResidualReport rep;
        rep.equation.assign(spec_.order + 1, {});
        std::vector<double> wsum(spec_.order + 1, 0.0);
        for (int j = 0; j < s.rows(); ++j) {
            int fam = s.row_family[j];
            rep.equation[fam].l2 += s.R[j] * r[j] * r[j];
            wsum[fam] += s.R[j];
            rep.equation[fam].max = std::max(rep.equation[fam].max, std::abs(r[j]));
        }
        for (int fam = 0; fam <= spec_.order; ++fam)
            rep.equation[fam].l2 = wsum[fam] > 0 ? std::sqrt(rep.equation[fam].l2 / wsum[fam]) : 0.0;
        int q = spec_.q();
        int nic = 0, nbc = 0;
        for (int c = 0; c < s.unknowns(); ++c) {
            if (!s.data[c])
                continue;
            double e = std::abs(p.values[c] - s.data_values[c]);
            bool initial = c / q < grid_.nx;
            NormPair& np = initial ? rep.ic : rep.bc;
            np.l2 += e * e;
            np.max = std::max(np.max, e);
            (initial ? nic : nbc)++;
        }
        rep.ic.l2 = nic ? std::sqrt(rep.ic.l2 / nic) : 0.0;
        rep.bc.l2 = nbc ? std::sqrt(rep.bc.l2 / nbc) : 0.0;
        return rep;
    }

    // Space-time RMS of component `comp` of field u against a nodal reference.
    double l2_error(const PrimalFieldSet& p, const Vec& reference, int comp = 0) const
    {
        double num = 0, den = 0;
        for (int k = 0; k < grid_.nt; ++k)
            for (int i = 0; i < grid_.nx; ++i) {
                double w = grid_.wx(i) * grid_.wt(k);
                double e = p.at(0, comp, i, k) - reference[grid_.node(i, k)];
                num += w * e * e;
                den += w;
            }
        return std::sqrt(num / den);
    }

private:
    PrimalFieldSet wrap(const Vec& v) const
    {
        PrimalFieldSet p;
        p.grid = grid_;
        p.n = spec_.n;
        p.order = spec_.order;
        p.values = v;
        return p;
    }

    void classify()
    {
        auto kind_l = spec_.left.kind, kind_r = spec_.right.kind;
        if (spec_.order >= 1) {
            if (kind_l != EndpointKind::dirichlet || kind_r != EndpointKind::dirichlet)
                throw ConfigError("order ≥ 1 systems require Dirichlet data at both endpoints");
            if (spec_.nonlinear())
                throw ConfigError("nonlinear source/flux terms are supported for order 0 only");
            scheme_ = IbvpScheme::nodal;
            return;
        }
        bool tl = kind_l == EndpointKind::tau && kind_r == EndpointKind::none;
        bool tr = kind_r == EndpointKind::tau && kind_l == EndpointKind::none;
        if (!tl && !tr)
            throw ConfigError("order 0 systems require a τ (inflow) endpoint on exactly one side");
        scheme_ = IbvpScheme::box;
        tau_side_ = tl ? 0 : 1;
    }

    bool u_is_data(int i, int k) const
    {
        int m = grid_.nx - 1;
        if (k == 0)
            return true;
        if (scheme_ == IbvpScheme::nodal)
            return i == 0 || i == m;
        return tau_side_ == 0 ? i == 0 : i == m;
    }

    Vec data_state(int i, int k) const
    {
        if (k == 0)
            return spec_.ic(grid_.x(i));
        return (i == 0 ? spec_.left : spec_.right).state(grid_.t(k));
    }

    bool dual_free(int field, int i, int k) const
    {
        int m = grid_.nx - 1, nlast = grid_.nt - 1;
        if (field == 0) {
            if (k == nlast)
                return false;
            if (scheme_ == IbvpScheme::nodal)
                return i > 0 && i < m;
            return tau_side_ == 0 ? i < m : i > 0;
        }
        if (field == 1)
            return true;
        return i > 0 && i < m;
    }

    FluxClosure combined_flux() const
    {
        int n = spec_.n, q = spec_.q();
        auto src = spec_.source, fl = spec_.flux;
        FluxClosure f;
        f.value = [=](const Vec& u) {
            Vec v = Vec::Zero(2 * n);
            if (src)
                v.head(n) = src->value(u);
            if (fl)
                v.tail(n) = fl->value(u);
            return v;
        };
        f.jacobian = [=](const Vec& u) {
            Mat j = Mat::Zero(2 * n, q);
            if (src)
                j.topRows(n) = src->jacobian(u);
            if (fl)
                j.bottomRows(n) = fl->jacobian(u);
            return j;
        };
        f.weighted_hessian = [=](const Vec& u, const Vec& w) {
            Mat h = Mat::Zero(q, q);
            if (src)
                h += src->weighted_hessian(u, w.head(n));
            if (fl)
                h += fl->weighted_hessian(u, w.tail(n));
            return h;
        };
        return f;
    }

    void build()
    {
        const int n = spec_.n, q = spec_.q(), nx = grid_.nx, nt = grid_.nt;
        const int m = nx - 1, half = m / 2;
        const double h = grid_.dx(), dt = grid_.dt();
        const bool nonlin = spec_.nonlinear();

        RowSystem s;
        s.nodes = grid_.nodes();
        s.q = q;
        s.nF = nonlin ? 2 * n : 0;
        s.W.resize(s.nodes);
        s.col_level.resize(s.unknowns());
        s.col_real.assign(s.unknowns(), 0);
        s.data.assign(s.unknowns(), 0);
        s.data_values = Vec::Zero(s.unknowns());
        Vec base = Vec::Zero(s.unknowns());
        for (int k = 0; k < nt; ++k)
            for (int i = 0; i < nx; ++i) {
                int nd = grid_.node(i, k);
                s.W[nd] = grid_.wx(i) * grid_.wt(k);
                for (int c = 0; c < q; ++c)
                    s.col_level[nd * q + c] = k;
                bool udata = u_is_data(i, k);
                Vec icv = spec_.ic(grid_.x(i));
                Vec dv = udata ? data_state(i, k) : icv;
                for (int c = 0; c < n; ++c) {
                    s.data[nd * q + c] = udata;
                    s.col_real[nd * q + c] = !udata;
                    if (udata)
                        s.data_values[nd * q + c] = dv[c];
                    if (pot_.base == BaseMode::ic)
                        base[nd * q + c] = icv[c];
                    else if (pot_.base == BaseMode::data)
                        base[nd * q + c] = dv[c];
                }
                for (int c = n; c < q; ++c) {
                    bool boundary_c = c >= 2 * n && (i == 0 || i == m);
                    s.col_real[nd * q + c] = !boundary_c;
                }
            }

        FluxClosure fc;
        if (nonlin)
            fc = combined_flux();
        std::function<Vec(int)> data_flux;
        if (nonlin)
            data_flux = [&s, fc, q](int node) { return fc.value(s.data_values.segment(node * q, q)); };
        RowBuilder rb(s, data_flux);

        free_.assign(static_cast<std::size_t>(s.nodes) * q, 0);
        const Mat &A = spec_.A, &B = spec_.B, &C = spec_.C;

        // Flux difference complementary to the mirrored γ difference.
        auto dlam = [&](int i) -> std::pair<int, int> { return i <= half - 1 ? std::pair{i - 1, i} : std::pair{i, i + 1}; };
        auto dfwd = [&](int i) -> std::pair<int, int> { return i < half ? std::pair{i, i + 1} : std::pair{i - 1, i}; };

        for (int k = 0; k < nt; ++k)
            for (int i = 0; i < nx; ++i)
                for (int field = 0; field <= spec_.order; ++field)
                    for (int I = 0; I < n; ++I) {
                        if (!dual_free(field, i, k))
                            continue;
                        free_[static_cast<std::size_t>(grid_.node(i, k)) * q + field * n + I] = 1;
                        rb.begin();
                        if (field == 0 && scheme_ == IbvpScheme::nodal) {
                            rb.u(grid_.node(i, k + 1), I, 1 / dt);
                            rb.u(grid_.node(i, k), I, -1 / dt);
                            for (int kk : {k, k + 1}) {
                                auto [a, b] = dlam(i);
                                for (int J = 0; J < n; ++J) {
                                    rb.u(grid_.node(i, kk), J, -0.5 * A(I, J));
                                    rb.u(grid_.node(i + 1, kk), J, -0.5 * B(I, J) / (2 * h));
                                    rb.u(grid_.node(i - 1, kk), J, 0.5 * B(I, J) / (2 * h));
                                    rb.u(grid_.node(b, kk), n + J, -0.5 * C(I, J) / h);
                                    rb.u(grid_.node(a, kk), n + J, 0.5 * C(I, J) / h);
                                }
                                if (nonlin) {
                                    rb.f(grid_.node(i, kk), I, -0.5);
                                    rb.f(grid_.node(b, kk), n + I, -0.5 / h);
                                    rb.f(grid_.node(a, kk), n + I, 0.5 / h);
                                }
                            }
                            rb.finish(h * dt, k + 1, 0);
                        } else if (field == 0) {
                            int a = tau_side_ == 0 ? i : i - 1;
                            int b = a + 1;
                            for (int nd : {a, b}) {
                                rb.u(grid_.node(nd, k + 1), I, 0.5 / dt);
                                rb.u(grid_.node(nd, k), I, -0.5 / dt);
                            }
                            for (int kk : {k, k + 1}) {
                                for (int J = 0; J < n; ++J) {
                                    rb.u(grid_.node(a, kk), J, -0.25 * A(I, J) + 0.5 * B(I, J) / h);
                                    rb.u(grid_.node(b, kk), J, -0.25 * A(I, J) - 0.5 * B(I, J) / h);
                                }
                                if (nonlin) {
                                    rb.f(grid_.node(a, kk), I, -0.25);
                                    rb.f(grid_.node(b, kk), I, -0.25);
                                    rb.f(grid_.node(b, kk), n + I, -0.5 / h);
                                    rb.f(grid_.node(a, kk), n + I, 0.5 / h);
                                }
                            }
                            rb.finish(h * dt, k + 1, 0);
                        } else if (field == 1) {
                            auto [a, b] = dfwd(i);
                            rb.u(grid_.node(b, k), I, 1 / h);
                            rb.u(grid_.node(a, k), I, -1 / h);
                            rb.u(grid_.node(i, k), n + I, -1);
                            rb.finish(h * grid_.wt(k), k, 1);
                        } else {
                            auto [a, b] = dlam(i);
                            rb.u(grid_.node(b, k), n + I, 1 / h);
                            rb.u(grid_.node(a, k), n + I, -1 / h);
                            rb.u(grid_.node(i, k), 2 * n + I, -1);
                            rb.finish(h * grid_.wt(k), k, 2);
                        }
                    }
        rb.close();

        NodalPotential np;
        np.coeff.resize(q);
        np.coeff.head(n).setConstant(pot_.c_u);
        if (spec_.order >= 1)
            np.coeff.segment(n, n).setConstant(pot_.c_B);
        if (spec_.order >= 2)
            np.coeff.segment(2 * n, n).setConstant(pot_.c_C);
        np.base = base;
        if (nonlin)
            np.flux = fc;
        engine_ = std::make_shared<DualEngine>(std::move(s), std::move(np), -1);
    }

    IbvpSpec spec_;
    SpaceTimeGrid grid_;
    SpacetimePotential pot_;
    IbvpScheme scheme_ = IbvpScheme::nodal;
    int tau_side_ = 0;
    std::vector<char> free_;
    std::shared_ptr<DualEngine> engine_;
};

// ---- reference solutions ----

// Dirichlet heat problem by Fourier sine series (zero boundary values).
inline Vec heat_reference(const std::function<double(double)>& ic, double kappa, const SpaceTimeGrid& g)
{
    const double len = g.x_max - g.x_min;
    const int quad = 20000;
    const double hq = len / quad;
    std::vector<double> f(quad + 1);
    for (int j = 0; j <= quad; ++j)
        f[j] = ic(g.x_min + j * hq);
    const double tmin = g.dt();
    std::vector<double> coef;
    for (int mode = 1; mode <= 2000; ++mode) {
        double kw = mode * std::numbers::pi / len;
        double s = 0;
        for (int j = 0; j <= quad; ++j) {
            double w = (j == 0 || j == quad) ? 1 : (j % 2 ? 4 : 2);
            s += w * f[j] * std::sin(kw * j * hq);
        }
        coef.push_back(2.0 / len * s * hq / 3);
        if (std::exp(-kappa * kw * kw * tmin) * (std::abs(coef.back()) + 1) < 1e-13)
            break;
    }
    Vec u(g.nodes());
    for (int k = 0; k < g.nt; ++k)
        for (int i = 0; i < g.nx; ++i) {
            double x = g.x(i) - g.x_min, t = g.t(k);
            double v = 0;
            if (k == 0) {
                v = ic(g.x(i));
            } else {
                for (std::size_t mode = 1; mode <= coef.size(); ++mode) {
                    double kw = mode * std::numbers::pi / len;
                    v += coef[mode - 1] * std::exp(-kappa * kw * kw * t) * std::sin(kw * x);
                }
            }
            u[g.node(i, k)] = v;
        }
    return u;
}

// Exact characteristics u(x, t) = u0(x − c t); u0 is defined on the whole line.
inline Vec transport_reference(const std::function<double(double)>& u0, double c_adv, const SpaceTimeGrid& g)
{
    if (c_adv == 0)
        throw ConfigError("c_adv must be nonzero");
    Vec u(g.nodes());
    for (int k = 0; k < g.nt; ++k)
        for (int i = 0; i < g.nx; ++i)
            u[g.node(i, k)] = u0(g.x(i) - c_adv * g.t(k));
    return u;
}

// Smooth inviscid Burgers solution u = u0(x − u t) by Newton on the foot point.
inline double burgers_exact(const std::function<double(double)>& u0, const std::function<double(double)>& du0,
                            double x, double t)
{
    double xi = x - u0(x) * t;
    for (int it = 0; it < 100; ++it) {
        double r = xi + u0(xi) * t - x;
        double step = r / (1 + du0(xi) * t);
        xi -= step;
        if (std::abs(step) < 1e-15)
            break;
    }
    return u0(xi);
}

inline Vec burgers_reference(const std::function<double(double)>& u0, const std::function<double(double)>& du0,
                             const SpaceTimeGrid& g)
{
    Vec u(g.nodes());
    for (int k = 0; k < g.nt; ++k)
        for (int i = 0; i < g.nx; ++i)
            u[g.node(i, k)] = burgers_exact(u0, du0, g.x(i), g.t(k));
    return u;
}

// ---- instances ----

inline Vec scalar(double v) { return Vec::Constant(1, v); }

inline IbvpSpec heat_spec(double kappa, std::function<double(double)> ic, double x_min = 0, double x_max = 1)
{
    if (!(kappa > 0))
        throw ConfigError("kappa must be positive");
    IbvpSpec s;
    s.name = "heat";
    s.n = 1;
    s.order = 1;
    s.A = Mat::Zero(1, 1);
    s.B = Mat::Zero(1, 1);
    s.C = Mat::Constant(1, 1, kappa);
    s.ic = [ic](double x) { return scalar(ic(x)); };
    double ul = ic(x_min), ur = ic(x_max);
    s.left = {EndpointKind::dirichlet, [ul](double) { return scalar(ul); }};
    s.right = {EndpointKind::dirichlet, [ur](double) { return scalar(ur); }};
    return s;
}

// u_t + c u_x = 0 with inflow state from the characteristic extension of u0
// unless an explicit inflow is given.
inline IbvpSpec transport_spec(double c_adv, std::function<double(double)> u0,
                               std::function<double(double)> inflow = {}, double x_min = 0, double x_max = 1)
{
    if (c_adv == 0)
        throw ConfigError("c_adv must be nonzero");
    IbvpSpec s;
    s.name = "transport";
    s.n = 1;
    s.order = 0;
    s.A = Mat::Zero(1, 1);
    s.B = Mat::Constant(1, 1, -c_adv);
    s.C = Mat::Zero(1, 1);
    s.ic = [u0](double x) { return scalar(u0(x)); };
    double xin = c_adv > 0 ? x_min : x_max;
    if (!inflow)
        inflow = [u0, c_adv, xin](double t) { return u0(xin - c_adv * t); };
    Endpoint tau{EndpointKind::tau, [inflow](double t) { return scalar(inflow(t)); }};
    if (c_adv > 0)
        s.left = tau;
    else
        s.right = tau;
    return s;
}

// u_t + (½u²)_x = 0, i.e. 𝔄 = −½u², for positive smooth data.
inline IbvpSpec burgers_spec(std::function<double(double)> u0, std::function<double(double)> du0,
                             double x_min = 0)
{
    IbvpSpec s;
    s.name = "burgers_flux";
    s.n = 1;
    s.order = 0;
    s.A = Mat::Zero(1, 1);
    s.B = Mat::Zero(1, 1);
    s.C = Mat::Zero(1, 1);
    NodeClosure fl;
    fl.value = [](const Vec& u) { return scalar(-0.5 * u[0] * u[0]); };
    fl.jacobian = [](const Vec& u) { return Mat::Constant(1, 1, -u[0]); };
    fl.weighted_hessian = [](const Vec&, const Vec& w) { return Mat::Constant(1, 1, -w[0]); };
    s.flux = fl;
    s.ic = [u0](double x) { return scalar(u0(x)); };
    s.left = {EndpointKind::tau, [u0, du0, x_min](double t) { return scalar(burgers_exact(u0, du0, x_min, t)); }};
    return s;
}

// u_t = a u + b u_x + κ B_x on (0,1) with zero Dirichlet data and exact
// solution e^{st} e^{rx} sin(πx), r = −b/(2κ), s = κ(r² − π²) + b r + a.
struct Manufactured {
    double kappa = 1, adv = 0, react = 0;
    double r() const { return -adv / (2 * kappa); }
    double s() const
    {
        double pi = std::numbers::pi;
        return kappa * (r() * r() - pi * pi) + adv * r() + react;
    }
    double u(double x, double t) const { return std::exp(s() * t + r() * x) * std::sin(std::numbers::pi * x); }
    double ux(double x, double t) const
    {
        double pi = std::numbers::pi;
        return std::exp(s() * t + r() * x) * (r() * std::sin(pi * x) + pi * std::cos(pi * x));
    }
    double uxx(double x, double t) const
    {
        double pi = std::numbers::pi;
        return std::exp(s() * t + r() * x) *
               ((r() * r() - pi * pi) * std::sin(pi * x) + 2 * r() * pi * std::cos(pi * x));
    }
};

inline IbvpSpec manufactured_spec(const Manufactured& mf, int order)
{
    if (!(mf.kappa > 0))
        throw ConfigError("kappa must be positive");
    if (order < 1 || order > 2)
        throw ConfigError("manufactured order must be 1 or 2");
    IbvpSpec s;
    s.name = "manufactured";
    s.n = 1;
    s.order = order;
    s.A = Mat::Constant(1, 1, mf.react);
    s.B = Mat::Constant(1, 1, mf.adv);
    s.C = Mat::Constant(1, 1, mf.kappa);
    s.ic = [mf](double x) { return scalar(mf.u(x, 0)); };
    s.left = {EndpointKind::dirichlet, [](double) { return scalar(0); }};
    s.right = {EndpointKind::dirichlet, [](double) { return scalar(0); }};
    return s;
}

} // namespace dualact
