#pragma once

#include "spacetime.hpp"

#include <array>

namespace dualact {

struct PlaneGrid {
    int nx = 32;
    int ny = 32;
    int nt = 16;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    double T = 0.25;

    void validate() const
    {
        if (nx < 3 || ny < 3 || nt < 3)
            throw ConfigError("nx, ny and nt must be at least 3");
        if (!(x_max > x_min) || !(y_max > y_min))
            throw ConfigError("domain extents must be positive");
        if (!(T > 0))
            throw ConfigError("T must be positive");
    }
    double hx() const { return (x_max - x_min) / (nx - 1); }
    double hy() const { return (y_max - y_min) / (ny - 1); }
    double dt() const { return T / (nt - 1); }
    double x(int i) const { return x_min + i * hx(); }
    double y(int j) const { return y_min + j * hy(); }
    double t(int k) const { return k * dt(); }
    int slot(int i, int j) const { return j * nx + i; }
    int node(int i, int j, int k) const { return (k * ny + j) * nx + i; }
    int nodes() const { return nx * ny * nt; }
    double wx(int i) const { return (i == 0 || i == nx - 1) ? 0.5 * hx() : hx(); }
    double wy(int j) const { return (j == 0 || j == ny - 1) ? 0.5 * hy() : hy(); }
    double wt(int k) const { return (k == 0 || k == nt - 1) ? 0.5 * dt() : dt(); }
};

using Velocity = std::function<std::array<double, 2>(double, double, double)>;

inline Velocity constant_velocity(double v1, double v2)
{
    return [v1, v2](double, double, double) { return std::array<double, 2>{v1, v2}; };
}

// Rigid rotation with angular rate omega about (xc, yc).
inline Velocity vortex_velocity(double omega, double xc, double yc)
{
    return [=](double x, double y, double) { return std::array<double, 2>{-omega * (y - yc), omega * (x - xc)}; };
}

// Field slots: v at nodes; U1 on x-edges (i+½, j); U2 on y-edges (i, j+½);
// α at cells (i+½, j+½). Each is stored at the lower-left node, so U1 has no
// slot at i = nx−1, U2 none at j = ny−1, α none at either.
enum PlaneField { field_v = 0, field_U1 = 1, field_U2 = 2, field_alpha = 3 };

struct AntiPlaneSpec {
    double mu = 1;
    double rho_m = 1;
    PlaneGrid grid;
    Velocity V = constant_velocity(0, 0);
    Vec v0;      // nx·ny slots
    Vec U01;     // x-edge slots
    Vec U02;     // y-edge slots
    Vec alpha0;  // cell slots
    std::function<double(double, double, double)> v_boundary = [](double, double, double) { return 0.0; };

    bool has_slot(int field, int i, int j) const
    {
        if (field == field_U1)
            return i < grid.nx - 1;
        if (field == field_U2)
            return j < grid.ny - 1;
        if (field == field_alpha)
            return i < grid.nx - 1 && j < grid.ny - 1;
        return true;
    }

    // Physical location of a slot.
    std::array<double, 2> position(int field, int i, int j) const
    {
        double x = grid.x(i), y = grid.y(j);
        if (field == field_U1 || field == field_alpha)
            x += 0.5 * grid.hx();
        if (field == field_U2 || field == field_alpha)
            y += 0.5 * grid.hy();
        return {x, y};
    }

    void validate() const
    {
        grid.validate();
        if (!(mu > 0))
            throw ConfigError("mu must be positive");
        if (!(rho_m > 0))
            throw ConfigError("rho_m must be positive");
        int s = grid.nx * grid.ny;
        if (v0.size() != s || U01.size() != s || U02.size() != s || alpha0.size() != s)
            throw ConfigError("initial fields do not match the grid");
        Vec c = discrete_curl(U01, U02);
        if ((c - alpha0).lpNorm<Eigen::Infinity>() > 1e-10)
            throw ConfigError("alpha0 is not the discrete curl of U0");
    }

    // ∂₁U2 − ∂₂U1 at cells.
    Vec discrete_curl(const Vec& u1, const Vec& u2) const
    {
        Vec c = Vec::Zero(grid.nx * grid.ny);
        for (int j = 0; j + 1 < grid.ny; ++j)
            for (int i = 0; i + 1 < grid.nx; ++i)
                c[grid.slot(i, j)] = (u2[grid.slot(i + 1, j)] - u2[grid.slot(i, j)]) / grid.hx() -
                                     (u1[grid.slot(i, j + 1)] - u1[grid.slot(i, j)]) / grid.hy();
        return c;
    }
};

// Builds initial data: U0 = ∇φ + (0, ∫₀ˣ α dx) − (∂₂ψ, −∂₁ψ) terms, so that
// the discrete curl of U0 equals α sampled at cell centres.
// `phi` is sampled at nodes and `psi` at cell centres (any point for boundary edges).
inline AntiPlaneSpec make_antiplane(double mu, double rho_m, const PlaneGrid& g, Velocity V,
                                    const std::function<double(double, double)>& alpha,
                                    const std::function<double(double, double)>& phi = {},
                                    const std::function<double(double, double)>& psi = {},
                                    const std::function<double(double, double)>& v0 = {})
{
    AntiPlaneSpec s;
    s.mu = mu;
    s.rho_m = rho_m;
    s.grid = g;
    s.V = std::move(V);
    int nx = g.nx, ny = g.ny;
    double hx = g.hx(), hy = g.hy();
    s.v0 = Vec::Zero(nx * ny);
    s.U01 = Vec::Zero(nx * ny);
    s.U02 = Vec::Zero(nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (v0)
                s.v0[g.slot(i, j)] = v0(g.x(i), g.y(j));
            if (alpha && j + 1 < ny && i > 0)
                s.U02[g.slot(i, j)] = s.U02[g.slot(i - 1, j)] + hx * alpha(g.x(i - 1) + hx / 2, g.y(j) + hy / 2);
        }
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (phi) {
                if (i + 1 < nx)
                    s.U01[g.slot(i, j)] += (phi(g.x(i + 1), g.y(j)) - phi(g.x(i), g.y(j))) / hx;
                if (j + 1 < ny)
                    s.U02[g.slot(i, j)] += (phi(g.x(i), g.y(j + 1)) - phi(g.x(i), g.y(j))) / hy;
            }
            if (psi) {
                double xc = g.x(i) + hx / 2, yc = g.y(j) + hy / 2;
                if (i + 1 < nx)
                    s.U01[g.slot(i, j)] += (psi(xc, g.y(j) + hy / 2) - psi(xc, g.y(j) - hy / 2)) / hy;
                if (j + 1 < ny)
                    s.U02[g.slot(i, j)] -= (psi(g.x(i) + hx / 2, yc) - psi(g.x(i) - hx / 2, yc)) / hx;
            }
        }
    s.alpha0 = s.discrete_curl(s.U01, s.U02);
    return s;
}

struct QuadraticM {
    double c_v = 1, c_U = 1, c_alpha = 1;
    bool initial_base = false;  // base = initial fields held constant in time

    void validate() const
    {
        if (!(c_v > 0) || !(c_U > 0) || !(c_alpha > 0))
            throw ConfigError("c_v, c_U and c_alpha must be positive");
    }
};

// Closed-form Legendre map for quadratic M: Q = base + p/c, M* = Q·p − M(Q).
inline std::pair<Vec, double> legendre_map(const Vec& coeff, const Vec& base, const Vec& p)
{
    Vec qv = base + p.cwiseQuotient(coeff);
    double m = 0.5 * (coeff.array() * (qv - base).array().square()).sum();
    return {qv, qv.dot(p) - m};
}

struct PlaneFields {
    PlaneGrid grid;
    Vec values;  // nodes·4 in (v, U1, U2, α) order
    double at(int field, int i, int j, int k) const { return values[grid.node(i, j, k) * 4 + field]; }
};

struct DislocSolveResult {
    Vec dual;  // free dual entries
    CriticalPointResult cp;
    PlaneFields primal;  // with data substituted
};

class DislocProblem {
public:
    DislocProblem(AntiPlaneSpec spec, QuadraticM m) : spec_(std::move(spec)), m_(m)
    {
        spec_.validate();
        m_.validate();
        build();
    }

    const AntiPlaneSpec& spec() const { return spec_; }
    const DualEngine& engine() const { return *engine_; }
    const std::vector<char>& free_mask() const { return free_; }
    int dual_unknowns() const { return engine_->system().rows(); }

    // Dual fields (λ, A1, A2, B) per node, expanded from free entries.
    Vec expand(const Vec& d) const
    {
        Vec full = Vec::Zero(static_cast<Eigen::Index>(free_.size()));
        Eigen::Index r = 0;
        for (std::size_t j = 0; j < free_.size(); ++j)
            if (free_[j])
                full[j] = d[r++];
        return full;
    }

    Vec restrict_free(const Vec& full) const
    {
        std::vector<double> v;
        for (std::size_t j = 0; j < free_.size(); ++j)
            if (free_[j])
                v.push_back(full[j]);
        return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    // p = W⁻¹ ∂Π/∂Q per node.
    Vec assemble_p(const Vec& d) const { return engine_->adjoint(d).first; }

    double pairing(const Vec& d, const Vec& q) const
    {
        const RowSystem& s = engine_->system();
        return s.R.cwiseProduct(d).dot(s.E * q - s.g);
    }

    double action(const Vec& d) const { return engine_->action(d); }

    DislocSolveResult solve(const NewtonConfig& cfg) const
    {
        DislocSolveResult out;
        out.cp = engine_->solve(Vec::Zero(dual_unknowns()), cfg);
        out.dual = out.cp.point;
        out.primal = recover(out.dual);
        return out;
    }

    PlaneFields recover(const Vec& d) const
    {
        PlaneFields f;
        f.grid = spec_.grid;
        f.values = engine_->substitute_data(engine_->evaluate(d).U);
        return f;
    }

    // Max |α − curl U| over cells and levels.
    double curl_consistency(const PlaneFields& f) const
    {
        Vec r = engine_->rows(f.values);
        double mx = 0;
        for (int j = 0; j < r.size(); ++j)
            if (engine_->system().row_family[j] == 3)
                mx = std::max(mx, std::abs(r[j]));
        return mx;
    }

    // Max and RMS residual of each row family (λ, A1, A2, B).
    std::array<NormPair, 4> residuals(const PlaneFields& f) const
    {
        const RowSystem& s = engine_->system();
        Vec r = engine_->rows(f.values);
        std::array<NormPair, 4> out{};
        std::array<double, 4> w{};
        for (int j = 0; j < r.size(); ++j) {
            int fam = s.row_family[j];
            out[fam].l2 += s.R[j] * r[j] * r[j];
            w[fam] += s.R[j];
            out[fam].max = std::max(out[fam].max, std::abs(r[j]));
        }
        for (int fam = 0; fam < 4; ++fam)
            out[fam].l2 = w[fam] > 0 ? std::sqrt(out[fam].l2 / w[fam]) : 0.0;
        return out;
    }

    // Σ α·cell area per time level.
    std::vector<double> cell_content(const PlaneFields& f) const
    {
        const PlaneGrid& g = spec_.grid;
        std::vector<double> c(g.nt, 0.0);
        for (int k = 0; k < g.nt; ++k)
            for (int j = 0; j + 1 < g.ny; ++j)
                for (int i = 0; i + 1 < g.nx; ++i)
                    c[k] += f.at(field_alpha, i, j, k) * g.hx() * g.hy();
        return c;
    }

private:
    void build()
    {
        const PlaneGrid& g = spec_.grid;
        const int nx = g.nx, ny = g.ny, nt = g.nt, q = 4;
        const double hx = g.hx(), hy = g.hy(), dt = g.dt(), mu = spec_.mu, rho = spec_.rho_m;

        RowSystem s;
        s.nodes = g.nodes();
        s.q = q;
        s.nF = 0;
        s.W.resize(s.nodes);
        s.col_level.resize(s.unknowns());
        s.col_real.assign(s.unknowns(), 0);
        s.data.assign(s.unknowns(), 0);
        s.data_values = Vec::Zero(s.unknowns());
        Vec base = Vec::Zero(s.unknowns());
        const Vec* init[4] = {&spec_.v0, &spec_.U01, &spec_.U02, &spec_.alpha0};
        for (int k = 0; k < nt; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    int nd = g.node(i, j, k);
                    s.W[nd] = g.wx(i) * g.wy(j) * g.wt(k);
                    bool edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                    for (int c = 0; c < q; ++c) {
                        int e = nd * q + c;
                        s.col_level[e] = k;
                        if (m_.initial_base)
                            base[e] = (*init[c])[g.slot(i, j)];
                        if (!spec_.has_slot(c, i, j))
                            continue;
                        bool data = false;
                        double val = 0;
                        if (c == field_v && (k == 0 || edge)) {
                            data = true;
                            val = k == 0 ? spec_.v0[g.slot(i, j)] : spec_.v_boundary(g.x(i), g.y(j), g.t(k));
                        } else if ((c == field_U1 || c == field_U2) && k == 0) {
                            data = true;
                            val = (*init[c])[g.slot(i, j)];
                        }
                        s.data[e] = data;
                        s.data_values[e] = val;
                        s.col_real[e] = !data;
                        if (data && m_.initial_base)
                            base[e] = val;
                    }
                }

        RowBuilder rb(s);
        free_.assign(static_cast<std::size_t>(s.nodes) * q, 0);
        auto vel = [&](int field, int i, int j, int k) {
            auto pos = spec_.position(field, i, j);
            return spec_.V(pos[0], pos[1], g.t(k));
        };
        // α on an x-edge (i+½, j) and a y-edge (i, j+½), one-sided at the boundary.
        auto alpha_x = [&](int i, int j, int k, double coef) {
            if (j == 0)
                rb.u(g.node(i, 0, k), field_alpha, coef);
            else if (j == ny - 1)
                rb.u(g.node(i, ny - 2, k), field_alpha, coef);
            else {
                rb.u(g.node(i, j, k), field_alpha, coef / 2);
                rb.u(g.node(i, j - 1, k), field_alpha, coef / 2);
            }
        };
        auto alpha_y = [&](int i, int j, int k, double coef) {
            if (i == 0)
                rb.u(g.node(0, j, k), field_alpha, coef);
            else if (i == nx - 1)
                rb.u(g.node(nx - 2, j, k), field_alpha, coef);
            else {
                rb.u(g.node(i, j, k), field_alpha, coef / 2);
                rb.u(g.node(i - 1, j, k), field_alpha, coef / 2);
            }
        };

        for (int k = 0; k < nt; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i)
                    for (int f = 0; f < q; ++f) {
                        bool slab = k < nt - 1;
                        bool ok = false;
                        if (f == 0)
                            ok = slab && i > 0 && j > 0 && i < nx - 1 && j < ny - 1;
                        else if (f == 1)
                            ok = slab && i < nx - 1;
                        else if (f == 2)
                            ok = slab && j < ny - 1;
                        else
                            ok = i < nx - 1 && j < ny - 1;
                        if (!ok)
                            continue;
                        free_[static_cast<std::size_t>(g.node(i, j, k)) * q + f] = 1;
                        rb.begin();
                        if (f == 0) {
                            // ρ ∂t v − μ (∂₁U1 + ∂₂U2)
                            rb.u(g.node(i, j, k + 1), field_v, rho / dt);
                            rb.u(g.node(i, j, k), field_v, -rho / dt);
                            for (int kk : {k, k + 1}) {
                                rb.u(g.node(i, j, kk), field_U1, -0.5 * mu / hx);
                                rb.u(g.node(i - 1, j, kk), field_U1, 0.5 * mu / hx);
                                rb.u(g.node(i, j, kk), field_U2, -0.5 * mu / hy);
                                rb.u(g.node(i, j - 1, kk), field_U2, 0.5 * mu / hy);
                            }
                            rb.finish(hx * hy * dt, k + 1, 0);
                        } else if (f == 1) {
                            // ∂₁v − ∂t U1 + α V2
                            rb.u(g.node(i, j, k + 1), field_U1, -1 / dt);
                            rb.u(g.node(i, j, k), field_U1, 1 / dt);
                            for (int kk : {k, k + 1}) {
                                rb.u(g.node(i + 1, j, kk), field_v, 0.5 / hx);
                                rb.u(g.node(i, j, kk), field_v, -0.5 / hx);
                                alpha_x(i, j, kk, 0.5 * vel(field_U1, i, j, kk)[1]);
                            }
                            rb.finish(hx * g.wy(j) * dt, k + 1, 1);
                        } else if (f == 2) {
                            // ∂₂v − ∂t U2 − α V1
                            rb.u(g.node(i, j, k + 1), field_U2, -1 / dt);
                            rb.u(g.node(i, j, k), field_U2, 1 / dt);
                            for (int kk : {k, k + 1}) {
                                rb.u(g.node(i, j + 1, kk), field_v, 0.5 / hy);
                                rb.u(g.node(i, j, kk), field_v, -0.5 / hy);
                                alpha_y(i, j, kk, -0.5 * vel(field_U2, i, j, kk)[0]);
                            }
                            rb.finish(g.wx(i) * hy * dt, k + 1, 2);
                        } else {
                            // ∂₁U2 − ∂₂U1 − α
                            rb.u(g.node(i + 1, j, k), field_U2, 1 / hx);
                            rb.u(g.node(i, j, k), field_U2, -1 / hx);
                            rb.u(g.node(i, j + 1, k), field_U1, -1 / hy);
                            rb.u(g.node(i, j, k), field_U1, 1 / hy);
                            rb.u(g.node(i, j, k), field_alpha, -1);
                            rb.finish(hx * hy * g.wt(k), k, 3);
                        }
                    }
        rb.close();

        NodalPotential np;
        np.coeff = Vec(4);
        np.coeff << m_.c_v, m_.c_U, m_.c_U, m_.c_alpha;
        np.base = base;
        engine_ = std::make_shared<DualEngine>(std::move(s), std::move(np), +1);
    }

    AntiPlaneSpec spec_;
    QuadraticM m_;
    std::vector<char> free_;
    std::shared_ptr<DualEngine> engine_;
};

// ---- oracle: first-order upwind finite volume for ∂t α + div(α V) = 0 ----

struct AlphaOracle {
    int nfx = 0, nfy = 0, refine = 4;
    double x_min = 0, y_min = 0, hf_x = 0, hf_y = 0;
    int substeps = 1;
    std::vector<Vec> levels;  // cell values at each coarse time level

    // Bilinear interpolation of cell values.
    double sample(double x, double y, int k) const
    {
        double fx = (x - x_min) / hf_x - 0.5, fy = (y - y_min) / hf_y - 0.5;
        int a = std::clamp(static_cast<int>(std::floor(fx)), 0, nfx - 2);
        int b = std::clamp(static_cast<int>(std::floor(fy)), 0, nfy - 2);
        double sx = std::clamp(fx - a, 0.0, 1.0), sy = std::clamp(fy - b, 0.0, 1.0);
        const Vec& v = levels[k];
        auto at = [&](int i, int j) { return v[j * nfx + i]; };
        return (1 - sx) * (1 - sy) * at(a, b) + sx * (1 - sy) * at(a + 1, b) + (1 - sx) * sy * at(a, b + 1) +
               sx * sy * at(a + 1, b + 1);
    }

    double content(int k) const { return levels[k].sum() * hf_x * hf_y; }
};

inline AlphaOracle alpha_transport_oracle(const std::function<double(double, double)>& alpha0, const Velocity& V,
                                          const PlaneGrid& g, int refine = 4)
{
    AlphaOracle o;
    o.refine = refine;
    o.nfx = refine * (g.nx - 1);
    o.nfy = refine * (g.ny - 1);
    o.x_min = g.x_min;
    o.y_min = g.y_min;
    o.hf_x = g.hx() / refine;
    o.hf_y = g.hy() / refine;
    const int nfx = o.nfx, nfy = o.nfy;
    const double hfx = o.hf_x, hfy = o.hf_y, dt = g.dt();

    double vmax = 0;
    for (int j = 0; j <= nfy; ++j)
        for (int i = 0; i <= nfx; ++i)
            for (double t : {0.0, g.T}) {
                auto v = V(g.x_min + i * hfx, g.y_min + j * hfy, t);
                vmax = std::max(vmax, std::abs(v[0]) / hfx + std::abs(v[1]) / hfy);
            }
    o.substeps = std::max(1, static_cast<int>(std::ceil(dt * vmax - 1e-9)));
    double dtf = dt / o.substeps;
    if (dtf * vmax > 1 + 1e-9)
        throw ConfigError("CFL condition violated on the refined grid");

    Vec a(nfx * nfy);
    for (int j = 0; j < nfy; ++j)
        for (int i = 0; i < nfx; ++i)
            a[j * nfx + i] = alpha0(g.x_min + (i + 0.5) * hfx, g.y_min + (j + 0.5) * hfy);
    o.levels.push_back(a);
    Vec fx((nfx + 1) * nfy), fy(nfx * (nfy + 1));
    double t = 0;
    for (int k = 1; k < g.nt; ++k) {
        for (int sub = 0; sub < o.substeps; ++sub) {
            fx.setZero();
            fy.setZero();
            for (int j = 0; j < nfy; ++j)
                for (int i = 1; i < nfx; ++i) {
                    double v1 = V(g.x_min + i * hfx, g.y_min + (j + 0.5) * hfy, t)[0];
                    fx[j * (nfx + 1) + i] = v1 * (v1 > 0 ? a[j * nfx + i - 1] : a[j * nfx + i]);
                }
            for (int j = 1; j < nfy; ++j)
                for (int i = 0; i < nfx; ++i) {
                    double v2 = V(g.x_min + (i + 0.5) * hfx, g.y_min + j * hfy, t)[1];
                    fy[j * nfx + i] = v2 * (v2 > 0 ? a[(j - 1) * nfx + i] : a[j * nfx + i]);
                }
            for (int j = 0; j < nfy; ++j)
                for (int i = 0; i < nfx; ++i)
                    a[j * nfx + i] -= dtf / hfx * (fx[j * (nfx + 1) + i + 1] - fx[j * (nfx + 1) + i]) +
                                      dtf / hfy * (fy[(j + 1) * nfx + i] - fy[j * nfx + i]);
            t += dtf;
        }
        o.levels.push_back(a);
    }
    return o;
}

// Trapezoid area integral of a nodal field on the plane grid, per time level.
inline std::vector<double> burgers_content(const Vec& alpha_nodes, const PlaneGrid& g)
{
    std::vector<double> c(g.nt, 0.0);
    for (int k = 0; k < g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                c[k] += g.wx(i) * g.wy(j) * alpha_nodes[g.node(i, j, k)];
    return c;
}

// Space-time RMS of recovered α at cell centres against the oracle.
inline double alpha_error(const PlaneFields& f, const AlphaOracle& o)
{
    const PlaneGrid& g = f.grid;
    double num = 0, den = 0;
    for (int k = 0; k < g.nt; ++k)
        for (int j = 0; j + 1 < g.ny; ++j)
            for (int i = 0; i + 1 < g.nx; ++i) {
                double x = g.x(i) + g.hx() / 2, y = g.y(j) + g.hy() / 2;
                double e = f.at(field_alpha, i, j, k) - o.sample(x, y, k);
                num += g.wt(k) * e * e;
                den += g.wt(k);
            }
    return std::sqrt(num / den);
}

} // namespace dualact
