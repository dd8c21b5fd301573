#pragma once

#include "optcore.hpp"

#include <array>
#include <random>

namespace dualact {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Rank-3 array on {0,1,2}³.
struct Tensor3 {
    std::array<double, 27> v{};
    double& operator()(int i, int j, int k) { return v[(i * 3 + j) * 3 + k]; }
    double operator()(int i, int j, int k) const { return v[(i * 3 + j) * 3 + k]; }
};

inline double levi_civita(int i, int j, int k)
{
    return static_cast<double>((i - j) * (j - k) * (k - i)) / 2.0;
}

// Dual-field values and derivatives at one space-time point.
//   grad_A(i,j,k) = ∂_k A_ij, grad_lambda(i,j) = ∂_j λ_i, grad_B(i,j,r) = ∂_r B_ij.
struct DualDerivativeData {
    Mat3 dt_A = Mat3::Zero();
    Tensor3 grad_A;
    Mat3 A = Mat3::Zero();
    double dt_theta = 0;
    Vec3 grad_theta = Vec3::Zero();
    Vec3 dt_lambda = Vec3::Zero();
    Mat3 grad_lambda = Mat3::Zero();
    Tensor3 grad_B;
    Mat3 B = Mat3::Zero();

    static constexpr int size = 9 + 27 + 9 + 1 + 3 + 3 + 9 + 27 + 9;

    Vec flatten() const
    {
        Vec out(size);
        int n = 0;
        auto put = [&](const double* p, int m) {
            for (int i = 0; i < m; ++i)
                out[n++] = p[i];
        };
        put(dt_A.data(), 9);
        put(grad_A.v.data(), 27);
        put(A.data(), 9);
        put(&dt_theta, 1);
        put(grad_theta.data(), 3);
        put(dt_lambda.data(), 3);
        put(grad_lambda.data(), 9);
        put(grad_B.v.data(), 27);
        put(B.data(), 9);
        return out;
    }

    static DualDerivativeData unflatten(const Vec& in)
    {
        DualDerivativeData d;
        int n = 0;
        auto get = [&](double* p, int m) {
            for (int i = 0; i < m; ++i)
                p[i] = in[n++];
        };
        get(d.dt_A.data(), 9);
        get(d.grad_A.v.data(), 27);
        get(d.A.data(), 9);
        get(&d.dt_theta, 1);
        get(d.grad_theta.data(), 3);
        get(d.dt_lambda.data(), 3);
        get(d.grad_lambda.data(), 9);
        get(d.grad_B.v.data(), 27);
        get(d.B.data(), 9);
        return d;
    }

    double max_abs() const { return flatten().lpNorm<Eigen::Infinity>(); }

    void validate(double cap) const
    {
        Vec f = flatten();
        if (!f.allFinite())
            throw ConfigError("dual derivative data must be finite");
        if (f.lpNorm<Eigen::Infinity>() > cap)
            throw ConfigError("dual derivative data exceed the configured cap");
    }
};

inline DualDerivativeData random_derivative_data(std::mt19937_64& rng, double cap)
{
    std::uniform_real_distribution<double> u(-cap, cap);
    Vec f(DualDerivativeData::size);
    for (Eigen::Index i = 0; i < f.size(); ++i)
        f[i] = u(rng);
    return DualDerivativeData::unflatten(f);
}

struct PrimalPointState {
    Mat3 W = Mat3::Identity();
    double rho = 1;
    Vec3 v = Vec3::Zero();
    Mat3 alpha = Mat3::Zero();

    static constexpr int size = 22;

    // Order: W (row-major), ρ, v, α (row-major).
    Vec pack() const
    {
        Vec out(size);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                out[i * 3 + j] = W(i, j);
                out[13 + i * 3 + j] = alpha(i, j);
            }
        out[9] = rho;
        out.segment<3>(10) = v;
        return out;
    }

    static PrimalPointState unpack(const Vec& in)
    {
        PrimalPointState s;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                s.W(i, j) = in[i * 3 + j];
                s.alpha(i, j) = in[13 + i * 3 + j];
            }
        s.rho = in[9];
        s.v = in.segment<3>(10);
        return s;
    }
};

// Dislocation velocity V = V0 + Kα:α + KW:W + kρ (ρ − ρ̄); constant when all slopes vanish.
struct VelocityLaw {
    Vec3 V0 = Vec3::Zero();
    std::array<Mat3, 3> K_alpha{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};  // [s](i, r)
    std::array<Mat3, 3> K_W{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};      // [s](i, j)
    Vec3 k_rho = Vec3::Zero();

    Vec3 value(const PrimalPointState& u, double rho_bar) const
    {
        Vec3 out = V0;
        for (int s = 0; s < 3; ++s)
            out[s] += (K_alpha[s].cwiseProduct(u.alpha)).sum() + (K_W[s].cwiseProduct(u.W)).sum() +
                      k_rho[s] * (u.rho - rho_bar);
        return out;
    }
};

struct MaterialPoint {
    VelocityLaw V;
    double c_W = 1e3, c_rho = 1e3, c_v = 1e3, c_alpha = 1e3;
    double rho_bar = 1;

    void validate() const
    {
        if (!(c_W > 0) || !(c_rho > 0) || !(c_v > 0) || !(c_alpha > 0))
            throw ConfigError("H coefficients must be positive");
        if (!(rho_bar > 0))
            throw ConfigError("rho_bar must be positive");
    }

    double max_coeff() const { return std::max({c_W, c_rho, c_v, c_alpha}); }
    double min_coeff() const { return std::min({c_W, c_rho, c_v, c_alpha}); }

    // ψ = ½‖W − I‖².
    double psi(const Mat3& W) const { return 0.5 * (W - Mat3::Identity()).squaredNorm(); }
    Mat3 psi_prime(const Mat3& W) const { return W - Mat3::Identity(); }
    static double psi_second(int k, int j, int l, int p) { return (k == l && j == p) ? 1.0 : 0.0; }

    PrimalPointState base() const
    {
        PrimalPointState s;
        s.rho = rho_bar;
        return s;
    }

    double H(const PrimalPointState& u) const
    {
        return 0.5 * c_W * (u.W - Mat3::Identity()).squaredNorm() + 0.5 * c_rho * (u.rho - rho_bar) * (u.rho - rho_bar) +
               0.5 * c_v * u.v.squaredNorm() + 0.5 * c_alpha * u.alpha.squaredNorm();
    }
};

// Integrand of the dual action at a point, H included.
inline double lagrangian_density(const DualDerivativeData& d, const PrimalPointState& u, const MaterialPoint& m)
{
    const Mat3& W = u.W;
    const Mat3& a = u.alpha;
    const Vec3& v = u.v;
    const double rho = u.rho;
    Vec3 V = m.V.value(u, m.rho_bar);
    Mat3 psi1 = m.psi_prime(W);
    double s = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            s -= W(i, j) * d.dt_A(i, j);
            for (int k = 0; k < 3; ++k) {
                s -= W(i, k) * v[k] * d.grad_A(i, j, j);
                for (int r = 0; r < 3; ++r) {
                    s -= d.A(i, j) * v[k] * levi_civita(r, k, j) * a(i, r);
                    s -= d.A(i, j) * levi_civita(j, r, k) * a(i, r) * V[k];
                    s -= levi_civita(j, r, k) * W(i, k) * d.grad_B(i, j, r);
                }
            }
            s += d.B(i, j) * a(i, j);
        }
    s -= rho * d.dt_theta + rho * v.dot(d.grad_theta);
    for (int i = 0; i < 3; ++i) {
        s -= rho * v[i] * d.dt_lambda[i];
        for (int j = 0; j < 3; ++j) {
            s -= rho * v[i] * v[j] * d.grad_lambda(i, j);
            for (int k = 0; k < 3; ++k)
                s -= rho * W(k, i) * psi1(k, j) * d.grad_lambda(i, j);
        }
    }
    return s + m.H(u);
}

// ∂ℒ/∂U in packed order (W, ρ, v, α).
inline Vec invert_residual(const DualDerivativeData& d, const PrimalPointState& u, const MaterialPoint& m)
{
    const Mat3& W = u.W;
    const Mat3& a = u.alpha;
    const Vec3& v = u.v;
    const double rho = u.rho;
    Vec3 V = m.V.value(u, m.rho_bar);
    Mat3 psi1 = m.psi_prime(W);

    Vec3 divA;  // ∂_j A_ij
    for (int i = 0; i < 3; ++i)
        divA[i] = d.grad_A(i, 0, 0) + d.grad_A(i, 1, 1) + d.grad_A(i, 2, 2);
    // c_s = A_ij e_jrs α_ir, the coefficient of V_s.
    Vec3 c = Vec3::Zero();
    for (int s = 0; s < 3; ++s)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int r = 0; r < 3; ++r)
                    c[s] += d.A(i, j) * levi_civita(j, r, s) * a(i, r);

    Mat3 gW, gA;
    for (int l = 0; l < 3; ++l)
        for (int p = 0; p < 3; ++p) {
            double w = -d.dt_A(l, p) - v[p] * divA[l];
            for (int s = 0; s < 3; ++s)
                w -= c[s] * m.V.K_W[s](l, p);
            for (int j = 0; j < 3; ++j)
                for (int r = 0; r < 3; ++r)
                    w -= levi_civita(j, r, p) * d.grad_B(l, j, r);
            double lam = 0;
            for (int j = 0; j < 3; ++j) {
                lam += psi1(l, j) * d.grad_lambda(p, j);
                for (int k = 0; k < 3; ++k)
                    for (int i = 0; i < 3; ++i)
                        lam += W(k, i) * MaterialPoint::psi_second(k, j, l, p) * d.grad_lambda(i, j);
            }
            gW(l, p) = w - rho * lam + m.c_W * (W(l, p) - (l == p ? 1.0 : 0.0));

            double al = 0;
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k)
                    al -= d.A(l, j) * v[k] * levi_civita(p, k, j) + d.A(l, j) * levi_civita(j, p, k) * V[k];
            for (int s = 0; s < 3; ++s)
                al -= c[s] * m.V.K_alpha[s](l, p);
            gA(l, p) = al + d.B(l, p) + m.c_alpha * a(l, p);
        }

    double g_rho = -c.dot(m.V.k_rho) - d.dt_theta - v.dot(d.grad_theta) - v.dot(d.dt_lambda) -
                   v.dot(d.grad_lambda * v) + m.c_rho * (rho - m.rho_bar);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                g_rho -= W(k, i) * psi1(k, j) * d.grad_lambda(i, j);

    Vec3 gv;
    for (int p = 0; p < 3; ++p) {
        double s = -rho * d.grad_theta[p] - rho * d.dt_lambda[p];
        for (int i = 0; i < 3; ++i) {
            s -= W(i, p) * divA[i];
            s -= rho * v[i] * d.grad_lambda(p, i) + rho * v[i] * d.grad_lambda(i, p);
            for (int j = 0; j < 3; ++j)
                for (int r = 0; r < 3; ++r)
                    s -= d.A(i, j) * levi_civita(r, p, j) * a(i, r);
        }
        gv[p] = s + m.c_v * v[p];
    }

    Vec out(PrimalPointState::size);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            out[i * 3 + j] = gW(i, j);
            out[13 + i * 3 + j] = gA(i, j);
        }
    out[9] = g_rho;
    out.segment<3>(10) = gv;
    return out;
}

struct PointSolveConfig {
    double tol = 1e-11;
    int max_iter = 50;
    double fd_step = 1e-7;
    double cap = 1;

    void validate() const
    {
        if (!(tol > 0) || max_iter < 1 || !(fd_step > 0) || !(cap > 0))
            throw ConfigError("invalid pointwise solver settings");
    }
};

struct PointSolveResult {
    PrimalPointState state;
    double residual = 0;  // max norm
    int iterations = 0;
    std::string warning;
};

struct PointSolveError : NumericalError {
    using NumericalError::NumericalError;
};

// Solves ∂ℒ/∂U = 0 for U by Newton with a central-difference Jacobian.
inline PointSolveResult solve_pointwise(const DualDerivativeData& d, const MaterialPoint& m,
                                        const PrimalPointState& guess, const PointSolveConfig& cfg)
{
    m.validate();
    cfg.validate();
    PointSolveResult out;
    if (m.min_coeff() < 10 * cfg.cap)
        out.warning = "H coefficients are below 10x the data cap; the inversion may not be solvable";
    auto res = [&](const Vec& x) { return invert_residual(d, PrimalPointState::unpack(x), m); };
    Vec x = guess.pack();
    Vec r = res(x);
    double rn = r.lpNorm<Eigen::Infinity>();
    int it = 0;
    for (; it < cfg.max_iter && rn > cfg.tol; ++it) {
        Mat j = fd_jacobian(res, x, cfg.fd_step);
        Eigen::PartialPivLU<Mat> lu(j);
        Vec step = -lu.solve(r);
        if (!step.allFinite())
            break;
        double t = 1;
        bool accepted = false;
        for (int b = 0; b < 40; ++b, t *= 0.5) {
            Vec trial = x + t * step;
            if (!(trial[9] > 0))
                continue;
            Vec rt = res(trial);
            double n = rt.lpNorm<Eigen::Infinity>();
            if (std::isfinite(n) && n < rn) {
                x = trial, r = rt, rn = n;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
    }
    out.state = PrimalPointState::unpack(x);
    out.residual = rn;
    out.iterations = it;
    if (!(rn <= 10 * cfg.tol))
        throw PointSolveError("pointwise inversion did not converge (residual " + std::to_string(rn) +
                              "); increase the H coefficients");
    return out;
}

// ‖U − base‖ in packed coordinates.
inline double distance_from_base(const PrimalPointState& u, const MaterialPoint& m)
{
    return (u.pack() - m.base().pack()).norm();
}

} // namespace dualact
