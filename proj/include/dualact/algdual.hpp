#pragma once

#include "optcore.hpp"

namespace dualact {

// Primal problem A(x) = 0 with A: R^n -> R^N.
struct ResidualSystem {
    int n = 0;
    int N = 0;
    std::function<Vec(const Vec&)> residual;
    std::function<Mat(const Vec&)> jacobian;                // N×n
    std::function<Mat(const Vec&, const Vec&)> zdotA_hess;  // (x, z) -> Σ z_α ∂²A_α, n×n
};

// H(x) = ½ Σ c_i (x_i − x̄_i)².
struct AuxiliaryPotential {
    Vec base;
    Vec coeff;

    static AuxiliaryPotential shifted_quadratic(const Vec& base, double c)
    {
        if (!(c > 0))
            throw ConfigError("potential coefficient c must be positive");
        return {base, Vec::Constant(base.size(), c)};
    }

    static AuxiliaryPotential shifted_quadratic(const Vec& base, const Vec& c)
    {
        if (c.size() != base.size() || !(c.array() > 0).all())
            throw ConfigError("potential coefficients must be positive and match the base point");
        return {base, c};
    }

    double value(const Vec& x) const { return 0.5 * (coeff.array() * (x - base).array().square()).sum(); }
    Vec grad(const Vec& x) const { return coeff.cwiseProduct(x - base); }
    Mat hess(const Vec&) const { return coeff.asDiagonal(); }
};

struct AlgConfig {
    NewtonConfig newton;
    double inner_tol = 1e-12;
    int inner_max_iter = 60;
    double tol_primal = 1e-8;
};

struct InnerSolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DualState {
    Vec z;
    Vec x;
    double value = 0;
    Vec grad;
};

// x_H(z): solves jacAᵀ z + ∇H = 0 by Newton from the base point.
inline Vec solve_inner(const ResidualSystem& sys, const AuxiliaryPotential& h, const Vec& z, const AlgConfig& cfg)
{
    if (z.size() != sys.N)
        throw std::invalid_argument("dual vector length differs from N");
    Vec x = h.base;
    for (int it = 0; it <= cfg.inner_max_iter; ++it) {
        Vec r = sys.jacobian(x).transpose() * z + h.grad(x);
        if (!r.allFinite())
            break;
        double scale = std::max(1.0, z.norm());
        if (r.norm() <= cfg.inner_tol * scale)
            return x;
        Mat k = sys.zdotA_hess(x, z) + h.hess(x);
        Eigen::FullPivLU<Mat> lu(k);
        if (!lu.isInvertible())
            break;
        x -= lu.solve(r);
    }
    throw InnerSolveError("inner stationarity solve diverged; increase the potential coefficient c");
}

inline DualState dual_value_grad(const ResidualSystem& sys, const AuxiliaryPotential& h, const Vec& z,
                                 const AlgConfig& cfg)
{
    DualState s;
    s.z = z;
    s.x = solve_inner(sys, h, z, cfg);
    Vec a = sys.residual(s.x);
    s.value = z.dot(a) + h.value(s.x);
    s.grad = a;
    return s;
}

// ∇²S_H = jacA · ∂x_H/∂z with ∂x_H/∂z = −K⁻¹ jacAᵀ.
inline Mat dual_hessian(const ResidualSystem& sys, const AuxiliaryPotential& h, const Vec& z, const Vec& x)
{
    Mat j = sys.jacobian(x);
    Mat k = sys.zdotA_hess(x, z) + h.hess(x);
    Mat dx = -Eigen::FullPivLU<Mat>(k).solve(j.transpose());
    Mat hs = j * dx;
    return 0.5 * (hs + hs.transpose());
}

struct DualSolveResult {
    CriticalPointResult cp;
    Vec x;
    double primal_residual = INFINITY;
    double best_primal_residual = INFINITY;  // inf over iterates of ‖A(x_H)‖
};

inline DualSolveResult solve_dual(const ResidualSystem& sys, const AuxiliaryPotential& h, const Vec& z0,
                                  const AlgConfig& cfg)
{
    DualSolveResult out;
    auto grad = [&](const Vec& z) -> Vec {
        try {
            Vec g = dual_value_grad(sys, h, z, cfg).grad;
            out.best_primal_residual = std::min(out.best_primal_residual, g.norm());
            return g;
        } catch (const InnerSolveError&) {
            if (z.size() == z0.size() && z == z0)
                throw;
            return Vec::Constant(sys.N, NAN);
        }
    };
    auto hess = [&](const Vec& z) -> Mat { return dual_hessian(sys, h, z, solve_inner(sys, h, z, cfg)); };
    out.cp = newton_critical(grad, hess, z0, cfg.newton);
    out.x = solve_inner(sys, h, out.cp.point, cfg);
    out.primal_residual = sys.residual(out.x).norm();
    out.cp.converged = out.cp.converged && out.primal_residual <= cfg.tol_primal;
    return out;
}

struct InvarianceReport {
    bool first_converged = false;
    bool second_converged = false;
    double gap = INFINITY;
    bool pass = false;
    Vec x_first, x_second;
};

inline InvarianceReport h_invariance_check(const ResidualSystem& sys, const AuxiliaryPotential& h1,
                                           const AuxiliaryPotential& h2, const Vec& z0, const AlgConfig& cfg)
{
    InvarianceReport r;
    DualSolveResult a = solve_dual(sys, h1, z0, cfg);
    DualSolveResult b = solve_dual(sys, h2, z0, cfg);
    r.first_converged = a.cp.converged;
    r.second_converged = b.cp.converged;
    r.x_first = a.x;
    r.x_second = b.x;
    if (r.first_converged && r.second_converged) {
        r.gap = (a.x - b.x).norm();
        r.pass = r.gap <= 1e-6;
    }
    return r;
}

// Linear system Āx − b.
inline ResidualSystem linear_system(const Mat& abar, const Vec& b)
{
    if (abar.rows() != b.size())
        throw ConfigError("matrix rows differ from right-hand side length");
    ResidualSystem s;
    s.n = static_cast<int>(abar.cols());
    s.N = static_cast<int>(abar.rows());
    s.residual = [abar, b](const Vec& x) { return Vec(abar * x - b); };
    s.jacobian = [abar](const Vec&) { return abar; };
    int n = s.n;
    s.zdotA_hess = [n](const Vec&, const Vec&) { return Mat(Mat::Zero(n, n)); };
    return s;
}

// A1 = x1² + x2² − 1, A2 = x1 − x2.
inline ResidualSystem circle_line()
{
    ResidualSystem s;
    s.n = 2;
    s.N = 2;
    s.residual = [](const Vec& x) {
        Vec a(2);
        a << x[0] * x[0] + x[1] * x[1] - 1, x[0] - x[1];
        return a;
    };
    s.jacobian = [](const Vec& x) {
        Mat j(2, 2);
        j << 2 * x[0], 2 * x[1], 1, -1;
        return j;
    };
    s.zdotA_hess = [](const Vec&, const Vec& z) { return Mat(2 * z[0] * Mat::Identity(2, 2)); };
    return s;
}

// A(x) = x² − 1.
inline ResidualSystem scalar_quadratic()
{
    ResidualSystem s;
    s.n = 1;
    s.N = 1;
    s.residual = [](const Vec& x) { return Vec::Constant(1, x[0] * x[0] - 1); };
    s.jacobian = [](const Vec& x) { return Mat::Constant(1, 1, 2 * x[0]); };
    s.zdotA_hess = [](const Vec&, const Vec& z) { return Mat::Constant(1, 1, 2 * z[0]); };
    return s;
}

// Minimum-norm solution via ĀĀᵀ w = b, x = Āᵀ w, with rank handling.
inline Vec minnorm_oracle(const Mat& abar, const Vec& b)
{
    Mat g = abar * abar.transpose();
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(g);
    Vec w = cod.solve(b);
    Vec x = abar.transpose() * w;
    double res = (abar * x - b).norm();
    if (res > 1e-8 * std::max(1.0, b.norm()))
        throw SolveError("system is inconsistent: residual " + std::to_string(res), res);
    return x;
}

struct LeastSquaresReport {
    Vec x_ls;
    Vec x_dual;
    bool ls_regularized = false;
    bool dual_converged = false;
    double dual_residual = INFINITY;
    double row_space_residual = INFINITY;
    CriticalPointResult cp;
};

// Compares the normal-equation solution with the dual branch (x̄ = 0).
inline LeastSquaresReport least_squares_compare(const Mat& abar, const Vec& b, double c,
                                                const AlgConfig& cfg = {})
{
    LeastSquaresReport r;
    Mat nt = abar.transpose() * abar;
    Vec rhs = abar.transpose() * b;
    Eigen::LDLT<Mat> ldlt(nt);
    bool ok = false;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        Vec x = ldlt.solve(rhs);
        if (x.allFinite() && (nt * x - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()) &&
            Eigen::FullPivLU<Mat>(nt).isInvertible()) {
            r.x_ls = x;
            ok = true;
        }
    }
    if (!ok) {
        r.x_ls = Eigen::CompleteOrthogonalDecomposition<Mat>(nt).solve(rhs);
        r.ls_regularized = true;
    }

    ResidualSystem sys = linear_system(abar, b);
    AuxiliaryPotential h = AuxiliaryPotential::shifted_quadratic(Vec::Zero(abar.cols()), c);
    DualSolveResult d = solve_dual(sys, h, Vec::Zero(abar.rows()), cfg);
    r.cp = d.cp;
    r.x_dual = d.x;
    r.dual_converged = d.cp.converged;
    r.dual_residual = d.primal_residual;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(abar);
    Mat pinv = cod.pseudoInverse();
    r.row_space_residual = (d.x - pinv * (abar * d.x)).norm();
    return r;
}

} // namespace dualact
