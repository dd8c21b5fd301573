#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualact {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Raised when an evaluator produces NaN or Inf.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by linear solves that cannot meet their tolerance.
struct SolveError : std::runtime_error {
    double residual;
    SolveError(const std::string& what, double r) : std::runtime_error(what), residual(r) {}
};

// Raised for invalid parameters.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

struct NewtonConfig {
    double grad_tol = 1e-10;
    int max_iter = 50;
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    double levenberg_shift = 1e-10;
    double fd_step = 1e-6;
    int max_backtracks = 40;

    void validate() const
    {
        if (!(grad_tol > 0))
            throw ConfigError("grad_tol must be positive");
        if (max_iter < 0)
            throw ConfigError("max_iter must be non-negative");
        if (!(shrink > 0 && shrink < 1))
            throw ConfigError("shrink must lie in (0, 1)");
        if (!(sufficient_decrease > 0 && sufficient_decrease < 0.5))
            throw ConfigError("sufficient_decrease must lie in (0, 0.5)");
        if (!(levenberg_shift >= 0))
            throw ConfigError("levenberg_shift must be non-negative");
        if (!(fd_step > 0))
            throw ConfigError("fd_step must be positive");
    }
};

struct TraceEntry {
    int iteration = 0;
    double grad_norm = 0;
    double step = 0;
};

struct CriticalPointResult {
    Vec point;
    double grad_norm = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceEntry> trace;
};

// Symmetric matrix holding only its lower triangle.
class SparseSymmetricMatrix {
public:
    SparseSymmetricMatrix() = default;

    explicit SparseSymmetricMatrix(int n) : lower_(n, n) {}

    // Takes the lower triangle of a full symmetric matrix.
    static SparseSymmetricMatrix from_full(const SpMat& full)
    {
        if (full.rows() != full.cols())
            throw std::invalid_argument("symmetric matrix must be square");
        SparseSymmetricMatrix m;
        m.lower_ = full.triangularView<Eigen::Lower>();
        m.lower_.makeCompressed();
        return m;
    }

    static SparseSymmetricMatrix from_dense(const Mat& full)
    {
        return from_full(full.sparseView());
    }

    // Entries above the diagonal are mirrored into the lower triangle.
    static SparseSymmetricMatrix from_triplets(int n, const std::vector<Triplet>& entries)
    {
        std::vector<Triplet> low;
        low.reserve(entries.size());
        for (const auto& t : entries) {
            if (t.row() >= t.col())
                low.push_back(t);
            else
                low.emplace_back(t.col(), t.row(), t.value());
        }
        SparseSymmetricMatrix m(n);
        m.lower_.setFromTriplets(low.begin(), low.end());
        m.lower_.makeCompressed();
        return m;
    }

    int dim() const { return static_cast<int>(lower_.rows()); }
    const SpMat& lower() const { return lower_; }

    SpMat full() const
    {
        SpMat f = lower_.selfadjointView<Eigen::Lower>();
        return f;
    }

    Mat dense() const { return Mat(full()); }

    Vec operator*(const Vec& x) const
    {
        if (x.size() != dim())
            throw std::invalid_argument("dimension mismatch in symmetric product");
        return lower_.selfadjointView<Eigen::Lower>() * x;
    }

    void add_diagonal(double shift)
    {
        for (int i = 0; i < dim(); ++i)
            lower_.coeffRef(i, i) += shift;
        lower_.makeCompressed();
    }

private:
    SpMat lower_;
};

namespace detail {

inline double relative_residual(double res, const Vec& rhs)
{
    double nb = rhs.norm();
    return nb > 0 ? res / nb : res;
}

inline Vec dense_symmetric_solve(const Mat& a, const Vec& rhs, double tol)
{
    Eigen::LDLT<Mat> ldlt(a);
    if (ldlt.info() == Eigen::Success) {
        Vec x = ldlt.solve(rhs);
        if (x.allFinite() && (a * x - rhs).norm() <= tol * rhs.norm())
            return x;
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
    Vec x = cod.solve(rhs);
    double res = x.allFinite() ? (a * x - rhs).norm() : INFINITY;
    if (res <= tol * rhs.norm())
        return x;
    std::ostringstream os;
    os << "symmetric solve failed: relative residual " << detail::relative_residual(res, rhs)
       << " exceeds " << tol;
    throw SolveError(os.str(), res);
}

} // namespace detail

constexpr int dense_limit = 2000;

// Solves mat·x = rhs for symmetric, possibly indefinite or singular-consistent mat.
inline Vec solve_symmetric(const SparseSymmetricMatrix& mat, const Vec& rhs, double tol)
{
    if (rhs.size() != mat.dim())
        throw std::invalid_argument("dimension mismatch in solve_symmetric");
    if (!rhs.allFinite())
        throw NumericalError("non-finite right-hand side");
    if (rhs.norm() == 0)
        return Vec::Zero(rhs.size());
    if (mat.dim() < dense_limit)
        return detail::dense_symmetric_solve(mat.dense(), rhs, tol);

    SpMat full = mat.full();
    double res = INFINITY;
    {
        Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt(mat.lower());
        if (ldlt.info() == Eigen::Success) {
            Vec x = ldlt.solve(rhs);
            if (x.allFinite()) {
                res = (full * x - rhs).norm();
                if (res <= tol * rhs.norm())
                    return x;
            }
        }
    }
    Eigen::SparseLU<SpMat> lu;
    lu.compute(full);
    if (lu.info() == Eigen::Success) {
        Vec x = lu.solve(rhs);
        if (x.allFinite()) {
            res = std::min(res, (full * x - rhs).norm());
            if ((full * x - rhs).norm() <= tol * rhs.norm())
                return x;
        }
    }
    std::ostringstream os;
    os << "symmetric solve failed: relative residual " << detail::relative_residual(res, rhs)
       << " exceeds " << tol;
    throw SolveError(os.str(), res);
}

inline Vec solve_symmetric(const Mat& mat, const Vec& rhs, double tol)
{
    if (mat.rows() != mat.cols() || rhs.size() != mat.rows())
        throw std::invalid_argument("dimension mismatch in solve_symmetric");
    if (!rhs.allFinite() || !mat.allFinite())
        throw NumericalError("non-finite input to solve_symmetric");
    if (rhs.norm() == 0)
        return Vec::Zero(rhs.size());
    return detail::dense_symmetric_solve(0.5 * (mat + mat.transpose()), rhs, tol);
}

// Central differences with step scaled by max(1, |x_i|).
template <class F>
Vec fd_gradient(F&& f, const Vec& point, double step)
{
    Vec g(point.size());
    Vec x = point;
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        double h = step * std::max(1.0, std::abs(point[i]));
        x[i] = point[i] + h;
        double fp = f(x);
        x[i] = point[i] - h;
        double fm = f(x);
        x[i] = point[i];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericalError("non-finite value in fd_gradient");
        g[i] = (fp - fm) / (2 * h);
    }
    return g;
}

// Jacobian of a vector map by central differences, one column per input.
template <class F>
Mat fd_jacobian(F&& f, const Vec& point, double step)
{
    Vec x = point;
    Vec f0 = f(x);
    Mat jac(f0.size(), point.size());
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        double h = step * std::max(1.0, std::abs(point[i]));
        x[i] = point[i] + h;
        Vec fp = f(x);
        x[i] = point[i] - h;
        Vec fm = f(x);
        x[i] = point[i];
        if (!fp.allFinite() || !fm.allFinite())
            throw NumericalError("non-finite value in fd_jacobian");
        jac.col(i) = (fp - fm) / (2 * h);
    }
    return jac;
}

// Newton search for grad(z) = 0 with a caller-supplied direction solver.
// direction(z, g) must return d with Hess(z)·d ≈ -g. Merit is ½‖grad‖².
template <class Grad, class Direction>
CriticalPointResult newton_critical_with(Grad&& grad, Direction&& direction, const Vec& start,
                                         const NewtonConfig& cfg)
{
    cfg.validate();
    CriticalPointResult out;
    Vec z = start;
    Vec g = grad(z);
    if (g.size() != z.size())
        throw std::invalid_argument("gradient dimension differs from start");
    if (!g.allFinite())
        throw NumericalError("non-finite gradient at start point");
    double gn = g.norm();
    out.trace.push_back({0, gn, 0.0});

    int it = 0;
    bool stalled = false;
    while (gn > cfg.grad_tol && it < cfg.max_iter && !stalled) {
        Vec d = direction(z, g);
        if (!d.allFinite())
            throw NumericalError("non-finite Newton direction");
        double merit = 0.5 * gn * gn;
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
            Vec zt = z + alpha * d;
            Vec gt = grad(zt);
            if (gt.allFinite()) {
                double mt = 0.5 * gt.squaredNorm();
                if (mt <= (1 - 2 * cfg.sufficient_decrease * alpha) * merit) {
                    z = std::move(zt);
                    g = std::move(gt);
                    accepted = true;
                    break;
                }
            }
            alpha *= cfg.shrink;
        }
        ++it;
        if (!accepted) {
            stalled = true;
            out.trace.push_back({it, gn, 0.0});
            break;
        }
        gn = g.norm();
        out.trace.push_back({it, gn, alpha * d.norm()});
    }
    out.point = z;
    out.grad_norm = gn;
    out.iterations = it;
    out.converged = gn <= cfg.grad_tol;
    return out;
}

namespace detail {

// Direction from an assembled Hessian: exact solve first, then a
// Levenberg step (H² + μI) d = -H g, which always descends on ½‖g‖².
inline Vec newton_direction(const Mat& hess, const Vec& g, const NewtonConfig& cfg)
{
    Mat h = 0.5 * (hess + hess.transpose());
    try {
        return solve_symmetric(h, Vec(-g), 1e-10);
    } catch (const SolveError&) {
    }
    Mat h2 = h * h;
    double mu = std::max(cfg.levenberg_shift, 1e-12 * std::max(1.0, h2.diagonal().maxCoeff()));
    h2.diagonal().array() += mu;
    Eigen::LLT<Mat> llt(h2);
    if (llt.info() != Eigen::Success)
        throw NumericalError("regularized Newton system is not positive definite");
    return llt.solve(Vec(-(h * g)));
}

inline Vec newton_direction(const SparseSymmetricMatrix& hess, const Vec& g, const NewtonConfig& cfg)
{
    if (hess.dim() < dense_limit)
        return newton_direction(hess.dense(), g, cfg);
    try {
        return solve_symmetric(hess, Vec(-g), 1e-10);
    } catch (const SolveError&) {
    }
    SpMat h = hess.full();
    SpMat h2 = h * h;
    double mu = std::max(cfg.levenberg_shift, 1e-12 * std::max(1.0, Vec(h2.diagonal()).maxCoeff()));
    for (int i = 0; i < h2.rows(); ++i)
        h2.coeffRef(i, i) += mu;
    Eigen::SimplicialLLT<SpMat> llt(h2);
    if (llt.info() != Eigen::Success)
        throw NumericalError("regularized Newton system is not positive definite");
    return llt.solve(Vec(-(h * g)));
}

} // namespace detail

// Newton search with an assembled Hessian (dense Mat or SparseSymmetricMatrix).
template <class Grad, class Hess>
CriticalPointResult newton_critical(Grad&& grad, Hess&& hess, const Vec& start, const NewtonConfig& cfg)
{
    auto direction = [&](const Vec& z, const Vec& g) {
        auto h = hess(z);
        return detail::newton_direction(h, g, cfg);
    };
    return newton_critical_with(grad, direction, start, cfg);
}

} // namespace dualact
