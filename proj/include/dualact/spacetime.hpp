#pragma once

#include "causal.hpp"
#include "parallel.hpp"

namespace dualact {

// Discrete primal rows on a space-time node set:
//   rows(U) = E·U + EF·F(U) − g,
// one row per free dual entry. U holds q components per node, F holds nF
// flux components per node. Data entries of U are substituted into g, so
// their columns in E are zero.
struct RowSystem {
    int nodes = 0;
    int q = 0;
    int nF = 0;
    SpMat E;
    SpMat EF;
    Vec g;
    Vec R;                        // row weight (measure of the row's cell)
    Vec W;                        // node weight
    std::vector<int> row_level;
    std::vector<int> row_family;  // scheme-specific tag for residual reports
    std::vector<int> col_level;   // per U entry
    std::vector<char> col_real;   // per U entry: appears in the rows
    std::vector<char> data;       // per U entry: fixed by initial/boundary data
    Vec data_values;              // per U entry

    int rows() const { return static_cast<int>(g.size()); }
    int unknowns() const { return nodes * q; }
};

// Closure F: R^q -> R^nF with derivatives.
struct FluxClosure {
    std::function<Vec(const Vec&)> value;
    std::function<Mat(const Vec&)> jacobian;                // nF×q
    std::function<Mat(const Vec&, const Vec&)> weighted_hessian;  // (U, w) -> Σ w_a ∂²F_a, q×q
};

// M(U, L) = ½ Σ c_i (U_i − base_i)² − L·F(U), per node.
struct NodalPotential {
    Vec coeff;                     // q
    Vec base;                      // nodes·q
    std::optional<FluxClosure> flux;
    double inversion_tol = 1e-12;
    int inversion_max_iter = 50;

    double value(int node, const Vec& u, const Vec& l) const
    {
        int q = static_cast<int>(coeff.size());
        Vec d = u - base.segment(node * q, q);
        double m = 0.5 * (coeff.array() * d.array().square()).sum();
        if (flux)
            m -= l.dot(flux->value(u));
        return m;
    }
};

struct LegendreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NodeInverse {
    Vec u;
    Mat k;  // ∂²_U M at u
};

// Solves ∂_U M(U, L) = P at one node.
inline NodeInverse legendre_node(const NodalPotential& m, int node, const Vec& p, const Vec& l)
{
    int q = static_cast<int>(m.coeff.size());
    Vec base = m.base.segment(node * q, q);
    NodeInverse out;
    out.u = base + p.cwiseQuotient(m.coeff);
    if (!m.flux) {
        out.k = m.coeff.asDiagonal();
        return out;
    }
    const FluxClosure& f = *m.flux;
    double scale = std::max(1.0, p.lpNorm<Eigen::Infinity>());
    for (int it = 0; it <= m.inversion_max_iter; ++it) {
        Vec r = m.coeff.cwiseProduct(out.u - base) - f.jacobian(out.u).transpose() * l - p;
        out.k = Mat(m.coeff.asDiagonal()) - f.weighted_hessian(out.u, l);
        Eigen::LLT<Mat> llt(out.k);
        if (llt.info() != Eigen::Success)
            throw LegendreError("potential is not convex at node " + std::to_string(node) +
                                "; increase the potential coefficients");
        if (r.lpNorm<Eigen::Infinity>() <= m.inversion_tol * scale)
            return out;
        out.u -= llt.solve(r);
        if (!out.u.allFinite())
            break;
    }
    throw LegendreError("pointwise Legendre inversion diverged at node " + std::to_string(node) +
                        "; increase the potential coefficients");
}

// Nodal quantities at a dual state.
struct NodalState {
    Vec P;       // nodes·q
    Vec L;       // nodes·nF
    Vec U;       // U_H, nodes·q
    Vec Mstar;   // per node
    std::vector<Mat> K;
};

// Dual engine. sign = −1: P = −W⁻¹EᵀRD and S = −ΣW M* − ΣRDg (IBVP form);
// sign = +1: p = +W⁻¹EᵀRD and S = ΣW M* − ΣRDg.
class DualEngine {
public:
    DualEngine(RowSystem rows, NodalPotential pot, int sign)
        : sys_(std::move(rows)), pot_(std::move(pot)), sign_(sign)
    {
        if (pot_.coeff.size() != sys_.q || pot_.base.size() != sys_.unknowns())
            throw std::invalid_argument("potential does not match the row system");
        if (!(pot_.coeff.array() > 0).all())
            throw ConfigError("potential coefficients must be positive");
        if (sys_.nF > 0 && !pot_.flux)
            throw std::invalid_argument("row system has flux terms but the potential has no closure");
        Et_ = sys_.E.transpose();
        if (sys_.nF > 0)
            EFt_ = sys_.EF.transpose();
    }

    const RowSystem& system() const { return sys_; }
    const NodalPotential& potential() const { return pot_; }
    int sign() const { return sign_; }

    // P and L from dual row values D.
    std::pair<Vec, Vec> adjoint(const Vec& d) const
    {
        Vec rd = sys_.R.cwiseProduct(d);
        Vec p = Et_ * rd;
        Vec l = sys_.nF > 0 ? Vec(EFt_ * rd) : Vec();
        int q = sys_.q, nf = sys_.nF;
        for (int n = 0; n < sys_.nodes; ++n) {
            double s = sign_ / sys_.W[n];
            p.segment(n * q, q) *= s;
            if (nf > 0)
                l.segment(n * nf, nf) *= s;
        }
        return {p, l};
    }

    NodalState evaluate(const Vec& d) const
    {
        NodalState st;
        std::tie(st.P, st.L) = adjoint(d);
        int q = sys_.q, nf = sys_.nF;
        st.U.resize(sys_.unknowns());
        st.Mstar.resize(sys_.nodes);
        st.K.resize(sys_.nodes);
        parallel_for(sys_.nodes, [&](long n) {
            Vec p = st.P.segment(n * q, q);
            Vec l = nf > 0 ? Vec(st.L.segment(n * nf, nf)) : Vec();
            NodeInverse inv = legendre_node(pot_, static_cast<int>(n), p, l);
            st.U.segment(n * q, q) = inv.u;
            st.Mstar[n] = inv.u.dot(p) - pot_.value(static_cast<int>(n), inv.u, l);
            st.K[n] = std::move(inv.k);
        });
        return st;
    }

    Vec flux_values(const Vec& u) const
    {
        Vec f(static_cast<Eigen::Index>(sys_.nodes) * sys_.nF);
        int q = sys_.q, nf = sys_.nF;
        parallel_for(sys_.nodes, [&](long n) { f.segment(n * nf, nf) = pot_.flux->value(u.segment(n * q, q)); });
        return f;
    }

    // Primal rows evaluated at U (data entries of U are ignored).
    Vec rows(const Vec& u) const
    {
        Vec r = sys_.E * u - sys_.g;
        if (sys_.nF > 0)
            r += sys_.EF * flux_values(u);
        return r;
    }

    double action(const Vec& d) const { return action(d, evaluate(d)); }

    double action(const Vec& d, const NodalState& st) const
    {
        double s = 0;
        for (int n = 0; n < sys_.nodes; ++n)
            s += sys_.W[n] * st.Mstar[n];
        return sign_ * s - sys_.R.cwiseProduct(d).dot(sys_.g);
    }

    // Envelope identity: ∂S/∂D_r = R_r · rows_r(U_H).
    Vec gradient(const NodalState& st) const { return sys_.R.cwiseProduct(rows(st.U)); }
    Vec gradient(const Vec& d) const { return gradient(evaluate(d)); }

    // Linearized rows A = E + EF·∂F/∂U at U.
    SpMat linearized(const Vec& u) const
    {
        if (sys_.nF == 0)
            return sys_.E;
        std::vector<Triplet> t;
        int q = sys_.q, nf = sys_.nF;
        for (int n = 0; n < sys_.nodes; ++n) {
            Mat j = pot_.flux->jacobian(u.segment(n * q, q));
            for (int a = 0; a < nf; ++a)
                for (int b = 0; b < q; ++b)
                    if (j(a, b) != 0)
                        t.emplace_back(n * nf + a, n * q + b, j(a, b));
        }
        SpMat jf(static_cast<Eigen::Index>(sys_.nodes) * nf, sys_.unknowns());
        jf.setFromTriplets(t.begin(), t.end());
        SpMat a = sys_.E + SpMat(sys_.EF * jf);
        a.prune(0.0);
        return a;
    }

    // Newton direction for H d = −grad with H = sign·R A (W K)⁻¹ Aᵀ R, using
    // the square causal structure of A restricted to real unknowns.
    Vec newton_direction(const NodalState& st, const Vec& grad) const
    {
        std::vector<int> real_index(sys_.unknowns(), -1);
        std::vector<int> col_level;
        int nr = 0;
        for (int c = 0; c < sys_.unknowns(); ++c)
            if (sys_.col_real[c]) {
                real_index[c] = nr++;
                col_level.push_back(sys_.col_level[c]);
            }
        SpMat a = linearized(st.U);
        std::vector<Triplet> t;
        for (int k = 0; k < a.outerSize(); ++k)
            for (SpMat::InnerIterator it(a, k); it; ++it) {
                int c = real_index[it.col()];
                if (c < 0) {
                    if (it.value() != 0)
                        throw std::logic_error("row system couples a non-real unknown");
                    continue;
                }
                t.emplace_back(it.row(), c, it.value());
            }
        SpMat ar(sys_.rows(), nr);
        ar.setFromTriplets(t.begin(), t.end());
        CausalFactorization fac(ar, sys_.row_level, col_level);

        Vec rowvals = grad.cwiseQuotient(sys_.R);
        Vec y = fac.solve(rowvals);
        // Apply G = ([(WK)⁻¹]_rr)⁻¹ nodewise.
        Vec gy(nr);
        int q = sys_.q;
        for (int n = 0; n < sys_.nodes; ++n) {
            std::vector<int> comps;
            for (int i = 0; i < q; ++i)
                if (real_index[n * q + i] >= 0)
                    comps.push_back(i);
            if (comps.empty())
                continue;
            const Mat& k = st.K[n];
            bool diagonal = k.isDiagonal();
            if (diagonal) {
                for (int i : comps)
                    gy[real_index[n * q + i]] = sys_.W[n] * k(i, i) * y[real_index[n * q + i]];
                continue;
            }
            Mat kinv = k.inverse();
            int m = static_cast<int>(comps.size());
            Mat sub(m, m);
            Vec v(m);
            for (int a2 = 0; a2 < m; ++a2) {
                v[a2] = y[real_index[n * q + comps[a2]]];
                for (int b2 = 0; b2 < m; ++b2)
                    sub(a2, b2) = kinv(comps[a2], comps[b2]);
            }
            Vec w = sys_.W[n] * sub.ldlt().solve(v);
            for (int a2 = 0; a2 < m; ++a2)
                gy[real_index[n * q + comps[a2]]] = w[a2];
        }
        Vec rd = fac.solve_transpose(gy);
        return -sign_ * rd.cwiseQuotient(sys_.R);
    }

    CriticalPointResult solve(const Vec& start, const NewtonConfig& cfg) const
    {
        auto grad = [&](const Vec& d) -> Vec {
            try {
                return gradient(d);
            } catch (const LegendreError&) {
                if (d.size() == start.size() && d == start)
                    throw;
                return Vec::Constant(d.size(), NAN);
            }
        };
        auto direction = [&](const Vec& d, const Vec& g) { return newton_direction(evaluate(d), g); };
        return newton_critical_with(grad, direction, start, cfg);
    }

    // Recovered primal with data entries substituted.
    Vec substitute_data(const Vec& u) const
    {
        Vec out = u;
        for (int c = 0; c < sys_.unknowns(); ++c)
            if (sys_.data[c])
                out[c] = sys_.data_values[c];
        return out;
    }

private:
    RowSystem sys_;
    NodalPotential pot_;
    int sign_;
    SpMat Et_, EFt_;
};

struct NormPair {
    double l2 = 0;
    double max = 0;
};

// Incremental builder for RowSystem rows with data substitution.
class RowBuilder {
public:
    RowBuilder(RowSystem& sys, std::function<Vec(int)> data_flux = {})
        : sys_(sys), data_flux_(std::move(data_flux))
    {
    }

    void begin() { terms_.clear(), fterms_.clear(), gval_ = 0; }

    void u(int node, int comp, double coef)
    {
        if (coef != 0)
            terms_.emplace_back(node * sys_.q + comp, coef);
    }

    void f(int node, int comp, double coef)
    {
        if (coef != 0)
            fterms_.emplace_back(node, comp, coef);
    }

    void finish(double weight, int level, int family)
    {
        int r = static_cast<int>(g_.size());
        for (auto [c, coef] : terms_) {
            if (sys_.data[c])
                gval_ -= coef * sys_.data_values[c];
            else
                et_.emplace_back(r, c, coef);
        }
        for (auto [node, comp, coef] : fterms_) {
            if (node_is_data(node))
                gval_ -= coef * data_flux_(node)[comp];
            else
                ft_.emplace_back(r, node * sys_.nF + comp, coef);
        }
        g_.push_back(gval_);
        rw_.push_back(weight);
        sys_.row_level.push_back(level);
        sys_.row_family.push_back(family);
    }

    void close()
    {
        int nr = static_cast<int>(g_.size());
        sys_.E.resize(nr, sys_.unknowns());
        sys_.E.setFromTriplets(et_.begin(), et_.end());
        sys_.E.makeCompressed();
        sys_.EF.resize(nr, static_cast<Eigen::Index>(sys_.nodes) * sys_.nF);
        sys_.EF.setFromTriplets(ft_.begin(), ft_.end());
        sys_.EF.makeCompressed();
        sys_.g = Eigen::Map<Vec>(g_.data(), nr);
        sys_.R = Eigen::Map<Vec>(rw_.data(), nr);
    }

    bool node_is_data(int node) const
    {
        for (int i = 0; i < sys_.q; ++i)
            if (!sys_.data[node * sys_.q + i])
                return false;
        return true;
    }

private:
    RowSystem& sys_;
    std::function<Vec(int)> data_flux_;
    std::vector<std::pair<int, double>> terms_;
    std::vector<std::tuple<int, int, double>> fterms_;
    double gval_ = 0;
    std::vector<Triplet> et_, ft_;
    std::vector<double> g_, rw_;
};

} // namespace dualact
