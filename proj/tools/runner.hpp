#pragma once

#include "cases.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace dualact::app {

using json = nlohmann::json;

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_not_converged = 2, exit_config = 3 };

inline std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json to_json(const NormPair& n) { return {{"l2", n.l2}, {"max", n.max}}; }

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

inline void write_convergence(const std::filesystem::path& dir, const std::vector<TraceEntry>& trace)
{
    std::string s = "iteration,grad_norm,step\n";
    for (const auto& e : trace)
        s += std::to_string(e.iteration) + "," + num(e.grad_norm) + "," + num(e.step) + "\n";
    write_file(dir / "convergence.csv", s);
}

struct Outcome {
    int exit_code = exit_ok;
    json summary = json::object();
};

inline json newton_summary(const CriticalPointResult& cp)
{
    return {{"converged", cp.converged}, {"iterations", cp.iterations}, {"grad_norm", cp.grad_norm}};
}

// ---- algebraic ----

inline Outcome run_algebraic(const AlgebraicCase& k, const std::filesystem::path& dir)
{
    Outcome o;
    AuxiliaryPotential h = AuxiliaryPotential::shifted_quadratic(k.base, k.c);
    DualSolveResult r = solve_dual(k.sys, h, k.z0, k.cfg);
    json& s = o.summary;
    s = newton_summary(r.cp);
    s["family"] = k.family;
    s["primal_residual"] = r.primal_residual;
    s["x"] = to_json(r.x);
    s["z"] = to_json(r.cp.point);
    if (k.abar.size()) {
        try {
            Vec ref = k.base + minnorm_oracle(k.abar, k.b - k.abar * k.base);
            s["consistent"] = true;
            s["min_norm_gap"] = (r.x - ref).norm();
        } catch (const SolveError&) {
            s["consistent"] = false;
            LeastSquaresReport ls = least_squares_compare(k.abar, k.b, k.c, k.cfg);
            s["x_ls"] = to_json(ls.x_ls);
            s["ls_regularized"] = ls.ls_regularized;
            s["ls_residual"] = (k.abar * ls.x_ls - k.b).norm();
            s["row_space_residual"] = ls.row_space_residual;
        }
    }
    if (k.c_compare > 0) {
        InvarianceReport inv = h_invariance_check(k.sys, h, AuxiliaryPotential::shifted_quadratic(k.base, k.c_compare),
                                                  k.z0, k.cfg);
        s["h_invariance"] = {{"gap", inv.gap}, {"pass", inv.pass}, {"c_compare", k.c_compare}};
    }
    write_convergence(dir, r.cp.trace);
    o.exit_code = r.cp.converged ? exit_ok : exit_not_converged;
    return o;
}

// ---- ibvp ----

inline Outcome run_ibvp(const IbvpCase& k, const NewtonConfig& cfg, const std::filesystem::path& dir)
{
    Outcome o;
    IbvpProblem pb(k.spec, k.grid, k.pot);
    IbvpSolveResult r = pb.solve(cfg);
    json& s = o.summary;
    s = newton_summary(r.cp);
    s["family"] = k.spec.name;
    s["nx"] = k.grid.nx;
    s["nt"] = k.grid.nt;
    s["T"] = k.grid.T;
    s["dual_action"] = pb.dual_action(r.dual);
    ResidualReport rep = pb.primal_residual(r.primal);
    json eq = json::array();
    for (const auto& e : rep.equation)
        eq.push_back(to_json(e));
    s["primal_residual"] = {{"equation", eq}, {"initial", to_json(rep.ic)}, {"boundary", to_json(rep.bc)}};
    s["l2_error"] = pb.l2_error(r.primal, k.reference(k.grid));

    const char* names[] = {"u", "B", "C"};
    const SpaceTimeGrid& g = k.grid;
    std::string csv = "t,x,field,value\n";
    for (int kk = 0; kk < g.nt; ++kk)
        for (int i = 0; i < g.nx; ++i)
            for (int f = 0; f <= k.spec.order; ++f)
                for (int c = 0; c < k.spec.n; ++c) {
                    std::string name = names[f];
                    if (k.spec.n > 1)
                        name += std::to_string(c);
                    csv += num(g.t(kk)) + "," + num(g.x(i)) + "," + name + "," + num(r.primal.at(f, c, i, kk)) + "\n";
                }
    write_file(dir / "fields.csv", csv);
    write_convergence(dir, r.cp.trace);
    o.exit_code = r.cp.converged ? exit_ok : exit_not_converged;
    return o;
}

// ---- disloc ----

inline Outcome run_disloc(const DislocCase& k, const NewtonConfig& cfg, const std::filesystem::path& dir)
{
    Outcome o;
    DislocMetrics m = run_disloc_case(k, cfg);
    const auto& r = m.result;
    json& s = o.summary;
    s = newton_summary(r.cp);
    const PlaneGrid& g = k.spec.grid;
    s["nx"] = g.nx;
    s["ny"] = g.ny;
    s["nt"] = g.nt;
    s["T"] = g.T;
    s["alpha_l2_error"] = m.alpha_error;
    s["oracle_substeps"] = m.oracle_substeps;
    s["burgers_content_drift"] = m.content_drift;
    s["curl_consistency"] = m.curl_consistency;
    const char* fam[] = {"momentum", "distortion_x", "distortion_y", "incompatibility"};
    json res = json::object();
    for (int i = 0; i < 4; ++i)
        res[fam[i]] = to_json(m.residuals[i]);
    s["primal_residual"] = res;
    if (k.m_scale > 0)
        s["m_independence"] = {{"scale", k.m_scale}, {"max_field_gap", m.m_gap}};

    const char* names[] = {"v", "U1", "U2", "alpha"};
    std::string csv = "t,x,y,field,value\n";
    for (int kk = 0; kk < g.nt; ++kk)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                for (int f = 0; f < 4; ++f) {
                    if (!k.spec.has_slot(f, i, j))
                        continue;
                    auto pos = k.spec.position(f, i, j);
                    csv += num(g.t(kk)) + "," + num(pos[0]) + "," + num(pos[1]) + "," + names[f] + "," +
                           num(r.primal.at(f, i, j, kk)) + "\n";
                }
    write_file(dir / "fields.csv", csv);
    write_convergence(dir, r.cp.trace);
    o.exit_code = r.cp.converged ? exit_ok : exit_not_converged;
    return o;
}

// ---- fdmpoint ----

inline Outcome run_fdmpoint(const FdmStudy& f, const std::filesystem::path& dir)
{
    Outcome o;
    auto samples = run_fdm_study(f);
    json report = {{"coeffs", f.coeffs}, {"cap", f.cap}, {"velocity", f.velocity}, {"seed", f.seed}};
    json list = json::array();
    bool all_ok = true, all_monotone = true;
    double worst = 0;
    std::string csv = "index,sample,coeff,newton_iterations,residual\n";
    int idx = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const FdmSample& smp = samples[i];
        json e = {{"sample", i}, {"monotone", smp.monotone}};
        json res = json::array(), its = json::array();
        for (std::size_t j = 0; j < smp.solves.size(); ++j) {
            res.push_back(smp.solves[j].residual);
            its.push_back(smp.solves[j].iterations);
            worst = std::max(worst, smp.solves[j].residual);
            csv += std::to_string(idx++) + "," + std::to_string(i) + "," + num(f.coeffs[j]) + "," +
                   std::to_string(smp.solves[j].iterations) + "," + num(smp.solves[j].residual) + "\n";
            if (!smp.solves[j].warning.empty())
                e["warning"] = smp.solves[j].warning;
        }
        e["residuals"] = res;
        e["newton_iterations"] = its;
        e["distance_from_base"] = smp.distances;
        if (!smp.error.empty()) {
            e["error"] = smp.error;
            all_ok = false;
        }
        all_monotone = all_monotone && smp.monotone;
        list.push_back(e);
    }
    report["samples"] = list;
    write_json(dir / "report.json", report);
    write_file(dir / "convergence.csv", csv);
    o.summary = {{"converged", all_ok},           {"n_samples", f.n_samples}, {"max_residual", worst},
                 {"all_monotone", all_monotone},  {"coeffs", f.coeffs}};
    o.exit_code = all_ok ? exit_ok : exit_not_converged;
    return o;
}

} // namespace dualact::app
