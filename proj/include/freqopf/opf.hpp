#pragma once

// The three dispatch formulations: T-OPF (DC optimal power flow with
// piecewise-linear costs), L-FCOPF (adds linear RoCoF and nadir rows),
// DNN-FCOPF (adds the exact MILP encoding of the trained predictor), plus
// closed-loop verification against the full-order simulator.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "analytic_sfr.hpp"
#include "grid_model.hpp"
#include "lp_solver.hpp"
#include "milp_encode.hpp"
#include "neural.hpp"
#include "sfr_sim.hpp"

namespace freqopf {

struct OpfError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OpfOptions {
    int cost_segments = 8;
    double tie_eps = 1e-6;  // secondary objective weight for identical units
};

// Feature layout shared by dataset generation and the embedded network:
// generator MW (case order), load MW (bus order), contingency one-hot
// (generator case order).
inline std::vector<std::string> feature_names(const PowerCase& c) {
    std::vector<std::string> names;
    for (const auto& g : c.generators) names.push_back("gen_" + g.id);
    for (const auto& [bus, mw] : c.loads) names.push_back("load_" + bus);
    for (const auto& g : c.generators) names.push_back("ctg_" + g.id);
    return names;
}

inline std::vector<double> make_features(const PowerCase& c,
                                         const std::map<std::string, double>& dispatch,
                                         const std::string& contingency) {
    std::vector<double> x;
    for (const auto& g : c.generators) {
        auto it = dispatch.find(g.id);
        if (it == dispatch.end()) throw OpfError("make_features: missing dispatch for " + g.id);
        x.push_back(it->second);
    }
    for (const auto& [bus, mw] : c.loads) x.push_back(mw);
    for (const auto& g : c.generators) x.push_back(g.id == contingency ? 1.0 : 0.0);
    return x;
}

struct DispatchSolution {
    std::string variant;
    std::map<std::string, double> dispatch_mw;
    std::map<std::string, double> angle_rad;
    std::map<std::string, double> flow_mw;
    double cost = 0;  // $/h, piecewise-linear objective without tie-break term
    std::optional<double> pred_rocof, pred_fn;
    lp::Status status = lp::Status::Infeasible;
    long nodes = 0;
    int iterations = 0;
    double solve_ms = 0;
};

struct OpfModel {
    std::string variant;
    PowerCase c;
    lp::MilpProblem prob;
    std::vector<int> p_idx;                 // per generator (case order)
    std::vector<int> theta_idx;             // per bus
    std::vector<int> flow_idx;              // per line
    std::vector<lp::PwlCost> pwl;           // per generator
    std::vector<double> cost_const;         // per generator, value at p_min
    // L-FCOPF prediction coefficients (rocof = a*P_d, fn = f0 + b*P_d)
    std::optional<double> l_rocof_coeff, l_fn_coeff;
    // DNN embedding
    std::optional<MlpParams> folded;
    int rocof_var = -1, fn_var = -1;
    std::vector<std::pair<std::pair<int, int>, int>> neuron_bin_global;  // (layer,neuron)->var
    int contingency_gen_pos = -1;  // index into c.generators
};

inline double pwl_value(const lp::PwlCost& pw, double base_const, double p) {
    double v = base_const;
    for (std::size_t s = 0; s < pw.slopes.size(); ++s) {
        double lo = pw.breakpoints[s], hi = pw.breakpoints[s + 1];
        if (p <= lo) break;
        v += pw.slopes[s] * (std::min(p, hi) - lo);
    }
    return v;
}

inline OpfModel build_topf(const PowerCase& c, const OpfOptions& opt = {}) {
    OpfModel m;
    m.variant = "T-OPF";
    m.c = c;
    lp::LpProblem& p = m.prob.lp;

    for (std::size_t gi = 0; gi < c.generators.size(); ++gi) {
        const auto& g = c.generators[gi];
        if (g.id == c.contingency_unit) m.contingency_gen_pos = static_cast<int>(gi);
        m.p_idx.push_back(p.add_var("P_" + g.id, g.p_min, g.p_max, 0.0));
        m.pwl.push_back(lp::piecewise_cost(g.c2, g.c1, g.c0, g.p_min, g.p_max,
                                           opt.cost_segments));
        m.cost_const.push_back(g.c2 * g.p_min * g.p_min + g.c1 * g.p_min + g.c0);
        p.obj_constant += m.cost_const.back();
    }
    for (const auto& b : c.buses) {
        double lb = (b == c.reference_bus) ? 0.0 : -50.0;
        double ub = (b == c.reference_bus) ? 0.0 : 50.0;
        m.theta_idx.push_back(p.add_var("theta_" + b, lb, ub, 0.0));
    }
    for (const auto& ln : c.lines)
        m.flow_idx.push_back(
            p.add_var("F_" + ln.id, -ln.thermal_limit, ln.thermal_limit, 0.0));

    // PWL segments: P_i = p_min + sum(seg), objective slope per segment
    for (std::size_t gi = 0; gi < c.generators.size(); ++gi) {
        const auto& pw = m.pwl[gi];
        std::vector<std::pair<int, double>> link{{m.p_idx[gi], 1.0}};
        for (std::size_t s = 0; s < pw.slopes.size(); ++s) {
            double w = pw.breakpoints[s + 1] - pw.breakpoints[s];
            int sv = p.add_var("seg_" + c.generators[gi].id + "_" + std::to_string(s), 0.0,
                               w, pw.slopes[s]);
            link.emplace_back(sv, -1.0);
        }
        p.add_row(std::move(link), lp::Sense::EQ, c.generators[gi].p_min);
    }

    auto bus_pos = [&](const std::string& b) {
        for (std::size_t i = 0; i < c.buses.size(); ++i)
            if (c.buses[i] == b) return static_cast<int>(i);
        throw OpfError("unknown bus " + b);
    };

    // flow definition: F_k = p_base * (theta_p - theta_q) / x_k
    for (std::size_t li = 0; li < c.lines.size(); ++li) {
        const auto& ln = c.lines[li];
        double k = c.p_base / ln.reactance_x;
        p.add_row({{m.flow_idx[li], 1.0},
                   {m.theta_idx[bus_pos(ln.from_bus)], -k},
                   {m.theta_idx[bus_pos(ln.to_bus)], k}},
                  lp::Sense::EQ, 0.0);
    }

    // nodal balance
    for (std::size_t bi = 0; bi < c.buses.size(); ++bi) {
        std::vector<std::pair<int, double>> row;
        for (std::size_t gi = 0; gi < c.generators.size(); ++gi)
            if (c.generators[gi].bus == c.buses[bi]) row.emplace_back(m.p_idx[gi], 1.0);
        for (std::size_t li = 0; li < c.lines.size(); ++li) {
            if (c.lines[li].from_bus == c.buses[bi]) row.emplace_back(m.flow_idx[li], -1.0);
            if (c.lines[li].to_bus == c.buses[bi]) row.emplace_back(m.flow_idx[li], 1.0);
        }
        double load = 0;
        if (auto it = c.loads.find(c.buses[bi]); it != c.loads.end()) load = it->second;
        p.add_row(std::move(row), lp::Sense::EQ, load);
    }

    // Deterministic tie-break: penalize pairwise dispatch differences of
    // identical units at the same bus so the equal split is the unique
    // optimum among cost ties.
    if (opt.tie_eps > 0) {
        for (std::size_t i = 0; i < c.generators.size(); ++i) {
            for (std::size_t j = i + 1; j < c.generators.size(); ++j) {
                Generator a = c.generators[i], b = c.generators[j];
                if (a.bus != b.bus) continue;
                a.id = b.id = "";
                if (!(a == b)) continue;
                int d = p.add_var("tie_" + c.generators[i].id + "_" + c.generators[j].id,
                                  0.0, lp::kInf, opt.tie_eps);
                p.add_row({{d, 1.0}, {m.p_idx[i], -1.0}, {m.p_idx[j], 1.0}}, lp::Sense::GE,
                          0.0);
                p.add_row({{d, 1.0}, {m.p_idx[i], 1.0}, {m.p_idx[j], -1.0}}, lp::Sense::GE,
                          0.0);
                break;  // chain: each unit tied to one later twin is enough
            }
        }
    }
    return m;
}

// Adds Eq-style linear frequency rows for each candidate contingency unit.
// Prediction coefficients are stored for the designated unit.
inline OpfModel build_lfcopf(const PowerCase& c, double r_lmt, double f_lmt,
                             const OpfOptions& opt = {},
                             std::vector<std::string> candidates = {}) {
    OpfModel m = build_topf(c, opt);
    m.variant = "L-FCOPF";
    if (candidates.empty()) candidates.push_back(c.contingency_unit);

    for (const auto& unit : candidates) {
        PowerCase cc = select_contingency(c, unit);
        int pos = -1;
        for (std::size_t gi = 0; gi < c.generators.size(); ++gi)
            if (c.generators[gi].id == unit) pos = static_cast<int>(gi);

        // RoCoF: -f0 P_d / (2 sum H_i mva_i) >= r_lmt
        double a = worst_rocof(cc, 1.0);
        if (std::isfinite(r_lmt))
            m.prob.lp.add_row({{m.p_idx[pos], a}}, lp::Sense::GE, r_lmt);

        // Nadir: f0 + b P_d >= f_lmt, b from the aggregated low-order model
        LowOrderParams lo = aggregate_low_order(cc);
        if (!lo.oscillatory)
            throw OpfError("build_lfcopf: aggregated model not oscillatory (xi >= 1)");
        double b = nadir_deviation(lo, 1.0 / c.p_base);
        if (std::isfinite(f_lmt))
            m.prob.lp.add_row({{m.p_idx[pos], b}}, lp::Sense::GE, f_lmt - c.f0);

        if (unit == c.contingency_unit) {
            m.l_rocof_coeff = a;
            m.l_fn_coeff = b;
        }
    }
    return m;
}

inline OpfModel build_dnnfcopf(const PowerCase& c, const Model& model, double r_lmt,
                               double f_lmt, const OpfOptions& opt = {}) {
    OpfModel m = build_topf(c, opt);
    m.variant = "DNN-FCOPF";
    auto names = feature_names(c);
    if (static_cast<int>(names.size()) != model.spec.input_dim)
        throw OpfError("build_dnnfcopf: model input dimension does not match case");

    m.folded = model.folded();

    std::vector<Feature> feats;
    std::vector<NeuronBounds> in_bounds;
    for (std::size_t gi = 0; gi < c.generators.size(); ++gi) {
        feats.emplace_back(m.p_idx[gi]);
        in_bounds.push_back({c.generators[gi].p_min, c.generators[gi].p_max});
    }
    for (const auto& [bus, mw] : c.loads) {
        feats.emplace_back(mw);
        in_bounds.push_back({mw, mw});
    }
    for (const auto& g : c.generators) {
        double v = (g.id == c.contingency_unit) ? 1.0 : 0.0;
        feats.emplace_back(v);
        in_bounds.push_back({v, v});
    }

    ConstraintBlock blk = encode_network(*m.folded, feats, in_bounds);
    output_limits(blk, r_lmt, f_lmt);
    auto map = blk.append_to(m.prob);
    m.rocof_var = map[blk.rocof_var.id];
    m.fn_var = map[blk.fn_var.id];
    for (const auto& [layer, neuron, local_bin] : blk.neuron_binaries)
        m.neuron_bin_global.push_back({{layer, neuron}, map[local_bin]});
    return m;
}

struct SolveConfig {
    lp::MilpConfig milp;
    bool use_incumbent_hook = true;
};

inline DispatchSolution solve_variant(const OpfModel& m, const SolveConfig& cfg = {}) {
    lp::MilpConfig milp_cfg = cfg.milp;
    if (m.folded && cfg.use_incumbent_hook && !m.neuron_bin_global.empty()) {
        // Feasibility-repair heuristic: read the relaxation dispatch, fix the
        // binaries to the true activation pattern of that dispatch, re-solve.
        milp_cfg.incumbent_hook =
            [&m](const std::vector<double>& relax)
            -> std::optional<std::vector<std::pair<int, int>>> {
            std::map<std::string, double> disp;
            for (std::size_t gi = 0; gi < m.c.generators.size(); ++gi)
                disp[m.c.generators[gi].id] = relax[m.p_idx[gi]];
            auto x = make_features(m.c, disp, m.c.contingency_unit);
            std::vector<std::vector<double>> pre;
            forward(*m.folded, x, &pre);
            std::vector<std::pair<int, int>> fix;
            for (const auto& [ln, var] : m.neuron_bin_global) {
                double z = pre[ln.first - 1][ln.second];
                fix.emplace_back(var, z > 0 ? 1 : 0);
            }
            return fix;
        };
    }

    lp::Solution s = lp::solve_milp(m.prob, milp_cfg);

    DispatchSolution out;
    out.variant = m.variant;
    out.status = s.status;
    out.nodes = s.nodes;
    out.iterations = s.iterations;
    out.solve_ms = s.wall_ms;
    if (s.status != lp::Status::Optimal) return out;

    double cost = 0;
    for (std::size_t gi = 0; gi < m.c.generators.size(); ++gi) {
        double pv = s.values[m.p_idx[gi]];
        out.dispatch_mw[m.c.generators[gi].id] = pv;
        cost += pwl_value(m.pwl[gi], m.cost_const[gi], pv);
    }
    out.cost = cost;
    for (std::size_t bi = 0; bi < m.c.buses.size(); ++bi)
        out.angle_rad[m.c.buses[bi]] = s.values[m.theta_idx[bi]];
    for (std::size_t li = 0; li < m.c.lines.size(); ++li)
        out.flow_mw[m.c.lines[li].id] = s.values[m.flow_idx[li]];

    double p_d = out.dispatch_mw.at(m.c.contingency_unit);
    if (m.l_rocof_coeff) {
        out.pred_rocof = *m.l_rocof_coeff * p_d;
        out.pred_fn = m.c.f0 + *m.l_fn_coeff * p_d;
    }
    if (m.folded) {
        // Predictions recomputed by forward(); solver outputs must agree
        // (checked downstream as the Big-M exactness property).
        auto x = make_features(m.c, out.dispatch_mw, m.c.contingency_unit);
        auto y = forward(*m.folded, x);
        out.pred_rocof = y[0];
        out.pred_fn = y[1];
    }
    return out;
}

// Solver-reported network outputs, for exactness checks against forward().
inline std::pair<double, double> solver_outputs(const OpfModel& m, const lp::Solution& s) {
    if (m.rocof_var < 0) throw OpfError("solver_outputs: not a DNN model");
    return {s.values[m.rocof_var], s.values[m.fn_var]};
}

// Physical-feasibility residuals of a dispatch solution: worst nodal
// imbalance, worst thermal-limit excess, worst generator-limit excess (MW).
struct SolutionResiduals {
    double balance = 0, flow_excess = 0, p_excess = 0;
};

inline SolutionResiduals solution_residuals(const PowerCase& c,
                                            const DispatchSolution& sol) {
    SolutionResiduals r;
    for (const auto& b : c.buses) {
        double net = 0;
        for (const auto& g : c.generators)
            if (g.bus == b) net += sol.dispatch_mw.at(g.id);
        for (const auto& ln : c.lines) {
            if (ln.from_bus == b) net -= sol.flow_mw.at(ln.id);
            if (ln.to_bus == b) net += sol.flow_mw.at(ln.id);
        }
        if (auto it = c.loads.find(b); it != c.loads.end()) net -= it->second;
        r.balance = std::max(r.balance, std::abs(net));
    }
    for (const auto& ln : c.lines)
        r.flow_excess =
            std::max(r.flow_excess, std::abs(sol.flow_mw.at(ln.id)) - ln.thermal_limit);
    for (const auto& g : c.generators) {
        double p = sol.dispatch_mw.at(g.id);
        r.p_excess = std::max({r.p_excess, g.p_min - p, p - g.p_max});
    }
    return r;
}

struct VerifyResult {
    FrequencyMetrics metrics;
    std::optional<double> err_rocof_pct, err_fn_pct;  // |y_d - y_s|/|y_s| * 100
};

inline VerifyResult verify_dispatch(const PowerCase& c, const DispatchSolution& sol,
                                    double duration = 30.0, double dt = 1e-3,
                                    double window = 0.167) {
    SfrSystem sys = build_full_order(c, sol.dispatch_mw);
    SfrTrace tr = simulate(sys, duration, dt);
    VerifyResult r;
    r.metrics = compute_metrics(tr, c.f0, window);
    if (sol.pred_rocof)
        r.err_rocof_pct =
            std::abs(*sol.pred_rocof - r.metrics.rocof_worst) / std::abs(r.metrics.rocof_worst) * 100.0;
    if (sol.pred_fn)
        r.err_fn_pct = std::abs(*sol.pred_fn - r.metrics.fn) / std::abs(r.metrics.fn) * 100.0;
    return r;
}

}  // namespace freqopf
