#pragma once

// Bundled numerical optimization core: convex piecewise-linear cost
// segments, a dense bounded-variable two-phase primal simplex, and
// best-first branch-and-bound over binary variables.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace freqopf::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LE, GE, EQ };
enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

inline const char* status_name(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration-limit";
        case Status::NodeLimit: return "node-limit";
    }
    return "?";
}

struct Variable {
    std::string name;
    double lb = 0, ub = kInf;
    double obj = 0;
};

struct Row {
    std::vector<std::pair<int, double>> coeffs;
    Sense sense = Sense::LE;
    double rhs = 0;
};

struct LpProblem {
    std::vector<Variable> vars;
    std::vector<Row> rows;
    double obj_constant = 0;

    int add_var(std::string name, double lb, double ub, double obj = 0) {
        if (lb > ub) throw std::invalid_argument("add_var: lb > ub for " + name);
        vars.push_back({std::move(name), lb, ub, obj});
        return static_cast<int>(vars.size()) - 1;
    }

    void add_row(std::vector<std::pair<int, double>> coeffs, Sense sense, double rhs) {
        for (auto& [j, v] : coeffs) {
            if (j < 0 || j >= static_cast<int>(vars.size()))
                throw std::invalid_argument("add_row: undeclared variable index");
            if (!std::isfinite(v)) throw std::invalid_argument("add_row: non-finite coefficient");
        }
        rows.push_back({std::move(coeffs), sense, rhs});
    }
};

struct MilpProblem {
    LpProblem lp;
    std::vector<int> binaries;  // variable ids with bounds within [0,1]
};

struct Solution {
    Status status = Status::Infeasible;
    std::vector<double> values;
    double objective = 0;
    std::vector<double> duals;  // per-row simplex multipliers (LP only)
    int iterations = 0;
    long nodes = 0;
    double gap = 0;
    double wall_ms = 0;
    long bound_monotonicity_violations = 0;
};

// --- piecewise-linear convex cost -----------------------------------------

struct PwlCost {
    std::vector<double> breakpoints;  // size segments+1, equal width
    std::vector<double> slopes;       // size segments, nondecreasing
    double max_gap = 0;               // worst under-approximation, $/h
};

inline PwlCost piecewise_cost(double c2, double c1, double /*c0*/, double p_min,
                              double p_max, int segments) {
    if (c2 < 0) throw std::invalid_argument("piecewise_cost: c2 must be nonnegative");
    if (segments < 1) throw std::invalid_argument("piecewise_cost: segments must be >= 1");
    if (p_min > p_max) throw std::invalid_argument("piecewise_cost: invalid range");
    if (c2 == 0) segments = 1;
    PwlCost pw;
    double w = (p_max - p_min) / segments;
    for (int s = 0; s <= segments; ++s) pw.breakpoints.push_back(p_min + w * s);
    pw.breakpoints.back() = p_max;
    for (int s = 0; s < segments; ++s)
        pw.slopes.push_back(c2 * (pw.breakpoints[s] + pw.breakpoints[s + 1]) + c1);
    pw.max_gap = c2 * w * w / 4.0;
    return pw;
}

// --- simplex ---------------------------------------------------------------

namespace detail {

constexpr double kPivTol = 1e-9;
constexpr double kDjTol = 1e-9;
constexpr double kFeasTol = 1e-7;

class Simplex {
  public:
    Simplex(const LpProblem& p, const std::vector<double>* lb_over,
            const std::vector<double>* ub_over)
        : prob_(p), m_(static_cast<int>(p.rows.size())) {
        int n = static_cast<int>(p.vars.size());
        lb_.resize(n + m_);
        ub_.resize(n + m_);
        cost_.assign(n + m_, 0.0);
        for (int j = 0; j < n; ++j) {
            lb_[j] = lb_over ? (*lb_over)[j] : p.vars[j].lb;
            ub_[j] = ub_over ? (*ub_over)[j] : p.vars[j].ub;
            cost_[j] = p.vars[j].obj;
        }
        // slack per row: a.x + s = rhs
        for (int i = 0; i < m_; ++i) {
            int j = n + i;
            switch (p.rows[i].sense) {
                case Sense::LE: lb_[j] = 0; ub_[j] = kInf; break;
                case Sense::GE: lb_[j] = -kInf; ub_[j] = 0; break;
                case Sense::EQ: lb_[j] = 0; ub_[j] = 0; break;
            }
        }
        n_real_ = n + m_;
    }

    Solution solve(int iter_limit = 50000) {
        Solution sol;
        for (int j = 0; j < n_real_; ++j)
            if (lb_[j] > ub_[j] + kFeasTol) {
                sol.status = Status::Infeasible;
                return sol;
            }

        init_tableau();
        if (n_art_ > 0) {
            // Phase 1: minimize sum of artificials.
            std::vector<double> saved_cost = cost_;
            std::fill(cost_.begin(), cost_.begin() + n_real_, 0.0);
            for (int j = n_real_; j < ncols_; ++j) cost_[j] = 1.0;
            rebuild_reduced_costs();
            Status st = iterate(iter_limit);
            sol.iterations = iters_;
            if (st == Status::IterationLimit) {
                sol.status = st;
                return sol;
            }
            if (objective_value() > 1e-6) {
                sol.status = Status::Infeasible;
                return sol;
            }
            drop_artificials();
            cost_ = saved_cost;
            cost_.resize(ncols_, 0.0);
        }

        // Phase 2.
        rebuild_reduced_costs();
        Status st = iterate(iter_limit);
        sol.iterations = iters_;
        if (st != Status::Optimal) {
            sol.status = st;
            return sol;
        }
        sol.status = Status::Optimal;
        int n = static_cast<int>(prob_.vars.size());
        sol.values.assign(xval_.begin(), xval_.begin() + n);
        sol.objective = prob_.obj_constant;
        for (int j = 0; j < n; ++j) sol.objective += prob_.vars[j].obj * xval_[j];
        sol.duals.resize(m_);
        for (int i = 0; i < m_; ++i) sol.duals[i] = -d_[n + i];
        return sol;
    }

  private:
    enum class St : std::uint8_t { Basic, AtLower, AtUpper, Free };

    const LpProblem& prob_;
    int m_;
    int n_real_ = 0;  // structural + slack columns
    int ncols_ = 0;   // including artificials
    int n_art_ = 0;
    std::vector<double> lb_, ub_, cost_, xval_, d_;
    std::vector<std::vector<double>> T_;
    std::vector<int> basis_;
    std::vector<St> state_;
    std::vector<bool> blocked_;
    int iters_ = 0;

    double nonbasic_start(int j) const {
        if (std::isfinite(lb_[j])) return lb_[j];
        if (std::isfinite(ub_[j])) return ub_[j];
        return 0.0;
    }

    // Initial basis: each row's slack if it can start feasible at the
    // nonbasic point, otherwise an artificial column (phase 1 drives those
    // to zero). Artificials are allocated only where needed.
    void init_tableau() {
        int n = static_cast<int>(prob_.vars.size());
        xval_.assign(n_real_, 0.0);
        state_.assign(n_real_, St::AtLower);
        for (int j = 0; j < n_real_; ++j) {
            if (std::isfinite(lb_[j])) {
                state_[j] = St::AtLower;
                xval_[j] = lb_[j];
            } else if (std::isfinite(ub_[j])) {
                state_[j] = St::AtUpper;
                xval_[j] = ub_[j];
            } else {
                state_[j] = St::Free;
                xval_[j] = 0.0;
            }
        }
        basis_.resize(m_);
        std::vector<double> resid(m_);
        std::vector<int> art_rows;
        for (int i = 0; i < m_; ++i) {
            double r = prob_.rows[i].rhs;
            for (const auto& [j, v] : prob_.rows[i].coeffs) r -= v * xval_[j];
            // slack value would be r (slack starts nonbasic at 0)
            bool slack_ok;
            switch (prob_.rows[i].sense) {
                case Sense::LE: slack_ok = r >= 0; break;
                case Sense::GE: slack_ok = r <= 0; break;
                default: slack_ok = r == 0.0; break;
            }
            resid[i] = r;
            if (!slack_ok) art_rows.push_back(i);
            basis_[i] = slack_ok ? n + i : -1;
        }
        n_art_ = static_cast<int>(art_rows.size());
        ncols_ = n_real_ + n_art_;
        xval_.resize(ncols_, 0.0);
        state_.resize(ncols_, St::AtLower);
        blocked_.assign(ncols_, false);
        T_.assign(m_, std::vector<double>(ncols_, 0.0));
        int na = 0;
        for (int i = 0; i < m_; ++i) {
            for (const auto& [j, v] : prob_.rows[i].coeffs) T_[i][j] += v;
            T_[i][n + i] = 1.0;  // slack
            if (basis_[i] >= 0) {
                // slack basic at the residual value
                state_[n + i] = St::Basic;
                xval_[n + i] = resid[i];
                continue;
            }
            int ja = n_real_ + na++;
            double sgn = (resid[i] >= 0) ? 1.0 : -1.0;
            T_[i][ja] = sgn;
            basis_[i] = ja;
            xval_[ja] = std::abs(resid[i]);
            state_[ja] = St::Basic;
            if (sgn < 0)
                for (int j = 0; j < ncols_; ++j) T_[i][j] = -T_[i][j];
            // after sign flip T_[i][ja] == 1
        }
        lb_.resize(ncols_, 0.0);
        ub_.resize(ncols_, kInf);
        cost_.resize(ncols_, 0.0);
    }

    void rebuild_reduced_costs() {
        d_ = cost_;
        for (int i = 0; i < m_; ++i) {
            double cb = cost_[basis_[i]];
            if (cb == 0.0) continue;
            const auto& row = T_[i];
            for (int j = 0; j < ncols_; ++j) d_[j] -= cb * row[j];
        }
    }

    double objective_value() const {
        double z = 0;
        for (int j = 0; j < ncols_; ++j) z += cost_[j] * xval_[j];
        return z;
    }

    bool eligible(int j, double& rate) const {
        if (blocked_[j] || state_[j] == St::Basic) return false;
        double dj = d_[j];
        switch (state_[j]) {
            case St::AtLower:
                if (dj < -kDjTol && ub_[j] > lb_[j]) { rate = -dj; return true; }
                return false;
            case St::AtUpper:
                if (dj > kDjTol && ub_[j] > lb_[j]) { rate = dj; return true; }
                return false;
            case St::Free:
                if (std::abs(dj) > kDjTol) { rate = std::abs(dj); return true; }
                return false;
            default: return false;
        }
    }

    Status iterate(int iter_limit) {
        int stalled = 0;
        bool bland = false;
        double last_z = objective_value();
        for (;; ++iters_) {
            if (iters_ >= iter_limit) return Status::IterationLimit;

            int je = -1;
            double best = 0;
            for (int j = 0; j < ncols_; ++j) {
                double rate;
                if (!eligible(j, rate)) continue;
                if (bland) { je = j; break; }
                if (rate > best + 1e-15) { best = rate; je = j; }
            }
            if (je < 0) return Status::Optimal;

            double sigma;
            if (state_[je] == St::AtLower) sigma = 1.0;
            else if (state_[je] == St::AtUpper) sigma = -1.0;
            else sigma = (d_[je] < 0) ? 1.0 : -1.0;

            // ratio test
            double delta = kInf;
            int rlv = -1;
            double lv_bound = 0;
            bool lv_at_lower = false;
            if (state_[je] != St::Free && std::isfinite(ub_[je]) && std::isfinite(lb_[je]))
                delta = ub_[je] - lb_[je];  // bound flip
            for (int i = 0; i < m_; ++i) {
                double coef = sigma * T_[i][je];
                if (std::abs(coef) < kPivTol) continue;
                int jb = basis_[i];
                double cand;
                double bound;
                bool at_lower;
                if (coef > 0) {  // basic decreases toward lb
                    if (!std::isfinite(lb_[jb])) continue;
                    cand = (xval_[jb] - lb_[jb]) / coef;
                    bound = lb_[jb];
                    at_lower = true;
                } else {  // basic increases toward ub
                    if (!std::isfinite(ub_[jb])) continue;
                    cand = (xval_[jb] - ub_[jb]) / coef;
                    bound = ub_[jb];
                    at_lower = false;
                }
                if (cand < -1e-12) cand = 0;  // tiny infeasibility from roundoff
                if (cand < delta - 1e-12 ||
                    (cand < delta + 1e-12 && rlv >= 0 &&
                     std::abs(T_[i][je]) > std::abs(T_[rlv][je]))) {
                    delta = cand;
                    rlv = i;
                    lv_bound = bound;
                    lv_at_lower = at_lower;
                }
            }
            if (!std::isfinite(delta)) return Status::Unbounded;
            if (delta < 0) delta = 0;

            // apply step
            for (int i = 0; i < m_; ++i) {
                double coef = sigma * T_[i][je];
                if (coef != 0.0) xval_[basis_[i]] -= coef * delta;
            }
            double enter_val = xval_[je] + sigma * delta;

            if (rlv < 0) {
                // bound flip
                xval_[je] = enter_val;
                state_[je] = (sigma > 0) ? St::AtUpper : St::AtLower;
            } else {
                int jl = basis_[rlv];
                xval_[jl] = lv_bound;
                state_[jl] = lv_at_lower ? St::AtLower : St::AtUpper;
                if (!std::isfinite(lv_bound)) state_[jl] = St::Free, xval_[jl] = 0;
                xval_[je] = enter_val;
                state_[je] = St::Basic;
                basis_[rlv] = je;
                pivot(rlv, je);
            }

            double z = objective_value();
            if (z < last_z - 1e-12) {
                stalled = 0;
                bland = false;
                last_z = z;
            } else if (++stalled > 200) {
                bland = true;  // anti-cycling fallback
            }
        }
    }

    void pivot(int r, int jc) {
        auto& prow = T_[r];
        double piv = prow[jc];
        double inv = 1.0 / piv;
        for (int j = 0; j < ncols_; ++j) prow[j] *= inv;
        prow[jc] = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double f = T_[i][jc];
            if (f == 0.0) continue;
            auto& row = T_[i];
            for (int j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
            row[jc] = 0.0;
        }
        double f = d_[jc];
        if (f != 0.0) {
            for (int j = 0; j < ncols_; ++j) d_[j] -= f * prow[j];
            d_[jc] = 0.0;
        }
    }

    void drop_artificials() {
        for (int i = 0; i < m_; ++i) {
            int jb = basis_[i];
            if (jb < n_real_) continue;
            // basic artificial at ~0: pivot it out if any real column works
            int target = -1;
            for (int j = 0; j < n_real_; ++j) {
                if (state_[j] == St::Basic) continue;
                if (std::abs(T_[i][j]) > 1e-7) { target = j; break; }
            }
            if (target >= 0) {
                state_[jb] = St::AtLower;
                xval_[jb] = 0;
                basis_[i] = target;
                state_[target] = St::Basic;
                // keep xval_[target] (it is at its bound value, row is degenerate)
                pivot(i, target);
            } else {
                ub_[jb] = 0;  // redundant row: pin artificial at zero
            }
        }
        for (int j = n_real_; j < ncols_; ++j) blocked_[j] = true;
    }
};

}  // namespace detail

inline Solution solve_lp(const LpProblem& p, const std::vector<double>* lb_over = nullptr,
                         const std::vector<double>* ub_over = nullptr) {
    auto t0 = std::chrono::steady_clock::now();
    detail::Simplex s(p, lb_over, ub_over);
    Solution sol = s.solve();
    sol.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

// --- branch and bound ------------------------------------------------------

struct MilpConfig {
    double abs_gap = 1e-6;
    double int_tol = 1e-6;
    long node_limit = 200000;
    int hook_period = 64;  // nodes between incumbent-hook invocations (root always)
    // Given an LP-relaxation point, propose 0/1 values for (a subset of) the
    // binaries; a repair LP with those fixed is tried as an incumbent.
    std::function<std::optional<std::vector<std::pair<int, int>>>(const std::vector<double>&)>
        incumbent_hook;
};

inline Solution solve_milp(const MilpProblem& mp, const MilpConfig& cfg = {}) {
    auto t0 = std::chrono::steady_clock::now();
    const LpProblem& p = mp.lp;
    int n = static_cast<int>(p.vars.size());
    for (int j : mp.binaries) {
        if (j < 0 || j >= n) throw std::invalid_argument("solve_milp: bad binary id");
        if (p.vars[j].lb < -1e-9 || p.vars[j].ub > 1.0 + 1e-9)
            throw std::invalid_argument("solve_milp: binary bounds outside [0,1]: " +
                                        p.vars[j].name);
    }

    std::vector<double> base_lb(n), base_ub(n);
    for (int j = 0; j < n; ++j) {
        base_lb[j] = p.vars[j].lb;
        base_ub[j] = p.vars[j].ub;
    }

    struct Node {
        double bound;
        int depth;
        long seq;
        std::vector<std::pair<int, int>> fixings;
    };
    struct NodeCmp {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound > b.bound;  // best-first
            if (a.depth != b.depth) return a.depth < b.depth;  // deeper first
            return a.seq > b.seq;
        }
    };

    Solution out;
    out.objective = kInf;
    bool have_incumbent = false;
    long total_iters = 0;
    long mono_viol = 0;

    auto solve_node = [&](const std::vector<std::pair<int, int>>& fixings) {
        std::vector<double> lb = base_lb, ub = base_ub;
        for (auto [j, v] : fixings) {
            lb[j] = v;
            ub[j] = v;
        }
        Solution s = solve_lp(p, &lb, &ub);
        total_iters += s.iterations;
        return s;
    };

    auto try_hook = [&](const std::vector<double>& relax,
                        const std::vector<std::pair<int, int>>& node_fix) {
        if (!cfg.incumbent_hook) return;
        auto prop = cfg.incumbent_hook(relax);
        if (!prop) return;
        std::vector<std::pair<int, int>> fix = node_fix;
        // node fixings win over hook proposals
        for (auto [j, v] : *prop) {
            bool present = false;
            for (auto [j2, v2] : fix)
                if (j2 == j) { present = true; break; }
            if (!present) fix.emplace_back(j, v);
        }
        Solution s = solve_node(fix);
        if (s.status != Status::Optimal) return;
        for (int j : mp.binaries) {
            double v = s.values[j];
            if (std::abs(v - std::round(v)) > cfg.int_tol) return;
        }
        if (s.objective < out.objective - 1e-12) {
            out.objective = s.objective;
            out.values = s.values;
            have_incumbent = true;
        }
    };

    std::priority_queue<Node, std::vector<Node>, NodeCmp> heap;
    heap.push({-kInf, 0, 0, {}});
    long seq = 1;
    bool any_feasible_lp = false;
    bool limit_hit = false;
    double best_open_bound = -kInf;

    while (!heap.empty()) {
        if (out.nodes >= cfg.node_limit) {
            limit_hit = true;
            break;
        }
        Node nd = heap.top();
        heap.pop();
        best_open_bound = nd.bound;
        if (have_incumbent && nd.bound >= out.objective - cfg.abs_gap) break;  // proven
        ++out.nodes;

        Solution s = solve_node(nd.fixings);
        if (s.status == Status::Infeasible) continue;
        if (s.status == Status::Unbounded) {
            out.status = Status::Unbounded;
            out.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            return out;
        }
        if (s.status != Status::Optimal) { limit_hit = true; break; }
        if (std::isfinite(nd.bound) && s.objective < nd.bound - 1e-6) ++mono_viol;
        if (have_incumbent && s.objective >= out.objective - cfg.abs_gap) continue;

        // most-fractional branching
        int jb = -1;
        double best_frac = cfg.int_tol;
        for (int j : mp.binaries) {
            double v = s.values[j];
            double frac = std::min(v, 1.0 - v);
            if (frac > best_frac + 1e-12) {
                best_frac = frac;
                jb = j;
            }
        }
        if (jb < 0) {
            // integral
            if (s.objective < out.objective - 1e-12) {
                out.objective = s.objective;
                out.values = s.values;
                have_incumbent = true;
            }
            any_feasible_lp = true;
            continue;
        }
        any_feasible_lp = true;
        if (out.nodes == 1 || (cfg.hook_period > 0 && out.nodes % cfg.hook_period == 0))
            try_hook(s.values, nd.fixings);

        for (int v = 0; v <= 1; ++v) {
            Node child{s.objective, nd.depth + 1, seq++, nd.fixings};
            child.fixings.emplace_back(jb, v);
            if (!(have_incumbent && child.bound >= out.objective - cfg.abs_gap))
                heap.push(child);
        }
    }

    out.iterations = static_cast<int>(std::min<long>(total_iters, INT32_MAX));
    out.bound_monotonicity_violations = mono_viol;
    if (have_incumbent) {
        double lb = heap.empty() && !limit_hit ? out.objective : best_open_bound;
        out.gap = std::max(0.0, out.objective - lb);
        out.status = limit_hit && out.gap > cfg.abs_gap ? Status::NodeLimit : Status::Optimal;
    } else {
        out.status = limit_hit ? Status::NodeLimit
                               : (any_feasible_lp ? Status::NodeLimit : Status::Infeasible);
        if (!limit_hit && !any_feasible_lp) out.status = Status::Infeasible;
    }
    out.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// --- LP-format text --------------------------------------------------------

inline std::string dump_lp_format(const MilpProblem& mp) {
    const LpProblem& p = mp.lp;
    std::ostringstream os;
    os.precision(17);
    os << "Minimize\n obj:";
    for (std::size_t j = 0; j < p.vars.size(); ++j)
        if (p.vars[j].obj != 0)
            os << (p.vars[j].obj >= 0 ? " + " : " - ") << std::abs(p.vars[j].obj) << " "
               << p.vars[j].name;
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        os << " c" << i << ":";
        for (const auto& [j, v] : p.rows[i].coeffs)
            os << (v >= 0 ? " + " : " - ") << std::abs(v) << " " << p.vars[j].name;
        const char* rel = p.rows[i].sense == Sense::LE   ? " <= "
                          : p.rows[i].sense == Sense::GE ? " >= "
                                                         : " = ";
        os << rel << p.rows[i].rhs << "\n";
    }
    os << "Bounds\n";
    for (const auto& v : p.vars) {
        if (std::isfinite(v.lb) && std::isfinite(v.ub))
            os << " " << v.lb << " <= " << v.name << " <= " << v.ub << "\n";
        else if (std::isfinite(v.lb))
            os << " " << v.name << " >= " << v.lb << "\n";
        else if (std::isfinite(v.ub))
            os << " -inf <= " << v.name << " <= " << v.ub << "\n";
        else
            os << " " << v.name << " free\n";
    }
    if (!mp.binaries.empty()) {
        os << "Binary\n";
        for (int j : mp.binaries) os << " " << p.vars[j].name << "\n";
    }
    os << "End\n";
    return os.str();
}

}  // namespace freqopf::lp
