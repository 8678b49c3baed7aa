#pragma once

// Full-order multi-governor system frequency response simulator.
// One reheat governor-turbine cascade per surviving unit feeds a single
// aggregated swing block; integrated with fixed-step classical RK4 after a
// step generation loss at t = 0.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid_model.hpp"

namespace freqopf {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Governor branch G(s) = (k/r) * (1+s t2)/(1+s t1) * 1/(1+s t3)
//                      * (1+s f_hp t5)/((1+s t4)(1+s t5)),
// driven by -delta_f (pu), output scaled to system base.
struct GovernorBranch {
    GovernorParams gv;
    double gain = 0;   // k/r
    double scale = 0;  // mva_base / p_base
    int n_states = 4;  // 3 when t4 == 0 (lag dropped)

    // states: x[0] t1-lag, x[1] t3-lag, [x[2] t4-lag,] x[last] t5-lag
    double output(const double* x, double u) const {
        double y1 = (gv.t2 / gv.t1) * u + (1.0 - gv.t2 / gv.t1) * x[0];
        double y2 = x[1];
        double y3 = (n_states == 4) ? x[2] : y2;
        double x5 = x[n_states - 1];
        double y4 = gv.f_hp * y3 + (1.0 - gv.f_hp) * x5;
        return gain * scale * y4;
    }

    void deriv(const double* x, double u, double* dx) const {
        double y1 = (gv.t2 / gv.t1) * u + (1.0 - gv.t2 / gv.t1) * x[0];
        dx[0] = (u - x[0]) / gv.t1;
        dx[1] = (y1 - x[1]) / gv.t3;
        double y2 = x[1];
        double y3;
        if (n_states == 4) {
            dx[2] = (y2 - x[2]) / gv.t4;
            y3 = x[2];
        } else {
            y3 = y2;
        }
        dx[n_states - 1] = (y3 - x[n_states - 1]) / gv.t5;
    }
};

struct SfrSystem {
    std::vector<GovernorBranch> branches;
    double h_sum = 0;     // sum H_i * mva_i / p_base over surviving units, s
    double damping = 0;   // pu on system base
    double delta_pe = 0;  // step disturbance, pu on system base
    double f0 = 60.0;

    std::size_t state_dim() const {
        std::size_t n = 1;  // swing state delta_f (pu)
        for (const auto& b : branches) n += b.n_states;
        return n;
    }

    // dy/dt for state y = [delta_f_pu, branch states...]; also reports the
    // total mechanical power deviation (pu) if pm_total is non-null.
    void deriv(const double* y, double* dy, double* pm_total = nullptr) const {
        double f = y[0];
        double u = -f;
        double pm = 0;
        std::size_t off = 1;
        for (const auto& b : branches) {
            pm += b.output(y + off, u);
            b.deriv(y + off, u, dy + off);
            off += b.n_states;
        }
        dy[0] = (pm - delta_pe - damping * f) / (2.0 * h_sum);
        if (pm_total) *pm_total = pm;
    }

    // Aggregate governor DC gain sum K_i/R_i * mva_i/p_base (surviving units).
    double r_agg() const {
        double s = 0;
        for (const auto& b : branches) s += b.gain * b.scale;
        return s;
    }
};

struct SfrTrace {
    double dt = 0;
    std::vector<double> t;               // s
    std::vector<double> delta_f;         // Hz
    std::vector<double> delta_pm_total;  // pu on system base
    bool settled = true;
};

struct FrequencyMetrics {
    double rocof_worst = 0;  // Hz/s, signed
    double fn = 0;           // Hz
    double t_nadir = 0;      // s
    double f_ss = 0;         // Hz
};

inline SfrSystem build_full_order(const PowerCase& c,
                                  const std::map<std::string, double>& dispatch) {
    SfrSystem sys;
    sys.f0 = c.f0;
    sys.damping = c.damping_d;
    for (const auto& g : c.generators) {
        auto it = dispatch.find(g.id);
        if (it == dispatch.end())
            throw SimError("build_full_order: missing dispatch entry for " + g.id);
        if (it->second < -1e-9)
            throw SimError("build_full_order: negative dispatch for " + g.id);
        if (g.id == c.contingency_unit) {
            sys.delta_pe = it->second / c.p_base;
            continue;  // tripped unit: no inertia, no governor branch
        }
        GovernorBranch b;
        b.gv = g.governor;
        b.gain = g.governor.k / g.governor.r;
        b.scale = g.mva_base / c.p_base;
        b.n_states = (g.governor.t4 > 0) ? 4 : 3;
        sys.branches.push_back(b);
        sys.h_sum += g.inertia_h * g.mva_base / c.p_base;
    }
    if (sys.h_sum <= 0) throw SimError("build_full_order: no surviving inertia");
    return sys;
}

inline SfrTrace simulate(const SfrSystem& sys, double duration = 30.0, double dt = 1e-3) {
    if (!(dt > 0)) throw SimError("simulate: dt must be positive");
    if (!(duration >= dt)) throw SimError("simulate: duration must cover at least one step");
    std::size_t n_steps = static_cast<std::size_t>(std::llround(duration / dt));
    std::size_t dim = sys.state_dim();

    std::vector<double> y(dim, 0.0), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

    SfrTrace tr;
    tr.dt = dt;
    tr.t.reserve(n_steps + 1);
    tr.delta_f.reserve(n_steps + 1);
    tr.delta_pm_total.reserve(n_steps + 1);

    double pm0 = 0;
    tr.t.push_back(0.0);
    tr.delta_f.push_back(0.0);
    tr.delta_pm_total.push_back(pm0);

    for (std::size_t s = 0; s < n_steps; ++s) {
        sys.deriv(y.data(), k1.data());
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
        sys.deriv(tmp.data(), k2.data());
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
        sys.deriv(tmp.data(), k3.data());
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + dt * k3[i];
        sys.deriv(tmp.data(), k4.data());
        for (std::size_t i = 0; i < dim; ++i)
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        if (!std::isfinite(y[0]))
            throw SimError("simulate: non-finite state at step " + std::to_string(s + 1));

        double pm = 0;
        sys.deriv(y.data(), k1.data(), &pm);  // reuse k1 as scratch
        tr.t.push_back(static_cast<double>(s + 1) * dt);
        tr.delta_f.push_back(sys.f0 * y[0]);
        tr.delta_pm_total.push_back(pm);
    }

    // Settled check over the final 10% of the horizon.
    std::size_t tail = tr.delta_f.size() / 10;
    for (std::size_t i = tr.delta_f.size() - tail; i + 1 < tr.delta_f.size(); ++i) {
        if (std::abs(tr.delta_f[i + 1] - tr.delta_f[i]) / dt > 1e-4) {
            tr.settled = false;
            break;
        }
    }
    return tr;
}

inline std::vector<double> coi_frequency(const std::vector<std::vector<double>>& traces,
                                         const std::vector<double>& inertias) {
    if (traces.empty()) throw SimError("coi_frequency: empty input");
    if (traces.size() != inertias.size())
        throw SimError("coi_frequency: traces/inertias length mismatch");
    std::size_t n = traces[0].size();
    double h_total = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        if (traces[i].size() != n) throw SimError("coi_frequency: trace length mismatch");
        if (!(inertias[i] > 0)) throw SimError("coi_frequency: inertias must be positive");
        h_total += inertias[i];
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < traces.size(); ++i)
        for (std::size_t s = 0; s < n; ++s) out[s] += traces[i][s] * inertias[i] / h_total;
    return out;
}

inline FrequencyMetrics compute_metrics(const SfrTrace& tr, double f0, double window = 0.167) {
    if (tr.delta_f.empty()) throw SimError("compute_metrics: empty trace");
    if (window < tr.dt) throw SimError("compute_metrics: window shorter than dt");
    std::size_t k = static_cast<std::size_t>(std::llround(window / tr.dt));
    if (k == 0) k = 1;
    if (k >= tr.delta_f.size())
        throw SimError("compute_metrics: trace shorter than RoCoF window");

    FrequencyMetrics m;
    double w = static_cast<double>(k) * tr.dt;
    double worst = 0;
    for (std::size_t i = 0; i + k < tr.delta_f.size(); ++i) {
        double slope = (tr.delta_f[i + k] - tr.delta_f[i]) / w;
        if (slope < worst) worst = slope;
    }
    m.rocof_worst = worst;

    std::size_t imin = 0;
    for (std::size_t i = 1; i < tr.delta_f.size(); ++i)
        if (tr.delta_f[i] < tr.delta_f[imin]) imin = i;
    m.fn = f0 + tr.delta_f[imin];
    m.t_nadir = tr.t[imin];

    std::size_t tail = std::max<std::size_t>(1, tr.delta_f.size() / 20);
    double s = 0;
    for (std::size_t i = tr.delta_f.size() - tail; i < tr.delta_f.size(); ++i) s += tr.delta_f[i];
    m.f_ss = f0 + s / static_cast<double>(tail);
    return m;
}

}  // namespace freqopf
