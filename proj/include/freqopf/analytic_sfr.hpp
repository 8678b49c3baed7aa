#pragma once

// Low-order aggregated SFR analytics: capacity-weighted parameter
// aggregation, worst-RoCoF formula, nadir time/depth, and the closed-form
// step response of the aggregated second-order model.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "grid_model.hpp"

namespace freqopf {

struct AnalyticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LowOrderParams {
    double h_sys = 0;    // s, capacity-weighted inertia
    double d = 0;        // pu damping
    double f_agg = 0;    // aggregated K*F/R
    double r_agg = 0;    // aggregated K/R
    double t_agg = 0;    // s, capacity-weighted reheat time constant
    double omega_n = 0;  // rad/s
    double omega_d = 0;  // rad/s
    double xi = 0;       // damping ratio
    double phi = 0;      // rad
    double f0 = 60.0;
    bool oscillatory = true;  // false when xi >= 1 (formulas undefined)
};

inline LowOrderParams aggregate_low_order(const PowerCase& c,
                                          bool exclude_contingency = true) {
    LowOrderParams p;
    p.d = c.damping_d;
    p.f0 = c.f0;
    double cap = 0;
    for (const auto& g : c.generators) {
        if (exclude_contingency && g.id == c.contingency_unit) continue;
        cap += g.p_max;
        p.h_sys += g.inertia_h * g.p_max;
        p.t_agg += g.governor.t5 * g.p_max;
        p.f_agg += g.governor.k * g.governor.f_hp / g.governor.r * g.p_max;
        p.r_agg += g.governor.k / g.governor.r * g.p_max;
    }
    if (cap <= 0) throw AnalyticError("aggregate_low_order: empty generator set");
    p.h_sys /= cap;
    p.t_agg /= cap;
    p.f_agg /= cap;
    p.r_agg /= cap;

    p.omega_n = std::sqrt((p.d + p.r_agg) / (2.0 * p.h_sys * p.t_agg));
    p.xi = (2.0 * p.h_sys + p.t_agg * (p.d + p.f_agg)) /
           (2.0 * std::sqrt(2.0 * p.h_sys * p.t_agg * (p.d + p.r_agg)));
    if (p.xi >= 1.0) {
        p.oscillatory = false;
        p.omega_d = 0;
        p.phi = 0;
    } else {
        p.omega_d = p.omega_n * std::sqrt(1.0 - p.xi * p.xi);
        p.phi = std::asin(std::sqrt(1.0 - p.xi * p.xi));
    }
    return p;
}

// Worst instantaneous RoCoF after tripping p_d MW (swing equation,
// surviving inertia only). Negative for loss of generation.
inline double worst_rocof(const PowerCase& c, double p_d) {
    if (p_d < 0) throw AnalyticError("worst_rocof: p_d must be nonnegative");
    double h_mva = 0;
    for (const auto& g : c.generators)
        if (g.id != c.contingency_unit) h_mva += g.inertia_h * g.mva_base;
    if (h_mva <= 0) throw AnalyticError("worst_rocof: zero surviving inertia");
    // -f0 * (p_d/p_base) / (2 * sum H_i mva_i / p_base); p_base cancels.
    return -c.f0 * p_d / (2.0 * h_mva);
}

// Time of the frequency minimum after a step loss. The tan branch is chosen
// so the result is positive. Note: the denominator uses xi*omega_n*t_agg,
// the stationary condition of the aggregated second-order step response.
inline double nadir_time(const LowOrderParams& p) {
    if (!p.oscillatory || !(p.xi > 0) || !(p.xi < 1))
        throw AnalyticError("nadir_time: damping ratio out of (0,1)");
    double a = std::atan(p.omega_d * p.t_agg / (p.xi * p.omega_n * p.t_agg - 1.0));
    if (a < 0) a += std::numbers::pi;
    return a / p.omega_d;
}

// Frequency deviation (Hz, negative) at the nadir for a step loss of
// delta_p_e (pu). Linear in delta_p_e.
inline double nadir_deviation(const LowOrderParams& p, double delta_p_e) {
    if (delta_p_e < 0) throw AnalyticError("nadir_deviation: delta_p_e must be nonnegative");
    if (p.r_agg <= p.f_agg)
        throw AnalyticError("nadir_deviation: r_agg <= f_agg, radical undefined");
    double tn = nadir_time(p);
    double env = std::sqrt(p.t_agg * (p.r_agg - p.f_agg) / (2.0 * p.h_sys));
    return -p.f0 * delta_p_e / (p.r_agg + p.d) *
           (1.0 + std::exp(-p.xi * p.omega_n * tn) * env);
}

// Exact step response of the aggregated model
//   dF(s) = -dPe/(D+R) * (1 + T s) wn^2 / (s (s^2 + 2 xi wn s + wn^2))
// evaluated by residue at the complex pole pair. Returns Hz.
inline double time_response(const LowOrderParams& p, double delta_p_e, double t) {
    if (t < 0) throw AnalyticError("time_response: t must be nonnegative");
    if (!p.oscillatory) throw AnalyticError("time_response: non-oscillatory parameters");
    std::complex<double> pole(-p.xi * p.omega_n, p.omega_d);
    std::complex<double> res = (1.0 + p.t_agg * pole) * (p.omega_n * p.omega_n) /
                               (pole * (pole - std::conj(pole)));
    double y = 1.0 + 2.0 * std::real(res * std::exp(pole * t));
    return -p.f0 * delta_p_e / (p.r_agg + p.d) * y;
}

}  // namespace freqopf
