#pragma once

// Shared test fixtures and independent oracles. The oracles deliberately
// re-derive results through a different code path than the library so that
// agreement is evidence, not tautology.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <freqopf/analytic_sfr.hpp>
#include <freqopf/grid_model.hpp>
#include <freqopf/neural.hpp>

namespace testsup {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline freqopf::PowerCase load_case(const std::string& name) {
    return freqopf::parse_case(read_file(std::string(CASE_DIR) + "/" + name));
}

// --- aggregated second-order model, integrated as an ODE -------------------
//
// State-space oracle for the aggregated step response
//   dF(s)/dPe = -f0/(r+d) * (1 + T s) wn^2 / (s^2 + 2 xi wn s + wn^2) * 1/s
// realized as x1' = x2, x2' = -2 xi wn x2 - wn^2 x1 + u (unit step),
// y = wn^2 (x1 + T x2). RK4, independent of the simulator module.
struct OdeCurve {
    std::vector<double> t;
    std::vector<double> f;  // Hz
};

inline OdeCurve low_order_ode(const freqopf::LowOrderParams& p, double delta_p_e,
                              double duration, double dt) {
    OdeCurve out;
    double x1 = 0, x2 = 0;
    double wn2 = p.omega_n * p.omega_n;
    double a = 2.0 * p.xi * p.omega_n;
    double gain = -p.f0 * delta_p_e / (p.r_agg + p.d);
    auto deriv = [&](double s1, double s2, double& d1, double& d2) {
        d1 = s2;
        d2 = 1.0 - a * s2 - wn2 * s1;
    };
    std::size_t n = static_cast<std::size_t>(std::llround(duration / dt));
    out.t.reserve(n + 1);
    out.f.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        out.t.push_back(static_cast<double>(i) * dt);
        out.f.push_back(gain * wn2 * (x1 + p.t_agg * x2));
        double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
        deriv(x1, x2, k1a, k1b);
        deriv(x1 + 0.5 * dt * k1a, x2 + 0.5 * dt * k1b, k2a, k2b);
        deriv(x1 + 0.5 * dt * k2a, x2 + 0.5 * dt * k2b, k3a, k3b);
        deriv(x1 + dt * k3a, x2 + dt * k3b, k4a, k4b);
        x1 += dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
        x2 += dt / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
    }
    return out;
}

struct CurveMin {
    double t = 0, v = 0;
};

inline CurveMin curve_min(const OdeCurve& c) {
    CurveMin m{c.t[0], c.f[0]};
    for (std::size_t i = 1; i < c.t.size(); ++i)
        if (c.f[i] < m.v) m = {c.t[i], c.f[i]};
    return m;
}

// --- independent MLP forward pass ------------------------------------------
// Plain nested loops over explicitly copied values; no shared helpers with
// the library implementation.
inline std::vector<double> oracle_forward(const freqopf::MlpParams& p,
                                          const std::vector<double>& x) {
    std::vector<double> cur = x;
    int layers = static_cast<int>(p.weights.size());
    for (int m = 0; m < layers; ++m) {
        int rows = p.weights[m].rows, cols = p.weights[m].cols;
        std::vector<double> nxt(cols);
        for (int j = 0; j < cols; ++j) {
            double acc = p.biases[m][j];
            for (int i = 0; i < rows; ++i) acc += cur[i] * p.weights[m].a[i * cols + j];
            nxt[j] = acc;
        }
        if (m != layers - 1)
            for (double& v : nxt)
                if (v < 0) v = 0;
        cur = nxt;
    }
    return cur;
}

// Central finite-difference gradient of loss() with respect to every
// parameter; h on the normalized scale.
inline freqopf::MlpParams fd_grad(freqopf::MlpParams p,
                                  const std::vector<freqopf::ScenarioRow>& slice,
                                  double h = 1e-5) {
    freqopf::MlpParams g;
    for (int m = 0; m < p.n_layers(); ++m) {
        g.weights.emplace_back(p.weights[m].rows, p.weights[m].cols);
        g.biases.emplace_back(p.biases[m].size(), 0.0);
    }
    auto probe = [&](double& w, double& slot) {
        double save = w;
        w = save + h;
        double up = freqopf::loss(p, slice);
        w = save - h;
        double dn = freqopf::loss(p, slice);
        w = save;
        slot = (up - dn) / (2.0 * h);
    };
    for (int m = 0; m < p.n_layers(); ++m) {
        for (std::size_t k = 0; k < p.weights[m].a.size(); ++k)
            probe(p.weights[m].a[k], g.weights[m].a[k]);
        for (std::size_t k = 0; k < p.biases[m].size(); ++k)
            probe(p.biases[m][k], g.biases[m][k]);
    }
    return g;
}

}  // namespace testsup
