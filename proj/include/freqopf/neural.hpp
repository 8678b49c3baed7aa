#pragma once

// Fully connected ReLU predictor for (worst RoCoF, frequency nadir):
// forward pass, reverse-mode gradients, adaptive-moment mini-batch training,
// min-max normalization and its folding into raw-unit parameters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace freqopf {

struct NeuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic RNG independent of library internals (splitmix-seeded
// xoshiro-style generator, uniform via 53-bit mantissa).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ull;
        for (auto& si : s_) {
            z += 0x9e3779b97f4a7c15ull;
            std::uint64_t x = z;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
            si = x ^ (x >> 31);
        }
    }

    std::uint64_t next() {
        std::uint64_t x = s_[0];
        std::uint64_t y = s_[1];
        s_[0] = y;
        x ^= x << 23;
        s_[1] = x ^ y ^ (x >> 17) ^ (y >> 26);
        return s_[1] + y;
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    double normal() {
        // Box-Muller, one value per call (second discarded for simplicity)
        double u1 = std::max(uniform(), 1e-300);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    std::uint64_t s_[2];
};

struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden;
    int output_dim = 2;

    void validate() const {
        if (input_dim < 1) throw NeuralError("MlpSpec: input_dim must be >= 1");
        if (output_dim != 2) throw NeuralError("MlpSpec: output_dim must be 2");
        for (int w : hidden)
            if (w < 1) throw NeuralError("MlpSpec: hidden widths must be >= 1");
    }
};

struct MlpParams {
    std::vector<Matrix> weights;            // W_m, shape in x out (y = x W + b)
    std::vector<std::vector<double>> biases;

    int n_layers() const { return static_cast<int>(weights.size()); }

    void check_chain(int input_dim) const {
        int d = input_dim;
        for (int m = 0; m < n_layers(); ++m) {
            if (weights[m].rows != d)
                throw NeuralError("MlpParams: dimension chain mismatch at layer " +
                                  std::to_string(m + 1));
            if (static_cast<int>(biases[m].size()) != weights[m].cols)
                throw NeuralError("MlpParams: bias size mismatch at layer " +
                                  std::to_string(m + 1));
            d = weights[m].cols;
        }
    }
};

struct Normalizer {
    std::vector<double> input_shift, input_scale;    // x_n = (x - shift)/scale
    std::vector<double> output_shift, output_scale;  // y = y_n*scale + shift

    static Normalizer identity(int in_dim, int out_dim) {
        Normalizer n;
        n.input_shift.assign(in_dim, 0.0);
        n.input_scale.assign(in_dim, 1.0);
        n.output_shift.assign(out_dim, 0.0);
        n.output_scale.assign(out_dim, 1.0);
        return n;
    }
};

struct ScenarioRow {
    std::vector<double> x;
    double rocof = 0, fn = 0;
    std::string split;  // train | val | test
};

struct ScenarioDataset {
    std::vector<std::string> feature_names;
    std::vector<ScenarioRow> rows;

    std::vector<std::size_t> split_indices(const std::string& tag) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].split == tag) out.push_back(i);
        return out;
    }
};

inline MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    MlpParams p;
    Rng rng(seed);
    std::vector<int> dims;
    dims.push_back(spec.input_dim);
    for (int h : spec.hidden) dims.push_back(h);
    dims.push_back(spec.output_dim);
    for (std::size_t m = 0; m + 1 < dims.size(); ++m) {
        Matrix w(dims[m], dims[m + 1]);
        double sd = std::sqrt(2.0 / dims[m]);  // variance-scaled init
        for (auto& v : w.a) v = sd * rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(dims[m + 1], 0.0);
    }
    return p;
}

// Forward pass; optionally records pre-activations z_m of every layer.
inline std::vector<double> forward(const MlpParams& p, const std::vector<double>& x,
                                   std::vector<std::vector<double>>* pre_acts = nullptr) {
    if (p.weights.empty()) throw NeuralError("forward: empty network");
    if (static_cast<int>(x.size()) != p.weights[0].rows)
        throw NeuralError("forward: input dimension mismatch");
    std::vector<double> act = x;
    if (pre_acts) pre_acts->clear();
    for (int m = 0; m < p.n_layers(); ++m) {
        const Matrix& w = p.weights[m];
        std::vector<double> z(w.cols);
        for (int j = 0; j < w.cols; ++j) {
            double s = p.biases[m][j];
            for (int i = 0; i < w.rows; ++i) s += act[i] * w(i, j);
            z[j] = s;
        }
        if (pre_acts) pre_acts->push_back(z);
        if (m + 1 < p.n_layers())
            for (auto& v : z) v = std::max(v, 0.0);  // ReLU, hidden layers only
        act = std::move(z);
    }
    return act;
}

// MSE per Eq-style convention: mean over rows, sum over the two outputs.
inline double loss(const MlpParams& p, const std::vector<ScenarioRow>& slice) {
    if (slice.empty()) throw NeuralError("loss: empty slice");
    double total = 0;
    for (const auto& row : slice) {
        auto y = forward(p, row.x);
        double e0 = y[0] - row.rocof;
        double e1 = y[1] - row.fn;
        total += e0 * e0 + e1 * e1;
    }
    return total / static_cast<double>(slice.size());
}

// Exact reverse-mode gradient of loss(); ReLU subgradient at 0 taken as 0.
inline MlpParams grad(const MlpParams& p, const std::vector<ScenarioRow>& slice) {
    if (slice.empty()) throw NeuralError("grad: empty slice");
    MlpParams g;
    for (int m = 0; m < p.n_layers(); ++m) {
        g.weights.emplace_back(p.weights[m].rows, p.weights[m].cols);
        g.biases.emplace_back(p.biases[m].size(), 0.0);
    }
    double inv_n = 1.0 / static_cast<double>(slice.size());
    std::vector<std::vector<double>> acts;  // activations per layer incl. input
    for (const auto& row : slice) {
        acts.assign(1, row.x);
        std::vector<std::vector<double>> zs;
        for (int m = 0; m < p.n_layers(); ++m) {
            const Matrix& w = p.weights[m];
            std::vector<double> z(w.cols);
            for (int j = 0; j < w.cols; ++j) {
                double s = p.biases[m][j];
                for (int i = 0; i < w.rows; ++i) s += acts[m][i] * w(i, j);
                z[j] = s;
            }
            zs.push_back(z);
            if (m + 1 < p.n_layers())
                for (auto& v : z) v = std::max(v, 0.0);
            acts.push_back(std::move(z));
        }
        std::vector<double> delta = {2.0 * (acts.back()[0] - row.rocof) * inv_n,
                                     2.0 * (acts.back()[1] - row.fn) * inv_n};
        for (int m = p.n_layers() - 1; m >= 0; --m) {
            const Matrix& w = p.weights[m];
            for (int j = 0; j < w.cols; ++j) {
                g.biases[m][j] += delta[j];
                for (int i = 0; i < w.rows; ++i) g.weights[m](i, j) += acts[m][i] * delta[j];
            }
            if (m == 0) break;
            std::vector<double> prev(w.rows, 0.0);
            for (int i = 0; i < w.rows; ++i) {
                if (zs[m - 1][i] <= 0.0) continue;  // ReLU gate (0 at kink)
                double s = 0;
                for (int j = 0; j < w.cols; ++j) s += w(i, j) * delta[j];
                prev[i] = s;
            }
            delta = std::move(prev);
        }
    }
    return g;
}

struct TrainConfig {
    double lr = 1e-3;
    int batch = 64;
    int max_epochs = 2000;
    int patience = 100;
    std::uint64_t seed = 1;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0, val_loss = 0;
};

struct TrainResult {
    MlpParams params;       // best-validation parameters, normalized space
    Normalizer normalizer;  // fitted on the training split
    std::vector<EpochStats> history;
    double best_val_loss = 0;
    int best_epoch = 0;
};

inline constexpr double kBig = std::numeric_limits<double>::max();

inline Normalizer fit_normalizer(const ScenarioDataset& ds,
                                 const std::vector<std::size_t>& train_idx) {
    if (train_idx.empty()) throw NeuralError("fit_normalizer: no training rows");
    std::size_t d = ds.rows[train_idx[0]].x.size();
    Normalizer n;
    n.input_shift.assign(d, kBig);
    n.input_scale.assign(d, -kBig);
    double ymin[2] = {kBig, kBig}, ymax[2] = {-kBig, -kBig};
    for (auto i : train_idx) {
        const auto& r = ds.rows[i];
        for (std::size_t f = 0; f < d; ++f) {
            n.input_shift[f] = std::min(n.input_shift[f], r.x[f]);
            n.input_scale[f] = std::max(n.input_scale[f], r.x[f]);
        }
        ymin[0] = std::min(ymin[0], r.rocof);
        ymax[0] = std::max(ymax[0], r.rocof);
        ymin[1] = std::min(ymin[1], r.fn);
        ymax[1] = std::max(ymax[1], r.fn);
    }
    for (std::size_t f = 0; f < d; ++f) {
        double range = n.input_scale[f] - n.input_shift[f];
        n.input_scale[f] = range > 1e-12 ? range : 1.0;
    }
    for (int o = 0; o < 2; ++o) {
        double range = ymax[o] - ymin[o];
        n.output_shift.push_back(ymin[o]);
        n.output_scale.push_back(range > 1e-12 ? range : 1.0);
    }
    return n;
}

namespace detail_neural {
inline std::vector<ScenarioRow> normalized_rows(const ScenarioDataset& ds,
                                                const std::vector<std::size_t>& idx,
                                                const Normalizer& nm) {
    std::vector<ScenarioRow> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        ScenarioRow r = ds.rows[i];
        for (std::size_t f = 0; f < r.x.size(); ++f)
            r.x[f] = (r.x[f] - nm.input_shift[f]) / nm.input_scale[f];
        r.rocof = (r.rocof - nm.output_shift[0]) / nm.output_scale[0];
        r.fn = (r.fn - nm.output_shift[1]) / nm.output_scale[1];
        out.push_back(std::move(r));
    }
    return out;
}
}  // namespace detail_neural

inline TrainResult train(const MlpSpec& spec, const ScenarioDataset& ds,
                         const TrainConfig& cfg = {}) {
    spec.validate();
    if (ds.rows.size() < 200) throw NeuralError("train: dataset must have >= 200 rows");
    auto train_idx = ds.split_indices("train");
    auto val_idx = ds.split_indices("val");
    if (train_idx.empty() || val_idx.empty())
        throw NeuralError("train: train/val split missing");

    TrainResult res;
    res.normalizer = fit_normalizer(ds, train_idx);
    auto train_rows = detail_neural::normalized_rows(ds, train_idx, res.normalizer);
    auto val_rows = detail_neural::normalized_rows(ds, val_idx, res.normalizer);

    MlpParams p = init_params(spec, cfg.seed);
    p.check_chain(spec.input_dim);

    // Adam state
    MlpParams m1, m2;
    for (int m = 0; m < p.n_layers(); ++m) {
        m1.weights.emplace_back(p.weights[m].rows, p.weights[m].cols);
        m1.biases.emplace_back(p.biases[m].size(), 0.0);
        m2.weights.emplace_back(p.weights[m].rows, p.weights[m].cols);
        m2.biases.emplace_back(p.biases[m].size(), 0.0);
    }

    Rng rng(cfg.seed ^ 0xA5A5A5A5ull);
    std::vector<std::size_t> order(train_rows.size());
    std::iota(order.begin(), order.end(), 0);

    double initial_val = loss(p, val_rows);
    res.best_val_loss = initial_val;
    res.params = p;
    long step = 0;
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        // Fisher-Yates with the deterministic rng
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.index(i)]);

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch)) {
            std::size_t end = std::min(order.size(), start + cfg.batch);
            std::vector<ScenarioRow> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_rows[order[i]]);
            MlpParams g = grad(p, batch);
            ++step;
            double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (int m = 0; m < p.n_layers(); ++m) {
                auto upd = [&](double& w, double& mm, double& vv, double gg) {
                    mm = cfg.beta1 * mm + (1 - cfg.beta1) * gg;
                    vv = cfg.beta2 * vv + (1 - cfg.beta2) * gg * gg;
                    w -= cfg.lr * (mm / bc1) / (std::sqrt(vv / bc2) + cfg.eps);
                };
                for (std::size_t k = 0; k < p.weights[m].a.size(); ++k)
                    upd(p.weights[m].a[k], m1.weights[m].a[k], m2.weights[m].a[k],
                        g.weights[m].a[k]);
                for (std::size_t k = 0; k < p.biases[m].size(); ++k)
                    upd(p.biases[m][k], m1.biases[m][k], m2.biases[m][k], g.biases[m][k]);
            }
        }

        double tl = loss(p, train_rows);
        double vl = loss(p, val_rows);
        res.history.push_back({epoch, tl, vl});
        if (vl > 10.0 * initial_val || !std::isfinite(vl))
            throw NeuralError("train: divergence at epoch " + std::to_string(epoch) +
                              " (val loss " + std::to_string(vl) + ")");
        if (vl < res.best_val_loss - 1e-12) {
            res.best_val_loss = vl;
            res.best_epoch = epoch;
            res.params = p;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
    }
    return res;
}

// Absorbs the input/output affine maps into the first/last layers so the
// returned parameters consume raw feature units and emit raw Hz/s and Hz.
inline MlpParams fold_normalization(const MlpParams& p, const Normalizer& nm) {
    for (double s : nm.input_scale)
        if (!(s > 0)) throw NeuralError("fold_normalization: input scale must be positive");
    for (double s : nm.output_scale)
        if (!(s > 0)) throw NeuralError("fold_normalization: output scale must be positive");
    MlpParams out = p;
    Matrix& w1 = out.weights.front();
    if (static_cast<int>(nm.input_shift.size()) != w1.rows)
        throw NeuralError("fold_normalization: input dimension mismatch");
    for (int i = 0; i < w1.rows; ++i)
        for (int j = 0; j < w1.cols; ++j) {
            double w = w1(i, j) / nm.input_scale[i];
            out.biases.front()[j] -= w * nm.input_shift[i];
            w1(i, j) = w;
        }
    Matrix& wl = out.weights.back();
    if (static_cast<int>(nm.output_scale.size()) != wl.cols)
        throw NeuralError("fold_normalization: output dimension mismatch");
    for (int j = 0; j < wl.cols; ++j) {
        for (int i = 0; i < wl.rows; ++i) wl(i, j) *= nm.output_scale[j];
        out.biases.back()[j] =
            out.biases.back()[j] * nm.output_scale[j] + nm.output_shift[j];
    }
    return out;
}

inline std::vector<double> predict_raw(const MlpParams& p, const Normalizer& nm,
                                       const std::vector<double>& x_raw) {
    std::vector<double> xn(x_raw.size());
    for (std::size_t f = 0; f < x_raw.size(); ++f)
        xn[f] = (x_raw[f] - nm.input_shift[f]) / nm.input_scale[f];
    auto yn = forward(p, xn);
    return {yn[0] * nm.output_scale[0] + nm.output_shift[0],
            yn[1] * nm.output_scale[1] + nm.output_shift[1]};
}

// --- model / dataset files -------------------------------------------------

struct Model {
    MlpSpec spec;
    MlpParams params;  // normalized space
    Normalizer normalizer;
    nlohmann::json metadata;

    MlpParams folded() const { return fold_normalization(params, normalizer); }
};

inline nlohmann::json model_to_json(const Model& m) {
    nlohmann::json j;
    j["spec"] = {{"input_dim", m.spec.input_dim},
                 {"hidden", m.spec.hidden},
                 {"output_dim", m.spec.output_dim}};
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (int l = 0; l < m.params.n_layers(); ++l) {
        nlohmann::json w = nlohmann::json::array();
        for (int i = 0; i < m.params.weights[l].rows; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < m.params.weights[l].cols; ++c)
                row.push_back(m.params.weights[l](i, c));
            w.push_back(row);
        }
        j["weights"].push_back(w);
        j["biases"].push_back(m.params.biases[l]);
    }
    j["normalizer"] = {{"input_shift", m.normalizer.input_shift},
                       {"input_scale", m.normalizer.input_scale},
                       {"output_shift", m.normalizer.output_shift},
                       {"output_scale", m.normalizer.output_scale}};
    j["metadata"] = m.metadata;
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    Model m;
    m.spec.input_dim = j.at("spec").at("input_dim").get<int>();
    m.spec.hidden = j.at("spec").at("hidden").get<std::vector<int>>();
    m.spec.output_dim = j.at("spec").at("output_dim").get<int>();
    for (std::size_t l = 0; l < j.at("weights").size(); ++l) {
        const auto& wj = j.at("weights")[l];
        Matrix w(static_cast<int>(wj.size()), static_cast<int>(wj[0].size()));
        for (int i = 0; i < w.rows; ++i)
            for (int c = 0; c < w.cols; ++c) w(i, c) = wj[i][c].get<double>();
        m.params.weights.push_back(std::move(w));
        m.params.biases.push_back(j.at("biases")[l].get<std::vector<double>>());
    }
    m.normalizer.input_shift = j.at("normalizer").at("input_shift").get<std::vector<double>>();
    m.normalizer.input_scale = j.at("normalizer").at("input_scale").get<std::vector<double>>();
    m.normalizer.output_shift = j.at("normalizer").at("output_shift").get<std::vector<double>>();
    m.normalizer.output_scale = j.at("normalizer").at("output_scale").get<std::vector<double>>();
    m.metadata = j.value("metadata", nlohmann::json::object());
    m.params.check_chain(m.spec.input_dim);
    return m;
}

}  // namespace freqopf
