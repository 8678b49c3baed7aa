#pragma once

// Pipeline orchestration: Monte-Carlo dataset generation over the simulator,
// predictor training, the 24-hour three-variant benchmark, and report
// emission (CSV + SVG). All outputs are deterministic functions of
// (seed, config, case); the only exception is the wall-clock solve_ms column.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "grid_model.hpp"
#include "neural.hpp"
#include "opf.hpp"
#include "sfr_sim.hpp"
#include "svg.hpp"

namespace freqopf {

struct HarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- configuration ----------------------------------------------------------

inline std::vector<double> default_profile() {
    // Synthetic 24-point daily load profile: valley at hour 1 (0.82),
    // peak at hour 8 (1.20).
    return {0.82, 0.84, 0.87, 0.92, 0.98, 1.05, 1.13, 1.20,
            1.18, 1.14, 1.10, 1.07, 1.05, 1.03, 1.02, 1.04,
            1.08, 1.12, 1.15, 1.10, 1.03, 0.96, 0.90, 0.85};
}

struct StudyConfig {
    std::string case_path;
    double scale_min = 0.8, scale_max = 1.2;
    int samples = 2000;
    std::vector<std::string> contingencies;  // empty -> case's designated unit
    std::uint64_t seed = 1;
    std::vector<int> hidden = {16, 16};
    double r_lmt = -0.5;  // Hz/s
    double f_lmt = 59.5;  // Hz
    std::vector<double> profile = default_profile();
    double sim_duration = 30.0, sim_dt = 1e-3;
    int cost_segments = 8;

    void validate() const {
        if (!(scale_min > 0) || !(scale_max <= 2.0) || scale_min > scale_max)
            throw HarnessError("config: load-scale range must lie within (0, 2]");
        if (samples < 1) throw HarnessError("config: samples must be >= 1");
        if (profile.size() != 24) throw HarnessError("config: profile must have 24 entries");
        for (double v : profile)
            if (!(v > 0)) throw HarnessError("config: profile factors must be > 0");
    }
};

inline StudyConfig config_from_json(const nlohmann::json& j) {
    StudyConfig c;
    c.case_path = j.value("case", c.case_path);
    c.scale_min = j.value("scale_min", c.scale_min);
    c.scale_max = j.value("scale_max", c.scale_max);
    c.samples = j.value("samples", c.samples);
    c.contingencies = j.value("contingencies", c.contingencies);
    c.seed = j.value("seed", c.seed);
    c.hidden = j.value("hidden", c.hidden);
    c.r_lmt = j.value("r_lmt", c.r_lmt);
    c.f_lmt = j.value("f_lmt", c.f_lmt);
    c.profile = j.value("profile", c.profile);
    c.sim_duration = j.value("sim_duration", c.sim_duration);
    c.sim_dt = j.value("sim_dt", c.sim_dt);
    c.cost_segments = j.value("cost_segments", c.cost_segments);
    c.validate();
    return c;
}

inline StudyConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

// --- small utilities --------------------------------------------------------

namespace detail_harness {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw HarnessError("cannot write file: " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw HarnessError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

template <class F>
inline void parallel_for(std::size_t n, int jobs, F&& f) {
    if (jobs < 1) jobs = 1;
    jobs = static_cast<int>(std::min<std::size_t>(jobs, n));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr err;
    std::mutex err_mtx;
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> g(err_mtx);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (err) std::rethrow_exception(err);
}

// Per-sample RNG stream: decorrelated from neighbors via splitmix inside Rng.
inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t i) {
    return seed * 0x9e3779b97f4a7c15ull + (i + 1) * 0xbf58476d1ce4e5b9ull;
}

}  // namespace detail_harness

// --- dataset CSV ------------------------------------------------------------

inline std::string dataset_to_csv(const ScenarioDataset& ds) {
    std::ostringstream os;
    for (std::size_t f = 0; f < ds.feature_names.size(); ++f)
        os << ds.feature_names[f] << ",";
    os << "label_rocof,label_fn,split\n";
    for (const auto& r : ds.rows) {
        if (r.x.size() != ds.feature_names.size())
            throw HarnessError("dataset_to_csv: row width mismatch");
        for (double v : r.x) os << detail_harness::fmt(v) << ",";
        os << detail_harness::fmt(r.rocof) << "," << detail_harness::fmt(r.fn) << ","
           << r.split << "\n";
    }
    return os.str();
}

inline ScenarioDataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw HarnessError("dataset CSV: empty file");
    auto header = detail_harness::split_csv_line(line);
    if (header.size() < 4 || header[header.size() - 1] != "split" ||
        header[header.size() - 2] != "label_fn" || header[header.size() - 3] != "label_rocof")
        throw HarnessError("dataset CSV: bad header (expected ...,label_rocof,label_fn,split)");
    ScenarioDataset ds;
    ds.feature_names.assign(header.begin(), header.end() - 3);
    std::size_t nf = ds.feature_names.size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail_harness::split_csv_line(line);
        if (cells.size() != nf + 3)
            throw HarnessError("dataset CSV: row has " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(nf + 3));
        ScenarioRow r;
        for (std::size_t f = 0; f < nf; ++f) r.x.push_back(std::stod(cells[f]));
        r.rocof = std::stod(cells[nf]);
        r.fn = std::stod(cells[nf + 1]);
        r.split = cells[nf + 2];
        ds.rows.push_back(std::move(r));
    }
    return ds;
}

// --- dataset generation -----------------------------------------------------

struct GenStats {
    int produced = 0;
    int skipped = 0;
    std::vector<std::string> skip_log;
};

// One Monte-Carlo scenario: scaled loads, drawn contingency, feasible dispatch
// (T-OPF plus uniform perturbation re-balanced to the load), simulated labels.
inline std::optional<ScenarioRow> generate_sample(const PowerCase& base,
                                                  const StudyConfig& cfg, std::uint64_t i,
                                                  std::string* why_skipped = nullptr) {
    Rng rng(detail_harness::sample_seed(cfg.seed, i));
    double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
    std::vector<std::string> ctgs = cfg.contingencies;
    if (ctgs.empty()) ctgs.push_back(base.contingency_unit);
    std::string ctg = ctgs[rng.index(ctgs.size())];

    PowerCase c = select_contingency(scale_loads(base, scale), ctg);

    OpfOptions opt;
    opt.cost_segments = cfg.cost_segments;
    OpfModel m = build_topf(c, opt);
    DispatchSolution sol = solve_variant(m);
    if (sol.status != lp::Status::Optimal) {
        if (why_skipped)
            *why_skipped = "sample " + std::to_string(i) + ": T-OPF " +
                           lp::status_name(sol.status) + " at scale " +
                           detail_harness::fmt_short(scale);
        return std::nullopt;
    }

    // Perturb within limits, then re-balance proportionally (headroom /
    // reducible margin) so total generation matches total load exactly.
    double total_load = 0;
    for (const auto& [bus, mw] : c.loads) total_load += mw;
    std::map<std::string, double> disp = sol.dispatch_mw;
    for (const auto& g : c.generators) {
        double span = g.p_max - g.p_min;
        double p = disp[g.id] + rng.uniform(-0.3, 0.3) * span;
        disp[g.id] = std::min(g.p_max, std::max(g.p_min, p));
    }
    double total = 0;
    for (const auto& g : c.generators) total += disp[g.id];
    if (total < total_load) {
        double head = 0;
        for (const auto& g : c.generators) head += g.p_max - disp[g.id];
        if (head < total_load - total - 1e-9) {
            if (why_skipped)
                *why_skipped = "sample " + std::to_string(i) + ": no headroom to balance";
            return std::nullopt;
        }
        for (const auto& g : c.generators)
            disp[g.id] += (total_load - total) * (g.p_max - disp[g.id]) / head;
    } else if (total > total_load) {
        double room = 0;
        for (const auto& g : c.generators) room += disp[g.id] - g.p_min;
        if (room < total - total_load - 1e-9) {
            if (why_skipped)
                *why_skipped = "sample " + std::to_string(i) + ": cannot reduce to balance";
            return std::nullopt;
        }
        for (const auto& g : c.generators)
            disp[g.id] -= (total - total_load) * (disp[g.id] - g.p_min) / room;
    }

    SfrSystem sys = build_full_order(c, disp);
    SfrTrace tr = simulate(sys, cfg.sim_duration, cfg.sim_dt);
    FrequencyMetrics met = compute_metrics(tr, c.f0);

    ScenarioRow row;
    row.x = make_features(c, disp, ctg);
    row.rocof = met.rocof_worst;
    row.fn = met.fn;
    return row;
}

inline ScenarioDataset generate_dataset(const PowerCase& base, const StudyConfig& cfg,
                                        int jobs, GenStats* stats = nullptr) {
    cfg.validate();
    std::vector<std::optional<ScenarioRow>> rows(cfg.samples);
    std::vector<std::string> why(cfg.samples);
    detail_harness::parallel_for(static_cast<std::size_t>(cfg.samples), jobs,
                                 [&](std::size_t i) {
                                     rows[i] = generate_sample(base, cfg, i, &why[i]);
                                 });
    ScenarioDataset ds;
    ds.feature_names = feature_names(base);
    GenStats gs;
    for (int i = 0; i < cfg.samples; ++i) {
        if (rows[i]) {
            ds.rows.push_back(std::move(*rows[i]));
            ++gs.produced;
        } else {
            ++gs.skipped;
            gs.skip_log.push_back(why[i]);
        }
    }
    // 70/15/15 split by produced-row order (deterministic).
    std::size_t n = ds.rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i * 100 < n * 70) ds.rows[i].split = "train";
        else if (i * 100 < n * 85) ds.rows[i].split = "val";
        else ds.rows[i].split = "test";
    }
    if (stats) *stats = gs;
    return ds;
}

inline GenStats cmd_gen_dataset(const PowerCase& base, const StudyConfig& cfg,
                                const std::string& out_dir, int jobs) {
    std::filesystem::create_directories(out_dir);
    GenStats gs;
    ScenarioDataset ds = generate_dataset(base, cfg, jobs, &gs);
    detail_harness::write_file(out_dir + "/dataset.csv", dataset_to_csv(ds));
    return gs;
}

// --- training ---------------------------------------------------------------

struct TestMetrics {
    double mae_rocof = 0, mae_fn = 0;
    double r2_rocof = 0, r2_fn = 0;
    int n = 0;
};

inline TestMetrics evaluate_split(const Model& model, const ScenarioDataset& ds,
                                  const std::string& tag) {
    auto idx = ds.split_indices(tag);
    if (idx.empty()) throw HarnessError("evaluate_split: no rows tagged " + tag);
    TestMetrics tm;
    tm.n = static_cast<int>(idx.size());
    double mean_r = 0, mean_f = 0;
    for (auto i : idx) {
        mean_r += ds.rows[i].rocof;
        mean_f += ds.rows[i].fn;
    }
    mean_r /= tm.n;
    mean_f /= tm.n;
    double ss_r = 0, ss_f = 0, se_r = 0, se_f = 0;
    for (auto i : idx) {
        auto y = predict_raw(model.params, model.normalizer, ds.rows[i].x);
        tm.mae_rocof += std::abs(y[0] - ds.rows[i].rocof);
        tm.mae_fn += std::abs(y[1] - ds.rows[i].fn);
        se_r += (y[0] - ds.rows[i].rocof) * (y[0] - ds.rows[i].rocof);
        se_f += (y[1] - ds.rows[i].fn) * (y[1] - ds.rows[i].fn);
        ss_r += (ds.rows[i].rocof - mean_r) * (ds.rows[i].rocof - mean_r);
        ss_f += (ds.rows[i].fn - mean_f) * (ds.rows[i].fn - mean_f);
    }
    tm.mae_rocof /= tm.n;
    tm.mae_fn /= tm.n;
    tm.r2_rocof = ss_r > 0 ? 1.0 - se_r / ss_r : 1.0;
    tm.r2_fn = ss_f > 0 ? 1.0 - se_f / ss_f : 1.0;
    return tm;
}

struct TrainOutputs {
    Model model;
    TestMetrics test;
    TrainResult result;
};

inline TrainOutputs cmd_train(const ScenarioDataset& ds, const StudyConfig& cfg,
                              const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    MlpSpec spec;
    spec.input_dim = static_cast<int>(ds.feature_names.size());
    spec.hidden = cfg.hidden;
    TrainConfig tc;
    tc.seed = cfg.seed;
    TrainResult tr = train(spec, ds, tc);

    TrainOutputs out;
    out.result = tr;
    out.model.spec = spec;
    out.model.params = tr.params;
    out.model.normalizer = tr.normalizer;
    out.test = evaluate_split(out.model, ds, "test");
    out.model.metadata = {{"seed", cfg.seed},
                          {"best_epoch", tr.best_epoch},
                          {"val_loss", tr.best_val_loss},
                          {"train_loss", tr.history.empty() ? 0.0
                                                            : tr.history.back().train_loss},
                          {"test_mae_rocof", out.test.mae_rocof},
                          {"test_mae_fn", out.test.mae_fn},
                          {"test_r2_rocof", out.test.r2_rocof},
                          {"test_r2_fn", out.test.r2_fn}};

    detail_harness::write_file(out_dir + "/model.json", model_to_json(out.model).dump(2) + "\n");

    std::ostringstream hist;
    hist << "epoch,train_loss,val_loss\n";
    for (const auto& e : tr.history)
        hist << e.epoch << "," << detail_harness::fmt(e.train_loss) << ","
             << detail_harness::fmt(e.val_loss) << "\n";
    detail_harness::write_file(out_dir + "/loss_history.csv", hist.str());

    // loss-curve figure
    svg::Chart lc;
    lc.title = "Training and validation loss";
    lc.x_label = "epoch";
    lc.y_label = "MSE (normalized, log10)";
    svg::Series st{"train", {}, {}, "#1f77b4"}, sv{"val", {}, {}, "#ff7f0e"};
    for (const auto& e : tr.history) {
        st.x.push_back(e.epoch);
        st.y.push_back(std::log10(std::max(e.train_loss, 1e-16)));
        sv.x.push_back(e.epoch);
        sv.y.push_back(std::log10(std::max(e.val_loss, 1e-16)));
    }
    lc.series = {st, sv};
    detail_harness::write_file(out_dir + "/fig_loss.svg", svg::render(lc));

    // prediction-vs-truth scatter on the test split
    auto idx = ds.split_indices("test");
    for (int o = 0; o < 2; ++o) {
        svg::Chart sc;
        sc.title = o == 0 ? "Predicted vs simulated RoCoF (test)"
                          : "Predicted vs simulated nadir (test)";
        sc.x_label = o == 0 ? "simulated RoCoF (Hz/s)" : "simulated nadir (Hz)";
        sc.y_label = "predicted";
        svg::Series pts{"", {}, {}, "#2ca02c", true};
        double lo = 1e300, hi = -1e300;
        for (auto i : idx) {
            auto y = predict_raw(out.model.params, out.model.normalizer, ds.rows[i].x);
            double truth = o == 0 ? ds.rows[i].rocof : ds.rows[i].fn;
            pts.x.push_back(truth);
            pts.y.push_back(y[o]);
            lo = std::min(lo, truth);
            hi = std::max(hi, truth);
        }
        svg::Series diag{"y = x", {lo, hi}, {lo, hi}, "#999999"};
        sc.series = {diag, pts};
        detail_harness::write_file(
            out_dir + (o == 0 ? "/fig_pred_rocof.svg" : "/fig_pred_fn.svg"),
            svg::render(sc));
    }
    return out;
}

// --- 24-hour benchmark ------------------------------------------------------

struct HourVariantRow {
    int hour = 0;
    std::string variant;
    bool ok = false;
    std::string error;
    double cost = 0, solve_ms = 0;
    std::optional<double> pred_rocof, pred_fn;
    double sim_rocof = 0, sim_fn = 0;
    std::optional<double> err_rocof_pct, err_fn_pct;
};

struct DayResults {
    std::vector<HourVariantRow> rows;  // hour-major, variant order T/L/DNN
    // Post-contingency frequency traces for the valley (1) and peak (8) hours.
    std::map<int, std::map<std::string, SfrTrace>> traces;
};

inline const std::vector<std::string>& variant_order() {
    static const std::vector<std::string> v = {"T-OPF", "L-FCOPF", "DNN-FCOPF"};
    return v;
}

inline std::string day_results_to_csv(const DayResults& dr) {
    std::ostringstream os;
    os << "hour,variant,cost,solve_ms,pred_rocof,pred_fn,sim_rocof,sim_fn,"
          "err_rocof_pct,err_fn_pct\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? detail_harness::fmt(*v) : std::string();
    };
    for (const auto& r : dr.rows) {
        if (!r.ok) {
            os << r.hour << "," << r.variant << ",,,,,,,,\n";
            continue;
        }
        char ms[32];
        std::snprintf(ms, sizeof(ms), "%.3f", r.solve_ms);
        os << r.hour << "," << r.variant << "," << detail_harness::fmt(r.cost) << "," << ms
           << "," << opt(r.pred_rocof) << "," << opt(r.pred_fn) << ","
           << detail_harness::fmt(r.sim_rocof) << "," << detail_harness::fmt(r.sim_fn) << ","
           << opt(r.err_rocof_pct) << "," << opt(r.err_fn_pct) << "\n";
    }
    return os.str();
}

inline DayResults run_day(const PowerCase& base, const Model& model, const StudyConfig& cfg,
                          int jobs) {
    cfg.validate();
    OpfOptions opt;
    opt.cost_segments = cfg.cost_segments;

    struct HourOut {
        std::vector<HourVariantRow> rows;
        std::map<std::string, SfrTrace> traces;
    };
    std::vector<HourOut> hours(24);

    detail_harness::parallel_for(24, jobs, [&](std::size_t h) {
        int hour = static_cast<int>(h) + 1;
        PowerCase c = scale_loads(base, cfg.profile[h]);
        bool keep_trace = (hour == 1 || hour == 8);
        for (const auto& variant : variant_order()) {
            HourVariantRow row;
            row.hour = hour;
            row.variant = variant;
            try {
                OpfModel m = variant == "T-OPF"
                                 ? build_topf(c, opt)
                                 : variant == "L-FCOPF"
                                       ? build_lfcopf(c, cfg.r_lmt, cfg.f_lmt, opt)
                                       : build_dnnfcopf(c, model, cfg.r_lmt, cfg.f_lmt, opt);
                DispatchSolution sol = solve_variant(m);
                if (sol.status != lp::Status::Optimal)
                    throw OpfError(std::string("solver status: ") +
                                   lp::status_name(sol.status));
                SolutionResiduals res = solution_residuals(c, sol);
                if (res.balance > 1e-5 || res.flow_excess > 1e-5 || res.p_excess > 1e-7)
                    throw OpfError("dispatch violates feasibility tolerances");
                row.cost = sol.cost;
                row.solve_ms = sol.solve_ms;
                row.pred_rocof = sol.pred_rocof;
                row.pred_fn = sol.pred_fn;
                VerifyResult vr =
                    verify_dispatch(c, sol, cfg.sim_duration, cfg.sim_dt);
                row.sim_rocof = vr.metrics.rocof_worst;
                row.sim_fn = vr.metrics.fn;
                row.err_rocof_pct = vr.err_rocof_pct;
                row.err_fn_pct = vr.err_fn_pct;
                row.ok = true;
                if (keep_trace) {
                    SfrSystem sys = build_full_order(c, sol.dispatch_mw);
                    hours[h].traces[variant] = simulate(sys, cfg.sim_duration, cfg.sim_dt);
                }
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
            hours[h].rows.push_back(std::move(row));
        }
    });

    DayResults dr;
    for (int h = 0; h < 24; ++h) {
        for (auto& r : hours[h].rows) dr.rows.push_back(std::move(r));
        if (!hours[h].traces.empty()) dr.traces[h + 1] = std::move(hours[h].traces);
    }
    return dr;
}

// Windowed RoCoF time series (same window as the labeling convention).
inline std::vector<double> rocof_series(const SfrTrace& tr, double window = 0.167) {
    std::size_t k = static_cast<std::size_t>(std::llround(window / tr.dt));
    if (k == 0) k = 1;
    std::vector<double> out;
    double w = static_cast<double>(k) * tr.dt;
    for (std::size_t i = 0; i + k < tr.delta_f.size(); ++i)
        out.push_back((tr.delta_f[i + k] - tr.delta_f[i]) / w);
    return out;
}

inline void write_day_figures(const DayResults& dr, const StudyConfig& cfg,
                              const std::string& out_dir) {
    const std::vector<std::string> colors = {"#1f77b4", "#ff7f0e", "#2ca02c"};

    auto by_hour_chart = [&](const std::string& title, const std::string& ylab, auto getter,
                             std::vector<svg::HLine> hlines) {
        svg::Chart ch;
        ch.title = title;
        ch.x_label = "hour";
        ch.y_label = ylab;
        ch.hlines = std::move(hlines);
        for (std::size_t v = 0; v < variant_order().size(); ++v) {
            svg::Series s{variant_order()[v], {}, {}, colors[v]};
            for (const auto& r : dr.rows) {
                if (r.variant != variant_order()[v] || !r.ok) continue;
                auto val = getter(r);
                if (!val) continue;
                s.x.push_back(r.hour);
                s.y.push_back(*val);
            }
            ch.series.push_back(std::move(s));
        }
        return svg::render(ch);
    };

    detail_harness::write_file(
        out_dir + "/fig_fn_by_hour.svg",
        by_hour_chart(
            "Simulated frequency nadir by hour", "nadir (Hz)",
            [](const HourVariantRow& r) { return std::optional<double>(r.sim_fn); },
            {{cfg.f_lmt, "limit", "#d62728"}}));
    detail_harness::write_file(
        out_dir + "/fig_rocof_by_hour.svg",
        by_hour_chart(
            "Simulated worst RoCoF by hour", "RoCoF (Hz/s)",
            [](const HourVariantRow& r) { return std::optional<double>(r.sim_rocof); },
            {{cfg.r_lmt, "limit", "#d62728"}}));
    detail_harness::write_file(
        out_dir + "/fig_err_by_hour.svg",
        by_hour_chart(
            "RoCoF prediction relative error by hour", "error (%)",
            [](const HourVariantRow& r) { return r.err_rocof_pct; }, {}));
    detail_harness::write_file(
        out_dir + "/fig_err_fn_by_hour.svg",
        by_hour_chart(
            "Nadir prediction relative error by hour", "error (%)",
            [](const HourVariantRow& r) { return r.err_fn_pct; }, {}));

    for (const auto& [hour, traces] : dr.traces) {
        svg::Chart cf, cr;
        cf.title = "Frequency deviation, hour " + std::to_string(hour);
        cf.x_label = "t (s)";
        cf.y_label = "delta f (Hz)";
        cr.title = "Windowed RoCoF, hour " + std::to_string(hour);
        cr.x_label = "t (s)";
        cr.y_label = "RoCoF (Hz/s)";
        std::size_t v = 0;
        for (const auto& variant : variant_order()) {
            auto it = traces.find(variant);
            if (it == traces.end()) { ++v; continue; }
            const SfrTrace& tr = it->second;
            // decimate to ~1500 points to keep the SVG small
            std::size_t stride = std::max<std::size_t>(1, tr.t.size() / 1500);
            svg::Series sf{variant, {}, {}, colors[v % colors.size()]};
            for (std::size_t i = 0; i < tr.t.size(); i += stride) {
                sf.x.push_back(tr.t[i]);
                sf.y.push_back(tr.delta_f[i]);
            }
            cf.series.push_back(std::move(sf));
            auto rs = rocof_series(tr);
            svg::Series sr{variant, {}, {}, colors[v % colors.size()]};
            for (std::size_t i = 0; i < rs.size(); i += stride) {
                sr.x.push_back(tr.t[i]);
                sr.y.push_back(rs[i]);
            }
            cr.series.push_back(std::move(sr));
            ++v;
        }
        cf.hlines = {{cfg.f_lmt - 60.0, "nadir limit - f0", "#d62728"}};
        cr.hlines = {{cfg.r_lmt, "limit", "#d62728"}};
        detail_harness::write_file(
            out_dir + "/fig_deltaf_hour" + std::to_string(hour) + ".svg", svg::render(cf));
        detail_harness::write_file(
            out_dir + "/fig_rocof_hour" + std::to_string(hour) + ".svg", svg::render(cr));
    }
}

inline DayResults cmd_run_day(const PowerCase& base, const Model& model,
                              const StudyConfig& cfg, const std::string& out_dir, int jobs) {
    std::filesystem::create_directories(out_dir);
    DayResults dr = run_day(base, model, cfg, jobs);
    detail_harness::write_file(out_dir + "/day_results.csv", day_results_to_csv(dr));
    write_day_figures(dr, cfg, out_dir);
    return dr;
}

// --- report -----------------------------------------------------------------

inline std::vector<HourVariantRow> day_results_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw HarnessError("day-results CSV: empty file");
    auto header = detail_harness::split_csv_line(line);
    if (header.size() != 10 || header[0] != "hour" || header[1] != "variant")
        throw HarnessError("day-results CSV: unexpected header");
    std::vector<HourVariantRow> rows;
    auto opt = [](const std::string& s) {
        return s.empty() ? std::optional<double>() : std::optional<double>(std::stod(s));
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c = detail_harness::split_csv_line(line);
        if (c.size() != 10) throw HarnessError("day-results CSV: malformed row: " + line);
        HourVariantRow r;
        r.hour = std::stoi(c[0]);
        r.variant = c[1];
        if (c[2].empty()) {
            r.ok = false;
        } else {
            r.ok = true;
            r.cost = std::stod(c[2]);
            r.solve_ms = std::stod(c[3]);
            r.pred_rocof = opt(c[4]);
            r.pred_fn = opt(c[5]);
            r.sim_rocof = std::stod(c[6]);
            r.sim_fn = std::stod(c[7]);
            r.err_rocof_pct = opt(c[8]);
            r.err_fn_pct = opt(c[9]);
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw HarnessError("day-results CSV: no data rows");
    return rows;
}

inline std::string cmd_report(const std::vector<HourVariantRow>& rows,
                              std::vector<int> detail_hours = {1, 8}) {
    std::ostringstream os;
    os << "Per-variant summary over " << rows.size() << " rows\n";
    os << "variant      mean-cost($)  mean-ms   worst-rocof  worst-fn   max-rocof-err%\n";
    for (const auto& variant : variant_order()) {
        int n = 0;
        double cost = 0, ms = 0, wro = 0, wfn = 1e300, werr = 0;
        bool any_err = false;
        for (const auto& r : rows) {
            if (r.variant != variant || !r.ok) continue;
            ++n;
            cost += r.cost;
            ms += r.solve_ms;
            wro = std::min(wro, r.sim_rocof);
            wfn = std::min(wfn, r.sim_fn);
            if (r.err_rocof_pct) {
                werr = std::max(werr, *r.err_rocof_pct);
                any_err = true;
            }
        }
        if (n == 0) continue;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-12s %12.2f %8.1f %12.4f %9.4f", variant.c_str(),
                      cost / n, ms / n, wro, wfn);
        os << buf;
        if (any_err) {
            std::snprintf(buf, sizeof(buf), " %14.2f", werr);
            os << buf;
        }
        os << "\n";
    }

    for (int hour : detail_hours) {
        os << "\nHour " << hour << "\n";
        os << "variant      cost($)    solve-ms  sim-rocof  sim-fn    pred-rocof  pred-fn\n";
        for (const auto& r : rows) {
            if (r.hour != hour) continue;
            if (!r.ok) {
                os << r.variant << "  FAILED\n";
                continue;
            }
            char buf[200];
            std::snprintf(buf, sizeof(buf), "%-12s %9.2f %10.1f %10.4f %8.4f",
                          r.variant.c_str(), r.cost, r.solve_ms, r.sim_rocof, r.sim_fn);
            os << buf;
            if (r.pred_rocof && r.pred_fn) {
                std::snprintf(buf, sizeof(buf), " %11.4f %8.4f", *r.pred_rocof, *r.pred_fn);
                os << buf;
            }
            os << "\n";
        }
        // cost ordering check at this hour
        std::map<std::string, double> cost;
        for (const auto& r : rows)
            if (r.hour == hour && r.ok) cost[r.variant] = r.cost;
        if (cost.count("T-OPF") && cost.count("L-FCOPF") && cost.count("DNN-FCOPF")) {
            bool ordered = cost["T-OPF"] <= cost["L-FCOPF"] + 1e-6 &&
                           cost["T-OPF"] <= cost["DNN-FCOPF"] + 1e-6;
            os << "cost ordering (base <= constrained): " << (ordered ? "OK" : "VIOLATED")
               << "\n";
        }
    }
    return os.str();
}

}  // namespace freqopf
