// freq-opf-lab: dataset generation, predictor training, 24-hour three-variant
// dispatch benchmark, and report emission.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqopf/harness.hpp"

using namespace freqopf;

namespace {

PowerCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

StudyConfig resolve_config(const std::string& config_path,
                           const std::optional<std::uint64_t>& seed) {
    StudyConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot open model file: " + path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frequency-constrained OPF laboratory"};
    app.require_subcommand(1);

    std::string case_path, config_path, out_dir = "out", model_path;
    std::optional<std::uint64_t> seed;
    int jobs = 1;

    auto add_common = [&](CLI::App* sub, bool needs_case) {
        auto* c = sub->add_option("--case", case_path, "case JSON file");
        if (needs_case) c->required();
        sub->add_option("--config", config_path, "study config JSON file");
        sub->add_option("--seed", seed, "seed override");
        sub->add_option("--out-dir", out_dir, "output directory");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* gen = app.add_subcommand("gen-dataset", "generate a labeled scenario dataset");
    add_common(gen, true);

    auto* trn = app.add_subcommand("train", "train the frequency predictor");
    add_common(trn, false);
    std::string dataset_path;
    trn->add_option("--dataset", dataset_path,
                    "dataset CSV (default <out-dir>/dataset.csv)");

    auto* day = app.add_subcommand("run-day", "24-hour three-variant benchmark");
    add_common(day, true);
    day->add_option("--model", model_path, "model JSON (default <out-dir>/model.json)");

    auto* rep = app.add_subcommand("report", "summarize day results");
    add_common(rep, false);
    std::string results_path;
    rep->add_option("--results", results_path,
                    "day-results CSV (default <out-dir>/day_results.csv)");

    CLI11_PARSE(app, argc, argv);

    try {
        StudyConfig cfg = resolve_config(config_path, seed);

        if (gen->parsed()) {
            PowerCase c = load_case(case_path);
            GenStats gs = cmd_gen_dataset(c, cfg, out_dir, jobs);
            for (const auto& s : gs.skip_log) std::cerr << "skipped: " << s << "\n";
            std::cout << "dataset: " << gs.produced << " rows, " << gs.skipped
                      << " skipped -> " << out_dir << "/dataset.csv\n";
        } else if (trn->parsed()) {
            if (dataset_path.empty()) dataset_path = out_dir + "/dataset.csv";
            std::ifstream in(dataset_path, std::ios::binary);
            if (!in) throw HarnessError("cannot open dataset: " + dataset_path);
            std::ostringstream ss;
            ss << in.rdbuf();
            ScenarioDataset ds = dataset_from_csv(ss.str());
            TrainOutputs out = cmd_train(ds, cfg, out_dir);
            std::printf(
                "trained: best epoch %d, val loss %.3e, test MAE rocof %.4f Hz/s, "
                "fn %.4f Hz, R2 %.4f / %.4f -> %s/model.json\n",
                out.result.best_epoch, out.result.best_val_loss, out.test.mae_rocof,
                out.test.mae_fn, out.test.r2_rocof, out.test.r2_fn, out_dir.c_str());
        } else if (day->parsed()) {
            PowerCase c = load_case(case_path);
            if (model_path.empty()) model_path = out_dir + "/model.json";
            Model model = load_model(model_path);
            DayResults dr = cmd_run_day(c, model, cfg, out_dir, jobs);
            int failures = 0;
            for (const auto& r : dr.rows)
                if (!r.ok) {
                    ++failures;
                    std::cerr << "hour " << r.hour << " " << r.variant << ": " << r.error
                              << "\n";
                }
            std::cout << "day run: " << dr.rows.size() - failures << "/" << dr.rows.size()
                      << " rows ok -> " << out_dir << "/day_results.csv\n";
        } else if (rep->parsed()) {
            if (results_path.empty()) results_path = out_dir + "/day_results.csv";
            std::ifstream in(results_path, std::ios::binary);
            if (!in) throw HarnessError("cannot open results: " + results_path);
            std::ostringstream ss;
            ss << in.rdbuf();
            auto rows = day_results_from_csv(ss.str());
            std::string report = cmd_report(rows);
            std::cout << report;
            std::ofstream out(out_dir + "/report.txt", std::ios::binary);
            out << report;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
