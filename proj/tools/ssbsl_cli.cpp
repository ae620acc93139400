// ssbsl: command-line front end.
//
//   ssbsl simulate --scenario preset:paper --out data/ --seed 7
//   ssbsl features --in rec.csv --meta rec.json --out feat.csv
//   ssbsl train    --scenario preset:paper --out model.gcm.json
//   ssbsl run      --scenario preset:paper --modes frozen,ss,fs --out results/
//   ssbsl report   --in results/report.csv --out summary/
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssbsl/ssbsl.hpp"

namespace fs = std::filesystem;
using namespace ssbsl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<int> parse_trials(const std::string& s) {
    std::vector<int> out;
    for (const auto& item : split_list(s)) {
        const auto dash = item.find('-');
        try {
            if (dash != std::string::npos && dash > 0) {
                const int lo = std::stoi(item.substr(0, dash));
                const int hi = std::stoi(item.substr(dash + 1));
                for (int t = lo; t <= hi; ++t) out.push_back(t);
            } else {
                out.push_back(std::stoi(item));
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad trial list '" + s + "'");
        }
    }
    return out;
}

/// "preset:paper" / "preset:mild" or a path to a scenario JSON file.
DriftScenario load_scenario(const std::string& spec, std::optional<std::uint64_t> seed) {
    DriftScenario s;
    const std::uint64_t preset_seed = seed.value_or(kDefaultSeed);
    if (spec == "preset:paper") {
        s = crossing_drift_scenario(preset_seed);
    } else if (spec == "preset:mild") {
        s = mild_drift_scenario(preset_seed);
    } else if (spec.starts_with("preset:")) {
        throw ConfigError("unknown scenario preset '" + spec.substr(7) + "'");
    } else {
        s = scenario_from_json(io::read_json(spec));
        if (seed) s.rng_seed = *seed;
    }
    s.validate();
    return s;
}

struct DataOptions {
    std::string scenario;
    std::string data_dir;
    std::optional<std::size_t> num_classes;
    std::string train_trials;
    std::string test_trials;
    std::optional<std::uint64_t> seed;
    std::string prior_path;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
    cmd->add_option("--scenario", o.scenario, "preset:paper, preset:mild or a scenario JSON file");
    cmd->add_option("--data", o.data_dir, "directory of trial_<id>.csv feature files");
    cmd->add_option("--num-classes", o.num_classes, "class count (feature data only; inferred from labels otherwise)");
    cmd->add_option("--train-trials", o.train_trials, "training trial ids, e.g. 1,2 or 1-2");
    cmd->add_option("--test-trials", o.test_trials, "test trial ids in order, e.g. 3-20");
    cmd->add_option("--seed", o.seed, "RNG seed for data generation and the alpha prior");
    cmd->add_option("--prior", o.prior_path, "JSON file with the prior block of an experiment config");
}

ExperimentConfig config_from_options(const DataOptions& o, bool need_test_trials) {
    if (!o.scenario.empty() && !o.data_dir.empty()) throw ConfigError("give --scenario or --data, not both");
    const std::uint64_t seed = o.seed.value_or(kDefaultSeed);
    ExperimentConfig cfg;
    if (!o.data_dir.empty()) {
        if (o.train_trials.empty()) throw ConfigError("--data needs --train-trials");
        if (need_test_trials && o.test_trials.empty()) throw ConfigError("--data needs --test-trials");
        cfg.data = FeatureDirSource{o.data_dir, o.num_classes};
        cfg.rng_seed = seed;
    } else {
        cfg = default_experiment(load_scenario(o.scenario.empty() ? "preset:paper" : o.scenario, o.seed), seed);
    }
    if (!o.train_trials.empty()) {
        cfg.train_trials = parse_trials(o.train_trials);
        if (const auto* s = std::get_if<DriftScenario>(&cfg.data); s && o.test_trials.empty()) {
            cfg.test_trials.clear();
            const int last = *std::max_element(cfg.train_trials.begin(), cfg.train_trials.end());
            for (int t = last + 1; t <= s->trials; ++t) cfg.test_trials.push_back(t);
        }
    }
    if (!o.test_trials.empty()) cfg.test_trials = parse_trials(o.test_trials);
    const auto prior_json = o.prior_path.empty() ? nlohmann::json() : io::read_json(o.prior_path);
    cfg.prior = prior_config_from_json(prior_json, seed);
    return cfg;
}

int cmd_simulate(const std::string& scenario, const std::string& out, std::optional<std::uint64_t> seed,
                 bool to_stdout) {
    const auto s = load_scenario(scenario, seed);
    const fs::path dir(out);
    for (int t = 1; t <= s.trials; ++t) {
        const auto csv = io::trial_to_csv(generate_trial(s, t));
        io::write_text_atomic(dir / ("trial_" + std::to_string(t) + ".csv"), csv);
        if (to_stdout) std::cout << csv;
    }
    io::write_json(dir / "scenario.json", scenario_to_json(s));
    return kExitOk;
}

int cmd_features(const std::string& in, const std::string& meta, const std::string& out, double cutoff,
                 double trim, bool to_stdout) {
    const auto rec = io::recording_from_csv(io::read_text(in), io::read_json(meta));
    const auto feats = extract_features(rec, {cutoff, trim});
    const auto csv = io::trial_to_csv(feats);
    if (!out.empty()) io::write_text_atomic(out, csv);
    if (to_stdout) std::cout << csv;
    return kExitOk;
}

int cmd_train(const DataOptions& o, const std::string& out, const std::string& mode, double theta) {
    auto cfg = config_from_options(o, false);
    cfg.test_trials.clear();
    const auto trials = load_trials(cfg);
    const std::size_t num_classes = infer_num_classes(cfg, trials);
    std::vector<TrialDataset> sets;
    for (int t : cfg.train_trials) sets.push_back(trials.at(t));
    const auto train = concat_labeled(sets);
    if (train.empty()) throw ConfigError("training trials contain no samples");
    std::vector<FeatureVector> xs;
    for (const auto& s : train) xs.push_back(s.x);
    const auto prior = build_prior(cfg.prior, xs, static_cast<std::size_t>(xs.front().size()), num_classes);
    const auto clf = fit_initial(train, prior, LearningMode::parse(mode, theta));
    io::write_json(out, checkpoint_to_json(clf));
    return kExitOk;
}

int cmd_run(const std::string& config_path, const DataOptions& o, const std::string& modes,
            std::optional<double> theta, const std::string& out, bool to_stdout) {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
        const fs::path p(config_path);
        cfg = experiment_from_json(io::read_json(p), p.parent_path());
    } else {
        cfg = config_from_options(o, true);
    }
    if (!modes.empty()) cfg.modes = split_list(modes);
    if (theta) cfg.theta_th = *theta;
    const auto report = run_experiment(cfg);
    write_report_bundle(out, report);
    if (to_stdout) std::cout << report_to_csv(report);
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out, bool to_stdout) {
    std::vector<ExperimentReport> reports;
    for (const auto& in : inputs) {
        const fs::path p = fs::is_directory(in) ? fs::path(in) / "report.csv" : fs::path(in);
        reports.push_back(report_from_csv(io::read_text(p)));
    }
    const auto summary = summarize(reports);
    const fs::path dir(out);
    io::write_json(dir / "summary.json", summary_to_json(summary));
    io::write_text_atomic(dir / "summary.csv", summary_to_csv(summary));
    io::write_text_atomic(dir / "plotdata" / "accuracy_by_trial.csv", accuracy_plot_csv(reports));
    if (to_stdout) std::cout << summary_to_csv(summary);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence-gated Bayesian sequential learning for Gaussian classification"};
    app.require_subcommand(1);
    bool to_stdout = false;
    app.add_flag("--stdout", to_stdout, "also print the primary data output to stdout");

    auto* simulate = app.add_subcommand("simulate", "generate drifting-Gaussian trial CSVs");
    std::string sim_scenario = "preset:paper", sim_out;
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--scenario", sim_scenario, "preset:paper, preset:mild or a scenario JSON file");
    simulate->add_option("--out", sim_out, "output directory")->required();
    simulate->add_option("--seed", sim_seed, "RNG seed (overrides the scenario's)");
    simulate->add_flag("--stdout", to_stdout);

    auto* features = app.add_subcommand("features", "rectify, low-pass and trim a raw recording");
    std::string feat_in, feat_meta, feat_out;
    double cutoff = 1.0, trim = 0.10;
    features->add_option("--in", feat_in, "recording CSV (ch1..chD)")->required();
    features->add_option("--meta", feat_meta, "sidecar JSON {sample_rate_hz, trial_id, motion_label?}")->required();
    features->add_option("--out", feat_out, "feature CSV to write");
    features->add_option("--cutoff-hz", cutoff, "low-pass cutoff")->capture_default_str();
    features->add_option("--trim", trim, "leading fraction to drop")->capture_default_str();
    features->add_flag("--stdout", to_stdout);

    auto* train = app.add_subcommand("train", "initial learning; writes a .gcm.json checkpoint");
    DataOptions train_opts;
    std::string train_out, train_mode = "ss";
    double train_theta = kDefaultThetaTh;
    add_data_options(train, train_opts);
    train->add_option("--out", train_out, "checkpoint path (.gcm.json)")->required();
    train->add_option("--mode", train_mode, "frozen | ss | fs")->capture_default_str();
    train->add_option("--theta", train_theta, "confidence threshold")->capture_default_str();

    auto* run = app.add_subcommand("run", "full experiment; writes report.csv, summary.json, plotdata/");
    DataOptions run_opts;
    std::string run_config, run_modes, run_out;
    std::optional<double> run_theta;
    add_data_options(run, run_opts);
    run->add_option("--config", run_config, "experiment config JSON");
    run->add_option("--modes", run_modes, "comma list of frozen, ss, fs");
    run->add_option("--theta", run_theta, "confidence threshold for ss");
    run->add_option("--out", run_out, "output directory")->required();
    run->add_flag("--stdout", to_stdout);

    auto* report = app.add_subcommand("report", "summarize report.csv files and emit plot data");
    std::vector<std::string> report_in;
    std::string report_out;
    report->add_option("--in", report_in, "one or more report.csv files or run directories")->required();
    report->add_option("--out", report_out, "output directory")->required();
    report->add_flag("--stdout", to_stdout);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim_scenario, sim_out, sim_seed, to_stdout);
        if (*features) return cmd_features(feat_in, feat_meta, feat_out, cutoff, trim, to_stdout);
        if (*train) return cmd_train(train_opts, train_out, train_mode, train_theta);
        if (*run) return cmd_run(run_config, run_opts, run_modes, run_theta, run_out, to_stdout);
        if (*report) return cmd_report(report_in, report_out, to_stdout);
    } catch (const NumericalError& e) {
        std::cerr << "ssbsl: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const InvalidStateError& e) {
        std::cerr << "ssbsl: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "ssbsl: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "ssbsl: bad JSON: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "ssbsl: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
