#pragma once

// Experiment orchestration: prior construction, initial learning on the
// training trials, the sequential loop over test trials for each learning
// mode, and report/summary emission.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ssbsl/bayes_core.hpp"
#include "ssbsl/classifier.hpp"
#include "ssbsl/csv_io.hpp"
#include "ssbsl/dataset.hpp"
#include "ssbsl/drift_sim.hpp"
#include "ssbsl/error.hpp"

namespace ssbsl {

inline constexpr std::uint64_t kDefaultSeed = 1;
inline constexpr double kDefaultThetaTh = 0.9;

struct PriorConfig {
    enum class WSource { TrainingCovariance, Identity, Explicit };
    /// How a training covariance becomes W: taken as W itself, or as
    /// W = cov^-1 / nu so that E[Lambda] = nu W equals the empirical precision.
    enum class WReading { Covariance, PrecisionMatched };
    enum class AlphaInit { HalfNormal, Uniform };

    std::optional<Eigen::VectorXd> m;  // zeros when unset
    double beta = 1.0;
    double nu_offset = 1.0;            // nu = D + nu_offset
    WSource w_source = WSource::TrainingCovariance;
    WReading w_reading = WReading::Covariance;
    Eigen::MatrixXd explicit_w;
    AlphaInit alpha_init = AlphaInit::HalfNormal;
    double alpha_value = 1.0;          // AlphaInit::Uniform
    std::uint64_t alpha_seed = kDefaultSeed;
};

/// Sample covariance (N - 1 denominator) of all feature vectors, labels ignored.
inline Eigen::MatrixXd pooled_covariance(std::span<const FeatureVector> xs) {
    if (xs.size() < 2) throw NumericalError("covariance needs at least two training samples");
    const auto d = xs.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& x : xs) {
        const Eigen::VectorXd c = x - mean;
        cov.noalias() += c * c.transpose();
    }
    cov /= static_cast<double>(xs.size() - 1);
    return 0.5 * (cov + cov.transpose());
}

/// Positive |N(0,1)| draws, one per class.
inline Eigen::VectorXd half_normal_alpha(std::size_t num_classes, std::uint64_t seed) {
    std::mt19937_64 rng(substream_seed(seed, 0, 0xa1fa));
    std::normal_distribution<double> normal;
    Eigen::VectorXd alpha(static_cast<Eigen::Index>(num_classes));
    for (Eigen::Index c = 0; c < alpha.size(); ++c) {
        double v = 0.0;
        while (v == 0.0) v = std::abs(normal(rng));
        alpha(c) = v;
    }
    return alpha;
}

namespace detail {

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(std::string(what) + " is not positive definite");
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    return 0.5 * (inv + inv.transpose());
}

} // namespace detail

inline ClassPosteriorState build_prior(const PriorConfig& cfg, std::span<const FeatureVector> train,
                                       std::size_t dim, std::size_t num_classes) {
    const auto d = static_cast<Eigen::Index>(dim);
    GaussWishartParams p;
    p.m = cfg.m.value_or(Eigen::VectorXd::Zero(d));
    if (p.m.size() != d) throw ConfigError("prior m has wrong dimension");
    p.beta = cfg.beta;
    p.nu = static_cast<double>(dim) + cfg.nu_offset;

    switch (cfg.w_source) {
    case PriorConfig::WSource::Identity:
        p.w_inv = Eigen::MatrixXd::Identity(d, d);
        break;
    case PriorConfig::WSource::Explicit:
        if (cfg.explicit_w.rows() != d || cfg.explicit_w.cols() != d) {
            throw ConfigError("explicit W has wrong shape");
        }
        p.w_inv = detail::spd_inverse(cfg.explicit_w, "explicit W");
        break;
    case PriorConfig::WSource::TrainingCovariance: {
        if (train.empty()) throw ConfigError("training-covariance prior needs training data");
        for (const auto& x : train) check_feature(x, dim);
        Eigen::MatrixXd cov = pooled_covariance(train);
        if (Eigen::LLT<Eigen::MatrixXd>(cov).info() != Eigen::Success) {
            const double ridge = 1e-8 * cov.trace() / static_cast<double>(dim);
            cov += ridge * Eigen::MatrixXd::Identity(d, d);
            if (!(ridge > 0.0) || Eigen::LLT<Eigen::MatrixXd>(cov).info() != Eigen::Success) {
                throw NumericalError(
                    "training covariance is singular even after a ridge of 1e-8*trace/D; "
                    "supply more varied training data or use an identity/explicit W");
            }
        }
        if (cfg.w_reading == PriorConfig::WReading::Covariance) {
            p.w_inv = detail::spd_inverse(cov, "training covariance");
        } else {
            p.w_inv = p.nu * cov;
        }
        break;
    }
    }

    DirichletParams mixing;
    if (cfg.alpha_init == PriorConfig::AlphaInit::HalfNormal) {
        mixing.alpha = half_normal_alpha(num_classes, cfg.alpha_seed);
    } else {
        mixing.alpha = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(num_classes), cfg.alpha_value);
    }
    try {
        return ClassPosteriorState::shared_prior(p, std::move(mixing));
    } catch (const InvalidStateError& e) {
        throw ConfigError(std::string("prior configuration is invalid: ") + e.what());
    }
}

struct FeatureDirSource {
    std::filesystem::path dir;  // holds trial_<id>.csv files
    std::optional<std::size_t> num_classes;
};

using DataSource = std::variant<DriftScenario, FeatureDirSource>;

struct ExperimentConfig {
    DataSource data;
    std::vector<int> train_trials;
    std::vector<int> test_trials;
    std::vector<std::string> modes{"frozen", "ss", "fs"};
    double theta_th = kDefaultThetaTh;
    std::uint64_t rng_seed = kDefaultSeed;
    PriorConfig prior;

    void validate() const {
        if (train_trials.empty()) throw ConfigError("no training trials");
        if (test_trials.empty()) throw ConfigError("no test trials");
        if (modes.empty()) throw ConfigError("no learning modes selected");
        for (std::size_t i = 1; i < test_trials.size(); ++i) {
            if (!(test_trials[i - 1] < test_trials[i])) {
                throw ConfigError("test trials must be strictly increasing");
            }
        }
        for (int t : train_trials) {
            if (std::find(test_trials.begin(), test_trials.end(), t) != test_trials.end()) {
                throw ConfigError("trial " + std::to_string(t) + " is both training and test");
            }
        }
        for (const auto& m : modes) (void)LearningMode::parse(m, theta_th);
    }
};

/// Train on trial 1, test on 2..T.
inline ExperimentConfig default_experiment(const DriftScenario& s, std::uint64_t seed = kDefaultSeed) {
    ExperimentConfig cfg;
    cfg.data = s;
    cfg.train_trials = {1};
    for (int t = 2; t <= s.trials; ++t) cfg.test_trials.push_back(t);
    cfg.rng_seed = seed;
    cfg.prior.alpha_seed = seed;
    return cfg;
}

struct TrialRecord {
    std::string mode;
    int trial = 0;
    std::optional<double> accuracy;
    std::size_t n_gated_in = 0;
    std::size_t n_gated_out = 0;
    double mean_confidence = 0.0;
};

struct ModeRun {
    std::string mode;
    std::vector<TrialRecord> trials;
    std::optional<GcmClassifier> final_classifier;

    /// Mean over trials that carry an accuracy; empty if none do.
    [[nodiscard]] std::optional<double> mean_accuracy() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : trials) {
            if (r.accuracy) {
                sum += *r.accuracy;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

struct ExperimentReport {
    std::vector<ModeRun> runs;

    [[nodiscard]] const ModeRun& run(const std::string& mode) const {
        for (const auto& r : runs)
            if (r.mode == mode) return r;
        throw ConfigError("report has no mode '" + mode + "'");
    }
};

/// Resolves the configured data into trial id -> dataset.
inline std::map<int, TrialDataset> load_trials(const ExperimentConfig& cfg) {
    std::vector<int> ids = cfg.train_trials;
    ids.insert(ids.end(), cfg.test_trials.begin(), cfg.test_trials.end());
    std::map<int, TrialDataset> out;
    if (const auto* s = std::get_if<DriftScenario>(&cfg.data)) {
        for (int t : ids) out.emplace(t, generate_trial(*s, t));
    } else {
        const auto& src = std::get<FeatureDirSource>(cfg.data);
        for (int t : ids) {
            out.emplace(t, io::read_trial_csv(src.dir / ("trial_" + std::to_string(t) + ".csv"), t));
        }
    }
    return out;
}

inline std::size_t infer_num_classes(const ExperimentConfig& cfg, const std::map<int, TrialDataset>& trials) {
    if (const auto* s = std::get_if<DriftScenario>(&cfg.data)) return s->num_classes;
    const auto& src = std::get<FeatureDirSource>(cfg.data);
    if (src.num_classes) return *src.num_classes;
    std::size_t hi = 0;
    for (const auto& [id, t] : trials) {
        if (!t.labels) continue;
        for (const auto& l : *t.labels) hi = std::max(hi, l.index() + 1);
    }
    if (hi == 0) throw ConfigError("cannot infer class count: no labels; set num_classes");
    return hi;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto trials = load_trials(cfg);
    const std::size_t num_classes = infer_num_classes(cfg, trials);

    std::vector<TrialDataset> train_sets;
    for (int t : cfg.train_trials) train_sets.push_back(trials.at(t));
    const auto train = concat_labeled(train_sets);
    if (train.empty()) throw ConfigError("training trials contain no samples");
    const std::size_t dim = static_cast<std::size_t>(train.front().x.size());
    std::vector<FeatureVector> train_x;
    train_x.reserve(train.size());
    for (const auto& s : train) train_x.push_back(s.x);

    const auto prior = build_prior(cfg.prior, train_x, dim, num_classes);
    const auto initial = fit_initial(train, prior);

    ExperimentReport report;
    for (const auto& mode_name : cfg.modes) {
        const auto mode = LearningMode::parse(mode_name, cfg.theta_th);
        ModeRun run;
        run.mode = mode.name();
        GcmClassifier clf = initial.with_mode(mode);
        for (int t : cfg.test_trials) {
            const auto& data = trials.at(t);
            if (mode.kind() == LearningMode::Kind::FullySupervised && !data.has_labels()) {
                throw MissingLabelError("fs mode needs labels for test trial " + std::to_string(t));
            }
            auto [next, outcome] = clf.process_trial(data);
            run.trials.push_back({run.mode, t, outcome.accuracy, outcome.n_gated_in,
                                  outcome.n_gated_out, outcome.mean_confidence});
            clf = std::move(next);
        }
        run.final_classifier = std::move(clf);
        report.runs.push_back(std::move(run));
    }
    return report;
}

// ---- Emission -------------------------------------------------------------

inline constexpr const char* kReportHeader = "mode,trial,accuracy,n_gated_in,n_gated_out,mean_conf";

inline std::string record_to_csv_row(const TrialRecord& r) {
    return r.mode + "," + std::to_string(r.trial) + "," +
           (r.accuracy ? io::format_real(*r.accuracy) : std::string()) + "," +
           std::to_string(r.n_gated_in) + "," + std::to_string(r.n_gated_out) + "," +
           io::format_real(r.mean_confidence);
}

inline std::string report_to_csv(const ExperimentReport& rep) {
    std::string out = std::string(kReportHeader) + "\n";
    for (const auto& run : rep.runs)
        for (const auto& r : run.trials) out += record_to_csv_row(r) + "\n";
    return out;
}

/// Inverse of report_to_csv (final classifiers are not part of the file).
inline ExperimentReport report_from_csv(std::string_view text) {
    ExperimentReport rep;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (header) {
            if (line != kReportHeader) throw ConfigError("unexpected report header '" + std::string(line) + "'");
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::size_t s = 0;
        while (true) {
            const auto c = line.find(',', s);
            cells.emplace_back(line.substr(s, c == std::string_view::npos ? c : c - s));
            if (c == std::string_view::npos) break;
            s = c + 1;
        }
        if (cells.size() != 6) throw ConfigError("report row needs 6 columns: '" + std::string(line) + "'");
        TrialRecord r;
        try {
            r.mode = cells[0];
            r.trial = std::stoi(cells[1]);
            if (!cells[2].empty()) r.accuracy = std::stod(cells[2]);
            r.n_gated_in = std::stoul(cells[3]);
            r.n_gated_out = std::stoul(cells[4]);
            r.mean_confidence = std::stod(cells[5]);
        } catch (const std::logic_error&) {
            throw ConfigError("malformed report row '" + std::string(line) + "'");
        }
        auto it = std::find_if(rep.runs.begin(), rep.runs.end(),
                               [&](const ModeRun& m) { return m.mode == r.mode; });
        if (it == rep.runs.end()) {
            rep.runs.push_back({r.mode, {}, std::nullopt});
            it = std::prev(rep.runs.end());
        }
        it->trials.push_back(std::move(r));
    }
    if (header) throw ConfigError("report is empty");
    return rep;
}

struct ModeSummary {
    std::string mode;
    std::optional<double> mean_accuracy;
    std::size_t num_reports = 0;  // reports that contributed an accuracy
};

/// Per-mode accuracy averaged over trials, then over reports. Modes keep
/// first-seen order.
inline std::vector<ModeSummary> summarize(std::span<const ExperimentReport> reports) {
    if (reports.empty()) throw ConfigError("nothing to summarize");
    std::vector<ModeSummary> out;
    std::vector<double> sums;
    for (const auto& rep : reports) {
        for (const auto& run : rep.runs) {
            auto it = std::find_if(out.begin(), out.end(),
                                   [&](const ModeSummary& m) { return m.mode == run.mode; });
            if (it == out.end()) {
                out.push_back({run.mode, std::nullopt, 0});
                sums.push_back(0.0);
                it = std::prev(out.end());
            }
            const auto k = static_cast<std::size_t>(it - out.begin());
            if (const auto acc = run.mean_accuracy()) {
                sums[k] += *acc;
                ++it->num_reports;
            }
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k].num_reports > 0) out[k].mean_accuracy = sums[k] / static_cast<double>(out[k].num_reports);
    }
    return out;
}

inline nlohmann::json summary_to_json(const std::vector<ModeSummary>& summary) {
    nlohmann::json j;
    j["schema_version"] = 1;
    auto modes = nlohmann::json::array();
    for (const auto& m : summary) {
        modes.push_back({{"mode", m.mode},
                         {"mean_accuracy", m.mean_accuracy ? nlohmann::json(*m.mean_accuracy) : nlohmann::json()},
                         {"num_reports", m.num_reports}});
    }
    j["modes"] = std::move(modes);
    return j;
}

inline std::string summary_to_csv(const std::vector<ModeSummary>& summary) {
    std::string out = "mode,mean_accuracy,num_reports\n";
    for (const auto& m : summary) {
        out += m.mode + "," + (m.mean_accuracy ? io::format_real(*m.mean_accuracy) : std::string()) + "," +
               std::to_string(m.num_reports) + "\n";
    }
    return out;
}

/// Wide table for plotting: one row per trial, one accuracy column per mode,
/// averaged over the given reports.
inline std::string accuracy_plot_csv(std::span<const ExperimentReport> reps) {
    std::vector<std::string> modes;
    std::map<int, std::map<std::string, std::pair<double, std::size_t>>> cells;
    for (const auto& rep : reps) {
        for (const auto& run : rep.runs) {
            if (std::find(modes.begin(), modes.end(), run.mode) == modes.end()) modes.push_back(run.mode);
            for (const auto& r : run.trials) {
                auto& cell = cells[r.trial][run.mode];
                if (r.accuracy) {
                    cell.first += *r.accuracy;
                    ++cell.second;
                }
            }
        }
    }
    std::string out = "trial";
    for (const auto& m : modes) out += "," + m;
    out += "\n";
    for (const auto& [trial, row] : cells) {
        out += std::to_string(trial);
        for (const auto& m : modes) {
            out += ",";
            const auto it = row.find(m);
            if (it != row.end() && it->second.second > 0) {
                out += io::format_real(it->second.first / static_cast<double>(it->second.second));
            }
        }
        out += "\n";
    }
    return out;
}

/// Long table: fraction of each trial used for learning, and mean confidence.
inline std::string gating_plot_csv(const ExperimentReport& rep) {
    std::string out = "mode,trial,gated_in_fraction,mean_conf\n";
    for (const auto& run : rep.runs) {
        for (const auto& r : run.trials) {
            const auto total = r.n_gated_in + r.n_gated_out;
            const double frac = total ? static_cast<double>(r.n_gated_in) / static_cast<double>(total) : 0.0;
            out += run.mode + "," + std::to_string(r.trial) + "," + io::format_real(frac) + "," +
                   io::format_real(r.mean_confidence) + "\n";
        }
    }
    return out;
}

/// report.csv + summary.json + summary.csv + plotdata/ under `dir`.
inline void write_report_bundle(const std::filesystem::path& dir, const ExperimentReport& rep) {
    const std::vector<ExperimentReport> one{rep};
    const auto summary = summarize(one);
    io::write_text_atomic(dir / "report.csv", report_to_csv(rep));
    io::write_json(dir / "summary.json", summary_to_json(summary));
    io::write_text_atomic(dir / "summary.csv", summary_to_csv(summary));
    io::write_text_atomic(dir / "plotdata" / "accuracy_by_trial.csv", accuracy_plot_csv(one));
    io::write_text_atomic(dir / "plotdata" / "gating_by_trial.csv", gating_plot_csv(rep));
}

// ---- Config documents -----------------------------------------------------

inline PriorConfig prior_config_from_json(const nlohmann::json& j, std::uint64_t seed) {
    PriorConfig p;
    p.alpha_seed = seed;
    if (j.is_null()) return p;
    if (j.contains("m") && !j.at("m").is_null()) {
        const auto m = j.at("m").get<std::vector<double>>();
        p.m = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    }
    p.beta = j.value("beta", p.beta);
    p.nu_offset = j.value("nu_offset", p.nu_offset);
    if (j.contains("w_source")) {
        const auto& w = j.at("w_source");
        if (w.is_string()) {
            const auto s = w.get<std::string>();
            if (s == "training_covariance") p.w_source = PriorConfig::WSource::TrainingCovariance;
            else if (s == "identity") p.w_source = PriorConfig::WSource::Identity;
            else throw ConfigError("unknown w_source '" + s + "'");
        } else {
            const auto rows = w.at("explicit").get<std::vector<std::vector<double>>>();
            const auto d = static_cast<Eigen::Index>(rows.size());
            p.explicit_w.resize(d, d);
            for (Eigen::Index r = 0; r < d; ++r) {
                if (rows[static_cast<std::size_t>(r)].size() != rows.size()) throw ConfigError("explicit W must be square");
                for (Eigen::Index c = 0; c < d; ++c) p.explicit_w(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            }
            p.w_source = PriorConfig::WSource::Explicit;
        }
    }
    if (j.contains("w_reading")) {
        const auto s = j.at("w_reading").get<std::string>();
        if (s == "covariance") p.w_reading = PriorConfig::WReading::Covariance;
        else if (s == "precision_matched") p.w_reading = PriorConfig::WReading::PrecisionMatched;
        else throw ConfigError("unknown w_reading '" + s + "'");
    }
    if (j.contains("alpha_init")) {
        const auto& a = j.at("alpha_init");
        if (a.is_string() && a.get<std::string>() == "half_normal") {
            p.alpha_init = PriorConfig::AlphaInit::HalfNormal;
        } else if (a.is_object() && a.contains("uniform")) {
            p.alpha_init = PriorConfig::AlphaInit::Uniform;
            p.alpha_value = a.at("uniform").get<double>();
        } else {
            throw ConfigError("alpha_init must be \"half_normal\" or {\"uniform\": value}");
        }
    }
    return p;
}

/// Experiment document (schema_version 1). Relative feature_dir paths resolve
/// against `base_dir`.
inline ExperimentConfig experiment_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir = {}) {
    try {
        if (j.value("schema_version", 0) != 1) throw ConfigError("experiment config needs \"schema_version\": 1");
        ExperimentConfig cfg;
        cfg.rng_seed = j.value("rng_seed", kDefaultSeed);
        cfg.theta_th = j.value("theta_th", kDefaultThetaTh);
        if (j.contains("modes")) cfg.modes = j.at("modes").get<std::vector<std::string>>();

        const auto& data = j.at("data");
        if (data.contains("scenario")) {
            const auto& sj = data.at("scenario");
            if (sj.is_string()) {
                const auto name = sj.get<std::string>();
                if (name == "preset:paper") cfg.data = crossing_drift_scenario(cfg.rng_seed);
                else if (name == "preset:mild") cfg.data = mild_drift_scenario(cfg.rng_seed);
                else throw ConfigError("unknown scenario '" + name + "'");
            } else {
                cfg.data = scenario_from_json(sj);
            }
        } else if (data.contains("feature_dir")) {
            FeatureDirSource src;
            src.dir = data.at("feature_dir").get<std::string>();
            if (src.dir.is_relative() && !base_dir.empty()) src.dir = base_dir / src.dir;
            if (data.contains("num_classes")) src.num_classes = data.at("num_classes").get<std::size_t>();
            cfg.data = src;
        } else {
            throw ConfigError("data needs \"scenario\" or \"feature_dir\"");
        }

        if (j.contains("train_trials")) cfg.train_trials = j.at("train_trials").get<std::vector<int>>();
        if (j.contains("test_trials")) cfg.test_trials = j.at("test_trials").get<std::vector<int>>();
        if (const auto* s = std::get_if<DriftScenario>(&cfg.data)) {
            if (cfg.train_trials.empty()) cfg.train_trials = {1};
            if (cfg.test_trials.empty()) {
                const int last_train = *std::max_element(cfg.train_trials.begin(), cfg.train_trials.end());
                for (int t = last_train + 1; t <= s->trials; ++t) cfg.test_trials.push_back(t);
            }
        }
        cfg.prior = prior_config_from_json(j.value("prior", nlohmann::json()), cfg.rng_seed);
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
}

} // namespace ssbsl
