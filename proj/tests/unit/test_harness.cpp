#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include <unistd.h>

#include "ssbsl/harness.hpp"
#include "oracles/reference_math.hpp"
#include "test_support.hpp"

using namespace ssbsl;
namespace fs = std::filesystem;

namespace {

std::vector<FeatureVector> gaussian_draws(std::mt19937_64& rng, const Eigen::MatrixXd& cov, std::size_t n) {
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
    std::vector<FeatureVector> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(l * testing_support::random_vector(rng, cov.rows()));
    return out;
}

/// Rows of report.csv without the mode column.
std::vector<std::string> rows_without_mode(const ModeRun& run) {
    std::vector<std::string> out;
    for (const auto& r : run.trials) {
        const auto row = record_to_csv_row(r);
        out.push_back(row.substr(row.find(',')));
    }
    return out;
}

fs::path fresh_temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ssbsl_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST(BuildPrior, DegreesOfFreedomAndIdentity) {
    PriorConfig cfg;
    cfg.w_source = PriorConfig::WSource::Identity;
    const auto p = build_prior(cfg, {}, 4, 3);
    EXPECT_EQ(p.params(0).nu, 5.0);
    EXPECT_EQ(p.params(0).beta, 1.0);
    EXPECT_EQ(p.params(2).w_inv, Eigen::MatrixXd::Identity(4, 4));
    EXPECT_TRUE(p.params(1).m.isZero());
    EXPECT_EQ(p.mixing().alpha.size(), 3);
    EXPECT_TRUE((p.mixing().alpha.array() > 0.0).all());
}

TEST(BuildPrior, TrainingCovarianceReadings) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd sigma = testing_support::random_spd(rng, 4, 0.5, 3.0);
    const auto xs = gaussian_draws(rng, sigma, 100000);
    PriorConfig cfg;
    const auto lit = build_prior(cfg, xs, 4, 2);
    const Eigen::MatrixXd w = lit.params(0).w_inv.inverse();
    EXPECT_LT((w - sigma).norm() / sigma.norm(), 0.02);

    cfg.w_reading = PriorConfig::WReading::PrecisionMatched;
    const auto pm = build_prior(cfg, xs, 4, 2);
    const Eigen::MatrixXd expected_precision = pm.params(0).nu * pm.params(0).w_inv.inverse();
    const Eigen::MatrixXd whitened = sigma * expected_precision;
    EXPECT_LT((whitened - Eigen::MatrixXd::Identity(4, 4)).norm() / 2.0, 0.02);
}

TEST(BuildPrior, SingularCovariance) {
    std::vector<FeatureVector> same(10, Eigen::Vector2d(1.0, 2.0));
    EXPECT_THROW(build_prior({}, same, 2, 2), NumericalError);
    // Rank one but nonzero: the ridge rescues it.
    std::vector<FeatureVector> line;
    for (int i = 0; i < 10; ++i) line.push_back(Eigen::Vector2d(i, 2.0 * i));
    const auto p = build_prior({}, line, 2, 2);
    EXPECT_NO_THROW(p.params(0).validate());
    EXPECT_THROW(build_prior({}, {}, 2, 2), ConfigError);
}

TEST(BuildPrior, AlphaInitialization) {
    EXPECT_EQ(half_normal_alpha(6, 3), half_normal_alpha(6, 3));
    EXPECT_NE(half_normal_alpha(6, 3), half_normal_alpha(6, 4));
    PriorConfig cfg;
    cfg.w_source = PriorConfig::WSource::Identity;
    cfg.alpha_init = PriorConfig::AlphaInit::Uniform;
    cfg.alpha_value = 2.5;
    EXPECT_EQ(build_prior(cfg, {}, 2, 3).mixing().alpha, Eigen::Vector3d::Constant(2.5));
    cfg.alpha_value = 0.0;
    EXPECT_THROW(build_prior(cfg, {}, 2, 3), ConfigError);
}

TEST(RunExperiment, FrozenOnStationaryDataMatchesGaussianError) {
    // Two unit-covariance classes at +-1 with a stationary mean: Bayes accuracy Phi(1).
    DriftScenario s;
    s.num_classes = 2;
    s.dim = 2;
    s.points_per_class = 2000;
    s.trials = 5;
    s.rng_seed = 17;
    s.classes.push_back({Eigen::Vector2d(-1, 0), Eigen::Vector2d::Zero(), Eigen::MatrixXd::Identity(2, 2)});
    s.classes.push_back({Eigen::Vector2d(1, 0), Eigen::Vector2d::Zero(), Eigen::MatrixXd::Identity(2, 2)});
    auto cfg = default_experiment(s, 17);
    cfg.modes = {"frozen"};
    const auto rep = run_experiment(cfg);
    const double p = oracle::normal_cdf(1.0);
    const double se = std::sqrt(p * (1 - p) / 4000.0);
    for (const auto& r : rep.run("frozen").trials) EXPECT_NEAR(*r.accuracy, p, 4 * se + 0.01) << r.trial;
}

TEST(RunExperiment, FrozenOnCrossingDriftTracksClosedForm) {
    // The frozen boundary sits near x = 0; class 0 at -6 + 1.2 t is right with
    // probability Phi((6 - 1.2 t) / sqrt(3)), and class 1 mirrors it.
    const auto rep = run_experiment(default_experiment(crossing_drift_scenario(1), 1));
    for (const auto& r : rep.run("frozen").trials) {
        const double p = oracle::normal_cdf((6.0 - 1.2 * r.trial) / std::sqrt(3.0));
        const double se = std::sqrt(p * (1 - p) / 600.0);
        EXPECT_NEAR(*r.accuracy, p, 4 * se + 0.02) << r.trial;
    }
    const auto& last = rep.run("frozen").trials.back();
    EXPECT_EQ(last.trial, 10);
    EXPECT_LE(*last.accuracy, 0.05);
}

TEST(RunExperiment, MatchesGoldenReference) {
    const auto rep = run_experiment(default_experiment(crossing_drift_scenario(1), 1));
    const auto golden = report_from_csv(io::read_text(fs::path(SSBSL_TEST_DATA_DIR) / "crossing_drift_seed1_report.csv"));
    ASSERT_EQ(rep.runs.size(), golden.runs.size());
    for (std::size_t m = 0; m < rep.runs.size(); ++m) {
        const auto& a = rep.runs[m];
        const auto& b = golden.runs[m];
        EXPECT_EQ(a.mode, b.mode);
        ASSERT_EQ(a.trials.size(), b.trials.size());
        for (std::size_t t = 0; t < a.trials.size(); ++t) {
            EXPECT_EQ(a.trials[t].trial, b.trials[t].trial);
            EXPECT_EQ(a.trials[t].accuracy, b.trials[t].accuracy);
            EXPECT_EQ(a.trials[t].n_gated_in, b.trials[t].n_gated_in);
            EXPECT_NEAR(a.trials[t].mean_confidence, b.trials[t].mean_confidence, 1e-12);
        }
    }
}

TEST(RunExperiment, MildDriftStaysAccurate) {
    const auto rep = run_experiment(default_experiment(mild_drift_scenario(1), 1));
    for (const auto& r : rep.run("ss").trials) EXPECT_GE(*r.accuracy, 0.95) << r.trial;
}

TEST(RunExperiment, ThetaOneReportEqualsFrozen) {
    auto cfg = default_experiment(crossing_drift_scenario(5), 5);
    cfg.theta_th = 1.0;
    const auto rep = run_experiment(cfg);
    EXPECT_EQ(rows_without_mode(rep.run("ss")), rows_without_mode(rep.run("frozen")));
    EXPECT_TRUE(rep.run("ss").final_classifier->state() == rep.run("frozen").final_classifier->state());
}

TEST(RunExperiment, ModesAreIsolatedAndReproducible) {
    auto cfg = default_experiment(random_drift_scenario(3, 3, 2, 6, 80), 3);
    const auto a = run_experiment(cfg);
    cfg.modes = {"fs", "frozen", "ss"};
    const auto b = run_experiment(cfg);
    for (const auto* m : {"frozen", "ss", "fs"}) EXPECT_EQ(rows_without_mode(a.run(m)), rows_without_mode(b.run(m)));
    cfg.modes = {"frozen", "ss", "fs"};
    EXPECT_EQ(report_to_csv(a), report_to_csv(run_experiment(cfg)));
}

TEST(RunExperiment, FeatureDirectoryEqualsScenario) {
    const auto s = random_drift_scenario(9, 4, 3, 5, 60);
    const auto dir = fresh_temp_dir("featdir");
    for (int t = 1; t <= s.trials; ++t) {
        io::write_text_atomic(dir / ("trial_" + std::to_string(t) + ".csv"), io::trial_to_csv(generate_trial(s, t)));
    }
    auto from_sim = default_experiment(s, 9);
    auto from_dir = from_sim;
    from_dir.data = FeatureDirSource{dir, std::nullopt};
    EXPECT_EQ(report_to_csv(run_experiment(from_sim)), report_to_csv(run_experiment(from_dir)));
    fs::remove_all(dir);
}

TEST(RunExperiment, UnlabeledTestTrialsRejectFullySupervised) {
    const auto s = crossing_drift_scenario(2);
    const auto dir = fresh_temp_dir("unlabeled");
    for (int t = 1; t <= 3; ++t) {
        auto trial = generate_trial(s, t);
        if (t > 1) trial.labels.reset();
        io::write_text_atomic(dir / ("trial_" + std::to_string(t) + ".csv"), io::trial_to_csv(trial));
    }
    ExperimentConfig cfg;
    cfg.data = FeatureDirSource{dir, std::nullopt};
    cfg.train_trials = {1};
    cfg.test_trials = {2, 3};
    cfg.modes = {"frozen", "ss"};
    const auto rep = run_experiment(cfg);
    EXPECT_FALSE(rep.run("ss").trials[0].accuracy.has_value());
    EXPECT_FALSE(rep.run("ss").mean_accuracy().has_value());
    cfg.modes = {"fs"};
    EXPECT_THROW(run_experiment(cfg), MissingLabelError);
    fs::remove_all(dir);
}

TEST(Report, CsvRoundTripAndSummary) {
    ExperimentReport a;
    a.runs.push_back({"frozen", {{"frozen", 2, 0.5, 0, 10, 0.9}, {"frozen", 3, 0.7, 0, 10, 0.8}}, std::nullopt});
    a.runs.push_back({"ss", {{"ss", 2, 0.9, 7, 3, 0.95}, {"ss", 3, std::nullopt, 0, 10, 0.5}}, std::nullopt});
    ExperimentReport b;
    b.runs.push_back({"frozen", {{"frozen", 2, 0.2, 0, 10, 0.9}}, std::nullopt});

    const auto back = report_from_csv(report_to_csv(a));
    EXPECT_EQ(report_to_csv(back), report_to_csv(a));
    EXPECT_FALSE(back.run("ss").trials[1].accuracy.has_value());

    const std::vector<ExperimentReport> both{a, b};
    const auto sum = summarize(both);
    ASSERT_EQ(sum.size(), 2u);
    EXPECT_EQ(sum[0].mode, "frozen");
    EXPECT_DOUBLE_EQ(*sum[0].mean_accuracy, (0.6 + 0.2) / 2.0);
    EXPECT_EQ(sum[0].num_reports, 2u);
    EXPECT_DOUBLE_EQ(*sum[1].mean_accuracy, 0.9);
    EXPECT_EQ(sum[1].num_reports, 1u);

    const auto plot = accuracy_plot_csv(both);
    EXPECT_EQ(plot, "trial,frozen,ss\n2,0.34999999999999998,0.90000000000000002\n3,0.69999999999999996,\n");
    EXPECT_THROW(report_from_csv(""), ConfigError);
    EXPECT_THROW(report_from_csv("mode,trial\nss,1\n"), ConfigError);
}

TEST(Report, BundleLayout) {
    auto cfg = default_experiment(mild_drift_scenario(1), 1);
    const auto dir = fresh_temp_dir("bundle");
    write_report_bundle(dir, run_experiment(cfg));
    for (const auto* f : {"report.csv", "summary.json", "summary.csv", "plotdata/accuracy_by_trial.csv",
                          "plotdata/gating_by_trial.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto j = io::read_json(dir / "summary.json");
    EXPECT_EQ(j.at("schema_version"), 1);
    EXPECT_EQ(j.at("modes").size(), 3u);
    fs::remove_all(dir);
}

TEST(Config, ParsesExperimentDocuments) {
    const auto j = nlohmann::json::parse(R"({
        "schema_version": 1, "rng_seed": 4, "theta_th": 0.8, "modes": ["ss"],
        "data": {"scenario": "preset:mild"},
        "prior": {"beta": 2.0, "w_source": "identity", "alpha_init": {"uniform": 1.5}}
    })");
    const auto cfg = experiment_from_json(j);
    EXPECT_EQ(cfg.rng_seed, 4u);
    EXPECT_EQ(cfg.theta_th, 0.8);
    EXPECT_EQ(cfg.train_trials, std::vector<int>{1});
    EXPECT_EQ(cfg.test_trials, (std::vector<int>{2, 3, 4, 5}));
    EXPECT_EQ(std::get<DriftScenario>(cfg.data).rng_seed, 4u);
    EXPECT_EQ(cfg.prior.beta, 2.0);
    EXPECT_EQ(cfg.prior.w_source, PriorConfig::WSource::Identity);
    EXPECT_EQ(cfg.prior.alpha_value, 1.5);

    const auto fd = experiment_from_json(nlohmann::json::parse(R"({
        "schema_version": 1, "data": {"feature_dir": "feats", "num_classes": 6},
        "train_trials": [1, 2], "test_trials": [3, 4]})"),
                                         "/base");
    EXPECT_EQ(std::get<FeatureDirSource>(fd.data).dir, fs::path("/base/feats"));
    EXPECT_EQ(std::get<FeatureDirSource>(fd.data).num_classes, 6u);
}

TEST(Config, RejectsBadDocuments) {
    const auto parse = [](const char* text) { return experiment_from_json(nlohmann::json::parse(text)); };
    EXPECT_THROW(parse(R"({"data": {"scenario": "preset:paper"}})"), ConfigError);
    EXPECT_THROW(parse(R"({"schema_version": 1, "data": {}})"), ConfigError);
    EXPECT_THROW(parse(R"({"schema_version": 1, "data": {"scenario": "preset:x"}})"), ConfigError);
    EXPECT_THROW(parse(R"({"schema_version": 1, "data": {"scenario": "preset:paper"}, "train_trials": [1, 2],
                           "test_trials": [2, 3]})"),
                 ConfigError);
    EXPECT_THROW(parse(R"({"schema_version": 1, "data": {"scenario": "preset:paper"}, "theta_th": 2})"),
                 ConfigError);
    EXPECT_THROW(parse(R"({"schema_version": 1, "data": {"scenario": "preset:paper"}, "modes": ["x"]})"),
                 ConfigError);
    EXPECT_THROW(parse(R"({"schema_version": 1, "data": {"feature_dir": "d"}, "train_trials": [1]})"),
                 ConfigError);
    EXPECT_THROW(parse(R"({"schema_version": 1, "data": {"scenario": "preset:paper"}, "prior": {"w_reading": "x"}})"),
                 ConfigError);
}
