#pragma once

// Gaussian classification model driven trial by trial. Each trial is predicted
// with the posterior frozen at the end of the previous trial; afterwards the
// posterior absorbs the trial according to the learning mode:
//   Frozen          no update
//   SemiSupervised  confidence-gated pseudo-labels (conf > theta, strict)
//   FullySupervised every sample with its true label

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssbsl/bayes_core.hpp"
#include "ssbsl/dataset.hpp"
#include "ssbsl/error.hpp"
#include "ssbsl/state_json.hpp"

namespace ssbsl {

struct Prediction {
    Eigen::VectorXd probs;
    ClassLabel predicted_class;
    double confidence = 0.0;
};

/// Argmax with lowest-index tie-break; confidence is the winning probability.
inline Prediction make_prediction(Eigen::VectorXd probs) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.size(); ++c) {
        if (probs(c) > probs(best)) best = c;
    }
    const double conf = probs(best);
    return {std::move(probs), ClassLabel(static_cast<std::size_t>(best)), conf};
}

class LearningMode {
public:
    enum class Kind { Frozen, SemiSupervised, FullySupervised };

    static LearningMode frozen() { return LearningMode(Kind::Frozen, 0.0); }
    static LearningMode fully_supervised() { return LearningMode(Kind::FullySupervised, 0.0); }
    static LearningMode semi_supervised(double theta_th) {
        if (!(theta_th >= 0.0 && theta_th <= 1.0)) {
            throw ConfigError("confidence threshold must lie in [0, 1], got " +
                              std::to_string(theta_th));
        }
        return LearningMode(Kind::SemiSupervised, theta_th);
    }

    /// Parses "frozen" | "ss" | "fs" (long names accepted too).
    static LearningMode parse(std::string_view name, double theta_th) {
        if (name == "frozen" || name == "gcm") return frozen();
        if (name == "ss" || name == "ss-bsl" || name == "semi") return semi_supervised(theta_th);
        if (name == "fs" || name == "fs-bsl" || name == "full") return fully_supervised();
        throw ConfigError("unknown learning mode '" + std::string(name) + "'");
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    /// Only meaningful for SemiSupervised.
    [[nodiscard]] double theta_th() const noexcept { return theta_; }

    [[nodiscard]] std::string name() const {
        switch (kind_) {
        case Kind::Frozen: return "frozen";
        case Kind::SemiSupervised: return "ss";
        case Kind::FullySupervised: return "fs";
        }
        return "?";
    }

    friend bool operator==(const LearningMode&, const LearningMode&) = default;

private:
    LearningMode(Kind k, double theta) : kind_(k), theta_(theta) {}

    Kind kind_;
    double theta_;
};

struct TrialOutcome {
    int trial_id = 0;
    std::vector<Prediction> predictions;
    std::size_t n_gated_in = 0;
    std::size_t n_gated_out = 0;
    std::optional<double> accuracy;
    double mean_confidence = 0.0;
};

class GcmClassifier {
public:
    GcmClassifier(ClassPosteriorState state, LearningMode mode, std::size_t trial_counter = 0)
        : state_(std::move(state)), mode_(mode), trial_counter_(trial_counter) {}

    [[nodiscard]] const ClassPosteriorState& state() const noexcept { return state_; }
    [[nodiscard]] const LearningMode& mode() const noexcept { return mode_; }
    [[nodiscard]] std::size_t trial_counter() const noexcept { return trial_counter_; }

    [[nodiscard]] Prediction predict(const FeatureVector& x) const {
        return make_prediction(class_posterior(state_, x));
    }

    /// Same classifier, different learning mode (state and counter kept).
    [[nodiscard]] GcmClassifier with_mode(LearningMode mode) const {
        return {state_, mode, trial_counter_};
    }

    /// Predicts the whole trial, then applies one update. Returns the
    /// advanced classifier and the trial's outcome.
    [[nodiscard]] std::pair<GcmClassifier, TrialOutcome> process_trial(const TrialDataset& trial) const {
        if (trial.empty()) throw ConfigError("trial " + std::to_string(trial.trial_id) + " is empty");
        if (trial.labels && trial.labels->size() != trial.size()) {
            throw DimensionError("trial " + std::to_string(trial.trial_id) +
                                 " has mismatched label count");
        }
        if (mode_.kind() == LearningMode::Kind::FullySupervised && !trial.has_labels()) {
            throw MissingLabelError("fully supervised learning needs labels for trial " +
                                    std::to_string(trial.trial_id));
        }

        TrialOutcome out;
        out.trial_id = trial.trial_id;
        out.predictions.reserve(trial.size());
        double conf_sum = 0.0;
        for (const auto& x : trial.features) {
            out.predictions.push_back(predict(x));
            conf_sum += out.predictions.back().confidence;
        }
        out.mean_confidence = conf_sum / static_cast<double>(trial.size());

        if (trial.labels) {
            std::size_t correct = 0;
            for (std::size_t n = 0; n < trial.size(); ++n) {
                if (out.predictions[n].predicted_class == (*trial.labels)[n]) ++correct;
            }
            out.accuracy = static_cast<double>(correct) / static_cast<double>(trial.size());
        }

        const std::size_t dim = state_.dim();
        const std::size_t num_classes = state_.num_classes();
        switch (mode_.kind()) {
        case LearningMode::Kind::Frozen:
            out.n_gated_in = 0;
            out.n_gated_out = trial.size();
            return {GcmClassifier(state_, mode_, trial_counter_ + 1), std::move(out)};

        case LearningMode::Kind::SemiSupervised: {
            ClassStats stats(num_classes, SufficientStats::zero(dim));
            for (std::size_t n = 0; n < trial.size(); ++n) {
                const auto& p = out.predictions[n];
                if (p.confidence > mode_.theta_th()) {
                    stats[p.predicted_class.index()].add(trial.features[n]);
                    ++out.n_gated_in;
                } else {
                    ++out.n_gated_out;
                }
            }
            return {GcmClassifier(update_posterior(state_, stats), mode_, trial_counter_ + 1),
                    std::move(out)};
        }

        case LearningMode::Kind::FullySupervised: {
            const auto data = trial.labeled();
            const auto stats = accumulate_stats(data, dim, num_classes);
            out.n_gated_in = trial.size();
            out.n_gated_out = 0;
            return {GcmClassifier(update_posterior(state_, stats), mode_, trial_counter_ + 1),
                    std::move(out)};
        }
        }
        throw ConfigError("unknown learning mode");
    }

private:
    ClassPosteriorState state_;
    LearningMode mode_;
    std::size_t trial_counter_;
};

/// Initial learning on labeled data D_0.
inline GcmClassifier fit_initial(std::span<const LabeledSample> train, const ClassPosteriorState& priors,
                                 LearningMode mode = LearningMode::frozen()) {
    if (train.empty()) throw ConfigError("initial training set is empty");
    const auto stats = accumulate_stats(train, priors.dim(), priors.num_classes());
    return {update_posterior(priors, stats), mode, 0};
}

// Checkpoint: the posterior-state document plus mode, theta_th and trial_counter.

inline nlohmann::json checkpoint_to_json(const GcmClassifier& clf) {
    auto j = state_to_json(clf.state());
    j["mode"] = clf.mode().name();
    j["theta_th"] = to_hex_float(clf.mode().theta_th());
    j["trial_counter"] = clf.trial_counter();
    return j;
}

inline GcmClassifier checkpoint_from_json(const nlohmann::json& j) {
    try {
        auto state = state_from_json(j);
        const double theta = parse_real(j.at("theta_th"));
        auto mode = LearningMode::parse(j.at("mode").get<std::string>(), theta);
        return {std::move(state), mode, j.at("trial_counter").get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

} // namespace ssbsl
