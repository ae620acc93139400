#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssbsl/error.hpp"

namespace ssbsl {

/// One D-dimensional observation after feature extraction.
using FeatureVector = Eigen::VectorXd;

/// Zero-based motion class index.
class ClassLabel {
public:
    constexpr ClassLabel() = default;
    constexpr explicit ClassLabel(std::size_t index) : index_(index) {}

    [[nodiscard]] constexpr std::size_t index() const noexcept { return index_; }

    [[nodiscard]] Eigen::VectorXd one_hot(std::size_t num_classes) const {
        if (index_ >= num_classes) {
            throw DimensionError("class label " + std::to_string(index_) + " out of range for " +
                                 std::to_string(num_classes) + " classes");
        }
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes));
        v(static_cast<Eigen::Index>(index_)) = 1.0;
        return v;
    }

    constexpr auto operator<=>(const ClassLabel&) const = default;

private:
    std::size_t index_ = 0;
};

struct LabeledSample {
    FeatureVector x;
    ClassLabel label;
};

/// Ordered feature vectors of one trial, labeled or not.
struct TrialDataset {
    int trial_id = 0;
    std::vector<FeatureVector> features;
    std::optional<std::vector<ClassLabel>> labels;

    [[nodiscard]] std::size_t size() const noexcept { return features.size(); }
    [[nodiscard]] bool empty() const noexcept { return features.empty(); }
    [[nodiscard]] bool has_labels() const noexcept { return labels.has_value(); }

    [[nodiscard]] std::size_t dim() const noexcept {
        return features.empty() ? 0 : static_cast<std::size_t>(features.front().size());
    }

    /// Pairs every feature vector with its label. Throws MissingLabelError if unlabeled.
    [[nodiscard]] std::vector<LabeledSample> labeled() const {
        if (!labels) {
            throw MissingLabelError("trial " + std::to_string(trial_id) + " carries no labels");
        }
        if (labels->size() != features.size()) {
            throw DimensionError("trial " + std::to_string(trial_id) + ": " +
                                 std::to_string(labels->size()) + " labels for " +
                                 std::to_string(features.size()) + " feature vectors");
        }
        std::vector<LabeledSample> out;
        out.reserve(features.size());
        for (std::size_t i = 0; i < features.size(); ++i) {
            out.push_back({features[i], (*labels)[i]});
        }
        return out;
    }
};

/// Concatenates labeled trials in the given order.
inline std::vector<LabeledSample> concat_labeled(std::span<const TrialDataset> trials) {
    std::vector<LabeledSample> out;
    for (const auto& t : trials) {
        auto part = t.labeled();
        out.insert(out.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    return out;
}

} // namespace ssbsl
