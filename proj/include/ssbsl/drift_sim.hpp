#pragma once

// Synthetic drifting-Gaussian trials. Class c at trial t draws from
// N(base_c + t * velocity_c, covariance_c). Every (seed, t, class) triple owns
// an independent RNG substream so trials can be generated in any order.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ssbsl/dataset.hpp"
#include "ssbsl/error.hpp"

namespace ssbsl {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed for substream (seed, trial, stream).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (trial * 0xd1342543de82ef95ULL));
    h = splitmix64(h ^ (stream + 0x2545f4914f6cdd1dULL));
    return h;
}

struct DriftClass {
    Eigen::VectorXd base;
    Eigen::VectorXd velocity;
    Eigen::MatrixXd covariance;
};

struct DriftScenario {
    std::size_t num_classes = 0;
    std::size_t dim = 0;
    std::size_t points_per_class = 0;
    int trials = 0;
    std::vector<DriftClass> classes;
    std::uint64_t rng_seed = 0;

    [[nodiscard]] Eigen::VectorXd mean(std::size_t c, int t) const {
        return classes.at(c).base + static_cast<double>(t) * classes.at(c).velocity;
    }

    void validate() const {
        if (num_classes == 0 || dim == 0) throw ConfigError("scenario needs classes and dimensions");
        if (points_per_class < 1) throw ConfigError("points_per_class must be >= 1");
        if (trials < 1) throw ConfigError("scenario needs at least one trial");
        if (classes.size() != num_classes) throw ConfigError("scenario class list length mismatch");
        const auto d = static_cast<Eigen::Index>(dim);
        for (const auto& c : classes) {
            if (c.base.size() != d || c.velocity.size() != d || c.covariance.rows() != d ||
                c.covariance.cols() != d) {
                throw ConfigError("scenario class has wrong dimension");
            }
            if (!c.covariance.isApprox(c.covariance.transpose(), 1e-12) ||
                Eigen::LLT<Eigen::MatrixXd>(c.covariance).info() != Eigen::Success) {
                throw ConfigError("scenario covariance is not symmetric positive definite");
            }
        }
    }
};

/// The two-class 2-D drift: means [-6 + 1.2 t, 3] and [6 - 1.2 t, 3], covariance 3 I,
/// 300 points per class, T = 10.
inline DriftScenario crossing_drift_scenario(std::uint64_t seed) {
    DriftScenario s;
    s.num_classes = 2;
    s.dim = 2;
    s.points_per_class = 300;
    s.trials = 10;
    s.rng_seed = seed;
    const Eigen::MatrixXd cov = 3.0 * Eigen::MatrixXd::Identity(2, 2);
    s.classes.push_back({Eigen::Vector2d(-6.0, 3.0), Eigen::Vector2d(1.2, 0.0), cov});
    s.classes.push_back({Eigen::Vector2d(6.0, 3.0), Eigen::Vector2d(-1.2, 0.0), cov});
    return s;
}

/// Same geometry with 0.3 per trial drift over five trials; the classes never cross.
inline DriftScenario mild_drift_scenario(std::uint64_t seed) {
    DriftScenario s = crossing_drift_scenario(seed);
    s.trials = 5;
    s.classes[0].velocity = Eigen::Vector2d(0.3, 0.0);
    s.classes[1].velocity = Eigen::Vector2d(-0.3, 0.0);
    return s;
}

/// Randomized gradual drift: bases ~ N(0, spread^2 I), velocities of norm `speed`
/// in random directions, covariances Q diag(U[0.5, 1.5]) Q^T.
inline DriftScenario random_drift_scenario(std::uint64_t seed, std::size_t num_classes,
                                           std::size_t dim, int trials = 20,
                                           std::size_t points_per_class = 100, double speed = 0.15,
                                           double spread = 3.0) {
    DriftScenario s;
    s.num_classes = num_classes;
    s.dim = dim;
    s.points_per_class = points_per_class;
    s.trials = trials;
    s.rng_seed = seed;
    std::mt19937_64 rng(substream_seed(seed, 0, ~std::uint64_t{0}));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    const auto d = static_cast<Eigen::Index>(dim);
    auto randn = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
        return m;
    };
    for (std::size_t c = 0; c < num_classes; ++c) {
        DriftClass k;
        k.base = spread * randn(d, 1);
        Eigen::VectorXd v = randn(d, 1);
        k.velocity = speed * v / v.norm();
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(randn(d, d)).householderQ();
        Eigen::VectorXd eig(d);
        for (Eigen::Index i = 0; i < d; ++i) eig(i) = unif(rng);
        const Eigen::MatrixXd cov = q * eig.asDiagonal() * q.transpose();
        k.covariance = 0.5 * (cov + cov.transpose());
        s.classes.push_back(std::move(k));
    }
    return s;
}

/// Labeled draws for trial t (1-based), class blocks in class order.
inline TrialDataset generate_trial(const DriftScenario& s, int t) {
    if (t < 1 || t > s.trials) {
        throw ConfigError("trial " + std::to_string(t) + " outside 1.." + std::to_string(s.trials));
    }
    s.validate();
    TrialDataset out;
    out.trial_id = t;
    out.features.reserve(s.num_classes * s.points_per_class);
    out.labels.emplace();
    const auto d = static_cast<Eigen::Index>(s.dim);
    for (std::size_t c = 0; c < s.num_classes; ++c) {
        std::mt19937_64 rng(substream_seed(s.rng_seed, static_cast<std::uint64_t>(t), c));
        std::normal_distribution<double> normal;
        const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(s.classes[c].covariance).matrixL();
        const Eigen::VectorXd mu = s.mean(c, t);
        for (std::size_t n = 0; n < s.points_per_class; ++n) {
            Eigen::VectorXd z(d);
            for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
            out.features.push_back(mu + chol * z);
            out.labels->push_back(ClassLabel(c));
        }
    }
    return out;
}

// Scenario documents. Plain JSON numbers; "preset": "paper" | "mild" selects a
// built-in scenario, optionally overriding rng_seed.

inline nlohmann::json scenario_to_json(const DriftScenario& s) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["num_classes"] = s.num_classes;
    j["dim"] = s.dim;
    j["points_per_class"] = s.points_per_class;
    j["trials"] = s.trials;
    j["rng_seed"] = s.rng_seed;
    auto classes = nlohmann::json::array();
    for (const auto& c : s.classes) {
        nlohmann::json cj;
        cj["base"] = std::vector<double>(c.base.data(), c.base.data() + c.base.size());
        cj["velocity"] = std::vector<double>(c.velocity.data(), c.velocity.data() + c.velocity.size());
        auto rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(c.covariance.cols()));
            for (Eigen::Index k = 0; k < c.covariance.cols(); ++k) row[static_cast<std::size_t>(k)] = c.covariance(r, k);
            rows.push_back(row);
        }
        cj["covariance"] = std::move(rows);
        classes.push_back(std::move(cj));
    }
    j["classes"] = std::move(classes);
    return j;
}

inline DriftScenario scenario_from_json(const nlohmann::json& j) {
    try {
        if (j.contains("preset")) {
            const auto name = j.at("preset").get<std::string>();
            const std::uint64_t seed = j.value("rng_seed", std::uint64_t{0});
            if (name == "paper") return crossing_drift_scenario(seed);
            if (name == "mild") return mild_drift_scenario(seed);
            throw ConfigError("unknown scenario preset '" + name + "'");
        }
        if (j.value("schema_version", 1) != 1) throw ConfigError("unsupported scenario schema_version");
        DriftScenario s;
        s.num_classes = j.at("num_classes").get<std::size_t>();
        s.dim = j.at("dim").get<std::size_t>();
        s.points_per_class = j.at("points_per_class").get<std::size_t>();
        s.trials = j.at("trials").get<int>();
        s.rng_seed = j.value("rng_seed", std::uint64_t{0});
        const auto d = static_cast<Eigen::Index>(s.dim);
        for (const auto& cj : j.at("classes")) {
            DriftClass c;
            const auto base = cj.at("base").get<std::vector<double>>();
            const auto vel = cj.at("velocity").get<std::vector<double>>();
            const auto cov = cj.at("covariance").get<std::vector<std::vector<double>>>();
            if (base.size() != s.dim || vel.size() != s.dim || cov.size() != s.dim) {
                throw ConfigError("scenario class has wrong dimension");
            }
            c.base = Eigen::Map<const Eigen::VectorXd>(base.data(), d);
            c.velocity = Eigen::Map<const Eigen::VectorXd>(vel.data(), d);
            c.covariance.resize(d, d);
            for (Eigen::Index r = 0; r < d; ++r) {
                if (cov[static_cast<std::size_t>(r)].size() != s.dim) {
                    throw ConfigError("scenario covariance row has wrong length");
                }
                for (Eigen::Index k = 0; k < d; ++k) {
                    c.covariance(r, k) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
                }
            }
            s.classes.push_back(std::move(c));
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
}

} // namespace ssbsl
