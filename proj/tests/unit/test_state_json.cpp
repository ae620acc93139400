#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "ssbsl/state_json.hpp"
#include "test_support.hpp"

using namespace ssbsl;

TEST(HexFloat, RoundTripsArbitraryDoubles) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint64_t> bits;
    int checked = 0;
    while (checked < 10000) {
        const auto b = bits(rng);
        double v;
        std::memcpy(&v, &b, sizeof v);
        if (!std::isfinite(v)) continue;
        const double back = parse_real(nlohmann::json(to_hex_float(v)));
        ASSERT_EQ(std::memcmp(&v, &back, sizeof v), 0) << to_hex_float(v);
        ++checked;
    }
    EXPECT_EQ(parse_real(nlohmann::json(0.25)), 0.25);
    EXPECT_THROW(parse_real(nlohmann::json("0x1.8p+1junk")), ConfigError);
    EXPECT_THROW(parse_real(nlohmann::json(true)), ConfigError);
}

TEST(StateJson, RoundTripIsBitExact) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rep % 4, c = 2 + rep % 5;
        const auto prior = testing_support::random_prior(rng, d, c);
        const auto state = update_posterior(prior, accumulate_stats(testing_support::random_labeled(rng, 50, d, c), d, c));
        const auto text = state_to_json(state).dump();
        const auto back = state_from_json(nlohmann::json::parse(text));
        EXPECT_TRUE(back == state);
    }
}

TEST(StateJson, DocumentLayout) {
    GaussWishartParams p{Eigen::Vector2d(1.5, -2), 1.0, 3.0, Eigen::MatrixXd::Identity(2, 2)};
    const auto state = ClassPosteriorState::shared_prior(p, {Eigen::Vector2d(0.5, 2)});
    const auto j = state_to_json(state);
    EXPECT_EQ(j.at("schema_version"), 1);
    EXPECT_EQ(j.at("dim"), 2);
    EXPECT_EQ(j.at("num_classes"), 2);
    EXPECT_EQ(j.at("per_class").size(), 2u);
    EXPECT_EQ(j.at("per_class")[0].at("w_inv_row_major").size(), 4u);
    EXPECT_EQ(j.at("per_class")[0].at("m")[0], "0x1.8p+0");
    EXPECT_EQ(j.at("alpha")[1], "0x1p+1");
}

TEST(StateJson, RejectsMalformedDocuments) {
    GaussWishartParams p{Eigen::Vector2d(0, 0), 1.0, 3.0, Eigen::MatrixXd::Identity(2, 2)};
    const auto good = state_to_json(ClassPosteriorState::shared_prior(p, {Eigen::Vector2d(1, 1)}));
    auto j = good;
    j["schema_version"] = 2;
    EXPECT_THROW(state_from_json(j), ConfigError);
    j = good;
    j["per_class"][0]["w_inv_row_major"].erase(0);
    EXPECT_THROW(state_from_json(j), ConfigError);
    j = good;
    j.erase("alpha");
    EXPECT_THROW(state_from_json(j), ConfigError);
    j = good;
    j["per_class"][1]["beta"] = -1.0;
    EXPECT_THROW(state_from_json(j), InvalidStateError);
}
