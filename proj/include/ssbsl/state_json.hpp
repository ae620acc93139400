#pragma once

// Versioned JSON documents for ClassPosteriorState. Reals are written as C99
// hex-float strings ("0x1.8p+1") so a round trip is bit exact; readers also
// accept plain JSON numbers for hand-written files.

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "ssbsl/bayes_core.hpp"
#include "ssbsl/error.hpp"

namespace ssbsl {

inline constexpr int kSchemaVersion = 1;

inline std::string to_hex_float(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_real(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw ConfigError("expected a number or hex-float string, got " + j.dump());
    const auto s = j.get<std::string>();
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw ConfigError("malformed real '" + s + "'");
    return v;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(to_hex_float(v(i)));
    return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("expected an array of reals");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_real(j[i]);
    return v;
}

inline nlohmann::json matrix_to_json_row_major(const Eigen::MatrixXd& a) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) arr.push_back(to_hex_float(a(r, c)));
    return arr;
}

inline Eigen::MatrixXd matrix_from_json_row_major(const nlohmann::json& j, Eigen::Index rows,
                                                  Eigen::Index cols) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(rows * cols)) {
        throw ConfigError("row-major matrix needs " + std::to_string(rows * cols) + " entries");
    }
    Eigen::MatrixXd a(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = parse_real(j[k++]);
    return a;
}

inline nlohmann::json state_to_json(const ClassPosteriorState& s) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["dim"] = s.dim();
    j["num_classes"] = s.num_classes();
    auto classes = nlohmann::json::array();
    for (const auto& p : s.per_class()) {
        classes.push_back({{"m", vector_to_json(p.m)},
                           {"beta", to_hex_float(p.beta)},
                           {"nu", to_hex_float(p.nu)},
                           {"w_inv_row_major", matrix_to_json_row_major(p.w_inv)}});
    }
    j["per_class"] = std::move(classes);
    j["alpha"] = vector_to_json(s.mixing().alpha);
    return j;
}

inline ClassPosteriorState state_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion) {
            throw ConfigError("unsupported schema_version " + j.at("schema_version").dump());
        }
        const auto dim = j.at("dim").get<std::size_t>();
        const auto num_classes = j.at("num_classes").get<std::size_t>();
        const auto& classes = j.at("per_class");
        if (!classes.is_array() || classes.size() != num_classes) {
            throw ConfigError("per_class must list num_classes entries");
        }
        const auto d = static_cast<Eigen::Index>(dim);
        std::vector<GaussWishartParams> per_class;
        for (const auto& cj : classes) {
            GaussWishartParams p;
            p.m = vector_from_json(cj.at("m"));
            if (p.m.size() != d) throw ConfigError("class location has wrong dimension");
            p.beta = parse_real(cj.at("beta"));
            p.nu = parse_real(cj.at("nu"));
            p.w_inv = matrix_from_json_row_major(cj.at("w_inv_row_major"), d, d);
            per_class.push_back(std::move(p));
        }
        DirichletParams mixing{vector_from_json(j.at("alpha"))};
        return {std::move(per_class), std::move(mixing)};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed posterior state document: ") + e.what());
    }
}

} // namespace ssbsl
