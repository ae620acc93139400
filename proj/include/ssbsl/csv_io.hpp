#pragma once

// Numeric CSV and small-file helpers shared by the harness and the CLI.
//   raw recording   header ch1..chD, one row per sample (+ JSON sidecar)
//   trial dataset   header f1..fD[,label], label is a 0-based class index
// Reals are printed with %.17g so every file round-trips exactly.

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ssbsl/dataset.hpp"
#include "ssbsl/error.hpp"
#include "ssbsl/features.hpp"

namespace ssbsl::io {

namespace fs = std::filesystem;

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text(const fs::path& path) {
    std::error_code ec;
    if (fs::is_directory(path, ec)) throw ConfigError(path.string() + " is a directory");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a sibling temp file and rename, so readers never see a partial file.
inline void write_text_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ConfigError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, std::size_t line_no) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed number '" + std::string(s) + "'");
    }
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline Table parse_table(std::string_view text) {
    Table t;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (!have_header) {
            for (auto c : cells) t.header.emplace_back(c);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(t.header.size()) + " columns, got " +
                              std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto c : cells) row.push_back(parse_double(c, line_no));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw ConfigError("CSV has no header row");
    return t;
}

} // namespace detail

inline std::string trial_to_csv(const TrialDataset& t) {
    const std::size_t d = t.dim();
    std::string out;
    for (std::size_t i = 0; i < d; ++i) out += (i ? ",f" : "f") + std::to_string(i + 1);
    if (t.labels) out += ",label";
    out += '\n';
    for (std::size_t n = 0; n < t.size(); ++n) {
        for (std::size_t i = 0; i < d; ++i) {
            if (i) out += ',';
            out += format_real(t.features[n](static_cast<Eigen::Index>(i)));
        }
        if (t.labels) out += "," + std::to_string((*t.labels)[n].index());
        out += '\n';
    }
    return out;
}

inline TrialDataset trial_from_csv(std::string_view text, int trial_id) {
    const auto table = detail::parse_table(text);
    const bool labeled = !table.header.empty() && table.header.back() == "label";
    const std::size_t d = table.header.size() - (labeled ? 1 : 0);
    if (d == 0) throw ConfigError("feature CSV has no feature columns");
    for (std::size_t i = 0; i < d; ++i) {
        if (table.header[i] != "f" + std::to_string(i + 1)) {
            throw ConfigError("feature CSV column " + std::to_string(i + 1) + " must be named f" +
                              std::to_string(i + 1) + ", got '" + table.header[i] + "'");
        }
    }
    TrialDataset t;
    t.trial_id = trial_id;
    if (labeled) t.labels.emplace();
    for (const auto& row : table.rows) {
        t.features.push_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(d)));
        if (labeled) {
            const double lab = row.back();
            if (lab < 0 || lab != static_cast<double>(static_cast<std::size_t>(lab))) {
                throw ConfigError("label must be a nonnegative integer, got " + format_real(lab));
            }
            t.labels->push_back(ClassLabel(static_cast<std::size_t>(lab)));
        }
    }
    return t;
}

inline TrialDataset read_trial_csv(const fs::path& path, int trial_id) {
    try {
        return trial_from_csv(read_text(path), trial_id);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Channels from a ch1..chD CSV; metadata from the sidecar document.
inline RawRecording recording_from_csv(std::string_view text, const nlohmann::json& meta) {
    const auto table = detail::parse_table(text);
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] != "ch" + std::to_string(i + 1)) {
            throw ConfigError("recording column " + std::to_string(i + 1) + " must be named ch" +
                              std::to_string(i + 1) + ", got '" + table.header[i] + "'");
        }
    }
    RawRecording rec;
    try {
        rec.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
        rec.trial_id = meta.value("trial_id", 0);
        if (meta.contains("motion_label") && !meta.at("motion_label").is_null()) {
            rec.motion_label = ClassLabel(meta.at("motion_label").get<std::size_t>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed recording metadata: ") + e.what());
    }
    rec.channels.assign(table.header.size(), {});
    for (const auto& row : table.rows)
        for (std::size_t c = 0; c < row.size(); ++c) rec.channels[c].push_back(row[c]);
    rec.validate();
    return rec;
}

} // namespace ssbsl::io
