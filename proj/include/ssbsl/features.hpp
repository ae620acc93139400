#pragma once

// EMG envelope features: full-wave rectification, causal 2nd-order Butterworth
// low-pass, then removal of the leading transient. One feature vector per
// sample, one dimension per channel.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssbsl/dataset.hpp"
#include "ssbsl/error.hpp"

namespace ssbsl {

struct RawRecording {
    double sample_rate_hz = 0.0;
    std::vector<std::vector<double>> channels;
    std::optional<ClassLabel> motion_label;
    int trial_id = 0;

    [[nodiscard]] std::size_t num_channels() const noexcept { return channels.size(); }
    [[nodiscard]] std::size_t length() const noexcept {
        return channels.empty() ? 0 : channels.front().size();
    }

    void validate() const {
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
            throw ConfigError("sample rate must be positive, got " + std::to_string(sample_rate_hz));
        }
        if (channels.empty()) throw ConfigError("recording has no channels");
        for (const auto& ch : channels) {
            if (ch.size() != channels.front().size()) {
                throw ConfigError("recording channels differ in length");
            }
        }
        if (length() < 2) throw ConfigError("recording needs at least 2 samples per channel");
    }
};

/// Normalized biquad, a0 = 1:
///   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct FilterCoeffs {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    [[nodiscard]] double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

    /// |H(e^{j 2 pi f / fs})|
    [[nodiscard]] double magnitude(double freq_hz, double sample_rate_hz) const {
        const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
        const double c1 = std::cos(w), s1 = std::sin(w);
        const double c2 = std::cos(2 * w), s2 = std::sin(2 * w);
        const double nr = b0 + b1 * c1 + b2 * c2, ni = -(b1 * s1 + b2 * s2);
        const double dr = 1.0 + a1 * c1 + a2 * c2, di = -(a1 * s1 + a2 * s2);
        return std::sqrt((nr * nr + ni * ni) / (dr * dr + di * di));
    }

    /// Jury conditions for a second-order denominator.
    [[nodiscard]] bool is_stable() const {
        return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
    }
};

inline RawRecording rectify(RawRecording rec) {
    for (auto& ch : rec.channels)
        for (auto& v : ch) v = std::abs(v);
    return rec;
}

/// Bilinear transform of s^2 + sqrt(2) s + 1 with the cutoff prewarped, so the
/// digital response is exactly -3.01 dB at `cutoff_hz`.
inline FilterCoeffs butterworth2_lowpass(double cutoff_hz, double sample_rate_hz) {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
        throw ConfigError("sample rate must be positive");
    }
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate_hz)) {
        throw ConfigError("cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, " +
                          std::to_string(0.5 * sample_rate_hz) + ") Hz");
    }
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
    const double k2 = k * k;
    const double q = std::numbers::sqrt2 * k;
    const double norm = 1.0 / (1.0 + q + k2);
    FilterCoeffs f;
    f.b0 = k2 * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k2 - 1.0) * norm;
    f.a2 = (1.0 - q + k2) * norm;
    return f;
}

/// Causal direct-form-II-transposed filtering from zero state.
inline std::vector<double> filter_forward(const FilterCoeffs& f, std::span<const double> x) {
    std::vector<double> y(x.size());
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double out = f.b0 * x[n] + s1;
        s1 = f.b1 * x[n] - f.a1 * out + s2;
        s2 = f.b2 * x[n] - f.a2 * out;
        y[n] = out;
    }
    return y;
}

inline std::size_t trim_count(std::size_t length, double fraction) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(length)));
}

/// Drops the first floor(fraction * length) samples of every channel.
inline RawRecording trim_transient(RawRecording rec, double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw ConfigError("trim fraction must lie in [0, 1), got " + std::to_string(fraction));
    }
    const std::size_t drop = trim_count(rec.length(), fraction);
    for (auto& ch : rec.channels) ch.erase(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(drop));
    return rec;
}

struct FeatureConfig {
    double cutoff_hz = 1.0;
    double trim_fraction = 0.10;
};

/// rectify -> filter -> trim, then one FeatureVector per remaining sample.
inline TrialDataset extract_features(const RawRecording& rec, const FeatureConfig& cfg = {}) {
    rec.validate();
    const auto coeffs = butterworth2_lowpass(cfg.cutoff_hz, rec.sample_rate_hz);
    RawRecording smoothed = rectify(rec);
    for (auto& ch : smoothed.channels) ch = filter_forward(coeffs, ch);
    const RawRecording trimmed = trim_transient(std::move(smoothed), cfg.trim_fraction);

    TrialDataset out;
    out.trial_id = rec.trial_id;
    const auto d = static_cast<Eigen::Index>(trimmed.num_channels());
    const std::size_t len = trimmed.length();
    out.features.reserve(len);
    for (std::size_t n = 0; n < len; ++n) {
        FeatureVector x(d);
        for (Eigen::Index c = 0; c < d; ++c) x(c) = trimmed.channels[static_cast<std::size_t>(c)][n];
        out.features.push_back(std::move(x));
    }
    if (rec.motion_label) out.labels = std::vector<ClassLabel>(len, *rec.motion_label);
    return out;
}

} // namespace ssbsl
