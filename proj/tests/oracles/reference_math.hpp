#pragma once

// Independent reference computations used only by the tests.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using Float50 = boost::multiprecision::cpp_bin_float_50;

struct Biquad50 {
    Float50 b0, b1, b2, a1, a2;
};

/// Butterworth low-pass via pole mapping in 50-digit arithmetic: analog poles
/// wa * exp(j(pi/2 + pi/4)) and conjugate with wa = 2 fs tan(pi fc / fs),
/// mapped by z = (2 fs + s) / (2 fs - s); both zeros at z = -1; gain fixed so
/// H(1) = 1.
inline Biquad50 butterworth2_pole_mapping(double cutoff_hz, double sample_rate_hz) {
    using boost::multiprecision::cos;
    using boost::multiprecision::sin;
    using boost::multiprecision::tan;
    const Float50 pi = boost::math::constants::pi<Float50>();
    const Float50 fs = sample_rate_hz;
    const Float50 wa = 2 * fs * tan(pi * Float50(cutoff_hz) / fs);
    const Float50 theta = 3 * pi / 4;
    const Float50 pr = wa * cos(theta), pi_ = wa * sin(theta);
    // z = (2fs + p) / (2fs - p) for p = pr + j pi_
    const Float50 nr = 2 * fs + pr, ni = pi_;
    const Float50 dr = 2 * fs - pr, di = -pi_;
    const Float50 den = dr * dr + di * di;
    const Float50 zr = (nr * dr + ni * di) / den;
    const Float50 zi = (ni * dr - nr * di) / den;
    Biquad50 f;
    f.a1 = -2 * zr;
    f.a2 = zr * zr + zi * zi;
    const Float50 g = (1 + f.a1 + f.a2) / 4;
    f.b0 = g;
    f.b1 = 2 * g;
    f.b2 = g;
    return f;
}

/// Impulse response of a biquad from its partial-fraction expansion.
inline std::vector<double> biquad_impulse_response(double b0, double b1, double b2, double a1, double a2,
                                                   std::size_t length) {
    using C = std::complex<long double>;
    const long double disc = static_cast<long double>(a1) * a1 - 4.0L * a2;
    const C root = std::sqrt(C(disc, 0.0L));
    const C p = (C(-a1, 0.0L) + root) / 2.0L;
    const C q = (C(-a1, 0.0L) - root) / 2.0L;
    const long double k = static_cast<long double>(b2) / a2;
    const long double c0 = b0 - k;
    const long double c1 = b1 - k * a1;
    // (c0 + c1 z^-1) / ((1 - p z^-1)(1 - q z^-1)) = r/(1 - p z^-1) + s/(1 - q z^-1)
    const C r = (c0 * p + c1) / (p - q);
    const C s = (c0 * q + c1) / (q - p);
    std::vector<double> h(length);
    C pn(1.0L, 0.0L), qn(1.0L, 0.0L);
    for (std::size_t n = 0; n < length; ++n) {
        const C v = r * pn + s * qn;
        h[n] = static_cast<double>(v.real() + (n == 0 ? k : 0.0L));
        pn *= p;
        qn *= q;
    }
    return h;
}

/// Student-t log density in long double with a hand-rolled Cholesky.
inline long double student_t_logpdf_ld(const Eigen::VectorXd& x, const Eigen::VectorXd& m, double beta,
                                       double nu, const Eigen::MatrixXd& w_inv) {
    const auto d = static_cast<std::size_t>(m.size());
    const long double dof = static_cast<long double>(nu) + 1.0L - static_cast<long double>(d);
    const long double scale = (1.0L + beta) / (static_cast<long double>(beta) * dof);
    std::vector<long double> l(d * d, 0.0L);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            long double s = scale * static_cast<long double>(w_inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
            l[i * d + j] = (i == j) ? std::sqrt(s) : s / l[j * d + j];
        }
    }
    std::vector<long double> z(d);
    long double log_det = 0.0L, q = 0.0L;
    for (std::size_t i = 0; i < d; ++i) {
        long double s = static_cast<long double>(x(static_cast<Eigen::Index>(i))) - m(static_cast<Eigen::Index>(i));
        for (std::size_t k = 0; k < i; ++k) s -= l[i * d + k] * z[k];
        z[i] = s / l[i * d + i];
        q += z[i] * z[i];
        log_det += 2.0L * std::log(l[i * d + i]);
    }
    const long double dd = static_cast<long double>(d);
    return std::lgamma((dof + dd) / 2.0L) - std::lgamma(dof / 2.0L) -
           dd / 2.0L * std::log(dof * std::numbers::pi_v<long double>) - 0.5L * log_det -
           (dof + dd) / 2.0L * std::log1p(q / dof);
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

} // namespace oracle
