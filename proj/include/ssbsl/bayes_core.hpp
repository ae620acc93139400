#pragma once

// Gaussian-Wishart / Dirichlet conjugate model for multi-class Gaussian
// classification: sufficient statistics, closed-form posterior updates and the
// Student-t posterior predictive.
//
// Every class c carries Normal-Wishart hyperparameters (m, beta, nu, W) with
//   Lambda_c ~ Wishart(nu, W),  mu_c | Lambda_c ~ N(m, (beta Lambda_c)^-1)
// and the mixing weights share a Dirichlet(alpha). W is stored inverted because
// the update is additive in W^-1.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssbsl/dataset.hpp"
#include "ssbsl/error.hpp"

namespace ssbsl {

inline constexpr double kSymmetryTolerance = 1e-9;

namespace detail {

inline double max_abs(const Eigen::MatrixXd& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(max_abs(a), 1e-300);
    return max_abs(a - a.transpose()) <= rel_tol * scale;
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

inline bool all_finite(const Eigen::MatrixXd& a) { return a.allFinite(); }

inline std::string dims(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

} // namespace detail

/// Normal-Wishart hyperparameters of one class.
struct GaussWishartParams {
    Eigen::VectorXd m;
    double beta = 1.0;
    double nu = 1.0;
    Eigen::MatrixXd w_inv;

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m.size()); }

    /// Throws InvalidStateError on any violated invariant.
    void validate() const {
        const auto d = m.size();
        if (d == 0) throw InvalidStateError("Gauss-Wishart location has dimension 0");
        if (!m.allFinite()) throw InvalidStateError("Gauss-Wishart location is not finite");
        if (!(beta > 0.0) || !std::isfinite(beta)) {
            throw InvalidStateError("beta must be positive and finite, got " + std::to_string(beta));
        }
        if (!(nu > static_cast<double>(d) - 1.0) || !std::isfinite(nu)) {
            throw InvalidStateError("nu must exceed D-1 = " + std::to_string(d - 1) + ", got " +
                                    std::to_string(nu));
        }
        if (w_inv.rows() != d || w_inv.cols() != d) {
            throw InvalidStateError("W^-1 has shape " + detail::dims(w_inv.rows(), w_inv.cols()) +
                                    ", expected " + detail::dims(d, d));
        }
        if (!detail::all_finite(w_inv)) throw InvalidStateError("W^-1 is not finite");
        if (!detail::is_symmetric(w_inv, kSymmetryTolerance)) {
            throw InvalidStateError("W^-1 is not symmetric");
        }
        if (Eigen::LLT<Eigen::MatrixXd>(w_inv).info() != Eigen::Success) {
            throw InvalidStateError("W^-1 is not positive definite");
        }
    }

    friend bool operator==(const GaussWishartParams& a, const GaussWishartParams& b) {
        return a.beta == b.beta && a.nu == b.nu && a.m.size() == b.m.size() && a.m == b.m &&
               a.w_inv.rows() == b.w_inv.rows() && a.w_inv.cols() == b.w_inv.cols() &&
               a.w_inv == b.w_inv;
    }
};

/// Dirichlet pseudo-counts over the C mixing weights.
struct DirichletParams {
    Eigen::VectorXd alpha;

    void validate() const {
        if (alpha.size() == 0) throw InvalidStateError("Dirichlet has no classes");
        for (Eigen::Index c = 0; c < alpha.size(); ++c) {
            if (!(alpha(c) > 0.0) || !std::isfinite(alpha(c))) {
                throw InvalidStateError("alpha[" + std::to_string(c) +
                                        "] must be positive and finite, got " +
                                        std::to_string(alpha(c)));
            }
        }
    }

    /// E[pi] = alpha / sum(alpha).
    [[nodiscard]] Eigen::VectorXd mean() const { return alpha / alpha.sum(); }

    friend bool operator==(const DirichletParams& a, const DirichletParams& b) {
        return a.alpha.size() == b.alpha.size() && a.alpha == b.alpha;
    }
};

/// Weighted sums for one class: count = sum y, sum = sum y x, scatter = sum y x x^T.
struct SufficientStats {
    double count = 0.0;
    Eigen::VectorXd sum;
    Eigen::MatrixXd scatter;

    static SufficientStats zero(std::size_t dim) {
        const auto d = static_cast<Eigen::Index>(dim);
        return {0.0, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
    }

    /// Adds one observation with label weight `weight` (1 for a hard label).
    void add(const FeatureVector& x, double weight = 1.0) {
        count += weight;
        sum.noalias() += weight * x;
        scatter.noalias() += weight * x * x.transpose();
    }

    SufficientStats& operator+=(const SufficientStats& o) {
        count += o.count;
        sum += o.sum;
        scatter += o.scatter;
        return *this;
    }

    friend SufficientStats operator+(SufficientStats a, const SufficientStats& b) {
        a += b;
        return a;
    }
};

using ClassStats = std::vector<SufficientStats>;

/// Elementwise sum of two per-class stat lists of equal length.
inline ClassStats operator+(ClassStats a, const ClassStats& b) {
    if (a.size() != b.size()) throw DimensionError("cannot add stats over different class counts");
    for (std::size_t c = 0; c < a.size(); ++c) a[c] += b[c];
    return a;
}

/// Multivariate Student-t obtained by integrating a Gaussian against its
/// Normal-Wishart posterior: location m, dof = nu + 1 - D and scale matrix
/// Sigma = (1 + beta) / (beta * dof) * W^-1.
class StudentTMarginal {
public:
    StudentTMarginal() = default;

    explicit StudentTMarginal(const GaussWishartParams& p)
        : location_(p.m), dof_(p.nu + 1.0 - static_cast<double>(p.dim())) {
        if (!(dof_ > 0.0)) {
            throw InvalidStateError("predictive degrees of freedom must be positive, got " +
                                    std::to_string(dof_));
        }
        const double d = static_cast<double>(p.dim());
        const double scale = (1.0 + p.beta) / (p.beta * dof_);
        Eigen::LLT<Eigen::MatrixXd> llt(p.w_inv);
        if (llt.info() != Eigen::Success) throw InvalidStateError("W^-1 is not positive definite");
        chol_ = std::sqrt(scale) * Eigen::MatrixXd(llt.matrixL());
        const double log_det = 2.0 * chol_.diagonal().array().log().sum();
        log_norm_ = std::lgamma(0.5 * (dof_ + d)) - std::lgamma(0.5 * dof_) -
                    0.5 * d * std::log(dof_ * std::numbers::pi) - 0.5 * log_det;
    }

    [[nodiscard]] double log_density(const FeatureVector& x) const {
        const Eigen::VectorXd z =
            chol_.triangularView<Eigen::Lower>().solve(x - location_);
        const double d = static_cast<double>(location_.size());
        return log_norm_ - 0.5 * (dof_ + d) * std::log1p(z.squaredNorm() / dof_);
    }

    [[nodiscard]] double dof() const noexcept { return dof_; }
    [[nodiscard]] const Eigen::VectorXd& location() const noexcept { return location_; }
    /// Lower Cholesky factor of the scale matrix Sigma.
    [[nodiscard]] const Eigen::MatrixXd& scale_cholesky() const noexcept { return chol_; }

private:
    Eigen::VectorXd location_;
    double dof_ = 1.0;
    Eigen::MatrixXd chol_;
    double log_norm_ = 0.0;
};

/// Full model memory: C per-class Normal-Wishart posteriors plus the shared
/// Dirichlet. Immutable once built; updates return a new state.
class ClassPosteriorState {
public:
    ClassPosteriorState(std::vector<GaussWishartParams> per_class, DirichletParams mixing)
        : per_class_(std::move(per_class)), mixing_(std::move(mixing)) {
        if (per_class_.empty()) throw InvalidStateError("posterior state needs at least one class");
        mixing_.validate();
        if (static_cast<std::size_t>(mixing_.alpha.size()) != per_class_.size()) {
            throw InvalidStateError("alpha has " + std::to_string(mixing_.alpha.size()) +
                                    " entries for " + std::to_string(per_class_.size()) +
                                    " classes");
        }
        dim_ = per_class_.front().dim();
        marginals_.reserve(per_class_.size());
        for (const auto& p : per_class_) {
            p.validate();
            if (p.dim() != dim_) throw InvalidStateError("classes disagree on dimension");
            marginals_.emplace_back(p);
        }
        log_mix_ = (mixing_.alpha / mixing_.alpha.sum()).array().log();
    }

    /// C identical copies of one prior, the usual starting point.
    static ClassPosteriorState shared_prior(const GaussWishartParams& prior, DirichletParams mixing) {
        const auto c = static_cast<std::size_t>(mixing.alpha.size());
        return {std::vector<GaussWishartParams>(c, prior), std::move(mixing)};
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t num_classes() const noexcept { return per_class_.size(); }
    [[nodiscard]] const std::vector<GaussWishartParams>& per_class() const noexcept {
        return per_class_;
    }
    [[nodiscard]] const GaussWishartParams& params(std::size_t c) const { return per_class_.at(c); }
    [[nodiscard]] const DirichletParams& mixing() const noexcept { return mixing_; }
    [[nodiscard]] const StudentTMarginal& marginal(std::size_t c) const { return marginals_.at(c); }
    /// log E[pi_c] under the Dirichlet.
    [[nodiscard]] const Eigen::VectorXd& log_mixing_mean() const noexcept { return log_mix_; }

    friend bool operator==(const ClassPosteriorState& a, const ClassPosteriorState& b) {
        return a.per_class_ == b.per_class_ && a.mixing_ == b.mixing_;
    }

private:
    std::vector<GaussWishartParams> per_class_;
    DirichletParams mixing_;
    std::size_t dim_ = 0;
    std::vector<StudentTMarginal> marginals_;
    Eigen::VectorXd log_mix_;
};

inline void check_feature(const FeatureVector& x, std::size_t dim) {
    if (static_cast<std::size_t>(x.size()) != dim) {
        throw DimensionError("feature vector has length " + std::to_string(x.size()) +
                             ", expected " + std::to_string(dim));
    }
    if (!x.allFinite()) throw DimensionError("feature vector has non-finite entries");
}

/// Per-class sums over hard-labeled data.
inline ClassStats accumulate_stats(std::span<const LabeledSample> data, std::size_t dim,
                                   std::size_t num_classes) {
    ClassStats stats(num_classes, SufficientStats::zero(dim));
    for (const auto& s : data) {
        check_feature(s.x, dim);
        if (s.label.index() >= num_classes) {
            throw DimensionError("label " + std::to_string(s.label.index()) + " out of range for " +
                                 std::to_string(num_classes) + " classes");
        }
        stats[s.label.index()].add(s.x);
    }
    return stats;
}

/// Soft-label variant: `weights` is N x C with nonnegative entries.
inline ClassStats accumulate_weighted_stats(std::span<const FeatureVector> xs,
                                            const Eigen::MatrixXd& weights, std::size_t dim) {
    if (static_cast<std::size_t>(weights.rows()) != xs.size()) {
        throw DimensionError("weight matrix rows do not match sample count");
    }
    if ((weights.array() < 0.0).any()) throw DimensionError("label weights must be nonnegative");
    const auto num_classes = static_cast<std::size_t>(weights.cols());
    ClassStats stats(num_classes, SufficientStats::zero(dim));
    for (std::size_t n = 0; n < xs.size(); ++n) {
        check_feature(xs[n], dim);
        for (std::size_t c = 0; c < num_classes; ++c) {
            const double w = weights(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
            if (w != 0.0) stats[c].add(xs[n], w);
        }
    }
    return stats;
}

/// Conjugate update of every class and of the Dirichlet:
///   beta' = N_c + beta,  m' = (S_c + beta m) / beta',  nu' = N_c + nu,
///   W'^-1 = XX_c + beta m m^T - beta' m' m'^T + W^-1,  alpha'_c = N_c + alpha_c.
/// Classes with zero count are carried over untouched.
inline ClassPosteriorState update_posterior(const ClassPosteriorState& prior,
                                            const ClassStats& stats) {
    const std::size_t num_classes = prior.num_classes();
    const auto d = static_cast<Eigen::Index>(prior.dim());
    if (stats.size() != num_classes) {
        throw DimensionError("stats cover " + std::to_string(stats.size()) + " classes, model has " +
                             std::to_string(num_classes));
    }
    std::vector<GaussWishartParams> post;
    post.reserve(num_classes);
    Eigen::VectorXd alpha = prior.mixing().alpha;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const auto& s = stats[c];
        const auto& p = prior.params(c);
        if (s.sum.size() != d || s.scatter.rows() != d || s.scatter.cols() != d) {
            throw DimensionError("stats for class " + std::to_string(c) + " have wrong dimension");
        }
        if (!(s.count >= 0.0)) throw DimensionError("negative class count");
        if (s.count == 0.0) {
            post.push_back(p);
            continue;
        }
        GaussWishartParams q;
        q.beta = s.count + p.beta;
        q.m = (s.sum + p.beta * p.m) / q.beta;
        q.nu = s.count + p.nu;
        Eigen::MatrixXd w_inv = s.scatter + p.beta * p.m * p.m.transpose() -
                                q.beta * q.m * q.m.transpose() + p.w_inv;
        q.w_inv = detail::symmetrize(w_inv);
        if (!q.w_inv.allFinite() || Eigen::LLT<Eigen::MatrixXd>(q.w_inv).info() != Eigen::Success) {
            throw NumericalError("posterior W^-1 for class " + std::to_string(c) +
                                 " is not positive definite (degenerate or collinear data)");
        }
        alpha(static_cast<Eigen::Index>(c)) += s.count;
        post.push_back(std::move(q));
    }
    return {std::move(post), DirichletParams{std::move(alpha)}};
}

/// log p(x | class c, data so far): the Student-t marginal of the class.
inline double log_predictive_density(const ClassPosteriorState& state, std::size_t c,
                                     const FeatureVector& x) {
    if (c >= state.num_classes()) {
        throw DimensionError("class " + std::to_string(c) + " out of range");
    }
    check_feature(x, state.dim());
    return state.marginal(c).log_density(x);
}

/// Normalizes log weights in place into probabilities.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double hi = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - hi).exp();
    return p / p.sum();
}

/// p(y_c = 1 | x) proportional to E[pi_c] times the class predictive density.
inline Eigen::VectorXd class_posterior(const ClassPosteriorState& state, const FeatureVector& x) {
    check_feature(x, state.dim());
    const auto c_count = static_cast<Eigen::Index>(state.num_classes());
    Eigen::VectorXd logits(c_count);
    for (Eigen::Index c = 0; c < c_count; ++c) {
        logits(c) = state.log_mixing_mean()(c) +
                    state.marginal(static_cast<std::size_t>(c)).log_density(x);
    }
    return softmax(logits);
}

} // namespace ssbsl
