#pragma once

// Binary-classification performance metrics expressed in the
// (sensitivity, specificity, prevalence) parametrization, together with the
// closed-form ratios of their partial derivatives that drive the
// Bayes-optimal threshold solver.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace imbametric {

/// Integer 2x2 table. Rows are the true label (1, 0), columns the prediction (1, 0).
struct ConfusionCounts {
    std::uint64_t n11 = 0;  ///< true positives
    std::uint64_t n10 = 0;  ///< false negatives
    std::uint64_t n01 = 0;  ///< false positives
    std::uint64_t n00 = 0;  ///< true negatives

    std::uint64_t total() const { return n11 + n10 + n01 + n00; }
    bool operator==(const ConfusionCounts&) const = default;
};

/// Joint probabilities P(Y = j, phi(X) = k), laid out like ConfusionCounts.
struct ConfusionRates {
    double p11 = 0.0;
    double p10 = 0.0;
    double p01 = 0.0;
    double p00 = 0.0;
};

/// Sensitivity, specificity and prevalence of a classifier.
struct RateTriple {
    double tpr = 0.0;
    double tnr = 0.0;
    double prev = 0.0;

    /// Share of predicted positives, pi * tpr + (1 - pi) * (1 - tnr).
    double predicted_positive() const { return prev * tpr + (1.0 - prev) * (1.0 - tnr); }
};

// ---------------------------------------------------------------------------
// Metric families
// ---------------------------------------------------------------------------

struct Accuracy {
    bool operator==(const Accuracy&) const = default;
};

/// w * pi11 + (1 - w) * pi00 with w in (0, 1).
class WeightedAccuracy {
public:
    explicit WeightedAccuracy(double w);
    double w() const { return w_; }
    bool operator==(const WeightedAccuracy&) const = default;

private:
    double w_;
};

struct BalancedAccuracy {
    bool operator==(const BalancedAccuracy&) const = default;
};

struct Jaccard {
    bool operator==(const Jaccard&) const = default;
};

class FBeta {
public:
    explicit FBeta(double beta);
    double beta() const { return beta_; }
    bool operator==(const FBeta&) const = default;

private:
    double beta_;
};

struct MCC {
    bool operator==(const MCC&) const = default;
};

struct Kappa {
    bool operator==(const Kappa&) const = default;
};

struct YuleQ {
    bool operator==(const YuleQ&) const = default;
};

struct YuleY {
    bool operator==(const YuleY&) const = default;
};

/// Robust F-score
///
///   (d0/pi + beta^2 + 1) / (1 + c) * (c pi + pi tpr) / (d0 + d1 pi + pi tpr + (1 - tnr)(1 - pi))
///
/// with c >= 0, d0 > 0, d1 >= 0 and d0 + d1 - c > 0. The leading factor only
/// rescales the score; it does not move the optimal threshold. When beta is
/// not given, beta^2 is taken to be d1, which makes a perfect classifier score
/// exactly 1 for every prevalence.
class RobustF {
public:
    RobustF(double c, double d0, double d1, std::optional<double> beta = std::nullopt);

    double c() const { return c_; }
    double d0() const { return d0_; }
    double d1() const { return d1_; }
    const std::optional<double>& beta() const { return beta_; }
    /// beta^2 as used in the normalizing prefactor.
    double beta_squared() const { return beta_ ? *beta_ * *beta_ : d1_; }

    bool operator==(const RobustF&) const = default;

private:
    double c_;
    double d0_;
    double d1_;
    std::optional<double> beta_;
};

/// MCC with the variance of the prediction regularized by d > 0.
class RobustMCC {
public:
    explicit RobustMCC(double d);
    double d() const { return d_; }
    bool operator==(const RobustMCC&) const = default;

private:
    double d_;
};

using MetricSpec = std::variant<Accuracy, WeightedAccuracy, BalancedAccuracy, Jaccard, FBeta, MCC,
                                Kappa, YuleQ, YuleY, RobustF, RobustMCC>;

/// Human-readable label, e.g. "F1.5" or "MCC_rb(d=0.1)".
std::string display_name(const MetricSpec& spec);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Throws a data error "empty confusion matrix" when all counts are zero.
ConfusionRates rates_from_counts(const ConfusionCounts& counts);

/// tpr = p11 / (p11 + p10), tnr = p00 / (p01 + p00), prev = p11 + p10.
/// Throws "undefined conditional rate" when a true-label row is empty.
RateTriple triple_from_rates(const ConfusionRates& rates);

/// Shortcut for triple_from_rates(rates_from_counts(counts)) computed from the
/// integer counts directly.
RateTriple triple_from_counts(const ConfusionCounts& counts);

/// Metric value M(tpr, tnr, prev). Boundary rates (0 or 1) are accepted;
/// prevalence must lie strictly inside (0, 1). A vanishing denominator raises
/// a numeric error "degenerate metric input" instead of returning NaN.
double metric_value(const MetricSpec& spec, const RateTriple& r);

/// dM/dtnr divided by dM/dtpr, the right-hand side of the fixed-point
/// equation for the optimal density-ratio threshold. Requires tpr and tnr
/// strictly inside (0, 1) (tolerance 1e-12).
double derivative_ratio(const MetricSpec& spec, const RateTriple& r);

/// Uniform upper bound on the optimal density-ratio threshold over
/// prevalences in (0, 1/2], when the metric family has one:
/// (1 + c) / min(d0, d0 + d1 - c) for RobustF, (1 + 2d) / (2d) for RobustMCC.
std::optional<double> robustness_bound(const MetricSpec& spec);

}  // namespace imbametric
