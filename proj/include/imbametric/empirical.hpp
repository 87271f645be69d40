#pragma once

// Empirical evaluation of scored samples: confusion matrices at a regression
// threshold, grid optimization of that threshold per metric, and ROC /
// recall-vs-(1 - precision) curves.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imbametric/metrics.hpp"

namespace imbametric {

struct ScoredSample {
    double score = 0.0;  ///< estimate of P(Y = 1 | x), in [0, 1]
    int label = 0;       ///< 0 or 1
};

/// Throws a data error on a score outside [0, 1], a label outside {0, 1},
/// or (when `need_both`) a dataset lacking one of the labels.
void validate_samples(std::span<const ScoredSample> samples, bool need_both = true);

/// Regression-threshold grid start, start + step, ..., up to stop.
struct GridSpec {
    double start = 0.001;
    double stop = 0.999;
    double step = 0.001;

    /// Grid values rounded to 12 decimals, so 0.001 * 3 is exactly 0.003.
    std::vector<double> points() const;
    bool operator==(const GridSpec&) const = default;
};

/// Parses "start:stop:step".
GridSpec parse_grid_spec(const std::string& text);

/// Counts with the rule: predict 1 iff score >= tilde_delta.
ConfusionCounts confusion_at(std::span<const ScoredSample> samples, double tilde_delta);

struct ThresholdSweepRow {
    double tilde_delta = 0.0;
    double metric_value = 0.0;
    double tpr = 0.0;
    double tnr = 0.0;
    /// Density-ratio threshold at the sample prevalence.
    double delta_density = 0.0;
};

/// Metric value at every grid point; entries are empty where the metric is
/// undefined (for example zero predicted positives for MCC).
std::vector<std::optional<ThresholdSweepRow>> threshold_sweep(std::span<const ScoredSample> samples,
                                                              const MetricSpec& spec, const GridSpec& grid);

/// Grid point with the largest metric value; the smallest threshold wins ties.
/// Throws a numeric error when the metric is undefined at every grid point.
ThresholdSweepRow grid_optimize(std::span<const ScoredSample> samples, const MetricSpec& spec,
                                const GridSpec& grid = {});

struct CurvePoint {
    double threshold = 0.0;  ///< predict 1 iff score >= threshold; +inf predicts nothing
    double fpr = 0.0;
    double tpr = 0.0;
    /// Empty when no sample is predicted positive.
    std::optional<double> precision;
};

/// (0, 0) at threshold +inf, then one point per distinct score in descending
/// order; the last point is (1, 1).
std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples);

/// The ROC points that have a defined precision, i.e. the recall against
/// 1 - precision curve.
std::vector<CurvePoint> recall_vs_one_minus_precision(std::span<const ScoredSample> samples);

/// Point of both curves at an arbitrary threshold.
CurvePoint curve_point_at(std::span<const ScoredSample> samples, double tilde_delta);

/// prec = tpr pi / (tpr pi + fpr (1 - pi)); empty when the denominator is 0.
std::optional<double> precision_from_rates(double fpr, double tpr, double prev);

/// Area under the ROC curve, P(score1 > score0) + P(score1 == score0) / 2.
double auc(std::span<const ScoredSample> samples);

struct OptimalPoint {
    MetricSpec spec;
    ThresholdSweepRow row;
    CurvePoint point;  ///< ROC coordinates and precision at row.tilde_delta
};

std::vector<OptimalPoint> optimal_points(std::span<const ScoredSample> samples, std::span<const MetricSpec> specs,
                                         const GridSpec& grid = {});

}  // namespace imbametric
