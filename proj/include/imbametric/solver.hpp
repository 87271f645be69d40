#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imbametric/metrics.hpp"

namespace imbametric {

/// Sensitivity and specificity of the density-ratio classifier 1(f1/f0 > delta).
struct OperatingRates {
    double tpr = 0.0;
    double tnr = 0.0;
};

/// Maps a density-ratio threshold delta in (0, inf) to the operating rates of
/// the thresholded classifier. Implementations must be safe for concurrent
/// read-only use.
class RateModel {
public:
    virtual ~RateModel() = default;

    virtual OperatingRates rates(double delta) const = 0;

    /// True when tpr is nonincreasing and tnr nondecreasing in delta.
    virtual bool monotone() const { return true; }

    /// Default search interval for the solver.
    virtual std::pair<double, double> domain() const { return {1e-6, 1e8}; }
};

/// Rates tabulated at increasing thresholds, interpolated linearly in log(delta)
/// and held constant outside the table.
class TabulatedRateModel final : public RateModel {
public:
    TabulatedRateModel(std::vector<double> deltas, std::vector<double> tpr, std::vector<double> tnr);

    OperatingRates rates(double delta) const override;
    bool monotone() const override { return monotone_; }
    std::pair<double, double> domain() const override { return {deltas_.front(), deltas_.back()}; }

private:
    std::vector<double> deltas_;
    std::vector<double> log_deltas_;
    std::vector<double> tpr_;
    std::vector<double> tnr_;
    bool monotone_ = true;
};

struct SolverOptions {
    int grid_points = 512;
    /// Overrides for the model's search domain.
    std::optional<double> delta_min;
    std::optional<double> delta_max;
    /// Relative residual tolerance; absolute tolerance applies below delta = 1.
    double tol = 1e-8;
    double abs_tol = 1e-10;
    int max_bisections = 200;
    /// Try plain fixed-point iteration inside each bracket before bisecting.
    bool accelerate = false;
};

struct FixedPointResult {
    double delta_star = 0.0;
    /// |delta* - ratio(delta*)|
    double residual = 0.0;
    double tpr = 0.0;
    double tnr = 0.0;
    double metric_value_at_opt = 0.0;
    int iterations = 0;
    /// Roots that passed the residual check; the best by metric value is returned.
    int roots_found = 0;
    /// Grid probes where the derivative ratio was undefined.
    int skipped_probes = 0;
};

/// Solves delta = derivative_ratio(spec, tpr(delta), tnr(delta), prev).
///
/// The residual g(delta) = delta - ratio(delta) is scanned on a log-spaced grid
/// to bracket sign changes, and each bracket is refined by bisection in
/// log(delta). Sign changes whose refined residual exceeds the tolerance (poles
/// of the ratio) are discarded. When several roots survive, the one with the
/// largest metric value wins. Throws "no fixed point in domain" otherwise.
FixedPointResult solve_fixed_point(const MetricSpec& spec, const RateModel& model, double prev,
                                   const SolverOptions& opts = {});

/// Plain iteration delta <- ratio(delta) from `start`; returns the limit when
/// successive iterates agree to the solver tolerance within `max_iter` steps.
/// There is no contraction guarantee, so this is only an accelerator.
std::optional<double> iterate_fixed_point(const MetricSpec& spec, const RateModel& model, double prev,
                                          double start, const SolverOptions& opts = {}, int max_iter = 100);

struct SweepPoint {
    double prev = 0.0;
    std::optional<FixedPointResult> result;
    std::string error;  ///< set when result is empty
};

/// One solve per prevalence; per-point failures are recorded, not thrown.
std::vector<SweepPoint> sweep_delta_star(const MetricSpec& spec, const RateModel& model,
                                         std::span<const double> prev_grid, const SolverOptions& opts = {});

/// Regression-function threshold equivalent to density-ratio threshold delta:
/// delta * prev / (prev * delta + 1 - prev).
double threshold_density_to_regression(double delta, double prev);

/// Inverse of threshold_density_to_regression: (1 - prev) tilde / (prev (1 - tilde)).
double threshold_regression_to_density(double tilde, double prev);

/// `count` log-spaced points covering [lo, hi] inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace imbametric
