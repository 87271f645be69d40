#pragma once

// Desk-scale simulation: draw labelled Gaussian samples, fit a logistic
// regression, and grid-optimize regression thresholds on the fitted scores.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "imbametric/empirical.hpp"
#include "imbametric/gaussian.hpp"

namespace imbametric {

struct SampleDesign {
    std::uint64_t n1 = 0;
    std::uint64_t n0 = 0;
    bool operator==(const SampleDesign&) const = default;
};

struct SimConfig {
    explicit SimConfig(GaussianScenario s) : scenario(std::move(s)) {}

    GaussianScenario scenario;
    std::uint64_t n1 = 0;
    std::uint64_t n0 = 0;
    std::uint64_t seed = 0;
    std::vector<MetricSpec> metrics;
    GridSpec grid;
    /// Additional (n1, n0) designs; when empty only (n1, n0) is run.
    std::vector<SampleDesign> designs;
    /// Score and evaluate a fresh sample of the same design instead of the
    /// training sample.
    bool holdout = false;

    /// (n1, n0) when no designs are listed, otherwise the listed designs.
    std::vector<SampleDesign> all_designs() const;
};

/// sim.json: {"scenario": {...}, "n1": 3000, "n0": 7000, "seed": 1,
/// "metrics": ["f1.5", "mcc"], "grid": "0.001:0.999:0.001" or
/// {"start":..,"stop":..,"step":..}, "designs": [{"n1":..,"n0":..}], "holdout": false}
SimConfig sim_config_from_json(const nlohmann::json& j);
SimConfig load_sim_config(const std::string& path);

struct LabeledData {
    Eigen::MatrixXd x;  ///< one row per sample
    std::vector<int> y;
};

/// n1 rows from class 1 followed by n0 rows from class 0, x = mu + L z with
/// L the Cholesky factor of the class covariance.
LabeledData sample_scenario(const GaussianScenario& scenario, std::uint64_t n1, std::uint64_t n0,
                            std::uint64_t seed);

struct LogisticOptions {
    int max_iterations = 100;
    double gradient_tol = 1e-8;
    double ridge = 1e-10;
};

struct LogisticFit {
    Eigen::VectorXd coefficients;  ///< intercept first, then one slope per feature
    bool converged = false;
    int iterations = 0;
    /// Largest absolute component of the gradient of the mean log-likelihood.
    double max_gradient_norm = 0.0;
    /// Set for non-convergence or too few samples in the minority class.
    bool degenerate = false;
    std::string diagnostic;
};

/// Maximum likelihood by IRLS with step halving.
LogisticFit fit_logistic(const LabeledData& data, const LogisticOptions& opts = {});

/// logistic(b0 + x' b) per row.
std::vector<ScoredSample> score_samples(const LogisticFit& fit, const LabeledData& data);

struct ReportRow {
    std::size_t design = 0;
    SampleDesign sizes;
    double prevalence = 0.0;
    MetricSpec metric;
    ThresholdSweepRow row;
    bool fit_converged = false;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<LogisticFit> fits;  ///< one per design
};

ExperimentReport run_experiment(const SimConfig& cfg);

/// design,n1,n0,prevalence,metric,value,tilde_delta,tpr,tnr,delta,converged
std::string report_csv(const ExperimentReport& report);

/// Aligned text table with `digits` decimals.
std::string report_table(const ExperimentReport& report, int digits = 3);

}  // namespace imbametric
