#pragma once

// Analytic rate models for Gaussian class-conditional distributions.
//
// Equal covariances give the linear discriminant case with closed-form rates
// in the Mahalanobis distance. Unequal covariances turn the log density ratio
// into an indefinite quadratic form in a standard normal vector, whose CDF is
// obtained by inverting its characteristic function.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <vector>

#include <Eigen/Dense>

#include "imbametric/solver.hpp"

namespace imbametric {

/// Class-conditional Gaussian pair N(mu0, sigma0), N(mu1, sigma1).
/// Validated on construction: matching dimensions (1 <= d <= 50), symmetric
/// covariances within 1e-10 and strictly positive eigenvalues.
class GaussianScenario {
public:
    static constexpr int kMaxDim = 50;

    GaussianScenario(Eigen::VectorXd mu0, Eigen::VectorXd mu1, Eigen::MatrixXd sigma0, Eigen::MatrixXd sigma1);

    /// Shared covariance.
    static GaussianScenario lda(Eigen::VectorXd mu0, Eigen::VectorXd mu1, const Eigen::MatrixXd& sigma);

    const Eigen::VectorXd& mu0() const { return mu0_; }
    const Eigen::VectorXd& mu1() const { return mu1_; }
    const Eigen::MatrixXd& sigma0() const { return sigma0_; }
    const Eigen::MatrixXd& sigma1() const { return sigma1_; }
    int dim() const { return static_cast<int>(mu0_.size()); }
    /// sigma0 == sigma1 within 1e-12.
    bool equal_cov() const { return equal_cov_; }

private:
    Eigen::VectorXd mu0_;
    Eigen::VectorXd mu1_;
    Eigen::MatrixXd sigma0_;
    Eigen::MatrixXd sigma1_;
    bool equal_cov_ = false;
};

/// Standard normal distribution function.
double normal_cdf(double x);

/// Delta = sqrt((mu1 - mu0)' sigma^-1 (mu1 - mu0)); requires equal covariances.
double mahalanobis_delta(const GaussianScenario& scenario);

/// tnr = Phi((log delta + D^2/2) / D), tpr = Phi((-log delta + D^2/2) / D).
OperatingRates lda_rates(double mahalanobis, double delta);
OperatingRates lda_rates(const GaussianScenario& scenario, double delta);

/// Quadratic form  L = sum_i lambda_i z_i^2 + 2 sum_i a_i z_i  in z ~ N(0, I),
/// the log density ratio rewritten under one class. With the eigenvalues
/// split into nonzero and zero parts,
///
///   L = sum_{lambda != 0} lambda (z + a/lambda)^2 - sum_{lambda != 0} a^2/lambda
///       + 2 sum_{lambda = 0} a z.
///
/// Under class 1 the classifier predicts 1 iff L <= bound(delta); under class 0
/// it predicts 0 iff L < bound(delta), where
/// bound(delta) = log_delta_coef * log(delta) + bound_constant.
struct QuadFormSpec {
    int under_class = 1;
    Eigen::VectorXd lambda;    ///< all eigenvalues; |lambda| < 1e-10 stored as 0
    Eigen::MatrixXd rotation;  ///< orthogonal Q with Q' M Q = diag(lambda)
    Eigen::VectorXd a;         ///< linear coefficients in rotated coordinates

    std::vector<double> weights;        ///< nonzero lambda_i
    std::vector<double> noncentrality;  ///< a_i^2 / lambda_i^2, parallel to weights
    std::vector<double> shifts;         ///< a_i / lambda_i, parallel to weights
    std::vector<double> linear;         ///< a_i where lambda_i == 0
    double offset = 0.0;                ///< -sum a_i^2 / lambda_i

    double log_delta_coef = 0.0;  ///< -2 under class 1, +2 under class 0
    double bound_constant = 0.0;

    double bound(double delta) const;
    /// Q diag(lambda) Q'
    Eigen::MatrixXd reassemble() const;
};

/// Eigenvalues with |lambda| below this are routed to the linear part.
inline constexpr double kZeroEigenvalue = 1e-10;

QuadFormSpec qda_decompose(const GaussianScenario& scenario, int under_class);

struct GenChiSqOptions {
    double abs_tol = 1e-10;             ///< requested quadrature accuracy per piece
    double fallback_threshold = 1e-6;   ///< switch to Monte Carlo above this error estimate
    std::size_t mc_samples = 1'000'000;
    std::uint64_t seed = 20240601;
    bool force_monte_carlo = false;
};

struct CdfResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool monte_carlo = false;
};

/// P(L <= x) for the quadratic form (P(L < x) when `strict`; the two agree
/// unless the form is degenerate).
CdfResult quad_form_cdf(const QuadFormSpec& form, double x, const GenChiSqOptions& opts = {}, bool strict = false);

/// Monte-Carlo estimate of P(L <= x) from `samples` seeded draws of z.
double quad_form_cdf_monte_carlo(const QuadFormSpec& form, double x, std::size_t samples, std::uint64_t seed);

/// Rates of the density-ratio classifier for general Gaussian classes.
/// On the tie set f1 = delta f0 the classifier predicts 1.
OperatingRates qda_rates(const GaussianScenario& scenario, double delta, const GenChiSqOptions& opts = {});

class LdaRateModel final : public RateModel {
public:
    explicit LdaRateModel(double mahalanobis);
    explicit LdaRateModel(const GaussianScenario& scenario);

    OperatingRates rates(double delta) const override { return lda_rates(mahalanobis_, delta); }
    double mahalanobis() const { return mahalanobis_; }

private:
    double mahalanobis_;
};

/// QDA rates with both class decompositions precomputed. Evaluations are
/// memoized per threshold, so repeated solves on the same probe grid (one per
/// prevalence in a sweep) reuse the quadratures.
class QdaRateModel final : public RateModel {
public:
    explicit QdaRateModel(const GaussianScenario& scenario, GenChiSqOptions opts = {});

    OperatingRates rates(double delta) const override;

    const QuadFormSpec& form(int under_class) const { return under_class == 1 ? class1_ : class0_; }

private:
    QuadFormSpec class1_;
    QuadFormSpec class0_;
    GenChiSqOptions opts_;
    mutable std::shared_mutex cache_mutex_;
    mutable std::map<double, OperatingRates> cache_;
};

}  // namespace imbametric
