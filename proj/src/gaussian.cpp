#include "imbametric/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "imbametric/error.hpp"
#include "imbametric/random.hpp"

namespace imbametric {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kEqualCovTol = 1e-12;

void check_covariance(const Eigen::MatrixXd& s, int d, const char* name) {
    if (s.rows() != d || s.cols() != d) {
        throw data_error(std::string(name) + " has wrong dimensions");
    }
    if (!s.allFinite()) throw data_error(std::string(name) + " has non-finite entries");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
        throw data_error(std::string(name) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) {
        throw data_error(std::string(name) + " is not positive definite");
    }
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const Eigen::VectorXd root = es.eigenvalues().cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double log_det(const Eigen::MatrixXd& s) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    const Eigen::MatrixXd& l = llt.matrixL();
    return 2.0 * l.diagonal().array().log().sum();
}

// Decomposition of the log density ratio seen from class `own` against `other`:
// with x = mu_own + S^{1/2} Q z,
//   (x - mu_own)' S_own^-1 (x - mu_own) - (x - mu_other)' S_other^-1 (x - mu_other)
//     = z' diag(lambda) z + 2 a' z - m' S_other^-1 m,   m = mu_own - mu_other.
QuadFormSpec decompose(const Eigen::VectorXd& mu_own, const Eigen::MatrixXd& s_own,
                       const Eigen::VectorXd& mu_other, const Eigen::MatrixXd& s_other) {
    const int d = static_cast<int>(mu_own.size());
    const Eigen::MatrixXd root = sym_sqrt(s_own);
    const Eigen::LLT<Eigen::MatrixXd> other(s_other);
    const Eigen::MatrixXd other_inv_root = other.solve(root);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - root * other_inv_root;
    m = 0.5 * (m + m.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    QuadFormSpec f;
    f.rotation = es.eigenvectors();
    f.lambda = es.eigenvalues();
    const Eigen::VectorXd diff = mu_own - mu_other;
    f.a = -f.rotation.transpose() * (root * other.solve(diff));

    for (int i = 0; i < d; ++i) {
        if (std::abs(f.lambda(i)) < kZeroEigenvalue) {
            f.lambda(i) = 0.0;
            f.linear.push_back(f.a(i));
        } else {
            const double shift = f.a(i) / f.lambda(i);
            f.weights.push_back(f.lambda(i));
            f.shifts.push_back(shift);
            f.noncentrality.push_back(shift * shift);
            f.offset -= f.a(i) * shift;
        }
    }
    f.bound_constant = log_det(s_other) - log_det(s_own) + diff.dot(other.solve(diff));
    return f;
}

// ---------------------------------------------------------------------------
// Characteristic-function inversion
// ---------------------------------------------------------------------------

struct CfTerms {
    const QuadFormSpec* form;
    double linear_sq = 0.0;  // sum of squared linear coefficients
    double x = 0.0;
    double omega = 0.0;      // asymptotic frequency of theta(u) - u x
};

// log|phi(u)| and the phase theta(u) of the characteristic function of L.
void cf_polar(const CfTerms& t, double u, double& log_mod, double& phase) {
    log_mod = -2.0 * t.linear_sq * u * u;
    phase = t.form->offset * u;
    const auto& w = t.form->weights;
    const auto& nc = t.form->noncentrality;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double lu = w[j] * u;
        const double r = 1.0 + 4.0 * lu * lu;
        log_mod -= 0.25 * std::log1p(4.0 * lu * lu) + 2.0 * lu * lu * nc[j] / r;
        phase += 0.5 * std::atan(2.0 * lu) + lu * nc[j] / r;
    }
}

double head_integrand(double u, void* params) {
    const auto& t = *static_cast<const CfTerms*>(params);
    if (u == 0.0) return 0.0;
    double lm = 0.0;
    double ph = 0.0;
    cf_polar(t, u, lm, ph);
    return std::exp(lm) * std::sin(ph - u * t.x) / u;
}

// Slowly varying parts of the tail integrand once the frequency omega is split off:
// sin(omega u + psi) = sin(omega u) cos(psi) + cos(omega u) sin(psi).
double tail_cos_part(double u, void* params) {
    const auto& t = *static_cast<const CfTerms*>(params);
    double lm = 0.0;
    double ph = 0.0;
    cf_polar(t, u, lm, ph);
    const double psi = ph - u * t.x - t.omega * u;
    return std::exp(lm) * std::cos(psi) / u;
}

double tail_sin_part(double u, void* params) {
    const auto& t = *static_cast<const CfTerms*>(params);
    double lm = 0.0;
    double ph = 0.0;
    cf_polar(t, u, lm, ph);
    const double psi = ph - u * t.x - t.omega * u;
    return std::exp(lm) * std::sin(psi) / u;
}

struct Workspace {
    explicit Workspace(std::size_t n) : ws(gsl_integration_workspace_alloc(n)), cyc(gsl_integration_workspace_alloc(n)) {}
    ~Workspace() {
        gsl_integration_workspace_free(ws);
        gsl_integration_workspace_free(cyc);
    }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;
    gsl_integration_workspace* ws;
    gsl_integration_workspace* cyc;
};

struct QawoTable {
    QawoTable(double omega, enum gsl_integration_qawo_enum kind)
        : table(gsl_integration_qawo_table_alloc(omega, 1.0, kind, 50)) {}
    ~QawoTable() { gsl_integration_qawo_table_free(table); }
    QawoTable(const QawoTable&) = delete;
    QawoTable& operator=(const QawoTable&) = delete;
    gsl_integration_qawo_table* table;
};

void disable_gsl_abort() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

constexpr std::size_t kLimit = 2000;

// Returns the integral of |phi(u)| sin(theta(u) - u x) / u over (0, inf)
// and its error estimate, or nullopt when GSL reports failure.
std::optional<std::pair<double, double>> gil_pelaez_integral(const QuadFormSpec& form, double x, double abs_tol) {
    disable_gsl_abort();
    CfTerms terms{&form};
    for (double a : form.linear) terms.linear_sq += a * a;
    terms.x = x;
    terms.omega = form.offset - x;

    double lambda_max = 0.0;
    for (double w : form.weights) lambda_max = std::max(lambda_max, std::abs(w));
    // Past 1/|lambda| the phase is close to linear; Gaussian decay from linear
    // terms is negligible beyond a few standard deviations.
    double head_end = lambda_max > 0.0 ? 20.0 / lambda_max : 1.0;
    if (terms.linear_sq > 0.0) {
        const double gauss_end = std::sqrt(50.0 / (2.0 * terms.linear_sq));
        head_end = lambda_max > 0.0 ? std::min(head_end, gauss_end) : gauss_end;
    }
    head_end = std::max(head_end, 1e-3);

    Workspace work(kLimit);
    gsl_function head{&head_integrand, &terms};
    double head_val = 0.0;
    double head_err = 0.0;
    int status = gsl_integration_qags(&head, 0.0, head_end, abs_tol, 1e-12, kLimit, work.ws, &head_val, &head_err);
    if (status != GSL_SUCCESS && status != GSL_EROUND) return std::nullopt;

    double tail_val = 0.0;
    double tail_err = 0.0;
    if (std::abs(terms.omega) < 1e-12) {
        gsl_function f{&tail_sin_part, &terms};
        status = gsl_integration_qagiu(&f, head_end, abs_tol, 1e-12, kLimit, work.ws, &tail_val, &tail_err);
        if (status != GSL_SUCCESS && status != GSL_EROUND) return std::nullopt;
    } else {
        const double omega = std::abs(terms.omega);
        const double sign = terms.omega > 0.0 ? 1.0 : -1.0;
        QawoTable sin_table(omega, GSL_INTEG_SINE);
        QawoTable cos_table(omega, GSL_INTEG_COSINE);
        gsl_function fc{&tail_cos_part, &terms};
        gsl_function fs{&tail_sin_part, &terms};
        double v1 = 0.0;
        double e1 = 0.0;
        double v2 = 0.0;
        double e2 = 0.0;
        status = gsl_integration_qawf(&fc, head_end, abs_tol, kLimit, work.ws, work.cyc, sin_table.table, &v1, &e1);
        if (status != GSL_SUCCESS && status != GSL_EROUND) return std::nullopt;
        status = gsl_integration_qawf(&fs, head_end, abs_tol, kLimit, work.ws, work.cyc, cos_table.table, &v2, &e2);
        if (status != GSL_SUCCESS && status != GSL_EROUND) return std::nullopt;
        tail_val = sign * v1 + v2;
        tail_err = e1 + e2;
    }
    return std::make_pair(head_val + tail_val, head_err + tail_err);
}

}  // namespace

// ---------------------------------------------------------------------------

GaussianScenario::GaussianScenario(Eigen::VectorXd mu0, Eigen::VectorXd mu1, Eigen::MatrixXd sigma0,
                                   Eigen::MatrixXd sigma1)
    : mu0_(std::move(mu0)), mu1_(std::move(mu1)), sigma0_(std::move(sigma0)), sigma1_(std::move(sigma1)) {
    const auto d = mu0_.size();
    if (d < 1 || d > kMaxDim) {
        throw data_error("dimension must be between 1 and 50");
    }
    if (mu1_.size() != d) throw data_error("mean vectors differ in dimension");
    if (!mu0_.allFinite() || !mu1_.allFinite()) throw data_error("mean vector has non-finite entries");
    check_covariance(sigma0_, static_cast<int>(d), "sigma0");
    check_covariance(sigma1_, static_cast<int>(d), "sigma1");
    equal_cov_ = (sigma0_ - sigma1_).cwiseAbs().maxCoeff() <= kEqualCovTol;
}

GaussianScenario GaussianScenario::lda(Eigen::VectorXd mu0, Eigen::VectorXd mu1, const Eigen::MatrixXd& sigma) {
    return GaussianScenario(std::move(mu0), std::move(mu1), sigma, sigma);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double mahalanobis_delta(const GaussianScenario& s) {
    if (!s.equal_cov()) {
        throw usage_error("Δ defined only for LDA");
    }
    const Eigen::VectorXd diff = s.mu1() - s.mu0();
    return std::sqrt(diff.dot(s.sigma0().llt().solve(diff)));
}

OperatingRates lda_rates(double mahalanobis, double delta) {
    if (mahalanobis == 0.0) throw data_error("zero Mahalanobis distance");
    if (!(mahalanobis > 0.0) || !std::isfinite(mahalanobis)) {
        throw data_error("Mahalanobis distance must be positive");
    }
    if (!(delta >= 0.0)) throw data_error("threshold must be nonnegative");
    if (delta == 0.0) return {1.0, 0.0};
    if (std::isinf(delta)) return {0.0, 1.0};
    const double ld = std::log(delta);
    const double half = 0.5 * mahalanobis * mahalanobis;
    return {normal_cdf((-ld + half) / mahalanobis), normal_cdf((ld + half) / mahalanobis)};
}

OperatingRates lda_rates(const GaussianScenario& scenario, double delta) {
    return lda_rates(mahalanobis_delta(scenario), delta);
}

double QuadFormSpec::bound(double delta) const { return log_delta_coef * std::log(delta) + bound_constant; }

Eigen::MatrixXd QuadFormSpec::reassemble() const { return rotation * lambda.asDiagonal() * rotation.transpose(); }

QuadFormSpec qda_decompose(const GaussianScenario& s, int under_class) {
    QuadFormSpec f;
    if (under_class == 1) {
        f = decompose(s.mu1(), s.sigma1(), s.mu0(), s.sigma0());
        f.log_delta_coef = -2.0;
    } else if (under_class == 0) {
        f = decompose(s.mu0(), s.sigma0(), s.mu1(), s.sigma1());
        f.log_delta_coef = 2.0;
    } else {
        throw usage_error("class label must be 0 or 1");
    }
    f.under_class = under_class;
    return f;
}

double quad_form_cdf_monte_carlo(const QuadFormSpec& form, double x, std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw usage_error("Monte Carlo needs at least one sample");
    Rng rng(seed);
    const auto d = form.lambda.size();
    std::size_t hits = 0;
    for (std::size_t n = 0; n < samples; ++n) {
        double l = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double z = rng.normal();
            l += form.lambda(i) * z * z + 2.0 * form.a(i) * z;
        }
        if (l <= x) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(samples);
}

CdfResult quad_form_cdf(const QuadFormSpec& form, double x, const GenChiSqOptions& opts, bool strict) {
    double linear_sq = 0.0;
    for (double a : form.linear) linear_sq += a * a;
    if (form.weights.empty() && linear_sq == 0.0) {
        // L is the constant `offset`
        const bool below = strict ? form.offset < x : form.offset <= x;
        return {below ? 1.0 : 0.0, 0.0, false};
    }
    if (std::isinf(x)) return {x > 0 ? 1.0 : 0.0, 0.0, false};

    if (!opts.force_monte_carlo) {
        if (auto r = gil_pelaez_integral(form, x, opts.abs_tol)) {
            const double value = 0.5 - r->first / std::numbers::pi;
            const double err = r->second / std::numbers::pi;
            if (err <= opts.fallback_threshold && std::isfinite(value)) {
                return {std::clamp(value, 0.0, 1.0), err, false};
            }
        }
    }
    const double p = quad_form_cdf_monte_carlo(form, x, opts.mc_samples, opts.seed);
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(opts.mc_samples));
    return {p, se, true};
}

OperatingRates qda_rates(const GaussianScenario& scenario, double delta, const GenChiSqOptions& opts) {
    return QdaRateModel(scenario, opts).rates(delta);
}

LdaRateModel::LdaRateModel(double mahalanobis) : mahalanobis_(mahalanobis) {
    if (mahalanobis == 0.0) throw data_error("zero Mahalanobis distance");
    if (!(mahalanobis > 0.0) || !std::isfinite(mahalanobis)) {
        throw data_error("Mahalanobis distance must be positive");
    }
}

LdaRateModel::LdaRateModel(const GaussianScenario& scenario) : LdaRateModel(mahalanobis_delta(scenario)) {}

QdaRateModel::QdaRateModel(const GaussianScenario& scenario, GenChiSqOptions opts)
    : class1_(qda_decompose(scenario, 1)), class0_(qda_decompose(scenario, 0)), opts_(opts) {}

OperatingRates QdaRateModel::rates(double delta) const {
    if (!(delta >= 0.0)) throw data_error("threshold must be nonnegative");
    if (delta == 0.0) return {1.0, 0.0};
    if (std::isinf(delta)) return {0.0, 1.0};
    {
        std::shared_lock lock(cache_mutex_);
        if (auto it = cache_.find(delta); it != cache_.end()) return it->second;
    }
    // predicted 1 on ties: tpr = P(L1 <= b1), tnr = P(L0 < b0)
    const double tpr = quad_form_cdf(class1_, class1_.bound(delta), opts_, false).value;
    const double tnr = quad_form_cdf(class0_, class0_.bound(delta), opts_, true).value;
    const OperatingRates r{tpr, tnr};
    std::unique_lock lock(cache_mutex_);
    cache_.emplace(delta, r);
    return r;
}

}  // namespace imbametric
