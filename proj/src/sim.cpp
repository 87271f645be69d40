#include "imbametric/sim.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "imbametric/error.hpp"
#include "imbametric/io.hpp"
#include "imbametric/metric_spec_io.hpp"
#include "imbametric/parallel.hpp"
#include "imbametric/random.hpp"

namespace imbametric {

namespace {

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(t))
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double mean_log_likelihood(const Eigen::MatrixXd& design, const std::vector<int>& y, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += (y[static_cast<std::size_t>(i)] == 1 ? eta(i) : 0.0) - softplus(eta(i));
    }
    return ll / static_cast<double>(eta.size());
}

std::uint64_t read_count(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw data_error(std::string("sim config needs '") + key + "'");
    if (!j[key].is_number_unsigned()) throw data_error(std::string("'") + key + "' must be a nonnegative integer");
    return j[key].get<std::uint64_t>();
}

GridSpec read_grid(const nlohmann::json& g) {
    if (g.is_string()) return parse_grid_spec(g.get<std::string>());
    if (!g.is_object()) throw data_error("'grid' must be a string or an object");
    GridSpec grid;
    if (g.contains("start")) grid.start = g["start"].get<double>();
    if (g.contains("stop")) grid.stop = g["stop"].get<double>();
    if (g.contains("step")) grid.step = g["step"].get<double>();
    grid.points();
    return grid;
}

}  // namespace

std::vector<SampleDesign> SimConfig::all_designs() const {
    if (designs.empty()) return {{n1, n0}};
    return designs;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw data_error("sim config must be a JSON object");
    if (!j.contains("scenario")) throw data_error("sim config needs 'scenario'");
    try {
        SimConfig cfg(scenario_from_json(j["scenario"]));
        if (j.contains("designs")) {
            if (!j["designs"].is_array() || j["designs"].empty()) throw data_error("'designs' must be a nonempty array");
            for (const auto& d : j["designs"]) cfg.designs.push_back({read_count(d, "n1"), read_count(d, "n0")});
            cfg.n1 = j.contains("n1") ? read_count(j, "n1") : cfg.designs.front().n1;
            cfg.n0 = j.contains("n0") ? read_count(j, "n0") : cfg.designs.front().n0;
        } else {
            cfg.n1 = read_count(j, "n1");
            cfg.n0 = read_count(j, "n0");
        }
        for (const auto& d : cfg.all_designs()) {
            if (d.n1 < 2 || d.n0 < 2) throw data_error("n1 and n0 must be at least 2");
        }
        cfg.seed = read_count(j, "seed");
        if (!j.contains("metrics") || !j["metrics"].is_array() || j["metrics"].empty()) {
            throw data_error("sim config needs a nonempty 'metrics' array");
        }
        for (const auto& m : j["metrics"]) {
            if (!m.is_string()) throw data_error("'metrics' entries must be strings");
            cfg.metrics.push_back(parse_metric_spec(m.get<std::string>()));
        }
        if (j.contains("grid")) cfg.grid = read_grid(j["grid"]);
        if (j.contains("holdout")) {
            if (!j["holdout"].is_boolean()) throw data_error("'holdout' must be true or false");
            cfg.holdout = j["holdout"].get<bool>();
        }
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("sim config: ") + e.what());
    }
}

SimConfig load_sim_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception&) {
        throw data_error(path + ": invalid JSON");
    }
    try {
        return sim_config_from_json(j);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

LabeledData sample_scenario(const GaussianScenario& scenario, std::uint64_t n1, std::uint64_t n0,
                            std::uint64_t seed) {
    if (n1 == 0 || n0 == 0) throw data_error("both class sizes must be positive");
    const int d = scenario.dim();
    LabeledData out;
    out.x.resize(static_cast<Eigen::Index>(n1 + n0), d);
    out.y.resize(n1 + n0);

    auto draw = [&](const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, std::uint64_t count, std::uint64_t first,
                    int label, std::uint64_t stream) {
        const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) throw data_error("covariance is not positive definite");
        const Eigen::MatrixXd l = llt.matrixL();
        Rng rng(derive_seed(seed, stream));
        Eigen::VectorXd z(d);
        for (std::uint64_t i = 0; i < count; ++i) {
            for (int k = 0; k < d; ++k) z(k) = rng.normal();
            out.x.row(static_cast<Eigen::Index>(first + i)) = (mu + l * z).transpose();
            out.y[first + i] = label;
        }
    };
    draw(scenario.mu1(), scenario.sigma1(), n1, 0, 1, 1);
    draw(scenario.mu0(), scenario.sigma0(), n0, n1, 0, 0);
    return out;
}

LogisticFit fit_logistic(const LabeledData& data, const LogisticOptions& opts) {
    const auto n = data.x.rows();
    const auto p = data.x.cols() + 1;
    if (n == 0 || static_cast<std::size_t>(n) != data.y.size()) throw data_error("empty or inconsistent data");
    std::size_t positives = 0;
    for (int v : data.y) positives += v == 1 ? 1 : 0;
    const std::size_t negatives = data.y.size() - positives;
    if (positives == 0 || negatives == 0) throw data_error("both classes must be present");

    Eigen::MatrixXd design(n, p);
    design.col(0).setOnes();
    design.rightCols(p - 1) = data.x;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = data.y[static_cast<std::size_t>(i)];

    LogisticFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(p);
    double ll = mean_log_likelihood(design, data.y, fit.coefficients);
    const double inv_n = 1.0 / static_cast<double>(n);
    bool stalled = false;

    for (int it = 0;; ++it) {
        const Eigen::VectorXd eta = design * fit.coefficients;
        Eigen::VectorXd mu(n);
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu(i) = sigmoid(eta(i));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        const Eigen::VectorXd grad = design.transpose() * (y - mu) * inv_n;
        fit.max_gradient_norm = grad.cwiseAbs().maxCoeff();
        fit.iterations = it;
        if (fit.max_gradient_norm <= opts.gradient_tol) {
            fit.converged = true;
            break;
        }
        if (it >= opts.max_iterations || stalled) break;

        Eigen::MatrixXd h = design.transpose() * w.asDiagonal() * design * inv_n;
        h.diagonal().array() += opts.ridge;
        const Eigen::VectorXd step = h.ldlt().solve(grad);

        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            const Eigen::VectorXd trial = fit.coefficients + t * step;
            const double trial_ll = mean_log_likelihood(design, data.y, trial);
            if (std::isfinite(trial_ll) && trial_ll >= ll - 1e-15 * std::abs(ll)) {
                fit.coefficients = trial;
                ll = trial_ll;
                accepted = true;
                break;
            }
        }
        stalled = !accepted;
    }

    // A linear predictor that splits the classes means the likelihood has no
    // maximizer; the gradient can still shrink below tolerance along the way.
    const Eigen::VectorXd eta = design * fit.coefficients;
    double min_pos = std::numeric_limits<double>::infinity();
    double max_neg = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (data.y[static_cast<std::size_t>(i)] == 1) {
            min_pos = std::min(min_pos, eta(i));
        } else {
            max_neg = std::max(max_neg, eta(i));
        }
    }
    const bool separated = min_pos >= max_neg && eta.maxCoeff() > eta.minCoeff();

    const auto minority = std::min(positives, negatives);
    if (separated) {
        fit.converged = false;
        fit.degenerate = true;
        fit.diagnostic = "classes are perfectly separated; the maximum-likelihood estimate does not exist";
    } else if (!fit.converged) {
        fit.degenerate = true;
        fit.diagnostic = stalled ? "line search stalled before the gradient vanished"
                                 : "no convergence within " + std::to_string(opts.max_iterations) +
                                       " iterations (classes may be separable)";
    }
    if (minority < static_cast<std::size_t>(p)) {
        fit.degenerate = true;
        if (!fit.diagnostic.empty()) fit.diagnostic += "; ";
        fit.diagnostic += "minority class has fewer samples than coefficients";
    }
    return fit;
}

std::vector<ScoredSample> score_samples(const LogisticFit& fit, const LabeledData& data) {
    if (fit.coefficients.size() != data.x.cols() + 1) throw data_error("coefficient count does not match features");
    const Eigen::VectorXd eta =
        (data.x * fit.coefficients.tail(data.x.cols())).array() + fit.coefficients(0);
    std::vector<ScoredSample> out(data.y.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {sigmoid(eta(static_cast<Eigen::Index>(i))), data.y[i]};
    return out;
}

ExperimentReport run_experiment(const SimConfig& cfg) {
    if (cfg.metrics.empty()) throw usage_error("no metrics requested");
    const auto designs = cfg.all_designs();
    ExperimentReport report;
    report.fits.resize(designs.size());
    std::vector<std::vector<ReportRow>> per_design(designs.size());

    parallel_for(designs.size(), [&](std::size_t k) {
        const auto& d = designs[k];
        if (d.n1 < 2 || d.n0 < 2) throw data_error("n1 and n0 must be at least 2");
        const std::uint64_t cell = derive_seed(cfg.seed, k);
        const auto train = sample_scenario(cfg.scenario, d.n1, d.n0, derive_seed(cell, 0));
        report.fits[k] = fit_logistic(train);
        const auto scores = cfg.holdout
                                ? score_samples(report.fits[k], sample_scenario(cfg.scenario, d.n1, d.n0, derive_seed(cell, 1)))
                                : score_samples(report.fits[k], train);
        const double prev = static_cast<double>(d.n1) / static_cast<double>(d.n1 + d.n0);
        for (const auto& m : cfg.metrics) {
            per_design[k].push_back({k, d, prev, m, grid_optimize(scores, m, cfg.grid), report.fits[k].converged});
        }
    });
    for (auto& rows : per_design) {
        for (auto& r : rows) report.rows.push_back(std::move(r));
    }
    return report;
}

std::string report_csv(const ExperimentReport& report) {
    std::string out = "design,n1,n0,prevalence,metric,value,tilde_delta,tpr,tnr,delta,converged\n";
    for (const auto& r : report.rows) {
        out += std::to_string(r.design) + ',' + std::to_string(r.sizes.n1) + ',' + std::to_string(r.sizes.n0) + ',' +
               format_number(r.prevalence) + ',' + format_metric_spec(r.metric) + ',' +
               format_number(r.row.metric_value) + ',' + format_number(r.row.tilde_delta) + ',' +
               format_number(r.row.tpr) + ',' + format_number(r.row.tnr) + ',' + format_number(r.row.delta_density) +
               ',' + (r.fit_converged ? "1" : "0") + '\n';
    }
    return out;
}

std::string report_table(const ExperimentReport& report, int digits) {
    if (digits < 0 || digits > 17) throw usage_error("digits must be between 0 and 17");
    auto num = [&](double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", digits, x);
        return std::string(buf);
    };
    std::vector<std::array<std::string, 7>> cells;
    cells.push_back({"prev", "metric", "value", "tilde_delta", "tpr", "tnr", "delta"});
    for (const auto& r : report.rows) {
        cells.push_back({num(r.prevalence), display_name(r.metric), num(r.row.metric_value), num(r.row.tilde_delta),
                         num(r.row.tpr), num(r.row.tnr), num(r.row.delta_density)});
    }
    std::array<std::size_t, 7> width{};
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += "  ";
            const auto pad = width[c] - row[c].size();
            if (c == 1) {
                out += row[c] + std::string(pad, ' ');
            } else {
                out += std::string(pad, ' ') + row[c];
            }
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    }
    return out;
}

}  // namespace imbametric
