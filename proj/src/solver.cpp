#include "imbametric/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imbametric/error.hpp"
#include "imbametric/parallel.hpp"

namespace imbametric {

namespace {

struct Probe {
    double delta = 0.0;
    double g = 0.0;
    OperatingRates rates;
    bool valid = false;
};

Probe evaluate(const MetricSpec& spec, const RateModel& model, double prev, double delta) {
    Probe probe;
    probe.delta = delta;
    probe.rates = model.rates(delta);
    try {
        const double ratio = derivative_ratio(spec, {probe.rates.tpr, probe.rates.tnr, prev});
        probe.g = delta - ratio;
        probe.valid = std::isfinite(probe.g);
    } catch (const Error&) {
        probe.valid = false;
    }
    return probe;
}

double accept_tol(const SolverOptions& opts, double delta) {
    return std::max(opts.abs_tol, opts.tol * delta);
}

bool opposite(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

struct Root {
    Probe probe;
    int iterations = 0;
};

// Bisection in log(delta) on a bracket with g(lo) and g(hi) of opposite signs.
std::optional<Root> refine(const MetricSpec& spec, const RateModel& model, double prev, Probe lo, Probe hi,
                           const SolverOptions& opts) {
    if (opts.accelerate) {
        const double start = std::sqrt(lo.delta * hi.delta);
        if (auto fp = iterate_fixed_point(spec, model, prev, start, opts, 50)) {
            if (*fp >= lo.delta && *fp <= hi.delta) {
                Probe p = evaluate(spec, model, prev, *fp);
                if (p.valid && std::abs(p.g) <= accept_tol(opts, p.delta)) return Root{p, 0};
            }
        }
    }

    int it = 0;
    for (; it < opts.max_bisections; ++it) {
        const double mid = std::sqrt(lo.delta * hi.delta);
        if (!(mid > lo.delta && mid < hi.delta)) break;
        if (hi.delta - lo.delta <= 4.0 * std::numeric_limits<double>::epsilon() * hi.delta) break;
        Probe m = evaluate(spec, model, prev, mid);
        if (!m.valid) return std::nullopt;
        if (m.g == 0.0) {
            lo = hi = m;
            break;
        }
        if (opposite(lo.g, m.g)) {
            hi = m;
        } else {
            lo = m;
        }
    }
    const Probe& best = std::abs(lo.g) <= std::abs(hi.g) ? lo : hi;
    if (std::abs(best.g) > accept_tol(opts, best.delta)) {
        // a jump of the ratio rather than a crossing
        return std::nullopt;
    }
    return Root{best, it};
}

}  // namespace

TabulatedRateModel::TabulatedRateModel(std::vector<double> deltas, std::vector<double> tpr, std::vector<double> tnr)
    : deltas_(std::move(deltas)), tpr_(std::move(tpr)), tnr_(std::move(tnr)) {
    if (deltas_.empty() || deltas_.size() != tpr_.size() || deltas_.size() != tnr_.size()) {
        throw data_error("rate table columns must be nonempty and of equal length");
    }
    for (std::size_t i = 0; i < deltas_.size(); ++i) {
        if (!(deltas_[i] > 0.0) || (i > 0 && !(deltas_[i] > deltas_[i - 1]))) {
            throw data_error("rate table thresholds must be positive and strictly increasing");
        }
        if (!(tpr_[i] >= 0.0 && tpr_[i] <= 1.0 && tnr_[i] >= 0.0 && tnr_[i] <= 1.0)) {
            throw data_error("rate table entries must be probabilities");
        }
        if (i > 0 && (tpr_[i] > tpr_[i - 1] || tnr_[i] < tnr_[i - 1])) monotone_ = false;
        log_deltas_.push_back(std::log(deltas_[i]));
    }
}

OperatingRates TabulatedRateModel::rates(double delta) const {
    if (delta <= deltas_.front()) return {tpr_.front(), tnr_.front()};
    if (delta >= deltas_.back()) return {tpr_.back(), tnr_.back()};
    const auto it = std::upper_bound(deltas_.begin(), deltas_.end(), delta);
    const auto hi = static_cast<std::size_t>(it - deltas_.begin());
    const auto lo = hi - 1;
    const double w = (std::log(delta) - log_deltas_[lo]) / (log_deltas_[hi] - log_deltas_[lo]);
    return {tpr_[lo] + w * (tpr_[hi] - tpr_[lo]), tnr_[lo] + w * (tnr_[hi] - tnr_[lo])};
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) {
        throw usage_error("log grid requires 0 < lo < hi and at least two points");
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

FixedPointResult solve_fixed_point(const MetricSpec& spec, const RateModel& model, double prev,
                                   const SolverOptions& opts) {
    if (!(prev > 0.0 && prev < 1.0)) {
        throw usage_error("prevalence must lie in (0, 1)");
    }
    const auto [model_lo, model_hi] = model.domain();
    const double lo = opts.delta_min.value_or(model_lo);
    const double hi = opts.delta_max.value_or(model_hi);
    if (!(lo > 0.0 && hi > lo)) {
        throw usage_error("empty search domain");
    }

    const auto grid = log_grid(lo, hi, std::max(opts.grid_points, 2));
    std::vector<Probe> probes;
    probes.reserve(grid.size());
    int skipped = 0;
    for (double delta : grid) {
        probes.push_back(evaluate(spec, model, prev, delta));
        if (!probes.back().valid) ++skipped;
    }
    if (skipped == static_cast<int>(probes.size())) {
        throw numeric_error("no fixed point in domain: derivative ratio undefined at every probe");
    }

    std::vector<Root> roots;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const Probe& a = probes[i];
        if (!a.valid) continue;
        if (a.g == 0.0) {
            roots.push_back({a, 0});
            continue;
        }
        if (i + 1 < probes.size() && probes[i + 1].valid && opposite(a.g, probes[i + 1].g)) {
            if (auto r = refine(spec, model, prev, a, probes[i + 1], opts)) roots.push_back(*r);
        }
    }

    std::optional<FixedPointResult> best;
    for (const auto& root : roots) {
        double value = 0.0;
        try {
            value = metric_value(spec, {root.probe.rates.tpr, root.probe.rates.tnr, prev});
        } catch (const Error&) {
            continue;
        }
        if (!best || value > best->metric_value_at_opt) {
            best = FixedPointResult{root.probe.delta, std::abs(root.probe.g), root.probe.rates.tpr,
                                    root.probe.rates.tnr, value, root.iterations, 0, skipped};
        }
    }
    if (!best) {
        throw numeric_error("no fixed point in domain");
    }
    best->roots_found = static_cast<int>(roots.size());
    return *best;
}

std::optional<double> iterate_fixed_point(const MetricSpec& spec, const RateModel& model, double prev,
                                          double start, const SolverOptions& opts, int max_iter) {
    double delta = start;
    for (int i = 0; i < max_iter; ++i) {
        const auto r = model.rates(delta);
        double next = 0.0;
        try {
            next = derivative_ratio(spec, {r.tpr, r.tnr, prev});
        } catch (const Error&) {
            return std::nullopt;
        }
        if (!(next > 0.0) || !std::isfinite(next)) return std::nullopt;
        if (std::abs(next - delta) <= accept_tol(opts, delta)) return next;
        delta = next;
    }
    return std::nullopt;
}

std::vector<SweepPoint> sweep_delta_star(const MetricSpec& spec, const RateModel& model,
                                         std::span<const double> prev_grid, const SolverOptions& opts) {
    std::vector<SweepPoint> out(prev_grid.size());
    parallel_for(prev_grid.size(), [&](std::size_t i) {
        out[i].prev = prev_grid[i];
        try {
            out[i].result = solve_fixed_point(spec, model, prev_grid[i], opts);
        } catch (const Error& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

double threshold_density_to_regression(double delta, double prev) {
    if (!(delta > 0.0) || !(prev > 0.0 && prev < 1.0)) {
        throw data_error("threshold conversion requires delta > 0 and prevalence in (0, 1)");
    }
    if (std::isinf(delta)) return 1.0;
    return delta * prev / (prev * delta + (1.0 - prev));
}

double threshold_regression_to_density(double tilde, double prev) {
    if (!(tilde > 0.0 && tilde < 1.0) || !(prev > 0.0 && prev < 1.0)) {
        throw data_error("threshold conversion requires tilde and prevalence in (0, 1)");
    }
    return (1.0 - prev) * tilde / (prev * (1.0 - tilde));
}

}  // namespace imbametric
