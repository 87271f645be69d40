#include "imbametric/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imbametric/error.hpp"
#include "imbametric/metric_spec_io.hpp"
#include "imbametric/parallel.hpp"
#include "imbametric/solver.hpp"

namespace imbametric {

namespace {

// Scores of each class, ascending.
struct SplitScores {
    std::vector<double> pos;
    std::vector<double> neg;

    explicit SplitScores(std::span<const ScoredSample> samples) {
        for (const auto& s : samples) (s.label == 1 ? pos : neg).push_back(s.score);
        std::sort(pos.begin(), pos.end());
        std::sort(neg.begin(), neg.end());
    }

    static std::uint64_t at_least(const std::vector<double>& v, double t) {
        return static_cast<std::uint64_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
    }

    ConfusionCounts counts(double t) const {
        const auto tp = at_least(pos, t);
        const auto fp = at_least(neg, t);
        return {tp, pos.size() - tp, fp, neg.size() - fp};
    }
};

CurvePoint make_point(double threshold, const ConfusionCounts& c) {
    CurvePoint p;
    p.threshold = threshold;
    const double n1 = static_cast<double>(c.n11 + c.n10);
    const double n0 = static_cast<double>(c.n01 + c.n00);
    p.tpr = static_cast<double>(c.n11) / n1;
    p.fpr = static_cast<double>(c.n01) / n0;
    const auto predicted = c.n11 + c.n01;
    if (predicted > 0) p.precision = static_cast<double>(c.n11) / static_cast<double>(predicted);
    return p;
}

}  // namespace

void validate_samples(std::span<const ScoredSample> samples, bool need_both) {
    if (samples.empty()) throw data_error("no samples");
    bool has0 = false;
    bool has1 = false;
    for (const auto& s : samples) {
        if (!(s.score >= 0.0 && s.score <= 1.0)) throw data_error("score outside [0, 1]");
        if (s.label == 1) {
            has1 = true;
        } else if (s.label == 0) {
            has0 = true;
        } else {
            throw data_error("label must be 0 or 1");
        }
    }
    if (need_both && !(has0 && has1)) throw data_error("samples must contain both labels");
}

std::vector<double> GridSpec::points() const {
    if (!(step >= 1e-9) || !std::isfinite(step)) throw usage_error("grid step must be at least 1e-9");
    if (!(start > 0.0 && stop < 1.0 && start <= stop)) throw usage_error("grid must satisfy 0 < start <= stop < 1");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
}

GridSpec parse_grid_spec(const std::string& text) {
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? std::string::npos : text.find(':', a + 1);
    if (b == std::string::npos || text.find(':', b + 1) != std::string::npos) {
        throw usage_error("grid must be start:stop:step");
    }
    GridSpec g{parse_double(text.substr(0, a), "grid start"), parse_double(text.substr(a + 1, b - a - 1), "grid stop"),
               parse_double(text.substr(b + 1), "grid step")};
    g.points();
    return g;
}

ConfusionCounts confusion_at(std::span<const ScoredSample> samples, double tilde_delta) {
    ConfusionCounts c;
    for (const auto& s : samples) {
        const bool predicted = s.score >= tilde_delta;
        if (s.label == 1) {
            (predicted ? c.n11 : c.n10)++;
        } else {
            (predicted ? c.n01 : c.n00)++;
        }
    }
    return c;
}

std::vector<std::optional<ThresholdSweepRow>> threshold_sweep(std::span<const ScoredSample> samples,
                                                              const MetricSpec& spec, const GridSpec& grid) {
    validate_samples(samples);
    const auto points = grid.points();
    const SplitScores split(samples);
    const double prev = static_cast<double>(split.pos.size()) / static_cast<double>(samples.size());

    std::vector<std::optional<ThresholdSweepRow>> rows(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        const auto triple = triple_from_counts(split.counts(points[i]));
        try {
            const double value = metric_value(spec, triple);
            rows[i] = ThresholdSweepRow{points[i], value, triple.tpr, triple.tnr,
                                        threshold_regression_to_density(points[i], prev)};
        } catch (const Error&) {
        }
    });
    return rows;
}

ThresholdSweepRow grid_optimize(std::span<const ScoredSample> samples, const MetricSpec& spec, const GridSpec& grid) {
    const auto rows = threshold_sweep(samples, spec, grid);
    const ThresholdSweepRow* best = nullptr;
    for (const auto& r : rows) {
        if (r && (!best || r->metric_value > best->metric_value)) best = &*r;
    }
    if (!best) throw numeric_error("metric undefined at every grid point");
    return *best;
}

std::optional<double> precision_from_rates(double fpr, double tpr, double prev) {
    const double num = tpr * prev;
    const double den = num + fpr * (1.0 - prev);
    if (!(den > 0.0)) return std::nullopt;
    return num / den;
}

std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples) {
    validate_samples(samples);
    const SplitScores split(samples);
    std::vector<double> thresholds;
    thresholds.reserve(samples.size());
    for (const auto& s : samples) thresholds.push_back(s.score);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<CurvePoint> out;
    out.reserve(thresholds.size() + 1);
    const double inf = std::numeric_limits<double>::infinity();
    out.push_back(make_point(inf, split.counts(inf)));
    for (double t : thresholds) out.push_back(make_point(t, split.counts(t)));
    return out;
}

std::vector<CurvePoint> recall_vs_one_minus_precision(std::span<const ScoredSample> samples) {
    auto roc = roc_curve(samples);
    std::erase_if(roc, [](const CurvePoint& p) { return !p.precision; });
    return roc;
}

CurvePoint curve_point_at(std::span<const ScoredSample> samples, double tilde_delta) {
    validate_samples(samples);
    return make_point(tilde_delta, confusion_at(samples, tilde_delta));
}

double auc(std::span<const ScoredSample> samples) {
    validate_samples(samples);
    const SplitScores split(samples);
    // each positive beats the negatives below it and ties with the equal ones
    double wins = 0.0;
    for (double s : split.pos) {
        const auto lo = std::lower_bound(split.neg.begin(), split.neg.end(), s);
        const auto hi = std::upper_bound(lo, split.neg.end(), s);
        wins += static_cast<double>(lo - split.neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(split.pos.size()) * static_cast<double>(split.neg.size()));
}

std::vector<OptimalPoint> optimal_points(std::span<const ScoredSample> samples, std::span<const MetricSpec> specs,
                                         const GridSpec& grid) {
    std::vector<OptimalPoint> out;
    out.reserve(specs.size());
    for (const auto& spec : specs) {
        const auto row = grid_optimize(samples, spec, grid);
        out.push_back({spec, row, curve_point_at(samples, row.tilde_delta)});
    }
    return out;
}

}  // namespace imbametric
