#include "imbametric/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "imbametric/error.hpp"

namespace imbametric {

namespace {

constexpr double kInteriorTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void check_value_domain(const RateTriple& r) {
    if (!is_probability(r.tpr) || !is_probability(r.tnr)) {
        throw numeric_error("rate triple out of domain: tpr and tnr must lie in [0, 1]");
    }
    if (!std::isfinite(r.prev) || r.prev <= 0.0 || r.prev >= 1.0) {
        throw numeric_error("rate triple out of domain: prevalence must lie in (0, 1)");
    }
}

void check_interior(const RateTriple& r) {
    check_value_domain(r);
    auto inside = [](double x) { return x > kInteriorTol && x < 1.0 - kInteriorTol; };
    if (!inside(r.tpr) || !inside(r.tnr)) {
        throw numeric_error("derivative undefined at boundary");
    }
}

double safe_div(double num, double den) {
    if (den == 0.0 || !std::isfinite(den)) {
        throw numeric_error("degenerate metric input");
    }
    const double q = num / den;
    if (!std::isfinite(q)) {
        throw numeric_error("degenerate metric input");
    }
    return q;
}

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace

WeightedAccuracy::WeightedAccuracy(double w) : w_(w) {
    if (!(w > 0.0 && w < 1.0)) {
        throw usage_error("weighted accuracy requires w in (0, 1)");
    }
}

FBeta::FBeta(double beta) : beta_(beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw usage_error("F-score requires beta > 0");
    }
}

RobustF::RobustF(double c, double d0, double d1, std::optional<double> beta)
    : c_(c), d0_(d0), d1_(d1), beta_(beta) {
    if (!std::isfinite(c) || !std::isfinite(d0) || !std::isfinite(d1)) {
        throw usage_error("robust F parameters must be finite");
    }
    if (!(d0 > 0.0)) throw usage_error("d0 must be positive");
    if (!(c >= 0.0)) throw usage_error("c must be nonnegative");
    if (!(d1 >= 0.0)) throw usage_error("d1 must be nonnegative");
    if (!(d0 + d1 - c > 0.0)) throw usage_error("d0+d1-c must be positive");
    if (beta && !(*beta > 0.0 && std::isfinite(*beta))) {
        throw usage_error("beta must be positive");
    }
}

RobustMCC::RobustMCC(double d) : d_(d) {
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw usage_error("d must be positive");
    }
}

std::string display_name(const MetricSpec& spec) {
    return std::visit(
        Overloaded{
            [](const Accuracy&) -> std::string { return "ACC"; },
            [](const WeightedAccuracy& m) -> std::string { return "WACC(w=" + fmt(m.w()) + ")"; },
            [](const BalancedAccuracy&) -> std::string { return "BACC"; },
            [](const Jaccard&) -> std::string { return "JAC"; },
            [](const FBeta& m) -> std::string { return "F" + fmt(m.beta()); },
            [](const MCC&) -> std::string { return "MCC"; },
            [](const Kappa&) -> std::string { return "Kappa"; },
            [](const YuleQ&) -> std::string { return "YuleQ"; },
            [](const YuleY&) -> std::string { return "YuleY"; },
            [](const RobustF& m) -> std::string {
                return "F_rb(c=" + fmt(m.c()) + ",d0=" + fmt(m.d0()) + ",d1=" + fmt(m.d1()) + ")";
            },
            [](const RobustMCC& m) -> std::string { return "MCC_rb(d=" + fmt(m.d()) + ")"; },
        },
        spec);
}

ConfusionRates rates_from_counts(const ConfusionCounts& counts) {
    const auto total = counts.total();
    if (total == 0) {
        throw data_error("empty confusion matrix");
    }
    const double n = static_cast<double>(total);
    return {static_cast<double>(counts.n11) / n, static_cast<double>(counts.n10) / n,
            static_cast<double>(counts.n01) / n, static_cast<double>(counts.n00) / n};
}

RateTriple triple_from_rates(const ConfusionRates& r) {
    const double pos = r.p11 + r.p10;
    const double neg = r.p01 + r.p00;
    if (!(pos > 0.0) || !(neg > 0.0)) {
        throw data_error("undefined conditional rate");
    }
    return {r.p11 / pos, r.p00 / neg, pos};
}

RateTriple triple_from_counts(const ConfusionCounts& c) {
    const auto pos = c.n11 + c.n10;
    const auto neg = c.n01 + c.n00;
    if (pos == 0 || neg == 0) {
        throw data_error("undefined conditional rate");
    }
    return {static_cast<double>(c.n11) / static_cast<double>(pos),
            static_cast<double>(c.n00) / static_cast<double>(neg),
            static_cast<double>(pos) / static_cast<double>(pos + neg)};
}

double metric_value(const MetricSpec& spec, const RateTriple& r) {
    check_value_domain(r);
    const double t = r.tpr;
    const double s = r.tnr;
    const double p = r.prev;
    const double q = 1.0 - p;
    // gamma and 1 - gamma, each accumulated from nonnegative parts
    const double gamma = p * t + q * (1.0 - s);
    const double gamma_c = p * (1.0 - t) + q * s;

    return std::visit(
        Overloaded{
            [&](const Accuracy&) { return p * t + q * s; },
            [&](const WeightedAccuracy& m) { return m.w() * p * t + (1.0 - m.w()) * q * s; },
            [&](const BalancedAccuracy&) { return 0.5 * (t + s); },
            [&](const Jaccard&) { return safe_div(p * t, 1.0 - s * q); },
            [&](const FBeta& m) {
                const double b2 = m.beta() * m.beta();
                return safe_div((1.0 + b2) * p * t, b2 * p + gamma);
            },
            [&](const MCC&) {
                return std::sqrt(p * q) * safe_div(t + s - 1.0, std::sqrt(gamma * gamma_c));
            },
            [&](const Kappa&) {
                const double num = 2.0 * p * q * (t + s - 1.0);
                return safe_div(num, p * gamma_c + q * gamma);
            },
            [&](const YuleQ&) {
                const double a = t * s;
                const double b = (1.0 - t) * (1.0 - s);
                return safe_div(a - b, a + b);
            },
            [&](const YuleY&) {
                const double a = std::sqrt(t * s);
                const double b = std::sqrt((1.0 - t) * (1.0 - s));
                return safe_div(a - b, a + b);
            },
            [&](const RobustF& m) {
                const double scale = (m.d0() / p + m.beta_squared() + 1.0) / (1.0 + m.c());
                return scale * safe_div(m.c() * p + p * t, m.d0() + m.d1() * p + gamma);
            },
            [&](const RobustMCC& m) {
                const double d = m.d();
                return std::sqrt(d + p * q) *
                       safe_div(t + s - 1.0, std::sqrt(d + gamma * gamma_c));
            },
        },
        spec);
}

double derivative_ratio(const MetricSpec& spec, const RateTriple& r) {
    check_interior(r);
    const double t = r.tpr;
    const double s = r.tnr;
    const double p = r.prev;
    const double q = 1.0 - p;

    return std::visit(
        Overloaded{
            [&](const Accuracy&) { return q / p; },
            [&](const WeightedAccuracy& m) { return (1.0 - m.w()) * q / (m.w() * p); },
            [&](const BalancedAccuracy&) { return 1.0; },
            [&](const Jaccard&) { return safe_div(t * q, 1.0 - s * q); },
            [&](const FBeta& m) {
                return safe_div(t * q, m.beta() * m.beta() * p + (1.0 - s) * q);
            },
            [&](const MCC&) {
                const double num = (s + t - 1.0) * (2.0 * t - 1.0) * p + (1.0 - 2.0 * t) * s + t - 1.0;
                const double den = (1.0 - 2.0 * s) * (s + t - 1.0) * p + 2.0 * s * s - 2.0 * s;
                return safe_div(num, den);
            },
            [&](const Kappa&) {
                return safe_div(t + p * (1.0 - 2.0 * t), 1.0 - s - p * (1.0 - 2.0 * s));
            },
            [&](const YuleQ&) { return safe_div(t * (1.0 - t), s * (1.0 - s)); },
            [&](const YuleY&) { return safe_div(t * (1.0 - t), s * (1.0 - s)); },
            [&](const RobustF& m) {
                return safe_div((m.c() + t) * q, m.d0() + (m.d1() - m.c()) * p + (1.0 - s) * q);
            },
            [&](const RobustMCC& m) {
                const double d2 = 2.0 * m.d();
                const double num = (2.0 * t - 1.0) * s - (s + t - 1.0) * (2.0 * t - 1.0) * p - t + 1.0 + d2;
                const double den = (2.0 * s - 1.0) * (s + t - 1.0) * p + 2.0 * s * (1.0 - s) + d2;
                return safe_div(num, den);
            },
        },
        spec);
}

std::optional<double> robustness_bound(const MetricSpec& spec) {
    if (const auto* f = std::get_if<RobustF>(&spec)) {
        return (1.0 + f->c()) / std::min(f->d0(), f->d0() + f->d1() - f->c());
    }
    if (const auto* m = std::get_if<RobustMCC>(&spec)) {
        return (1.0 + 2.0 * m->d()) / (2.0 * m->d());
    }
    return std::nullopt;
}

}  // namespace imbametric
