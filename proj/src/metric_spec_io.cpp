#include "imbametric/metric_spec_io.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <system_error>

#include "imbametric/error.hpp"

namespace imbametric {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

using Params = std::map<std::string, double, std::less<>>;

void expect_keys(const Params& params, const std::set<std::string>& allowed, std::string_view name) {
    for (const auto& [key, value] : params) {
        if (!allowed.contains(key)) {
            throw usage_error("unknown parameter '" + key + "' for metric '" + std::string(name) + "'");
        }
    }
}

double required(const Params& params, const std::string& key, std::string_view name) {
    const auto it = params.find(key);
    if (it == params.end()) {
        throw usage_error("metric '" + std::string(name) + "' requires parameter " + key);
    }
    return it->second;
}

double optional_or(const Params& params, const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

}  // namespace

std::string shortest_repr(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (text.empty() || res.ec != std::errc() || res.ptr != last) {
        throw usage_error("invalid number '" + std::string(text) + "' for " + std::string(what));
    }
    return value;
}

MetricSpec parse_metric_spec(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw usage_error("empty metric specification");

    const auto parts = split(text, ':');
    std::string name;
    for (char ch : trim(parts.front())) name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));

    Params params;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto kv = trim(parts[i]);
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw usage_error("malformed metric parameter '" + std::string(kv) + "', expected key=value");
        }
        std::string key(trim(kv.substr(0, eq)));
        if (params.contains(key)) throw usage_error("duplicate metric parameter '" + key + "'");
        params.emplace(key, parse_double(kv.substr(eq + 1), key));
    }

    if (name == "acc") {
        expect_keys(params, {}, name);
        return Accuracy{};
    }
    if (name == "wacc") {
        expect_keys(params, {"w"}, name);
        return WeightedAccuracy(required(params, "w", name));
    }
    if (name == "bacc") {
        expect_keys(params, {}, name);
        return BalancedAccuracy{};
    }
    if (name == "jac") {
        expect_keys(params, {}, name);
        return Jaccard{};
    }
    if (name == "mcc") {
        expect_keys(params, {}, name);
        return MCC{};
    }
    if (name == "kappa") {
        expect_keys(params, {}, name);
        return Kappa{};
    }
    if (name == "yuleq") {
        expect_keys(params, {}, name);
        return YuleQ{};
    }
    if (name == "yuley") {
        expect_keys(params, {}, name);
        return YuleY{};
    }
    if (name == "frb") {
        expect_keys(params, {"c", "d0", "d1", "beta"}, name);
        std::optional<double> beta;
        if (auto it = params.find("beta"); it != params.end()) beta = it->second;
        return RobustF(optional_or(params, "c", 0.0), required(params, "d0", name),
                       optional_or(params, "d1", 1.0), beta);
    }
    if (name == "mccrb") {
        expect_keys(params, {"d"}, name);
        return RobustMCC(required(params, "d", name));
    }
    if (name.size() > 1 && name.front() == 'f') {
        expect_keys(params, {}, name);
        double beta = 0.0;
        try {
            beta = parse_double(std::string_view(name).substr(1), "F-score beta");
        } catch (const Error&) {
            throw usage_error("unknown metric '" + name + "'");
        }
        return FBeta(beta);
    }
    throw usage_error("unknown metric '" + name + "'");
}

std::vector<MetricSpec> parse_metric_list(std::string_view text) {
    std::vector<MetricSpec> out;
    for (auto item : split(text, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_metric_spec(item));
    }
    if (out.empty()) throw usage_error("no metrics given");
    return out;
}

std::string format_metric_spec(const MetricSpec& spec) {
    struct Visitor {
        std::string operator()(const Accuracy&) const { return "acc"; }
        std::string operator()(const WeightedAccuracy& m) const { return "wacc:w=" + shortest_repr(m.w()); }
        std::string operator()(const BalancedAccuracy&) const { return "bacc"; }
        std::string operator()(const Jaccard&) const { return "jac"; }
        std::string operator()(const FBeta& m) const { return "f" + shortest_repr(m.beta()); }
        std::string operator()(const MCC&) const { return "mcc"; }
        std::string operator()(const Kappa&) const { return "kappa"; }
        std::string operator()(const YuleQ&) const { return "yuleq"; }
        std::string operator()(const YuleY&) const { return "yuley"; }
        std::string operator()(const RobustF& m) const {
            std::string s = "frb:c=" + shortest_repr(m.c()) + ":d0=" + shortest_repr(m.d0()) +
                            ":d1=" + shortest_repr(m.d1());
            if (m.beta()) s += ":beta=" + shortest_repr(*m.beta());
            return s;
        }
        std::string operator()(const RobustMCC& m) const { return "mccrb:d=" + shortest_repr(m.d()); }
    };
    return std::visit(Visitor{}, spec);
}

}  // namespace imbametric
