#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "imbametric/metrics.hpp"

namespace imbametric {

/// Parses `name[:key=value]*`. Names: acc, wacc (w), bacc, jac, f<beta>, mcc,
/// kappa, yuleq, yuley, frb (c=0, d0, d1=1, optional beta) and mccrb (d).
/// Examples: "f1.5", "mccrb:d=0.05", "frb:c=0:d0=0.1:d1=1".
/// Throws a usage error naming the violated constraint.
MetricSpec parse_metric_spec(std::string_view text);

/// Comma-separated list of metric specs.
std::vector<MetricSpec> parse_metric_list(std::string_view text);

/// Canonical text form; parse_metric_spec(format_metric_spec(m)) == m.
std::string format_metric_spec(const MetricSpec& spec);

/// Shortest decimal text that reads back to exactly `x`.
std::string shortest_repr(double x);

/// Strict decimal parse of the whole string.
double parse_double(std::string_view text, std::string_view what);

}  // namespace imbametric
