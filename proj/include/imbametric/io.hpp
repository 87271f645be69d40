#pragma once

// File formats: score CSV input, scenario JSON, result CSVs. Numbers are
// written in the shortest form that reads back exactly.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "imbametric/empirical.hpp"
#include "imbametric/gaussian.hpp"

namespace imbametric {

/// Reads a CSV with header `score,label`. Throws data errors with the
/// offending line number.
std::vector<ScoredSample> read_scores_csv(const std::filesystem::path& path);
std::vector<ScoredSample> parse_scores_csv(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// {"mu0": [...], "mu1": [...], "sigma0": [[...]], "sigma1": [[...]]}, rows first.
GaussianScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const GaussianScenario& s);
GaussianScenario load_scenario(const std::filesystem::path& path);

/// Full-precision number text; "inf" and "-inf" for infinities.
std::string format_number(double x);

/// Columns threshold,fpr,tpr,precision; undefined precision is left empty.
std::string curve_csv(std::span<const CurvePoint> points);

struct SweepCsvRow {
    MetricSpec spec;
    ThresholdSweepRow row;
};

/// Columns metric,tilde_delta,delta,value,tpr,tnr.
std::string sweep_csv(std::span<const SweepCsvRow> rows);

}  // namespace imbametric
