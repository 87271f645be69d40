#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "imbametric/empirical.hpp"
#include "imbametric/error.hpp"
#include "imbametric/gaussian.hpp"
#include "imbametric/io.hpp"
#include "imbametric/metric_spec_io.hpp"
#include "imbametric/sim.hpp"
#include "imbametric/solver.hpp"

namespace imbametric {

namespace {

using Cell = std::variant<std::string, double>;

// Result table: CSV at full precision, or aligned text with fixed decimals.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    std::string csv() const {
        std::string out;
        for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ',';
                out += std::holds_alternative<double>(row[c]) ? format_number(std::get<double>(row[c]))
                                                               : std::get<std::string>(row[c]);
            }
            out += '\n';
        }
        return out;
    }

    std::string text(int digits) const {
        std::vector<std::vector<std::string>> cells{header};
        for (const auto& row : rows) {
            auto& line = cells.emplace_back();
            for (const auto& cell : row) {
                if (const auto* d = std::get_if<double>(&cell)) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.*f", digits, *d);
                    line.emplace_back(std::isfinite(*d) ? buf : format_number(*d));
                } else {
                    line.push_back(std::get<std::string>(cell));
                }
            }
        }
        std::vector<std::size_t> width(header.size(), 0);
        for (const auto& line : cells) {
            for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
        }
        std::string out;
        for (const auto& line : cells) {
            std::string s;
            for (std::size_t c = 0; c < line.size(); ++c) {
                if (c) s += "  ";
                s += std::string(width[c] - line[c].size(), ' ') + line[c];
            }
            out += s + '\n';
        }
        return out;
    }
};

struct Common {
    std::optional<int> digits;
};

struct SolverFlags {
    int grid_points = 512;
    std::optional<double> delta_min;
    std::optional<double> delta_max;
    double tol = 1e-8;

    void add(CLI::App* app) {
        app->add_option("--grid-points", grid_points, "Log-spaced probes for root bracketing")->check(CLI::Range(2, 1 << 20));
        app->add_option("--delta-min", delta_min, "Lower end of the threshold search domain");
        app->add_option("--delta-max", delta_max, "Upper end of the threshold search domain");
        app->add_option("--tol", tol, "Relative residual tolerance");
    }

    SolverOptions options() const {
        if (!(tol > 0.0)) throw usage_error("tol must be positive");
        SolverOptions o;
        o.grid_points = grid_points;
        o.delta_min = delta_min;
        o.delta_max = delta_max;
        o.tol = tol;
        return o;
    }
};

std::vector<double> parse_number_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(parse_double(text.substr(start, comma - start), what));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// "a,b,c" or "lo:hi:count" (log-spaced)
std::vector<double> parse_pi_grid(const std::string& text) {
    if (text.find(':') == std::string::npos) return parse_number_list(text, "prevalence");
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string::npos) throw usage_error("prevalence grid must be a list or lo:hi:count");
    const double lo = parse_double(text.substr(0, a), "prevalence");
    const double hi = parse_double(text.substr(a + 1, b - a - 1), "prevalence");
    const double count = parse_double(text.substr(b + 1), "grid count");
    if (count != std::floor(count) || count < 2 || count > 1e6) throw usage_error("grid count must be an integer >= 2");
    return log_grid(lo, hi, static_cast<int>(count));
}

// "start:stop:step", inclusive
std::vector<double> parse_linear_grid(const std::string& text, const char* what) {
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? a : text.find(':', a + 1);
    if (b == std::string::npos) throw usage_error(std::string(what) + " grid must be start:stop:step");
    const double start = parse_double(text.substr(0, a), what);
    const double stop = parse_double(text.substr(a + 1, b - a - 1), what);
    const double step = parse_double(text.substr(b + 1), what);
    if (!(step > 0.0) || stop < start) throw usage_error(std::string(what) + " grid needs step > 0 and start <= stop");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 1'000'000) throw usage_error(std::string(what) + " grid too large");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
}

void emit(const Table& t, const Common& common, const std::string& out_path, std::ostream& out) {
    if (!out_path.empty()) {
        write_file_atomic(out_path, t.csv());
    } else if (common.digits) {
        out << t.text(*common.digits);
    } else {
        out << t.csv();
    }
}

std::vector<Cell> solution_cells(const FixedPointResult& r, double prev) {
    return {r.delta_star, threshold_density_to_regression(r.delta_star, prev), r.tpr, r.tnr, r.metric_value_at_opt,
            r.residual};
}

const std::vector<std::string> kSolutionColumns{"delta", "tilde_delta", "tpr", "tnr", "value", "residual"};

std::vector<std::string> with_prefix(std::vector<std::string> prefix) {
    prefix.insert(prefix.end(), kSolutionColumns.begin(), kSolutionColumns.end());
    return prefix;
}

void check_prevalences(const std::vector<double>& pis) {
    for (double p : pis) {
        if (!(p > 0.0 && p < 1.0)) throw usage_error("prevalence must lie in (0, 1)");
    }
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Performance metrics and optimal thresholds for imbalanced binary classification", "imbametric"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--digits", common.digits, "Render stdout tables with this many decimals")->check(CLI::Range(0, 17));

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate metrics on a score file or a confusion matrix");
    std::string eval_scores;
    std::string eval_counts;
    std::string eval_metrics;
    double eval_threshold = 0.5;
    auto* eval_scores_opt = eval->add_option("--scores", eval_scores, "CSV with header score,label");
    eval->add_option("--counts", eval_counts, "n11,n10,n01,n00")->excludes(eval_scores_opt);
    eval->add_option("--metric", eval_metrics, "Metric spec or comma-separated list")->required();
    eval->add_option("--threshold", eval_threshold, "Regression threshold; predict 1 iff score >= threshold");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Grid-optimize the regression threshold per metric");
    std::string sweep_scores;
    std::string sweep_metrics;
    std::string sweep_grid;
    std::string sweep_out;
    bool sweep_full = false;
    sweep->add_option("--scores", sweep_scores, "CSV with header score,label")->required();
    sweep->add_option("--metrics", sweep_metrics, "Comma-separated metric specs")->required();
    sweep->add_option("--grid", sweep_grid, "start:stop:step (default 0.001:0.999:0.001)");
    sweep->add_option("--out", sweep_out, "Output CSV (stdout when omitted)");
    sweep->add_flag("--full", sweep_full, "Emit every grid point instead of the optimum");

    // solve-lda
    auto* solve_lda = app.add_subcommand("solve-lda", "Optimal density-ratio threshold for Gaussian classes with shared covariance");
    std::string lda_deltas;
    std::string lda_delta_grid;
    std::string lda_scenario;
    std::string lda_metric;
    std::string lda_pi;
    std::string lda_out;
    SolverFlags lda_solver;
    auto* lda_d = solve_lda->add_option("--delta-mahalanobis", lda_deltas, "Comma-separated Mahalanobis distances");
    auto* lda_g = solve_lda->add_option("--delta-grid", lda_delta_grid, "Mahalanobis distances as start:stop:step");
    auto* lda_s = solve_lda->add_option("--scenario", lda_scenario, "Scenario JSON with equal covariances");
    lda_d->excludes(lda_g)->excludes(lda_s);
    lda_g->excludes(lda_s);
    solve_lda->add_option("--metric", lda_metric, "Metric spec or comma-separated list")->required();
    solve_lda->add_option("--pi", lda_pi, "Comma-separated prevalences")->required();
    solve_lda->add_option("--out", lda_out, "Output CSV (stdout when omitted)");
    lda_solver.add(solve_lda);

    // solve-qda
    auto* solve_qda = app.add_subcommand("solve-qda", "Optimal density-ratio threshold for general Gaussian classes");
    std::string qda_scenario;
    std::string qda_metric;
    std::string qda_pi;
    std::string qda_out;
    SolverFlags qda_solver;
    solve_qda->add_option("--scenario", qda_scenario, "Scenario JSON")->required();
    solve_qda->add_option("--metric", qda_metric, "Metric spec or comma-separated list")->required();
    solve_qda->add_option("--pi", qda_pi, "Comma-separated prevalences")->required();
    solve_qda->add_option("--out", qda_out, "Output CSV (stdout when omitted)");
    qda_solver.add(solve_qda);

    // sweep-pi
    auto* sweep_pi = app.add_subcommand("sweep-pi", "Optimal threshold across prevalences");
    std::string sp_metric;
    std::optional<double> sp_delta;
    std::string sp_scenario;
    std::string sp_grid;
    std::string sp_out;
    SolverFlags sp_solver;
    sweep_pi->add_option("--metric", sp_metric, "Metric spec")->required();
    auto* sp_d = sweep_pi->add_option("--delta-mahalanobis", sp_delta, "Mahalanobis distance (LDA)");
    auto* sp_s = sweep_pi->add_option("--scenario", sp_scenario, "Scenario JSON (QDA unless covariances are equal)");
    sp_d->excludes(sp_s);
    sweep_pi->add_option("--pi-grid", sp_grid, "Comma-separated prevalences or lo:hi:count (log-spaced)")->required();
    sweep_pi->add_option("--out", sp_out, "Output CSV (stdout when omitted)");
    sp_solver.add(sweep_pi);

    // roc
    auto* roc = app.add_subcommand("roc", "ROC and recall versus 1-precision curves");
    std::string roc_scores;
    std::string roc_out;
    std::string roc_pr_out;
    std::string roc_metrics;
    std::string roc_points_out;
    std::string roc_grid;
    roc->add_option("--scores", roc_scores, "CSV with header score,label")->required();
    roc->add_option("--out", roc_out, "ROC curve CSV");
    roc->add_option("--pr-out", roc_pr_out, "Recall versus 1-precision curve CSV");
    roc->add_option("--metrics", roc_metrics, "Metrics whose grid-optimal points are reported");
    roc->add_option("--points-out", roc_points_out, "CSV of the metric-optimal points");
    roc->add_option("--grid", roc_grid, "start:stop:step for the optimal points");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Sample, fit logistic regression and grid-optimize thresholds");
    std::string sim_config;
    std::string sim_out;
    simulate->add_option("--config", sim_config, "sim.json")->required();
    simulate->add_option("--out", sim_out, "Report CSV (stdout when omitted)");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            throw usage_error(e.what());
        }

        if (eval->parsed()) {
            const auto specs = parse_metric_list(eval_metrics);
            ConfusionCounts counts;
            if (!eval_counts.empty()) {
                const auto v = parse_number_list(eval_counts, "count");
                if (v.size() != 4) throw usage_error("--counts needs four values n11,n10,n01,n00");
                std::uint64_t* slots[] = {&counts.n11, &counts.n10, &counts.n01, &counts.n00};
                for (std::size_t i = 0; i < 4; ++i) {
                    if (!(v[i] >= 0.0) || v[i] != std::floor(v[i]) || v[i] > 1e18) {
                        throw usage_error("counts must be nonnegative integers");
                    }
                    *slots[i] = static_cast<std::uint64_t>(v[i]);
                }
            } else if (!eval_scores.empty()) {
                const auto samples = read_scores_csv(eval_scores);
                validate_samples(samples);
                counts = confusion_at(samples, eval_threshold);
            } else {
                throw usage_error("eval needs --scores or --counts");
            }
            const auto triple = triple_from_counts(counts);
            Table t{{"metric", "value", "tpr", "tnr", "prevalence"}, {}};
            for (const auto& s : specs) {
                t.rows.push_back({format_metric_spec(s), metric_value(s, triple), triple.tpr, triple.tnr, triple.prev});
            }
            emit(t, common, "", out);
        } else if (sweep->parsed()) {
            const auto specs = parse_metric_list(sweep_metrics);
            const GridSpec grid = sweep_grid.empty() ? GridSpec{} : parse_grid_spec(sweep_grid);
            const auto samples = read_scores_csv(sweep_scores);
            validate_samples(samples);
            Table t{{"metric", "tilde_delta", "delta", "value", "tpr", "tnr"}, {}};
            for (const auto& s : specs) {
                auto add = [&](const ThresholdSweepRow& r) {
                    t.rows.push_back({format_metric_spec(s), r.tilde_delta, r.delta_density, r.metric_value, r.tpr, r.tnr});
                };
                if (sweep_full) {
                    for (const auto& r : threshold_sweep(samples, s, grid)) {
                        if (r) add(*r);
                    }
                } else {
                    add(grid_optimize(samples, s, grid));
                }
            }
            emit(t, common, sweep_out, out);
        } else if (solve_lda->parsed()) {
            const auto specs = parse_metric_list(lda_metric);
            const auto pis = parse_number_list(lda_pi, "prevalence");
            check_prevalences(pis);
            std::vector<double> deltas;
            if (!lda_deltas.empty()) {
                deltas = parse_number_list(lda_deltas, "Mahalanobis distance");
            } else if (!lda_delta_grid.empty()) {
                deltas = parse_linear_grid(lda_delta_grid, "Mahalanobis distance");
            } else if (!lda_scenario.empty()) {
                deltas = {mahalanobis_delta(load_scenario(lda_scenario))};
            } else {
                throw usage_error("solve-lda needs --delta-mahalanobis, --delta-grid or --scenario");
            }
            const auto opts = lda_solver.options();
            Table t{with_prefix({"metric", "mahalanobis", "pi"}), {}};
            for (const auto& s : specs) {
                for (double d : deltas) {
                    const LdaRateModel model(d);
                    for (double p : pis) {
                        std::vector<Cell> row{format_metric_spec(s), d, p};
                        const auto cells = solution_cells(solve_fixed_point(s, model, p, opts), p);
                        row.insert(row.end(), cells.begin(), cells.end());
                        t.rows.push_back(std::move(row));
                    }
                }
            }
            emit(t, common, lda_out, out);
        } else if (solve_qda->parsed()) {
            const auto specs = parse_metric_list(qda_metric);
            const auto pis = parse_number_list(qda_pi, "prevalence");
            check_prevalences(pis);
            const auto opts = qda_solver.options();
            const QdaRateModel model(load_scenario(qda_scenario));
            Table t{with_prefix({"metric", "pi"}), {}};
            for (const auto& s : specs) {
                for (double p : pis) {
                    std::vector<Cell> row{format_metric_spec(s), p};
                    const auto cells = solution_cells(solve_fixed_point(s, model, p, opts), p);
                    row.insert(row.end(), cells.begin(), cells.end());
                    t.rows.push_back(std::move(row));
                }
            }
            emit(t, common, qda_out, out);
        } else if (sweep_pi->parsed()) {
            const auto spec = parse_metric_spec(sp_metric);
            const auto pis = parse_pi_grid(sp_grid);
            check_prevalences(pis);
            std::unique_ptr<RateModel> model;
            if (sp_delta) {
                model = std::make_unique<LdaRateModel>(*sp_delta);
            } else if (!sp_scenario.empty()) {
                const auto scenario = load_scenario(sp_scenario);
                if (scenario.equal_cov()) {
                    model = std::make_unique<LdaRateModel>(scenario);
                } else {
                    model = std::make_unique<QdaRateModel>(scenario);
                }
            } else {
                throw usage_error("sweep-pi needs --delta-mahalanobis or --scenario");
            }
            const auto points = sweep_delta_star(spec, *model, pis, sp_solver.options());
            Table t{with_prefix({"metric", "pi"}), {}};
            for (const auto& pt : points) {
                if (!pt.result) throw numeric_error("at pi=" + format_number(pt.prev) + ": " + pt.error);
                std::vector<Cell> row{format_metric_spec(spec), pt.prev};
                const auto cells = solution_cells(*pt.result, pt.prev);
                row.insert(row.end(), cells.begin(), cells.end());
                t.rows.push_back(std::move(row));
            }
            emit(t, common, sp_out, out);
        } else if (roc->parsed()) {
            const auto samples = read_scores_csv(roc_scores);
            validate_samples(samples);
            const auto specs = roc_metrics.empty() ? std::vector<MetricSpec>{} : parse_metric_list(roc_metrics);
            const GridSpec grid = roc_grid.empty() ? GridSpec{} : parse_grid_spec(roc_grid);
            if (!roc_points_out.empty() && specs.empty()) throw usage_error("--points-out needs --metrics");
            const auto curve = roc_curve(samples);
            if (!roc_out.empty()) write_file_atomic(roc_out, curve_csv(curve));
            if (!roc_pr_out.empty()) write_file_atomic(roc_pr_out, curve_csv(recall_vs_one_minus_precision(samples)));

            Table summary{{"quantity", "value"}, {{std::string("auc"), auc(samples)}}};
            if (!specs.empty()) {
                Table pts{{"metric", "tilde_delta", "delta", "value", "fpr", "tpr", "precision"}, {}};
                for (const auto& p : optimal_points(samples, specs, grid)) {
                    pts.rows.push_back({format_metric_spec(p.spec), p.row.tilde_delta, p.row.delta_density,
                                        p.row.metric_value, p.point.fpr, p.point.tpr,
                                        p.point.precision ? Cell{*p.point.precision} : Cell{std::string()}});
                }
                if (!roc_points_out.empty()) {
                    write_file_atomic(roc_points_out, pts.csv());
                } else {
                    emit(pts, common, "", out);
                }
            }
            if (roc_out.empty() && roc_pr_out.empty() && specs.empty()) {
                out << curve_csv(curve);
            } else {
                emit(summary, common, "", out);
            }
        } else if (simulate->parsed()) {
            const auto report = run_experiment(load_sim_config(sim_config));
            if (!sim_out.empty()) {
                write_file_atomic(sim_out, report_csv(report));
            }
            if (common.digits) {
                out << report_table(report, *common.digits);
            } else if (sim_out.empty()) {
                out << report_csv(report);
            }
            for (std::size_t k = 0; k < report.fits.size(); ++k) {
                if (report.fits[k].degenerate) {
                    err << "warning: design " << k << ": " << report.fits[k].diagnostic << '\n';
                }
            }
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << one_line(e.what()) << '\n';
        switch (e.kind()) {
            case ErrorKind::Usage:
                return 1;
            case ErrorKind::Data:
                return 2;
            case ErrorKind::Numeric:
                return 3;
        }
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return 3;
    }
}

}  // namespace imbametric
