#include "imbametric/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "imbametric/error.hpp"
#include "imbametric/metric_spec_io.hpp"

namespace imbametric {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

Eigen::VectorXd read_vector(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array()) throw data_error(std::string("scenario needs array '") + key + "'");
    const auto& a = j[key];
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw data_error(std::string("scenario '") + key + "' must hold numbers");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd read_matrix(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array()) throw data_error(std::string("scenario needs matrix '") + key + "'");
    const auto& rows = j[key];
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
            throw data_error(std::string("scenario '") + key + "' must be a square matrix");
        }
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto& x = row[static_cast<std::size_t>(c)];
            if (!x.is_number()) throw data_error(std::string("scenario '") + key + "' must hold numbers");
            m(r, c) = x.get<double>();
        }
    }
    return m;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw data_error("cannot read " + path.string());
    return ss.str();
}

std::vector<ScoredSample> parse_scores_csv(const std::string& text) {
    std::vector<ScoredSample> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty()) continue;
        if (!header) {
            if (t != "score,label") throw data_error("line 1: expected header 'score,label'");
            header = true;
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string_view::npos || t.find(',', comma + 1) != std::string_view::npos) {
            throw data_error("line " + std::to_string(lineno) + ": expected two fields");
        }
        const auto label = trim(t.substr(comma + 1));
        ScoredSample s;
        try {
            s.score = parse_double(trim(t.substr(0, comma)), "score");
        } catch (const Error& e) {
            throw data_error("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!(s.score >= 0.0 && s.score <= 1.0)) {
            throw data_error("line " + std::to_string(lineno) + ": score outside [0, 1]");
        }
        if (label == "1") {
            s.label = 1;
        } else if (label == "0") {
            s.label = 0;
        } else {
            throw data_error("line " + std::to_string(lineno) + ": label must be 0 or 1");
        }
        out.push_back(s);
    }
    if (!header) throw data_error("empty score file");
    if (out.empty()) throw data_error("score file has no rows");
    return out;
}

std::vector<ScoredSample> read_scores_csv(const std::filesystem::path& path) {
    try {
        return parse_scores_csv(read_text_file(path));
    } catch (const Error& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot write " + path.string());
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw data_error("cannot write " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw data_error("cannot write " + path.string());
    }
}

GaussianScenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw data_error("scenario must be a JSON object");
    return GaussianScenario(read_vector(j, "mu0"), read_vector(j, "mu1"), read_matrix(j, "sigma0"),
                            read_matrix(j, "sigma1"));
}

nlohmann::json scenario_to_json(const GaussianScenario& s) {
    auto vec = [](const Eigen::VectorXd& v) {
        auto a = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
        return a;
    };
    auto mat = [&](const Eigen::MatrixXd& m) {
        auto a = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
        return a;
    };
    return {{"mu0", vec(s.mu0())}, {"mu1", vec(s.mu1())}, {"sigma0", mat(s.sigma0())}, {"sigma1", mat(s.sigma1())}};
}

GaussianScenario load_scenario(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(path.string() + ": invalid JSON");
    }
    try {
        return scenario_from_json(j);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string format_number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    return shortest_repr(x);
}

std::string curve_csv(std::span<const CurvePoint> points) {
    std::string out = "threshold,fpr,tpr,precision\n";
    for (const auto& p : points) {
        out += format_number(p.threshold) + ',' + format_number(p.fpr) + ',' + format_number(p.tpr) + ',';
        if (p.precision) out += format_number(*p.precision);
        out += '\n';
    }
    return out;
}

std::string sweep_csv(std::span<const SweepCsvRow> rows) {
    std::string out = "metric,tilde_delta,delta,value,tpr,tnr\n";
    for (const auto& r : rows) {
        out += format_metric_spec(r.spec) + ',' + format_number(r.row.tilde_delta) + ',' +
               format_number(r.row.delta_density) + ',' + format_number(r.row.metric_value) + ',' +
               format_number(r.row.tpr) + ',' + format_number(r.row.tnr) + '\n';
    }
    return out;
}

}  // namespace imbametric
