#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "granger/estimation.hpp"
#include "granger/gc_graph.hpp"
#include "granger/simulation.hpp"
#include "granger/var_model.hpp"

namespace granger {

namespace detail {

/// Shortest round-trip decimal rendering of a double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline nlohmann::json matrix_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat matrix_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw IoError(std::string("expected a 2-d array for ") + what);
    const auto rows = j.size();
    const auto cols = j.front().size();
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (j[r].size() != cols) throw IoError(std::string("ragged rows in ") + what);
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r),
                                                 static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace detail

/// FNV-1a 64-bit hash, used to fingerprint models in logs and manifests.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline nlohmann::json model_to_json(const VarModel& m) {
    nlohmann::json lags = nlohmann::json::array();
    for (int k = 1; k <= m.p(); ++k) lags.push_back(detail::matrix_to_json(m.coeff(k)));
    return nlohmann::json{{"n", m.n()},
                          {"p", m.p()},
                          {"A", std::move(lags)},
                          {"Sigma", detail::matrix_to_json(m.sigma())}};
}

inline VarModel model_from_json(const nlohmann::json& j) {
    if (!j.contains("n") || !j.contains("p") || !j.contains("A") || !j.contains("Sigma"))
        throw IoError("model JSON must contain n, p, A, Sigma");
    const int n = j["n"].get<int>();
    const int p = j["p"].get<int>();
    if (!j["A"].is_array() || static_cast<int>(j["A"].size()) != p)
        throw IoError("model JSON: A must hold p lag matrices");
    std::vector<Mat> coeffs;
    coeffs.reserve(static_cast<std::size_t>(p));
    for (const auto& lag : j["A"]) coeffs.push_back(detail::matrix_from_json(lag, "A"));
    Mat sigma = detail::matrix_from_json(j["Sigma"], "Sigma");
    if (sigma.rows() != n) throw IoError("model JSON: Sigma does not match n");
    return VarModel(std::move(coeffs), std::move(sigma));
}

inline nlohmann::json fit_result_to_json(const FitResult& fit) {
    nlohmann::json j = model_to_json(fit.model);
    j["SigmaHat"] = detail::matrix_to_json(fit.sigma_hat);
    j["N"] = fit.effective_samples;
    j["logdet"] = fit.log_generalized_variance;
    return j;
}

/// TimeSeries CSV: one row per time step, one column per variable, header
/// row "v1,...,vn", values in full round-trip precision.
inline std::string timeseries_to_csv(const TimeSeries& ts) {
    std::string out;
    for (int v = 1; v <= ts.n(); ++v) {
        out += 'v';
        out += std::to_string(v);
        out += v == ts.n() ? '\n' : ',';
    }
    for (int t = 0; t < ts.T(); ++t)
        for (int v = 0; v < ts.n(); ++v) {
            out += detail::format_double(ts.data()(t, v));
            out += v == ts.n() - 1 ? '\n' : ',';
        }
    return out;
}

inline TimeSeries timeseries_from_csv(std::istream& in, TimeSeriesMeta meta = {}) {
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        bool numeric = true;
        while (start <= line.size()) {
            const auto comma = line.find(',', start);
            const auto end = comma == std::string::npos ? line.size() : comma;
            double value = 0.0;
            const auto res = std::from_chars(line.data() + start, line.data() + end, value);
            if (res.ec != std::errc() || res.ptr != line.data() + end) {
                numeric = false;
                break;
            }
            row.push_back(value);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!numeric) {
            if (first) {  // header row
                first = false;
                continue;
            }
            throw IoError("CSV: non-numeric entry outside the header row");
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("CSV: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("CSV: no data rows");
    Mat data(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return TimeSeries(std::move(data), std::move(meta));
}

inline nlohmann::json graph_to_json(const GcGraph& g) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : g.cells) {
        nlohmann::json jc{{"x", c.x + 1}, {"y", c.y + 1}};
        jc["tau"] = c.tau ? nlohmann::json(*c.tau) : nlohmann::json();
        jc["h"] = c.h ? nlohmann::json(*c.h) : nlohmann::json();
        jc["F"] = c.value;
        jc["dof"] = c.dof ? nlohmann::json(*c.dof) : nlohmann::json();
        jc["pvalue"] = c.p_value ? nlohmann::json(*c.p_value) : nlohmann::json();
        jc["significant"] = c.significant ? nlohmann::json(*c.significant) : nlohmann::json();
        cells.push_back(std::move(jc));
    }
    nlohmann::json j{{"variant", to_string(g.variant)},
                     {"p", g.p},
                     {"alpha", g.alpha},
                     {"cells", std::move(cells)}};
    j["n"] = g.n;
    j["correction"] =
        g.correction == SignificanceSpec::Correction::bonferroni ? "bonferroni" : "none";
    j["m"] = g.hypotheses;
    if (g.effective_samples) j["N"] = *g.effective_samples;
    if (g.critical) j["critical"] = *g.critical;
    return j;
}

/// CSV flattening of a graph: same columns as the JSON cells.
inline std::string graph_to_csv(const GcGraph& g) {
    std::string out = "x,y,tau,h,F,dof,pvalue,significant\n";
    for (const auto& c : g.cells) {
        out += std::to_string(c.x + 1);
        out += ',';
        out += std::to_string(c.y + 1);
        out += ',';
        if (c.tau) out += std::to_string(*c.tau);
        out += ',';
        if (c.h) out += std::to_string(*c.h);
        out += ',';
        out += detail::format_double(c.value);
        out += ',';
        if (c.dof) out += std::to_string(*c.dof);
        out += ',';
        if (c.p_value) out += detail::format_double(*c.p_value);
        out += ',';
        if (c.significant) out += *c.significant ? "true" : "false";
        out += '\n';
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path);
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("failed writing " + path);
}

inline VarModel load_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("cannot parse " + path + ": " + e.what());
    }
    return model_from_json(j);
}

inline TimeSeries load_timeseries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    TimeSeriesMeta meta;
    meta.source = path;
    return timeseries_from_csv(in, std::move(meta));
}

}  // namespace granger
