#ifndef EXITOPT_IO_HPP
#define EXITOPT_IO_HPP

#include <charconv>
#include <fstream>
#include <string>

#include <json.hpp>

#include "exitopt/errors.hpp"
#include "exitopt/fd.hpp"
#include "exitopt/hjb.hpp"
#include "exitopt/model.hpp"
#include "exitopt/montecarlo.hpp"
#include "exitopt/truncated.hpp"

namespace exitopt {

/// Shortest round-trip decimal form; byte-stable across runs.
inline std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace io_detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) { known = true; break; }
        if (!known) throw ConfigError{"unknown key \"" + item.key() + "\" in " + where};
    }
}

inline double require_finite(const nlohmann::json& j, const char* key, double fallback,
                             bool required = false) {
    if (!j.contains(key)) {
        if (required) throw ConfigError{std::string("missing key \"") + key + "\""};
        return fallback;
    }
    if (!j.at(key).is_number()) throw ConfigError{std::string("key \"") + key + "\" must be a number"};
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw ConfigError{std::string("key \"") + key + "\" must be finite"};
    return v;
}

} // namespace io_detail

/// Parses {"alpha","sigma","r","gamma","K","I"}; missing "I" defaults to 0;
/// unknown keys are rejected.
inline ModelParams parse_params(const nlohmann::json& j) {
    io_detail::reject_unknown_keys(j, {"alpha", "sigma", "r", "gamma", "K", "I", "mc"},
                                   "parameter document");
    ModelParams p;
    p.alpha = io_detail::require_finite(j, "alpha", 0.0, true);
    p.sigma = io_detail::require_finite(j, "sigma", 0.0, true);
    p.r = io_detail::require_finite(j, "r", 0.0, true);
    p.gamma = io_detail::require_finite(j, "gamma", 0.0, true);
    p.K = io_detail::require_finite(j, "K", 0.0, true);
    p.I = io_detail::require_finite(j, "I", 0.0);
    return p;
}

/// Parses the optional "mc" sub-object {"n_paths","dt","horizon","seed","antithetic"}.
inline SimConfig parse_sim_config(const nlohmann::json& j, SimConfig defaults = {}) {
    if (!j.contains("mc")) return defaults;
    const nlohmann::json& m = j.at("mc");
    io_detail::reject_unknown_keys(m, {"n_paths", "dt", "horizon", "seed", "antithetic"},
                                   "\"mc\" object");
    SimConfig cfg = defaults;
    if (m.contains("n_paths")) cfg.n_paths = m.at("n_paths").get<std::int64_t>();
    cfg.dt = io_detail::require_finite(m, "dt", cfg.dt);
    cfg.horizon = io_detail::require_finite(m, "horizon", cfg.horizon);
    if (m.contains("seed")) cfg.seed = m.at("seed").get<std::uint64_t>();
    if (m.contains("antithetic")) cfg.antithetic = m.at("antithetic").get<bool>();
    return cfg;
}

inline nlohmann::json to_json(const MCEstimate& e) {
    return {{"mean", e.mean},
            {"stderr", e.std_error},
            {"tail_bound", e.tail_bound},
            {"n_effective", e.n_effective}};
}

inline nlohmann::json to_json(const ResidualReport& rep, bool per_point = false) {
    nlohmann::json j{{"max_continuation_residual", rep.max_continuation_residual},
                     {"max_stopping_violation", rep.max_stopping_violation},
                     {"smooth_fit_violation", rep.smooth_fit_violation},
                     {"corollary_violation", rep.corollary_violation}};
    if (per_point) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& d : rep.per_point)
            pts.push_back({{"x", d.x}, {"v", d.v}, {"L", d.L},
                           {"region", std::string(1, d.region)}});
        j["per_point"] = pts;
    }
    return j;
}

inline nlohmann::json to_json(const RefinementReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rep.rows) rows.push_back({{"n", row.n}, {"sup_error", row.sup_error}});
    return {{"rows", rows}, {"fitted_order", rep.fitted_order}};
}

inline nlohmann::json to_json(const ConvergenceTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r{{"C", row.cap}, {"ok", row.ok}};
        if (row.ok) {
            r["A1"] = row.a1;
            r["A2"] = row.a2;
            r["x_star_C"] = row.x_star;
            r["gap_x"] = row.gap_x;
            r["gap_A2"] = row.gap_a2;
        } else {
            r["error"] = row.error;
        }
        rows.push_back(r);
    }
    nlohmann::json j{{"rows", rows}};
    if (t.fitted_rate) j["rate"] = *t.fitted_rate;
    else j["rate"] = nullptr;
    return j;
}

inline std::string to_csv(const ConvergenceTable& t) {
    std::string out = "C,A1,A2,x_star_C,gap_x,gap_A2\r\n";
    for (const auto& row : t.rows) {
        if (row.ok)
            out += num(row.cap) + "," + num(row.a1) + "," + num(row.a2) + "," +
                   num(row.x_star) + "," + num(row.gap_x) + "," + num(row.gap_a2) + "\r\n";
        else
            out += num(row.cap) + ",,,,," + "\r\n";
    }
    return out;
}

inline std::string to_csv(const ValueGrid& g) {
    std::string out = "x,value\r\n";
    for (int i = 0; i <= g.n; ++i) out += num(g.x(i)) + "," + num(g.values[i]) + "\r\n";
    return out;
}

inline std::string to_csv(std::span<const std::pair<double, MCEstimate>> sweep) {
    std::string out = "b,mean,stderr\r\n";
    for (const auto& [b, est] : sweep)
        out += num(b) + "," + num(est.mean) + "," + num(est.std_error) + "\r\n";
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError{"cannot open output file " + path};
    f << content;
}

} // namespace exitopt

#endif
