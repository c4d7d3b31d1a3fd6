#pragma once

#include "hover/simulator.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

namespace hover {

// ---- scenario files -------------------------------------------------------------

/**
 * Flat "section.key = value" text, '#' starts a comment. Angles are degrees.
 * trigger.delta_xz also accepts "auto" (half the threshold-bound estimate).
 */
struct ScenarioFile {
    ScenarioConfig scenario;
    bool auto_delta_xz = false;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw config_error("config: '" + key + "' expects a number, got '" + v + "'");
    }
    if (used != v.size()) throw config_error("config: '" + key + "' expects a number, got '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw config_error("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline int parse_int(const std::string& key, const std::string& v)
{
    const double x = parse_number(key, v);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw config_error("config: '" + key + "' expects an integer");
    return static_cast<int>(x);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item)));
    return out;
}

}  // namespace detail

inline ScenarioFile parse_scenario(std::istream& in)
{
    ScenarioFile f;
    ScenarioConfig& c = f.scenario;
    using detail::parse_bool, detail::parse_int, detail::parse_number;

    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;
    auto num = [&](const char* key, double& dst) {
        setters[key] = [&dst](const std::string& k, const std::string& v) { dst = parse_number(k, v); };
    };
    auto deg = [&](const char* key, double& dst) {
        setters[key] = [&dst](const std::string& k, const std::string& v) { dst = deg2rad(parse_number(k, v)); };
    };
    auto flag = [&](const char* key, bool& dst) {
        setters[key] = [&dst](const std::string& k, const std::string& v) { dst = parse_bool(k, v); };
    };

    num("orbit.mu", c.mu);
    num("orbit.perigee_altitude_km", c.perigee_altitude_km);
    num("orbit.e", c.e);
    deg("orbit.i", c.i);
    deg("orbit.raan", c.raan);
    deg("orbit.argp", c.argp);
    deg("orbit.nu0", c.nu0);
    setters["initial.state"] = [&c](const std::string& k, const std::string& v) {
        const auto x = detail::parse_list(k, v);
        if (x.size() != 6) throw config_error("config: initial.state expects 6 comma-separated values");
        c.X0 = CartesianRelativeState::from(Eigen::Map<const Vec6>(x.data()));
    };
    num("box.x_min", c.box.x_min);
    num("box.x_max", c.box.x_max);
    num("box.y_min", c.box.y_min);
    num("box.y_max", c.box.y_max);
    num("box.z_min", c.box.z_min);
    num("box.z_max", c.box.z_max);
    num("thruster.dv_min", c.limits.dv_min);
    num("thruster.dv_max", c.limits.dv_max);
    setters["trigger.delta_xz"] = [&f](const std::string& k, const std::string& v) {
        f.auto_delta_xz = (v == "auto");
        if (!f.auto_delta_xz) f.scenario.trigger.delta_xz = parse_number(k, v);
    };
    num("trigger.delta_y", c.trigger.delta_y);
    deg("trigger.delta_nu", c.trigger.delta_nu_sample);
    setters["trigger.n_L"] = [&c](const std::string& k, const std::string& v) { c.trigger.n_L = parse_int(k, v); };
    num("trigger.tol_periodicity", c.trigger.tol_periodicity);
    deg("trigger.tau_fallback", c.trigger.tau_fallback);
    num("trigger.cost_tie_band", c.trigger.cost_tie_band);
    flag("disturbances.j2", c.disturbances.enable_j2);
    flag("disturbances.drag", c.disturbances.enable_drag);
    num("disturbances.rho0", c.disturbances.rho0);
    num("disturbances.h0_km", c.disturbances.h0_km);
    num("disturbances.scale_height_km", c.disturbances.scale_height_km);
    flag("disturbances.corotating_atmosphere", c.disturbances.corotating_atmosphere);
    num("spacecraft.target_ballistic", c.target_physical.ballistic_coefficient);
    num("spacecraft.chaser_ballistic", c.chaser_physical.ballistic_coefficient);
    num("run.hovering_periods", c.hovering_periods);
    num("run.approach_max_periods", c.approach_max_periods);

    std::map<std::string, int> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw config_error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (seen[key]++) throw config_error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        if (val.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        it->second(key, val);
    }
    if (f.auto_delta_xz) f.scenario.trigger.delta_xz = 0.0;  // placeholder until resolved
    c.validate();
    return f;
}

inline ScenarioFile load_scenario(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in) throw config_error("config: cannot read '" + p.string() + "'");
    return parse_scenario(in);
}

inline constexpr int auto_threshold_samples = 200;

/// Replaces an "auto" in-plane threshold by half the estimated bound for this scenario.
inline ScenarioConfig resolve_thresholds(const ScenarioFile& f)
{
    ScenarioConfig c = f.scenario;
    if (f.auto_delta_xz)
        c.trigger.delta_xz = 0.5 * estimate_threshold_bounds(c.orbit(), c.box, c.limits, auto_threshold_samples).bound_xz;
    return c;
}

// ---- serialization -------------------------------------------------------------

inline std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline const char* to_string(Phase p) { return p == Phase::approach ? "approach" : "hovering"; }

inline constexpr const char* log_csv_header =
    "k,t,nu,phase,x,y,z,vx,vy,vz,d0,d1,d2,d3,d4,d5,decision,evaluated,in_box,dvx,dvy,dvz";

inline void write_log_csv(std::ostream& os, const SimulationLog& log)
{
    os << log_csv_header << '\n';
    for (const auto& s : log.samples) {
        os << s.k << ',' << fmt17(s.t) << ',' << fmt17(s.nu) << ',' << to_string(s.phase);
        for (int i = 0; i < 6; ++i) os << ',' << fmt17(s.X(i));
        for (int i = 0; i < 6; ++i) os << ',' << fmt17(s.D(i));
        os << ',' << to_string(s.decision) << ',' << int(s.evaluated) << ',' << int(s.in_box);
        for (int i = 0; i < 3; ++i) os << ',' << fmt17(s.dv(i));
        os << '\n';
    }
}

inline nlohmann::json metrics_to_json(const Metrics& m)
{
    return {{"fuel_J", m.fuel_J},
            {"n_impulses", m.n_impulses},
            {"n_computed_prefilter", m.n_computed_prefilter},
            {"box_satisfaction", m.box_satisfaction},
            {"calls_single", m.calls_single},
            {"calls_fallback", m.calls_fallback}};
}

inline Metrics metrics_from_json(const nlohmann::json& j)
{
    Metrics m;
    m.fuel_J = j.at("fuel_J").get<double>();
    m.n_impulses = j.at("n_impulses").get<int>();
    m.n_computed_prefilter = j.at("n_computed_prefilter").get<int>();
    m.box_satisfaction = j.at("box_satisfaction").get<double>();
    m.calls_single = j.at("calls_single").get<int>();
    m.calls_fallback = j.at("calls_fallback").get<int>();
    return m;
}

inline void write_metrics_json(std::ostream& os, const Metrics& m, const SimulationLog* log = nullptr)
{
    nlohmann::json j = metrics_to_json(m);
    if (log) {
        j["hover_start_sample"] = log->hover_start;
        double worst = 0.0, sum = 0.0;
        for (double t : log->trigger_time_ms) {
            worst = std::max(worst, t);
            sum += t;
        }
        j["trigger_ms_mean"] = log->trigger_time_ms.empty() ? 0.0 : sum / log->trigger_time_ms.size();
        j["trigger_ms_max"] = worst;
    }
    os << j.dump(2) << '\n';
}

inline Metrics read_metrics_json(std::istream& is) { return metrics_from_json(nlohmann::json::parse(is)); }

/// Writes log.csv and metrics.json into dir (created if needed).
inline void write_run_outputs(const std::filesystem::path& dir, const SimulationResult& r)
{
    std::filesystem::create_directories(dir);
    std::ofstream lc(dir / "log.csv");
    write_log_csv(lc, r.log);
    std::ofstream mj(dir / "metrics.json");
    write_metrics_json(mj, r.metrics, &r.log);
    if (!lc || !mj) throw std::runtime_error("cannot write outputs to '" + dir.string() + "'");
}

// ---- sweeps ---------------------------------------------------------------------

enum class SweepParam { eccentricity, dv_min, dv_max };

inline SweepParam parse_sweep_param(const std::string& s)
{
    if (s == "e") return SweepParam::eccentricity;
    if (s == "dvmin") return SweepParam::dv_min;
    if (s == "dvmax") return SweepParam::dv_max;
    throw config_error("sweep: unknown parameter '" + s + "' (expected e, dvmin or dvmax)");
}

inline const char* to_string(SweepParam p)
{
    switch (p) {
    case SweepParam::eccentricity: return "e";
    case SweepParam::dv_min: return "dvmin";
    case SweepParam::dv_max: return "dvmax";
    }
    return "?";
}

/// "linspace:a:b:n", "logspace:a:b:n" (endpoint values, not exponents) or "list:v1,v2,...".
inline std::vector<double> parse_grid(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw config_error("grid: expected kind:args, got '" + spec + "'");
    const std::string kind = spec.substr(0, colon), rest = spec.substr(colon + 1);
    if (kind == "list") {
        if (detail::trim(rest).empty()) throw config_error("grid: empty list");
        return detail::parse_list("grid", rest);
    }
    std::vector<std::string> f;
    std::stringstream ss(rest);
    for (std::string t; std::getline(ss, t, ':');) f.push_back(detail::trim(t));
    if (f.size() != 3) throw config_error("grid: expected " + kind + ":a:b:n");
    const double a = detail::parse_number("grid", f[0]), b = detail::parse_number("grid", f[1]);
    const int n = detail::parse_int("grid", f[2]);
    if (n < 1) throw config_error("grid: n must be >= 1");
    std::vector<double> v(n);
    if (kind == "linspace") {
        for (int k = 0; k < n; ++k) v[k] = n == 1 ? a : a + (b - a) * k / (n - 1);
    } else if (kind == "logspace") {
        if (!(a > 0.0 && b > 0.0)) throw config_error("grid: logspace endpoints must be > 0");
        for (int k = 0; k < n; ++k) v[k] = n == 1 ? a : a * std::pow(b / a, double(k) / (n - 1));
    } else {
        throw config_error("grid: unknown kind '" + kind + "'");
    }
    return v;
}

inline ScenarioConfig with_parameter(ScenarioConfig c, SweepParam p, double v)
{
    switch (p) {
    case SweepParam::eccentricity: c.e = v; break;
    case SweepParam::dv_min: c.limits.dv_min = v; break;
    case SweepParam::dv_max: c.limits.dv_max = v; break;
    }
    return c;
}

struct SweepRow {
    double value = 0.0;
    Metrics metrics;
    std::string status = "ok";  // or the failure message
};

inline constexpr const char* sweep_csv_header =
    "param,value,fuel_J,n_impulses,n_computed_prefilter,satisfaction,calls_fallback,status";

inline void write_sweep_csv(std::ostream& os, SweepParam p, const std::vector<SweepRow>& rows)
{
    os << sweep_csv_header << '\n';
    for (const auto& r : rows) {
        std::string st = r.status;
        for (char& ch : st)
            if (ch == ',' || ch == '\n') ch = ';';
        os << to_string(p) << ',' << fmt17(r.value) << ',' << fmt17(r.metrics.fuel_J) << ',' << r.metrics.n_impulses
           << ',' << r.metrics.n_computed_prefilter << ',' << fmt17(r.metrics.box_satisfaction) << ','
           << r.metrics.calls_fallback << ',' << st << '\n';
    }
}

/**
 * @brief Independent runs over the grid on `jobs` threads. A failing run is
 * recorded in its row and the sweep continues. on_done(i, result) is called
 * from worker threads for successful runs.
 */
template <class OnDone>
std::vector<SweepRow> run_sweep(const ScenarioConfig& base, SweepParam p, const std::vector<double>& values,
                                unsigned jobs, OnDone&& on_done)
{
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < values.size();) {
            rows[i].value = values[i];
            try {
                const auto r = run_closed_loop(with_parameter(base, p, values[i]));
                rows[i].metrics = r.metrics;
                on_done(i, r);
            } catch (const std::exception& ex) {
                rows[i].status = ex.what();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(values.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

inline std::vector<SweepRow> run_sweep(const ScenarioConfig& base, SweepParam p, const std::vector<double>& values,
                                       unsigned jobs)
{
    return run_sweep(base, p, values, jobs, [](std::size_t, const SimulationResult&) {});
}

}  // namespace hover
