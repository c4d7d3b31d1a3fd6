// hoverctl: run, sweep and inspect hovering scenarios.
#include "hover/diagnostics.hpp"
#include "hover/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace hover;

namespace {

enum Exit { ok = 0, config_failure = 1, infeasible = 2 };

fs::path output_dir(const std::string& flag)
{
    if (const char* env = std::getenv("HOVERCTL_OUT"); env && *env) return env;
    return flag;
}

int cmd_run(const std::string& config, const std::string& out)
{
    const ScenarioConfig sc = resolve_thresholds(load_scenario(config));
    const SimulationResult r = run_closed_loop(sc);
    const fs::path dir = output_dir(out);
    write_run_outputs(dir, r);
    const auto& m = r.metrics;
    std::printf("hovering: %d impulses, fuel %.6g m/s, box satisfaction %.2f%%, fallback calls %d\n", m.n_impulses,
                m.fuel_J, m.box_satisfaction, m.calls_fallback);
    std::printf("wrote %s and %s\n", (dir / "log.csv").c_str(), (dir / "metrics.json").c_str());
    return ok;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& grid, unsigned jobs,
              const std::string& out)
{
    const SweepParam p = parse_sweep_param(param);
    const std::vector<double> values = parse_grid(grid);
    if (values.empty()) throw config_error("sweep: empty grid");
    const ScenarioConfig base = resolve_thresholds(load_scenario(config));
    for (double v : values) with_parameter(base, p, v).validate();

    const fs::path dir = output_dir(out);
    fs::create_directories(dir / "runs");
    const auto rows = run_sweep(base, p, values, jobs, [&](std::size_t i, const SimulationResult& r) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%03zu", to_string(p), i);
        write_run_outputs(dir / "runs" / name, r);
    });
    std::ofstream os(dir / "sweep.csv");
    write_sweep_csv(os, p, rows);
    if (!os) throw std::runtime_error("cannot write " + (dir / "sweep.csv").string());

    int failed = 0;
    for (const auto& r : rows) failed += r.status != "ok";
    std::printf("%zu runs, %d failed; wrote %s\n", rows.size(), failed, (dir / "sweep.csv").c_str());
    return ok;
}

int cmd_check_sets(const std::string& config, int samples)
{
    const ScenarioFile f = load_scenario(config);
    const ScenarioConfig& sc = f.scenario;
    const TargetOrbit orb = sc.orbit();

    std::printf("deadzone_y: %s\n", deadzone_set_exists_y(orb, sc.box, sc.limits) ? "exists" : "absent");
    std::printf("deadzone_xz: no closed-form criterion, use membership checks\n");

    try {
        const auto b = estimate_threshold_bounds(orb, sc.box, sc.limits, samples);
        const ScenarioConfig resolved = resolve_thresholds(f);
        std::printf("threshold bound xz: %.6g (delta_xz = %.6g, %s)\n", b.bound_xz, resolved.trigger.delta_xz,
                    resolved.trigger.delta_xz < b.bound_xz ? "below bound" : "NOT below bound");
        std::printf("threshold bound y: %.6g (delta_y = %.6g, %s)\n", b.bound_y, sc.trigger.delta_y,
                    sc.trigger.delta_y < b.bound_y ? "below bound" : "NOT below bound");
    } catch (const numerical_error& e) {
        std::printf("threshold bounds: unavailable (%s)\n", e.what());
    }

    const DState D0 = cartesian_to_D(sc.X0, sc.nu0, orb);
    const auto tol = sc.trigger.tol_periodicity;
    if (is_admissible(D0, sc.box, orb.e, tol)) {
        std::printf("X0: admissible\n");
    } else {
        const auto m = deadzone_membership(D0, sc.nu0, orb, sc.box, sc.limits, sc.trigger.n_L, tol);
        std::printf("X0: %s\n", to_string(m));
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Event-based impulsive hovering controller"};
    app.require_subcommand(1);
    std::string config, out = ".", param, grid;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    int samples = auto_threshold_samples;

    auto* run = app.add_subcommand("run", "closed-loop run; writes log.csv and metrics.json");
    run->add_option("config", config, "scenario file")->required();
    run->add_option("--out", out, "output directory (HOVERCTL_OUT takes precedence)");

    auto* sweep = app.add_subcommand("sweep", "parameter sweep; writes sweep.csv and per-run outputs");
    sweep->add_option("config", config, "base scenario file")->required();
    sweep->add_option("--param", param, "e | dvmin | dvmax")->required();
    sweep->add_option("--grid", grid, "linspace:a:b:n | logspace:a:b:n | list:v1,v2,...")->required();
    sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out, "output directory (HOVERCTL_OUT takes precedence)");

    auto* check = app.add_subcommand("check-sets", "dead-zone, threshold and attraction diagnostics");
    check->add_option("config", config, "scenario file")->required();
    check->add_option("--samples", samples, "threshold estimator samples")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_failure;
    }

    try {
        if (*run) return cmd_run(config, out);
        if (*sweep) return cmd_sweep(config, param, grid, jobs, out);
        return cmd_check_sets(config, samples);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return config_failure;
    } catch (const infeasible_error& e) {
        std::cerr << "controller infeasible: " << e.what() << '\n';
        return infeasible;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return infeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return config_failure;
    }
}
