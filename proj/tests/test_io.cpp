#include "hover/io.hpp"

#include <gtest/gtest.h>

using namespace hover;

namespace {

ScenarioFile parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_scenario(in);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
    return out;
}

}  // namespace

TEST(ScenarioParse, EmptyFileGivesDefaults)
{
    const auto f = parse("# nothing but a comment\n\n");
    EXPECT_FALSE(f.auto_delta_xz);
    EXPECT_EQ(f.scenario.trigger.delta_xz, default_delta_xz);
    EXPECT_EQ(f.scenario.limits.dv_min, 1e-3);
    EXPECT_EQ(f.scenario.X0.vec(), ScenarioConfig{}.X0.vec());
}

TEST(ScenarioParse, ValuesAndUnits)
{
    const auto f = parse("orbit.i = 45   # deg\n"
                         "orbit.e=0.2\n"
                         "initial.state = 1, 2, 3, 0.1, 0.2, 0.3\n"
                         "trigger.delta_nu = 2\n"
                         "trigger.n_L = 50\n"
                         "disturbances.drag = off\n"
                         "thruster.dv_min = 2e-3\n");
    const auto& c = f.scenario;
    EXPECT_DOUBLE_EQ(c.i, deg2rad(45.0));
    EXPECT_EQ(c.e, 0.2);
    EXPECT_EQ(c.X0.vec(), (Vec6() << 1, 2, 3, 0.1, 0.2, 0.3).finished());
    EXPECT_DOUBLE_EQ(c.trigger.delta_nu_sample, deg2rad(2.0));
    EXPECT_EQ(c.trigger.n_L, 50);
    EXPECT_FALSE(c.disturbances.enable_drag);
    EXPECT_TRUE(c.disturbances.enable_j2);
    EXPECT_EQ(c.limits.dv_min, 2e-3);
}

TEST(ScenarioParse, Errors)
{
    for (const char* bad : {"orbit.q = 1\n", "orbit.e = 0.1\norbit.e = 0.2\n", "orbit.e =\n", "orbit.e 0.1\n",
                            "orbit.e = 0.1x\n", "disturbances.j2 = maybe\n", "trigger.n_L = 2.5\n",
                            "initial.state = 1, 2, 3\n", "thruster.dv_min = 0.5\n", "box.x_min = -10\n",
                            "orbit.e = 1.2\n", "trigger.delta_y = 5\n"})
        EXPECT_THROW(parse(bad), config_error) << bad;
    EXPECT_THROW(load_scenario("/nonexistent/scenario.cfg"), config_error);
}

TEST(ScenarioParse, ShippedScenariosLoad)
{
    const auto nom = load_scenario(SCENARIO_DIR "/nominal.cfg").scenario;
    const ScenarioConfig def;
    EXPECT_EQ(nom.trigger.delta_xz, def.trigger.delta_xz);
    EXPECT_EQ(nom.trigger.delta_y, def.trigger.delta_y);
    EXPECT_DOUBLE_EQ(nom.i, def.i);
    EXPECT_EQ(nom.perigee_altitude_km, def.perigee_altitude_km);
    EXPECT_EQ(nom.X0.vec(), def.X0.vec());
    EXPECT_EQ(nom.target_physical.ballistic_coefficient, def.target_physical.ballistic_coefficient);
    EXPECT_EQ(nom.chaser_physical.ballistic_coefficient, def.chaser_physical.ballistic_coefficient);
    EXPECT_EQ(nom.disturbances.rho0, def.disturbances.rho0);
    const auto dz = load_scenario(SCENARIO_DIR "/large_deadzone.cfg").scenario;
    EXPECT_EQ(dz.limits.dv_min, 0.075);
    EXPECT_NEAR(dz.orbit().a, 7011.0, 0.1);
}

TEST(ScenarioParse, AutoThreshold)
{
    const auto f = parse("trigger.delta_xz = auto\n");
    EXPECT_TRUE(f.auto_delta_xz);
    // the nominal geometry reproduces the compiled-in default
    EXPECT_DOUBLE_EQ(resolve_thresholds(f).trigger.delta_xz, default_delta_xz);
    const auto g = parse("trigger.delta_xz = -0.3\n");
    EXPECT_EQ(resolve_thresholds(g).trigger.delta_xz, -0.3);
}

TEST(Metrics, JsonRoundTrip)
{
    Metrics m;
    m.fuel_J = 0.1 + 0.2;
    m.n_impulses = 17;
    m.n_computed_prefilter = 19;
    m.box_satisfaction = 100.0 * 3593 / 3600;
    m.calls_single = 17;
    m.calls_fallback = 1;
    std::stringstream ss;
    write_metrics_json(ss, m);
    EXPECT_EQ(read_metrics_json(ss), m);
    EXPECT_THROW(metrics_from_json(nlohmann::json::parse(R"({"fuel_J": 1})")), nlohmann::json::exception);
}

TEST(Metrics, JsonCarriesRunExtras)
{
    SimulationLog log;
    log.hover_start = 12;
    log.trigger_time_ms = {1.0, 3.0};
    std::stringstream ss;
    write_metrics_json(ss, Metrics{}, &log);
    const auto j = nlohmann::json::parse(ss.str());
    EXPECT_EQ(j.at("hover_start_sample").get<int>(), 12);
    EXPECT_EQ(j.at("trigger_ms_mean").get<double>(), 2.0);
    EXPECT_EQ(j.at("trigger_ms_max").get<double>(), 3.0);
}

TEST(LogCsv, HeaderAndRows)
{
    EXPECT_STREQ(log_csv_header,
                 "k,t,nu,phase,x,y,z,vx,vy,vz,d0,d1,d2,d3,d4,d5,decision,evaluated,in_box,dvx,dvy,dvz");
    SimulationLog log;
    SampleRecord r;
    r.k = 3;
    r.t = 1.0 / 3.0;
    r.nu = 0.1;
    r.phase = Phase::hovering;
    r.X << 1, 2, 3, 4, 5, 6;
    r.D << 0.5, 1, 2, 100, 4, -5;
    r.decision = ControlDecision::Kind::single_impulse;
    r.evaluated = true;
    r.in_box = true;
    r.dv = Vec3(1e-3, 0, -2e-3);
    log.samples = {r, SampleRecord{}};
    std::stringstream ss;
    write_log_csv(ss, log);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, log_csv_header);
    std::getline(ss, line);
    const auto f = split(line);
    ASSERT_EQ(f.size(), 22u);
    EXPECT_EQ(f[0], "3");
    EXPECT_EQ(std::stod(f[1]), r.t);
    EXPECT_EQ(f[3], "hovering");
    EXPECT_EQ(std::stod(f[13]), 100.0);
    EXPECT_EQ(f[16], "single");
    EXPECT_EQ(f[17], "1");
    EXPECT_EQ(std::stod(f[21]), -2e-3);
    std::getline(ss, line);
    EXPECT_EQ(split(line).size(), 22u);
    EXPECT_FALSE(std::getline(ss, line));
}

TEST(SweepCsv, HeaderAndSanitizedStatus)
{
    EXPECT_STREQ(sweep_csv_header, "param,value,fuel_J,n_impulses,n_computed_prefilter,satisfaction,calls_fallback,status");
    std::vector<SweepRow> rows(1);
    rows[0].value = 0.25;
    rows[0].status = "bad, really\nbad";
    std::stringstream ss;
    write_sweep_csv(ss, SweepParam::eccentricity, rows);
    std::string line;
    std::getline(ss, line);
    std::getline(ss, line);
    const auto f = split(line);
    ASSERT_EQ(f.size(), 8u);
    EXPECT_EQ(f[0], "e");
    EXPECT_EQ(f[7], "bad; really;bad");
}

TEST(Grid, Kinds)
{
    const auto lin = parse_grid("linspace:0:0.6:50");
    ASSERT_EQ(lin.size(), 50u);
    EXPECT_EQ(lin.front(), 0.0);
    EXPECT_DOUBLE_EQ(lin.back(), 0.6);
    EXPECT_NEAR(lin[1] - lin[0], 0.6 / 49, 1e-15);
    const auto lg = parse_grid("logspace:1e-4:1e-2:50");
    ASSERT_EQ(lg.size(), 50u);
    EXPECT_DOUBLE_EQ(lg.front(), 1e-4);
    EXPECT_DOUBLE_EQ(lg.back(), 1e-2);
    for (std::size_t k = 1; k < lg.size(); ++k) EXPECT_NEAR(lg[k] / lg[k - 1], std::pow(100.0, 1.0 / 49), 1e-12);
    EXPECT_EQ(parse_grid("list: 1, 2.5 ,3"), (std::vector<double>{1, 2.5, 3}));
    EXPECT_EQ(parse_grid("linspace:2:3:1"), std::vector<double>{2});
    for (const char* bad : {"foo", "linspace:0:1", "linspace:0:1:0", "logspace:0:1:5", "list:", "cubic:0:1:3",
                            "linspace:a:1:3", "list:1,,2"})
        EXPECT_THROW(parse_grid(bad), config_error) << bad;
}

TEST(Sweep, ParameterNames)
{
    EXPECT_EQ(parse_sweep_param("e"), SweepParam::eccentricity);
    EXPECT_EQ(parse_sweep_param("dvmin"), SweepParam::dv_min);
    EXPECT_EQ(parse_sweep_param("dvmax"), SweepParam::dv_max);
    EXPECT_THROW(parse_sweep_param("mass"), config_error);
    const ScenarioConfig c = with_parameter(ScenarioConfig{}, SweepParam::dv_max, 0.05);
    EXPECT_EQ(c.limits.dv_max, 0.05);
    EXPECT_EQ(with_parameter(c, SweepParam::eccentricity, 0.3).e, 0.3);
}

TEST(Sweep, FailuresAreRecordedAndTheSweepContinues)
{
    ScenarioConfig base;
    base.hovering_periods = 1.0;
    std::atomic<int> done{0};
    // dv_min above dv_max fails validation for the middle run only
    const auto rows = run_sweep(base, SweepParam::dv_min, {1e-3, 0.5, 2e-3}, 2,
                                [&](std::size_t, const SimulationResult&) { ++done; });
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].status, "ok");
    EXPECT_NE(rows[1].status.find("thruster"), std::string::npos);
    EXPECT_EQ(rows[2].status, "ok");
    EXPECT_EQ(rows[1].value, 0.5);
    EXPECT_EQ(done.load(), 2);
    // parallel rows match a direct serial run
    EXPECT_EQ(rows[0].metrics, run_closed_loop(with_parameter(base, SweepParam::dv_min, 1e-3)).metrics);
}
