#pragma once

#include "hover/controller.hpp"

#include <chrono>
#include <deque>

namespace hover {

struct InertialState {
    Vec3 r = Vec3::Zero();  // m
    Vec3 v = Vec3::Zero();  // m/s
};

struct DisturbanceConfig {
    bool enable_j2 = true;
    bool enable_drag = true;
    double rho0 = 1.0e-13;  // kg/m^3 at h0
    double h0_km = 600.0;
    double scale_height_km = 70.0;
    bool corotating_atmosphere = true;

    void validate() const
    {
        if (!(scale_height_km > 0.0)) throw config_error("disturbances: scale height must be > 0");
        if (!(rho0 >= 0.0)) throw config_error("disturbances: rho0 must be >= 0");
    }
    static DisturbanceConfig none()
    {
        DisturbanceConfig d;
        d.enable_j2 = d.enable_drag = false;
        return d;
    }
};

struct SpacecraftPhysical {
    double ballistic_coefficient = 139.80;  // kg/m^2
};

inline InertialState elements_to_inertial(const TargetOrbit& orb, double nu)
{
    const double mu = orb.mu * 1e9;
    const double p = orb.a * 1e3 * (1.0 - orb.e * orb.e);
    const double r = p / (1.0 + orb.e * std::cos(nu));
    const Vec3 rp(r * std::cos(nu), r * std::sin(nu), 0.0);
    const double f = std::sqrt(mu / p);
    const Vec3 vp(-f * std::sin(nu), f * (orb.e + std::cos(nu)), 0.0);
    const Eigen::Matrix3d R = (Eigen::AngleAxisd(orb.raan, Vec3::UnitZ()) * Eigen::AngleAxisd(orb.i, Vec3::UnitX()) *
                               Eigen::AngleAxisd(orb.argp, Vec3::UnitZ()))
                                  .toRotationMatrix();
    return {R * rp, R * vp};
}

/// Non-Keplerian part of the acceleration (J2 + drag), m/s^2.
inline Vec3 perturbing_acceleration(const InertialState& s, double mu_m3s2, const DisturbanceConfig& d,
                                    double ballistic)
{
    Vec3 a = Vec3::Zero();
    const double r = s.r.norm();
    if (d.enable_j2) {
        const double R = earth_radius_km * 1e3;
        const double z2 = s.r.z() * s.r.z() / (r * r);
        const double f = -1.5 * earth_j2 * mu_m3s2 * R * R / std::pow(r, 5);
        a += f * Vec3(s.r.x() * (1.0 - 5.0 * z2), s.r.y() * (1.0 - 5.0 * z2), s.r.z() * (3.0 - 5.0 * z2));
    }
    if (d.enable_drag && d.rho0 > 0.0) {
        const double h = r - earth_radius_km * 1e3;
        const double dens = d.rho0 * std::exp(-(h - d.h0_km * 1e3) / (d.scale_height_km * 1e3));
        Vec3 vrel = s.v;
        if (d.corotating_atmosphere) vrel -= Vec3(0, 0, earth_rotation_rate).cross(s.r);
        a += (-0.5 * dens * vrel.norm() / ballistic) * vrel;
    }
    return a;
}

inline Vec3 total_acceleration(const InertialState& s, double mu_m3s2, const DisturbanceConfig& d, double ballistic)
{
    const double r = s.r.norm();
    return -mu_m3s2 / (r * r * r) * s.r + perturbing_acceleration(s, mu_m3s2, d, ballistic);
}

/** @brief Fixed-step RK4 of both spacecraft, substeps <= 1 s. */
inline void propagate_nonlinear(InertialState& target, InertialState& chaser, double dt, double mu_km3s2,
                                const DisturbanceConfig& d, const SpacecraftPhysical& pt,
                                const SpacecraftPhysical& pc)
{
    if (!(dt > 0.0)) return;
    const double mu = mu_km3s2 * 1e9;
    const int n = static_cast<int>(std::ceil(dt - 1e-9));
    const double h = dt / std::max(n, 1);
    auto rk4 = [&](InertialState& s, double B) {
        auto f = [&](const InertialState& x) { return InertialState{x.v, total_acceleration(x, mu, d, B)}; };
        const auto k1 = f(s);
        const auto k2 = f({s.r + 0.5 * h * k1.r, s.v + 0.5 * h * k1.v});
        const auto k3 = f({s.r + 0.5 * h * k2.r, s.v + 0.5 * h * k2.v});
        const auto k4 = f({s.r + h * k3.r, s.v + h * k3.v});
        s.r += h / 6.0 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
        s.v += h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    };
    for (int k = 0; k < std::max(n, 1); ++k) {
        rk4(target, pt.ballistic_coefficient);
        rk4(chaser, pc.ballistic_coefficient);
    }
}

struct LvlhFrame {
    Eigen::Matrix3d C;  // rows: x, y, z axes in inertial coordinates
    Vec3 omega;         // frame angular velocity, inertial coordinates
};

/// z toward Earth, y against angular momentum, x = y cross z.
inline LvlhFrame lvlh_frame(const InertialState& target, const Vec3& a_pert = Vec3::Zero())
{
    const Vec3 h = target.r.cross(target.v);
    const double hn = h.norm();
    if (!(hn > 0.0)) throw numerical_error("lvlh: zero angular momentum");
    const double r = target.r.norm();
    const Vec3 zh = -target.r / r;
    const Vec3 yh = -h / hn;
    const Vec3 xh = yh.cross(zh);
    LvlhFrame f;
    f.C.row(0) = xh;
    f.C.row(1) = yh;
    f.C.row(2) = zh;
    f.omega = (hn / (r * r)) * (h / hn) + (r * a_pert.dot(h / hn) / hn) * (target.r / r);
    return f;
}

inline CartesianRelativeState lvlh_relative_state(const InertialState& target, const InertialState& chaser,
                                                  const Vec3& a_pert = Vec3::Zero())
{
    const auto f = lvlh_frame(target, a_pert);
    const Vec3 dr = chaser.r - target.r;
    const Vec3 dv = chaser.v - target.v - f.omega.cross(dr);
    return {f.C * dr, f.C * dv};
}

inline InertialState chaser_from_relative(const InertialState& target, const CartesianRelativeState& X,
                                          const Vec3& a_pert = Vec3::Zero())
{
    const auto f = lvlh_frame(target, a_pert);
    const Vec3 dr = f.C.transpose() * X.r;
    return {target.r + dr, target.v + f.C.transpose() * X.v + f.omega.cross(dr)};
}

struct ScenarioConfig {
    double mu = earth_mu_km3s2;
    double perigee_altitude_km = 605.0;
    double e = 0.0;
    double i = deg2rad(98.0);
    double raan = 0.0;
    double argp = 0.0;
    double nu0 = 0.0;
    CartesianRelativeState X0{Vec3(300, 400, -40), Vec3::Zero()};
    HoveringBox box;
    ThrusterLimits limits;
    TriggerConfig trigger;
    DisturbanceConfig disturbances;
    SpacecraftPhysical target_physical{139.80};
    SpacecraftPhysical chaser_physical{175.90};
    double hovering_periods = 10.0;
    double approach_max_periods = 5.0;

    TargetOrbit orbit() const
    {
        return TargetOrbit((earth_radius_km + perigee_altitude_km) / (1.0 - e), e, i, raan, argp, mu);
    }

    void validate() const
    {
        orbit().validate();
        box.validate();
        limits.validate();
        trigger.validate();
        disturbances.validate();
        if (!(hovering_periods >= 1.0)) throw config_error("scenario: hovering duration must be >= 1 period");
        if (!(target_physical.ballistic_coefficient > 0 && chaser_physical.ballistic_coefficient > 0))
            throw config_error("scenario: ballistic coefficients must be > 0");
        if (!X0.vec().allFinite()) throw config_error("scenario: initial state not finite");
    }
};

enum class Phase { approach, hovering };

struct SampleRecord {
    int k = 0;
    double t = 0.0;
    double nu = 0.0;
    Phase phase = Phase::approach;
    Vec6 X = Vec6::Zero();
    DState D = DState::Zero();
    ControlDecision::Kind decision = ControlDecision::Kind::wait;
    bool evaluated = false;  // trigger rules consulted at this sample
    bool in_box = false;
    Vec3 dv = Vec3::Zero();  // impulse applied at this sample

    bool operator==(const SampleRecord& o) const
    {
        return k == o.k && t == o.t && nu == o.nu && phase == o.phase && X == o.X && D == o.D &&
               decision == o.decision && evaluated == o.evaluated && in_box == o.in_box && dv == o.dv;
    }
};

struct ImpulseEvent {
    int k = 0;
    double t = 0.0;
    Phase phase = Phase::approach;
    ControlDecision::Kind source = ControlDecision::Kind::single_impulse;
    Plane plane = Plane::in_plane;
    Impulse impulse;
    double prefilter_norm = 0.0;
    DState D_before = DState::Zero();
    DState D_after = DState::Zero();  // from the measured post-impulse state
    DState D_plus = DState::Zero();   // linear model: D_before + B_D dv

    bool operator==(const ImpulseEvent& o) const
    {
        return k == o.k && t == o.t && phase == o.phase && source == o.source && plane == o.plane &&
               impulse.dv == o.impulse.dv && impulse.nu == o.impulse.nu && D_after == o.D_after;
    }
};

struct FallbackEvent {
    int k = 0;
    Phase phase = Phase::approach;
    int nulled = 0;
    int clipped = 0;
    bool operator==(const FallbackEvent&) const = default;
};

struct SimulationLog {
    std::vector<SampleRecord> samples;
    std::vector<ImpulseEvent> impulses;
    std::vector<FallbackEvent> fallbacks;
    std::vector<double> trigger_time_ms;  // wall clock per trigger call, excluded from equality
    int hover_start = -1;

    bool operator==(const SimulationLog& o) const
    {
        return samples == o.samples && impulses == o.impulses && fallbacks == o.fallbacks &&
               hover_start == o.hover_start;
    }
};

struct Metrics {
    double fuel_J = 0.0;  // m/s
    int n_impulses = 0;
    int n_computed_prefilter = 0;
    double box_satisfaction = 0.0;  // percent
    int calls_single = 0;
    int calls_fallback = 0;
    bool operator==(const Metrics&) const = default;
};

struct SimulationResult {
    SimulationLog log;
    Metrics metrics;
};

inline Metrics compute_metrics(const SimulationLog& log)
{
    Metrics m;
    int hover = 0, inside = 0;
    for (const auto& s : log.samples)
        if (s.phase == Phase::hovering) {
            ++hover;
            inside += s.in_box ? 1 : 0;
            if (s.evaluated && s.decision == ControlDecision::Kind::single_impulse) ++m.calls_single;
            if (s.evaluated && s.decision == ControlDecision::Kind::fallback) ++m.calls_fallback;
        }
    m.box_satisfaction = hover > 0 ? 100.0 * inside / hover : 0.0;
    for (const auto& ev : log.impulses) {
        if (ev.phase != Phase::hovering) continue;
        ++m.n_computed_prefilter;
        if (!ev.impulse.is_null()) {
            ++m.n_impulses;
            m.fuel_J += ev.impulse.norm1();
        }
    }
    return m;
}

namespace detail {

inline double argument_of_latitude(const InertialState& s)
{
    const Vec3 h = s.r.cross(s.v);
    Vec3 n = Vec3::UnitZ().cross(h);
    if (n.norm() < 1e-9 * h.norm()) n = Vec3::UnitX();
    n.normalize();
    const Vec3 m = h.normalized().cross(n);
    return std::atan2(s.r.dot(m), s.r.dot(n));
}

inline double wrap_pi(double x) { return x - two_pi * std::floor((x + pi) / two_pi); }

}  // namespace detail

/**
 * @brief Closed-loop run: fallback approach, then event-based hovering.
 * Throws infeasible_error when the approach never reaches the admissible set.
 */
inline SimulationResult run_closed_loop(const ScenarioConfig& cfg)
{
    cfg.validate();
    const TargetOrbit orb = cfg.orbit();
    const double mu_m = orb.mu * 1e9;
    const auto& box = cfg.box;
    const auto& lim = cfg.limits;
    const auto& dist = cfg.disturbances;
    const double dnu = cfg.trigger.delta_nu_sample;
    const int per_period = static_cast<int>(std::lround(two_pi / dnu));
    const int hover_samples = static_cast<int>(std::lround(cfg.hovering_periods * per_period));
    const int approach_limit = static_cast<int>(std::lround(cfg.approach_max_periods * per_period));

    InertialState target = elements_to_inertial(orb, cfg.nu0);
    auto apert = [&](const InertialState& s) {
        return perturbing_acceleration(s, mu_m, dist, cfg.target_physical.ballistic_coefficient);
    };
    InertialState chaser = chaser_from_relative(target, cfg.X0, apert(target));

    ControllerSession session(orb, box, lim, cfg.trigger);
    SimulationResult res;
    auto& log = res.log;
    struct Pending {
        int k;
        Impulse imp;
        double prefilter;
    };
    std::deque<Pending> pending;
    Phase phase = Phase::approach;
    const double t0 = nu_to_time(cfg.nu0, orb);
    const double u0 = orb.argp;
    double t_prev = 0.0;
    int hovered = 0;
    bool enter_next = false;  // the previous sample's impulse landed in S_D

    auto apply = [&](SampleRecord& rec, const Impulse& imp, ControlDecision::Kind src, Plane plane,
                     double prefilter) {
        ImpulseEvent ev;
        ev.k = rec.k;
        ev.t = rec.t;
        ev.phase = rec.phase;
        ev.source = src;
        ev.plane = plane;
        ev.impulse = imp;
        ev.impulse.nu = rec.nu;
        ev.prefilter_norm = prefilter;
        ev.D_before = rec.D;
        ev.D_plus = apply_impulse(rec.D, rec.nu, imp.dv, orb);
        if (!imp.is_null()) {
            const auto f = lvlh_frame(target, apert(target));
            chaser.v += f.C.transpose() * imp.dv;
            rec.dv += imp.dv;
        }
        const auto X = lvlh_relative_state(target, chaser, apert(target));
        ev.D_after = cartesian_to_D(X, rec.nu, orb);
        log.impulses.push_back(ev);
    };

    auto schedule = [&](int k, const FallbackPlan& plan) {
        const int step = std::max(1, static_cast<int>(std::lround(plan.tau / dnu)));
        for (int j = 0; j < static_cast<int>(plan.impulses.size()); ++j)
            pending.push_back({k + j * step, plan.impulses[j], plan.raw[j].norm2()});
        log.fallbacks.push_back({k, phase, plan.nulled, plan.clipped});
    };

    for (int k = 0;; ++k) {
        const double nu_nom = cfg.nu0 + k * dnu;
        const double t = nu_to_time(nu_nom, orb) - t0;
        propagate_nonlinear(target, chaser, t - t_prev, orb.mu, dist, cfg.target_physical, cfg.chaser_physical);
        t_prev = t;

        SampleRecord rec;
        rec.k = k;
        rec.t = t;
        rec.nu = nu_nom + detail::wrap_pi(detail::argument_of_latitude(target) - u0 - nu_nom);
        const auto X = lvlh_relative_state(target, chaser, apert(target));
        rec.X = X.vec();
        rec.D = cartesian_to_D(X, rec.nu, orb);
        rec.in_box = box.contains(X.r);

        if (phase == Phase::approach && pending.empty()) {
            if (enter_next || is_admissible(rec.D, box, orb.e, cfg.trigger.tol_periodicity)) {
                phase = Phase::hovering;
                log.hover_start = k;
            } else if (k >= approach_limit) {
                throw infeasible_error("approach phase did not reach the admissible set");
            }
        }
        rec.phase = phase;

        if (!pending.empty()) {
            while (!pending.empty() && pending.front().k <= k) {
                apply(rec, pending.front().imp, ControlDecision::Kind::fallback, Plane::coupled,
                      pending.front().prefilter);
                pending.pop_front();
            }
        } else if (phase == Phase::approach) {
            // enter S_D with one impulse once every violated plane is reachable
            const bool ok_xz = is_admissible_xz(rec.D, box, orb.e, cfg.trigger.tol_periodicity);
            const bool ok_y = is_admissible_y(rec.D, box, orb.e);
            const auto rep = instant_report(rec.D, rec.nu, orb, box, lim);
            const bool r_xz = ok_xz || rep.xz.L > 0.0, r_y = ok_y || rep.y.L > 0.0;
            if (r_xz && r_y) {
                Impulse imp;
                Plane plane = Plane::in_plane;
                if (!ok_xz && !ok_y) {
                    const auto c = solve_coupled(rep.xz, rep.basis, rep.y, rec.nu, lim);
                    imp = c.impulse;
                    plane = c.deferred_out_of_plane ? Plane::in_plane : Plane::coupled;
                } else if (!ok_xz) {
                    imp = solve_in_plane(rep.xz, rep.basis, rec.nu);
                } else {
                    imp = solve_out_of_plane(rep.y, rec.nu);
                    plane = Plane::out_of_plane;
                }
                rec.decision = ControlDecision::Kind::single_impulse;
                apply(rec, imp, rec.decision, plane, imp.norm2());
                if (is_admissible(log.impulses.back().D_after, box, orb.e, cfg.trigger.tol_periodicity)) {
                    enter_next = true;
                }
            } else {
                const auto plan = fallback_maneuver(rec.D, rec.nu, orb, box, lim, cfg.trigger.tau_fallback);
                rec.decision = ControlDecision::Kind::fallback;
                schedule(k, plan);
                apply(rec, pending.front().imp, ControlDecision::Kind::fallback, Plane::coupled,
                      pending.front().prefilter);
                pending.pop_front();
            }
        } else {
            const auto c0 = std::chrono::steady_clock::now();
            const auto dec = session.step(rec.D, rec.nu);
            log.trigger_time_ms.push_back(
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - c0).count());
            rec.evaluated = true;
            rec.decision = dec.kind;
            if (dec.is_single()) {
                apply(rec, dec.impulse, dec.kind, dec.plane, dec.impulse.norm2());
            } else if (dec.is_fallback()) {
                schedule(k, dec.fallback);
                apply(rec, pending.front().imp, ControlDecision::Kind::fallback, Plane::coupled,
                      pending.front().prefilter);
                pending.pop_front();
            }
        }
        log.samples.push_back(rec);
        if (phase == Phase::hovering && ++hovered >= hover_samples) break;
    }
    res.metrics = compute_metrics(log);
    return res;
}

}  // namespace hover
