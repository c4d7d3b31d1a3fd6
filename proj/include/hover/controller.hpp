#pragma once

#include "hover/reachability.hpp"

#include <optional>
#include <random>

namespace hover {

// Half the threshold-bound estimate for the nominal geometry (e = 0, h_p = 605 km,
// i = 98 deg, default box and thruster, 200 samples, seed 1).
inline constexpr double nominal_bound_xz = -0.99238655434961121;
inline constexpr double default_delta_xz = 0.5 * nominal_bound_xz;

struct TriggerConfig {
    double delta_xz = default_delta_xz;  // m (in-track surrogate envelope scale)
    double delta_y = -100.0;  // m^2
    double delta_nu_sample = deg2rad(1.0);
    int n_L = 100;
    double tol_periodicity = default_tol_periodicity;
    double tau_fallback = deg2rad(30.0);
    // candidates within this relative cost band of the optimum are ranked by
    // post-impulse envelope margin; 0 gives the plain minimum-cost choice
    double cost_tie_band = 0.05;

    void validate() const
    {
        if (!(delta_xz <= 0.0 && delta_y <= 0.0)) throw config_error("trigger: thresholds must be <= 0");
        if (!(delta_nu_sample > 0.0)) throw config_error("trigger: sampling step must be > 0");
        if (n_L < 1) throw config_error("trigger: n_L must be >= 1");
        if (!(tol_periodicity >= 0.0)) throw config_error("trigger: tol_periodicity must be >= 0");
        if (!(tau_fallback > 0.0)) throw config_error("trigger: fallback spacing must be > 0");
        if (!(cost_tie_band >= 0.0)) throw config_error("trigger: cost_tie_band must be >= 0");
    }
};

enum class Plane { in_plane, out_of_plane, coupled };

inline const char* to_string(Plane p)
{
    switch (p) {
    case Plane::in_plane: return "in";
    case Plane::out_of_plane: return "out";
    case Plane::coupled: return "coupled";
    }
    return "?";
}

/** @brief Three-impulse fallback plan. */
struct FallbackPlan {
    std::vector<Impulse> impulses;  // after dead-zone / saturation filtering, same length as raw
    std::vector<Impulse> raw;       // minimum-norm solution
    int nulled = 0;
    int clipped = 0;
    double tau = 0.0;  // spacing actually used
};

struct ControlDecision {
    enum class Kind { wait, single_impulse, fallback } kind = Kind::wait;
    Impulse impulse;  // single_impulse only
    Plane plane = Plane::in_plane;
    bool deferred_out_of_plane = false;
    FallbackPlan fallback;

    // evidence used for the decision
    bool admissible_xz = false, admissible_y = false;
    PlaneFlags attraction;
    std::optional<ReachabilityReport> report;

    bool is_wait() const { return kind == Kind::wait; }
    bool is_single() const { return kind == Kind::single_impulse; }
    bool is_fallback() const { return kind == Kind::fallback; }
};

inline const char* to_string(ControlDecision::Kind k)
{
    switch (k) {
    case ControlDecision::Kind::wait: return "wait";
    case ControlDecision::Kind::single_impulse: return "single";
    case ControlDecision::Kind::fallback: return "fallback";
    }
    return "?";
}

// ---- single-impulse programs ----------------------------------------------

inline double argmin_abs_endpoint(const IntervalUnion& u)
{
    if (u.empty()) throw infeasible_error("out-of-plane: empty feasible set");
    double best = u.parts().front().lo;
    for (double l : u.endpoints())
        if (std::abs(l) < std::abs(best)) best = l;
    return best;
}

inline Impulse solve_out_of_plane(const PlaneReach& r, double nu)
{
    return {Vec3(0.0, argmin_abs_endpoint(r.lambda_S_sat), 0.0), nu};
}

inline Impulse solve_out_of_plane(const Vec2& Dy, double nu, const TargetOrbit& orb, const HoveringBox& box,
                                  const ThrusterLimits& lim)
{
    return solve_out_of_plane(reach_y(Dy, nu, orb, box, lim, false), nu);
}

/// Minimizer of |dV_xz(lambda)|_1 over the union: endpoints plus the two kinks.
inline double in_plane_lambda(const IntervalUnion& u, const InPlaneControlBasis& basis)
{
    if (u.empty()) throw infeasible_error("in-plane: empty feasible set");
    std::vector<double> cand = u.endpoints();
    for (int k = 0; k < 2; ++k)
        if (basis.b_perp(k) != 0.0) {
            const double l = -basis.dv0(k) / basis.b_perp(k);
            if (u.contains(l)) cand.push_back(l);
        }
    double best = cand.front(), cost = basis.dv(best).lpNorm<1>();
    for (double l : cand) {
        const double c = basis.dv(l).lpNorm<1>();
        if (c < cost) {
            cost = c;
            best = l;
        }
    }
    return best;
}

inline Impulse solve_in_plane(const PlaneReach& r, const InPlaneControlBasis& basis, double nu)
{
    return {basis.impulse(in_plane_lambda(r.lambda_S_sat, basis)), nu};
}

inline Impulse solve_in_plane(const Vec4& Dxz, double nu, const TargetOrbit& orb, const HoveringBox& box,
                              const ThrusterLimits& lim)
{
    InPlaneControlBasis basis;
    const auto r = reach_xz(Dxz, nu, orb, box, lim, false, &basis);
    return solve_in_plane(r, basis, nu);
}

struct CoupledResult {
    Impulse impulse;
    bool deferred_out_of_plane = false;
};

inline CoupledResult solve_coupled(const PlaneReach& rxz, const InPlaneControlBasis& basis, const PlaneReach& ry,
                                   double nu, const ThrusterLimits& lim)
{
    if (rxz.lambda_S_sat.empty()) throw infeasible_error("coupled: empty in-plane set");
    if (ry.lambda_S_sat.empty()) throw infeasible_error("coupled: empty out-of-plane set");
    std::optional<Vec3> best;
    double cost = std::numeric_limits<double>::infinity();
    for (double lxz : rxz.lambda_S_sat.endpoints())
        for (double ly : ry.lambda_S_sat.endpoints()) {
            Vec3 dv = basis.impulse(lxz);
            dv(1) = ly;
            const double n = dv.norm();
            if (n < lim.dv_min || n > lim.dv_max) continue;
            const double c = dv.lpNorm<1>();
            if (c < cost) {
                cost = c;
                best = dv;
            }
        }
    if (best) return {{*best, nu}, false};
    return {solve_in_plane(rxz, basis, nu), true};
}

inline CoupledResult solve_coupled(const DState& D, double nu, const TargetOrbit& orb, const HoveringBox& box,
                                   const ThrusterLimits& lim)
{
    InPlaneControlBasis basis;
    const auto rxz = reach_xz(D.head<4>(), nu, orb, box, lim, false, &basis);
    const auto ry = reach_y(D.tail<2>(), nu, orb, box, lim, false);
    return solve_coupled(rxz, basis, ry, nu, lim);
}

// ---- near-tie refinement ----------------------------------------------------

/// Feasible impulse candidates of the programs above (endpoints, kinks, vertices).
inline std::vector<Vec3> impulse_candidates(const PlaneReach& r, const InPlaneControlBasis& basis, Plane plane,
                                            const PlaneReach* ry = nullptr, const ThrusterLimits* lim = nullptr)
{
    std::vector<Vec3> out;
    if (plane == Plane::out_of_plane) {
        for (double l : r.lambda_S_sat.endpoints()) out.emplace_back(0.0, l, 0.0);
        return out;
    }
    std::vector<double> ls = r.lambda_S_sat.endpoints();
    for (int k = 0; k < 2; ++k)
        if (basis.b_perp(k) != 0.0) {
            const double l = -basis.dv0(k) / basis.b_perp(k);
            if (r.lambda_S_sat.contains(l)) ls.push_back(l);
        }
    if (plane == Plane::in_plane) {
        for (double l : ls) out.push_back(basis.impulse(l));
        return out;
    }
    for (double l : r.lambda_S_sat.endpoints())
        for (double ly : ry->lambda_S_sat.endpoints()) {
            Vec3 dv = basis.impulse(l);
            dv(1) = ly;
            const double n = dv.norm();
            if (n >= lim->dv_min && n <= lim->dv_max) out.push_back(dv);
        }
    return out;
}

/**
 * @brief Among candidates whose 1-norm is within (1 + band) of the optimum,
 * pick the one leaving the largest envelope margin after the impulse.
 */
inline Vec3 refine_near_tie(const std::vector<Vec3>& cand, const Vec3& optimum, double band, const DState& D,
                            double nu, const TargetOrbit& orb, const HoveringBox& box, Plane plane)
{
    if (!(band > 0.0) || cand.size() < 2) return optimum;
    const double cap = optimum.lpNorm<1>() * (1.0 + band);
    auto margin = [&](const Vec3& dv) {
        const auto env = envelope(apply_impulse(D, nu, dv, orb), box, orb.e);
        switch (plane) {
        case Plane::in_plane: return env.max_xz();
        case Plane::out_of_plane: return env.max_y();
        case Plane::coupled: break;
        }
        return env.max_all();
    };
    Vec3 best = optimum;
    double m = margin(optimum);
    for (const auto& dv : cand) {
        if (dv.lpNorm<1>() > cap) continue;
        const double mc = margin(dv);
        if (mc < m) {
            m = mc;
            best = dv;
        }
    }
    return best;
}

// ---- fallback ---------------------------------------------------------------

inline DState fallback_reference(const HoveringBox& box)
{
    DState D = DState::Zero();
    D(3) = box.x_mid();
    return D;
}

inline FallbackPlan fallback_maneuver(const DState& D, double nu, const TargetOrbit& orb, const HoveringBox& box,
                                      const ThrusterLimits& lim, double tau = deg2rad(30.0))
{
    const DState Dref = fallback_reference(box);
    for (int attempt = 0; attempt < 20; ++attempt, tau += deg2rad(1.0)) {
        const double nus[3] = {nu, nu + tau, nu + 2 * tau};
        Eigen::Matrix<double, 6, 9> M;
        for (int k = 0; k < 3; ++k)
            M.block<6, 3>(0, 3 * k) = transition_D(nus[k], nus[2], orb) * control_matrix_BD(nus[k], orb);
        const Vec6 rhs = Dref - propagate_D(D, nu, nus[2], orb);
        Eigen::JacobiSVD<Eigen::Matrix<double, 6, 9>> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        if (!(sv(5) > 1e-12 * sv(0))) continue;
        const Eigen::Matrix<double, 9, 1> x = svd.solve(rhs);
        FallbackPlan plan;
        plan.tau = tau;
        for (int k = 0; k < 3; ++k) {
            Impulse raw{x.segment<3>(3 * k), nus[k]};
            Impulse f = raw;
            const double n = raw.norm2();
            if (n < lim.dv_min) {
                if (n > 0.0) ++plan.nulled;
                f.dv.setZero();
            } else if (n > lim.dv_max) {
                f.dv *= lim.dv_max / n;
                ++plan.clipped;
            }
            plan.raw.push_back(raw);
            plan.impulses.push_back(f);
        }
        return plan;
    }
    throw numerical_error("fallback: stacked control matrix singular");
}

// ---- trigger ------------------------------------------------------------------

inline ControlDecision trigger_step(const DState& D, double nu, const TargetOrbit& orb, const HoveringBox& box,
                                    const ThrusterLimits& lim, const TriggerConfig& cfg)
{
    ControlDecision dec;
    dec.admissible_xz = is_admissible_xz(D, box, orb.e, cfg.tol_periodicity);
    dec.admissible_y = is_admissible_y(D, box, orb.e);
    if (dec.admissible_xz && dec.admissible_y) return dec;

    ReachabilityReport rep = instant_report(D, nu, orb, box, lim);
    dec.attraction = region_of_attraction_planes(D, nu, orb, box, lim, cfg.n_L, cfg.tol_periodicity, &rep);
    if (!dec.attraction.both()) {
        dec.kind = ControlDecision::Kind::fallback;
        dec.fallback = fallback_maneuver(D, nu, orb, box, lim, cfg.tau_fallback);
        dec.report = rep;
        return dec;
    }

    const double h = cfg.delta_nu_sample;
    const DState Dn = propagate_D(D, nu, nu + h, orb);
    bool fire_xz = false, fire_y = false;
    if (!dec.admissible_xz && rep.xz.L > 0.0 && rep.xz.G >= cfg.delta_xz) {
        rep.G_nu_xz = (reach_xz(Dn.head<4>(), nu + h, orb, box, lim).G - rep.xz.G) / h;
        fire_xz = rep.G_nu_xz > 0.0;
    }
    if (!dec.admissible_y && rep.y.L > 0.0 && rep.y.G >= cfg.delta_y) {
        rep.G_nu_y = (reach_y(Dn.tail<2>(), nu + h, orb, box, lim).G - rep.y.G) / h;
        fire_y = rep.G_nu_y > 0.0;
    }

    if (fire_xz && fire_y) {
        const auto c = solve_coupled(rep.xz, rep.basis, rep.y, nu, lim);
        dec.kind = ControlDecision::Kind::single_impulse;
        dec.impulse = c.impulse;
        dec.plane = c.deferred_out_of_plane ? Plane::in_plane : Plane::coupled;
        dec.deferred_out_of_plane = c.deferred_out_of_plane;
    } else if (fire_xz) {
        dec.kind = ControlDecision::Kind::single_impulse;
        dec.impulse = solve_in_plane(rep.xz, rep.basis, nu);
        dec.plane = Plane::in_plane;
    } else if (fire_y) {
        dec.kind = ControlDecision::Kind::single_impulse;
        dec.impulse = solve_out_of_plane(rep.y, nu);
        dec.plane = Plane::out_of_plane;
    }
    if (dec.is_single()) {
        const auto cand = impulse_candidates(dec.plane == Plane::out_of_plane ? rep.y : rep.xz, rep.basis, dec.plane,
                                             &rep.y, &lim);
        dec.impulse.dv = refine_near_tie(cand, dec.impulse.dv, cfg.cost_tie_band, D, nu, orb, box, dec.plane);
    }
    dec.report = std::move(rep);
    return dec;
}

/** @brief Mutable per-run controller bookkeeping. */
class ControllerSession {
public:
    ControllerSession(TargetOrbit orb, HoveringBox box, ThrusterLimits lim, TriggerConfig cfg)
        : orb_(orb), box_(box), lim_(lim), cfg_(cfg)
    {
    }

    ControlDecision step(const DState& D, double nu)
    {
        ControlDecision d = trigger_step(D, nu, orb_, box_, lim_, cfg_);
        ++evaluations_;
        if (d.is_single()) ++calls_single_;
        if (d.is_fallback()) ++calls_fallback_;
        if (d.deferred_out_of_plane) ++deferred_;
        return d;
    }

    int evaluations() const { return evaluations_; }
    int calls_single() const { return calls_single_; }
    int calls_fallback() const { return calls_fallback_; }
    int deferred_out_of_plane() const { return deferred_; }
    const TriggerConfig& config() const { return cfg_; }

private:
    TargetOrbit orb_;
    HoveringBox box_;
    ThrusterLimits lim_;
    TriggerConfig cfg_;
    int evaluations_ = 0, calls_single_ = 0, calls_fallback_ = 0, deferred_ = 0;
};

// ---- threshold bounds -----------------------------------------------------------

struct ThresholdBounds {
    double bound_xz = 0.0;
    double bound_y = 0.0;
};

struct ThresholdSampling {
    double shell = 5.0;  // m beyond the admissible region that samples may reach
    int nu_grid = 360;
    std::uint64_t seed = 1;
};

namespace detail {

inline double just_below(double v) { return v - 1e-9 * std::max(1.0, std::abs(v)); }

template <class Sampler, class Admissible, class Reach>
double estimate_plane_bound(int sample_count, Sampler&& sample, Admissible&& admissible, Reach&& reach, int nu_grid)
{
    double bound = std::numeric_limits<double>::infinity();
    int accepted = 0, rejected = 0;
    while (accepted < sample_count) {
        const DState D = sample();
        double gmax = -std::numeric_limits<double>::infinity();
        if (!admissible(D))
            for (int k = 0; k < nu_grid; ++k) {
                const PlaneReach r = reach(D, two_pi * k / nu_grid);
                if (r.L > 0.0) gmax = std::max(gmax, r.G);
            }
        if (gmax == -std::numeric_limits<double>::infinity()) {
            if (++rejected >= 100000) throw numerical_error("threshold estimator: no reachable sample found");
            continue;
        }
        bound = std::min(bound, gmax);
        ++accepted;
    }
    return just_below(bound);
}

}  // namespace detail

/**
 * @brief Monte-Carlo estimate of the trigger-threshold upper bounds.
 * Samples periodic states just outside each plane's admissible projection
 * that are single-impulse reachable somewhere on a nu grid over one period.
 */
inline ThresholdBounds estimate_threshold_bounds(const TargetOrbit& orb, const HoveringBox& box,
                                                 const ThrusterLimits& lim, int sample_count,
                                                 const ThresholdSampling& opt = {})
{
    if (sample_count < 1) throw config_error("threshold estimator: sample_count must be >= 1");
    // one stream per plane so that a larger sample_count extends both sample sets
    std::mt19937_64 rng_y(opt.seed), rng_xz(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double e = orb.e;
    ThresholdBounds out;

    const double ry = std::max(std::abs(box.y_min), box.y_max) + opt.shell;
    auto sample_y = [&] {
        DState D = DState::Zero();
        D(3) = box.x_mid();
        do {
            D(4) = ry * U(rng_y);
            D(5) = ry * U(rng_y);
        } while (D(4) * D(4) + D(5) * D(5) > ry * ry);
        return D;
    };
    out.bound_y = detail::estimate_plane_bound(
        sample_count, sample_y, [&](const DState& D) { return is_admissible_y(D, box, e); },
        [&](const DState& D, double nu) { return reach_y(D.tail<2>(), nu, orb, box, lim); }, opt.nu_grid);

    const double rz = std::min(std::abs(box.z_min), box.z_max) + opt.shell;
    auto sample_xz = [&] {
        DState D = DState::Zero();
        do {
            D(1) = rz * U(rng_xz);
            D(2) = rz * U(rng_xz);
        } while (D(1) * D(1) + D(2) * D(2) > rz * rz);
        D(3) = box.x_mid() + (0.5 * (box.x_max - box.x_min) + opt.shell) * U(rng_xz);
        return D;
    };
    out.bound_xz = detail::estimate_plane_bound(
        sample_count, sample_xz, [&](const DState& D) { return is_admissible_xz(D, box, e); },
        [&](const DState& D, double nu) { return reach_xz(D.head<4>(), nu, orb, box, lim); }, opt.nu_grid);
    return out;
}

}  // namespace hover
