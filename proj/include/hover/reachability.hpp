#pragma once

#include "hover/admissible_set.hpp"
#include "hover/interval.hpp"

#include <functional>
#include <limits>

namespace hover {

inline IntervalUnion lambda_sat_y(const ThrusterLimits& lim)
{
    return {{-lim.dv_max, -lim.dv_min}, {lim.dv_min, lim.dv_max}};
}

/** @brief dV_xz(lambda) = lambda * b_perp + dv0 keeps d0+ = 0. */
struct InPlaneControlBasis {
    Vec2 b_perp = Vec2(0, 1);
    Vec2 dv0 = Vec2::Zero();

    Vec2 dv(double lambda) const { return lambda * b_perp + dv0; }
    Vec3 impulse(double lambda) const
    {
        const Vec2 u = dv(lambda);
        return {u(0), 0.0, u(1)};
    }
};

inline InPlaneControlBasis in_plane_basis(double d0, double nu, const TargetOrbit& orb)
{
    const Mat63 B = control_matrix_BD(nu, orb);
    const Vec2 row(B(0, 0), B(0, 2));
    InPlaneControlBasis out;
    Vec2 b(-row(1), row(0));
    b.normalize();
    // larger-magnitude component positive, ties go to the first one
    const int lead = std::abs(b(0)) >= std::abs(b(1)) ? 0 : 1;
    if (b(lead) < 0) b = -b;
    out.b_perp = b;
    out.dv0 = (-d0 / row.squaredNorm()) * row;
    return out;
}

namespace detail {

// {lambda : a l^2 + b l + c <= 0}, a > 0, with endpoints nudged inside.
inline Interval quadratic_sublevel(double a, double b, double c)
{
    const double disc = b * b - 4.0 * a * c;
    if (!(disc >= 0.0) || !(a > 0.0)) return Interval::none();
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : r1;
    if (r1 > r2) std::swap(r1, r2);
    auto f = [&](double l) { return (a * l + b) * l + c; };
    const double scale = std::max({std::abs(r1), std::abs(r2), 1e-300});
    double step = scale * 1e-16;
    for (int k = 0; k < 80 && f(r1) > 0.0 && r1 < r2; ++k, step *= 2) r1 += step;
    step = scale * 1e-16;
    for (int k = 0; k < 80 && f(r2) > 0.0 && r2 > r1; ++k, step *= 2) r2 -= step;
    if (f(r1) > 0.0 || f(r2) > 0.0 || r1 > r2) return Interval::none();
    return {r1, r2};
}

template <class F>
double golden_min(F&& f, double a, double b, double tol, double* arg = nullptr)
{
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    double best = std::min(fc, fd), where = fc < fd ? c : d;
    for (double t : {a, b}) {
        const double v = f(t);
        if (v < best) {
            best = v;
            where = t;
        }
    }
    if (arg) *arg = where;
    return best;
}

// Bisection between an infeasible point `bad` and a feasible point `good`;
// returns the last feasible abscissa.
template <class P>
double bisect_boundary(P&& feasible, double bad, double good, double tol)
{
    for (int it = 0; it < 200 && std::abs(good - bad) > tol; ++it) {
        const double m = 0.5 * (good + bad);
        if (feasible(m))
            good = m;
        else
            bad = m;
    }
    return good;
}

inline constexpr double bisect_tol = 1e-13;

}  // namespace detail

inline IntervalUnion lambda_sat_xz(const InPlaneControlBasis& basis, const ThrusterLimits& lim)
{
    // |l b + v|^2 = l^2 + 2 l (b.v) + |v|^2
    const double bv = basis.b_perp.dot(basis.dv0);
    const double vv = basis.dv0.squaredNorm();
    Interval outer = detail::quadratic_sublevel(1.0, 2.0 * bv, vv - lim.dv_max * lim.dv_max);
    if (outer.empty()) return {};
    auto norm_at = [&](double l) { return basis.dv(l).norm(); };
    // the quadratic and the evaluated norm can disagree by an ulp
    double step = std::max(std::abs(outer.lo), 1e-300) * 1e-16;
    for (int k = 0; k < 80 && norm_at(outer.lo) > lim.dv_max; ++k, step *= 2) outer.lo += step;
    step = std::max(std::abs(outer.hi), 1e-300) * 1e-16;
    for (int k = 0; k < 80 && norm_at(outer.hi) > lim.dv_max; ++k, step *= 2) outer.hi -= step;
    if (outer.empty()) return {};
    const double disc_in = bv * bv - vv + lim.dv_min * lim.dv_min;
    if (disc_in <= 0.0) return IntervalUnion{outer};
    const double sq = std::sqrt(disc_in);
    double il = -bv - sq, ih = -bv + sq;
    // push dead-zone roots outward until the thrust floor holds
    step = std::max(std::abs(il), 1e-300) * 1e-16;
    for (int k = 0; k < 80 && norm_at(il) < lim.dv_min; ++k, step *= 2) il -= step;
    step = std::max(std::abs(ih), 1e-300) * 1e-16;
    for (int k = 0; k < 80 && norm_at(ih) < lim.dv_min; ++k, step *= 2) ih += step;
    return IntervalUnion{{outer.lo, std::min(il, outer.hi)}, {std::max(ih, outer.lo), outer.hi}};
}

inline IntervalUnion lambda_sat_xz(double d0, double nu, const TargetOrbit& orb, const ThrusterLimits& lim)
{
    return lambda_sat_xz(in_plane_basis(d0, nu, orb), lim);
}

/** @brief In-plane line D_xz+(lambda) = base + lambda * dir. */
struct InPlaneLine {
    InPlaneControlBasis basis;
    Vec4 base;
    Vec4 dir;
    DState D0 = DState::Zero();  // pre-impulse state, y rows zero
    Mat63 B = Mat63::Zero();

    // same arithmetic as apply_impulse, so boundary decisions carry over bit for bit
    DState at(double lambda) const { return D0 + B * basis.impulse(lambda); }
};

inline InPlaneLine in_plane_line(const Vec4& Dxz, double nu, const TargetOrbit& orb)
{
    InPlaneLine L;
    L.basis = in_plane_basis(Dxz(0), nu, orb);
    L.D0.head<4>() = Dxz;
    L.B = control_matrix_BD(nu, orb);
    const Mat42 B = submatrices_BD(nu, orb).xz;
    L.base = Dxz + B * L.basis.dv0;
    L.base(0) = 0.0;  // zero by construction of dv0
    L.dir = B * L.basis.b_perp;
    L.dir(0) = 0.0;
    return L;
}

struct OutOfPlaneLine {
    Vec2 base;
    Vec2 dir;
};

inline OutOfPlaneLine out_of_plane_line(const Vec2& Dy, double nu, const TargetOrbit& orb)
{
    return {Dy, submatrices_BD(nu, orb).y};
}

namespace detail {

// quadratic coefficients of |p + l q - c|^2 - r^2 with c = (cx, 0)
struct Quad {
    double a, b, c;
    double operator()(double l) const { return (a * l + b) * l + c; }
};

inline Quad circle_quad(const Vec2& p, const Vec2& q, double cx, double r)
{
    const Vec2 u(p(0) - cx, p(1));
    return {q.squaredNorm(), 2.0 * u.dot(q), u.squaredNorm() - r * r};
}

inline Quad y_quad(const OutOfPlaneLine& L, double bound, double e)
{
    return circle_quad(L.base, L.dir, e * bound, std::abs(bound));
}

inline Quad z_quad(const InPlaneLine& L, double bound)
{
    return circle_quad(Vec2(L.base(1), L.base(2)), Vec2(L.dir(1), L.dir(2)), 0.0, std::abs(bound));
}

inline double quad_min(const Quad& f, const Interval& iv)
{
    double m = std::min(f(iv.lo), f(iv.hi));
    const double v = -f.b / (2.0 * f.a);
    if (iv.contains(v)) m = std::min(m, f(v));
    return m;
}

}  // namespace detail

inline Interval lambda_S_y(const OutOfPlaneLine& L, const HoveringBox& box, double e)
{
    const auto qa = detail::y_quad(L, box.y_min, e);
    const auto qb = detail::y_quad(L, box.y_max, e);
    Interval iv =
        intersect(detail::quadratic_sublevel(qa.a, qa.b, qa.c), detail::quadratic_sublevel(qb.a, qb.b, qb.c));
    if (iv.empty()) return iv;
    // the roots satisfy the expanded quadratic; also require the envelope as evaluated on D+
    auto ok = [&](double l) {
        const Vec2 p = L.base + l * L.dir;
        return g_y_bound(p(0), p(1), box.y_min, e) <= 0.0 && g_y_bound(p(0), p(1), box.y_max, e) <= 0.0;
    };
    const double scale = std::max({std::abs(iv.lo), std::abs(iv.hi), 1e-300});
    double step = scale * 1e-16;
    for (int k = 0; k < 80 && !ok(iv.lo) && iv.lo < iv.hi; ++k, step *= 2) iv.lo = std::min(iv.lo + step, iv.hi);
    step = scale * 1e-16;
    for (int k = 0; k < 80 && !ok(iv.hi) && iv.hi > iv.lo; ++k, step *= 2) iv.hi = std::max(iv.hi - step, iv.lo);
    if (!ok(iv.lo) || !ok(iv.hi)) return Interval::none();
    return iv;
}

inline Interval lambda_S_y(const Vec2& Dy, double nu, const TargetOrbit& orb, const HoveringBox& box)
{
    return lambda_S_y(out_of_plane_line(Dy, nu, orb), box, orb.e);
}

inline Interval lambda_S_xz(const InPlaneLine& L, const HoveringBox& box, double e,
                            Interval window = {-std::numeric_limits<double>::infinity(),
                                               std::numeric_limits<double>::infinity()})
{
    const double zr = std::min(std::abs(box.z_min), std::abs(box.z_max));
    const auto qz = detail::z_quad(L, zr);
    const Interval zi = intersect(detail::quadratic_sublevel(qz.a, qz.b, qz.c), window);
    if (zi.empty()) return Interval::none();

    auto hx = [&](double l) {
        const auto g = envelope_x(L.at(l), box, e);
        return std::max(g.g_xmin, g.g_xmax);
    };
    auto ok = [&](double l) {
        const DState D = L.at(l);
        const auto g = envelope_yz(D, box, e);
        if (g.g_zmin > 0.0 || g.g_zmax > 0.0) return false;
        const auto x = envelope_x(D, box, e);
        return x.g_xmin <= 0.0 && x.g_xmax <= 0.0;
    };

    constexpr int probes = 64;
    double best = std::numeric_limits<double>::infinity(), lf = zi.lo;
    for (int k = 0; k <= probes; ++k) {
        const double l = zi.lo + (zi.hi - zi.lo) * k / probes;
        const double v = hx(l);
        if (v < best) {
            best = v;
            lf = l;
        }
    }
    if (best > 0.0) {
        const double w = (zi.hi - zi.lo) / probes;
        const double a = std::max(zi.lo, lf - w), b = std::min(zi.hi, lf + w);
        best = detail::golden_min(hx, a, b, detail::bisect_tol, &lf);
        if (best > 0.0) return Interval::none();
    }
    if (!ok(lf)) {
        // lf can sit on a z root that fails by an ulp; step toward the middle
        const double mid = 0.5 * (zi.lo + zi.hi);
        bool found = false;
        for (double t = 1e-12; t <= 1.0 && !found; t *= 8.0)
            if (ok(lf + t * (mid - lf))) {
                lf += t * (mid - lf);
                found = true;
            }
        if (!found) return Interval::none();
    }
    const double lo = ok(zi.lo) ? zi.lo : detail::bisect_boundary(ok, zi.lo, lf, detail::bisect_tol);
    const double hi = ok(zi.hi) ? zi.hi : detail::bisect_boundary(ok, zi.hi, lf, detail::bisect_tol);
    return {lo, hi};
}

inline Interval lambda_S_xz(const Vec4& Dxz, double nu, const TargetOrbit& orb, const HoveringBox& box)
{
    return lambda_S_xz(in_plane_line(Dxz, nu, orb), box, orb.e);
}

/** @brief Per-plane snapshot at one instant. */
struct PlaneReach {
    IntervalUnion lambda_sat;    // thruster-feasible lambdas
    Interval lambda_S;           // lambdas landing in S_D (possibly clipped to the thruster hull)
    IntervalUnion lambda_S_sat;  // intersection
    double L = 0.0;
    double G = 0.0;
    std::vector<double> g_star;  // per-constraint minima over lambda_S_sat
};

struct ReachabilityReport {
    PlaneReach xz, y;
    InPlaneControlBasis basis;
    double G_nu_xz = 0.0, G_nu_y = 0.0;  // forward-difference slopes (per rad)

    double L_xz() const { return xz.L; }
    double L_y() const { return y.L; }
    double G_xz() const { return xz.G; }
    double G_y() const { return y.G; }
};

inline Interval hull(const IntervalUnion& u)
{
    if (u.empty()) return Interval::none();
    return {u.parts().front().lo, u.parts().back().hi};
}

inline PlaneReach reach_y(const Vec2& Dy, double nu, const TargetOrbit& orb, const HoveringBox& box,
                          const ThrusterLimits& lim, bool with_G = true)
{
    PlaneReach r;
    const auto L = out_of_plane_line(Dy, nu, orb);
    r.lambda_sat = lambda_sat_y(lim);
    r.lambda_S = lambda_S_y(L, box, orb.e);
    r.lambda_S_sat = r.lambda_sat.intersect(r.lambda_S);
    r.L = r.lambda_S_sat.total_length();
    if (!with_G || !(r.L > 0.0)) return r;
    const auto qa = detail::y_quad(L, box.y_min, orb.e);
    const auto qb = detail::y_quad(L, box.y_max, orb.e);
    double ga = std::numeric_limits<double>::infinity(), gb = ga;
    for (const auto& p : r.lambda_S_sat.parts()) {
        ga = std::min(ga, detail::quad_min(qa, p));
        gb = std::min(gb, detail::quad_min(qb, p));
    }
    r.g_star = {ga, gb};
    r.G = std::min(0.0, std::max(ga, gb));
    return r;
}

inline PlaneReach reach_xz(const Vec4& Dxz, double nu, const TargetOrbit& orb, const HoveringBox& box,
                           const ThrusterLimits& lim, bool with_G = true, InPlaneControlBasis* basis_out = nullptr)
{
    PlaneReach r;
    const auto L = in_plane_line(Dxz, nu, orb);
    if (basis_out) *basis_out = L.basis;
    r.lambda_sat = lambda_sat_xz(L.basis, lim);
    if (r.lambda_sat.empty()) return r;
    r.lambda_S = lambda_S_xz(L, box, orb.e, hull(r.lambda_sat));
    r.lambda_S_sat = r.lambda_sat.intersect(r.lambda_S);
    r.L = r.lambda_S_sat.total_length();
    if (!with_G || !(r.L > 0.0)) return r;

    const double e = orb.e;
    const auto qa = detail::z_quad(L, box.z_min);
    const auto qb = detail::z_quad(L, box.z_max);
    auto gxmin = [&](double l) { return envelope_x(L.at(l), box, e).g_xmin; };
    auto gxmax = [&](double l) { return envelope_x(L.at(l), box, e).g_xmax; };
    const double inf = std::numeric_limits<double>::infinity();
    double g1 = inf, g2 = inf, g3 = inf, g4 = inf;
    for (const auto& p : r.lambda_S_sat.parts()) {
        if (p.length() > 0.0) {
            g1 = std::min(g1, detail::golden_min(gxmin, p.lo, p.hi, 1e-9));
            g2 = std::min(g2, detail::golden_min(gxmax, p.lo, p.hi, 1e-9));
        } else {
            g1 = std::min(g1, gxmin(p.lo));
            g2 = std::min(g2, gxmax(p.lo));
        }
        g3 = std::min(g3, detail::quad_min(qa, p));
        g4 = std::min(g4, detail::quad_min(qb, p));
    }
    r.g_star = {g1, g2, g3, g4};
    r.G = std::min(0.0, std::max({g1, g2, g3, g4}));
    return r;
}

/** @brief Instantaneous report; slopes are filled by indicators(). */
inline ReachabilityReport instant_report(const DState& D, double nu, const TargetOrbit& orb,
                                         const HoveringBox& box, const ThrusterLimits& lim)
{
    ReachabilityReport rep;
    rep.xz = reach_xz(D.head<4>(), nu, orb, box, lim, true, &rep.basis);
    rep.y = reach_y(D.tail<2>(), nu, orb, box, lim, true);
    return rep;
}

inline ReachabilityReport indicators(const DState& D, double nu, const TargetOrbit& orb, const HoveringBox& box,
                                     const ThrusterLimits& lim, double dnu_fd)
{
    ReachabilityReport rep = instant_report(D, nu, orb, box, lim);
    const DState Dn = propagate_D(D, nu, nu + dnu_fd, orb);
    rep.G_nu_xz = (reach_xz(Dn.head<4>(), nu + dnu_fd, orb, box, lim).G - rep.xz.G) / dnu_fd;
    rep.G_nu_y = (reach_y(Dn.tail<2>(), nu + dnu_fd, orb, box, lim).G - rep.y.G) / dnu_fd;
    return rep;
}

struct PlaneFlags {
    bool xz = false;
    bool y = false;
    bool both() const { return xz && y; }
};

/**
 * @brief Per-plane single-impulse reachability over the coming period.
 * A plane already inside its admissible projection counts as reachable.
 */
inline PlaneFlags region_of_attraction_planes(const DState& D, double nu, const TargetOrbit& orb,
                                              const HoveringBox& box, const ThrusterLimits& lim, int n_L,
                                              double tol = default_tol_periodicity,
                                              const ReachabilityReport* now = nullptr)
{
    if (n_L < 1) throw config_error("n_L must be >= 1");
    PlaneFlags f;
    f.xz = is_admissible_xz(D, box, orb.e, tol);
    f.y = is_admissible_y(D, box, orb.e);
    if (now) {
        f.xz = f.xz || now->xz.L > 0.0;
        f.y = f.y || now->y.L > 0.0;
    }
    // p = 0 is the current instant: a cheap sufficient witness
    for (int p = now ? 1 : 0; p <= n_L && !f.both(); ++p) {
        const double nup = nu + two_pi * p / n_L;
        if (!f.y) f.y = reach_y(D.tail<2>(), nup, orb, box, lim, false).L > 0.0;
        if (!f.xz) {
            const DState Dp = propagate_D(D, nu, nup, orb);
            f.xz = reach_xz(Dp.head<4>(), nup, orb, box, lim, false).L > 0.0;
        }
    }
    return f;
}

inline bool in_region_of_attraction(const DState& D, double nu, const TargetOrbit& orb, const HoveringBox& box,
                                    const ThrusterLimits& lim, int n_L, double tol = default_tol_periodicity)
{
    return region_of_attraction_planes(D, nu, orb, box, lim, n_L, tol).both();
}

}  // namespace hover
