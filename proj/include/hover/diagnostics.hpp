#pragma once

#include "hover/reachability.hpp"

namespace hover {

/// Implicit out-of-plane increment locus for a fixed lambda_y; zero on the ellipse.
inline double f_y_ellipse(const Vec2& dDy, double lambda_y, const TargetOrbit& orb)
{
    if (lambda_y == 0.0) throw numerical_error("f_y_ellipse: degenerate for lambda_y = 0");
    const double e = orb.e, k2 = orb.k2();
    const double one_e2 = 1.0 - e * e;
    const double a = lambda_y / (k2 * std::sqrt(one_e2));
    const double b = lambda_y / (k2 * one_e2);
    const double u = dDy(1) + e * lambda_y / (k2 * one_e2);
    return dDy(0) * dDy(0) / (a * a) + u * u / (b * b) - 1.0;
}

/// In-plane increment cone (quasi-steady, d0 ~ 0). Indices follow [d0, d1, d2, d3].
inline double f_xz_cone(const Vec4& dDxz, double e)
{
    const double d1 = dDxz(1), d2 = dDxz(2), d3 = dDxz(3);
    return 4.0 * d1 * d1 + (4.0 - e * e) * d2 * d2 + 2.0 * e * d2 * d3 - d3 * d3;
}

/// Parametric out-of-plane increment lambda_y * B_D,y(nu).
inline Vec2 out_of_plane_increment(double nu, double lambda_y, const TargetOrbit& orb)
{
    return lambda_y * submatrices_BD(nu, orb).y;
}

/// Parametric in-plane increment for the periodicity-tracking impulse.
inline Vec4 in_plane_increment(double d0, double nu, double lambda_xz, const TargetOrbit& orb)
{
    const auto basis = in_plane_basis(d0, nu, orb);
    return submatrices_BD(nu, orb).xz * basis.dv(lambda_xz);
}

/**
 * @brief Whether the out-of-plane dead-zone set is non-empty.
 * e = 0 uses the strict closed-form circle test; otherwise both y-bound
 * circles are sampled and must lie inside the dead-zone reachable region.
 */
inline bool deadzone_set_exists_y(const TargetOrbit& orb, const HoveringBox& box, const ThrusterLimits& lim,
                                  int samples = 3600)
{
    const double e = orb.e, k2 = orb.k2();
    const double ymax = std::max(std::abs(box.y_min), std::abs(box.y_max));
    if (e == 0.0) return lim.dv_min > k2 * ymax;

    // the dead-zone region is the union of the filled ellipses at +-dv_min
    auto inside = [&](const Vec2& p) {
        return f_y_ellipse(p, lim.dv_min, orb) <= 0.0 || f_y_ellipse(p, -lim.dv_min, orb) <= 0.0;
    };
    for (double b : {box.y_min, box.y_max}) {
        const double r = std::abs(b);
        for (int k = 0; k < samples; ++k) {
            const double t = two_pi * k / samples;
            if (!inside(Vec2(e * b + r * std::cos(t), r * std::sin(t)))) return false;
        }
    }
    return true;
}

enum class SetMembership { in_attraction, in_deadzone, neither };

inline const char* to_string(SetMembership m)
{
    switch (m) {
    case SetMembership::in_attraction: return "attraction";
    case SetMembership::in_deadzone: return "deadzone";
    case SetMembership::neither: return "neither";
    }
    return "?";
}

namespace detail {

// lambdas with |dv(lambda)| < dv_min
inline Interval deadzone_band_xz(const InPlaneControlBasis& b, double dv_min)
{
    // |l b + dv0|^2 = l^2 + 2 l (b.dv0) + |dv0|^2, with |b| = 1
    const double p = b.b_perp.dot(b.dv0);
    const double disc = p * p - (b.dv0.squaredNorm() - dv_min * dv_min);
    if (!(disc > 0.0)) return Interval::none();
    const double s = std::sqrt(disc);
    return {-p - s, -p + s};
}

}  // namespace detail

/**
 * @brief Labels D as attracted (single-impulse reachable within a period),
 * dead-zone (every unreachable plane could only be corrected below dv_min),
 * or neither.
 */
inline SetMembership deadzone_membership(const DState& D, double nu, const TargetOrbit& orb,
                                         const HoveringBox& box, const ThrusterLimits& lim, int n_L = 100,
                                         double tol = default_tol_periodicity)
{
    const PlaneFlags att = region_of_attraction_planes(D, nu, orb, box, lim, n_L, tol);
    if (att.both()) return SetMembership::in_attraction;

    bool dz_xz = att.xz, dz_y = att.y;
    const Interval band_y{-lim.dv_min, lim.dv_min};
    for (int p = 0; p <= n_L && !(dz_xz && dz_y); ++p) {
        const double nup = nu + two_pi * p / n_L;
        if (!dz_y) {
            dz_y = intersect(lambda_S_y(D.tail<2>(), nup, orb, box), band_y).length() > 0.0;
        }
        if (!dz_xz) {
            const DState Dp = propagate_D(D, nu, nup, orb);
            const auto line = in_plane_line(Dp.head<4>(), nup, orb);
            const Interval band = detail::deadzone_band_xz(line.basis, lim.dv_min);
            if (band.length() > 0.0) dz_xz = intersect(lambda_S_xz(line, box, orb.e, band), band).length() > 0.0;
        }
    }
    return dz_xz && dz_y ? SetMembership::in_deadzone : SetMembership::neither;
}

}  // namespace hover
