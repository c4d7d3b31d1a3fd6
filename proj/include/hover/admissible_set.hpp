#pragma once

#include "hover/orbital_dynamics.hpp"

#include <array>
#include <vector>

namespace hover {

struct EnvelopeValues {
    double g_xmin = 0, g_xmax = 0;  // m
    double g_ymin = 0, g_ymax = 0;  // m^2
    double g_zmin = 0, g_zmax = 0;  // m^2

    double max_xz() const { return std::max({g_xmin, g_xmax, g_zmin, g_zmax}); }
    double max_y() const { return std::max(g_ymin, g_ymax); }
    double max_all() const { return std::max(max_xz(), max_y()); }
};

struct EnvelopeYZ {
    double g_ymin, g_ymax, g_zmin, g_zmax;
};

inline double g_y_bound(double d4, double d5, double bound, double e)
{
    const double u = d4 - e * bound;
    return u * u + d5 * d5 - bound * bound;
}

inline EnvelopeYZ envelope_yz(const DState& D, const HoveringBox& box, double e)
{
    const double rz = D(1) * D(1) + D(2) * D(2);
    return {g_y_bound(D(4), D(5), box.y_min, e), g_y_bound(D(4), D(5), box.y_max, e),
            rz - box.z_min * box.z_min, rz - box.z_max * box.z_max};
}

struct XExtrema {
    double x_min, x_max;
};

namespace detail {

inline constexpr int x_grid_points = 720;

struct XGrid {
    double e = -1.0;
    std::array<double, x_grid_points> a{}, b{}, inv_rho{};
};

inline const XGrid& x_grid(double e)
{
    thread_local XGrid g;
    if (g.e != e) {
        for (int k = 0; k < x_grid_points; ++k) {
            const double nu = two_pi * k / x_grid_points;
            const double s = std::sin(nu), c = std::cos(nu);
            g.a[k] = (2.0 + e * c) * s;
            g.b[k] = (2.0 + e * c) * c;
            g.inv_rho[k] = 1.0 / (1.0 + e * c);
        }
        g.e = e;
    }
    return g;
}

// first and second derivative of x(nu)
inline void x_derivs(double d1, double d2, double d3, double e, double nu, double& x1, double& x2)
{
    const double s = std::sin(nu), c = std::cos(nu);
    const double r = 1.0 + e * c, rp = -e * s, rpp = -e * c;
    const double p = d1 * s - d2 * c, pd = d1 * c + d2 * s;
    const double N = (2.0 + e * c) * p + d3;
    const double Np = -e * s * p + (2.0 + e * c) * pd;
    const double Npp = -e * c * p - 2.0 * e * s * pd - (2.0 + e * c) * p;
    x1 = Np / r - N * rp / (r * r);
    x2 = Npp / r - 2.0 * Np * rp / (r * r) - N * rpp / (r * r) + 2.0 * N * rp * rp / (r * r * r);
}

// Stationary point of x in [lo, hi] where x' changes sign; safeguarded Newton.
inline double refine_stationary(double d1, double d2, double d3, double e, double lo, double hi)
{
    double f1, f2, g1, g2;
    x_derivs(d1, d2, d3, e, lo, f1, f2);
    x_derivs(d1, d2, d3, e, hi, g1, g2);
    if (f1 == 0.0) return lo;
    if (g1 == 0.0) return hi;
    if ((f1 > 0) == (g1 > 0)) return std::abs(f1) < std::abs(g1) ? lo : hi;
    const bool rising_lo = f1 < 0;
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        double d, dd;
        x_derivs(d1, d2, d3, e, t, d, dd);
        if ((d < 0) == rising_lo)
            lo = t;
        else
            hi = t;
        double tn = (dd != 0.0) ? t - d / dd : 0.5 * (lo + hi);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        const double step = std::abs(tn - t);
        t = tn;
        if (step < 1e-10 || hi - lo < 1e-10) break;
    }
    return t;
}

}  // namespace detail

/** @brief Global extrema of x(nu; D) over one period (d0 ignored). */
inline XExtrema x_extrema(const DState& D, double e)
{
    const auto& g = detail::x_grid(e);
    const double d1 = D(1), d2 = D(2), d3 = D(3);
    int imax = 0, imin = 0;
    double vmax = -1e300, vmin = 1e300;
    for (int k = 0; k < detail::x_grid_points; ++k) {
        const double x = (d1 * g.a[k] - d2 * g.b[k] + d3) * g.inv_rho[k];
        if (x > vmax) {
            vmax = x;
            imax = k;
        }
        if (x < vmin) {
            vmin = x;
            imin = k;
        }
    }
    if (d1 == 0.0 && d2 == 0.0 && e == 0.0) return {d3, d3};
    const double h = two_pi / detail::x_grid_points;
    auto polish = [&](int k, double v, bool want_max) {
        const double nu = h * k;
        double a = detail::refine_stationary(d1, d2, d3, e, nu - h, nu);
        double b = detail::refine_stationary(d1, d2, d3, e, nu, nu + h);
        for (double t : {a, b}) {
            const double x = x_of_nu(D, t, e);
            v = want_max ? std::max(v, x) : std::min(v, x);
        }
        return v;
    };
    return {polish(imin, vmin, false), polish(imax, vmax, true)};
}

struct EnvelopeX {
    double g_xmin, g_xmax;
};

inline EnvelopeX envelope_x(const DState& D, const HoveringBox& box, double e)
{
    const XExtrema ex = x_extrema(D, e);
    return {box.x_min - ex.x_min, ex.x_max - box.x_max};
}

inline EnvelopeValues envelope(const DState& D, const HoveringBox& box, double e)
{
    const auto yz = envelope_yz(D, box, e);
    const auto x = envelope_x(D, box, e);
    return {x.g_xmin, x.g_xmax, yz.g_ymin, yz.g_ymax, yz.g_zmin, yz.g_zmax};
}

inline constexpr double default_tol_periodicity = 1e-6;

inline bool is_admissible_xz(const DState& D, const HoveringBox& box, double e,
                             double tol = default_tol_periodicity)
{
    if (!(std::abs(D(0)) <= tol)) return false;
    const auto yz = envelope_yz(D, box, e);
    if (yz.g_zmin > 0.0 || yz.g_zmax > 0.0) return false;
    const auto x = envelope_x(D, box, e);
    return x.g_xmin <= 0.0 && x.g_xmax <= 0.0;
}

inline bool is_admissible_y(const DState& D, const HoveringBox& box, double e)
{
    const auto yz = envelope_yz(D, box, e);
    return yz.g_ymin <= 0.0 && yz.g_ymax <= 0.0;
}

inline bool is_admissible(const DState& D, const HoveringBox& box, double e,
                          double tol = default_tol_periodicity)
{
    return is_admissible_y(D, box, e) && is_admissible_xz(D, box, e, tol);
}

}  // namespace hover
