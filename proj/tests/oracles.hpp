#pragma once
// Independent reference computations used by the tests. Nothing here calls
// the closed-form library routines it is meant to check.

#include "hover/types.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <random>

namespace oracle {

using hover::DState;
using hover::HoveringBox;
using hover::Vec6;

using State6 = std::array<double, 6>;

inline double rho(double nu, double e) { return 1.0 + e * std::cos(nu); }

template <class Rhs>
State6 integrate(Rhs rhs, State6 x, double nu0, double nu1, double tol = 1e-13)
{
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<State6>());
    ode::integrate_adaptive(stepper, rhs, x, nu0, nu1, 1e-3);
    return x;
}

/// D' = A_D(nu) D: only d2 and d3 are driven, both by d0.
inline DState integrate_D(const DState& D0, double nu0, double nu1, double e, double tol = 1e-13)
{
    auto rhs = [e](const State6& d, State6& dd, double nu) {
        const double r = rho(nu, e);
        dd = {0, 0, -3.0 * e * d[0] / (r * r), 3.0 * d[0] / (r * r), 0, 0};
    };
    State6 x;
    for (int k = 0; k < 6; ++k) x[k] = D0(k);
    x = integrate(rhs, x, nu0, nu1, tol);
    return Eigen::Map<const Vec6>(x.data());
}

/// Linearized relative motion in the scaled, true-anomaly domain.
/// State [x~, y~, z~, x~', y~', z~'], z toward Earth.
inline Vec6 integrate_tilde(const Vec6& X0, double nu0, double nu1, double e, double tol = 1e-13)
{
    auto rhs = [e](const State6& s, State6& ds, double nu) {
        ds[0] = s[3];
        ds[1] = s[4];
        ds[2] = s[5];
        ds[3] = 2.0 * s[5];
        ds[4] = -s[1];
        ds[5] = 3.0 * s[2] / rho(nu, e) - 2.0 * s[3];
    };
    State6 x;
    for (int k = 0; k < 6; ++k) x[k] = X0(k);
    x = integrate(rhs, x, nu0, nu1, tol);
    return Eigen::Map<const Vec6>(x.data());
}

inline double j_quadrature(double nu0, double nu1, double e)
{
    using boost::math::quadrature::gauss_kronrod;
    auto f = [e](double nu) { return 1.0 / (rho(nu, e) * rho(nu, e)); };
    // short panels keep the adaptive rule shallow at high e
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(nu1 - nu0) / 0.25)));
    const double h = (nu1 - nu0) / n;
    double sum = 0.0;
    for (int k = 0; k < n; ++k)
        sum += gauss_kronrod<double, 61>::integrate(f, nu0 + k * h, nu0 + (k + 1) * h, 8, 1e-15);
    return sum;
}

/// Relative position of a periodic relative orbit at nu.
inline hover::Vec3 periodic_position(const DState& D, double nu, double e)
{
    const double s = std::sin(nu), c = std::cos(nu), r = rho(nu, e);
    const double xt = (1.0 + r) * (D(1) * s - D(2) * c) + D(3);
    const double yt = D(4) * c + D(5) * s;
    const double zt = r * (D(1) * c + D(2) * s);
    return hover::Vec3(xt, yt, zt) / r;
}

/// Largest face violation in metres over one period (<= 0 means inside).
/// Dense grid followed by Brent refinement of each face's worst sample.
inline double box_margin(const DState& D, const HoveringBox& box, double e, int n = 10000)
{
    auto face = [&](int f, double nu) {
        const auto p = periodic_position(D, nu, e);
        switch (f) {
        case 0: return box.x_min - p.x();
        case 1: return p.x() - box.x_max;
        case 2: return box.y_min - p.y();
        case 3: return p.y() - box.y_max;
        case 4: return box.z_min - p.z();
        default: return p.z() - box.z_max;
        }
    };
    const double h = hover::two_pi / n;
    double worst = -1e300;
    for (int f = 0; f < 6; ++f) {
        int arg = 0;
        double best = -1e300;
        for (int k = 0; k < n; ++k) {
            const double v = face(f, k * h);
            if (v > best) {
                best = v;
                arg = k;
            }
        }
        const auto r = boost::math::tools::brent_find_minima([&](double nu) { return -face(f, nu); },
                                                             (arg - 1) * h, (arg + 1) * h, 52);
        worst = std::max({worst, best, -r.second});
    }
    return worst;
}

/// Grid-only check: every sampled position inside the box.
inline bool grid_inside(const DState& D, const HoveringBox& box, double e, int n = 10000)
{
    for (int k = 0; k < n; ++k)
        if (!box.contains(periodic_position(D, hover::two_pi * k / n, e))) return false;
    return true;
}

/// Uniform draw of a periodic D around the default-box geometry; roughly a
/// third of the draws are admissible.
inline DState random_periodic(std::mt19937_64& rng, double r_xz = 15.0, double r_y = 22.0, double x_mid = 100.0,
                              double x_spread = 30.0)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    DState D = DState::Zero();
    D(1) = r_xz * U(rng);
    D(2) = r_xz * U(rng);
    D(3) = x_mid + x_spread * U(rng);
    D(4) = r_y * U(rng);
    D(5) = r_y * U(rng);
    return D;
}

/// Draw near the family of nearly flat in-track orbits x ~ x0, which is where
/// the admissible set lives at higher e. At the default noise about 15-30 %
/// of the draws are admissible for the default box.
inline DState random_near_hover(std::mt19937_64& rng, double e, double noise = 2.0)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double x_hi = e > 0.0 ? std::min(140.0, 1.9 * 25.0 / e) : 140.0;
    const double x0 = 0.5 * (60.0 + x_hi) + 0.5 * (x_hi - 60.0) * U(rng);
    DState D = DState::Zero();
    D(1) = noise * 8.0 * (1 - e) * U(rng);
    D(2) = -0.5 * e * x0 + noise * 8.0 * (1 - e) * U(rng);
    D(3) = x0 + noise * 15.0 * (1 - e) * U(rng);
    D(4) = noise * 22.0 * (1 - e) * U(rng);
    D(5) = noise * 22.0 * (1 - e) * U(rng);
    return D;
}

}  // namespace oracle
