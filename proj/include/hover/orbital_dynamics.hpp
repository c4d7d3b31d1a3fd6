#pragma once

#include "hover/types.hpp"

namespace hover {

inline double rho(double nu, double e) { return 1.0 + e * std::cos(nu); }

/** @brief Map D -> tilde state [x~, y~, z~, x~', y~', z~']. */
inline Mat6 matrix_V(double nu, double e)
{
    const double s = std::sin(nu), c = std::cos(nu), r = 1.0 + e * c;
    Mat6 V;
    // clang-format off
    V << 0.0,              s * (1 + r),          -c * (1 + r),              1, 0,  0,
         0.0,              0.0,                  0.0,                       0, c,  s,
         2.0,              c * r,                s * r,                     0, 0,  0,
         3.0,              2 * c * r - e,        2 * s * r,                 0, 0,  0,
         0.0,              0.0,                  0.0,                       0, -s, c,
         -3 * e * s / r,   -s * (1 + 2 * e * c), 2 * e * c * c - e + c,     0, 0,  0;
    // clang-format on
    return V;
}

/** @brief Similarity transform X~ = U X. */
inline Mat6 matrix_U(double nu, const TargetOrbit& orb)
{
    const double r = rho(nu, orb.e);
    const double rp = -orb.e * std::sin(nu);
    Mat6 U = Mat6::Zero();
    U.topLeftCorner<3, 3>().diagonal().setConstant(r);
    U.bottomLeftCorner<3, 3>().diagonal().setConstant(rp);
    U.bottomRightCorner<3, 3>().diagonal().setConstant(1.0 / (orb.k2() * r));
    return U;
}

/** @brief Impulse jump matrix, D+ = D + B_D dV. Closed form. */
inline Mat63 control_matrix_BD(double nu, const TargetOrbit& orb)
{
    const double e = orb.e;
    const double s = std::sin(nu), c = std::cos(nu), r = 1.0 + e * c;
    const double q = e * e - 1.0;
    Mat63 B;
    // clang-format off
    B << r * r,                       0.0,     -e * s * r,
         -2 * c - e * (1 + c * c),    0.0,     s * r,
         -s * (2 + e * c),            0.0,     2 * e - c * r,
         e * s * (2 + e * c),         0.0,     e * c * r - 2,
         0.0,                         -q * s,  0.0,
         0.0,                         q * c,   0.0;
    // clang-format on
    return B / (orb.k2() * q * r);
}

struct BDSplit {
    Mat42 xz;  // rows d0..d3, columns (dvx, dvz)
    Vec2 y;    // rows d4, d5
};

inline BDSplit submatrices_BD(double nu, const TargetOrbit& orb)
{
    const Mat63 B = control_matrix_BD(nu, orb);
    BDSplit out;
    out.xz.col(0) = B.block<4, 1>(0, 0);
    out.xz.col(1) = B.block<4, 1>(0, 2);
    out.y = B.block<2, 1>(4, 1);
    return out;
}

namespace detail {

inline double wrap_2pi(double x)
{
    double r = std::fmod(x, two_pi);
    if (r < 0) r += two_pi;
    return r;
}

// Unwrapped mean anomaly from unwrapped true anomaly.
inline double mean_anomaly(double nu, double e)
{
    const double k = std::floor(nu / two_pi);
    const double r = nu - k * two_pi;
    const double E = 2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(0.5 * r),
                                      std::sqrt(1.0 + e) * std::cos(0.5 * r));
    return k * two_pi + E - e * std::sin(E);
}

inline double solve_kepler(double M, double e)
{
    double E = e < 0.8 ? M : pi;
    for (int it = 0; it < 50; ++it) {
        const double f = E - e * std::sin(E) - M;
        const double dE = f / (1.0 - e * std::cos(E));
        E -= dE;
        if (std::abs(dE) < 1e-12) return E;
    }
    throw numerical_error("Kepler solver did not converge");
}

}  // namespace detail

/// Seconds since perigee passage (nu = 0). nu is unwrapped.
inline double nu_to_time(double nu, const TargetOrbit& orb)
{
    return detail::mean_anomaly(nu, orb.e) / orb.mean_motion();
}

inline double time_to_nu(double t, const TargetOrbit& orb)
{
    const double M = orb.mean_motion() * t;
    const double k = std::floor(M / two_pi);
    const double Mr = M - k * two_pi;
    const double E = detail::solve_kepler(Mr, orb.e);
    const double e = orb.e;
    double nu = 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(0.5 * E),
                                 std::sqrt(1.0 - e) * std::cos(0.5 * E));
    if (nu < 0) nu += two_pi;
    return k * two_pi + nu;
}

/// J(nu0, nu) = integral of 1/rho^2, via Kepler's equation.
inline double j_integral(double nu0, double nu, const TargetOrbit& orb)
{
    const double q = 1.0 - orb.e * orb.e;
    const double dM = detail::mean_anomaly(nu, orb.e) - detail::mean_anomaly(nu0, orb.e);
    return dM / (q * std::sqrt(q));
}

inline Mat6 transition_D(double nu0, double nu, const TargetOrbit& orb)
{
    const double J = j_integral(nu0, nu, orb);
    Mat6 P = Mat6::Identity();
    P(2, 0) = -3.0 * orb.e * J;
    P(3, 0) = 3.0 * J;
    return P;
}

inline DState propagate_D(const DState& D, double nu0, double nu, const TargetOrbit& orb)
{
    const double J = j_integral(nu0, nu, orb);
    DState out = D;
    out(2) -= 3.0 * orb.e * J * D(0);
    out(3) += 3.0 * J * D(0);
    return out;
}

inline DState cartesian_to_D(const CartesianRelativeState& X, double nu, const TargetOrbit& orb)
{
    const Vec6 xt = matrix_U(nu, orb) * X.vec();
    return matrix_V(nu, orb.e).partialPivLu().solve(xt);
}

inline CartesianRelativeState d_to_cartesian(const DState& D, double nu, const TargetOrbit& orb)
{
    const Vec6 xt = matrix_V(nu, orb.e) * D;
    const double r = rho(nu, orb.e);
    const double rp = -orb.e * std::sin(nu);
    CartesianRelativeState X;
    X.r = xt.head<3>() / r;
    // velocity block of U: rp * pos + v / (k2 rho) = xt'
    X.v = (xt.tail<3>() - rp * X.r) * (orb.k2() * r);
    return X;
}

inline DState apply_impulse(const DState& D, double nu, const Vec3& dv, const TargetOrbit& orb)
{
    return D + control_matrix_BD(nu, orb) * dv;
}

/// In-track position x(nu) of a periodic D (d0 ignored).
inline double x_of_nu(const DState& D, double nu, double e)
{
    const double s = std::sin(nu), c = std::cos(nu);
    return ((2.0 + e * c) * (D(1) * s - D(2) * c) + D(3)) / (1.0 + e * c);
}

}  // namespace hover
