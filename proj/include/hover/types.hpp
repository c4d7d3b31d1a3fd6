#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hover {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat42 = Eigen::Matrix<double, 4, 2>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double earth_radius_km = 6378.137;
inline constexpr double earth_mu_km3s2 = 398600.4;
inline constexpr double earth_j2 = 1.08262668e-3;
inline constexpr double earth_rotation_rate = 7.2921159e-5;  // rad/s

inline double deg2rad(double d) { return d * pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / pi; }

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Keplerian elements of the leader. a in km, angles in rad, mu in km^3/s^2. */
struct TargetOrbit {
    double a = 6983.137;
    double e = 0.0;
    double i = 0.0;
    double raan = 0.0;
    double argp = 0.0;
    double mu = earth_mu_km3s2;

    TargetOrbit() = default;
    TargetOrbit(double a_km, double ecc, double inc = 0.0, double raan_ = 0.0,
                double argp_ = 0.0, double mu_ = earth_mu_km3s2)
        : a(a_km), e(ecc), i(inc), raan(raan_), argp(argp_), mu(mu_)
    {
        validate();
    }

    void validate() const
    {
        if (!(e >= 0.0 && e < 1.0)) throw config_error("orbit: eccentricity must be in [0,1)");
        if (!(mu > 0.0)) throw config_error("orbit: mu must be positive");
        if (!(a * (1.0 - e) > earth_radius_km)) throw config_error("orbit: perigee below Earth surface");
    }

    /// sqrt(mu/a^3), rad/s
    double mean_motion() const { return std::sqrt(mu / (a * a * a)); }
    /// k^2 = sqrt(mu/(a^3 (1-e^2)^3)), 1/s
    double k2() const
    {
        const double q = 1.0 - e * e;
        return std::sqrt(mu / (a * a * a * q * q * q));
    }
    double period() const { return two_pi / mean_motion(); }
};

struct CartesianRelativeState {
    Vec3 r = Vec3::Zero();  // m
    Vec3 v = Vec3::Zero();  // m/s

    Vec6 vec() const
    {
        Vec6 x;
        x << r, v;
        return x;
    }
    static CartesianRelativeState from(const Vec6& x)
    {
        return {x.head<3>(), x.tail<3>()};
    }
};

/// D = [d0..d5] in meters. D_xz = d0..d3, D_y = d4, d5.
using DState = Vec6;

inline Vec4 d_xz(const DState& D) { return D.head<4>(); }
inline Vec2 d_y(const DState& D) { return D.tail<2>(); }

struct Impulse {
    Vec3 dv = Vec3::Zero();  // LVLH, m/s
    double nu = 0.0;         // true anomaly of application, rad

    double norm2() const { return dv.norm(); }
    double norm1() const { return dv.lpNorm<1>(); }
    bool is_null() const { return dv.isZero(0.0); }
};

struct ThrusterLimits {
    double dv_min = 1e-3;
    double dv_max = 0.1;

    ThrusterLimits() = default;
    ThrusterLimits(double lo, double hi) : dv_min(lo), dv_max(hi) { validate(); }
    void validate() const
    {
        if (!(dv_min > 0.0 && dv_min < dv_max)) throw config_error("thruster: need 0 < dv_min < dv_max");
    }
};

struct HoveringBox {
    double x_min = 50, x_max = 150;
    double y_min = -25, y_max = 25;
    double z_min = -25, z_max = 25;

    HoveringBox() = default;
    HoveringBox(double x0, double x1, double y0, double y1, double z0, double z1)
        : x_min(x0), x_max(x1), y_min(y0), y_max(y1), z_min(z0), z_max(z1)
    {
        validate();
    }

    // The y and z envelopes are closed forms about the origin, so those ranges
    // have to straddle zero; the box itself must exclude the origin through x.
    void validate() const
    {
        if (!(x_min < x_max && y_min < y_max && z_min < z_max))
            throw config_error("box: each range needs min < max");
        if (!(y_min < 0.0 && y_max > 0.0 && z_min < 0.0 && z_max > 0.0))
            throw config_error("box: y and z ranges must contain 0");
        if (x_min <= 0.0 && x_max >= 0.0) throw config_error("box: must not contain the origin");
    }

    bool contains(const Vec3& p) const
    {
        return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max &&
               p.z() >= z_min && p.z() <= z_max;
    }
    double x_mid() const { return 0.5 * (x_min + x_max); }
};

}  // namespace hover
