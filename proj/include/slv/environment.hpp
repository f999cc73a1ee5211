#pragma once

#include "slv/numerics.hpp"

namespace slv {

inline constexpr double kGravity = 9.80665;            // m/s^2, flat non-rotating Earth
inline constexpr double kSeaLevelPressureKpa = 101.325;
inline constexpr double kKnot = 0.514444;              // m/s

struct AtmosphereState {
    double pressure_kpa = 0.0;
    double density = 0.0;         // kg/m^3
    double speed_of_sound = 0.0;  // m/s
    double temperature = 0.0;     // K
};

/// US Standard Atmosphere 1976 layers up to 86 km geometric altitude, isothermal
/// exponential continuation above. Negative altitudes clamp to sea level.
AtmosphereState atmosphere(double altitude_m);

/// Constant horizontal wind; components are the direction the air moves towards.
struct WindSpec {
    double north = 0.0;  // m/s
    double east = 0.0;   // m/s
};

/// Wind velocity in local north-east-down axes.
Vec3 wind_velocity(const WindSpec& spec);

/// Inertial launch frame: x up, y cross-range (right of the launch azimuth), z down-range.
///
/// A vehicle with identity attitude in this frame stands vertical with its body z axis
/// pointing down-range, so the pitch program is a negative rotation about body y and
/// the nominal ascent never approaches the 3-2-1 singularity.
class LaunchFrame {
public:
    explicit LaunchFrame(double azimuth_rad = 0.0);

    double azimuth() const noexcept { return azimuth_; }
    /// Unit vector pointing down, expressed in launch axes (-x).
    static Vec3 down() { return -Vec3::UnitX(); }
    /// Rotates a north-east-down vector into launch axes.
    Vec3 from_ned(const Vec3& ned) const { return ned_to_launch_ * ned; }
    Vec3 to_ned(const Vec3& launch) const { return ned_to_launch_.transpose() * launch; }
    const Mat3& ned_to_launch() const noexcept { return ned_to_launch_; }

private:
    double azimuth_;
    Mat3 ned_to_launch_;
};

}  // namespace slv
