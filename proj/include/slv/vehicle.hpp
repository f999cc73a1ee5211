#pragma once

#include <array>
#include <vector>

#include "slv/environment.hpp"
#include "slv/numerics.hpp"

namespace slv {

// ---------------------------------------------------------------------------
// Mass properties
// ---------------------------------------------------------------------------

struct MassProperties {
    double mass = 0.0;       // kg
    double mass_rate = 0.0;  // kg/s (negative while burning)
    double x_cg = 0.0;       // m from nose
    Mat3 inertia = Mat3::Identity();       // kg m^2 about the instantaneous CG
    Mat3 inertia_rate = Mat3::Zero();      // kg m^2 / s
};

/// One column of the inertial data table.
struct MassTableRow {
    double fuel_fraction = 0.0;  // [0, 1]
    double mass = 0.0;           // kg
    double x_cg = 0.0;           // m from nose
    double jxx = 0.0;            // kg m^2
    double jyy = 0.0;            // kg m^2, equal to jzz (axisymmetric)
};

/// Mass properties interpolated linearly in fuel fraction, with a constant burn that
/// empties the table from its largest to its smallest fraction in `burn_time` seconds.
class MassModel {
public:
    /// Falcon 9 first-stage estimates at 0/25/50/75/100 % fuel, 165 s burn.
    MassModel();
    MassModel(std::vector<MassTableRow> rows, double burn_time);

    static const std::vector<MassTableRow>& falcon9_rows();

    /// Fraction outside [0, 1] is clamped.
    MassProperties operator()(double fuel_fraction) const;
    double fuel_fraction_at(double time) const;
    double burn_time() const noexcept { return burn_time_; }
    /// Magnitude of the mass flow, kg/s.
    double burn_rate() const noexcept { return burn_rate_; }
    const std::vector<MassTableRow>& rows() const noexcept { return rows_; }

private:
    std::vector<MassTableRow> rows_;
    double burn_time_;
    double burn_rate_;
    Table1D mass_;
    Table1D x_cg_;
    Table1D jxx_;
    Table1D jyy_;
};

/// Default-table shorthand for MassModel{}(fuel_fraction).
MassProperties mass_properties(double fuel_fraction);

// ---------------------------------------------------------------------------
// Propulsion
// ---------------------------------------------------------------------------

inline constexpr int kEngineCount = 9;

struct GimbalAngles {
    double mu = 0.0;   // rad, rotation about the engine-local e3 axis
    double eta = 0.0;  // rad, rotation about the engine-local e2 axis
};

using GimbalCmd = std::array<GimbalAngles, kEngineCount>;
using EngineForces = std::array<Vec3, kEngineCount>;

/// Nine-engine octaweb: engine 0 on the axis, engines 1-8 on a ring.
struct EngineLayout {
    double ring_radius = 1.33;                  // m
    std::array<double, kEngineCount> ring_angle{};  // rad; engine 0 ignored (radius 0)
    double nozzle_station = 70.0;               // m from nose (vehicle length L)
    double gimbal_limit = 5.0 * kDegToRad;      // rad, symmetric per axis

    /// Outer engines at 45 degree spacing starting from 0.
    static EngineLayout falcon9();

    double radius(int engine) const { return engine == 0 ? 0.0 : ring_radius; }
    /// Moment arm [-(L - x_cg), -r sin(lambda), r cos(lambda)] from the CG to the gimbal point.
    Vec3 arm(int engine, double x_cg) const;
    void validate() const;
};

/// Per-engine thrust (kN) at ambient pressure P (kPa): 914.11 - 0.68 P.
double engine_thrust(double pressure_kpa);

/// Body-frame force of one engine, R_e1(lambda) R_e3(mu) R_e2(eta) T e1, in the units of `thrust`.
Vec3 engine_force(const EngineLayout& layout, int engine, const GimbalAngles& delta, double thrust);
EngineForces engine_forces(const EngineLayout& layout, const GimbalCmd& cmd, double thrust);

struct EngineLoads {
    Vec3 force = Vec3::Zero();
    Vec3 moment = Vec3::Zero();
};

/// Total engine force and moment about the CG for an unbent vehicle.
EngineLoads engine_moments(const EngineLayout& layout, const GimbalCmd& cmd, double thrust,
                           const MassProperties& mass);

/// Clamps every gimbal angle to +/- limit; returns true if any angle was clipped.
bool saturate(GimbalCmd& cmd, double limit);

// ---------------------------------------------------------------------------
// Aerodynamics
// ---------------------------------------------------------------------------

/// Longitudinal coefficient tables over (alpha >= 0 in degrees) x Mach, plus dynamic derivatives.
///
/// Negative incidences and the directional plane are obtained by symmetry: lift and pitching
/// moment are odd in incidence, drag is even, and the yaw plane mirrors the pitch plane.
struct AeroTables {
    Table2D lift;     // C_L
    Table2D drag;     // C_D
    Table2D moment;   // C_m about the CG, positive nose-up for positive alpha
    double cmq = -1.0;  // per rad
    double cnr = -1.0;  // per rad
    double clp = -0.1;  // per rad
    double ref_area = kPi * 1.85 * 1.85;  // m^2
    double ref_length = 3.7;              // m

    /// Synthetic slender-body dataset on the 0-8 deg x Mach 0.5-10 grid. Not CFD data.
    static AeroTables synthetic_slender_body();
    void validate() const;
};

struct AeroLoads {
    Vec3 force = Vec3::Zero();
    Vec3 moment = Vec3::Zero();
    double alpha = 0.0;             // rad
    double beta = 0.0;              // rad
    double mach = 0.0;
    double dynamic_pressure = 0.0;  // Pa
};

/// Below this airspeed aero loads are zero.
inline constexpr double kMinAirspeed = 0.1;

AeroLoads aero_forces(const Vec3& airspeed_body, const Vec3& body_rates, const AtmosphereState& atm,
                      const AeroTables& tables);

// ---------------------------------------------------------------------------
// Rigid-body dynamics
// ---------------------------------------------------------------------------

struct RigidState {
    Vec3 position = Vec3::Zero();  // inertial (launch frame), m
    Vec3 velocity = Vec3::Zero();  // body axes, m/s
    EulerAngles attitude;          // 3-2-1, launch frame to body
    Vec3 rates = Vec3::Zero();     // body angular velocity, rad/s
};

struct RigidRates {
    Vec3 position_dot = Vec3::Zero();
    Vec3 velocity_dot = Vec3::Zero();
    EulerAngles attitude_dot;
    Vec3 rates_dot = Vec3::Zero();
};

/// Variable-mass rigid-body equations:
///   m (Vdot + w x V) = m g C e_down + F,   Jdot w + J wdot + w x J w = M.
/// `force`/`moment` are the summed aerodynamic and engine loads in body axes.
/// Throws ConfigError for a singular inertia matrix.
RigidRates rigid_derivatives(const RigidState& state, const MassProperties& mass, const Vec3& force,
                             const Vec3& moment, const Vec3& gravity_inertial,
                             bool include_inertia_rate = true);

}  // namespace slv
