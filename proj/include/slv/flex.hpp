#pragma once

#include <span>
#include <vector>

#include "slv/numerics.hpp"
#include "slv/vehicle.hpp"

namespace slv {

/// One bending mode sampled at the nozzle (T) and sensor (G) stations.
///
/// Shapes are mass-normalised lateral displacements (kg^-1/2). Slopes are the local rotation
/// angles per unit modal coordinate (kg^-1/2 m^-1): `slope_z` tilts about body y and `slope_y`
/// about body z, matching the rotations R_e2 and R_e3 used on the thrust line.
struct Mode {
    double frequency = 0.0;  // rad/s
    double damping = 0.0;
    double phi_y = 0.0;      // nozzle displacement along body y
    double phi_z = 0.0;      // nozzle displacement along body z
    double slope_y_t = 0.0;
    double slope_z_t = 0.0;
    double slope_y_g = 0.0;
    double slope_z_g = 0.0;
};

struct ModalDataset {
    std::vector<Mode> modes;

    std::size_t size() const noexcept { return modes.size(); }
    /// Throws ConfigError unless every frequency is positive and every damping lies in (0, 1).
    void validate() const;

    /// Free-free uniform beam of length 70 m, shapes normalised with the lift-off mass and
    /// frequencies set to 4.293 Hz / 11.559 Hz with damping 0.0145 / 0.0147.
    /// Mode order: y-plane 1st, z-plane 1st, y-plane 2nd, z-plane 2nd.
    static ModalDataset beam_default();
};

struct BeamOptions {
    double length = 70.0;           // m
    double mass = 581726.686;       // kg, total mass used for normalisation
    double nozzle_station = 70.0;   // m from nose
    double sensor_station = 15.0;   // m from nose
};

/// Mass-normalised free-free Euler-Bernoulli shape of bending mode `n` (1 or 2) and its
/// derivative with respect to the station s measured from the nose.
struct BeamShape {
    double value;
    double slope;
};
BeamShape free_free_beam_shape(int n, double station, const BeamOptions& options = {});

/// Root of cos(x) cosh(x) = 1 for the n-th elastic mode (n >= 1).
double free_free_eigenvalue(int n);

/// Builds the planar-pair dataset from beam shapes with the given frequencies (rad/s) and damping.
ModalDataset beam_dataset(const std::vector<double>& frequencies, const std::vector<double>& damping,
                          const BeamOptions& options = {});

/// Modal coordinates and rates, both of length n_f.
struct FlexState {
    Eigen::VectorXd xi;
    Eigen::VectorXd xi_dot;

    FlexState() = default;
    explicit FlexState(std::size_t n) : xi(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
                                        xi_dot(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}
};

struct FlexRates {
    Eigen::VectorXd xi_dot;
    Eigen::VectorXd xi_ddot;
};

/// Local bending angles at a station: rotation about body y and about body z.
struct BendAngles {
    double about_y = 0.0;  // slope_z^T xi
    double about_z = 0.0;  // slope_y^T xi
};

BendAngles nozzle_bend(const ModalDataset& data, std::span<const double> xi);
BendAngles sensor_bend(const ModalDataset& data, std::span<const double> xi);
/// phi_T^T xi = (0, phi_y^T xi, phi_z^T xi).
Vec3 nozzle_displacement(const ModalDataset& data, std::span<const double> xi);
/// R_e3(slope_y_t^T xi) R_e2(slope_z_t^T xi).
Mat3 nozzle_rotation(const ModalDataset& data, std::span<const double> xi);

/// xi_ddot = -Omega^2 xi - 2 zeta Omega xi_dot + phi_T (sum of engine forces), forces in N.
FlexRates flex_derivatives(const FlexState& state, const Vec3& total_engine_force, const ModalDataset& data);

/// Allocation-free variant used inside the integrator; spans all have length n_f.
void flex_derivatives(std::span<const double> xi, std::span<const double> xi_dot, const Vec3& total_engine_force,
                      const ModalDataset& data, std::span<double> xi_ddot);

/// Rigid engine forces tilted by the local bending slopes at the nozzle.
EngineForces bent_engine_forces(const EngineLayout& layout, const GimbalCmd& cmd, double thrust,
                                const FlexState& state, const ModalDataset& data);

/// Total bent engine force and moment about the CG; the moment arm includes the nozzle displacement.
EngineLoads bent_engine_moments(const EngineLayout& layout, const GimbalCmd& cmd, double thrust,
                                const FlexState& state, const ModalDataset& data, const MassProperties& mass);

/// Small-angle rotation of the sensor frame relative to the rigid body frame:
///   [[1, -a_z, a_y], [a_z, 1, 0], [-a_y, 0, 1]] with a = sensor_bend(xi).
Mat3 sensor_rotation(const ModalDataset& data, std::span<const double> xi);

/// Beyond this local bending angle the small-angle sensor model is flagged.
inline constexpr double kSmallAngleLimit = 0.2;

struct SensedOutputs {
    Mat3 attitude = Mat3::Identity();  // transform from the inertial frame into the sensor frame
    Vec3 rates = Vec3::Zero();         // omega + sigma_G^T xi_dot
    bool small_angle_warning = false;
};

/// Gyro-platform outputs corrupted by bending. `body_attitude` is the inertial-to-body transform.
SensedOutputs sensed_outputs(const Mat3& body_attitude, const Vec3& body_rates, const FlexState& state,
                             const ModalDataset& data);

/// sigma_G^T xi_dot, the bending contribution to the measured rates.
Vec3 sensed_bending_rate(const ModalDataset& data, std::span<const double> xi_dot);

/// 1/2 xi_dot^T xi_dot + 1/2 xi^T Omega^2 xi.
double modal_energy(const FlexState& state, const ModalDataset& data);

/// Instability thresholds used by the closed-loop runner.
struct DivergenceBounds {
    double sensed_bending_rate = 1.0;          // rad/s, on |sigma_G^T xi_dot|
    double attitude_error = 20.0 * kDegToRad;  // rad
    double modal_amplitude = 1e3;              // on max |xi_j|
    /// Continuous gimbal saturation longer than this (s) is a saturated limit cycle, not a bounded response.
    double saturation_time = 1.0;
};

}  // namespace slv
