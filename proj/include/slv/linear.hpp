#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slv/control.hpp"
#include "slv/flex.hpp"
#include "slv/vehicle.hpp"

namespace slv {

// ---------------------------------------------------------------------------
// Linear models
// ---------------------------------------------------------------------------

struct LinearModel {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
    Eigen::MatrixXd d;
    std::vector<std::string> states;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    Eigen::Index state_count() const { return a.rows(); }
    /// Throws DomainError if the matrix dimensions disagree with each other or with the labels.
    void validate() const;
    Eigen::Index state_index(const std::string& name) const;
    Eigen::Index input_index(const std::string& name) const;
    Eigen::Index output_index(const std::string& name) const;
};

/// Short-period pitch coefficients, per radian of the equivalent pitch gimbal angle.
struct PitchCoefficients {
    double z_alpha_v = 0.0;  // Z_alpha / V, 1/s
    double m_alpha = 0.0;    // 1/s^2
    double z_delta_v = 0.0;  // Z_dE / V, 1/s
    double m_delta = 0.0;    // 1/s^2
    double velocity = 0.0;   // m/s
    double mass = 0.0;       // kg
    double iyy = 0.0;        // kg m^2
    double thrust = 0.0;     // N, all nine engines
};

/// Canonical controller design point. The rigid coefficients reproduce
///   theta/dE = -0.017725 (s + 0.02853) / (s (s - 0.4067)(s + 0.4557))   (dE in degrees)
/// at the 50 % fuel mass properties; thrust follows from M_dE and the lever arm, and the
/// velocity is the one for which m Z_dE equals that thrust.
PitchCoefficients design_point_coefficients();

struct RollCoefficients {
    double l_p = 0.0;        // 1/s
    double l_delta_a = 0.0;  // 1/s^2 per rad
};

RollCoefficients design_point_roll();

/// Where the bending modes are forced by the gimbal input.
enum class ModalCoupling {
    /// xi_ddot = ... + m Z_dE sigma_T dE, the classical short-period flexible model. The modal block
    /// is untouched, so the open-loop modal poles stay at -zeta w +/- j w sqrt(1 - zeta^2).
    classical,
    /// xi_ddot = ... - T phi_T (dE + sigma_T xi): the lateral thrust at the nozzle, consistent with
    /// the nonlinear simulation.
    nozzle_force,
};

struct LinearizeOptions {
    bool flexible = false;
    ModalCoupling coupling = ModalCoupling::classical;
    /// Input dE in degrees (matching the controller gains) instead of radians.
    bool input_in_degrees = true;
};

/// Pitch-plane model. States: alpha, q, theta, xi_1..xi_n, xi_dot_1..xi_dot_n (flexible only).
/// Input: dE. Outputs: theta, theta_m (sensed), q_m (sensed). Pitch-plane shapes are the z
/// components of the dataset; modes without z content remain decoupled.
/// Throws LinearizationError for a non-positive velocity.
LinearModel linearize(const PitchCoefficients& coeffs, const ModalDataset& modal, const LinearizeOptions& options = {});

/// States: phi, p. Input dA. Outputs: phi, p.
LinearModel linearize_roll(const RollCoefficients& coeffs, bool input_in_degrees = true);

/// A point along the trajectory.
struct FlightCondition {
    double time = 0.0;      // s
    double altitude = 0.0;  // m
    double speed = 0.0;     // m/s airspeed
    double alpha = 0.0;     // rad, trim incidence
};

/// Finite-difference coefficients of the nonlinear force/moment models at a flight condition.
/// Throws LinearizationError when the airspeed is below the aerodynamic floor.
PitchCoefficients coefficients_at(const FlightCondition& condition, const AeroTables& aero, const MassModel& mass,
                                  const EngineLayout& layout);
RollCoefficients roll_coefficients_at(const FlightCondition& condition, const AeroTables& aero,
                                      const MassModel& mass, const EngineLayout& layout);

// ---------------------------------------------------------------------------
// Transfer functions
// ---------------------------------------------------------------------------

/// Characteristic polynomial det(sI - A), by Hessenberg reduction and extended-precision recurrence.
Polynomial characteristic_polynomial(const Eigen::MatrixXd& a);

struct TfOptions {
    /// Drop states that are structurally unreachable from the input or unobservable from the output.
    bool structural_reduction = true;
    /// Cancel common pole/zero roots closer than this (0 disables).
    double cancel_tolerance = 1e-8;
};

/// SISO transfer function from `input` to `output`.
RationalTF tf_from_model(const LinearModel& model, Eigen::Index input, Eigen::Index output, const TfOptions& options = {});
RationalTF tf_from_model(const LinearModel& model, const std::string& input, const std::string& output,
                         const TfOptions& options = {});

/// Controllable canonical realization of a proper transfer function (one input, one output).
LinearModel realize(const RationalTF& tf);

// ---------------------------------------------------------------------------
// Frequency domain
// ---------------------------------------------------------------------------

struct FrequencyResponse {
    std::vector<double> omega;  // rad/s
    std::vector<std::complex<double>> response;
    std::vector<bool> singular;  // sample evaluated at (or numerically on) a pole

    std::vector<double> magnitude_db() const;
    /// Unwrapped phase in degrees.
    std::vector<double> phase_deg() const;
};

/// `count` points log-spaced from w_min to w_max inclusive.
std::vector<double> log_grid(double w_min, double w_max, std::size_t count);

/// Throws DomainError unless the grid is strictly increasing.
FrequencyResponse freq_response(const RationalTF& tf, const std::vector<double>& omega);
FrequencyResponse freq_response(const LinearModel& model, Eigen::Index input, Eigen::Index output,
                                const std::vector<double>& omega);

struct Crossing {
    double omega = 0.0;
    double margin = 0.0;  // phase margin in degrees or gain margin in dB
};

struct StabilityMargins {
    std::vector<Crossing> gain_crossings;   // |L| = 1, margin = phase margin (deg)
    std::vector<Crossing> phase_crossings;  // L real negative, margin = gain margin (dB)
    std::optional<Crossing> phase_margin;   // smallest phase margin
    std::optional<Crossing> gain_margin;    // smallest |gain margin|
    std::optional<Crossing> upper_gain_margin;  // smallest positive gain margin (gain increase to instability)
    std::optional<Crossing> lower_gain_margin;  // negative gain margin closest to 0 dB (gain reduction)
    bool phase_unbounded() const { return !phase_margin; }
    bool gain_unbounded() const { return !gain_margin; }
};

struct MarginOptions {
    double w_min = 1e-3;
    double w_max = 1e3;
    double points_per_decade = 2000.0;
    double tolerance = 1e-4;  // rad/s
};

/// Margins of the negative-feedback loop L(jw), located on a log grid and refined by bisection.
StabilityMargins margins(const std::function<std::complex<double>(double)>& loop, const MarginOptions& options = {});
StabilityMargins margins(const RationalTF& loop, const MarginOptions& options = {});

// ---------------------------------------------------------------------------
// Pitch loop assembly
// ---------------------------------------------------------------------------

/// Open-loop transfer function broken at the gimbal command for the pitch control law
///   u = K_PI(s) (r - F theta_m) - K_P F q_m
/// (filter placement decides which signals F acts on). `plant` must come from linearize().
RationalTF pitch_loop(const LinearModel& plant, const ControllerGains& gains, const RationalTF& filter,
                      FilterPlacement placement);

/// Closed pitch loop with the reference attitude (rad) as input and the outputs of `plant` as outputs.
LinearModel close_pitch_loop(const LinearModel& plant, const ControllerGains& gains, const RationalTF& filter,
                             FilterPlacement placement);

/// Largest real part of the eigenvalues of A.
double spectral_abscissa(const Eigen::MatrixXd& a);

// ---------------------------------------------------------------------------
// Time domain
// ---------------------------------------------------------------------------

struct StepResponse {
    std::vector<double> time;
    std::vector<double> output;
    bool diverged = false;
    double escape_time = 0.0;  // first time |y| exceeded the bound
};

struct StepOptions {
    double dt = 1e-3;
    double divergence_bound = 1e6;
    Eigen::Index input = 0;
    Eigen::Index output = 0;
};

/// Unit step on `input`, RK4 at dt. Integration stops at the first divergent sample.
StepResponse step_response(const LinearModel& model, double duration, const StepOptions& options = {});

struct StepMetrics {
    double final_value = 0.0;
    double rise_time = 0.0;      // 10 % to 90 % of the final value, s
    double overshoot = 0.0;      // percent of the final value
    double settling_time = 0.0;  // last exit from the 2 % band, s
    double peak_time = 0.0;
};

/// Metrics relative to `final_value` (use the model DC gain for a stable loop).
StepMetrics step_metrics(const StepResponse& response, double final_value);

/// -C A^-1 B + D for the selected channel.
double dc_gain(const LinearModel& model, Eigen::Index input = 0, Eigen::Index output = 0);

}  // namespace slv
