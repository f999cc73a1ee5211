#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "slv/flex.hpp"
#include "slv/polynomial.hpp"
#include "slv/vehicle.hpp"

namespace slv {

// ---------------------------------------------------------------------------
// Rational transfer functions
// ---------------------------------------------------------------------------

/// gain * num(s) / den(s).
class RationalTF {
public:
    RationalTF() : num_{1.0}, den_{1.0} {}
    RationalTF(Polynomial num, Polynomial den, double gain = 1.0);

    static RationalTF from_zpk(const std::vector<std::complex<double>>& zeros,
                               const std::vector<std::complex<double>>& poles, double gain);
    static RationalTF constant(double k) { return RationalTF(Polynomial{1.0}, Polynomial{1.0}, k); }
    /// k (1 + w / s), the PI form used by the attitude loop.
    static RationalTF pi(double k, double integral_weight);

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }
    double gain() const noexcept { return gain_; }
    /// gain folded into the numerator.
    Polynomial numerator() const { return num_ * gain_; }

    std::complex<double> operator()(std::complex<double> s) const;
    std::complex<double> at_frequency(double omega) const { return (*this)(std::complex<double>(0.0, omega)); }
    /// Value at s = 0; +/-inf when the denominator vanishes there.
    double dc_gain() const;

    bool is_proper() const noexcept { return num_.degree() <= den_.degree(); }
    bool is_stable() const { return den_.is_hurwitz(); }
    std::vector<std::complex<double>> zeros() const { return num_.roots(); }
    std::vector<std::complex<double>> poles() const { return den_.roots(); }

    /// Same transfer function with a monic denominator and monic numerator.
    RationalTF normalized() const;
    /// Removes pole/zero pairs closer than `tol` (relative to the larger magnitude, absolute near 0).
    RationalTF minreal(double tol = 1e-8) const;

    RationalTF operator*(const RationalTF& other) const;
    RationalTF operator+(const RationalTF& other) const;
    RationalTF operator*(double k) const { return RationalTF(num_, den_, gain_ * k); }

private:
    Polynomial num_;
    Polynomial den_;
    double gain_ = 1.0;
};

/// L / (1 + L), unity negative feedback.
RationalTF feedback(const RationalTF& loop);

// ---------------------------------------------------------------------------
// Structural filter synthesis
// ---------------------------------------------------------------------------

struct NotchOptions {
    double zero_damping = 0.00502;
    double pole_damping = 0.70;
    /// Frequencies closer than this relative tolerance are one notch.
    double merge_tolerance = 1e-6;
};

/// Cascade of (s^2 + 2 zz w s + w^2) / (s^2 + 2 zp w s + w^2), one section per distinct modal frequency.
/// Throws DesignError for an empty dataset or zero_damping == pole_damping.
RationalTF design_notch(const ModalDataset& modal, const NotchOptions& options = {});

/// Distinct modal frequencies in ascending order.
std::vector<double> distinct_frequencies(const ModalDataset& modal, double tolerance = 1e-6);

struct EllipticSpec {
    int order = 3;
    double passband_edge = 10.0;  // rad/s
    double ripple_db = 1.0;
    double stop_atten_db = 40.0;
    /// When set, the design must reach `stop_atten_db` by this frequency or a DesignError is raised.
    std::optional<double> required_stopband_edge;
};

struct ZpkModel {
    std::vector<std::complex<double>> zeros;
    std::vector<std::complex<double>> poles;
    double gain = 1.0;
};

/// Normalised analog elliptic low-pass prototype (passband edge 1 rad/s).
ZpkModel elliptic_prototype(int order, double ripple_db, double stop_atten_db);
/// Frequency where the elliptic response first reaches the stopband attenuation.
double elliptic_stopband_edge(const EllipticSpec& spec);
RationalTF design_elliptic(const EllipticSpec& spec = {});

/// Jacobi elliptic functions sn, cn, dn for parameter m = k^2 in [0, 1].
struct JacobiElliptic {
    double sn;
    double cn;
    double dn;
};
JacobiElliptic jacobi_elliptic(double u, double m);

// ---------------------------------------------------------------------------
// Discrete execution
// ---------------------------------------------------------------------------

/// One direct-form-II-transposed section: (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
    double s1 = 0.0, s2 = 0.0;

    double step(double x) {
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        return y;
    }
    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

class DiscreteFilter {
public:
    DiscreteFilter() = default;
    DiscreteFilter(std::vector<Biquad> sections, double dt) : sections_(std::move(sections)), dt_(dt) {}

    double step(double x) {
        for (auto& s : sections_) x = s.step(x);
        return x;
    }
    void reset();
    /// Internal state equal to the steady state reached under the constant input `u`.
    void reset_to(double u);
    double dc_gain() const;
    std::complex<double> response(double omega) const;

    double dt() const noexcept { return dt_; }
    const std::vector<Biquad>& sections() const noexcept { return sections_; }
    bool is_identity() const noexcept { return sections_.empty(); }

private:
    std::vector<Biquad> sections_;
    double dt_ = 0.0;
};

enum class Prewarp {
    none,         // plain Tustin
    frequency,    // match one frequency for every section
    per_section,  // match each section at its own pole natural frequency
};

struct DiscretizeOptions {
    Prewarp prewarp = Prewarp::none;
    double prewarp_frequency = 0.0;  // rad/s, for Prewarp::frequency
};

/// Factors into cascaded sections of degree <= 2 (complex pairs kept together, each zero pair
/// assigned to the pole section nearest in frequency); the overall gain sits on the first section.
std::vector<RationalTF> second_order_sections(const RationalTF& tf);

/// Bilinear transform of a proper, stable transfer function into cascaded biquads.
/// Throws DesignError for an improper or unstable input, or when a discrete pole leaves the unit circle.
DiscreteFilter discretize(const RationalTF& tf, double dt, const DiscretizeOptions& options = {});

// ---------------------------------------------------------------------------
// Allocation
// ---------------------------------------------------------------------------

struct ChannelCommand {
    double roll = 0.0;   // delta_A, rad
    double pitch = 0.0;  // delta_E, rad
    double yaw = 0.0;    // delta_R, rad
};

struct AllocatorConfig {
    Eigen::Matrix3d lambda = Eigen::Matrix3d::Identity();
    Eigen::Matrix<double, 3, 18> g = Eigen::Matrix<double, 3, 18>::Zero();
    Eigen::Matrix<double, 18, 3> g_pinv = Eigen::Matrix<double, 18, 3>::Zero();

    /// Gimbal vector ordered [mu_0, eta_0, mu_1, eta_1, ...].
    Eigen::Matrix<double, 18, 1> allocate_vector(const ChannelCommand& c) const {
        return g_pinv * Eigen::Vector3d(c.roll, c.pitch, c.yaw);
    }
    GimbalCmd allocate(const ChannelCommand& c) const;
};

/// Lambda = diag(8r, -9(L - x_cg), -9(L - x_cg)); G = Lambda^-1 (1/T) d(tau)/d(delta) at delta = 0;
/// G_pinv = G^T (G G^T)^-1. Throws ConfigError when G G^T is singular.
AllocatorConfig build_allocator(const EngineLayout& layout, const MassProperties& mass);

// ---------------------------------------------------------------------------
// Attitude controller
// ---------------------------------------------------------------------------

/// Pitch/yaw gains are shared. Controller outputs are in degrees and scaled by `output_scale`.
struct ControllerGains {
    double k_p = -114.5916;     // rate gain
    double k_pi = -214.2862;    // attitude PI proportional gain
    double integral_weight = 0.1;
    double roll_kp = 7.78;      // deg per rad of roll error
    double roll_kd = 10.9;      // deg per rad/s of roll rate
    double output_scale = kDegToRad;
};

/// Roll PD gains (kp, kd) placing the closed loop of p_dot = L_dA dA at `bandwidth` with `damping`.
std::pair<double, double> roll_gains_for_bandwidth(double l_delta_a, double bandwidth, double damping,
                                                   double output_scale = kDegToRad);

enum class FilterType { none, notch, elliptic };
enum class FilterPlacement {
    feedback,   // sensed attitude and sensed rate pass through the filter
    rate_only,  // only the sensed rate is filtered
    forward,    // the channel command is filtered
};

struct FilterSettings {
    FilterType type = FilterType::notch;
    FilterPlacement placement = FilterPlacement::feedback;
    NotchOptions notch;
    EllipticSpec elliptic;
};

/// Continuous structural filter for the given settings (unity for FilterType::none).
RationalTF design_filter(const FilterSettings& settings, const ModalDataset& modal);
/// Discrete filter matching design_filter with the prewarp policy used by the controller.
DiscreteFilter make_discrete_filter(const FilterSettings& settings, const ModalDataset& modal, double dt);

struct ControllerInput {
    Vec3 attitude_error = Vec3::Zero();  // body-axis small rotation from measured to reference, rad
    Vec3 rates = Vec3::Zero();           // measured body rates, rad/s
    double pitch_reference = 0.0;        // scalar references of the filtered attitude channels, rad
    double yaw_reference = 0.0;
};

struct ControllerOutput {
    ChannelCommand command;
    bool fault = false;
};

/// PI attitude + rate feedback for pitch and yaw, PD for roll, running at a fixed period.
///
/// Pitch law: u = K_PI(s) (theta_ref - F[theta_m]) - K_P F[q_m], where theta_m = theta_ref - e_y.
class AttitudeController {
public:
    AttitudeController(const ControllerGains& gains, const FilterSettings& filter, const ModalDataset& modal,
                       double period);

    /// Sets filter states to the steady state of `input` and clears the integrators.
    void reset(const ControllerInput& input);
    /// `saturated` freezes the integrators for this step (anti-windup).
    ControllerOutput step(const ControllerInput& input, bool saturated);

    double period() const noexcept { return period_; }
    const ControllerGains& gains() const noexcept { return gains_; }
    Eigen::Vector2d integrators() const { return {pitch_integral_, yaw_integral_}; }

private:
    struct Channel {
        DiscreteFilter attitude;
        DiscreteFilter rate;
        DiscreteFilter output;
    };

    double channel(Channel& ch, double reference, double error, double rate, double& integral, bool freeze);

    ControllerGains gains_;
    FilterPlacement placement_;
    double period_;
    Channel pitch_;
    Channel yaw_;
    double pitch_integral_ = 0.0;
    double yaw_integral_ = 0.0;
    ChannelCommand last_;
};

}  // namespace slv
