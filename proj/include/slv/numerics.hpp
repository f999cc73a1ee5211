#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slv/errors.hpp"

namespace slv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

inline Vec3 e1() { return Vec3::UnitX(); }
inline Vec3 e2() { return Vec3::UnitY(); }
inline Vec3 e3() { return Vec3::UnitZ(); }

/// Cross-product matrix: skew(a) * b == a.cross(b).
Mat3 skew(const Vec3& a);

/// Active rotation of `angle` radians about the unit vector `axis` (Rodrigues).
/// rot_axis(e3, pi/2) * e1 == e2. Throws DomainError if |axis| differs from 1 by more than 1e-9.
Mat3 rot_axis(const Vec3& axis, double angle);

/// Closed forms of rot_axis for the coordinate axes; no normalisation check.
Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// 3-2-1 (yaw, pitch, roll) Euler angles in radians.
struct EulerAngles {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
};

/// Pitch magnitude beyond which the 3-2-1 rate map is treated as singular.
inline constexpr double kGimbalLockGuard = kPi / 2.0 - 1e-3;

/// Euler angle rates (roll_dot, pitch_dot, yaw_dot) from body rates (p, q, r).
/// Throws DomainError when |pitch| >= pi/2 - 1e-3.
EulerAngles euler_kinematics(const EulerAngles& angles, const Vec3& body_rates);

/// Coordinate transform from the reference frame into body axes: C = Rx(phi)^T Ry(theta)^T Rz(psi)^T.
Mat3 dcm_from_euler(const EulerAngles& angles);

/// Inverse of dcm_from_euler on the principal branch (|pitch| <= pi/2).
EulerAngles euler_from_dcm(const Mat3& dcm);

/// Small rotation vector (body axes of `measured`) that takes `measured` onto `reference`.
/// Both arguments are reference-to-body transforms. Exact for single-axis rotations below pi.
Vec3 attitude_error(const Mat3& reference, const Mat3& measured);

/// Classical fixed-step fourth-order Runge-Kutta with preallocated stage buffers.
///
/// The derivative callable has the signature `void(double t, std::span<const double> x, std::span<double> dxdt)`.
/// Every stage derivative is checked; a non-finite component raises PropagationError carrying its index.
class Rk4Integrator {
public:
    explicit Rk4Integrator(std::size_t dimension = 0) { resize(dimension); }

    void resize(std::size_t dimension) {
        k1_.assign(dimension, 0.0);
        k2_.assign(dimension, 0.0);
        k3_.assign(dimension, 0.0);
        k4_.assign(dimension, 0.0);
        tmp_.assign(dimension, 0.0);
    }

    std::size_t dimension() const noexcept { return k1_.size(); }

    template <typename Derivative>
    void step(std::span<double> state, Derivative&& derivative, double t, double dt) {
        if (!(dt > 0.0)) {
            throw DomainError("rk4 step size must be positive");
        }
        if (state.size() != dimension()) {
            resize(state.size());
        }
        const std::size_t n = state.size();
        const double half = 0.5 * dt;

        derivative(t, std::span<const double>(state.data(), n), std::span<double>(k1_));
        check(k1_, t);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = state[i] + half * k1_[i];
        derivative(t + half, std::span<const double>(tmp_), std::span<double>(k2_));
        check(k2_, t + half);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = state[i] + half * k2_[i];
        derivative(t + half, std::span<const double>(tmp_), std::span<double>(k3_));
        check(k3_, t + half);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = state[i] + dt * k3_[i];
        derivative(t + dt, std::span<const double>(tmp_), std::span<double>(k4_));
        check(k4_, t + dt);

        const double sixth = dt / 6.0;
        for (std::size_t i = 0; i < n; ++i) {
            state[i] += sixth * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        }
    }

private:
    static void check(const std::vector<double>& k, double t) {
        for (std::size_t i = 0; i < k.size(); ++i) {
            if (!std::isfinite(k[i])) throw PropagationError(i, t);
        }
    }

    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step returning a new state; convenience wrapper over Rk4Integrator.
template <typename Derivative>
std::vector<double> rk4_step(std::span<const double> state, Derivative&& derivative, double t, double dt) {
    std::vector<double> next(state.begin(), state.end());
    Rk4Integrator integrator(next.size());
    integrator.step(std::span<double>(next), std::forward<Derivative>(derivative), t, dt);
    return next;
}

/// Piecewise-linear table on a strictly increasing grid; clamps outside the grid.
class Table1D {
public:
    Table1D() = default;
    Table1D(std::vector<double> breakpoints, std::vector<double> values);

    double operator()(double x) const;
    /// Slope of the segment containing x. At an interior breakpoint the segment below is used.
    double slope(double x) const;

    const std::vector<double>& breakpoints() const noexcept { return x_; }
    const std::vector<double>& values() const noexcept { return y_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

/// Bilinear table over (row grid x column grid), values stored row-major [i_row * ncols + j_col].
class Table2D {
public:
    Table2D() = default;
    Table2D(std::vector<double> rows, std::vector<double> cols, std::vector<double> values);

    double operator()(double row, double col) const;

    const std::vector<double>& rows() const noexcept { return rows_; }
    const std::vector<double>& cols() const noexcept { return cols_; }
    const std::vector<double>& values() const noexcept { return v_; }
    double at(std::size_t i, std::size_t j) const { return v_[i * cols_.size() + j]; }

private:
    std::vector<double> rows_;
    std::vector<double> cols_;
    std::vector<double> v_;
};

inline double interp(const Table1D& table, double x) { return table(x); }
inline double interp(const Table2D& table, double row, double col) { return table(row, col); }

}  // namespace slv
