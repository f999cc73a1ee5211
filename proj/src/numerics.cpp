#include "slv/numerics.hpp"

#include <algorithm>
#include <string>

namespace slv {

Mat3 skew(const Vec3& a) {
    Mat3 s;
    s << 0.0, -a.z(), a.y(),
         a.z(), 0.0, -a.x(),
         -a.y(), a.x(), 0.0;
    return s;
}

Mat3 rot_axis(const Vec3& axis, double angle) {
    const double norm = axis.norm();
    if (std::abs(norm - 1.0) > 1e-9) {
        throw DomainError("rotation axis must be a unit vector (|axis| = " + std::to_string(norm) + ")");
    }
    const Mat3 k = skew(axis);
    return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
}

Mat3 rot_x(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << 1.0, 0.0, 0.0,
         0.0, c, -s,
         0.0, s, c;
    return r;
}

Mat3 rot_y(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << c, 0.0, s,
         0.0, 1.0, 0.0,
         -s, 0.0, c;
    return r;
}

Mat3 rot_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0.0,
         s, c, 0.0,
         0.0, 0.0, 1.0;
    return r;
}

EulerAngles euler_kinematics(const EulerAngles& angles, const Vec3& body_rates) {
    if (std::abs(angles.pitch) >= kGimbalLockGuard) {
        throw DomainError("euler kinematics singular: |pitch| too close to pi/2");
    }
    const double sphi = std::sin(angles.roll);
    const double cphi = std::cos(angles.roll);
    const double cth = std::cos(angles.pitch);
    const double tth = std::tan(angles.pitch);
    const double p = body_rates.x();
    const double q = body_rates.y();
    const double r = body_rates.z();

    EulerAngles rates;
    rates.roll = p + (q * sphi + r * cphi) * tth;
    rates.pitch = q * cphi - r * sphi;
    rates.yaw = (q * sphi + r * cphi) / cth;
    return rates;
}

Mat3 dcm_from_euler(const EulerAngles& a) {
    return rot_x(a.roll).transpose() * rot_y(a.pitch).transpose() * rot_z(a.yaw).transpose();
}

EulerAngles euler_from_dcm(const Mat3& c) {
    EulerAngles a;
    a.pitch = -std::asin(std::clamp(c(0, 2), -1.0, 1.0));
    a.roll = std::atan2(c(1, 2), c(2, 2));
    a.yaw = std::atan2(c(0, 1), c(0, 0));
    return a;
}

Vec3 attitude_error(const Mat3& reference, const Mat3& measured) {
    const Mat3 err = reference * measured.transpose();
    const Vec3 v(0.5 * (err(1, 2) - err(2, 1)),
                 0.5 * (err(2, 0) - err(0, 2)),
                 0.5 * (err(0, 1) - err(1, 0)));
    const double cos_angle = std::clamp(0.5 * (err.trace() - 1.0), -1.0, 1.0);
    const double angle = std::acos(cos_angle);
    if (angle < 1e-8) {
        return v;
    }
    return v * (angle / std::sin(angle));
}

Table1D::Table1D(std::vector<double> breakpoints, std::vector<double> values)
    : x_(std::move(breakpoints)), y_(std::move(values)) {
    if (x_.empty() || x_.size() != y_.size()) {
        throw ConfigError("Table1D: breakpoint and value counts must match and be non-zero");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) throw ConfigError("Table1D: breakpoints must be strictly increasing");
    }
}

namespace {

// Index of the lower breakpoint of the segment containing x (clamped), plus the blend weight.
std::pair<std::size_t, double> locate(const std::vector<double>& grid, double x) {
    if (grid.size() == 1 || x <= grid.front()) return {0, 0.0};
    if (x >= grid.back()) return {grid.size() - 2, 1.0};
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    return {i, (x - grid[i]) / (grid[i + 1] - grid[i])};
}

}  // namespace

double Table1D::operator()(double x) const {
    if (x_.size() == 1) return y_.front();
    const auto [i, w] = locate(x_, x);
    if (w == 0.0) return y_[i];
    if (w == 1.0) return y_[i + 1];
    return y_[i] + w * (y_[i + 1] - y_[i]);
}

double Table1D::slope(double x) const {
    if (x_.size() == 1) return 0.0;
    std::size_t i = 0;
    if (x <= x_.front()) {
        i = 0;
    } else if (x >= x_.back()) {
        i = x_.size() - 2;
    } else {
        const auto it = std::lower_bound(x_.begin(), x_.end(), x);
        i = static_cast<std::size_t>(it - x_.begin()) - 1;
    }
    return (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
}

Table2D::Table2D(std::vector<double> rows, std::vector<double> cols, std::vector<double> values)
    : rows_(std::move(rows)), cols_(std::move(cols)), v_(std::move(values)) {
    if (rows_.empty() || cols_.empty() || v_.size() != rows_.size() * cols_.size()) {
        throw ConfigError("Table2D: value array does not match grid dimensions");
    }
    for (std::size_t i = 1; i < rows_.size(); ++i) {
        if (!(rows_[i] > rows_[i - 1])) throw ConfigError("Table2D: row breakpoints must be strictly increasing");
    }
    for (std::size_t j = 1; j < cols_.size(); ++j) {
        if (!(cols_[j] > cols_[j - 1])) throw ConfigError("Table2D: column breakpoints must be strictly increasing");
    }
}

double Table2D::operator()(double row, double col) const {
    const auto [i, wr] = locate(rows_, row);
    const auto [j, wc] = locate(cols_, col);
    const std::size_t i1 = std::min(i + 1, rows_.size() - 1);
    const std::size_t j1 = std::min(j + 1, cols_.size() - 1);
    const double v00 = at(i, j);
    const double v01 = at(i, j1);
    const double v10 = at(i1, j);
    const double v11 = at(i1, j1);
    const double top = v00 + wc * (v01 - v00);
    const double bottom = v10 + wc * (v11 - v10);
    return top + wr * (bottom - top);
}

}  // namespace slv
