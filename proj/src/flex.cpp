#include "slv/flex.hpp"

#include <cmath>
#include <string>

namespace slv {

void ModalDataset::validate() const {
    if (modes.empty()) throw ConfigError("modal dataset has no modes");
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const Mode& m = modes[j];
        if (!(m.frequency > 0.0) || !std::isfinite(m.frequency)) {
            throw ConfigError("mode " + std::to_string(j + 1) + ": frequency must be positive");
        }
        if (!(m.damping > 0.0 && m.damping < 1.0)) {
            throw ConfigError("mode " + std::to_string(j + 1) + ": damping must lie in (0, 1)");
        }
        for (double v : {m.phi_y, m.phi_z, m.slope_y_t, m.slope_z_t, m.slope_y_g, m.slope_z_g}) {
            if (!std::isfinite(v)) throw ConfigError("mode " + std::to_string(j + 1) + ": non-finite shape value");
        }
    }
}

double free_free_eigenvalue(int n) {
    if (n < 1) throw DomainError("beam mode index must be >= 1");
    // Newton on f(x) = cos x cosh x - 1 from the asymptotic root (2n + 1) pi / 2.
    double x = (2.0 * n + 1.0) * kPi / 2.0;
    for (int it = 0; it < 50; ++it) {
        const double f = std::cos(x) * std::cosh(x) - 1.0;
        const double df = -std::sin(x) * std::cosh(x) + std::cos(x) * std::sinh(x);
        const double step = f / df;
        x -= step;
        if (std::abs(step) < 1e-14 * x) break;
    }
    return x;
}

BeamShape free_free_beam_shape(int n, double station, const BeamOptions& options) {
    const double bl = free_free_eigenvalue(n);
    const double b = bl / options.length;
    const double sigma = (std::cosh(bl) - std::cos(bl)) / (std::sinh(bl) - std::sin(bl));
    const double x = b * station;
    // This shape integrates to `length` in phi^2, so dividing by sqrt(mass) normalises it.
    const double scale = 1.0 / std::sqrt(options.mass);
    const double value = std::cosh(x) + std::cos(x) - sigma * (std::sinh(x) + std::sin(x));
    const double slope = b * (std::sinh(x) - std::sin(x) - sigma * (std::cosh(x) + std::cos(x)));
    return {value * scale, slope * scale};
}

ModalDataset beam_dataset(const std::vector<double>& frequencies, const std::vector<double>& damping,
                          const BeamOptions& options) {
    if (frequencies.size() != damping.size() || frequencies.empty()) {
        throw ConfigError("beam dataset needs one damping value per frequency");
    }
    ModalDataset data;
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        const int n = static_cast<int>(k) + 1;
        const BeamShape t = free_free_beam_shape(n, options.nozzle_station, options);
        const BeamShape g = free_free_beam_shape(n, options.sensor_station, options);

        // Displacement along z tilts the local axis about +y by +d(phi)/ds; along y, about z by -d(phi)/ds.
        Mode y_plane;
        y_plane.frequency = frequencies[k];
        y_plane.damping = damping[k];
        y_plane.phi_y = t.value;
        y_plane.slope_y_t = -t.slope;
        y_plane.slope_y_g = -g.slope;

        Mode z_plane;
        z_plane.frequency = frequencies[k];
        z_plane.damping = damping[k];
        z_plane.phi_z = t.value;
        z_plane.slope_z_t = t.slope;
        z_plane.slope_z_g = g.slope;

        data.modes.push_back(y_plane);
        data.modes.push_back(z_plane);
    }
    data.validate();
    return data;
}

ModalDataset ModalDataset::beam_default() {
    return beam_dataset({2.0 * kPi * 4.293, 2.0 * kPi * 11.559}, {0.0145, 0.0147});
}

BendAngles nozzle_bend(const ModalDataset& data, std::span<const double> xi) {
    BendAngles a;
    for (std::size_t j = 0; j < data.modes.size(); ++j) {
        a.about_y += data.modes[j].slope_z_t * xi[j];
        a.about_z += data.modes[j].slope_y_t * xi[j];
    }
    return a;
}

BendAngles sensor_bend(const ModalDataset& data, std::span<const double> xi) {
    BendAngles a;
    for (std::size_t j = 0; j < data.modes.size(); ++j) {
        a.about_y += data.modes[j].slope_z_g * xi[j];
        a.about_z += data.modes[j].slope_y_g * xi[j];
    }
    return a;
}

Vec3 nozzle_displacement(const ModalDataset& data, std::span<const double> xi) {
    Vec3 d = Vec3::Zero();
    for (std::size_t j = 0; j < data.modes.size(); ++j) {
        d.y() += data.modes[j].phi_y * xi[j];
        d.z() += data.modes[j].phi_z * xi[j];
    }
    return d;
}

Mat3 nozzle_rotation(const ModalDataset& data, std::span<const double> xi) {
    const BendAngles a = nozzle_bend(data, xi);
    return rot_z(a.about_z) * rot_y(a.about_y);
}

void flex_derivatives(std::span<const double> xi, std::span<const double> xi_dot, const Vec3& total_engine_force,
                      const ModalDataset& data, std::span<double> xi_ddot) {
    for (std::size_t j = 0; j < data.modes.size(); ++j) {
        const Mode& m = data.modes[j];
        xi_ddot[j] = -m.frequency * m.frequency * xi[j] - 2.0 * m.damping * m.frequency * xi_dot[j] +
                     m.phi_y * total_engine_force.y() + m.phi_z * total_engine_force.z();
    }
}

namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_size(const FlexState& s, const ModalDataset& data) {
    const auto n = static_cast<Eigen::Index>(data.modes.size());
    if (s.xi.size() != n || s.xi_dot.size() != n) {
        throw DomainError("flex state size does not match the modal dataset");
    }
}

}  // namespace

FlexRates flex_derivatives(const FlexState& state, const Vec3& total_engine_force, const ModalDataset& data) {
    check_size(state, data);
    FlexRates r;
    r.xi_dot = state.xi_dot;
    r.xi_ddot.resize(state.xi.size());
    flex_derivatives(view(state.xi), view(state.xi_dot), total_engine_force, data,
                     {r.xi_ddot.data(), static_cast<std::size_t>(r.xi_ddot.size())});
    return r;
}

EngineForces bent_engine_forces(const EngineLayout& layout, const GimbalCmd& cmd, double thrust,
                                const FlexState& state, const ModalDataset& data) {
    check_size(state, data);
    const Mat3 bend = nozzle_rotation(data, view(state.xi));
    EngineForces out = engine_forces(layout, cmd, thrust);
    for (auto& f : out) f = bend * f;
    return out;
}

EngineLoads bent_engine_moments(const EngineLayout& layout, const GimbalCmd& cmd, double thrust,
                                const FlexState& state, const ModalDataset& data, const MassProperties& mass) {
    const EngineForces forces = bent_engine_forces(layout, cmd, thrust, state, data);
    const Vec3 shift = nozzle_displacement(data, view(state.xi));
    EngineLoads loads;
    for (int i = 0; i < kEngineCount; ++i) {
        const Vec3& f = forces[static_cast<std::size_t>(i)];
        loads.force += f;
        loads.moment += (layout.arm(i, mass.x_cg) + shift).cross(f);
    }
    return loads;
}

Mat3 sensor_rotation(const ModalDataset& data, std::span<const double> xi) {
    const BendAngles a = sensor_bend(data, xi);
    Mat3 r;
    r << 1.0, -a.about_z, a.about_y,
         a.about_z, 1.0, 0.0,
         -a.about_y, 0.0, 1.0;
    return r;
}

Vec3 sensed_bending_rate(const ModalDataset& data, std::span<const double> xi_dot) {
    const BendAngles a = sensor_bend(data, xi_dot);
    return Vec3(0.0, a.about_y, a.about_z);
}

SensedOutputs sensed_outputs(const Mat3& body_attitude, const Vec3& body_rates, const FlexState& state,
                             const ModalDataset& data) {
    check_size(state, data);
    const BendAngles a = sensor_bend(data, view(state.xi));
    SensedOutputs out;
    // sensor_rotation is the orientation of the sensor axes in body axes, so its transpose
    // carries body components into sensor components.
    out.attitude = sensor_rotation(data, view(state.xi)).transpose() * body_attitude;
    out.rates = body_rates + sensed_bending_rate(data, view(state.xi_dot));
    out.small_angle_warning = std::abs(a.about_y) > kSmallAngleLimit || std::abs(a.about_z) > kSmallAngleLimit;
    return out;
}

double modal_energy(const FlexState& state, const ModalDataset& data) {
    check_size(state, data);
    double e = 0.0;
    for (std::size_t j = 0; j < data.modes.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        const double w = data.modes[j].frequency;
        e += 0.5 * state.xi_dot(k) * state.xi_dot(k) + 0.5 * w * w * state.xi(k) * state.xi(k);
    }
    return e;
}

}  // namespace slv
