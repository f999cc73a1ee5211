#include <doctest.h>

#include <cmath>

#include "slv/flex.hpp"

using namespace slv;

namespace {

// Composite Simpson over [0, L].
template <typename F>
double integrate(F f, double length, int n = 20000) {
    const double h = length / n;
    double sum = f(0.0) + f(length);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return sum * h / 3.0;
}

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

TEST_CASE("free-free eigenvalues") {
    CHECK(free_free_eigenvalue(1) == doctest::Approx(4.730040745).epsilon(1e-9));
    CHECK(free_free_eigenvalue(2) == doctest::Approx(7.853204624).epsilon(1e-9));
    const double x3 = free_free_eigenvalue(3);
    CHECK(std::cos(x3) * std::cosh(x3) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("beam shapes are mass-orthonormal and free of rigid-body content") {
    const BeamOptions o;
    const double rho = o.mass / o.length;
    for (int n : {1, 2}) {
        auto phi = [&](double s) { return free_free_beam_shape(n, s, o).value; };
        CHECK(integrate([&](double s) { return rho * phi(s) * phi(s); }, o.length) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(integrate(phi, o.length)) * std::sqrt(rho) < 1e-8);
        CHECK(std::abs(integrate([&](double s) { return (s - 0.5 * o.length) * phi(s); }, o.length)) * std::sqrt(rho) < 1e-7);
    }
    const double cross = integrate(
        [&](double s) { return rho * free_free_beam_shape(1, s, o).value * free_free_beam_shape(2, s, o).value; },
        o.length);
    CHECK(std::abs(cross) < 1e-9);
}

TEST_CASE("beam slope is the derivative of the shape") {
    const double h = 1e-5;
    for (int n : {1, 2}) {
        for (double s : {3.0, 15.0, 35.0, 52.0, 69.0}) {
            const double fd =
                (free_free_beam_shape(n, s + h).value - free_free_beam_shape(n, s - h).value) / (2.0 * h);
            CHECK(free_free_beam_shape(n, s).slope == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("default modal dataset") {
    const ModalDataset d = ModalDataset::beam_default();
    REQUIRE(d.size() == 4);
    CHECK_NOTHROW(d.validate());
    const double w1 = 2.0 * kPi * 4.293;
    const double w2 = 2.0 * kPi * 11.559;
    CHECK(d.modes[0].frequency == doctest::Approx(w1));
    CHECK(d.modes[1].frequency == doctest::Approx(w1));
    CHECK(d.modes[2].frequency == doctest::Approx(w2));
    CHECK(d.modes[3].frequency == doctest::Approx(w2));
    CHECK(d.modes[0].damping == 0.0145);
    CHECK(d.modes[3].damping == 0.0147);

    // Planar pairs: y modes have no z content and vice versa.
    CHECK(d.modes[0].phi_z == 0.0);
    CHECK(d.modes[0].slope_z_t == 0.0);
    CHECK(d.modes[1].phi_y == 0.0);
    CHECK(d.modes[1].slope_y_g == 0.0);
    const BeamShape tip = free_free_beam_shape(1, 70.0);
    CHECK(std::abs(d.modes[1].phi_z) == doctest::Approx(std::abs(tip.value)));
    CHECK(std::abs(d.modes[1].slope_z_t) == doctest::Approx(std::abs(tip.slope)));
    CHECK(std::abs(d.modes[1].slope_z_g) == doctest::Approx(std::abs(free_free_beam_shape(1, 15.0).slope)));

    ModalDataset bad = d;
    bad.modes[2].damping = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = d;
    bad.modes[0].frequency = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("undeformed vehicle senses the rigid body") {
    const ModalDataset d = ModalDataset::beam_default();
    const FlexState s(d.size());
    const Mat3 c = dcm_from_euler({0.1, -0.4, 0.2});
    const Vec3 w(0.01, 0.02, -0.03);
    const SensedOutputs out = sensed_outputs(c, w, s, d);
    CHECK((out.attitude - c).norm() == 0.0);
    CHECK((out.rates - w).norm() == 0.0);
    CHECK_FALSE(out.small_angle_warning);
    CHECK((nozzle_rotation(d, view(s.xi)) - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("bending corrupts the sensed rate and attitude") {
    const ModalDataset d = ModalDataset::beam_default();
    FlexState s(d.size());
    s.xi_dot(1) = 2.0;
    const Vec3 bend = sensed_bending_rate(d, view(s.xi_dot));
    CHECK(bend.x() == 0.0);
    CHECK(bend.y() == doctest::Approx(2.0 * d.modes[1].slope_z_g));
    CHECK(bend.z() == 0.0);

    s.xi(1) = 1e-3 / std::abs(d.modes[1].slope_z_g);
    const SensedOutputs out = sensed_outputs(Mat3::Identity(), Vec3::Zero(), s, d);
    const Vec3 e = attitude_error(Mat3::Identity(), out.attitude);
    CHECK(std::abs(e.y()) == doctest::Approx(1e-3).epsilon(1e-6));

    s.xi(1) = 0.3 / std::abs(d.modes[1].slope_z_g);
    CHECK(sensed_outputs(Mat3::Identity(), Vec3::Zero(), s, d).small_angle_warning);
}

TEST_CASE("modal forcing and dimensions") {
    const ModalDataset d = ModalDataset::beam_default();
    FlexState s(d.size());
    const Vec3 f(0.0, 1e4, -2e4);
    const FlexRates r = flex_derivatives(s, f, d);
    for (std::size_t j = 0; j < d.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        CHECK(r.xi_ddot(k) == doctest::Approx(d.modes[j].phi_y * f.y() + d.modes[j].phi_z * f.z()));
    }
    CHECK_THROWS_AS(flex_derivatives(FlexState(2), f, d), DomainError);
}

TEST_CASE("bent thrust line keeps its magnitude") {
    const ModalDataset d = ModalDataset::beam_default();
    const EngineLayout layout = EngineLayout::falcon9();
    FlexState s(d.size());
    s.xi << 0.3, -0.2, 0.1, 0.05;
    const auto forces = bent_engine_forces(layout, GimbalCmd{}, 845e3, s, d);
    for (const auto& f : forces) CHECK(f.norm() == doctest::Approx(845e3).epsilon(1e-14));
    const EngineLoads l = bent_engine_moments(layout, GimbalCmd{}, 845e3, FlexState(d.size()), d, mass_properties(1.0));
    CHECK(l.moment.norm() < 1e-6);
}

TEST_CASE("free vibration conserves energy and decays at the modal damping") {
    ModalDataset d = ModalDataset::beam_default();
    for (auto& m : d.modes) m.damping = 1e-12;
    FlexState s(d.size());
    s.xi << 0.01, -0.02, 0.005, 0.0;
    s.xi_dot << 0.0, 0.1, 0.0, -0.3;
    const double e0 = modal_energy(s, d);

    const std::size_t n = d.size();
    std::vector<double> x(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = s.xi(static_cast<Eigen::Index>(j));
        x[n + j] = s.xi_dot(static_cast<Eigen::Index>(j));
    }
    auto rhs = [](const ModalDataset& data) {
        return [&data](double, std::span<const double> y, std::span<double> dy) {
            const std::size_t k = data.size();
            for (std::size_t j = 0; j < k; ++j) dy[j] = y[k + j];
            flex_derivatives(y.subspan(0, k), y.subspan(k, k), Vec3::Zero(), data, dy.subspan(k, k));
        };
    };
    Rk4Integrator rk(2 * n);
    const double dt = 1e-4;
    for (int i = 0; i < 20000; ++i) rk.step(std::span<double>(x), rhs(d), i * dt, dt);
    for (std::size_t j = 0; j < n; ++j) {
        s.xi(static_cast<Eigen::Index>(j)) = x[j];
        s.xi_dot(static_cast<Eigen::Index>(j)) = x[n + j];
    }
    CHECK(modal_energy(s, d) == doctest::Approx(e0).epsilon(1e-8));

    // Logarithmic decrement of a single damped mode over one period.
    ModalDataset one;
    one.modes.push_back(ModalDataset::beam_default().modes[0]);
    const Mode& m = one.modes[0];
    const double wd = m.frequency * std::sqrt(1.0 - m.damping * m.damping);
    const double period = 2.0 * kPi / wd;
    std::vector<double> y{1.0, -m.damping * m.frequency};  // starts on a pure decaying cosine
    const int steps = 20000;
    for (int i = 0; i < steps; ++i) rk.step(std::span<double>(y), rhs(one), i * period / steps, period / steps);
    CHECK(y[0] == doctest::Approx(std::exp(-m.damping * m.frequency * period)).epsilon(1e-9));
}

TEST_CASE("axial thrust excites no bending") {
    const ModalDataset d = ModalDataset::beam_default();
    const FlexRates r = flex_derivatives(FlexState(d.size()), Vec3(9.0 * 845e3, 0.0, 0.0), d);
    CHECK(r.xi_ddot.norm() == 0.0);
}

TEST_CASE("static deflection under a constant lateral thrust") {
    const ModalDataset d = ModalDataset::beam_default();
    const EngineLayout layout = EngineLayout::falcon9();
    GimbalCmd cmd{};
    for (auto& g : cmd) g.eta = 0.01;
    const Vec3 f = engine_moments(layout, cmd, 845e3, mass_properties(0.5)).force;
    // At equilibrium xi_ddot = 0: xi_j = (phi_j . F) / Omega_j^2.
    FlexState s(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        const Mode& m = d.modes[j];
        s.xi(static_cast<Eigen::Index>(j)) = (m.phi_y * f.y() + m.phi_z * f.z()) / (m.frequency * m.frequency);
    }
    CHECK(flex_derivatives(s, f, d).xi_ddot.norm() < 1e-9);
}

TEST_CASE("bent thrust line") {
    const ModalDataset d = ModalDataset::beam_default();
    const EngineLayout layout = EngineLayout::falcon9();
    const MassProperties mp = mass_properties(0.5);
    const double t = 845e3;
    GimbalCmd cmd{};
    cmd[2] = {0.01, -0.02};

    const FlexState zero(d.size());
    const auto rigid = engine_forces(layout, cmd, t);
    const auto bent0 = bent_engine_forces(layout, cmd, t, zero, d);
    for (int i = 0; i < kEngineCount; ++i) CHECK((rigid[i] - bent0[i]).norm() == 0.0);
    const EngineLoads r0 = engine_moments(layout, cmd, t, mp);
    const EngineLoads b0 = bent_engine_moments(layout, cmd, t, zero, d, mp);
    CHECK((r0.moment - b0.moment).norm() < 1e-6);

    // A pure nozzle slope eps about body y tilts every axial thrust vector by eps.
    const double eps = 0.01;
    FlexState s(d.size());
    s.xi(1) = eps / d.modes[1].slope_z_t;
    const auto tilted = bent_engine_forces(layout, GimbalCmd{}, t, s, d);
    CHECK((tilted[0] - t * Vec3(std::cos(eps), 0.0, -std::sin(eps))).norm() < 1e-9);

    // Linear in the slope for small angles.
    for (double deg : {0.5, 1.0, 2.0}) {
        const double a = deg * kDegToRad;
        s.xi(1) = a / d.modes[1].slope_z_t;
        const double lateral = bent_engine_forces(layout, GimbalCmd{}, t, s, d)[0].z();
        CHECK(std::abs(lateral + t * a) <= 0.01 * t * a);
    }

    // A deformed vehicle with neutral gimbals still feels a lateral force and pitch moment.
    s.xi(1) = 0.05;
    const EngineLoads bent = bent_engine_moments(layout, GimbalCmd{}, t, s, d, mp);
    CHECK(std::abs(bent.force.z()) > 0.0);
    CHECK(std::abs(bent.moment.y()) > 0.0);

    // The displacement term adds exactly (phi_T xi) x sum(F).
    const auto forces = bent_engine_forces(layout, cmd, t, s, d);
    Vec3 total = Vec3::Zero();
    Vec3 rigid_arm = Vec3::Zero();
    for (int i = 0; i < kEngineCount; ++i) {
        total += forces[i];
        rigid_arm += layout.arm(i, mp.x_cg).cross(forces[i]);
    }
    const Vec3 shift = nozzle_displacement(d, view(s.xi));
    const EngineLoads full = bent_engine_moments(layout, cmd, t, s, d, mp);
    CHECK((full.moment - rigid_arm - shift.cross(total)).norm() < 1e-6);
}

TEST_CASE("gyro outputs from modal rates") {
    const ModalDataset d = ModalDataset::beam_default();
    FlexState s(d.size());
    s.xi_dot(0) = 1.0;
    const SensedOutputs out = sensed_outputs(Mat3::Identity(), Vec3::Zero(), s, d);
    CHECK(out.rates.x() == 0.0);
    CHECK(out.rates.y() == d.modes[0].slope_z_g);
    CHECK(out.rates.z() == d.modes[0].slope_y_g);

    s.xi << 0.2, -0.1, 0.05, 0.3;
    s.xi_dot << 0.4, 0.2, -0.6, 0.1;
    CHECK(sensed_outputs(Mat3::Identity(), Vec3(0.123, 0.0, 0.0), s, d).rates.x() == 0.123);
}
