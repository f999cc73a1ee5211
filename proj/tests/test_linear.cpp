#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "slv/linear.hpp"

using namespace slv;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Rigid pitch transfer function of the design point, built from its factored form.
RationalTF design_rigid_tf() {
    return RationalTF(Polynomial{1.0, 0.02853},
                      Polynomial::from_roots({{0.0, 0.0}, {0.4067, 0.0}, {-0.4557, 0.0}}), -0.017725);
}

}  // namespace

TEST_CASE("characteristic polynomial") {
    Eigen::MatrixXd a(3, 3);
    a << 0, 1, 0,
         0, 0, 1,
         -6, -11, -6;
    CHECK(characteristic_polynomial(a) == Polynomial({1.0, 6.0, 11.0, 6.0}));

    Eigen::MatrixXd r = Eigen::MatrixXd::Random(6, 6);
    const Polynomial p = characteristic_polynomial(r);
    const Eigen::VectorXcd ev = r.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) CHECK(std::abs(p(ev(i))) < 1e-10);
    CHECK(p.coeff(5) == doctest::Approx(-r.trace()));
    CHECK(p.coeff(0) == doctest::Approx(r.determinant()));
}

TEST_CASE("design point reproduces the rigid pitch transfer function") {
    const PitchCoefficients k = design_point_coefficients();
    const LinearModel m = linearize(k, ModalDataset::beam_default());
    CHECK(m.state_count() == 3);
    const RationalTF tf = tf_from_model(m, "dE_deg", "theta");
    const Polynomial num = tf.numerator() * (1.0 / tf.den().leading());
    const Polynomial den = tf.den() * (1.0 / tf.den().leading());
    const RationalTF ref = design_rigid_tf();
    REQUIRE(num.degree() == 1);
    REQUIRE(den.degree() == 3);
    for (int i = 0; i <= 1; ++i) CHECK(rel(num.coeff(i), ref.numerator().coeff(i)) < 1e-3);
    for (int i = 1; i <= 2; ++i) CHECK(rel(den.coeff(i), ref.den().coeff(i)) < 1e-3);
    CHECK(std::abs(den.coeff(0)) < 1e-12);
    CHECK(k.mass == doctest::Approx(mass_properties(0.5).mass));
    CHECK(k.z_alpha_v == doctest::Approx(-0.049));
    CHECK(k.m_alpha == doctest::Approx(0.18533).epsilon(1e-4));
    CHECK(k.m_delta * kDegToRad == doctest::Approx(-0.017725));
    // The matched numerator needs a positive Z_dE/V; its magnitude fixes the velocity.
    CHECK(k.z_delta_v > 0.0);
    CHECK(k.z_delta_v * k.velocity * k.mass == doctest::Approx(k.thrust));
}

TEST_CASE("classical coupling keeps the open-loop modal poles") {
    const ModalDataset modal = ModalDataset::beam_default();
    LinearizeOptions o;
    o.flexible = true;
    const LinearModel m = linearize(design_point_coefficients(), modal, o);
    CHECK(m.state_count() == 3 + 2 * static_cast<Eigen::Index>(modal.size()));
    CHECK_NOTHROW(m.validate());
    const Eigen::VectorXcd ev = m.a.eigenvalues();
    for (const Mode& mode : modal.modes) {
        const std::complex<double> pole(-mode.damping * mode.frequency,
                                        mode.frequency * std::sqrt(1.0 - mode.damping * mode.damping));
        double best = 1e300;
        for (Eigen::Index i = 0; i < ev.size(); ++i) best = std::min(best, std::abs(ev(i) - pole));
        CHECK(best < 1e-9 * mode.frequency);
    }
}

TEST_CASE("nozzle-force coupling matches the classical model when rigid") {
    const PitchCoefficients k = design_point_coefficients();
    LinearizeOptions a;
    LinearizeOptions b;
    b.coupling = ModalCoupling::nozzle_force;
    const LinearModel ma = linearize(k, ModalDataset::beam_default(), a);
    const LinearModel mb = linearize(k, ModalDataset::beam_default(), b);
    CHECK((ma.a - mb.a).norm() == 0.0);
    CHECK((ma.b - mb.b).norm() == 0.0);
}

TEST_CASE("transfer function and its realization agree in frequency") {
    LinearizeOptions o;
    o.flexible = true;
    const ModalDataset modal = ModalDataset::beam_default();
    const LinearModel m = linearize(design_point_coefficients(), modal, o);
    const auto grid = log_grid(1e-2, 1e3, 400);
    std::vector<RationalTF> tfs{tf_from_model(m, "dE_deg", "theta"), tf_from_model(m, "dE_deg", "q_m"),
                                design_notch(modal), design_elliptic()};
    for (const RationalTF& tf : tfs) {
        const LinearModel ss = realize(tf);
        const FrequencyResponse a = freq_response(tf, grid);
        const FrequencyResponse b = freq_response(ss, 0, 0, grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            worst = std::max(worst, std::abs(a.response[i] - b.response[i]) / std::abs(a.response[i]));
        }
        CHECK(worst <= 1e-9);
    }
    CHECK_THROWS_AS(freq_response(design_rigid_tf(), {1.0, 1.0}), DomainError);
}

TEST_CASE("transfer functions reproduce the state-space model") {
    LinearizeOptions o;
    o.flexible = true;
    const LinearModel m = linearize(design_point_coefficients(), ModalDataset::beam_default(), o);
    const auto grid = log_grid(1e-2, 1e3, 400);
    for (const char* out : {"theta", "theta_m", "q_m"}) {
        const FrequencyResponse a = freq_response(tf_from_model(m, "dE_deg", out), grid);
        const FrequencyResponse b = freq_response(m, 0, m.output_index(out), grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            worst = std::max(worst, std::abs(a.response[i] - b.response[i]) / std::abs(b.response[i]));
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("controllable realization round trip") {
    const RationalTF g(Polynomial{2.0, 3.0, 1.0}, Polynomial{1.0, 4.0, 6.0, 4.0}, 1.5);
    const LinearModel m = realize(g);
    CHECK(m.state_count() == 3);
    const RationalTF back = tf_from_model(m, 0, 0);
    for (double om : {0.1, 1.0, 10.0}) CHECK(std::abs(back.at_frequency(om) - g.at_frequency(om)) < 1e-12);
    CHECK(dc_gain(m) == doctest::Approx(g.dc_gain()));
    CHECK(spectral_abscissa(m.a) == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("frequency response helpers") {
    const auto g = log_grid(0.1, 100.0, 4);
    CHECK(g.front() == doctest::Approx(0.1));
    CHECK(g[1] == doctest::Approx(1.0));
    CHECK(g.back() == doctest::Approx(100.0));

    // 1/(s+1)^3 sweeps continuously through -180 deg.
    const RationalTF lag(Polynomial{1.0}, Polynomial{1.0, 3.0, 3.0, 1.0});
    const auto grid = log_grid(0.01, 100.0, 200);
    const FrequencyResponse r = freq_response(lag, grid);
    const auto ph = r.phase_deg();
    const auto mag = r.magnitude_db();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(ph[i] == doctest::Approx(-3.0 * std::atan(grid[i]) * kRadToDeg).epsilon(1e-9));
        CHECK(mag[i] == doctest::Approx(-30.0 * std::log10(1.0 + grid[i] * grid[i])).epsilon(1e-9));
    }
}

TEST_CASE("margins of a textbook loop") {
    // k / (s (s+1)(s+2)): phase crossover at sqrt(2) rad/s with gain margin 6/k.
    const double k = 2.0;
    const RationalTF l(Polynomial{k}, Polynomial{1.0, 3.0, 2.0, 0.0});
    const StabilityMargins m = margins(l);
    REQUIRE(m.gain_margin);
    CHECK(m.gain_margin->omega == doctest::Approx(std::sqrt(2.0)).epsilon(1e-4));
    CHECK(m.gain_margin->margin == doctest::Approx(20.0 * std::log10(6.0 / k)).epsilon(1e-4));
    REQUIRE(m.upper_gain_margin);
    CHECK(m.upper_gain_margin->margin == doctest::Approx(m.gain_margin->margin));
    CHECK_FALSE(m.lower_gain_margin);

    REQUIRE(m.phase_margin);
    const double wc = m.phase_margin->omega;
    CHECK(std::abs(l.at_frequency(wc)) == doctest::Approx(1.0).epsilon(1e-4));
    const double expected_pm = 180.0 + std::arg(l.at_frequency(wc)) * kRadToDeg;
    CHECK(m.phase_margin->margin == doctest::Approx(expected_pm).epsilon(1e-3));

    // Scaling the loop moves the gain margin by the same number of dB.
    const StabilityMargins m2 = margins(l * 2.0);
    CHECK(m2.gain_margin->margin == doctest::Approx(m.gain_margin->margin - 20.0 * std::log10(2.0)).epsilon(1e-4));
    CHECK(m2.gain_margin->omega == doctest::Approx(m.gain_margin->omega).epsilon(1e-4));

    const StabilityMargins none = margins(RationalTF(Polynomial{0.5}, Polynomial{1.0, 1.0}));
    CHECK(none.gain_unbounded());
    CHECK(none.phase_unbounded());
}

TEST_CASE("second-order step response metrics") {
    const double wn = 2.0;
    const double z = 0.5;
    const LinearModel m = realize(RationalTF(Polynomial{wn * wn}, Polynomial{1.0, 2.0 * z * wn, wn * wn}));
    const StepResponse r = step_response(m, 12.0);
    CHECK_FALSE(r.diverged);
    const StepMetrics s = step_metrics(r, dc_gain(m));
    const double wd = wn * std::sqrt(1.0 - z * z);
    CHECK(s.overshoot == doctest::Approx(100.0 * std::exp(-kPi * z / std::sqrt(1.0 - z * z))).epsilon(1e-3));
    CHECK(s.peak_time == doctest::Approx(kPi / wd).epsilon(1e-3));
    CHECK(s.final_value == doctest::Approx(1.0));
    CHECK(s.rise_time > 0.0);
    CHECK(s.rise_time < s.peak_time);
    CHECK(s.settling_time == doctest::Approx(4.0 / (z * wn)).epsilon(0.15));

    const LinearModel unstable = realize(RationalTF(Polynomial{1.0}, Polynomial{1.0, -3.0}));
    StepOptions o;
    o.divergence_bound = 100.0;
    const StepResponse d = step_response(unstable, 10.0, o);
    CHECK(d.diverged);
    CHECK(d.escape_time == doctest::Approx(std::log(301.0) / 3.0).epsilon(1e-2));
}

TEST_CASE("closed pitch loop at the design point") {
    const ModalDataset modal = ModalDataset::beam_default();
    LinearizeOptions o;
    o.flexible = true;
    const LinearModel plant = linearize(design_point_coefficients(), modal, o);
    FilterSettings fs;
    for (FilterType t : {FilterType::notch, FilterType::elliptic}) {
        fs.type = t;
        const LinearModel cl = close_pitch_loop(plant, ControllerGains{}, design_filter(fs, modal), fs.placement);
        CHECK(spectral_abscissa(cl.a) < 0.0);
        CHECK(dc_gain(cl, 0, cl.output_index("theta")) == doctest::Approx(1.0).epsilon(1e-6));
    }
    // Without a structural filter only the nozzle-force coupling destabilizes the bending loop.
    fs.type = FilterType::none;
    const RationalTF unity = design_filter(fs, modal);
    CHECK(spectral_abscissa(close_pitch_loop(plant, ControllerGains{}, unity, fs.placement).a) < 0.0);
    o.coupling = ModalCoupling::nozzle_force;
    const LinearModel nozzle = linearize(design_point_coefficients(), modal, o);
    CHECK(spectral_abscissa(close_pitch_loop(nozzle, ControllerGains{}, unity, fs.placement).a) > 0.0);
}

TEST_CASE("model validation and lookups") {
    LinearModel m = linearize(design_point_coefficients(), ModalDataset::beam_default());
    CHECK(m.state_index("theta") == 2);
    CHECK(m.output_index("q_m") == 2);
    CHECK_THROWS_AS(m.state_index("nope"), DomainError);
    m.b.resize(2, 1);
    CHECK_THROWS_AS(m.validate(), DomainError);

    PitchCoefficients k = design_point_coefficients();
    k.velocity = 0.0;
    CHECK_THROWS_AS(linearize(k, ModalDataset::beam_default()), LinearizationError);
}

TEST_CASE("finite-difference coefficients along the trajectory") {
    const AeroTables aero = AeroTables::synthetic_slender_body();
    const MassModel mass;
    const EngineLayout layout = EngineLayout::falcon9();
    const FlightCondition fc{60.0, 9000.0, 420.0, 0.5 * kDegToRad};
    const PitchCoefficients k = coefficients_at(fc, aero, mass, layout);
    const double thrust = 9.0 * 1e3 * engine_thrust(atmosphere(9000.0).pressure_kpa);
    CHECK(k.thrust == doctest::Approx(thrust));
    CHECK(k.mass == doctest::Approx(mass(mass.fuel_fraction_at(60.0)).mass));
    CHECK(k.z_delta_v == doctest::Approx(-thrust / (k.mass * 420.0)));
    CHECK(k.m_delta < 0.0);
    CHECK(k.z_alpha_v < 0.0);

    const RollCoefficients r = roll_coefficients_at(fc, aero, mass, layout);
    CHECK(r.l_p < 0.0);
    CHECK(r.l_delta_a > 0.0);
    CHECK_THROWS_AS(coefficients_at({0.0, 0.0, 0.0, 0.0}, aero, mass, layout), LinearizationError);

    const LinearModel roll = linearize_roll(r);
    CHECK(roll.state_count() == 2);
    CHECK(roll.b(1, 0) == doctest::Approx(r.l_delta_a * kDegToRad));
}

TEST_CASE("rigid denominator roots") {
    const LinearModel m = linearize(design_point_coefficients(), ModalDataset::beam_default());
    auto poles = tf_from_model(m, "dE_deg", "theta").poles();
    std::sort(poles.begin(), poles.end(), [](auto a, auto b) { return a.real() < b.real(); });
    REQUIRE(poles.size() == 3);
    CHECK(std::abs(poles[0] - std::complex<double>(-0.4557, 0.0)) < 1e-3);
    CHECK(std::abs(poles[1]) < 1e-3);
    CHECK(std::abs(poles[2] - std::complex<double>(0.4067, 0.0)) < 1e-3);

    // theta integrates q: the q -> theta path alone is a pure integrator.
    LinearModel chain;
    chain.a = Eigen::MatrixXd::Zero(2, 2);
    chain.a(1, 0) = 1.0;
    chain.b = Eigen::MatrixXd::Zero(2, 1);
    chain.b(0, 0) = 1.0;
    chain.c = Eigen::MatrixXd::Zero(1, 2);
    chain.c(0, 1) = 1.0;
    chain.d = Eigen::MatrixXd::Zero(1, 1);
    chain.states = {"q", "theta"};
    chain.inputs = {"m"};
    chain.outputs = {"theta"};
    const RationalTF integ = tf_from_model(chain, 0, 0);
    CHECK(integ.den().coeff(0) == 0.0);
}

TEST_CASE("decoupled bending is dropped from the transfer function") {
    ModalDataset inert = ModalDataset::beam_default();
    for (auto& mode : inert.modes) {
        mode.phi_y = mode.phi_z = 0.0;
        mode.slope_y_t = mode.slope_z_t = mode.slope_y_g = mode.slope_z_g = 0.0;
    }
    LinearizeOptions o;
    o.flexible = true;
    const LinearModel m = linearize(design_point_coefficients(), inert, o);
    CHECK(tf_from_model(m, "dE_deg", "theta").den().degree() == 3);
    CHECK(tf_from_model(m, "dE_deg", "theta_m").den().degree() == 3);
}

TEST_CASE("plant frequency responses") {
    LinearizeOptions o;
    o.flexible = true;
    const ModalDataset modal = ModalDataset::beam_default();
    const LinearModel m = linearize(design_point_coefficients(), modal, o);
    const RationalTF flex = tf_from_model(m, "dE_deg", "theta_m");
    for (double w : distinct_frequencies(modal)) {
        // Local maximum within 1 % of the modal frequency.
        const double at = std::abs(flex.at_frequency(w));
        CHECK(at > std::abs(flex.at_frequency(0.97 * w)));
        CHECK(at > std::abs(flex.at_frequency(1.03 * w)));
    }
    const RationalTF rigid = tf_from_model(linearize(design_point_coefficients(), modal), "dE_deg", "theta");
    const auto grid = log_grid(1.0, 1e3, 300);
    const auto mag = freq_response(rigid, grid).magnitude_db();
    for (std::size_t i = 1; i < mag.size(); ++i) CHECK(mag[i] < mag[i - 1]);
}

TEST_CASE("margins of integrators") {
    const StabilityMargins one = margins(RationalTF(Polynomial{1.0}, Polynomial{1.0, 0.0}));
    REQUIRE(one.phase_margin);
    CHECK(one.phase_margin->omega == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(one.phase_margin->margin == doctest::Approx(90.0).epsilon(1e-6));
    const StabilityMargins two = margins(RationalTF(Polynomial{1.0}, Polynomial{1.0, 0.0, 0.0}));
    REQUIRE(two.phase_margin);
    CHECK(std::abs(two.phase_margin->margin) < 1e-6);
}

TEST_CASE("step response settles and unstable plants escape") {
    const LinearModel lag = realize(RationalTF(Polynomial{0.5}, Polynomial{1.0, 0.5}));  // tau = 2 s
    const StepResponse r = step_response(lag, 10.0);
    CHECK(std::abs(r.output.back() - 1.0) < 0.01);

    const LinearModel open = linearize(design_point_coefficients(), ModalDataset::beam_default(), {false, ModalCoupling::classical, true});
    StepOptions so;
    so.divergence_bound = 1e3;
    so.output = open.output_index("theta");
    const StepResponse d = step_response(open, 200.0, so);
    CHECK(d.diverged);
    CHECK(d.escape_time > 0.0);
}
