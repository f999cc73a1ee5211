#include "slv/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "slv/environment.hpp"

namespace slv {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// LinearModel
// ---------------------------------------------------------------------------

void LinearModel::validate() const {
    const auto n = a.rows();
    if (a.cols() != n || b.rows() != n || c.cols() != n || d.rows() != c.rows() || d.cols() != b.cols()) {
        throw DomainError("linear model matrix dimensions are inconsistent");
    }
    if (static_cast<Eigen::Index>(states.size()) != n || static_cast<Eigen::Index>(inputs.size()) != b.cols() ||
        static_cast<Eigen::Index>(outputs.size()) != c.rows()) {
        throw DomainError("linear model labels do not match its dimensions");
    }
}

namespace {

Eigen::Index find_label(const std::vector<std::string>& labels, const std::string& name, const char* kind) {
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw DomainError(std::string("unknown ") + kind + ": " + name);
    return static_cast<Eigen::Index>(it - labels.begin());
}

}  // namespace

Eigen::Index LinearModel::state_index(const std::string& name) const { return find_label(states, name, "state"); }
Eigen::Index LinearModel::input_index(const std::string& name) const { return find_label(inputs, name, "input"); }
Eigen::Index LinearModel::output_index(const std::string& name) const { return find_label(outputs, name, "output"); }

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

PitchCoefficients design_point_coefficients() {
    // theta/dE = k (s + z) / (s (s - p1)(s + p2)), dE in degrees.
    constexpr double k = -0.017725;
    constexpr double z = 0.02853;
    constexpr double p1 = 0.4067;
    constexpr double p2 = 0.4557;

    PitchCoefficients c;
    // s^2 - (Z_a/V) s - M_a = (s - p1)(s + p2)
    c.z_alpha_v = -(p2 - p1);
    c.m_alpha = p1 * p2;
    // M_d s + (M_a Z_d/V - M_d Z_a/V) = k (s + z)
    const double m_delta_deg = k;
    const double z_delta_v_deg = m_delta_deg * (z + c.z_alpha_v) / c.m_alpha;
    c.m_delta = m_delta_deg * kRadToDeg;
    c.z_delta_v = z_delta_v_deg * kRadToDeg;

    const MassProperties mp = mass_properties(0.5);
    const EngineLayout layout = EngineLayout::falcon9();
    c.mass = mp.mass;
    c.iyy = mp.inertia(1, 1);
    c.thrust = -c.m_delta * c.iyy / (layout.nozzle_station - mp.x_cg);
    c.velocity = c.thrust / (c.mass * c.z_delta_v);
    return c;
}

RollCoefficients design_point_roll() {
    const PitchCoefficients p = design_point_coefficients();
    const MassProperties mp = mass_properties(0.5);
    const EngineLayout layout = EngineLayout::falcon9();
    RollCoefficients r;
    r.l_p = 0.0;
    r.l_delta_a = 8.0 * layout.ring_radius * (p.thrust / kEngineCount) / mp.inertia(0, 0);
    return r;
}

namespace {

struct Condition {
    MassProperties mass;
    AtmosphereState atm;
    double thrust;  // N, all engines
};

Condition evaluate_condition(const FlightCondition& fc, const MassModel& mass) {
    if (!(fc.speed > kMinAirspeed)) throw LinearizationError("airspeed too low to linearize");
    Condition c;
    c.mass = mass(mass.fuel_fraction_at(fc.time));
    c.atm = atmosphere(fc.altitude);
    c.thrust = kEngineCount * engine_thrust(c.atm.pressure_kpa) * 1000.0;
    return c;
}

}  // namespace

PitchCoefficients coefficients_at(const FlightCondition& fc, const AeroTables& aero, const MassModel& mass,
                                  const EngineLayout& layout) {
    const Condition c = evaluate_condition(fc, mass);
    const double h = 1e-4;
    auto loads = [&](double alpha) {
        return aero_forces(fc.speed * Vec3(std::cos(alpha), 0.0, std::sin(alpha)), Vec3::Zero(), c.atm, aero);
    };
    const AeroLoads up = loads(fc.alpha + h);
    const AeroLoads down = loads(fc.alpha - h);
    const double iyy = c.mass.inertia(1, 1);

    PitchCoefficients p;
    p.z_alpha_v = (up.force.z() - down.force.z()) / (2.0 * h) / c.mass.mass / fc.speed;
    p.m_alpha = (up.moment.y() - down.moment.y()) / (2.0 * h) / iyy;
    // F_z = -T sin(eta), tau_y = -(L - x_cg) T sin(eta) for a common pitch deflection.
    p.z_delta_v = -c.thrust / c.mass.mass / fc.speed;
    p.m_delta = -c.thrust * (layout.nozzle_station - c.mass.x_cg) / iyy;
    p.velocity = fc.speed;
    p.mass = c.mass.mass;
    p.iyy = iyy;
    p.thrust = c.thrust;
    return p;
}

RollCoefficients roll_coefficients_at(const FlightCondition& fc, const AeroTables& aero, const MassModel& mass,
                                      const EngineLayout& layout) {
    const Condition c = evaluate_condition(fc, mass);
    const double h = 1e-4;
    const Vec3 v = fc.speed * Vec3(std::cos(fc.alpha), 0.0, std::sin(fc.alpha));
    const double up = aero_forces(v, Vec3(h, 0.0, 0.0), c.atm, aero).moment.x();
    const double down = aero_forces(v, Vec3(-h, 0.0, 0.0), c.atm, aero).moment.x();
    const double jxx = c.mass.inertia(0, 0);
    RollCoefficients r;
    r.l_p = (up - down) / (2.0 * h) / jxx;
    r.l_delta_a = 8.0 * layout.ring_radius * (c.thrust / kEngineCount) / jxx;
    return r;
}

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

LinearModel linearize(const PitchCoefficients& k, const ModalDataset& modal, const LinearizeOptions& options) {
    if (!(k.velocity > 0.0)) throw LinearizationError("linearization needs a positive airspeed");
    const Eigen::Index nf = options.flexible ? static_cast<Eigen::Index>(modal.size()) : 0;
    const Eigen::Index n = 3 + 2 * nf;
    const double in = options.input_in_degrees ? kDegToRad : 1.0;

    LinearModel m;
    m.a = Eigen::MatrixXd::Zero(n, n);
    m.b = Eigen::MatrixXd::Zero(n, 1);
    m.c = Eigen::MatrixXd::Zero(3, n);
    m.d = Eigen::MatrixXd::Zero(3, 1);
    m.states = {"alpha", "q", "theta"};
    m.inputs = {options.input_in_degrees ? "dE_deg" : "dE"};
    m.outputs = {"theta", "theta_m", "q_m"};

    m.a(0, 0) = k.z_alpha_v;
    m.a(0, 1) = 1.0;
    m.a(1, 0) = k.m_alpha;
    m.a(2, 1) = 1.0;
    m.b(0, 0) = k.z_delta_v * in;
    m.b(1, 0) = k.m_delta * in;
    m.c(0, 2) = 1.0;
    m.c(1, 2) = 1.0;
    m.c(2, 1) = 1.0;

    if (nf > 0) {
        if (!(k.iyy > 0.0)) throw LinearizationError("flexible linearization needs I_y");
        for (Eigen::Index r = 0; r < nf; ++r) m.states.push_back("xi_" + std::to_string(r + 1));
        for (Eigen::Index r = 0; r < nf; ++r) m.states.push_back("xi_dot_" + std::to_string(r + 1));
        const double m_z_delta = k.mass * k.z_delta_v * k.velocity;
        const double arm_force = options.coupling == ModalCoupling::classical ? m_z_delta : k.thrust;
        for (Eigen::Index r = 0; r < nf; ++r) {
            const Mode& mode = modal.modes[static_cast<std::size_t>(r)];
            const Eigen::Index xi = 3 + r;
            const Eigen::Index xd = 3 + nf + r;
            const double sigma = mode.slope_z_t;
            const double phi = mode.phi_z;

            m.a(0, xi) = k.z_delta_v * sigma;
            m.a(1, xi) = k.m_delta * sigma + arm_force * phi / k.iyy;
            m.a(xi, xd) = 1.0;
            m.a(xd, xi) = -mode.frequency * mode.frequency;
            m.a(xd, xd) = -2.0 * mode.damping * mode.frequency;
            if (options.coupling == ModalCoupling::classical) {
                m.b(xd, 0) = m_z_delta * sigma * in;
            } else {
                // Lateral nozzle force -T (dE + sigma_T^T xi) projected on the mode.
                m.b(xd, 0) = -k.thrust * phi * in;
                for (Eigen::Index j = 0; j < nf; ++j) {
                    m.a(xd, 3 + j) += -k.thrust * phi * modal.modes[static_cast<std::size_t>(j)].slope_z_t;
                }
            }
            m.c(1, xi) = mode.slope_z_g;
            m.c(2, xd) = mode.slope_z_g;
        }
    }
    return m;
}

LinearModel linearize_roll(const RollCoefficients& k, bool input_in_degrees) {
    const double in = input_in_degrees ? kDegToRad : 1.0;
    LinearModel m;
    m.a = Eigen::MatrixXd::Zero(2, 2);
    m.a(0, 1) = 1.0;
    m.a(1, 1) = k.l_p;
    m.b = Eigen::MatrixXd::Zero(2, 1);
    m.b(1, 0) = k.l_delta_a * in;
    m.c = Eigen::MatrixXd::Identity(2, 2);
    m.d = Eigen::MatrixXd::Zero(2, 1);
    m.states = {"phi", "p"};
    m.inputs = {input_in_degrees ? "dA_deg" : "dA"};
    m.outputs = {"phi", "p"};
    return m;
}

// ---------------------------------------------------------------------------
// Transfer functions
// ---------------------------------------------------------------------------

Polynomial characteristic_polynomial(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    if (n == 0) return Polynomial{1.0};
    Eigen::MatrixXd h = a;
    if (n > 2) h = Eigen::HessenbergDecomposition<Eigen::MatrixXd>(a).matrixH();

    using Ld = long double;
    // p[k] holds det(sI - H[0:k, 0:k]), ascending coefficients.
    std::vector<std::vector<Ld>> p(static_cast<std::size_t>(n) + 1);
    p[0] = {1.0L};
    for (Eigen::Index k = 1; k <= n; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        std::vector<Ld> next(ku + 1, 0.0L);
        const Ld hkk = h(k - 1, k - 1);
        for (std::size_t i = 0; i < p[ku - 1].size(); ++i) {
            next[i + 1] += p[ku - 1][i];
            next[i] -= hkk * p[ku - 1][i];
        }
        Ld prod = 1.0L;
        for (Eigen::Index i = k - 1; i >= 1; --i) {
            prod *= static_cast<Ld>(h(i, i - 1));
            const Ld coef = static_cast<Ld>(h(i - 1, k - 1)) * prod;
            if (coef == 0.0L) continue;
            const auto& q = p[static_cast<std::size_t>(i - 1)];
            for (std::size_t j = 0; j < q.size(); ++j) next[j] -= coef * q[j];
        }
        p[ku] = std::move(next);
    }
    std::vector<double> desc(p.back().rbegin(), p.back().rend());
    std::vector<double> out;
    out.reserve(desc.size());
    for (auto v : desc) out.push_back(static_cast<double>(v));
    return Polynomial(std::move(out));
}

namespace {

// Indices of states both reachable from `input` and observable from any of `outputs`.
std::vector<Eigen::Index> structural_core(const LinearModel& m, Eigen::Index input,
                                          const std::vector<Eigen::Index>& outputs) {
    const Eigen::Index n = m.a.rows();
    std::vector<bool> reach(static_cast<std::size_t>(n), false);
    std::vector<bool> obs(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (m.b(i, input) != 0.0) {
            reach[static_cast<std::size_t>(i)] = true;
            stack.push_back(i);
        }
    }
    while (!stack.empty()) {
        const Eigen::Index j = stack.back();
        stack.pop_back();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (m.a(i, j) != 0.0 && !reach[static_cast<std::size_t>(i)]) {
                reach[static_cast<std::size_t>(i)] = true;
                stack.push_back(i);
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index o : outputs) {
            if (m.c(o, i) != 0.0 && !obs[static_cast<std::size_t>(i)]) {
                obs[static_cast<std::size_t>(i)] = true;
                stack.push_back(i);
            }
        }
    }
    while (!stack.empty()) {
        const Eigen::Index j = stack.back();
        stack.pop_back();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (m.a(j, i) != 0.0 && !obs[static_cast<std::size_t>(i)]) {
                obs[static_cast<std::size_t>(i)] = true;
                stack.push_back(i);
            }
        }
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (reach[static_cast<std::size_t>(i)] && obs[static_cast<std::size_t>(i)]) keep.push_back(i);
    }
    return keep;
}

LinearModel select_states(const LinearModel& m, const std::vector<Eigen::Index>& keep) {
    const auto k = static_cast<Eigen::Index>(keep.size());
    LinearModel r;
    r.a.resize(k, k);
    r.b.resize(k, m.b.cols());
    r.c.resize(m.c.rows(), k);
    r.d = m.d;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) r.a(i, j) = m.a(keep[i], keep[j]);
        r.b.row(i) = m.b.row(keep[i]);
        r.c.col(i) = m.c.col(keep[i]);
        r.states.push_back(m.states.empty() ? std::string() : m.states[static_cast<std::size_t>(keep[i])]);
    }
    r.inputs = m.inputs;
    r.outputs = m.outputs;
    return r;
}

// Numerator of c (sI - A)^-1 b + d over det(sI - A).
Polynomial siso_numerator(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::RowVectorXd& c, double d,
                          const Polynomial& den) {
    const Polynomial shifted = characteristic_polynomial(a - b * c);
    // det(sI - A + b c) - det(sI - A); drop rounding residue relative to the subtracted terms.
    const int n = den.degree();
    std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
    for (int p = 0; p <= n; ++p) {
        const double x = shifted.coeff(p);
        const double y = den.coeff(p);
        // Both polynomials are monic, so the s^n terms cancel exactly.
        double v = p == n ? 0.0 : x - y;
        if (std::abs(v) <= 1e-10 * std::max(std::abs(x), std::abs(y))) v = 0.0;
        out[static_cast<std::size_t>(n - p)] = v + d * y;
    }
    return Polynomial(std::move(out));
}

}  // namespace

RationalTF tf_from_model(const LinearModel& model, Eigen::Index input, Eigen::Index output, const TfOptions& options) {
    model.validate();
    if (input < 0 || input >= model.b.cols() || output < 0 || output >= model.c.rows()) {
        throw DomainError("tf_from_model: input/output index out of range");
    }
    LinearModel m = model;
    if (options.structural_reduction) m = select_states(model, structural_core(model, input, {output}));
    const double d = model.d(output, input);
    if (m.a.rows() == 0) return RationalTF::constant(d);

    const Polynomial den = characteristic_polynomial(m.a);
    const Polynomial num = siso_numerator(m.a, m.b.col(input), m.c.row(output), d, den);
    RationalTF tf(num, den, 1.0);
    if (options.cancel_tolerance > 0.0 && !num.is_zero()) tf = tf.minreal(options.cancel_tolerance);
    return tf;
}

RationalTF tf_from_model(const LinearModel& model, const std::string& input, const std::string& output,
                         const TfOptions& options) {
    return tf_from_model(model, model.input_index(input), model.output_index(output), options);
}

LinearModel realize(const RationalTF& tf) {
    if (!tf.is_proper()) throw DomainError("realize: transfer function is improper");
    const Polynomial& den = tf.den();
    const int n = den.degree();
    const double lead = den.leading();
    const Polynomial num = tf.numerator() * (1.0 / lead);
    const Polynomial monic = den * (1.0 / lead);
    const double d = num.coeff(n);
    const Polynomial rem = num - monic * d;

    LinearModel m;
    m.a = Eigen::MatrixXd::Zero(n, n);
    m.b = Eigen::MatrixXd::Zero(n, 1);
    m.c = Eigen::MatrixXd::Zero(1, n);
    m.d = Eigen::MatrixXd::Constant(1, 1, d);
    for (int i = 0; i + 1 < n; ++i) m.a(i, i + 1) = 1.0;
    for (int j = 0; j < n; ++j) {
        m.a(n - 1, j) = -monic.coeff(j);
        m.c(0, j) = rem.coeff(j);
    }
    if (n > 0) m.b(n - 1, 0) = 1.0;
    for (int i = 0; i < n; ++i) m.states.push_back("x" + std::to_string(i + 1));
    m.inputs = {"u"};
    m.outputs = {"y"};
    return m;
}

// ---------------------------------------------------------------------------
// Frequency domain
// ---------------------------------------------------------------------------

std::vector<double> FrequencyResponse::magnitude_db() const {
    std::vector<double> out;
    out.reserve(response.size());
    for (const cplx& v : response) out.push_back(20.0 * std::log10(std::abs(v)));
    return out;
}

std::vector<double> FrequencyResponse::phase_deg() const {
    std::vector<double> out;
    out.reserve(response.size());
    double offset = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < response.size(); ++i) {
        const double raw = std::arg(response[i]) * kRadToDeg;
        if (i > 0) {
            const double jump = raw + offset - prev;
            if (jump > 180.0) offset -= 360.0 * std::round(jump / 360.0);
            if (jump < -180.0) offset += 360.0 * std::round(-jump / 360.0);
        }
        prev = raw + offset;
        out.push_back(prev);
    }
    return out;
}

std::vector<double> log_grid(double w_min, double w_max, std::size_t count) {
    if (!(w_min > 0.0) || !(w_max > w_min) || count < 2) throw DomainError("log_grid: invalid range");
    std::vector<double> w(count);
    const double a = std::log10(w_min);
    const double b = std::log10(w_max);
    for (std::size_t i = 0; i < count; ++i) {
        w[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return w;
}

namespace {

void check_grid(const std::vector<double>& w) {
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (!(w[i] > w[i - 1])) throw DomainError("frequency grid must be strictly increasing");
    }
}

}  // namespace

FrequencyResponse freq_response(const RationalTF& tf, const std::vector<double>& omega) {
    check_grid(omega);
    FrequencyResponse r;
    r.omega = omega;
    for (double w : omega) {
        const cplx s(0.0, w);
        const cplx den = tf.den()(s);
        if (den == 0.0) {
            r.response.emplace_back(std::numeric_limits<double>::infinity(), 0.0);
            r.singular.push_back(true);
            continue;
        }
        const cplx v = tf.gain() * tf.num()(s) / den;
        r.response.push_back(v);
        r.singular.push_back(!std::isfinite(v.real()) || !std::isfinite(v.imag()));
    }
    return r;
}

FrequencyResponse freq_response(const LinearModel& model, Eigen::Index input, Eigen::Index output,
                                const std::vector<double>& omega) {
    model.validate();
    check_grid(omega);
    const Eigen::Index n = model.a.rows();
    const Eigen::MatrixXcd a = model.a.cast<cplx>();
    const Eigen::VectorXcd b = model.b.col(input).cast<cplx>();
    const Eigen::RowVectorXcd c = model.c.row(output).cast<cplx>();
    FrequencyResponse r;
    r.omega = omega;
    for (double w : omega) {
        const Eigen::MatrixXcd m = cplx(0.0, w) * Eigen::MatrixXcd::Identity(n, n) - a;
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
        lu.setThreshold(std::numeric_limits<double>::min());
        if (n > 0 && !lu.isInvertible()) {
            r.response.emplace_back(std::numeric_limits<double>::infinity(), 0.0);
            r.singular.push_back(true);
            continue;
        }
        cplx v = model.d(output, input);
        if (n > 0) v += (c * lu.solve(b))(0);
        r.response.push_back(v);
        r.singular.push_back(!std::isfinite(v.real()) || !std::isfinite(v.imag()));
    }
    return r;
}

StabilityMargins margins(const std::function<cplx(double)>& loop, const MarginOptions& o) {
    if (!(o.w_min > 0.0) || !(o.w_max > o.w_min)) throw DomainError("margins: invalid frequency range");
    const double decades = std::log10(o.w_max / o.w_min);
    const auto count = static_cast<std::size_t>(std::ceil(decades * o.points_per_decade)) + 1;
    const std::vector<double> w = log_grid(o.w_min, o.w_max, count);
    std::vector<cplx> l(count);
    for (std::size_t i = 0; i < count; ++i) l[i] = loop(w[i]);

    auto bisect = [&](double lo, double hi, auto&& f) {
        double flo = f(loop(lo));
        while (hi - lo > o.tolerance) {
            const double mid = std::sqrt(lo * hi);
            const double fm = f(loop(mid));
            if ((fm < 0.0) == (flo < 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return std::sqrt(lo * hi);
    };
    auto gain_f = [](cplx v) { return std::abs(v) - 1.0; };
    auto imag_f = [](cplx v) { return v.imag(); };

    StabilityMargins m;
    for (std::size_t i = 0; i + 1 < count; ++i) {
        const double g0 = gain_f(l[i]);
        const double g1 = gain_f(l[i + 1]);
        if (std::isfinite(g0) && std::isfinite(g1) && ((g0 < 0.0) != (g1 < 0.0))) {
            const double wc = bisect(w[i], w[i + 1], gain_f);
            double pm = std::arg(loop(wc)) * kRadToDeg + 180.0;
            if (pm > 180.0) pm -= 360.0;
            m.gain_crossings.push_back({wc, pm});
        }
        const double i0 = l[i].imag();
        const double i1 = l[i + 1].imag();
        if (std::isfinite(i0) && std::isfinite(i1) && i0 * i1 < 0.0 && (l[i].real() < 0.0 || l[i + 1].real() < 0.0)) {
            const double wp = bisect(w[i], w[i + 1], imag_f);
            const cplx v = loop(wp);
            if (v.real() < 0.0) m.phase_crossings.push_back({wp, -20.0 * std::log10(std::abs(v))});
        }
    }
    for (const auto& c : m.gain_crossings) {
        if (!m.phase_margin || c.margin < m.phase_margin->margin) m.phase_margin = c;
    }
    for (const auto& c : m.phase_crossings) {
        if (!m.gain_margin || std::abs(c.margin) < std::abs(m.gain_margin->margin)) m.gain_margin = c;
        if (c.margin > 0.0 && (!m.upper_gain_margin || c.margin < m.upper_gain_margin->margin)) m.upper_gain_margin = c;
        if (c.margin <= 0.0 && (!m.lower_gain_margin || c.margin > m.lower_gain_margin->margin)) m.lower_gain_margin = c;
    }
    return m;
}

StabilityMargins margins(const RationalTF& loop, const MarginOptions& options) {
    return margins([&](double w) { return loop.at_frequency(w); }, options);
}

// ---------------------------------------------------------------------------
// Pitch loop
// ---------------------------------------------------------------------------

RationalTF pitch_loop(const LinearModel& plant, const ControllerGains& g, const RationalTF& filter,
                      FilterPlacement placement) {
    const Eigen::Index th = plant.output_index("theta_m");
    const Eigen::Index q = plant.output_index("q_m");
    const LinearModel core = select_states(plant, structural_core(plant, 0, {th, q}));
    const TfOptions raw{false, 0.0};
    const RationalTF g_th = tf_from_model(core, 0, th, raw);
    const RationalTF g_q = tf_from_model(core, 0, q, raw);
    // Both share det(sI - A).
    const Polynomial& a = g_th.den();
    const Polynomial pi_num = Polynomial{1.0, g.integral_weight} * g.k_pi;  // K_PI (s + w) / s
    const Polynomial s{1.0, 0.0};
    const Polynomial fn = filter.numerator();
    const Polynomial& fd = filter.den();

    Polynomial num;
    switch (placement) {
        case FilterPlacement::feedback:
        case FilterPlacement::forward:
            num = fn * (pi_num * g_th.numerator() + s * g_q.numerator() * g.k_p);
            break;
        case FilterPlacement::rate_only:
            num = pi_num * g_th.numerator() * fd + s * g_q.numerator() * fn * g.k_p;
            break;
    }
    return RationalTF(num, fd * s * a, 1.0);
}

namespace {

// Series connection of per-section realizations; far better scaled than one companion form
// for lightly damped high-order filters.
LinearModel realize_cascade(const RationalTF& tf) {
    Eigen::MatrixXd a(0, 0);
    Eigen::MatrixXd b(0, 1);
    Eigen::RowVectorXd c(0);
    double d = 1.0;
    for (const RationalTF& section : second_order_sections(tf)) {
        const LinearModel s = realize(section);
        const Eigen::Index n0 = a.rows();
        const Eigen::Index ns = s.a.rows();
        Eigen::MatrixXd na = Eigen::MatrixXd::Zero(n0 + ns, n0 + ns);
        na.topLeftCorner(n0, n0) = a;
        na.bottomRightCorner(ns, ns) = s.a;
        na.bottomLeftCorner(ns, n0) = s.b * c;
        Eigen::MatrixXd nb(n0 + ns, 1);
        nb.topRows(n0) = b;
        nb.bottomRows(ns) = s.b * d;
        Eigen::RowVectorXd nc(n0 + ns);
        const double ds = s.d(0, 0);
        nc.head(n0) = ds * c;
        nc.tail(ns) = s.c.row(0);
        a = na;
        b = nb;
        c = nc;
        d *= ds;
    }
    LinearModel m;
    m.a = a;
    m.b = b;
    m.c = c;
    m.d = Eigen::MatrixXd::Constant(1, 1, d);
    for (Eigen::Index i = 0; i < a.rows(); ++i) m.states.push_back("x" + std::to_string(i + 1));
    m.inputs = {"u"};
    m.outputs = {"y"};
    return m;
}

// A signal expressed as a linear function of the closed-loop state and the reference.
struct Signal {
    Eigen::RowVectorXd x;
    double r = 0.0;
};

}  // namespace

LinearModel close_pitch_loop(const LinearModel& plant, const ControllerGains& g, const RationalTF& filter,
                             FilterPlacement placement) {
    plant.validate();
    const LinearModel f = realize_cascade(filter);
    const Eigen::Index np = plant.a.rows();
    const Eigen::Index nf = f.a.rows();
    const bool filter_theta = placement == FilterPlacement::feedback;
    const bool filter_rate = placement != FilterPlacement::forward;
    const bool filter_out = placement == FilterPlacement::forward;

    Eigen::Index n = np;
    const Eigen::Index i_th = n;
    if (filter_theta) n += nf;
    const Eigen::Index i_q = n;
    if (filter_rate) n += nf;
    const Eigen::Index i_u = n;
    if (filter_out) n += nf;
    const Eigen::Index i_int = n;
    n += 1;

    LinearModel cl;
    cl.a = Eigen::MatrixXd::Zero(n, n);
    cl.b = Eigen::MatrixXd::Zero(n, 1);

    auto plant_row = [&](Eigen::Index out) {
        Signal s;
        s.x = Eigen::RowVectorXd::Zero(n);
        s.x.head(np) = plant.c.row(out);
        return s;
    };
    // Adds filter dynamics driven by `in` at state offset `at`; returns the filter output.
    auto pass = [&](const Signal& in, Eigen::Index at) {
        for (Eigen::Index i = 0; i < nf; ++i) {
            cl.a.row(at + i) += f.b(i, 0) * in.x;
            cl.b(at + i, 0) += f.b(i, 0) * in.r;
            for (Eigen::Index j = 0; j < nf; ++j) cl.a(at + i, at + j) += f.a(i, j);
        }
        Signal out;
        out.x = f.d(0, 0) * in.x;
        out.r = f.d(0, 0) * in.r;
        for (Eigen::Index j = 0; j < nf; ++j) out.x(at + j) += f.c(0, j);
        return out;
    };

    Signal theta = plant_row(plant.output_index("theta_m"));
    Signal rate = plant_row(plant.output_index("q_m"));
    if (filter_theta) theta = pass(theta, i_th);
    if (filter_rate) rate = pass(rate, i_q);

    Signal e;
    e.x = -theta.x;
    e.r = 1.0 - theta.r;
    cl.a.row(i_int) += e.x;
    cl.b(i_int, 0) += e.r;

    Signal u;
    u.x = g.k_pi * e.x - g.k_p * rate.x;
    u.x(i_int) += g.k_pi * g.integral_weight;
    u.r = g.k_pi * e.r - g.k_p * rate.r;
    if (filter_out) u = pass(u, i_u);

    cl.a.topLeftCorner(np, np) += plant.a;
    cl.a.topRows(np) += plant.b.col(0) * u.x;
    cl.b.topRows(np) += plant.b.col(0) * u.r;

    cl.c = Eigen::MatrixXd::Zero(plant.c.rows(), n);
    cl.c.leftCols(np) = plant.c;
    cl.d = Eigen::MatrixXd::Zero(plant.c.rows(), 1);
    cl.states = plant.states;
    for (Eigen::Index i = np; i < n - 1; ++i) cl.states.push_back("filter_" + std::to_string(i - np + 1));
    cl.states.push_back("integral");
    cl.inputs = {"theta_ref"};
    cl.outputs = plant.outputs;
    return cl;
}

double spectral_abscissa(const Eigen::MatrixXd& a) {
    if (a.rows() == 0) return -std::numeric_limits<double>::infinity();
    const Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

// ---------------------------------------------------------------------------
// Time domain
// ---------------------------------------------------------------------------

StepResponse step_response(const LinearModel& model, double duration, const StepOptions& o) {
    model.validate();
    if (!(duration > 0.0) || !(o.dt > 0.0)) throw DomainError("step_response: duration and dt must be positive");
    const Eigen::Index n = model.a.rows();
    const Eigen::VectorXd b = model.b.col(o.input);
    const Eigen::RowVectorXd c = model.c.row(o.output);
    const double d = model.d(o.output, o.input);

    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    Rk4Integrator rk(x.size());
    auto deriv = [&](double, std::span<const double> s, std::span<double> dx) {
        const Eigen::Map<const Eigen::VectorXd> xs(s.data(), n);
        Eigen::Map<Eigen::VectorXd> out(dx.data(), n);
        out.noalias() = model.a * xs + b;
    };

    StepResponse r;
    const auto steps = static_cast<std::size_t>(std::llround(duration / o.dt));
    r.time.reserve(steps + 1);
    r.output.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * o.dt;
        const double y = c.dot(Eigen::Map<const Eigen::VectorXd>(x.data(), n)) + d;
        r.time.push_back(t);
        r.output.push_back(y);
        if (!std::isfinite(y) || std::abs(y) > o.divergence_bound) {
            r.diverged = true;
            r.escape_time = t;
            break;
        }
        if (k == steps) break;
        try {
            rk.step(std::span<double>(x), deriv, t, o.dt);
        } catch (const PropagationError&) {
            r.diverged = true;
            r.escape_time = t;
            break;
        }
    }
    return r;
}

StepMetrics step_metrics(const StepResponse& resp, double final_value) {
    StepMetrics m;
    m.final_value = final_value;
    const auto& t = resp.time;
    const auto& y = resp.output;
    if (t.empty() || final_value == 0.0) return m;

    const double sign = final_value > 0.0 ? 1.0 : -1.0;
    auto crossing = [&](double level) {
        for (std::size_t i = 1; i < y.size(); ++i) {
            if (sign * y[i] >= sign * level) {
                const double y0 = y[i - 1];
                const double y1 = y[i];
                const double frac = y1 == y0 ? 0.0 : (level - y0) / (y1 - y0);
                return t[i - 1] + frac * (t[i] - t[i - 1]);
            }
        }
        return std::numeric_limits<double>::infinity();
    };
    m.rise_time = crossing(0.9 * final_value) - crossing(0.1 * final_value);

    std::size_t peak = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (sign * y[i] > sign * y[peak]) peak = i;
    }
    m.peak_time = t[peak];
    m.overshoot = std::max(0.0, (sign * y[peak] - std::abs(final_value)) / std::abs(final_value) * 100.0);

    const double band = 0.02 * std::abs(final_value);
    m.settling_time = 0.0;
    for (std::size_t i = y.size(); i-- > 0;) {
        if (std::abs(y[i] - final_value) > band) {
            m.settling_time = i + 1 < t.size() ? t[i + 1] : t[i];
            break;
        }
    }
    return m;
}

double dc_gain(const LinearModel& model, Eigen::Index input, Eigen::Index output) {
    model.validate();
    const double d = model.d(output, input);
    if (model.a.rows() == 0) return d;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(model.a);
    lu.setThreshold(std::numeric_limits<double>::min());
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    return d - (model.c.row(output) * lu.solve(model.b.col(input)))(0);
}

}  // namespace slv
