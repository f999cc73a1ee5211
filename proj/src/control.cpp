#include "slv/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace slv {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// RationalTF
// ---------------------------------------------------------------------------

RationalTF::RationalTF(Polynomial num, Polynomial den, double gain)
    : num_(std::move(num)), den_(std::move(den)), gain_(gain) {
    if (den_.is_zero()) throw DomainError("transfer function denominator is zero");
}

RationalTF RationalTF::from_zpk(const std::vector<cplx>& zeros, const std::vector<cplx>& poles, double gain) {
    return RationalTF(Polynomial::from_roots(zeros), Polynomial::from_roots(poles), gain);
}

RationalTF RationalTF::pi(double k, double integral_weight) {
    return RationalTF(Polynomial{1.0, integral_weight}, Polynomial{1.0, 0.0}, k);
}

cplx RationalTF::operator()(cplx s) const { return gain_ * num_(s) / den_(s); }

double RationalTF::dc_gain() const {
    const double d = den_.coeff(0);
    const double n = gain_ * num_.coeff(0);
    if (d == 0.0) {
        if (n == 0.0) return std::numeric_limits<double>::quiet_NaN();
        return n > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return n / d;
}

RationalTF RationalTF::normalized() const {
    if (num_.is_zero()) return RationalTF(Polynomial{0.0}, Polynomial{1.0}, 0.0);
    const double k = gain_ * num_.leading() / den_.leading();
    return RationalTF(num_ * (1.0 / num_.leading()), den_ * (1.0 / den_.leading()), k);
}

RationalTF RationalTF::minreal(double tol) const {
    if (num_.is_zero()) return RationalTF(Polynomial{0.0}, Polynomial{1.0}, 0.0);
    auto zeros = num_.roots();
    auto poles = den_.roots();
    std::vector<cplx> kept_zeros;
    for (const cplx& z : zeros) {
        auto best = poles.end();
        double best_dist = std::numeric_limits<double>::infinity();
        for (auto it = poles.begin(); it != poles.end(); ++it) {
            const double d = std::abs(*it - z);
            if (d < best_dist) {
                best_dist = d;
                best = it;
            }
        }
        const double scale = std::max(1.0, std::abs(z));
        if (best != poles.end() && best_dist <= tol * scale) {
            poles.erase(best);
        } else {
            kept_zeros.push_back(z);
        }
    }
    if (kept_zeros.size() == zeros.size()) return *this;
    const double k = gain_ * num_.leading() / den_.leading();
    return RationalTF(Polynomial::from_roots(kept_zeros), Polynomial::from_roots(poles), k);
}

RationalTF RationalTF::operator*(const RationalTF& other) const {
    return RationalTF(num_ * other.num_, den_ * other.den_, gain_ * other.gain_);
}

RationalTF RationalTF::operator+(const RationalTF& other) const {
    const Polynomial n = numerator() * other.den_ + other.numerator() * den_;
    return RationalTF(n, den_ * other.den_, 1.0);
}

RationalTF feedback(const RationalTF& loop) {
    const Polynomial n = loop.numerator();
    return RationalTF(n, loop.den() + n, 1.0);
}

// ---------------------------------------------------------------------------
// Notch
// ---------------------------------------------------------------------------

std::vector<double> distinct_frequencies(const ModalDataset& modal, double tolerance) {
    std::vector<double> w;
    for (const Mode& m : modal.modes) w.push_back(m.frequency);
    std::sort(w.begin(), w.end());
    std::vector<double> out;
    for (double v : w) {
        if (out.empty() || std::abs(v - out.back()) > tolerance * v) out.push_back(v);
    }
    return out;
}

RationalTF design_notch(const ModalDataset& modal, const NotchOptions& options) {
    const auto freqs = distinct_frequencies(modal, options.merge_tolerance);
    if (freqs.empty()) throw DesignError("notch design needs at least one modal frequency");
    if (options.zero_damping == options.pole_damping) {
        throw DesignError("notch zero and pole damping coincide; the section cancels");
    }
    if (!(options.zero_damping >= 0.0) || !(options.pole_damping > 0.0)) {
        throw DesignError("notch damping must be non-negative (zeros) and positive (poles)");
    }
    Polynomial num{1.0};
    Polynomial den{1.0};
    for (double w : freqs) {
        if (!(w > 0.0)) throw DesignError("notch frequency must be positive");
        num = num * Polynomial{1.0, 2.0 * options.zero_damping * w, w * w};
        den = den * Polynomial{1.0, 2.0 * options.pole_damping * w, w * w};
    }
    return RationalTF(num, den, 1.0);
}

// ---------------------------------------------------------------------------
// Elliptic
// ---------------------------------------------------------------------------

namespace {

constexpr double kEps = 2.220446049250313e-16;

double ellipk(double m) { return std::comp_ellint_1(std::sqrt(m)); }

// Complete integral at parameter 1 - m1.
double ellipkm1(double m1) { return std::comp_ellint_1(std::sqrt(1.0 - m1)); }

// Solves the degree equation for the modulus of an order-n elliptic filter via the nome.
double ellip_degree(int n, double m1) {
    const double k1 = ellipk(m1);
    const double k1p = ellipkm1(m1);
    const double q1 = std::exp(-kPi * k1p / k1);
    const double q = std::pow(q1, 1.0 / n);
    double num = 0.0;
    for (int i = 0; i <= 7; ++i) num += std::pow(q, i * (i + 1));
    double den = 0.0;
    for (int i = 1; i <= 8; ++i) den += std::pow(q, i * i);
    den = 1.0 + 2.0 * den;
    return 16.0 * q * std::pow(num / den, 4);
}

double pow10m1(double x) { return std::expm1(x * std::log(10.0)); }

}  // namespace

JacobiElliptic jacobi_elliptic(double u, double m) {
    if (m < 0.0 || m > 1.0) throw DomainError("jacobi_elliptic: parameter must lie in [0, 1]");
    if (m < 1e-9) {
        const double s = std::sin(u);
        const double c = std::cos(u);
        const double t = 0.25 * m * (u - s * c);
        return {s - t * c, c + t * s, 1.0 - 0.5 * m * s * s};
    }
    if (m >= 1.0 - 1e-9) {
        const double t = std::tanh(u);
        const double sech = 1.0 / std::cosh(u);
        return {t, sech, sech};
    }
    // Descending Landen / arithmetic-geometric mean.
    double a[10];
    double c[10];
    a[0] = 1.0;
    double b = std::sqrt(1.0 - m);
    c[0] = std::sqrt(m);
    double twon = 1.0;
    int i = 0;
    while (std::abs(c[i] / a[i]) > kEps) {
        if (i > 7) break;
        const double ai = a[i];
        ++i;
        c[i] = 0.5 * (ai - b);
        const double t = std::sqrt(ai * b);
        a[i] = 0.5 * (ai + b);
        b = t;
        twon *= 2.0;
    }
    double phi = twon * a[i] * u;
    double prev = phi;
    do {
        const double t = c[i] * std::sin(phi) / a[i];
        prev = phi;
        phi = 0.5 * (std::asin(t) + phi);
    } while (--i);
    const double sn = std::sin(phi);
    const double cn = std::cos(phi);
    return {sn, cn, cn / std::cos(phi - prev)};
}

ZpkModel elliptic_prototype(int order, double ripple_db, double stop_atten_db) {
    if (order < 1) throw DesignError("elliptic order must be >= 1");
    if (!(ripple_db > 0.0)) throw DesignError("elliptic passband ripple must be positive");
    if (!(stop_atten_db > ripple_db)) throw DesignError("stopband attenuation must exceed the passband ripple");

    ZpkModel out;
    if (order == 1) {
        const double p = -std::sqrt(1.0 / pow10m1(0.1 * ripple_db));
        out.poles = {p};
        out.gain = -p;
        return out;
    }

    const double eps_sq = pow10m1(0.1 * ripple_db);
    const double eps = std::sqrt(eps_sq);
    const double ck1_sq = eps_sq / pow10m1(0.1 * stop_atten_db);
    if (ck1_sq == 0.0) throw DesignError("elliptic stopband attenuation too large");

    const double k_val = ellipk(ck1_sq);
    const double m = ellip_degree(order, ck1_sq);
    const double capk = ellipk(m);

    std::vector<double> js;
    for (int j = 1 - order % 2; j < order; j += 2) js.push_back(j);

    std::vector<JacobiElliptic> scd;
    for (double j : js) scd.push_back(jacobi_elliptic(j * capk / order, m));

    for (const auto& e : scd) {
        if (std::abs(e.sn) > kEps) {
            const cplx z(0.0, 1.0 / (std::sqrt(m) * e.sn));
            out.zeros.push_back(z);
        }
    }
    const std::size_t nz = out.zeros.size();
    for (std::size_t i = 0; i < nz; ++i) out.zeros.push_back(std::conj(out.zeros[i]));

    // Inverse sc for the complementary parameter: sc(r, 1 - ck1_sq) = 1 / eps.
    const double r = std::ellint_1(std::sqrt(1.0 - ck1_sq), std::atan(1.0 / eps));
    const double v0 = capk * r / (order * k_val);
    const JacobiElliptic v = jacobi_elliptic(v0, 1.0 - m);

    std::vector<cplx> p;
    for (const auto& e : scd) {
        const cplx num(e.cn * e.dn * v.sn * v.cn, e.sn * v.dn);
        p.push_back(-num / (1.0 - std::pow(e.dn * v.sn, 2)));
    }
    out.poles = p;
    for (const cplx& pi : p) {
        if (order % 2 == 1) {
            if (std::abs(pi.imag()) > kEps * std::abs(pi)) out.poles.push_back(std::conj(pi));
        } else {
            out.poles.push_back(std::conj(pi));
        }
    }

    cplx prod_p = 1.0;
    for (const cplx& pi : out.poles) prod_p *= -pi;
    cplx prod_z = 1.0;
    for (const cplx& zi : out.zeros) prod_z *= -zi;
    out.gain = (prod_p / prod_z).real();
    if (order % 2 == 0) out.gain /= std::sqrt(1.0 + eps_sq);
    return out;
}

double elliptic_stopband_edge(const EllipticSpec& spec) {
    if (spec.order < 2) {
        // A first-order section only reaches the attenuation asymptotically.
        const double eps_sq = pow10m1(0.1 * spec.ripple_db);
        const double a_sq = pow10m1(0.1 * spec.stop_atten_db);
        return spec.passband_edge * std::sqrt(a_sq / eps_sq);
    }
    const double eps_sq = pow10m1(0.1 * spec.ripple_db);
    const double ck1_sq = eps_sq / pow10m1(0.1 * spec.stop_atten_db);
    const double m = ellip_degree(spec.order, ck1_sq);
    return spec.passband_edge / std::sqrt(m);
}

RationalTF design_elliptic(const EllipticSpec& spec) {
    if (!(spec.passband_edge > 0.0)) throw DesignError("elliptic passband edge must be positive");
    const ZpkModel proto = elliptic_prototype(spec.order, spec.ripple_db, spec.stop_atten_db);
    if (spec.required_stopband_edge) {
        const double ws = elliptic_stopband_edge(spec);
        if (ws > *spec.required_stopband_edge * (1.0 + 1e-12)) {
            throw DesignError("elliptic order " + std::to_string(spec.order) + " reaches " +
                              std::to_string(spec.stop_atten_db) + " dB only at " + std::to_string(ws) +
                              " rad/s, beyond the required edge");
        }
    }
    const double w = spec.passband_edge;
    std::vector<cplx> z;
    std::vector<cplx> p;
    for (const cplx& v : proto.zeros) z.push_back(v * w);
    for (const cplx& v : proto.poles) p.push_back(v * w);
    const double k = proto.gain * std::pow(w, static_cast<double>(p.size()) - static_cast<double>(z.size()));
    return RationalTF::from_zpk(z, p, k);
}

// ---------------------------------------------------------------------------
// Discretisation
// ---------------------------------------------------------------------------

void DiscreteFilter::reset() {
    for (auto& s : sections_) s.s1 = s.s2 = 0.0;
}

void DiscreteFilter::reset_to(double u) {
    double x = u;
    for (auto& s : sections_) {
        const double g = s.dc_gain();
        if (!std::isfinite(g)) {
            s.s1 = s.s2 = 0.0;
            x = 0.0;
            continue;
        }
        const double y = g * x;
        s.s2 = s.b2 * x - s.a2 * y;
        s.s1 = y - s.b0 * x;
        x = y;
    }
}

double DiscreteFilter::dc_gain() const {
    double g = 1.0;
    for (const auto& s : sections_) g *= s.dc_gain();
    return g;
}

cplx DiscreteFilter::response(double omega) const {
    const cplx zi = std::exp(cplx(0.0, -omega * dt_));
    cplx h = 1.0;
    for (const auto& s : sections_) {
        h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
    }
    return h;
}

namespace {

// Analog section n(s)/d(s) with real coefficients, degree <= 2, stored ascending: c0 + c1 s + c2 s^2.
struct AnalogSection {
    double n0 = 1.0, n1 = 0.0, n2 = 0.0;
    double d0 = 1.0, d1 = 0.0, d2 = 0.0;
    int num_degree = 0;
    int den_degree = 0;

    double natural_frequency() const { return den_degree == 2 ? std::sqrt(d0 / d2) : std::abs(d0 / d1); }
};

struct Factor {
    double c0, c1, c2;  // ascending
    int degree;
    double frequency;
};

std::vector<Factor> factors(const std::vector<cplx>& roots) {
    std::vector<Factor> out;
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        const cplx r = roots[i];
        const double tol = 1e-9 * std::max(1.0, std::abs(r));
        if (std::abs(r.imag()) <= tol) {
            out.push_back({-r.real(), 1.0, 0.0, 1, std::abs(r.real())});
            used[i] = true;
            continue;
        }
        // Find the conjugate partner.
        std::size_t best = roots.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(roots[j] - std::conj(r));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best == roots.size() || best_d > 1e-6 * std::max(1.0, std::abs(r))) {
            throw DesignError("complex root without a conjugate partner");
        }
        used[i] = used[best] = true;
        const double re = 0.5 * (r.real() + roots[best].real());
        const double mag2 = std::norm(cplx(re, 0.5 * (std::abs(r.imag()) + std::abs(roots[best].imag()))));
        out.push_back({mag2, -2.0 * re, 1.0, 2, std::sqrt(mag2)});
    }
    return out;
}

double log_distance(double a, double b) {
    if (a <= 0.0 || b <= 0.0) return std::abs(a - b);
    return std::abs(std::log(a / b));
}

Biquad bilinear(const AnalogSection& a, double c) {
    Biquad q;
    double b0, b1, b2, a0, a1, a2;
    if (a.den_degree == 2) {
        const double c2 = c * c;
        b0 = a.n2 * c2 + a.n1 * c + a.n0;
        b1 = 2.0 * (a.n0 - a.n2 * c2);
        b2 = a.n2 * c2 - a.n1 * c + a.n0;
        a0 = a.d2 * c2 + a.d1 * c + a.d0;
        a1 = 2.0 * (a.d0 - a.d2 * c2);
        a2 = a.d2 * c2 - a.d1 * c + a.d0;
    } else {
        b0 = a.n1 * c + a.n0;
        b1 = a.n0 - a.n1 * c;
        b2 = 0.0;
        a0 = a.d1 * c + a.d0;
        a1 = a.d0 - a.d1 * c;
        a2 = 0.0;
    }
    q.b0 = b0 / a0;
    q.b1 = b1 / a0;
    q.b2 = b2 / a0;
    q.a1 = a1 / a0;
    q.a2 = a2 / a0;
    return q;
}

std::vector<AnalogSection> analog_sections(const RationalTF& tf) {
    std::vector<AnalogSection> sections;
    for (const Factor& f : factors(tf.den().roots())) {
        AnalogSection s;
        s.d0 = f.c0;
        s.d1 = f.c1;
        s.d2 = f.c2;
        s.den_degree = f.degree;
        sections.push_back(s);
    }
    std::sort(sections.begin(), sections.end(),
              [](const auto& a, const auto& b) { return a.den_degree > b.den_degree; });

    if (!tf.num().is_zero()) {
        auto zf = factors(tf.num().roots());
        std::stable_sort(zf.begin(), zf.end(), [](const auto& a, const auto& b) { return a.degree > b.degree; });
        for (const Factor& f : zf) {
            AnalogSection* best = nullptr;
            double best_d = std::numeric_limits<double>::infinity();
            for (auto& s : sections) {
                if (s.num_degree + f.degree > s.den_degree) continue;
                const double d = log_distance(f.frequency, s.natural_frequency());
                if (d < best_d) {
                    best_d = d;
                    best = &s;
                }
            }
            if (best == nullptr) throw DesignError("could not pair zeros with poles");
            if (best->num_degree == 0) {
                best->n0 = f.c0;
                best->n1 = f.c1;
                best->n2 = f.c2;
            } else {
                // Existing first-order numerator times another first-order factor.
                const double a0 = best->n0, a1 = best->n1;
                best->n0 = a0 * f.c0;
                best->n1 = a0 * f.c1 + a1 * f.c0;
                best->n2 = a1 * f.c1;
            }
            best->num_degree += f.degree;
        }
    }
    return sections;
}

double section_gain(const RationalTF& tf) {
    if (tf.num().is_zero()) return 0.0;
    return tf.gain() * tf.num().leading() / tf.den().leading();
}

}  // namespace

std::vector<RationalTF> second_order_sections(const RationalTF& tf) {
    if (!tf.is_proper()) throw DesignError("second_order_sections: transfer function is improper");
    std::vector<RationalTF> out;
    for (const auto& s : analog_sections(tf)) {
        out.emplace_back(Polynomial{s.n2, s.n1, s.n0}, Polynomial{s.d2, s.d1, s.d0}, 1.0);
    }
    const double k = section_gain(tf);
    if (out.empty()) return {RationalTF::constant(k)};
    out.front() = out.front() * k;
    return out;
}

DiscreteFilter discretize(const RationalTF& tf, double dt, const DiscretizeOptions& options) {
    if (!(dt > 0.0)) throw DesignError("discretize: dt must be positive");
    if (!tf.is_proper()) throw DesignError("discretize: transfer function is improper");
    if (!tf.is_stable()) throw DesignError("discretize: transfer function has poles outside the open left half-plane");

    const double k = section_gain(tf);
    const std::vector<AnalogSection> sections = analog_sections(tf);

    std::vector<Biquad> out;
    for (const auto& s : sections) {
        double c = 2.0 / dt;
        double w = 0.0;
        if (options.prewarp == Prewarp::frequency) w = options.prewarp_frequency;
        if (options.prewarp == Prewarp::per_section) w = s.natural_frequency();
        if (w > 0.0) {
            if (w * dt / 2.0 >= kPi / 2.0) throw DesignError("discretize: prewarp frequency at or above Nyquist");
            c = w / std::tan(w * dt / 2.0);
        }
        out.push_back(bilinear(s, c));
    }
    if (out.empty()) {
        if (k != 1.0) out.push_back(Biquad{k, 0.0, 0.0, 0.0, 0.0});
    } else {
        out.front().b0 *= k;
        out.front().b1 *= k;
        out.front().b2 *= k;
    }

    for (const auto& q : out) {
        // Roots of z^2 + a1 z + a2 must lie inside the unit circle.
        const double disc = q.a1 * q.a1 - 4.0 * q.a2;
        double rmax = 0.0;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            rmax = std::max(std::abs(0.5 * (-q.a1 + sq)), std::abs(0.5 * (-q.a1 - sq)));
        } else {
            rmax = std::sqrt(q.a2);
        }
        if (!(rmax < 1.0)) throw DesignError("discretize: discrete pole on or outside the unit circle");
    }
    return DiscreteFilter(std::move(out), dt);
}

// ---------------------------------------------------------------------------
// Allocation
// ---------------------------------------------------------------------------

GimbalCmd AllocatorConfig::allocate(const ChannelCommand& c) const {
    const Eigen::Matrix<double, 18, 1> d = allocate_vector(c);
    GimbalCmd cmd;
    for (int i = 0; i < kEngineCount; ++i) {
        cmd[static_cast<std::size_t>(i)] = {d(2 * i), d(2 * i + 1)};
    }
    return cmd;
}

AllocatorConfig build_allocator(const EngineLayout& layout, const MassProperties& mass) {
    layout.validate();
    const double lever = layout.nozzle_station - mass.x_cg;
    AllocatorConfig a;
    a.lambda = Eigen::Vector3d(8.0 * layout.ring_radius, -9.0 * lever, -9.0 * lever).asDiagonal();
    if (std::abs(a.lambda.determinant()) < 1e-12) throw ConfigError("allocator scaling matrix is singular");

    // d(tau)/d(delta) per unit thrust, at zero deflection.
    Eigen::Matrix<double, 3, 18> dtau;
    for (int i = 0; i < kEngineCount; ++i) {
        const double lambda = layout.ring_angle[static_cast<std::size_t>(i)];
        const Vec3 arm = layout.arm(i, mass.x_cg);
        const Vec3 dmu(0.0, std::cos(lambda), std::sin(lambda));
        const Vec3 deta(0.0, std::sin(lambda), -std::cos(lambda));
        dtau.col(2 * i) = arm.cross(dmu);
        dtau.col(2 * i + 1) = arm.cross(deta);
    }
    a.g = a.lambda.inverse() * dtau;
    const Eigen::Matrix3d ggt = a.g * a.g.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(ggt, Eigen::EigenvaluesOnly);
    const Eigen::Vector3d ev = eig.eigenvalues();
    if (!(ev(0) > 1e-12 * ev(2))) throw ConfigError("allocation matrix is rank deficient");
    a.g_pinv = a.g.transpose() * ggt.inverse();
    return a;
}

// ---------------------------------------------------------------------------
// Controller
// ---------------------------------------------------------------------------

std::pair<double, double> roll_gains_for_bandwidth(double l_delta_a, double bandwidth, double damping,
                                                   double output_scale) {
    const double l = l_delta_a * output_scale;
    if (!(l > 0.0)) throw DesignError("roll control effectiveness must be positive");
    return {bandwidth * bandwidth / l, 2.0 * damping * bandwidth / l};
}

RationalTF design_filter(const FilterSettings& settings, const ModalDataset& modal) {
    switch (settings.type) {
        case FilterType::notch:
            return design_notch(modal, settings.notch);
        case FilterType::elliptic:
            return design_elliptic(settings.elliptic);
        case FilterType::none:
            break;
    }
    return RationalTF();
}

DiscreteFilter make_discrete_filter(const FilterSettings& settings, const ModalDataset& modal, double dt) {
    DiscretizeOptions opt;
    switch (settings.type) {
        case FilterType::notch:
            opt.prewarp = Prewarp::per_section;
            break;
        case FilterType::elliptic:
            opt.prewarp = Prewarp::frequency;
            opt.prewarp_frequency = settings.elliptic.passband_edge;
            break;
        case FilterType::none:
            return DiscreteFilter({}, dt);
    }
    return discretize(design_filter(settings, modal), dt, opt);
}

AttitudeController::AttitudeController(const ControllerGains& gains, const FilterSettings& filter,
                                       const ModalDataset& modal, double period)
    : gains_(gains), placement_(filter.placement), period_(period) {
    if (!(period > 0.0)) throw ConfigError("controller period must be positive");
    const DiscreteFilter f = make_discrete_filter(filter, modal, period);
    const DiscreteFilter unity({}, period);
    for (Channel* ch : {&pitch_, &yaw_}) {
        ch->attitude = placement_ == FilterPlacement::feedback ? f : unity;
        ch->rate = placement_ == FilterPlacement::forward ? unity : f;
        ch->output = placement_ == FilterPlacement::forward ? f : unity;
    }
}

void AttitudeController::reset(const ControllerInput& in) {
    pitch_integral_ = 0.0;
    yaw_integral_ = 0.0;
    auto init = [&](Channel& ch, double ref, double err, double rate) {
        ch.attitude.reset_to(ref - err);
        ch.rate.reset_to(rate);
        ch.output.reset_to(gains_.k_pi * err - gains_.k_p * rate);
    };
    init(pitch_, in.pitch_reference, in.attitude_error.y(), in.rates.y());
    init(yaw_, in.yaw_reference, in.attitude_error.z(), in.rates.z());
    last_ = {};
}

double AttitudeController::channel(Channel& ch, double reference, double error, double rate, double& integral,
                                   bool freeze) {
    const double e = reference - ch.attitude.step(reference - error);
    const double r = ch.rate.step(rate);
    if (!freeze) integral += e * period_;
    const double u = gains_.k_pi * (e + gains_.integral_weight * integral) - gains_.k_p * r;
    return ch.output.step(u);
}

ControllerOutput AttitudeController::step(const ControllerInput& in, bool saturated) {
    ControllerOutput out;
    const bool finite = in.attitude_error.allFinite() && in.rates.allFinite() && std::isfinite(in.pitch_reference) &&
                        std::isfinite(in.yaw_reference);
    if (!finite) {
        out.command = last_;
        out.fault = true;
        return out;
    }
    const double s = gains_.output_scale;
    out.command.pitch =
        s * channel(pitch_, in.pitch_reference, in.attitude_error.y(), in.rates.y(), pitch_integral_, saturated);
    out.command.yaw =
        s * channel(yaw_, in.yaw_reference, in.attitude_error.z(), in.rates.z(), yaw_integral_, saturated);
    out.command.roll = s * (gains_.roll_kp * in.attitude_error.x() - gains_.roll_kd * in.rates.x());
    last_ = out.command;
    return out;
}

}  // namespace slv
