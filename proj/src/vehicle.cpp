#include "slv/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slv {

// ---------------------------------------------------------------------------
// Mass properties
// ---------------------------------------------------------------------------

namespace {

constexpr double kFalcon9BurnTime = 165.0;

std::vector<double> column(const std::vector<MassTableRow>& rows, double MassTableRow::*field) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.*field);
    return out;
}

}  // namespace

const std::vector<MassTableRow>& MassModel::falcon9_rows() {
    static const std::vector<MassTableRow> rows{
        {0.00, 301956.795, 31.093342, 1.083e6, 1.940e8},
        {0.25, 371899.268, 36.340671, 1.191e6, 2.388e8},
        {0.50, 441841.740, 38.542382, 1.299e6, 2.506e8},
        {0.75, 511784.213, 38.939239, 1.408e6, 2.516e8},
        {1.00, 581726.686, 38.192310, 1.516e6, 2.545e8},
    };
    return rows;
}

MassModel::MassModel() : MassModel(falcon9_rows(), kFalcon9BurnTime) {}

MassModel::MassModel(std::vector<MassTableRow> rows, double burn_time)
    : rows_(std::move(rows)), burn_time_(burn_time) {
    if (rows_.size() < 2) throw ConfigError("mass table needs at least two rows");
    if (!(burn_time_ > 0.0)) throw ConfigError("burn time must be positive");
    std::sort(rows_.begin(), rows_.end(),
              [](const auto& a, const auto& b) { return a.fuel_fraction < b.fuel_fraction; });
    for (const auto& r : rows_) {
        if (!(r.mass > 0.0) || !(r.jxx > 0.0) || !(r.jyy > 0.0)) {
            throw ConfigError("mass table entries must be positive");
        }
    }
    const auto fractions = column(rows_, &MassTableRow::fuel_fraction);
    mass_ = Table1D(fractions, column(rows_, &MassTableRow::mass));
    x_cg_ = Table1D(fractions, column(rows_, &MassTableRow::x_cg));
    jxx_ = Table1D(fractions, column(rows_, &MassTableRow::jxx));
    jyy_ = Table1D(fractions, column(rows_, &MassTableRow::jyy));
    burn_rate_ = (rows_.back().mass - rows_.front().mass) / burn_time_;
}

double MassModel::fuel_fraction_at(double time) const {
    const double span = rows_.back().fuel_fraction - rows_.front().fuel_fraction;
    const double f = rows_.back().fuel_fraction - span * time / burn_time_;
    return std::clamp(f, rows_.front().fuel_fraction, rows_.back().fuel_fraction);
}

MassProperties MassModel::operator()(double fuel_fraction) const {
    const double f = std::clamp(fuel_fraction, rows_.front().fuel_fraction, rows_.back().fuel_fraction);
    // d(fraction)/dt for the constant burn
    const double fraction_rate = -(rows_.back().fuel_fraction - rows_.front().fuel_fraction) / burn_time_;

    MassProperties mp;
    mp.mass = mass_(f);
    mp.mass_rate = mass_.slope(f) * fraction_rate;
    mp.x_cg = x_cg_(f);
    const double jxx = jxx_(f);
    const double jyy = jyy_(f);
    mp.inertia = Vec3(jxx, jyy, jyy).asDiagonal();
    const double jxx_rate = jxx_.slope(f) * fraction_rate;
    const double jyy_rate = jyy_.slope(f) * fraction_rate;
    mp.inertia_rate = Vec3(jxx_rate, jyy_rate, jyy_rate).asDiagonal();
    return mp;
}

MassProperties mass_properties(double fuel_fraction) {
    static const MassModel model;
    return model(fuel_fraction);
}

// ---------------------------------------------------------------------------
// Propulsion
// ---------------------------------------------------------------------------

EngineLayout EngineLayout::falcon9() {
    EngineLayout layout;
    layout.ring_angle[0] = 0.0;
    for (int i = 1; i < kEngineCount; ++i) layout.ring_angle[i] = (i - 1) * 45.0 * kDegToRad;
    return layout;
}

Vec3 EngineLayout::arm(int engine, double x_cg) const {
    const double r = radius(engine);
    const double lambda = ring_angle[static_cast<std::size_t>(engine)];
    return Vec3(-(nozzle_station - x_cg), -r * std::sin(lambda), r * std::cos(lambda));
}

void EngineLayout::validate() const {
    if (!(ring_radius > 0.0)) throw ConfigError("engine ring radius must be positive");
    if (!(nozzle_station > 0.0)) throw ConfigError("nozzle station must be positive");
    if (!(gimbal_limit > 0.0)) throw ConfigError("gimbal limit must be positive");
}

double engine_thrust(double pressure_kpa) { return 914.11 - 0.68 * pressure_kpa; }

Vec3 engine_force(const EngineLayout& layout, int engine, const GimbalAngles& delta, double thrust) {
    if (engine < 0 || engine >= kEngineCount) {
        throw DomainError("engine index out of range: " + std::to_string(engine));
    }
    const double lambda = layout.ring_angle[static_cast<std::size_t>(engine)];
    // R_e2(eta) e1, then R_e3(mu), then R_e1(lambda), written out.
    const double ce = std::cos(delta.eta);
    const double se = std::sin(delta.eta);
    const double cm = std::cos(delta.mu);
    const double sm = std::sin(delta.mu);
    const double x = cm * ce;
    const double y = sm * ce;
    const double z = -se;
    const double cl = std::cos(lambda);
    const double sl = std::sin(lambda);
    return thrust * Vec3(x, cl * y - sl * z, sl * y + cl * z);
}

EngineForces engine_forces(const EngineLayout& layout, const GimbalCmd& cmd, double thrust) {
    EngineForces out;
    for (int i = 0; i < kEngineCount; ++i) out[i] = engine_force(layout, i, cmd[i], thrust);
    return out;
}

EngineLoads engine_moments(const EngineLayout& layout, const GimbalCmd& cmd, double thrust,
                           const MassProperties& mass) {
    EngineLoads loads;
    for (int i = 0; i < kEngineCount; ++i) {
        const Vec3 f = engine_force(layout, i, cmd[i], thrust);
        loads.force += f;
        loads.moment += layout.arm(i, mass.x_cg).cross(f);
    }
    return loads;
}

bool saturate(GimbalCmd& cmd, double limit) {
    bool clipped = false;
    for (auto& d : cmd) {
        const double mu = std::clamp(d.mu, -limit, limit);
        const double eta = std::clamp(d.eta, -limit, limit);
        clipped = clipped || mu != d.mu || eta != d.eta;
        d.mu = mu;
        d.eta = eta;
    }
    return clipped;
}

// ---------------------------------------------------------------------------
// Aerodynamics
// ---------------------------------------------------------------------------

AeroTables AeroTables::synthetic_slender_body() {
    const std::vector<double> alpha_deg{0.0, 2.0, 4.0, 6.0, 8.0};
    const std::vector<double> mach{0.5, 1.5, 4.0, 7.0, 10.0};
    // Normal-force and pitching-moment slopes per rad, zero-lift drag, by Mach number.
    const std::vector<double> cn_alpha{2.8, 3.4, 3.0, 2.7, 2.6};
    const std::vector<double> cm_alpha{22.0, 28.0, 24.0, 21.0, 20.0};
    const std::vector<double> cd0{0.30, 0.50, 0.32, 0.26, 0.24};

    std::vector<double> cl;
    std::vector<double> cd;
    std::vector<double> cm;
    for (double a_deg : alpha_deg) {
        const double a = a_deg * kDegToRad;
        for (std::size_t j = 0; j < mach.size(); ++j) {
            cl.push_back(cn_alpha[j] * a + 2.0 * a * a);
            cd.push_back(cd0[j] + 1.2 * a * a);
            cm.push_back(cm_alpha[j] * a + 8.0 * a * a);
        }
    }
    AeroTables t;
    t.lift = Table2D(alpha_deg, mach, cl);
    t.drag = Table2D(alpha_deg, mach, cd);
    t.moment = Table2D(alpha_deg, mach, cm);
    return t;
}

void AeroTables::validate() const {
    for (const Table2D* t : {&lift, &drag, &moment}) {
        if (t->rows().empty() || t->rows().front() != 0.0) {
            throw ConfigError("aero tables must start at alpha = 0 (negative side is mirrored)");
        }
    }
    for (std::size_t j = 0; j < lift.cols().size(); ++j) {
        if (lift.at(0, j) != 0.0 || moment.at(0, j) != 0.0) {
            throw ConfigError("lift and moment coefficients must vanish at alpha = 0");
        }
    }
    for (double v : drag.values()) {
        if (!(v > 0.0)) throw ConfigError("drag coefficients must be positive");
    }
    if (!(ref_area > 0.0) || !(ref_length > 0.0)) throw ConfigError("aero reference area/length must be positive");
}

namespace {

double odd(const Table2D& t, double incidence, double mach) {
    const double v = t(std::abs(incidence) * kRadToDeg, mach);
    return incidence < 0.0 ? -v : v;
}

// Normal and axial coefficients in one incidence plane.
struct PlaneCoefficients {
    double normal;
    double moment;
};

PlaneCoefficients plane(const AeroTables& t, double incidence, double mach) {
    const double cl = odd(t.lift, incidence, mach);
    const double cd = t.drag(std::abs(incidence) * kRadToDeg, mach);
    return {cl * std::cos(incidence) + cd * std::sin(incidence), odd(t.moment, incidence, mach)};
}

}  // namespace

AeroLoads aero_forces(const Vec3& airspeed_body, const Vec3& body_rates, const AtmosphereState& atm,
                      const AeroTables& tables) {
    AeroLoads out;
    const double speed = airspeed_body.norm();
    if (speed <= kMinAirspeed) return out;

    out.alpha = std::atan2(airspeed_body.z(), airspeed_body.x());
    out.beta = std::asin(std::clamp(airspeed_body.y() / speed, -1.0, 1.0));
    out.mach = speed / atm.speed_of_sound;
    out.dynamic_pressure = 0.5 * atm.density * speed * speed;

    const double total = std::acos(std::clamp(airspeed_body.x() / speed, -1.0, 1.0));
    const double cl_total = tables.lift(total * kRadToDeg, out.mach);
    const double cd_total = tables.drag(total * kRadToDeg, out.mach);
    const double axial = cd_total * std::cos(total) - cl_total * std::sin(total);

    const PlaneCoefficients pitch = plane(tables, out.alpha, out.mach);
    const PlaneCoefficients yaw = plane(tables, out.beta, out.mach);

    const double qs = out.dynamic_pressure * tables.ref_area;
    const double qsl = qs * tables.ref_length;
    const double rate_scale = tables.ref_length / (2.0 * speed);

    out.force = Vec3(-qs * axial, -qs * yaw.normal, -qs * pitch.normal);
    out.moment = Vec3(qsl * tables.clp * body_rates.x() * rate_scale,
                      qsl * (pitch.moment + tables.cmq * body_rates.y() * rate_scale),
                      qsl * (-yaw.moment + tables.cnr * body_rates.z() * rate_scale));
    return out;
}

// ---------------------------------------------------------------------------
// Rigid-body dynamics
// ---------------------------------------------------------------------------

RigidRates rigid_derivatives(const RigidState& s, const MassProperties& mass, const Vec3& force,
                             const Vec3& moment, const Vec3& gravity_inertial, bool include_inertia_rate) {
    const double det = mass.inertia.determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
        throw ConfigError("inertia matrix is singular");
    }
    const Mat3 c = dcm_from_euler(s.attitude);
    const Vec3& w = s.rates;

    RigidRates d;
    d.position_dot = c.transpose() * s.velocity;
    d.velocity_dot = c * gravity_inertial + force / mass.mass - w.cross(s.velocity);
    Vec3 net = moment - w.cross(mass.inertia * w);
    if (include_inertia_rate) net -= mass.inertia_rate * w;
    d.rates_dot = mass.inertia.inverse() * net;
    d.attitude_dot = euler_kinematics(s.attitude, w);
    return d;
}

}  // namespace slv
