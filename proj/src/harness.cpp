#include "slv/harness.hpp"

#include <algorithm>
#include <cmath>

namespace slv {

// ---------------------------------------------------------------------------
// Reference trajectory
// ---------------------------------------------------------------------------

double ReferenceTrajectory::pitch_deg(double t) const {
    t = std::clamp(t, 0.0, final_time);
    if (t <= vertical_time) return initial_pitch_deg;
    const double f = (t - vertical_time) / (final_time - vertical_time);
    return initial_pitch_deg + f * (final_pitch_deg - initial_pitch_deg);
}

double ReferenceTrajectory::yaw_deg(double t) const {
    return std::clamp(t, 0.0, final_time) > vertical_time ? yaw_command_deg : 0.0;
}

EulerAngles ReferenceTrajectory::attitude(double t) const {
    EulerAngles a;
    a.pitch = (pitch_deg(t) - 90.0) * kDegToRad;
    a.yaw = yaw_deg(t) * kDegToRad;
    return a;
}

void ReferenceTrajectory::validate() const {
    if (!(vertical_time >= 0.0) || !(final_time > vertical_time)) {
        throw ConfigError("trajectory: need 0 <= vertical_time < final_time");
    }
    for (double p : {initial_pitch_deg, final_pitch_deg}) {
        if (!(p > 0.0 && p <= 90.0)) throw ConfigError("trajectory: pitch elevations must lie in (0, 90] deg");
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

// Integer n with a == n * b to a relative 1e-9, or 0.
int integer_ratio(double a, double b) {
    const double r = a / b;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * n) return 0;
    return static_cast<int>(n);
}

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(loop_rate > 0.0)) throw ConfigError("loop_rate must be positive");
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (integer_ratio(1.0 / loop_rate, dt) == 0) throw ConfigError("dt must divide the control period");
    if (telemetry_rate < 0.0) throw ConfigError("telemetry_rate must be non-negative");
    if (telemetry_rate > 0.0 && integer_ratio(1.0 / telemetry_rate, dt) == 0) {
        throw ConfigError("dt must divide the telemetry period");
    }
    if (!(modal_scale >= 0.0 && modal_scale <= 0.5)) throw ConfigError("modal_scale must lie in [0, 0.5]");
    if (!(initial_speed > 0.0)) throw ConfigError("initial_speed must be positive");
    if (!(initial_pitch_deg > 0.0 && initial_pitch_deg <= 90.0)) {
        throw ConfigError("initial_pitch_deg must lie in (0, 90]");
    }
    if (!(bounds.sensed_bending_rate > 0.0) || !(bounds.attitude_error > 0.0) || !(bounds.modal_amplitude > 0.0) ||
        !(bounds.saturation_time > 0.0)) {
        throw ConfigError("divergence bounds must be positive");
    }
    trajectory.validate();
}

int SimConfig::steps_per_tick() const { return integer_ratio(1.0 / loop_rate, dt); }

// ---------------------------------------------------------------------------
// Telemetry
// ---------------------------------------------------------------------------

std::size_t Telemetry::column(const std::string& name) const {
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i].name == name) return i;
    }
    throw DomainError("telemetry has no channel " + name);
}

std::vector<double> Telemetry::series(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

std::vector<Channel> telemetry_channels(std::size_t mode_count) {
    std::vector<Channel> c{
        {"time", "s"},
        {"roll", "deg"},         {"pitch", "deg"},         {"yaw", "deg"},
        {"elevation", "deg"},    {"ref_elevation", "deg"}, {"ref_yaw", "deg"},
        {"roll_m", "deg"},       {"pitch_m", "deg"},       {"yaw_m", "deg"},
        {"err_roll", "deg"},     {"err_pitch", "deg"},     {"err_yaw", "deg"},
        {"p", "rad/s"},          {"q", "rad/s"},           {"r", "rad/s"},
        {"p_m", "rad/s"},        {"q_m", "rad/s"},         {"r_m", "rad/s"},
    };
    for (std::size_t j = 0; j < mode_count; ++j) c.push_back({"xi_" + std::to_string(j + 1), "-"});
    for (std::size_t j = 0; j < mode_count; ++j) c.push_back({"xi_dot_" + std::to_string(j + 1), "1/s"});
    c.insert(c.end(), {{"cmd_roll", "deg"}, {"cmd_pitch", "deg"}, {"cmd_yaw", "deg"}});
    for (int i = 0; i < kEngineCount; ++i) c.push_back({"mu_" + std::to_string(i), "deg"});
    for (int i = 0; i < kEngineCount; ++i) c.push_back({"eta_" + std::to_string(i), "deg"});
    c.insert(c.end(), {{"saturated", "-"},
                       {"altitude", "m"},
                       {"airspeed", "m/s"},
                       {"mach", "-"},
                       {"dynamic_pressure", "Pa"},
                       {"alpha", "deg"},
                       {"beta", "deg"},
                       {"mass", "kg"}});
    return c;
}

// ---------------------------------------------------------------------------
// Closed-loop simulation
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kPos = 0;
constexpr std::size_t kVel = 3;
constexpr std::size_t kAtt = 6;
constexpr std::size_t kRate = 9;
constexpr std::size_t kRigid = 12;

Vec3 vec_at(std::span<const double> x, std::size_t i) { return Vec3(x[i], x[i + 1], x[i + 2]); }

EulerAngles euler_at(std::span<const double> x) { return {x[kAtt], x[kAtt + 1], x[kAtt + 2]}; }

struct Dynamics {
    const SimInputs& in;
    const ModalDataset& plant;
    FlexMode flex;
    std::size_t modes;  // modal states in the state vector
    Vec3 wind;          // launch axes
    Vec3 gravity;       // launch axes
    EngineForces unit{};  // per-engine force at unit thrust for the held command
    std::array<Vec3, kEngineCount> lateral_arm{};

    Dynamics(const SimInputs& inputs, const ModalDataset& modal, FlexMode mode, const Vec3& wind_launch)
        : in(inputs),
          plant(modal),
          flex(mode),
          modes(mode == FlexMode::disabled ? 0 : modal.size()),
          wind(wind_launch),
          gravity(kGravity * LaunchFrame::down()) {
        for (int i = 0; i < kEngineCount; ++i) {
            lateral_arm[static_cast<std::size_t>(i)] = in.layout.arm(i, 0.0) + Vec3(in.layout.nozzle_station, 0.0, 0.0);
        }
    }

    void hold(const GimbalCmd& cmd) {
        for (int i = 0; i < kEngineCount; ++i) {
            unit[static_cast<std::size_t>(i)] = engine_force(in.layout, i, cmd[static_cast<std::size_t>(i)], 1.0);
        }
    }

    MassProperties mass_at(double t) const { return in.mass(in.mass.fuel_fraction_at(t)); }

    AeroLoads aero(std::span<const double> x, const Mat3& c) const {
        const Vec3 air = vec_at(x, kVel) - c * wind;
        return aero_forces(air, vec_at(x, kRate), atmosphere(x[kPos]), in.aero);
    }

    void operator()(double t, std::span<const double> x, std::span<double> dx) const {
        const MassProperties mp = mass_at(t);
        RigidState s;
        s.position = vec_at(x, kPos);
        s.velocity = vec_at(x, kVel);
        s.attitude = euler_at(x);
        s.rates = vec_at(x, kRate);
        const Mat3 c = dcm_from_euler(s.attitude);
        const AtmosphereState atm = atmosphere(s.position.x());
        const AeroLoads aero = aero_forces(s.velocity - c * wind, s.rates, atm, in.aero);
        const double thrust = engine_thrust(atm.pressure_kpa) * 1000.0;

        const std::span<const double> xi = x.subspan(kRigid, modes);
        const std::span<const double> xi_dot = x.subspan(kRigid + modes, modes);
        Vec3 force = Vec3::Zero();
        Vec3 moment = Vec3::Zero();
        const Vec3 axial(-(in.layout.nozzle_station - mp.x_cg), 0.0, 0.0);
        if (flex == FlexMode::enabled) {
            const Mat3 bend = nozzle_rotation(plant, xi);
            const Vec3 shift = nozzle_displacement(plant, xi);
            for (std::size_t i = 0; i < unit.size(); ++i) {
                const Vec3 f = thrust * (bend * unit[i]);
                force += f;
                moment += (axial + lateral_arm[i] + shift).cross(f);
            }
        } else {
            for (std::size_t i = 0; i < unit.size(); ++i) {
                const Vec3 f = thrust * unit[i];
                force += f;
                moment += (axial + lateral_arm[i]).cross(f);
            }
        }

        const RigidRates r = rigid_derivatives(s, mp, aero.force + force, aero.moment + moment, gravity);
        dx[kPos] = r.position_dot.x();
        dx[kPos + 1] = r.position_dot.y();
        dx[kPos + 2] = r.position_dot.z();
        dx[kVel] = r.velocity_dot.x();
        dx[kVel + 1] = r.velocity_dot.y();
        dx[kVel + 2] = r.velocity_dot.z();
        dx[kAtt] = r.attitude_dot.roll;
        dx[kAtt + 1] = r.attitude_dot.pitch;
        dx[kAtt + 2] = r.attitude_dot.yaw;
        dx[kRate] = r.rates_dot.x();
        dx[kRate + 1] = r.rates_dot.y();
        dx[kRate + 2] = r.rates_dot.z();

        if (modes == 0) return;
        const std::span<double> d_xi = dx.subspan(kRigid, modes);
        const std::span<double> d_xi_dot = dx.subspan(kRigid + modes, modes);
        if (flex == FlexMode::frozen) {
            std::fill(d_xi.begin(), d_xi.end(), 0.0);
            std::fill(d_xi_dot.begin(), d_xi_dot.end(), 0.0);
            return;
        }
        std::copy(xi_dot.begin(), xi_dot.end(), d_xi.begin());
        flex_derivatives(xi, xi_dot, force, plant, d_xi_dot);
    }
};

FlexState flex_state(std::span<const double> x, std::size_t modes) {
    FlexState f(modes);
    for (std::size_t j = 0; j < modes; ++j) {
        f.xi(static_cast<Eigen::Index>(j)) = x[kRigid + j];
        f.xi_dot(static_cast<Eigen::Index>(j)) = x[kRigid + modes + j];
    }
    return f;
}

// Sensor model, with an empty dataset for the rigid-only vehicle.
SensedOutputs sense(const Mat3& c, const Vec3& rates, std::span<const double> x, const Dynamics& dyn) {
    if (dyn.modes == 0) return {c, rates, false};
    return sensed_outputs(c, rates, flex_state(x, dyn.modes), dyn.plant);
}

}  // namespace

SimResult run_closed_loop(const SimConfig& config) { return run_closed_loop(config, load_inputs(config)); }

SimResult run_closed_loop(const SimConfig& config, const SimInputs& inputs, const RunOptions& options) {
    config.validate();
    const ModalDataset& plant = inputs.plant_modal ? *inputs.plant_modal : inputs.modal;
    const LaunchFrame frame(config.launch_azimuth_deg * kDegToRad);
    const Vec3 wind = frame.from_ned(wind_velocity({config.wind_north_kt * kKnot, config.wind_east_kt * kKnot}));
    Dynamics dyn(inputs, plant, config.flex, wind);

    const double period = 1.0 / config.loop_rate;
    const int per_tick = config.steps_per_tick();
    const int telemetry_stride =
        options.record_telemetry && config.telemetry_rate > 0.0 ? static_cast<int>(std::lround(1.0 / (config.telemetry_rate * config.dt))) : 0;
    const auto total_steps = static_cast<long>(std::llround(config.duration / config.dt));

    std::vector<double> x(kRigid + 2 * dyn.modes, 0.0);
    x[kVel] = config.initial_speed;
    x[kAtt + 1] = (config.initial_pitch_deg - 90.0) * kDegToRad;
    std::vector<double> last_valid = x;

    AttitudeController ctrl(config.gains, config.filter, inputs.modal, period);
    Rk4Integrator rk(x.size());

    SimResult res;
    if (telemetry_stride > 0) {
        res.telemetry.channels = telemetry_channels(dyn.modes);
        res.telemetry.rows.reserve(static_cast<std::size_t>(total_steps / telemetry_stride + 1));
    }

    GimbalCmd cmd{};
    ChannelCommand channel;
    Vec3 sensed_error = Vec3::Zero();
    SensedOutputs sensed;
    bool saturated = false;
    bool stop = false;
    long saturated_run = 0;  // consecutive saturated ticks

    auto record = [&](double t) {
        const Mat3 c = dcm_from_euler(euler_at(x));
        const EulerAngles e = euler_at(x);
        const EulerAngles em = euler_from_dcm(sensed.attitude);
        const AeroLoads a = dyn.aero(x, c);
        const Vec3 air = vec_at(x, kVel) - c * wind;
        std::vector<double> row;
        row.reserve(res.telemetry.channels.size());
        row.insert(row.end(), {t, e.roll * kRadToDeg, e.pitch * kRadToDeg, e.yaw * kRadToDeg,
                               e.pitch * kRadToDeg + 90.0, config.trajectory.pitch_deg(t), config.trajectory.yaw_deg(t),
                               em.roll * kRadToDeg, em.pitch * kRadToDeg, em.yaw * kRadToDeg,
                               sensed_error.x() * kRadToDeg, sensed_error.y() * kRadToDeg, sensed_error.z() * kRadToDeg,
                               x[kRate], x[kRate + 1], x[kRate + 2], sensed.rates.x(), sensed.rates.y(), sensed.rates.z()});
        for (std::size_t j = 0; j < 2 * dyn.modes; ++j) row.push_back(x[kRigid + j]);
        row.insert(row.end(), {channel.roll * kRadToDeg, channel.pitch * kRadToDeg, channel.yaw * kRadToDeg});
        for (const auto& g : cmd) row.push_back(g.mu * kRadToDeg);
        for (const auto& g : cmd) row.push_back(g.eta * kRadToDeg);
        row.insert(row.end(), {saturated ? 1.0 : 0.0, x[kPos], air.norm(), a.mach, a.dynamic_pressure,
                               a.alpha * kRadToDeg, a.beta * kRadToDeg, dyn.mass_at(t).mass});
        res.telemetry.rows.push_back(std::move(row));
    };

    auto fail = [&](RunStatus status, const std::string& why, double t) {
        res.status = status;
        res.reason = why;
        res.end_time = t;
        stop = true;
    };

    // Bounds on the state just integrated; returns false when the run must stop.
    auto check = [&](double t) {
        for (double v : x) {
            if (!std::isfinite(v)) {
                fail(RunStatus::fault, "non-finite state", t);
                return false;
            }
        }
        const Mat3 c = dcm_from_euler(euler_at(x));
        const double att = attitude_error(dcm_from_euler(config.trajectory.attitude(t)), c).norm();
        res.max_attitude_error = std::max(res.max_attitude_error, att);
        double amp = 0.0;
        double rate = 0.0;
        if (dyn.modes > 0) {
            const std::span<const double> xs(x);
            for (std::size_t j = 0; j < dyn.modes; ++j) amp = std::max(amp, std::abs(x[kRigid + j]));
            rate = sensed_bending_rate(plant, xs.subspan(kRigid + dyn.modes, dyn.modes)).norm();
        }
        res.max_modal_amplitude = std::max(res.max_modal_amplitude, amp);
        res.max_sensed_bending_rate = std::max(res.max_sensed_bending_rate, rate);
        if (rate > config.bounds.sensed_bending_rate) {
            fail(RunStatus::diverged, "sensed bending rate bound exceeded", t);
        } else if (att > config.bounds.attitude_error) {
            fail(RunStatus::diverged, "attitude error bound exceeded", t);
        } else if (amp > config.bounds.modal_amplitude) {
            fail(RunStatus::diverged, "modal amplitude bound exceeded", t);
        }
        return !stop;
    };

    long step = 0;
    for (long tick = 0; !stop && step < total_steps; ++tick) {
        const double t = static_cast<double>(step) * config.dt;
        const EulerAngles att = euler_at(x);
        const Mat3 c = dcm_from_euler(att);
        sensed = sense(c, vec_at(x, kRate), x, dyn);
        res.small_angle_warning = res.small_angle_warning || sensed.small_angle_warning;
        const EulerAngles ref = config.trajectory.attitude(t);
        sensed_error = attitude_error(dcm_from_euler(ref), sensed.attitude);

        ControllerInput input{sensed_error, sensed.rates, ref.pitch, ref.yaw};
        if (tick == 0) ctrl.reset(input);
        const ControllerOutput out = ctrl.step(input, saturated);
        if (out.fault) {
            fail(RunStatus::fault, "controller received a non-finite measurement", t);
            break;
        }
        channel = out.command;
        cmd = build_allocator(inputs.layout, dyn.mass_at(t)).allocate(channel);
        saturated = saturate(cmd, inputs.layout.gimbal_limit);
        if (saturated) ++res.saturated_ticks;
        saturated_run = saturated ? saturated_run + 1 : 0;
        if (static_cast<double>(saturated_run) * period > config.bounds.saturation_time) {
            fail(RunStatus::diverged, "sustained gimbal saturation", t);
            break;
        }
        for (const auto& g : cmd) res.max_gimbal = std::max({res.max_gimbal, std::abs(g.mu), std::abs(g.eta)});
        dyn.hold(cmd);

        if (t >= config.transient_time) {
            res.max_roll_error = std::max(res.max_roll_error, std::abs(sensed_error.x()) * kRadToDeg);
            res.max_pitch_error = std::max(res.max_pitch_error, std::abs(sensed_error.y()) * kRadToDeg);
            res.max_yaw_error = std::max(res.max_yaw_error, std::abs(sensed_error.z()) * kRadToDeg);
        }

        for (int k = 0; k < per_tick && step < total_steps; ++k) {
            const double ts = static_cast<double>(step) * config.dt;
            if (telemetry_stride > 0 && step % telemetry_stride == 0) record(ts);
            last_valid = x;
            try {
                rk.step(std::span<double>(x), dyn, ts, config.dt);
            } catch (const PropagationError& e) {
                x = last_valid;
                fail(RunStatus::fault, e.what(), ts);
                break;
            } catch (const DomainError& e) {
                x = last_valid;
                fail(RunStatus::diverged, e.what(), ts);
                break;
            }
            ++step;
            const double tn = static_cast<double>(step) * config.dt;
            if (!check(tn)) {
                if (res.status == RunStatus::fault) x = last_valid;
                break;
            }
        }
    }
    if (!stop) {
        res.end_time = static_cast<double>(step) * config.dt;
        if (telemetry_stride > 0 && step % telemetry_stride == 0) {
            const Mat3 c = dcm_from_euler(euler_at(x));
            sensed = sense(c, vec_at(x, kRate), x, dyn);
            sensed_error = attitude_error(dcm_from_euler(config.trajectory.attitude(res.end_time)), sensed.attitude);
            record(res.end_time);
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Modal uncertainty
// ---------------------------------------------------------------------------

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

ModalDraw draw_modal_factors(const ModalDataset& data, double scale, std::mt19937_64& rng, DrawMode mode) {
    if (!(scale >= 0.0 && scale <= 0.5)) throw DomainError("perturbation scale must lie in [0, 0.5]");
    ModalDraw d;
    d.factors.reserve(data.size() * kFactorsPerMode);
    for (std::size_t k = 0; k < data.size() * kFactorsPerMode; ++k) {
        if (mode == DrawMode::corner) {
            d.factors.push_back((rng() >> 63) != 0 ? 1.0 + scale : 1.0 - scale);
        } else {
            d.factors.push_back(1.0 + scale * (2.0 * unit_uniform(rng) - 1.0));
        }
    }
    return d;
}

ModalDataset apply_modal_factors(const ModalDataset& data, const ModalDraw& draw) {
    if (draw.factors.size() != data.size() * kFactorsPerMode) {
        throw DomainError("modal draw does not match the dataset size");
    }
    ModalDataset out = data;
    for (std::size_t j = 0; j < out.size(); ++j) {
        Mode& m = out.modes[j];
        const double* f = &draw.factors[j * kFactorsPerMode];
        m.frequency *= f[0];
        m.phi_y *= f[1];
        m.phi_z *= f[2];
        m.slope_y_t *= f[3];
        m.slope_z_t *= f[4];
        m.slope_y_g *= f[5];
        m.slope_z_g *= f[6];
    }
    return out;
}

ModalDataset perturb_modal(const ModalDataset& data, double scale, std::mt19937_64& rng, DrawMode mode) {
    return apply_modal_factors(data, draw_modal_factors(data, scale, rng, mode));
}

std::mt19937_64 run_generator(std::uint64_t seed, std::size_t scale_index, std::size_t run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(scale_index), static_cast<std::uint32_t>(run)};
    return std::mt19937_64(seq);
}

}  // namespace slv
