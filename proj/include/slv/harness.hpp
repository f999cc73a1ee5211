#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "slv/control.hpp"
#include "slv/environment.hpp"
#include "slv/flex.hpp"
#include "slv/linear.hpp"
#include "slv/vehicle.hpp"

namespace slv {

// ---------------------------------------------------------------------------
// Reference trajectory
// ---------------------------------------------------------------------------

/// Pitch program (vertical, then a linear pitch-over) and a constant heading command.
/// Pitch values here are elevation angles above the horizon; the body attitude in the launch
/// frame uses pitch_euler = elevation - 90 deg.
struct ReferenceTrajectory {
    double vertical_time = 10.0;    // s
    double final_time = 165.0;      // s
    double initial_pitch_deg = 90.0;
    double final_pitch_deg = 40.0;
    double yaw_command_deg = 0.0;   // heading relative to the launch azimuth, active after vertical_time

    /// Elevation in degrees; t is clamped to [0, final_time].
    double pitch_deg(double t) const;
    double yaw_deg(double t) const;
    /// Reference attitude as 3-2-1 angles of the launch-to-body transform.
    EulerAngles attitude(double t) const;
    void validate() const;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class FlexMode {
    enabled,   // bending modes integrated and coupled
    frozen,    // modal states held at zero (same state layout as `enabled`)
    disabled,  // rigid-only vehicle
};

struct SimConfig {
    // Data files; empty means the built-in default. Relative paths resolve against base_dir.
    std::string aero_file;
    std::string modal_file;
    std::string layout_file;
    std::string mass_file;
    std::string base_dir;

    double launch_azimuth_deg = 135.0;
    double wind_north_kt = 10.0;
    double wind_east_kt = 10.0;
    ReferenceTrajectory trajectory;
    double initial_speed = 1.0;        // m/s along body x
    double initial_pitch_deg = 89.9;   // elevation

    ControllerGains gains;
    FilterSettings filter;
    double loop_rate = 100.0;  // Hz

    FlexMode flex = FlexMode::enabled;
    DivergenceBounds bounds;
    double modal_scale = 0.0;  // uniform perturbation of the plant's modal data
    std::uint64_t seed = 1;

    double dt = 1e-3;          // s
    double duration = 165.0;   // s
    double telemetry_rate = 100.0;  // Hz, 0 disables recording
    double transient_time = 2.0;    // s excluded from the tracking-error maxima

    /// Throws ConfigError for non-positive steps, a dt that does not divide the loop period,
    /// or a telemetry rate that does not divide the integration rate.
    void validate() const;
    int steps_per_tick() const;
};

/// Vehicle and modal data used by a run. `plant_modal` (when set) is the truth model integrated
/// by the simulator, while the controller filters are always designed on `modal`.
struct SimInputs {
    AeroTables aero = AeroTables::synthetic_slender_body();
    EngineLayout layout = EngineLayout::falcon9();
    MassModel mass;
    ModalDataset modal = ModalDataset::beam_default();
    std::optional<ModalDataset> plant_modal;
};

/// Loads the data files named by `config` (defaults for empty names).
SimInputs load_inputs(const SimConfig& config);

// ---------------------------------------------------------------------------
// Telemetry
// ---------------------------------------------------------------------------

struct Channel {
    std::string name;
    std::string unit;
};

/// Uniformly sampled table; one row per sample, one column per channel.
struct Telemetry {
    std::vector<Channel> channels;
    std::vector<std::vector<double>> rows;

    std::size_t size() const noexcept { return rows.size(); }
    /// Column index of `name`; throws DomainError if absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> series(const std::string& name) const;
};

/// Channel registry of the simulator for `mode_count` bending modes.
std::vector<Channel> telemetry_channels(std::size_t mode_count);

/// CSV with a `name [unit]` header and %.17g values. Throws IoError naming the path.
void export_telemetry(const Telemetry& telemetry, const std::string& path);
Telemetry import_telemetry(const std::string& path);

// ---------------------------------------------------------------------------
// Closed-loop simulation
// ---------------------------------------------------------------------------

enum class RunStatus { completed, diverged, fault };

struct SimResult {
    Telemetry telemetry;
    RunStatus status = RunStatus::completed;
    std::string reason;        // divergence or fault description
    double end_time = 0.0;     // last integrated time, s
    double max_pitch_error = 0.0;  // deg, after the transient window
    double max_yaw_error = 0.0;    // deg, after the transient window
    double max_roll_error = 0.0;   // deg, after the transient window
    double max_attitude_error = 0.0;      // rad, whole run
    double max_modal_amplitude = 0.0;     // max |xi|
    double max_sensed_bending_rate = 0.0; // rad/s
    double max_gimbal = 0.0;              // rad, after saturation
    std::size_t saturated_ticks = 0;
    bool small_angle_warning = false;

    bool stable() const noexcept { return status == RunStatus::completed; }
};

struct RunOptions {
    bool record_telemetry = true;
};

/// Integrates the rigid + flexible vehicle with RK4 at config.dt, running the attitude controller
/// at config.loop_rate with a zero-order hold on the gimbal commands. Stops at config.duration,
/// on the first crossing of the divergence bounds, or on a non-finite state (fault; the
/// telemetry then ends at the last valid sample).
SimResult run_closed_loop(const SimConfig& config, const SimInputs& inputs, const RunOptions& options = {});
SimResult run_closed_loop(const SimConfig& config);

// ---------------------------------------------------------------------------
// Modal uncertainty
// ---------------------------------------------------------------------------

enum class DrawMode {
    independent,  // every factor uniform in [1 - scale, 1 + scale]
    corner,       // every factor 1 - scale or 1 + scale with equal probability
};

/// Multiplicative factors applied by perturb_modal, in draw order: for each mode the frequency,
/// then phi_y, phi_z, slope_y_t, slope_z_t, slope_y_g, slope_z_g.
struct ModalDraw {
    std::vector<double> factors;
};

inline constexpr std::size_t kFactorsPerMode = 7;

/// Draws factors for `data` from `rng`. Throws DomainError for scale outside [0, 0.5].
ModalDraw draw_modal_factors(const ModalDataset& data, double scale, std::mt19937_64& rng,
                             DrawMode mode = DrawMode::independent);
ModalDataset apply_modal_factors(const ModalDataset& data, const ModalDraw& draw);
ModalDataset perturb_modal(const ModalDataset& data, double scale, std::mt19937_64& rng,
                           DrawMode mode = DrawMode::independent);

/// Generator for run `run` at scale index `scale_index` of a campaign seeded with `seed`.
std::mt19937_64 run_generator(std::uint64_t seed, std::size_t scale_index, std::size_t run);

// ---------------------------------------------------------------------------
// Monte-Carlo campaign
// ---------------------------------------------------------------------------

struct McConfig {
    std::vector<double> scales{0.01, 0.03, 0.10, 0.20, 0.34, 0.40};
    std::size_t runs_per_scale = 50;
    std::vector<FilterType> filters{FilterType::notch, FilterType::elliptic};
    DrawMode mode = DrawMode::independent;
    unsigned workers = 0;  // 0 = hardware concurrency
};

struct McRun {
    std::size_t scale_index = 0;
    std::size_t run = 0;
    FilterType filter = FilterType::notch;
    ModalDraw draw;
    RunStatus status = RunStatus::completed;
    std::string reason;
    double end_time = 0.0;
    double max_attitude_error = 0.0;   // rad
    double max_modal_amplitude = 0.0;
};

struct McFilterSummary {
    FilterType filter = FilterType::notch;
    std::vector<double> stable_fraction;  // per scale
    /// Largest scale such that it and every smaller scale were 100 % stable (0 if none).
    double boundary = 0.0;
    /// Smallest scale with an unstable run, if any.
    std::optional<double> first_unstable;
};

struct McResult {
    McConfig config;
    std::uint64_t seed = 0;
    std::vector<McRun> runs;  // ordered by scale, run, filter
    std::vector<McFilterSummary> summaries;

    const McFilterSummary& summary(FilterType filter) const;
};

/// Runs every (scale, run) draw once per filter on the same perturbed plant. Run faults are
/// recorded and the campaign continues. Results are independent of the worker count.
McResult mc_campaign(const SimConfig& base, const SimInputs& inputs, const McConfig& config);

/// Deterministic JSON text of the campaign (summary and per-run records).
std::string mc_summary_json(const McResult& result);

// ---------------------------------------------------------------------------
// Model set
// ---------------------------------------------------------------------------

struct ModelSetEntry {
    FlightCondition condition;
    PitchCoefficients coefficients;
    LinearModel rigid;
    LinearModel flexible;
    RationalTF rigid_tf;          // theta / dE
    RationalTF flexible_tf;       // theta_m / dE
    struct FilterMargins {
        FilterType filter;
        StabilityMargins margins;
    };
    std::vector<FilterMargins> margins;
};

/// Linear models every `interval` seconds along the nominal (rigid-only) closed-loop trajectory.
std::vector<ModelSetEntry> build_model_set(const SimConfig& config, const SimInputs& inputs, double interval = 5.0);

// ---------------------------------------------------------------------------
// Configuration and data files (JSON)
// ---------------------------------------------------------------------------

/// Missing keys keep their defaults; unknown keys are rejected. base_dir is set to the file's directory.
SimConfig load_config(const std::string& path);
SimConfig config_from_json(const std::string& text);
std::string config_to_json(const SimConfig& config);

AeroTables load_aero(const std::string& path);
EngineLayout load_layout(const std::string& path);
MassModel load_mass(const std::string& path);
ModalDataset load_modal(const std::string& path);
void save_modal(const ModalDataset& data, const std::string& path);

std::string model_entry_json(const ModelSetEntry& entry);
/// CSV of omega [rad/s], magnitude [dB], phase [deg].
void export_frequency_response(const FrequencyResponse& response, const std::string& path);

std::string to_string(FilterType type);
FilterType filter_type_from_string(const std::string& name);
std::string to_string(FilterPlacement placement);
FilterPlacement filter_placement_from_string(const std::string& name);
std::string to_string(FlexMode mode);
FlexMode flex_mode_from_string(const std::string& name);
std::string to_string(RunStatus status);
std::string to_string(DrawMode mode);
DrawMode draw_mode_from_string(const std::string& name);

}  // namespace slv
