#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slv/harness.hpp"

namespace slv {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& name, const std::pair<E, const char*> (&table)[N], const char* what) {
    for (const auto& [value, text] : table) {
        if (name == text) return value;
    }
    throw ConfigError(std::string("unknown ") + what + ": " + name);
}

template <typename E, std::size_t N>
std::string enum_name(E value, const std::pair<E, const char*> (&table)[N]) {
    for (const auto& [v, text] : table) {
        if (v == value) return text;
    }
    return "?";
}

const std::pair<FilterType, const char*> kFilterNames[] = {
    {FilterType::none, "none"}, {FilterType::notch, "notch"}, {FilterType::elliptic, "elliptic"}};
const std::pair<FilterPlacement, const char*> kPlacementNames[] = {
    {FilterPlacement::feedback, "feedback"}, {FilterPlacement::rate_only, "rate_only"},
    {FilterPlacement::forward, "forward"}};
const std::pair<FlexMode, const char*> kFlexNames[] = {
    {FlexMode::enabled, "enabled"}, {FlexMode::frozen, "frozen"}, {FlexMode::disabled, "disabled"}};
const std::pair<RunStatus, const char*> kStatusNames[] = {
    {RunStatus::completed, "completed"}, {RunStatus::diverged, "diverged"}, {RunStatus::fault, "fault"}};
const std::pair<DrawMode, const char*> kDrawNames[] = {
    {DrawMode::independent, "independent"}, {DrawMode::corner, "corner"}};

}  // namespace

std::string to_string(FilterType v) { return enum_name(v, kFilterNames); }
FilterType filter_type_from_string(const std::string& s) { return parse_enum(s, kFilterNames, "filter type"); }
std::string to_string(FilterPlacement v) { return enum_name(v, kPlacementNames); }
FilterPlacement filter_placement_from_string(const std::string& s) {
    return parse_enum(s, kPlacementNames, "filter placement");
}
std::string to_string(FlexMode v) { return enum_name(v, kFlexNames); }
FlexMode flex_mode_from_string(const std::string& s) { return parse_enum(s, kFlexNames, "flex mode"); }
std::string to_string(RunStatus v) { return enum_name(v, kStatusNames); }
std::string to_string(DrawMode v) { return enum_name(v, kDrawNames); }
DrawMode draw_mode_from_string(const std::string& s) { return parse_enum(s, kDrawNames, "draw mode"); }

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    out << text;
    if (!out) throw IoError(path, "write failed");
}

json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

// Reads `key` into `out` when present; a type mismatch names the key.
template <typename T>
void get(const json& j, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* section) {
    if (!j.is_object()) throw ConfigError(std::string("config section '") + section + "' must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : keys) ok = ok || item.key() == k;
        if (!ok) throw ConfigError(std::string("unknown key '") + item.key() + "' in " + section);
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    const auto it = j.find(key);
    return it == j.end() ? empty : *it;
}

std::string resolve(const std::string& base, const std::string& path) {
    if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base) / path).string();
}

}  // namespace

// ---------------------------------------------------------------------------
// Simulation config
// ---------------------------------------------------------------------------

SimConfig config_from_json(const std::string& text) {
    const json j = parse_json(text, "config");
    reject_unknown(j, {"data", "environment", "trajectory", "initial", "controller", "flex", "integration", "telemetry", "seed"},
                   "config");
    SimConfig c;

    const json& data = section(j, "data");
    reject_unknown(data, {"aero", "modal", "layout", "mass"}, "data");
    get(data, "aero", c.aero_file);
    get(data, "modal", c.modal_file);
    get(data, "layout", c.layout_file);
    get(data, "mass", c.mass_file);

    const json& env = section(j, "environment");
    reject_unknown(env, {"launch_azimuth_deg", "wind_north_kt", "wind_east_kt"}, "environment");
    get(env, "launch_azimuth_deg", c.launch_azimuth_deg);
    get(env, "wind_north_kt", c.wind_north_kt);
    get(env, "wind_east_kt", c.wind_east_kt);

    const json& tr = section(j, "trajectory");
    reject_unknown(tr, {"vertical_time", "final_time", "initial_pitch_deg", "final_pitch_deg", "yaw_command_deg"},
                   "trajectory");
    get(tr, "vertical_time", c.trajectory.vertical_time);
    get(tr, "final_time", c.trajectory.final_time);
    get(tr, "initial_pitch_deg", c.trajectory.initial_pitch_deg);
    get(tr, "final_pitch_deg", c.trajectory.final_pitch_deg);
    get(tr, "yaw_command_deg", c.trajectory.yaw_command_deg);

    const json& init = section(j, "initial");
    reject_unknown(init, {"speed", "pitch_deg"}, "initial");
    get(init, "speed", c.initial_speed);
    get(init, "pitch_deg", c.initial_pitch_deg);

    const json& ctl = section(j, "controller");
    reject_unknown(ctl, {"loop_rate_hz", "gains", "filter"}, "controller");
    get(ctl, "loop_rate_hz", c.loop_rate);
    const json& g = section(ctl, "gains");
    reject_unknown(g, {"k_p", "k_pi", "integral_weight", "roll_kp", "roll_kd", "output_scale"}, "controller.gains");
    get(g, "k_p", c.gains.k_p);
    get(g, "k_pi", c.gains.k_pi);
    get(g, "integral_weight", c.gains.integral_weight);
    get(g, "roll_kp", c.gains.roll_kp);
    get(g, "roll_kd", c.gains.roll_kd);
    get(g, "output_scale", c.gains.output_scale);
    const json& f = section(ctl, "filter");
    reject_unknown(f, {"type", "placement", "notch", "elliptic"}, "controller.filter");
    std::string name = to_string(c.filter.type);
    get(f, "type", name);
    c.filter.type = filter_type_from_string(name);
    name = to_string(c.filter.placement);
    get(f, "placement", name);
    c.filter.placement = filter_placement_from_string(name);
    const json& n = section(f, "notch");
    reject_unknown(n, {"zero_damping", "pole_damping"}, "controller.filter.notch");
    get(n, "zero_damping", c.filter.notch.zero_damping);
    get(n, "pole_damping", c.filter.notch.pole_damping);
    const json& e = section(f, "elliptic");
    reject_unknown(e, {"order", "passband_edge", "ripple_db", "stop_atten_db"}, "controller.filter.elliptic");
    get(e, "order", c.filter.elliptic.order);
    get(e, "passband_edge", c.filter.elliptic.passband_edge);
    get(e, "ripple_db", c.filter.elliptic.ripple_db);
    get(e, "stop_atten_db", c.filter.elliptic.stop_atten_db);

    const json& fx = section(j, "flex");
    reject_unknown(fx, {"mode", "perturbation_scale", "bounds"}, "flex");
    name = to_string(c.flex);
    get(fx, "mode", name);
    c.flex = flex_mode_from_string(name);
    get(fx, "perturbation_scale", c.modal_scale);
    const json& b = section(fx, "bounds");
    reject_unknown(b, {"sensed_bending_rate", "attitude_error_deg", "modal_amplitude", "saturation_time"},
                  "flex.bounds");
    get(b, "sensed_bending_rate", c.bounds.sensed_bending_rate);
    double att_deg = c.bounds.attitude_error * kRadToDeg;
    get(b, "attitude_error_deg", att_deg);
    c.bounds.attitude_error = att_deg * kDegToRad;
    get(b, "modal_amplitude", c.bounds.modal_amplitude);
    get(b, "saturation_time", c.bounds.saturation_time);

    const json& in = section(j, "integration");
    reject_unknown(in, {"dt", "duration", "transient_time"}, "integration");
    get(in, "dt", c.dt);
    get(in, "duration", c.duration);
    get(in, "transient_time", c.transient_time);

    const json& tm = section(j, "telemetry");
    reject_unknown(tm, {"rate_hz"}, "telemetry");
    get(tm, "rate_hz", c.telemetry_rate);

    get(j, "seed", c.seed);
    c.validate();
    return c;
}

SimConfig load_config(const std::string& path) {
    SimConfig c = config_from_json(read_file(path));
    c.base_dir = fs::path(path).parent_path().string();
    return c;
}

std::string config_to_json(const SimConfig& c) {
    json j;
    j["data"] = {{"aero", c.aero_file}, {"modal", c.modal_file}, {"layout", c.layout_file}, {"mass", c.mass_file}};
    j["environment"] = {{"launch_azimuth_deg", c.launch_azimuth_deg},
                        {"wind_north_kt", c.wind_north_kt},
                        {"wind_east_kt", c.wind_east_kt}};
    j["trajectory"] = {{"vertical_time", c.trajectory.vertical_time},
                       {"final_time", c.trajectory.final_time},
                       {"initial_pitch_deg", c.trajectory.initial_pitch_deg},
                       {"final_pitch_deg", c.trajectory.final_pitch_deg},
                       {"yaw_command_deg", c.trajectory.yaw_command_deg}};
    j["initial"] = {{"speed", c.initial_speed}, {"pitch_deg", c.initial_pitch_deg}};
    j["controller"] = {
        {"loop_rate_hz", c.loop_rate},
        {"gains",
         {{"k_p", c.gains.k_p},
          {"k_pi", c.gains.k_pi},
          {"integral_weight", c.gains.integral_weight},
          {"roll_kp", c.gains.roll_kp},
          {"roll_kd", c.gains.roll_kd},
          {"output_scale", c.gains.output_scale}}},
        {"filter",
         {{"type", to_string(c.filter.type)},
          {"placement", to_string(c.filter.placement)},
          {"notch", {{"zero_damping", c.filter.notch.zero_damping}, {"pole_damping", c.filter.notch.pole_damping}}},
          {"elliptic",
           {{"order", c.filter.elliptic.order},
            {"passband_edge", c.filter.elliptic.passband_edge},
            {"ripple_db", c.filter.elliptic.ripple_db},
            {"stop_atten_db", c.filter.elliptic.stop_atten_db}}}}}};
    j["flex"] = {{"mode", to_string(c.flex)},
                 {"perturbation_scale", c.modal_scale},
                 {"bounds",
                  {{"sensed_bending_rate", c.bounds.sensed_bending_rate},
                   {"attitude_error_deg", c.bounds.attitude_error * kRadToDeg},
                   {"modal_amplitude", c.bounds.modal_amplitude},
                   {"saturation_time", c.bounds.saturation_time}}}};
    j["integration"] = {{"dt", c.dt}, {"duration", c.duration}, {"transient_time", c.transient_time}};
    j["telemetry"] = {{"rate_hz", c.telemetry_rate}};
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Data files
// ---------------------------------------------------------------------------

namespace {

Table2D table_from(const json& j, const char* key, const std::vector<double>& rows, const std::vector<double>& cols) {
    std::vector<std::vector<double>> grid;
    get(j, key, grid);
    if (grid.size() != rows.size()) throw ConfigError(std::string("aero table '") + key + "' needs one row per alpha");
    std::vector<double> flat;
    for (const auto& r : grid) {
        if (r.size() != cols.size()) throw ConfigError(std::string("aero table '") + key + "' needs one column per Mach");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return Table2D(rows, cols, flat);
}

}  // namespace

AeroTables load_aero(const std::string& path) {
    const json j = parse_json(read_file(path), path);
    reject_unknown(j, {"description", "synthetic", "alpha_deg", "mach", "lift", "drag", "moment", "cmq", "cnr", "clp",
                       "ref_area", "ref_length"},
                   "aero file");
    std::vector<double> alpha;
    std::vector<double> mach;
    get(j, "alpha_deg", alpha);
    get(j, "mach", mach);
    AeroTables t;
    t.lift = table_from(j, "lift", alpha, mach);
    t.drag = table_from(j, "drag", alpha, mach);
    t.moment = table_from(j, "moment", alpha, mach);
    get(j, "cmq", t.cmq);
    get(j, "cnr", t.cnr);
    get(j, "clp", t.clp);
    get(j, "ref_area", t.ref_area);
    get(j, "ref_length", t.ref_length);
    t.validate();
    return t;
}

EngineLayout load_layout(const std::string& path) {
    const json j = parse_json(read_file(path), path);
    reject_unknown(j, {"description", "ring_radius", "ring_angle_deg", "nozzle_station", "gimbal_limit_deg"},
                   "layout file");
    EngineLayout l = EngineLayout::falcon9();
    get(j, "ring_radius", l.ring_radius);
    get(j, "nozzle_station", l.nozzle_station);
    double limit = l.gimbal_limit * kRadToDeg;
    get(j, "gimbal_limit_deg", limit);
    l.gimbal_limit = limit * kDegToRad;
    if (j.contains("ring_angle_deg")) {
        std::vector<double> a;
        get(j, "ring_angle_deg", a);
        if (a.size() != kEngineCount) throw ConfigError("layout: ring_angle_deg needs one entry per engine");
        for (std::size_t i = 0; i < a.size(); ++i) l.ring_angle[i] = a[i] * kDegToRad;
    }
    l.validate();
    return l;
}

MassModel load_mass(const std::string& path) {
    const json j = parse_json(read_file(path), path);
    reject_unknown(j, {"description", "burn_time", "rows"}, "mass file");
    double burn = 165.0;
    get(j, "burn_time", burn);
    std::vector<MassTableRow> rows;
    for (const auto& r : j.at("rows")) {
        reject_unknown(r, {"fuel_fraction", "mass", "x_cg", "jxx", "jyy"}, "mass row");
        MassTableRow row;
        get(r, "fuel_fraction", row.fuel_fraction);
        get(r, "mass", row.mass);
        get(r, "x_cg", row.x_cg);
        get(r, "jxx", row.jxx);
        get(r, "jyy", row.jyy);
        rows.push_back(row);
    }
    return MassModel(std::move(rows), burn);
}

ModalDataset load_modal(const std::string& path) {
    const json j = parse_json(read_file(path), path);
    reject_unknown(j, {"description", "modes"}, "modal file");
    ModalDataset d;
    for (const auto& m : j.at("modes")) {
        reject_unknown(m, {"frequency_hz", "damping", "phi_y", "phi_z", "slope_y_t", "slope_z_t", "slope_y_g", "slope_z_g"},
                       "mode record");
        Mode mode;
        double hz = 0.0;
        get(m, "frequency_hz", hz);
        mode.frequency = 2.0 * kPi * hz;
        get(m, "damping", mode.damping);
        get(m, "phi_y", mode.phi_y);
        get(m, "phi_z", mode.phi_z);
        get(m, "slope_y_t", mode.slope_y_t);
        get(m, "slope_z_t", mode.slope_z_t);
        get(m, "slope_y_g", mode.slope_y_g);
        get(m, "slope_z_g", mode.slope_z_g);
        d.modes.push_back(mode);
    }
    d.validate();
    return d;
}

void save_modal(const ModalDataset& data, const std::string& path) {
    json modes = json::array();
    for (const Mode& m : data.modes) {
        modes.push_back({{"frequency_hz", m.frequency / (2.0 * kPi)},
                         {"damping", m.damping},
                         {"phi_y", m.phi_y},
                         {"phi_z", m.phi_z},
                         {"slope_y_t", m.slope_y_t},
                         {"slope_z_t", m.slope_z_t},
                         {"slope_y_g", m.slope_y_g},
                         {"slope_z_g", m.slope_z_g}});
    }
    write_file(path, json{{"modes", modes}}.dump(2) + "\n");
}

SimInputs load_inputs(const SimConfig& config) {
    SimInputs in;
    if (!config.aero_file.empty()) in.aero = load_aero(resolve(config.base_dir, config.aero_file));
    if (!config.layout_file.empty()) in.layout = load_layout(resolve(config.base_dir, config.layout_file));
    if (!config.mass_file.empty()) in.mass = load_mass(resolve(config.base_dir, config.mass_file));
    if (!config.modal_file.empty()) in.modal = load_modal(resolve(config.base_dir, config.modal_file));
    if (config.modal_scale > 0.0) {
        std::mt19937_64 rng = run_generator(config.seed, 0, 0);
        in.plant_modal = perturb_modal(in.modal, config.modal_scale, rng);
    }
    return in;
}

// ---------------------------------------------------------------------------
// Telemetry CSV
// ---------------------------------------------------------------------------

void export_telemetry(const Telemetry& t, const std::string& path) {
    std::string out;
    for (std::size_t i = 0; i < t.channels.size(); ++i) {
        if (i > 0) out += ',';
        out += t.channels[i].name + " [" + t.channels[i].unit + "]";
    }
    out += '\n';
    char buf[32];
    for (const auto& row : t.rows) {
        if (row.size() != t.channels.size()) throw DomainError("telemetry row width does not match its channels");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    write_file(path, out);
}

Telemetry import_telemetry(const std::string& path) {
    std::istringstream in(read_file(path));
    Telemetry t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path, "missing header row");
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
        const auto open = cell.rfind(" [");
        if (open == std::string::npos || cell.back() != ']') throw IoError(path, "malformed header cell '" + cell + "'");
        t.channels.push_back({cell.substr(0, open), cell.substr(open + 2, cell.size() - open - 3)});
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError(path, "non-numeric value '" + cell + "'");
            }
        }
        if (row.size() != t.channels.size()) throw IoError(path, "row width does not match the header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

void export_frequency_response(const FrequencyResponse& r, const std::string& path) {
    const auto mag = r.magnitude_db();
    const auto phase = r.phase_deg();
    std::string out = "omega [rad/s],magnitude [dB],phase [deg]\n";
    char buf[96];
    for (std::size_t i = 0; i < r.omega.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.omega[i], mag[i], phase[i]);
        out += buf;
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Structured exports
// ---------------------------------------------------------------------------

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
        rows.push_back(r);
    }
    return rows;
}

json model_json(const LinearModel& m) {
    return {{"states", m.states}, {"inputs", m.inputs}, {"outputs", m.outputs},
            {"a", matrix_json(m.a)}, {"b", matrix_json(m.b)}, {"c", matrix_json(m.c)}, {"d", matrix_json(m.d)}};
}

json tf_json(const RationalTF& tf) {
    return {{"num", tf.numerator().coefficients()}, {"den", tf.den().coefficients()}};
}

json crossing_json(const std::optional<Crossing>& c) {
    if (!c) return nullptr;
    return {{"omega", c->omega}, {"margin", c->margin}};
}

json margins_json(const StabilityMargins& m) {
    json gc = json::array();
    for (const auto& c : m.gain_crossings) gc.push_back({{"omega", c.omega}, {"phase_margin_deg", c.margin}});
    json pc = json::array();
    for (const auto& c : m.phase_crossings) pc.push_back({{"omega", c.omega}, {"gain_margin_db", c.margin}});
    return {{"phase_margin", crossing_json(m.phase_margin)},
            {"gain_margin", crossing_json(m.gain_margin)},
            {"upper_gain_margin", crossing_json(m.upper_gain_margin)},
            {"lower_gain_margin", crossing_json(m.lower_gain_margin)},
            {"gain_crossings", gc},
            {"phase_crossings", pc}};
}

}  // namespace

std::string model_entry_json(const ModelSetEntry& e) {
    const PitchCoefficients& k = e.coefficients;
    json margins = json::object();
    for (const auto& m : e.margins) margins[to_string(m.filter)] = margins_json(m.margins);
    const json j = {
        {"condition",
         {{"time", e.condition.time},
          {"altitude", e.condition.altitude},
          {"speed", e.condition.speed},
          {"alpha_deg", e.condition.alpha * kRadToDeg}}},
        {"coefficients",
         {{"z_alpha_v", k.z_alpha_v},
          {"m_alpha", k.m_alpha},
          {"z_delta_v", k.z_delta_v},
          {"m_delta", k.m_delta},
          {"velocity", k.velocity},
          {"mass", k.mass},
          {"iyy", k.iyy},
          {"thrust", k.thrust}}},
        {"rigid", model_json(e.rigid)},
        {"flexible", model_json(e.flexible)},
        {"rigid_tf", tf_json(e.rigid_tf)},
        {"flexible_tf", tf_json(e.flexible_tf)},
        {"margins", margins}};
    return j.dump(2) + "\n";
}

std::string mc_summary_json(const McResult& r) {
    json summaries = json::array();
    for (const auto& s : r.summaries) {
        summaries.push_back({{"filter", to_string(s.filter)},
                             {"stable_fraction", s.stable_fraction},
                             {"boundary", s.boundary},
                             {"first_unstable", s.first_unstable ? json(*s.first_unstable) : json(nullptr)}});
    }
    json runs = json::array();
    for (const auto& run : r.runs) {
        runs.push_back({{"scale", r.config.scales[run.scale_index]},
                        {"run", run.run},
                        {"filter", to_string(run.filter)},
                        {"status", to_string(run.status)},
                        {"reason", run.reason},
                        {"end_time", run.end_time},
                        {"max_attitude_error_deg", run.max_attitude_error * kRadToDeg},
                        {"max_modal_amplitude", run.max_modal_amplitude},
                        {"factors", run.draw.factors}});
    }
    const json j = {{"seed", r.seed},
                    {"mode", to_string(r.config.mode)},
                    {"runs_per_scale", r.config.runs_per_scale},
                    {"scales", r.config.scales},
                    {"summary", summaries},
                    {"runs", runs}};
    return j.dump(2) + "\n";
}

}  // namespace slv
