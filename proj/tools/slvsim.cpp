// slvsim: batch front end for the launch-vehicle simulator.
//
//   slvsim sim        single closed-loop run, telemetry CSV + result JSON
//   slvsim linearize  linear model set along the nominal trajectory
//   slvsim filters    structural filter design and frequency responses
//   slvsim mc         Monte-Carlo modal-uncertainty campaign
//
// Exit status: 0 stable / success, 1 usage or configuration error, 2 instability, 3 fault.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "slv/harness.hpp"

namespace fs = std::filesystem;
using namespace slv;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::string filter;
};

SimConfig load(const Common& c) {
    SimConfig cfg = c.config.empty() ? SimConfig{} : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.filter.empty()) cfg.filter.type = filter_type_from_string(c.filter);
    cfg.validate();
    return cfg;
}

fs::path out_dir(const Common& c) {
    fs::path p(c.out);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path.string(), "cannot open for writing");
    f << text;
}

int run_sim(const Common& common, const std::string& flex, double duration) {
    SimConfig cfg = load(common);
    if (!flex.empty()) cfg.flex = flex_mode_from_string(flex);
    if (duration > 0.0) cfg.duration = duration;
    const SimResult r = run_closed_loop(cfg);
    const fs::path dir = out_dir(common);
    export_telemetry(r.telemetry, (dir / "telemetry.csv").string());

    nlohmann::ordered_json j = {{"status", to_string(r.status)},
                                {"reason", r.reason},
                                {"end_time", r.end_time},
                                {"filter", to_string(cfg.filter.type)},
                                {"max_pitch_error_deg", r.max_pitch_error},
                                {"max_yaw_error_deg", r.max_yaw_error},
                                {"max_roll_error_deg", r.max_roll_error},
                                {"max_attitude_error_deg", r.max_attitude_error * kRadToDeg},
                                {"max_modal_amplitude", r.max_modal_amplitude},
                                {"max_sensed_bending_rate", r.max_sensed_bending_rate},
                                {"max_gimbal_deg", r.max_gimbal * kRadToDeg},
                                {"saturated_ticks", r.saturated_ticks},
                                {"small_angle_warning", r.small_angle_warning}};
    write_text(dir / "result.json", j.dump(2) + "\n");
    write_text(dir / "config.json", config_to_json(cfg));

    std::printf("%s after %.3f s (%s filter)%s%s\n", to_string(r.status).c_str(), r.end_time,
                to_string(cfg.filter.type).c_str(), r.reason.empty() ? "" : ": ", r.reason.c_str());
    std::printf("max |error| pitch %.4f deg, yaw %.4f deg, roll %.4f deg; max gimbal %.3f deg\n", r.max_pitch_error,
                r.max_yaw_error, r.max_roll_error, r.max_gimbal * kRadToDeg);
    switch (r.status) {
        case RunStatus::completed: return 0;
        case RunStatus::diverged: return 2;
        case RunStatus::fault: return 3;
    }
    return 3;
}

int run_linearize(const Common& common, double interval) {
    const SimConfig cfg = load(common);
    const SimInputs inputs = load_inputs(cfg);
    const auto set = build_model_set(cfg, inputs, interval);
    const fs::path dir = out_dir(common) / "models";
    fs::create_directories(dir);
    const auto grid = log_grid(1e-2, 1e3, 1001);
    for (const auto& e : set) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "t%06.1f", e.condition.time);
        write_text(dir / (std::string(stem) + ".json"), model_entry_json(e));
        export_frequency_response(freq_response(e.flexible_tf, grid), (dir / (std::string(stem) + "_plant.csv")).string());
        std::printf("t=%6.1f s  h=%8.0f m  V=%7.1f m/s  M_alpha=%+.4f  M_dE=%+.4f", e.condition.time,
                    e.condition.altitude, e.condition.speed, e.coefficients.m_alpha, e.coefficients.m_delta);
        for (const auto& m : e.margins) {
            const auto& pm = m.margins.phase_margin;
            const auto& gm = m.margins.upper_gain_margin;
            std::printf("  %s PM %s GM %s", to_string(m.filter).c_str(),
                        pm ? std::to_string(pm->margin).substr(0, 6).c_str() : "inf",
                        gm ? std::to_string(gm->margin).substr(0, 6).c_str() : "inf");
        }
        std::printf("\n");
    }
    std::printf("%zu conditions written to %s\n", set.size(), dir.string().c_str());
    return 0;
}

nlohmann::ordered_json tf_json(const RationalTF& tf) {
    return {{"num", tf.numerator().coefficients()}, {"den", tf.den().coefficients()}};
}

int run_filters(const Common& common) {
    const SimConfig cfg = load(common);
    const SimInputs inputs = load_inputs(cfg);
    const fs::path dir = out_dir(common);
    const double period = 1.0 / cfg.loop_rate;
    const auto grid = log_grid(1e-1, kPi / period, 1001);
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (FilterType type : {FilterType::notch, FilterType::elliptic}) {
        FilterSettings fs = cfg.filter;
        fs.type = type;
        const RationalTF tf = design_filter(fs, inputs.modal);
        const DiscreteFilter d = make_discrete_filter(fs, inputs.modal, period);
        nlohmann::ordered_json sections = nlohmann::ordered_json::array();
        for (const auto& s : d.sections()) {
            sections.push_back({{"b", {s.b0, s.b1, s.b2}}, {"a", {1.0, s.a1, s.a2}}});
        }
        nlohmann::ordered_json entry = {{"continuous", tf_json(tf)}, {"dt", period}, {"biquads", sections}};
        if (type == FilterType::elliptic) entry["stopband_edge"] = elliptic_stopband_edge(fs.elliptic);
        j[to_string(type)] = entry;

        const std::string name = to_string(type);
        export_frequency_response(freq_response(tf, grid), (dir / (name + "_continuous.csv")).string());
        FrequencyResponse fr;
        fr.omega = grid;
        for (double w : grid) {
            fr.response.push_back(d.response(w));
            fr.singular.push_back(false);
        }
        export_frequency_response(fr, (dir / (name + "_discrete.csv")).string());
        std::printf("%-8s continuous order %d, %zu biquads\n", name.c_str(), tf.den().degree(), d.sections().size());
    }
    write_text(dir / "filters.json", j.dump(2) + "\n");
    return 0;
}

int run_mc(const Common& common, McConfig mc, const std::string& mode) {
    const SimConfig cfg = load(common);
    const SimInputs inputs = load_inputs(cfg);
    const fs::path dir = out_dir(common);
    std::vector<DrawMode> modes;
    if (mode == "both") {
        modes = {DrawMode::independent, DrawMode::corner};
    } else {
        modes = {draw_mode_from_string(mode)};
    }
    for (DrawMode m : modes) {
        mc.mode = m;
        const McResult r = mc_campaign(cfg, inputs, mc);
        const std::string file = "mc_" + to_string(m) + ".json";
        write_text(dir / file, mc_summary_json(r));
        std::printf("%s draws, %zu runs per scale, seed %llu -> %s\n", to_string(m).c_str(), mc.runs_per_scale,
                    static_cast<unsigned long long>(cfg.seed), (dir / file).string().c_str());
        for (const auto& s : r.summaries) {
            std::printf("  %-8s boundary %5.1f %%  stable:", to_string(s.filter).c_str(), s.boundary * 100.0);
            for (double f : s.stable_fraction) std::printf(" %3.0f%%", f * 100.0);
            std::printf("\n");
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flexible launch-vehicle simulator and control-design workbench"};
    app.require_subcommand(1);
    Common common;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", common.config, "Simulation config (JSON); defaults when omitted")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", common.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("-f,--filter", common.filter, "Filter type: none, notch, elliptic");
    };

    auto* sim = app.add_subcommand("sim", "Run one closed-loop simulation");
    add_common(sim);
    std::string flex;
    double duration = 0.0;
    sim->add_option("--flex", flex, "Flex mode: enabled, frozen, disabled");
    sim->add_option("--duration", duration, "Override the run length (s)");

    auto* lin = app.add_subcommand("linearize", "Export the linear model set along the nominal trajectory");
    add_common(lin);
    double interval = 5.0;
    lin->add_option("--interval", interval, "Spacing of the linearization points (s)")->capture_default_str();

    auto* filt = app.add_subcommand("filters", "Design the structural filters and export frequency responses");
    add_common(filt);

    auto* mc = app.add_subcommand("mc", "Monte-Carlo modal-uncertainty campaign");
    add_common(mc);
    McConfig mcc;
    std::string mode = "independent";
    mc->add_option("--runs", mcc.runs_per_scale, "Runs per scale")->capture_default_str();
    mc->add_option("--scales", mcc.scales, "Perturbation scales (fractions)");
    mc->add_option("--workers", mcc.workers, "Worker threads (0 = all cores)")->capture_default_str();
    mc->add_option("--mode", mode, "Draw mode: independent, corner, both")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        for (auto* sub : {sim, lin, filt, mc}) {
            if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed;
        }
        if (sim->parsed()) return run_sim(common, flex, duration);
        if (lin->parsed()) return run_linearize(common, interval);
        if (filt->parsed()) return run_filters(common);
        if (mc->parsed()) return run_mc(common, mcc, mode);
    } catch (const std::exception& e) {
        std::cerr << "slvsim: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
