#include "slv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace slv {

const McFilterSummary& McResult::summary(FilterType filter) const {
    for (const auto& s : summaries) {
        if (s.filter == filter) return s;
    }
    throw DomainError("campaign has no results for filter " + to_string(filter));
}

McResult mc_campaign(const SimConfig& base, const SimInputs& inputs, const McConfig& config) {
    base.validate();
    if (config.scales.empty() || config.runs_per_scale == 0 || config.filters.empty()) {
        throw ConfigError("campaign needs at least one scale, run and filter");
    }
    for (std::size_t i = 0; i < config.scales.size(); ++i) {
        if (!(config.scales[i] >= 0.0 && config.scales[i] <= 0.5)) throw ConfigError("campaign scales must lie in [0, 0.5]");
        if (i > 0 && !(config.scales[i] > config.scales[i - 1])) throw ConfigError("campaign scales must be increasing");
    }

    const std::size_t draws = config.scales.size() * config.runs_per_scale;
    const std::size_t nf = config.filters.size();
    McResult result;
    result.config = config;
    result.seed = base.seed;
    result.runs.resize(draws * nf);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t task = next++; task < draws; task = next++) {
            const std::size_t si = task / config.runs_per_scale;
            const std::size_t run = task % config.runs_per_scale;
            std::mt19937_64 rng = run_generator(base.seed, si, run);
            const ModalDraw draw = draw_modal_factors(inputs.modal, config.scales[si], rng, config.mode);
            SimInputs local = inputs;
            local.plant_modal = apply_modal_factors(inputs.modal, draw);
            for (std::size_t f = 0; f < nf; ++f) {
                SimConfig cfg = base;
                cfg.filter.type = config.filters[f];
                McRun& out = result.runs[task * nf + f];
                out.scale_index = si;
                out.run = run;
                out.filter = config.filters[f];
                out.draw = draw;
                try {
                    const SimResult r = run_closed_loop(cfg, local, {false});
                    out.status = r.status;
                    out.reason = r.reason;
                    out.end_time = r.end_time;
                    out.max_attitude_error = r.max_attitude_error;
                    out.max_modal_amplitude = r.max_modal_amplitude;
                } catch (const std::exception& e) {
                    out.status = RunStatus::fault;
                    out.reason = e.what();
                }
            }
        }
    };

    unsigned n = config.workers != 0 ? config.workers : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, draws));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t f = 0; f < nf; ++f) {
        McFilterSummary s;
        s.filter = config.filters[f];
        bool intact = true;
        for (std::size_t si = 0; si < config.scales.size(); ++si) {
            std::size_t stable = 0;
            for (std::size_t run = 0; run < config.runs_per_scale; ++run) {
                if (result.runs[(si * config.runs_per_scale + run) * nf + f].status == RunStatus::completed) ++stable;
            }
            s.stable_fraction.push_back(static_cast<double>(stable) / static_cast<double>(config.runs_per_scale));
            if (stable == config.runs_per_scale) {
                if (intact) s.boundary = config.scales[si];
            } else {
                intact = false;
                if (!s.first_unstable) s.first_unstable = config.scales[si];
            }
        }
        result.summaries.push_back(s);
    }
    return result;
}

std::vector<ModelSetEntry> build_model_set(const SimConfig& config, const SimInputs& inputs, double interval) {
    if (!(interval > 0.0)) throw ConfigError("model set interval must be positive");
    SimConfig nominal = config;
    nominal.flex = FlexMode::disabled;
    nominal.telemetry_rate = config.loop_rate;
    const SimResult run = run_closed_loop(nominal, inputs);
    const Telemetry& tm = run.telemetry;
    const std::size_t c_time = tm.column("time");
    const std::size_t c_alt = tm.column("altitude");
    const std::size_t c_speed = tm.column("airspeed");
    const std::size_t c_alpha = tm.column("alpha");

    std::vector<ModelSetEntry> out;
    std::size_t row = 0;
    for (int k = 0;; ++k) {
        const double t = k * interval;
        if (t > run.end_time + 1e-9) break;
        while (row + 1 < tm.rows.size() && tm.rows[row][c_time] < t - 1e-9) ++row;
        const auto& r = tm.rows[row];

        ModelSetEntry e;
        e.condition = {r[c_time], r[c_alt], r[c_speed], r[c_alpha] * kDegToRad};
        e.coefficients = coefficients_at(e.condition, inputs.aero, inputs.mass, inputs.layout);
        e.rigid = linearize(e.coefficients, inputs.modal, {false});
        LinearizeOptions flex;
        flex.flexible = true;
        e.flexible = linearize(e.coefficients, inputs.modal, flex);
        e.rigid_tf = tf_from_model(e.rigid, "dE_deg", "theta");
        e.flexible_tf = tf_from_model(e.flexible, "dE_deg", "theta_m");
        for (FilterType f : {FilterType::notch, FilterType::elliptic}) {
            FilterSettings fs = config.filter;
            fs.type = f;
            const RationalTF loop = pitch_loop(e.flexible, config.gains, design_filter(fs, inputs.modal), fs.placement);
            e.margins.push_back({f, margins(loop)});
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace slv
