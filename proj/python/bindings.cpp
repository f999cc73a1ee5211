#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "slv/harness.hpp"

namespace py = pybind11;
using namespace slv;

namespace {

py::dict crossing(const std::optional<Crossing>& c) {
    py::dict d;
    if (!c) return d;
    d["omega"] = c->omega;
    d["margin"] = c->margin;
    return d;
}

py::dict margins_dict(const StabilityMargins& m) {
    py::dict d;
    d["phase_margin"] = m.phase_margin ? py::object(crossing(m.phase_margin)) : py::none();
    d["gain_margin"] = m.gain_margin ? py::object(crossing(m.gain_margin)) : py::none();
    d["upper_gain_margin"] = m.upper_gain_margin ? py::object(crossing(m.upper_gain_margin)) : py::none();
    d["lower_gain_margin"] = m.lower_gain_margin ? py::object(crossing(m.lower_gain_margin)) : py::none();
    py::list gc, pc;
    for (const auto& c : m.gain_crossings) gc.append(py::make_tuple(c.omega, c.margin));
    for (const auto& c : m.phase_crossings) pc.append(py::make_tuple(c.omega, c.margin));
    d["gain_crossings"] = gc;
    d["phase_crossings"] = pc;
    return d;
}

SimConfig config_from(const py::object& cfg) {
    if (cfg.is_none()) return SimConfig{};
    if (py::isinstance<SimConfig>(cfg)) return cfg.cast<SimConfig>();
    return load_config(cfg.cast<std::string>());
}

py::array_t<double> telemetry_array(const Telemetry& t) {
    py::array_t<double> a({t.rows.size(), t.channels.size()});
    auto v = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < t.channels.size(); ++j) v(i, j) = t.rows[i][j];
    }
    return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Flexible launch-vehicle simulator and control-design workbench";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DesignError>(m, "DesignError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<LinearizationError>(m, "LinearizationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // Environment and vehicle ---------------------------------------------

    m.def("engine_thrust", &engine_thrust, py::arg("pressure_kpa"), "Per-engine thrust in kN");
    m.def(
        "atmosphere",
        [](double h) {
            const AtmosphereState a = atmosphere(h);
            py::dict d;
            d["pressure_kpa"] = a.pressure_kpa;
            d["density"] = a.density;
            d["speed_of_sound"] = a.speed_of_sound;
            d["temperature"] = a.temperature;
            return d;
        },
        py::arg("altitude_m"));
    m.def(
        "mass_properties",
        [](double f) {
            const MassProperties p = mass_properties(f);
            py::dict d;
            d["mass"] = p.mass;
            d["mass_rate"] = p.mass_rate;
            d["x_cg"] = p.x_cg;
            d["inertia"] = Eigen::Matrix3d(p.inertia);
            return d;
        },
        py::arg("fuel_fraction"));

    // Transfer functions and filters --------------------------------------

    py::class_<RationalTF>(m, "TransferFunction")
        .def(py::init([](std::vector<double> num, std::vector<double> den, double gain) {
                 return RationalTF(Polynomial(std::move(num)), Polynomial(std::move(den)), gain);
             }),
             py::arg("num"), py::arg("den"), py::arg("gain") = 1.0)
        .def_property_readonly("num", [](const RationalTF& t) { return t.numerator().coefficients(); })
        .def_property_readonly("den", [](const RationalTF& t) { return t.den().coefficients(); })
        .def("__call__", [](const RationalTF& t, std::complex<double> s) { return t(s); })
        .def("at_frequency", &RationalTF::at_frequency, py::arg("omega"))
        .def("response",
             [](const RationalTF& t, const std::vector<double>& omega) {
                 std::vector<std::complex<double>> out;
                 out.reserve(omega.size());
                 for (double w : omega) out.push_back(t.at_frequency(w));
                 return out;
             })
        .def("dc_gain", &RationalTF::dc_gain)
        .def("poles", &RationalTF::poles)
        .def("zeros", &RationalTF::zeros)
        .def("is_stable", &RationalTF::is_stable)
        .def("__mul__", [](const RationalTF& a, const RationalTF& b) { return a * b; })
        .def("__repr__", [](const RationalTF& t) {
            return "<TransferFunction order " + std::to_string(t.den().degree()) + ">";
        });

    m.def(
        "design_notch",
        [](double zero_damping, double pole_damping) {
            NotchOptions o;
            o.zero_damping = zero_damping;
            o.pole_damping = pole_damping;
            return design_notch(ModalDataset::beam_default(), o);
        },
        py::arg("zero_damping") = NotchOptions{}.zero_damping, py::arg("pole_damping") = NotchOptions{}.pole_damping);
    m.def(
        "design_elliptic",
        [](int order, double passband_edge, double ripple_db, double stop_atten_db) {
            EllipticSpec s;
            s.order = order;
            s.passband_edge = passband_edge;
            s.ripple_db = ripple_db;
            s.stop_atten_db = stop_atten_db;
            return design_elliptic(s);
        },
        py::arg("order") = 3, py::arg("passband_edge") = 10.0, py::arg("ripple_db") = 1.0,
        py::arg("stop_atten_db") = 40.0);

    // Linear models --------------------------------------------------------

    py::class_<LinearModel>(m, "LinearModel")
        .def_readonly("a", &LinearModel::a)
        .def_readonly("b", &LinearModel::b)
        .def_readonly("c", &LinearModel::c)
        .def_readonly("d", &LinearModel::d)
        .def_readonly("states", &LinearModel::states)
        .def_readonly("inputs", &LinearModel::inputs)
        .def_readonly("outputs", &LinearModel::outputs)
        .def("transfer_function",
             [](const LinearModel& lm, const std::string& in, const std::string& out) {
                 return tf_from_model(lm, in, out);
             },
             py::arg("input"), py::arg("output"));

    m.def(
        "design_point_model",
        [](bool flexible, const std::string& coupling) {
            LinearizeOptions o;
            o.flexible = flexible;
            if (coupling == "classical") {
                o.coupling = ModalCoupling::classical;
            } else if (coupling == "nozzle_force") {
                o.coupling = ModalCoupling::nozzle_force;
            } else {
                throw ConfigError("unknown coupling: " + coupling);
            }
            return linearize(design_point_coefficients(), ModalDataset::beam_default(), o);
        },
        py::arg("flexible") = false, py::arg("coupling") = "classical",
        "Pitch-plane model at the canonical design point; input dE in degrees");

    m.def(
        "pitch_loop",
        [](const LinearModel& plant, const std::string& filter) {
            FilterSettings fs;
            fs.type = filter_type_from_string(filter);
            return pitch_loop(plant, ControllerGains{}, design_filter(fs, ModalDataset::beam_default()), fs.placement);
        },
        py::arg("plant"), py::arg("filter") = "notch", "Open loop broken at the gimbal command, default gains");

    m.def(
        "margins", [](const RationalTF& loop) { return margins_dict(margins(loop)); }, py::arg("loop"));

    m.def(
        "step_response",
        [](const LinearModel& plant, const std::string& filter, double duration) {
            FilterSettings fs;
            fs.type = filter_type_from_string(filter);
            const LinearModel cl =
                close_pitch_loop(plant, ControllerGains{}, design_filter(fs, ModalDataset::beam_default()), fs.placement);
            StepOptions so;
            so.output = cl.output_index("theta");
            const StepResponse r = step_response(cl, duration, so);
            const StepMetrics s = step_metrics(r, dc_gain(cl, 0, so.output));
            py::dict d;
            d["time"] = r.time;
            d["output"] = r.output;
            d["diverged"] = r.diverged;
            d["rise_time"] = s.rise_time;
            d["overshoot"] = s.overshoot;
            d["settling_time"] = s.settling_time;
            return d;
        },
        py::arg("plant"), py::arg("filter") = "notch", py::arg("duration") = 20.0);

    // Simulation -----------------------------------------------------------

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_static("load", &load_config, py::arg("path"))
        .def_static("from_json", &config_from_json, py::arg("text"))
        .def("to_json", [](const SimConfig& c) { return config_to_json(c); })
        .def_readwrite("duration", &SimConfig::duration)
        .def_readwrite("dt", &SimConfig::dt)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("wind_north_kt", &SimConfig::wind_north_kt)
        .def_readwrite("wind_east_kt", &SimConfig::wind_east_kt)
        .def_readwrite("telemetry_rate", &SimConfig::telemetry_rate)
        .def_property(
            "filter", [](const SimConfig& c) { return to_string(c.filter.type); },
            [](SimConfig& c, const std::string& s) { c.filter.type = filter_type_from_string(s); })
        .def_property(
            "flex", [](const SimConfig& c) { return to_string(c.flex); },
            [](SimConfig& c, const std::string& s) { c.flex = flex_mode_from_string(s); });

    m.def(
        "simulate",
        [](const py::object& cfg) {
            const SimConfig c = config_from(cfg);
            SimResult r;
            {
                py::gil_scoped_release release;
                r = run_closed_loop(c);
            }
            py::dict d;
            d["status"] = to_string(r.status);
            d["reason"] = r.reason;
            d["end_time"] = r.end_time;
            d["max_pitch_error_deg"] = r.max_pitch_error;
            d["max_yaw_error_deg"] = r.max_yaw_error;
            d["max_roll_error_deg"] = r.max_roll_error;
            d["max_gimbal_deg"] = r.max_gimbal * kRadToDeg;
            d["saturated_ticks"] = r.saturated_ticks;
            py::list names;
            for (const auto& ch : r.telemetry.channels) names.append(ch.name);
            d["channels"] = names;
            d["telemetry"] = telemetry_array(r.telemetry);
            return d;
        },
        py::arg("config") = py::none(), "Closed-loop run; config is a SimConfig, a JSON path, or None for defaults");

    m.def(
        "monte_carlo",
        [](const py::object& cfg, std::size_t runs, std::vector<double> scales, const std::string& mode,
           unsigned workers) {
            const SimConfig c = config_from(cfg);
            McConfig mc;
            mc.runs_per_scale = runs;
            if (!scales.empty()) mc.scales = std::move(scales);
            mc.mode = draw_mode_from_string(mode);
            mc.workers = workers;
            std::string text;
            {
                py::gil_scoped_release release;
                text = mc_summary_json(mc_campaign(c, load_inputs(c), mc));
            }
            return text;
        },
        py::arg("config") = py::none(), py::arg("runs") = 50, py::arg("scales") = std::vector<double>{},
        py::arg("mode") = "independent", py::arg("workers") = 0u, "Campaign summary as JSON text");
}
