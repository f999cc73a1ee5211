#include "slv/environment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace slv {

namespace {

constexpr double kEarthRadius = 6356766.0;  // m, US-76 effective radius for geopotential height
constexpr double kGasConstant = 287.05287;  // J/(kg K)
constexpr double kGamma = 1.4;

struct Layer {
    double base_height;  // geopotential m
    double lapse;        // K/m
};

constexpr std::array<Layer, 7> kLayers{{
    {0.0, -0.0065},
    {11000.0, 0.0},
    {20000.0, 0.001},
    {32000.0, 0.0028},
    {47000.0, 0.0},
    {51000.0, -0.0028},
    {71000.0, -0.002},
}};
constexpr double kTopHeight = 84852.0;

struct LayerBase {
    double temperature;
    double pressure;  // Pa
};

// Base temperature and pressure of every layer plus the top boundary, built once.
const std::array<LayerBase, 8>& layer_bases() {
    static const std::array<LayerBase, 8> bases = [] {
        std::array<LayerBase, 8> b{};
        b[0] = {288.15, 101325.0};
        for (std::size_t i = 0; i < kLayers.size(); ++i) {
            const double top = i + 1 < kLayers.size() ? kLayers[i + 1].base_height : kTopHeight;
            const double dh = top - kLayers[i].base_height;
            const double lapse = kLayers[i].lapse;
            const double t0 = b[i].temperature;
            const double t1 = t0 + lapse * dh;
            double p1 = 0.0;
            if (lapse == 0.0) {
                p1 = b[i].pressure * std::exp(-kGravity * dh / (kGasConstant * t0));
            } else {
                p1 = b[i].pressure * std::pow(t0 / t1, kGravity / (kGasConstant * lapse));
            }
            b[i + 1] = {t1, p1};
        }
        return b;
    }();
    return bases;
}

}  // namespace

AtmosphereState atmosphere(double altitude_m) {
    const double z = std::max(altitude_m, 0.0);
    const double h = kEarthRadius * z / (kEarthRadius + z);
    const auto& bases = layer_bases();

    double temperature = 0.0;
    double pressure = 0.0;
    if (h >= kTopHeight) {
        temperature = bases.back().temperature;
        pressure = bases.back().pressure * std::exp(-kGravity * (h - kTopHeight) / (kGasConstant * temperature));
    } else {
        std::size_t i = kLayers.size() - 1;
        while (i > 0 && h < kLayers[i].base_height) --i;
        const double dh = h - kLayers[i].base_height;
        const double lapse = kLayers[i].lapse;
        const double t0 = bases[i].temperature;
        temperature = t0 + lapse * dh;
        if (lapse == 0.0) {
            pressure = bases[i].pressure * std::exp(-kGravity * dh / (kGasConstant * t0));
        } else {
            pressure = bases[i].pressure * std::pow(t0 / temperature, kGravity / (kGasConstant * lapse));
        }
    }

    AtmosphereState out;
    out.temperature = temperature;
    out.pressure_kpa = pressure / 1000.0;
    out.density = pressure / (kGasConstant * temperature);
    out.speed_of_sound = std::sqrt(kGamma * kGasConstant * temperature);
    return out;
}

Vec3 wind_velocity(const WindSpec& spec) { return Vec3(spec.north, spec.east, 0.0); }

LaunchFrame::LaunchFrame(double azimuth_rad) : azimuth_(azimuth_rad) {
    const double ca = std::cos(azimuth_rad);
    const double sa = std::sin(azimuth_rad);
    // Rows are the launch axes (up, right, down-range) written in NED components.
    ned_to_launch_ << 0.0, 0.0, -1.0,
                      -sa, ca, 0.0,
                      ca, sa, 0.0;
}

}  // namespace slv
