#include "softrl/plant.hpp"

#include <algorithm>
#include <cmath>

namespace softrl::plant {

void PlantParams::validate() const {
    if (!(length_rest > 0.0)) throw ConfigError("plant: length_rest must be positive");
    if (hysteresis_halfwidth < 0.0) throw ConfigError("plant: hysteresis_halfwidth must be >= 0");
    if (!(pressure_min < pressure_max)) throw ConfigError("plant: pressure_min must be < pressure_max");
    if (n_keys < 2) throw ConfigError("plant: n_keys must be >= 2");
    if (noise_sigma < 0.0) throw ConfigError("plant: noise_sigma must be >= 0");
}

std::pair<HysteresisState, Pressures> play_update(const HysteresisState& state,
                                                  const Pressures& p, double halfwidth) {
    HysteresisState next;
    for (std::size_t i = 0; i < 3; ++i)
        next.state[i] = std::clamp(state.state[i], p[i] - halfwidth, p[i] + halfwidth);
    return {next, next.state};
}

ArcParams pcc_arc_params(const Pressures& p, const PlantParams& params) {
    ArcParams arc;
    arc.arc_length = params.length_rest + params.elong_gain * (p[0] + p[1] + p[2]);
    double q = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - p[0] * p[1] - p[1] * p[2] - p[2] * p[0];
    arc.curvature = params.bend_gain * std::sqrt(std::max(q, 0.0));
    arc.plane_angle = std::atan2(std::sqrt(3.0) * (p[2] - p[1]), 2.0 * p[0] - p[1] - p[2]);
    return arc;
}

KeyPointSet pcc_forward(const Pressures& p_eff, const PlantParams& params) {
    const ArcParams arc = pcc_arc_params(p_eff, params);
    const std::size_t n = params.n_keys;
    KeyPointSet keys(n);
    const double cphi = std::cos(arc.plane_angle);
    const double sphi = std::sin(arc.plane_angle);
    for (std::size_t i = 0; i < n; ++i) {
        double s = arc.arc_length * static_cast<double>(i) / static_cast<double>(n - 1);
        if (arc.curvature < 1e-12) {
            keys[i] = {0.0, 0.0, s};
        } else {
            double ks = arc.curvature * s;
            double lateral = (1.0 - std::cos(ks)) / arc.curvature;
            keys[i] = {cphi * lateral, sphi * lateral, std::sin(ks) / arc.curvature};
        }
    }
    return keys;
}

Plant::Plant(const PlantParams& params, std::uint64_t noise_seed)
    : params_(params), noise_rng_(derive_seed(noise_seed, 0x706c616e74ULL)) {
    params_.validate();
    reset();
}

void Plant::reset(const Pressures& rest) {
    hyst_.state = rest;
}

KeyPointSet Plant::eval(const Pressures& p) {
    return eval_averaged(p, 1);
}

KeyPointSet Plant::eval_averaged(const Pressures& p, std::size_t reads) {
    for (double v : p)
        if (v < params_.pressure_min - 1e-9 || v > params_.pressure_max + 1e-9)
            throw InputRangeError(str_printf("pressure %.6g kPa outside [%g, %g]", v,
                                             params_.pressure_min, params_.pressure_max));
    auto [next, p_eff] = play_update(hyst_, p, params_.hysteresis_halfwidth);
    hyst_ = next;
    KeyPointSet keys = pcc_forward(p_eff, params_);
    if (params_.noise_sigma > 0.0 && reads > 0) {
        std::normal_distribution<double> noise(0.0, params_.noise_sigma);
        KeyPointSet acc(keys.size(), Point3{0, 0, 0});
        for (std::size_t r = 0; r < reads; ++r)
            for (auto& pt : acc) {
                pt.x += noise(noise_rng_);
                pt.y += noise(noise_rng_);
                pt.z += noise(noise_rng_);
            }
        for (std::size_t i = 0; i < keys.size(); ++i)
            keys[i] = keys[i] + acc[i] / static_cast<double>(reads);
    }
    return keys;
}

double sweep_tip_deviation(const PlantParams& params, double halfwidth, std::size_t levels) {
    // Single-chamber full-range sweep, up then down; compare tip positions at
    // matching pressure levels between the two passes.
    PlantParams p = params;
    p.hysteresis_halfwidth = halfwidth;
    p.noise_sigma = 0.0;
    Plant plant(p);
    plant.reset({p.pressure_min, p.pressure_min, p.pressure_min});

    auto tip = [&](const Pressures& pr) {
        KeyPointSet keys = plant.eval(pr);
        return keys.back();
    };

    std::vector<Point3> up(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        double v = p.pressure_min +
                   (p.pressure_max - p.pressure_min) * static_cast<double>(i) / (levels - 1);
        up[i] = tip({v, p.pressure_min, p.pressure_min});
    }
    double max_dev = 0.0;
    for (std::size_t i = levels; i-- > 0;) {
        double v = p.pressure_min +
                   (p.pressure_max - p.pressure_min) * static_cast<double>(i) / (levels - 1);
        Point3 down = tip({v, p.pressure_min, p.pressure_min});
        max_dev = std::max(max_dev, (down - up[i]).norm());
    }
    return max_dev;
}

double calibrate_hysteresis(const PlantParams& params, double target_fraction) {
    if (target_fraction == 0.0) return 0.0;
    if (!(target_fraction > 0.0) || target_fraction > 0.1)
        throw CalibrationError("target_fraction must be in [0, 0.1]");
    const double target = target_fraction * params.length_rest;
    double lo = 0.0;
    double hi = 0.5 * (params.pressure_max - params.pressure_min);
    double dev_lo = sweep_tip_deviation(params, lo);
    double dev_hi = sweep_tip_deviation(params, hi);
    if (dev_lo > dev_hi)
        throw CalibrationError("sweep deviation not monotone over bracket");
    if (target > dev_hi)
        throw CalibrationError(
            str_printf("target deviation %.3f mm unreachable (max %.3f mm at h=%.3f kPa)",
                       target, dev_hi, hi));
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        double dev = sweep_tip_deviation(params, mid);
        if (std::abs(dev - target) <= 1e-3 * target) return mid;
        if (dev < target)
            lo = mid;
        else
            hi = mid;
    }
    throw CalibrationError("bisection failed to converge");
}

}  // namespace softrl::plant
