#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "softrl/geometry.hpp"
#include "softrl/util.hpp"

namespace softrl::plant {

using geometry::KeyPointSet;
using geometry::Point3;

using Pressures = std::array<double, 3>;

struct PlantParams {
    double length_rest = 70.0;        // mm
    double radius = 7.5;              // mm
    double chamber_offset = 4.5;      // mm, radial distance of each chamber axis
    double elong_gain = 0.1;          // mm/kPa
    double bend_gain = 2.5e-4;        // 1/(mm*kPa)
    double hysteresis_halfwidth = 0.0;  // kPa
    std::size_t n_keys = 5;
    double pressure_min = 0.0;        // kPa
    double pressure_max = 60.0;       // kPa
    double noise_sigma = 0.0;         // mm, additive sensor noise on key points

    void validate() const;
};

/// Per-chamber internal state of the play (backlash) hysteresis operator.
struct HysteresisState {
    Pressures state{0.0, 0.0, 0.0};
};

/// One play-operator update: each chamber state is clamped into the band
/// [p_i - h, p_i + h]; the new state is the effective pressure.
std::pair<HysteresisState, Pressures> play_update(const HysteresisState& state,
                                                  const Pressures& p, double halfwidth);

struct ArcParams {
    double curvature = 0.0;      // 1/mm
    double plane_angle = 0.0;    // rad, bending plane azimuth
    double arc_length = 0.0;     // mm
};

ArcParams pcc_arc_params(const Pressures& p_eff, const PlantParams& params);

/// Constant-curvature forward kinematics: n_keys points at equal arc-length
/// fractions along the arc, base at the origin, undeformed axis +z.
KeyPointSet pcc_forward(const Pressures& p_eff, const PlantParams& params);

/// Synthetic ground-truth robot: play-operator hysteresis in front of the PCC
/// map, standing in for the physical plant and its motion-capture rig.
class Plant {
public:
    explicit Plant(const PlantParams& params, std::uint64_t noise_seed = 0);

    /// Hysteresis update followed by the PCC map. Throws InputRangeError when a
    /// commanded pressure leaves [pressure_min, pressure_max].
    KeyPointSet eval(const Pressures& p);

    /// Mean of `reads` noisy evaluations at the same pressure (one hysteresis
    /// update); with noise_sigma == 0 this equals a single read.
    KeyPointSet eval_averaged(const Pressures& p, std::size_t reads);

    void reset(const Pressures& rest = {0.0, 0.0, 0.0});

    const PlantParams& params() const { return params_; }
    const HysteresisState& hysteresis() const { return hyst_; }
    Pressures effective_pressure() const { return hyst_.state; }

private:
    PlantParams params_;
    HysteresisState hyst_;
    Rng noise_rng_;
};

/// Finds the play half-width h such that the maximum tip deviation between the
/// ascending and descending branches of a full single-chamber sweep equals
/// target_fraction * length_rest (bisection, 0.1% relative tolerance).
double calibrate_hysteresis(const PlantParams& params, double target_fraction);

/// Maximum up/down tip deviation (mm) of a full single-chamber sweep at the
/// given half-width; exposed for calibration verification.
double sweep_tip_deviation(const PlantParams& params, double halfwidth,
                           std::size_t levels = 241);

}  // namespace softrl::plant
