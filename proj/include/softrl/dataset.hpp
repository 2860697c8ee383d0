#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "softrl/plant.hpp"

namespace softrl::dataset {

using plant::Plant;
using plant::PlantParams;
using plant::Pressures;

/// One recorded sample: commanded pressures, direction signs, flattened key
/// point coordinates (x1,y1,z1,...,xn,yn,zn in mm).
struct Sample {
    Pressures p{0, 0, 0};
    std::array<int, 3> d{1, 1, 1};
    std::vector<double> y;
};

enum class SweepOrdering { Snake, RandomizedMonotoneRuns };

struct SweepPlan {
    std::size_t steps_per_axis = 24;
    SweepOrdering ordering = SweepOrdering::Snake;
    std::uint64_t seed = 0;
};

/// Boustrophedon traversal of the full pressure grid: consecutive targets
/// differ in exactly one chamber by one grid step; every point visited once.
std::vector<Pressures> generate_sweep(const SweepPlan& plan, double p_min, double p_max);

/// Random monotone runs on the same grid: each run varies one chamber
/// monotonically; used for validation/test sets whose direction-conditional
/// distribution differs from the snake's.
std::vector<Pressures> generate_monotone_runs(std::size_t steps_per_axis, std::size_t count,
                                              double p_min, double p_max, std::uint64_t seed);

/// Drives the plant through the targets quasi-statically, recording direction
/// signs from consecutive pressure changes (zero change carries the previous
/// sign, initial sign +1) and averaging avg_reads sensor reads per target.
std::vector<Sample> collect(Plant& plant, const std::vector<Pressures>& targets,
                            std::size_t avg_reads = 20);

struct DatasetBundle {
    std::vector<Sample> train;
    std::vector<Sample> val;
    std::vector<Sample> test;
    double calibrated_halfwidth = 0.0;
};

/// Full acquisition pipeline: snake sweep for training, two independent
/// randomized-monotone-run sweeps for validation and test.
DatasetBundle generate_dataset(const PlantParams& params, const SweepPlan& plan,
                               std::size_t val_count, std::size_t test_count,
                               std::uint64_t seed, std::size_t avg_reads = 20);

void save_samples(const std::vector<Sample>& samples, const std::string& path);
std::vector<Sample> load_samples(const std::string& path);

/// Writes <stem>.train.csv / <stem>.val.csv / <stem>.test.csv plus a
/// <stem>.meta.json sidecar with plant parameters, seed, and sweep plan.
void save_dataset(const DatasetBundle& bundle, const PlantParams& params,
                  const SweepPlan& plan, std::uint64_t seed, const std::string& stem);

// Flat matrix views for model training.
struct DataMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;
    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

/// Inputs with direction columns: [p1,p2,p3,d1,d2,d3].
DataMatrix inputs_6d(const std::vector<Sample>& samples);
/// Pressure-only inputs: [p1,p2,p3].
DataMatrix inputs_3d(const std::vector<Sample>& samples);
DataMatrix targets(const std::vector<Sample>& samples);

}  // namespace softrl::dataset
