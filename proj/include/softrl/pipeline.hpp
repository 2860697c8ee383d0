#pragma once

#include <string>
#include <vector>

#include "softrl/checkpoint.hpp"
#include "softrl/config.hpp"
#include "softrl/dataset.hpp"
#include "softrl/env.hpp"
#include "softrl/nn.hpp"
#include "softrl/ppo.hpp"

namespace softrl::pipeline {

inline constexpr const char* kVersion = "0.1.0";

/// Plant parameters from the config; a negative configured half-width is
/// resolved by calibrating against plant.hysteresis_target.
plant::PlantParams resolve_plant(const config::RunConfig& cfg);

rlenv::EnvConfig env_config_from(const config::RunConfig& cfg, rlenv::EnvMode mode,
                                 const nn::MlpModel* model, const plant::PlantParams& plant_params,
                                 std::uint64_t seed);

/// Task built from the config and the trained model's workspace (sizes scale
/// with task.size_frac of the workspace radius).
rlenv::TaskSpec task_from(const config::RunConfig& cfg, const nn::MlpModel& model,
                          const plant::PlantParams& plant_params);

struct GenDataReport {
    std::size_t train_count = 0;
    std::size_t val_count = 0;
    std::size_t test_count = 0;
    double calibrated_halfwidth = 0.0;
    double deviation_fraction = 0.0;  // verification sweep, fraction of rest length
    std::vector<std::string> files;
};

GenDataReport cmd_gen_data(const config::RunConfig& cfg, const std::string& out_stem);

struct TrainModelReport {
    double best_val_wmse = 0.0;
    double test_wmse = 0.0;
    double test_mse = 0.0;
    std::size_t epochs_ran = 0;
    bool early_stopped = false;
    std::string checkpoint_path;
};

TrainModelReport cmd_train_model(const config::RunConfig& cfg, const std::string& dataset_stem,
                                 const std::string& out_path);

struct AblationRunReport {
    nn::AblationReport report;
    std::string csv_path;
};

/// The fixed six-architecture sweep ({3,4} hidden layers x {64,128,256} width),
/// each trained with 6D and 3D inputs.
AblationRunReport cmd_ablation(const config::RunConfig& cfg, const std::string& dataset_stem,
                               const std::string& out_csv);

struct TrainPolicyReport {
    ppo::TrainStatus status = ppo::TrainStatus::Completed;
    double best_eval_reward = 0.0;
    std::size_t updates = 0;
    std::size_t total_steps = 0;
    std::string checkpoint_path;
    std::string curve_path;
};

TrainPolicyReport cmd_train_policy(const config::RunConfig& cfg, const std::string& model_path,
                                   const std::string& out_path);

struct EvaluateReport {
    double mean_error = 0.0;  // mm, task error per step
    double max_error = 0.0;
    std::vector<double> per_waypoint_error;
    double mean_reward = 0.0;
    std::string trajectory_csv;
    std::string svg_path;
    std::string metrics_path;
};

EvaluateReport cmd_evaluate(const config::RunConfig& cfg, const std::string& policy_path,
                            const std::string& model_path, const std::string& mode,
                            const std::string& out_stem);

void save_policy(const ppo::PolicyNet& policy, const ppo::AdamState& adam,
                 const nlohmann::ordered_json& extra_header, const std::string& path);
ppo::PolicyNet load_policy(const std::string& path, ppo::AdamState* adam = nullptr);

}  // namespace softrl::pipeline
