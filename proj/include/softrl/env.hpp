#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "softrl/actuation.hpp"
#include "softrl/geometry.hpp"
#include "softrl/nn.hpp"
#include "softrl/plant.hpp"

namespace softrl::rlenv {

using geometry::Plane;
using geometry::Point3;
using plant::Pressures;

enum class TaskKind { TipTrack, LaserTrack };
enum class ErrorMode { TipOnly, WholeBody };
enum class EnvMode { Surrogate, Deploy };

struct TaskSpec {
    TaskKind kind = TaskKind::TipTrack;
    std::vector<Point3> waypoints;  // tip targets (mm) or laser targets on the plane
    /// Full-body targets (3n each), required only in WholeBody error mode.
    std::vector<std::vector<double>> body_waypoints;
    Plane plane{{0, 0, 1}, 0.0};  // laser target plane
    std::size_t episode_len = 400;
    std::size_t dwell = 10;  // steps per waypoint before advancing
    ErrorMode error_mode = ErrorMode::TipOnly;

    void validate(std::size_t n_keys) const;
};

struct EnvConfig {
    EnvMode mode = EnvMode::Surrogate;
    const nn::MlpModel* model = nullptr;  // required in surrogate mode
    plant::PlantParams plant;             // ground truth for deploy mode; also
                                          // supplies normalization constants
    actuation::PidGains pid;
    actuation::ActuatorParams actuator;
    double action_bound = 3.0;  // kPa per step and chamber
    /// Length scale (mm) of the exponential reward exp(-error/scale).
    double reward_scale = 1.0;
    Pressures rest{0.0, 0.0, 0.0};
    double inner_dt = 0.02;        // deploy-mode PID tick, s
    std::size_t inner_ticks = 50;  // deploy-mode ticks per env step
    std::uint64_t seed = 0;

    void validate() const;
};

/// Observation [Y_body, e, P, t]: raw fields in mm/kPa plus the normalized
/// flat vector the policy consumes (length 6n + 7).
struct EnvObservation {
    std::vector<double> y_body;  // 3n, mm
    std::vector<double> e;       // 3n, mm; zero outside the task's error slots
    Pressures p{0, 0, 0};        // kPa
    std::array<int, 3> d{1, 1, 1};
    std::size_t t = 0;
    std::vector<double> vec;     // normalized, length 6n + 7
};

struct StepResult {
    EnvObservation obs;
    double reward = 0.0;
    bool done = false;
};

class Env {
public:
    Env(const EnvConfig& config, const TaskSpec& task);

    EnvObservation reset();
    StepResult step(const std::array<double, 3>& action);

    std::size_t n_keys() const { return config_.plant.n_keys; }
    std::size_t obs_dim() const { return 6 * n_keys() + 7; }
    const Pressures& pressures() const { return p_; }
    Point3 tip() const;
    /// The point the task error is measured at: the tip, or the laser hit.
    Point3 task_point() const { return last_task_point_; }
    Point3 current_target() const;
    std::size_t waypoint_index() const;
    std::size_t step_index() const { return t_; }
    const TaskSpec& task() const { return task_; }
    const EnvConfig& config() const { return config_; }
    /// Euclidean task error (mm) of the last step.
    double last_error() const { return last_error_; }

private:
    std::vector<double> body_at(const Pressures& p, const std::array<int, 3>& d);
    EnvObservation make_obs() const;
    double task_error(const std::vector<double>& y_body, std::size_t waypoint,
                      Point3* task_point) const;

    EnvConfig config_;
    TaskSpec task_;
    Pressures p_{0, 0, 0};
    std::array<int, 3> d_{1, 1, 1};
    std::size_t t_ = 0;
    bool done_ = true;
    std::vector<double> y_body_;
    double last_error_ = 0.0;
    Point3 last_task_point_{0, 0, 0};

    // deploy-mode internals
    plant::HysteresisState hyst_;
    std::vector<actuation::PressureLoop> loops_;
    Rng noise_rng_;
};

struct VecStepResult {
    EnvObservation obs;  // post-reset observation when done
    double reward = 0.0;
    bool done = false;
    std::optional<EnvObservation> terminal_obs;  // pre-reset observation at episode end
    std::optional<std::string> fault;
};

/// Order-preserving vectorized runner; with n_threads > 1 the envs are stepped
/// concurrently and results are bit-identical to the sequential loop.
class VecEnv {
public:
    VecEnv(const EnvConfig& config, const TaskSpec& task, std::size_t n_envs,
           unsigned n_threads = 1);

    std::vector<EnvObservation> reset_all();
    std::vector<VecStepResult> step(const std::vector<std::array<double, 3>>& actions);

    std::size_t size() const { return envs_.size(); }
    std::size_t obs_dim() const { return envs_.front().obs_dim(); }
    Env& env(std::size_t i) { return envs_[i]; }

    // Flat adapter consumed by the PPO rollout collector.
    struct FlatStep {
        std::vector<double> obs;
        double reward = 0.0;
        bool done = false;
        bool fault = false;
        std::string fault_msg;
    };
    std::vector<std::vector<double>> reset_all_flat();
    std::vector<FlatStep> step_flat(const std::vector<std::vector<double>>& actions);

private:
    std::vector<Env> envs_;
    unsigned n_threads_;
};

struct TaskParams {
    std::string kind = "circle";  // circle | square | laser-circle | laser-square
    Point3 center{0, 0, 0};       // circle/square center (z = tracking plane height)
    double radius = 10.0;         // circle radius, mm
    double side = 10.0;           // square side, mm
    std::size_t waypoints = 40;
    std::size_t dwell = 10;
    std::size_t episode_len = 400;
    double plane_z = 120.0;  // laser plane height, mm
    ErrorMode error_mode = ErrorMode::TipOnly;
};

TaskSpec make_task(const TaskParams& params);

/// Tip positions of the model sampled over the pressure grid (both direction
/// labels), with the XY extent used to size tracking tasks.
struct Workspace {
    std::vector<Point3> points;
    double radius_xy = 0.0;   // max sqrt(x^2+y^2)
    double diameter = 0.0;    // max pairwise distance (XY projection)
    Point3 centroid{0, 0, 0};
    /// Mean z of samples whose XY radius is near frac * radius_xy.
    double ring_z(double frac) const;
};

Workspace tip_workspace(const nn::MlpModel& model, const plant::PlantParams& plant,
                        std::size_t grid_n = 9);
Workspace laser_workspace(const nn::MlpModel& model, const plant::PlantParams& plant,
                          const Plane& plane, std::size_t grid_n = 9);

/// Distance from q to the convex hull of points (Frank-Wolfe on the squared
/// distance); 0 for interior points.
double distance_to_convex_hull(const Point3& q, const std::vector<Point3>& points,
                               std::size_t iterations = 400);

}  // namespace softrl::rlenv
