#include "softrl/env.hpp"

#include <algorithm>
#include <cmath>

namespace softrl::rlenv {

namespace {
// Keeps exp(-distance) rewards strictly positive even for absurd errors.
constexpr double kMaxErrorForReward = 700.0;

std::vector<double> flatten(const plant::KeyPointSet& keys) {
    std::vector<double> out;
    out.reserve(keys.size() * 3);
    for (const auto& pt : keys) {
        out.push_back(pt.x);
        out.push_back(pt.y);
        out.push_back(pt.z);
    }
    return out;
}

plant::KeyPointSet unflatten(const std::vector<double>& y) {
    plant::KeyPointSet keys(y.size() / 3);
    for (std::size_t i = 0; i < keys.size(); ++i)
        keys[i] = {y[3 * i], y[3 * i + 1], y[3 * i + 2]};
    return keys;
}
}  // namespace

void TaskSpec::validate(std::size_t n_keys) const {
    if (waypoints.empty()) throw ConfigError("task: waypoints must be nonempty");
    if (episode_len < 1) throw ConfigError("task: episode length must be >= 1");
    if (dwell < 1) throw ConfigError("task: dwell must be >= 1");
    if (error_mode == ErrorMode::WholeBody) {
        if (body_waypoints.size() != waypoints.size())
            throw ConfigError("task: whole-body mode needs one body waypoint per waypoint");
        for (const auto& b : body_waypoints)
            if (b.size() != 3 * n_keys)
                throw ConfigError("task: body waypoint width must be 3*n_keys");
    }
}

void EnvConfig::validate() const {
    if (mode == EnvMode::Surrogate && model == nullptr)
        throw ConfigError("env: surrogate mode needs a model");
    if (!(action_bound > 0)) throw ConfigError("env: action bound must be positive");
    if (!(reward_scale > 0)) throw ConfigError("env: reward scale must be positive");
    plant.validate();
}

Env::Env(const EnvConfig& config, const TaskSpec& task)
    : config_(config),
      task_(task),
      noise_rng_(derive_seed(config.seed, 0x656e76ULL)) {
    config_.validate();
    task_.validate(config_.plant.n_keys);
    if (config_.mode == EnvMode::Surrogate) {
        std::size_t in = config_.model->input_size();
        if (in != 6 && in != 3) throw ConfigError("env: model input must be 3 or 6 wide");
        if (config_.model->output_size() != 3 * config_.plant.n_keys)
            throw ConfigError("env: model output width does not match n_keys");
    }
    reset();
}

std::vector<double> Env::body_at(const Pressures& p, const std::array<int, 3>& d) {
    if (config_.mode == EnvMode::Surrogate) {
        std::vector<double> in;
        if (config_.model->input_size() == 6)
            in = {p[0], p[1], p[2], static_cast<double>(d[0]), static_cast<double>(d[1]),
                  static_cast<double>(d[2])};
        else
            in = {p[0], p[1], p[2]};
        std::vector<double> y = config_.model->forward(in);
        for (double v : y)
            if (!std::isfinite(v))
                throw EnvFault(str_printf("non-finite model output at step %zu", t_));
        return y;
    }
    // Deploy mode: PID loops drive the chamber pressures toward p; the play
    // operator follows the inner pressure path.
    for (std::size_t tick = 0; tick < config_.inner_ticks; ++tick) {
        Pressures actual;
        for (std::size_t c = 0; c < 3; ++c)
            actual[c] = loops_[c].tick(p[c], config_.inner_dt);
        hyst_ = plant::play_update(hyst_, actual, config_.plant.hysteresis_halfwidth).first;
    }
    Pressures actual{loops_[0].pressure(), loops_[1].pressure(), loops_[2].pressure()};
    p_ = actual;  // the policy observes the measured pressure
    plant::KeyPointSet keys = plant::pcc_forward(hyst_.state, config_.plant);
    if (config_.plant.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, config_.plant.noise_sigma);
        for (auto& pt : keys) {
            pt.x += noise(noise_rng_);
            pt.y += noise(noise_rng_);
            pt.z += noise(noise_rng_);
        }
    }
    return flatten(keys);
}

std::size_t Env::waypoint_index() const {
    return (t_ / task_.dwell) % task_.waypoints.size();
}

Point3 Env::current_target() const {
    return task_.waypoints[waypoint_index()];
}

Point3 Env::tip() const {
    std::size_t n = y_body_.size();
    return {y_body_[n - 3], y_body_[n - 2], y_body_[n - 1]};
}

double Env::task_error(const std::vector<double>& y_body, std::size_t waypoint,
                       Point3* task_point) const {
    const Point3 target = task_.waypoints[waypoint];
    std::size_t n = y_body.size();
    Point3 tip{y_body[n - 3], y_body[n - 2], y_body[n - 1]};
    if (task_.kind == TaskKind::LaserTrack) {
        plant::KeyPointSet keys = unflatten(y_body);
        Point3 hit;
        try {
            Point3 tangent = geometry::tip_tangent(keys);
            hit = geometry::ray_plane_intersect(tip, tangent, task_.plane);
        } catch (const GeometryError&) {
            if (task_point) *task_point = tip;
            return kMaxErrorForReward;  // beam misses the plane entirely
        }
        if (task_point) *task_point = hit;
        return std::min((hit - target).norm(), kMaxErrorForReward);
    }
    if (task_.error_mode == ErrorMode::WholeBody) {
        const auto& body_target = task_.body_waypoints[waypoint];
        double acc = 0.0;
        for (std::size_t i = 0; i < y_body.size(); ++i) {
            double e = body_target[i] - y_body[i];
            acc += e * e;
        }
        if (task_point) *task_point = tip;
        return std::min(std::sqrt(acc), kMaxErrorForReward);
    }
    if (task_point) *task_point = tip;
    return std::min((tip - target).norm(), kMaxErrorForReward);
}

EnvObservation Env::make_obs() const {
    const std::size_t n3 = 3 * config_.plant.n_keys;
    EnvObservation obs;
    obs.y_body = y_body_;
    obs.e.assign(n3, 0.0);
    const std::size_t wp = waypoint_index();
    if (task_.error_mode == ErrorMode::WholeBody && task_.kind == TaskKind::TipTrack) {
        const auto& body_target = task_.body_waypoints[wp];
        for (std::size_t i = 0; i < n3; ++i) obs.e[i] = body_target[i] - y_body_[i];
    } else if (task_.kind == TaskKind::LaserTrack) {
        // Error of the beam hit point, reported in the tip slot.
        Point3 hit;
        double err = task_error(y_body_, wp, &hit);
        (void)err;
        const Point3 target = task_.waypoints[wp];
        obs.e[n3 - 3] = target.x - hit.x;
        obs.e[n3 - 2] = target.y - hit.y;
        obs.e[n3 - 1] = target.z - hit.z;
    } else {
        const Point3 target = task_.waypoints[wp];
        const Point3 t = tip();
        obs.e[n3 - 3] = target.x - t.x;
        obs.e[n3 - 2] = target.y - t.y;
        obs.e[n3 - 1] = target.z - t.z;
    }
    obs.p = p_;
    obs.d = d_;
    obs.t = t_;

    const double len = config_.plant.length_rest;
    const double prange = config_.plant.pressure_max - config_.plant.pressure_min;
    obs.vec.reserve(6 * config_.plant.n_keys + 7);
    for (double v : obs.y_body) obs.vec.push_back(v / len);
    for (double v : obs.e) obs.vec.push_back(v / len);
    for (double v : obs.p) obs.vec.push_back((v - config_.plant.pressure_min) / prange);
    for (int v : obs.d) obs.vec.push_back(static_cast<double>(v));
    obs.vec.push_back(static_cast<double>(obs.t) / static_cast<double>(task_.episode_len));
    return obs;
}

EnvObservation Env::reset() {
    p_ = config_.rest;
    d_ = {1, 1, 1};
    t_ = 0;
    done_ = false;
    if (config_.mode == EnvMode::Deploy) {
        hyst_.state = config_.rest;
        loops_.clear();
        for (std::size_t c = 0; c < 3; ++c)
            loops_.emplace_back(config_.pid, config_.actuator, config_.rest[c]);
        plant::KeyPointSet keys = plant::pcc_forward(hyst_.state, config_.plant);
        y_body_ = flatten(keys);
    } else {
        y_body_ = body_at(p_, d_);
    }
    last_error_ = task_error(y_body_, waypoint_index(), &last_task_point_);
    return make_obs();
}

StepResult Env::step(const std::array<double, 3>& action) {
    if (done_) throw EnvFault("step() called on a finished episode; reset first");
    std::array<double, 3> a;
    for (std::size_t c = 0; c < 3; ++c)
        a[c] = std::clamp(action[c], -config_.action_bound, config_.action_bound);
    for (std::size_t c = 0; c < 3; ++c)
        d_[c] = a[c] > 0.0 ? 1 : (a[c] < 0.0 ? -1 : d_[c]);

    Pressures target;
    for (std::size_t c = 0; c < 3; ++c)
        target[c] = std::clamp(p_[c] + a[c], config_.plant.pressure_min,
                               config_.plant.pressure_max);
    p_ = target;

    const std::size_t active_waypoint = waypoint_index();  // target chased during this step
    y_body_ = body_at(target, d_);
    t_ += 1;

    last_error_ = task_error(y_body_, active_waypoint, &last_task_point_);
    StepResult result;
    result.reward = std::exp(-last_error_ / config_.reward_scale);
    result.done = t_ >= task_.episode_len;
    done_ = result.done;
    result.obs = make_obs();
    return result;
}

VecEnv::VecEnv(const EnvConfig& config, const TaskSpec& task, std::size_t n_envs,
               unsigned n_threads)
    : n_threads_(n_threads) {
    if (n_envs == 0) throw ConfigError("vec env: need at least one env");
    envs_.reserve(n_envs);
    for (std::size_t i = 0; i < n_envs; ++i) {
        EnvConfig c = config;
        c.seed = derive_seed(config.seed, i);
        envs_.emplace_back(c, task);
    }
}

std::vector<EnvObservation> VecEnv::reset_all() {
    std::vector<EnvObservation> obs(envs_.size());
    for (std::size_t i = 0; i < envs_.size(); ++i) obs[i] = envs_[i].reset();
    return obs;
}

std::vector<VecStepResult> VecEnv::step(const std::vector<std::array<double, 3>>& actions) {
    if (actions.size() != envs_.size())
        throw DimensionError("vec env: action count mismatch");
    std::vector<VecStepResult> results(envs_.size());
    parallel_for(envs_.size(), n_threads_, [&](std::size_t i) {
        VecStepResult& r = results[i];
        try {
            StepResult s = envs_[i].step(actions[i]);
            r.reward = s.reward;
            r.done = s.done;
            if (s.done) {
                r.terminal_obs = std::move(s.obs);
                r.obs = envs_[i].reset();
            } else {
                r.obs = std::move(s.obs);
            }
        } catch (const std::exception& e) {
            r.fault = e.what();
        }
    });
    return results;
}

std::vector<std::vector<double>> VecEnv::reset_all_flat() {
    auto obs = reset_all();
    std::vector<std::vector<double>> out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) out[i] = std::move(obs[i].vec);
    return out;
}

std::vector<VecEnv::FlatStep> VecEnv::step_flat(const std::vector<std::vector<double>>& actions) {
    std::vector<std::array<double, 3>> acts(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i].size() != 3) throw DimensionError("vec env: action width must be 3");
        acts[i] = {actions[i][0], actions[i][1], actions[i][2]};
    }
    auto results = step(acts);
    std::vector<FlatStep> out(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].fault) {
            out[i].fault = true;
            out[i].fault_msg = *results[i].fault;
            continue;
        }
        out[i].obs = std::move(results[i].obs.vec);
        out[i].reward = results[i].reward;
        out[i].done = results[i].done;
    }
    return out;
}

TaskSpec make_task(const TaskParams& params) {
    TaskSpec task;
    task.episode_len = params.episode_len;
    task.dwell = params.dwell;
    task.error_mode = params.error_mode;
    if (params.waypoints == 0) throw ConfigError("task: need at least one waypoint");

    const bool laser = params.kind.rfind("laser", 0) == 0;
    const std::string shape = laser ? params.kind.substr(6) : params.kind;
    const double z = laser ? params.plane_z : params.center.z;
    if (laser) {
        task.kind = TaskKind::LaserTrack;
        task.plane = geometry::make_plane({0, 0, 1}, params.plane_z);
        task.error_mode = ErrorMode::TipOnly;
    }

    if (shape == "circle") {
        if (!(params.radius > 0)) throw ConfigError("task: circle radius must be positive");
        for (std::size_t k = 0; k < params.waypoints; ++k) {
            double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(params.waypoints);
            task.waypoints.push_back({params.center.x + params.radius * std::cos(th),
                                      params.center.y + params.radius * std::sin(th), z});
        }
    } else if (shape == "square") {
        if (!(params.side > 0)) throw ConfigError("task: square side must be positive");
        const double s = params.side, half = s / 2.0;
        // corners in CCW order starting at (-half, -half)
        const Point3 corners[4] = {{params.center.x - half, params.center.y - half, z},
                                   {params.center.x + half, params.center.y - half, z},
                                   {params.center.x + half, params.center.y + half, z},
                                   {params.center.x - half, params.center.y + half, z}};
        for (std::size_t k = 0; k < params.waypoints; ++k) {
            double arc = 4.0 * s * static_cast<double>(k) / static_cast<double>(params.waypoints);
            std::size_t edge = std::min<std::size_t>(3, static_cast<std::size_t>(arc / s));
            double along = arc - static_cast<double>(edge) * s;
            Point3 a = corners[edge], b = corners[(edge + 1) % 4];
            task.waypoints.push_back(a + (b - a) * (along / s));
        }
    } else {
        throw ConfigError("unknown task kind: " + params.kind);
    }
    return task;
}

double Workspace::ring_z(double frac) const {
    double lo = (frac - 0.1) * radius_xy, hi = (frac + 0.1) * radius_xy;
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& p : points) {
        double r = std::hypot(p.x, p.y);
        if (r >= lo && r <= hi) {
            acc += p.z;
            ++count;
        }
    }
    if (count == 0) return centroid.z;
    return acc / static_cast<double>(count);
}

namespace {

Workspace summarize(std::vector<Point3> pts) {
    Workspace ws;
    ws.points = std::move(pts);
    for (const auto& p : ws.points) {
        ws.radius_xy = std::max(ws.radius_xy, std::hypot(p.x, p.y));
        ws.centroid = ws.centroid + p;
    }
    if (!ws.points.empty()) ws.centroid = ws.centroid / static_cast<double>(ws.points.size());
    for (std::size_t i = 0; i < ws.points.size(); ++i)
        for (std::size_t j = i + 1; j < ws.points.size(); ++j) {
            double dx = ws.points[i].x - ws.points[j].x;
            double dy = ws.points[i].y - ws.points[j].y;
            ws.diameter = std::max(ws.diameter, std::hypot(dx, dy));
        }
    return ws;
}

template <typename F>
std::vector<Point3> grid_sample(const nn::MlpModel& model, const plant::PlantParams& plant,
                                std::size_t grid_n, F&& to_point) {
    std::vector<Point3> pts;
    auto level = [&](std::size_t i) {
        return plant.pressure_min + (plant.pressure_max - plant.pressure_min) *
                                        static_cast<double>(i) / static_cast<double>(grid_n - 1);
    };
    const bool six = model.input_size() == 6;
    for (double dsign : {1.0, -1.0}) {
        for (std::size_t i = 0; i < grid_n; ++i)
            for (std::size_t j = 0; j < grid_n; ++j)
                for (std::size_t k = 0; k < grid_n; ++k) {
                    std::vector<double> in;
                    if (six)
                        in = {level(i), level(j), level(k), dsign, dsign, dsign};
                    else
                        in = {level(i), level(j), level(k)};
                    std::vector<double> y = model.forward(in);
                    auto pt = to_point(y);
                    if (pt) pts.push_back(*pt);
                }
        if (!six) break;
    }
    return pts;
}

}  // namespace

Workspace tip_workspace(const nn::MlpModel& model, const plant::PlantParams& plant,
                        std::size_t grid_n) {
    auto pts = grid_sample(model, plant, grid_n,
                           [](const std::vector<double>& y) -> std::optional<Point3> {
                               std::size_t n = y.size();
                               return Point3{y[n - 3], y[n - 2], y[n - 1]};
                           });
    return summarize(std::move(pts));
}

Workspace laser_workspace(const nn::MlpModel& model, const plant::PlantParams& plant,
                          const Plane& plane, std::size_t grid_n) {
    auto pts = grid_sample(model, plant, grid_n,
                           [&](const std::vector<double>& y) -> std::optional<Point3> {
                               plant::KeyPointSet keys = unflatten(y);
                               try {
                                   Point3 tangent = geometry::tip_tangent(keys);
                                   return geometry::ray_plane_intersect(keys.back(), tangent,
                                                                        plane);
                               } catch (const GeometryError&) {
                                   return std::nullopt;
                               }
                           });
    return summarize(std::move(pts));
}

double distance_to_convex_hull(const Point3& q, const std::vector<Point3>& points,
                               std::size_t iterations) {
    if (points.empty()) throw GeometryError("hull distance needs points");
    // Frank-Wolfe on min ||x - q||^2 over the convex hull.
    Point3 x = points.front();
    double best_start = (x - q).norm();
    for (const auto& p : points) {
        double d = (p - q).norm();
        if (d < best_start) {
            best_start = d;
            x = p;
        }
    }
    for (std::size_t it = 0; it < iterations; ++it) {
        Point3 grad = (x - q) * 2.0;
        const Point3* vertex = &points.front();
        double best = grad.dot(points.front());
        for (const auto& p : points) {
            double v = grad.dot(p);
            if (v < best) {
                best = v;
                vertex = &p;
            }
        }
        Point3 dir = *vertex - x;
        double denom = dir.dot(dir);
        if (denom < 1e-18) break;
        double gamma = std::clamp(-(x - q).dot(dir) / denom, 0.0, 1.0);
        if (gamma <= 0.0) break;
        x = x + dir * gamma;
    }
    return (x - q).norm();
}

}  // namespace softrl::rlenv
