#include "softrl/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <thread>
#include <sstream>

#include "softrl/svg.hpp"

namespace softrl::pipeline {

namespace {

nlohmann::ordered_json run_meta(const config::RunConfig& cfg, const std::string& command) {
    nlohmann::ordered_json meta;
    meta["command"] = command;
    meta["version"] = kVersion;
    meta["seed"] = cfg.get_u64("run.seed");
    meta["config_hash"] = str_printf("%016llx", static_cast<unsigned long long>(cfg.hash()));
    return meta;
}

nn::TrainConfig train_config_from(const config::RunConfig& cfg, std::uint64_t seed) {
    nn::TrainConfig tc;
    tc.learning_rate = cfg.get_double("model.learning_rate");
    tc.batch_size = cfg.get_size("model.batch_size");
    tc.max_epochs = cfg.get_size("model.max_epochs");
    tc.eval_every_epochs = cfg.get_size("model.eval_every");
    tc.patience_evals = cfg.get_size("model.patience");
    tc.seed = seed;
    return tc;
}

ppo::PpoConfig ppo_config_from(const config::RunConfig& cfg) {
    ppo::PpoConfig pc;
    pc.gamma = cfg.get_double("ppo.gamma");
    pc.gae_lambda = cfg.get_double("ppo.gae_lambda");
    pc.entropy_coef = cfg.get_double("ppo.entropy_coef");
    pc.clip_range = cfg.get_double("ppo.clip_range");
    pc.value_coef = cfg.get_double("ppo.value_coef");
    pc.learning_rate = cfg.get_double("ppo.learning_rate");
    pc.n_envs = cfg.get_size("ppo.n_envs");
    pc.steps_per_env = cfg.get_size("ppo.steps_per_env");
    pc.epochs = cfg.get_size("ppo.epochs");
    pc.minibatch = cfg.get_size("ppo.minibatch");
    pc.total_steps = cfg.get_size("ppo.total_steps");
    pc.eval_every_updates = cfg.get_size("ppo.eval_every_updates");
    pc.log_std_init = cfg.get_double("ppo.log_std_init");
    pc.kl_abort = cfg.get_double("ppo.kl_abort");
    pc.kl_abort_consecutive = cfg.get_size("ppo.kl_abort_consecutive");
    pc.seed = derive_seed(cfg.get_u64("run.seed"), 0x70706fULL);
    return pc;
}

}  // namespace

plant::PlantParams resolve_plant(const config::RunConfig& cfg) {
    plant::PlantParams p;
    p.length_rest = cfg.get_double("plant.length_rest");
    p.radius = cfg.get_double("plant.radius");
    p.chamber_offset = cfg.get_double("plant.chamber_offset");
    p.elong_gain = cfg.get_double("plant.elong_gain");
    p.bend_gain = cfg.get_double("plant.bend_gain");
    p.pressure_min = cfg.get_double("plant.pressure_min");
    p.pressure_max = cfg.get_double("plant.pressure_max");
    p.noise_sigma = cfg.get_double("plant.noise_sigma");
    p.n_keys = cfg.get_size("plant.n_keys");
    double h = cfg.get_double("plant.hysteresis_halfwidth");
    if (h < 0.0) {
        double target = cfg.get_double("plant.hysteresis_target");
        p.hysteresis_halfwidth = 0.0;
        h = plant::calibrate_hysteresis(p, target);
    }
    p.hysteresis_halfwidth = h;
    p.validate();
    return p;
}

rlenv::EnvConfig env_config_from(const config::RunConfig& cfg, rlenv::EnvMode mode,
                                 const nn::MlpModel* model, const plant::PlantParams& plant_params,
                                 std::uint64_t seed) {
    rlenv::EnvConfig ec;
    ec.mode = mode;
    ec.model = model;
    ec.plant = plant_params;
    ec.pid.kp = cfg.get_double("actuation.kp");
    ec.pid.ki = cfg.get_double("actuation.ki");
    ec.pid.kd = cfg.get_double("actuation.kd");
    ec.pid.integral_clamp = cfg.get_double("actuation.integral_clamp");
    ec.pid.output_clamp = cfg.get_double("actuation.output_clamp");
    ec.pid.deriv_filter = cfg.get_double("actuation.deriv_filter");
    ec.actuator.speed_gain = cfg.get_double("actuation.speed_gain");
    ec.actuator.rate_max = cfg.get_double("actuation.rate_max");
    ec.actuator.pressure_min = plant_params.pressure_min;
    ec.actuator.pressure_max = plant_params.pressure_max;
    ec.action_bound = cfg.get_double("env.action_bound");
    ec.reward_scale = cfg.get_double("env.reward_scale");
    ec.rest = {cfg.get_double("env.rest_p1"), cfg.get_double("env.rest_p2"),
               cfg.get_double("env.rest_p3")};
    double hz = cfg.get_double("actuation.inner_hz");
    double period = cfg.get_double("actuation.step_period");
    ec.inner_dt = 1.0 / hz;
    ec.inner_ticks = static_cast<std::size_t>(std::lround(hz * period));
    ec.seed = seed;
    return ec;
}

rlenv::TaskSpec task_from(const config::RunConfig& cfg, const nn::MlpModel& model,
                          const plant::PlantParams& plant_params) {
    rlenv::TaskParams tp;
    tp.kind = cfg.get("task.kind");
    tp.waypoints = cfg.get_size("task.waypoints");
    tp.dwell = cfg.get_size("task.dwell");
    tp.episode_len = cfg.get_size("task.episode_len");
    tp.plane_z = cfg.get_double("task.plane_z");
    std::string error_mode = cfg.get("task.error_mode");
    if (error_mode == "tip")
        tp.error_mode = rlenv::ErrorMode::TipOnly;
    else if (error_mode == "whole-body")
        tp.error_mode = rlenv::ErrorMode::WholeBody;
    else
        throw ConfigError("unknown task.error_mode: " + error_mode);

    const double frac = cfg.get_double("task.size_frac");
    const bool laser = tp.kind.rfind("laser", 0) == 0;
    rlenv::Workspace ws =
        laser ? rlenv::laser_workspace(model, plant_params,
                                       geometry::make_plane({0, 0, 1}, tp.plane_z))
              : rlenv::tip_workspace(model, plant_params);
    tp.radius = frac * ws.radius_xy;
    tp.side = frac * ws.radius_xy;
    tp.center.x = cfg.get_double("task.center_x");
    tp.center.y = cfg.get_double("task.center_y");
    double z = cfg.get_double("task.z");
    if (laser)
        tp.center.z = tp.plane_z;
    else if (std::isnan(z))
        tp.center.z = ws.ring_z(frac);
    else
        tp.center.z = z;
    return rlenv::make_task(tp);
}

GenDataReport cmd_gen_data(const config::RunConfig& cfg, const std::string& out_stem) {
    plant::PlantParams params = resolve_plant(cfg);
    dataset::SweepPlan plan;
    plan.steps_per_axis = cfg.get_size("dataset.steps_per_axis");
    plan.ordering = dataset::SweepOrdering::Snake;
    plan.seed = cfg.get_u64("run.seed");

    dataset::DatasetBundle bundle = dataset::generate_dataset(
        params, plan, cfg.get_size("dataset.val_count"), cfg.get_size("dataset.test_count"),
        cfg.get_u64("run.seed"), cfg.get_size("dataset.avg_reads"));
    dataset::save_dataset(bundle, params, plan, cfg.get_u64("run.seed"), out_stem);

    GenDataReport report;
    report.train_count = bundle.train.size();
    report.val_count = bundle.val.size();
    report.test_count = bundle.test.size();
    report.calibrated_halfwidth = params.hysteresis_halfwidth;
    report.deviation_fraction =
        plant::sweep_tip_deviation(params, params.hysteresis_halfwidth) / params.length_rest;
    report.files = {out_stem + ".train.csv", out_stem + ".val.csv", out_stem + ".test.csv",
                    out_stem + ".meta.json"};

    nlohmann::ordered_json meta = run_meta(cfg, "gen-data");
    meta["calibrated_halfwidth_kpa"] = report.calibrated_halfwidth;
    meta["sweep_deviation_fraction"] = report.deviation_fraction;
    meta["counts"] = {{"train", report.train_count},
                      {"val", report.val_count},
                      {"test", report.test_count}};
    write_text_file(out_stem + ".run.json", meta.dump(2) + "\n");
    return report;
}

TrainModelReport cmd_train_model(const config::RunConfig& cfg, const std::string& dataset_stem,
                                 const std::string& out_path) {
    auto train_samples = dataset::load_samples(dataset_stem + ".train.csv");
    auto val_samples = dataset::load_samples(dataset_stem + ".val.csv");
    auto test_samples = dataset::load_samples(dataset_stem + ".test.csv");

    const std::string mode = cfg.get("model.input_mode");
    const bool six = mode == "6d";
    if (!six && mode != "3d") throw ConfigError("model.input_mode must be 6d or 3d");

    dataset::DataMatrix tx = six ? dataset::inputs_6d(train_samples)
                                 : dataset::inputs_3d(train_samples);
    dataset::DataMatrix vx = six ? dataset::inputs_6d(val_samples)
                                 : dataset::inputs_3d(val_samples);
    dataset::DataMatrix sx = six ? dataset::inputs_6d(test_samples)
                                 : dataset::inputs_3d(test_samples);
    dataset::DataMatrix ty = dataset::targets(train_samples);
    dataset::DataMatrix vy = dataset::targets(val_samples);
    dataset::DataMatrix sy = dataset::targets(test_samples);

    std::vector<std::size_t> layers;
    layers.push_back(tx.cols);
    for (std::size_t l = 0; l < cfg.get_size("model.hidden_layers"); ++l)
        layers.push_back(cfg.get_size("model.hidden_width"));
    layers.push_back(ty.cols);

    std::uint64_t seed = derive_seed(cfg.get_u64("run.seed"), 0x6d6f64656cULL);
    nn::MlpModel model =
        nn::make_mlp(layers, nn::activation_from_name(cfg.get("model.activation")), seed);
    model.input_mode = mode;
    nn::fit_standardizer(model, tx,
                         six ? std::vector<std::size_t>{3, 4, 5} : std::vector<std::size_t>{});
    nn::init_output_bias(model, ty);

    nn::RangeWeights rw = nn::compute_range_weights(ty);
    nn::TrainHistory hist = nn::train(model, tx, ty, vx, vy, rw, train_config_from(cfg, seed));

    checkpoint::save_model(model, out_path);

    TrainModelReport report;
    report.best_val_wmse = hist.best_val_wmse;
    report.test_wmse = nn::evaluate_weighted_mse(model, sx, sy, rw.w);
    report.test_mse = nn::evaluate_mse(model, sx, sy);
    report.epochs_ran = hist.epochs_ran;
    report.early_stopped = hist.early_stopped;
    report.checkpoint_path = out_path;

    nlohmann::ordered_json meta = run_meta(cfg, "train-model");
    meta["dataset_stem"] = dataset_stem;
    meta["input_mode"] = mode;
    meta["layer_sizes"] = layers;
    meta["best_val_wmse"] = hist.best_val_wmse;
    meta["best_epoch"] = hist.best_epoch;
    meta["epochs_ran"] = hist.epochs_ran;
    meta["early_stopped"] = hist.early_stopped;
    meta["test_wmse"] = report.test_wmse;
    meta["test_mse"] = report.test_mse;
    checkpoint::write_meta_sidecar(out_path, meta);
    return report;
}

AblationRunReport cmd_ablation(const config::RunConfig& cfg, const std::string& dataset_stem,
                               const std::string& out_csv) {
    auto train_samples = dataset::load_samples(dataset_stem + ".train.csv");
    auto val_samples = dataset::load_samples(dataset_stem + ".val.csv");
    auto test_samples = dataset::load_samples(dataset_stem + ".test.csv");

    std::vector<nn::Architecture> archs;
    for (std::size_t layers : {3, 4})
        for (std::size_t width : {64, 128, 256}) archs.push_back({layers, width});

    nn::TrainConfig tc = train_config_from(cfg, derive_seed(cfg.get_u64("run.seed"), 0xab1ULL));
    tc.max_epochs = cfg.get_size("ablation.max_epochs");
    tc.eval_every_epochs = cfg.get_size("ablation.eval_every");

    AblationRunReport run;
    unsigned threads = static_cast<unsigned>(cfg.get_size("ablation.threads"));
    if (threads == 0) threads = std::min(12u, std::max(1u, std::thread::hardware_concurrency()));
    run.report = nn::ablation_compare(train_samples, val_samples, test_samples, archs,
                                      nn::activation_from_name(cfg.get("model.activation")), tc,
                                      threads);
    run.csv_path = out_csv;
    write_text_file(out_csv, nn::ablation_csv(run.report));

    nlohmann::ordered_json meta = run_meta(cfg, "train-model --ablation");
    meta["dataset_stem"] = dataset_stem;
    meta["best_6d_test_mse"] = run.report.best_6d_mse;
    meta["best_3d_test_mse"] = run.report.best_3d_mse;
    meta["mse_ratio"] = run.report.best_6d_mse / run.report.best_3d_mse;
    write_text_file(out_csv + ".meta.json", meta.dump(2) + "\n");
    return run;
}

void save_policy(const ppo::PolicyNet& policy, const ppo::AdamState& adam,
                 const nlohmann::ordered_json& extra_header, const std::string& path) {
    checkpoint::Blob blob;
    blob.header["kind"] = "policy";
    blob.header["obs_dim"] = policy.obs_dim;
    blob.header["act_dim"] = policy.act_dim;
    blob.header["hidden"] = policy.hidden;
    blob.header["action_bound"] = policy.action_bound;
    blob.header["log_std_floor"] = policy.log_std_floor;
    blob.header["obs_layout"] = "y_body,e,p,d,t_norm";
    for (auto& [k, v] : extra_header.items()) blob.header[k] = v;

    const char* names[] = {"w1", "b1", "w2", "b2", "wm", "bm", "wv", "bv", "log_std"};
    auto params = policy.params();
    for (std::size_t i = 0; i < params.size(); ++i)
        blob.tensors.emplace_back(names[i], *params[i]);
    for (std::size_t i = 0; i < adam.m.size(); ++i) {
        blob.tensors.emplace_back(std::string("adam_m_") + names[i], adam.m[i]);
        blob.tensors.emplace_back(std::string("adam_v_") + names[i], adam.v[i]);
    }
    blob.tensors.emplace_back("adam_t",
                              std::vector<double>{static_cast<double>(adam.t)});
    checkpoint::save_blob(blob, path);
}

ppo::PolicyNet load_policy(const std::string& path, ppo::AdamState* adam) {
    checkpoint::Blob blob = checkpoint::load_blob(path);
    if (blob.header.at("kind") != "policy") throw IoError("checkpoint is not a policy: " + path);
    ppo::PolicyNet policy;
    policy.obs_dim = blob.header.at("obs_dim");
    policy.act_dim = blob.header.at("act_dim");
    policy.hidden = blob.header.at("hidden");
    policy.action_bound = blob.header.at("action_bound");
    policy.log_std_floor = blob.header.at("log_std_floor");
    const char* names[] = {"w1", "b1", "w2", "b2", "wm", "bm", "wv", "bv", "log_std"};
    const std::size_t expected[] = {policy.obs_dim * policy.hidden,
                                    policy.hidden,
                                    policy.hidden * policy.hidden,
                                    policy.hidden,
                                    policy.hidden * policy.act_dim,
                                    policy.act_dim,
                                    policy.hidden,
                                    1,
                                    policy.act_dim};
    auto params = policy.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& tensor = blob.tensor(names[i]);
        if (tensor.size() != expected[i])
            throw IoError(str_printf("policy checkpoint tensor %s has %zu values, expected %zu: %s",
                                     names[i], tensor.size(), expected[i], path.c_str()));
        *params[i] = tensor;
    }
    if (adam) {
        adam->m.clear();
        adam->v.clear();
        for (std::size_t i = 0; i < params.size(); ++i) {
            adam->m.push_back(blob.tensor(std::string("adam_m_") + names[i]));
            adam->v.push_back(blob.tensor(std::string("adam_v_") + names[i]));
        }
        adam->t = static_cast<std::size_t>(blob.tensor("adam_t").at(0));
    }
    return policy;
}

TrainPolicyReport cmd_train_policy(const config::RunConfig& cfg, const std::string& model_path,
                                   const std::string& out_path) {
    nn::MlpModel model = checkpoint::load_model(model_path);
    plant::PlantParams plant_params = resolve_plant(cfg);
    rlenv::TaskSpec task = task_from(cfg, model, plant_params);

    ppo::PpoConfig pc = ppo_config_from(cfg);
    unsigned env_threads = static_cast<unsigned>(cfg.get_size("ppo.env_threads"));
    rlenv::EnvConfig env_cfg = env_config_from(cfg, rlenv::EnvMode::Surrogate, &model,
                                               plant_params, derive_seed(pc.seed, 0x726fULL));
    rlenv::VecEnv env(env_cfg, task, pc.n_envs, env_threads);
    rlenv::EnvConfig eval_cfg = env_config_from(cfg, rlenv::EnvMode::Surrogate, &model,
                                                plant_params, derive_seed(pc.seed, 0x6556ULL));
    rlenv::VecEnv eval_env(eval_cfg, task, 1, 1);

    ppo::TrainResult result = ppo::train_policy(env, eval_env, pc);

    nlohmann::ordered_json extra;
    extra["task_kind"] = cfg.get("task.kind");
    extra["n_keys"] = plant_params.n_keys;
    extra["model_path"] = model_path;
    extra["trained_steps"] = result.total_steps;
    save_policy(result.best_policy, result.adam, extra, out_path);
    std::string curve_path = out_path + ".curve.csv";
    write_text_file(curve_path, ppo::curve_csv(result.curve));

    TrainPolicyReport report;
    report.status = result.status;
    report.best_eval_reward = result.best_eval_reward;
    report.updates = result.curve.size();
    report.total_steps = result.total_steps;
    report.checkpoint_path = out_path;
    report.curve_path = curve_path;

    nlohmann::ordered_json meta = run_meta(cfg, "train-policy");
    meta["model_path"] = model_path;
    meta["task_kind"] = cfg.get("task.kind");
    meta["status"] = result.status == ppo::TrainStatus::Completed ? "completed"
                                                                  : "aborted-divergence";
    meta["updates"] = report.updates;
    meta["total_steps"] = report.total_steps;
    meta["best_eval_mean_reward"] = report.best_eval_reward;
    meta["hysteresis_halfwidth_kpa"] = plant_params.hysteresis_halfwidth;
    checkpoint::write_meta_sidecar(out_path, meta);
    return report;
}

EvaluateReport cmd_evaluate(const config::RunConfig& cfg, const std::string& policy_path,
                            const std::string& model_path, const std::string& mode,
                            const std::string& out_stem) {
    nn::MlpModel model = checkpoint::load_model(model_path);
    ppo::PolicyNet policy = load_policy(policy_path);
    plant::PlantParams plant_params = resolve_plant(cfg);
    rlenv::TaskSpec task = task_from(cfg, model, plant_params);

    rlenv::EnvMode env_mode;
    if (mode == "surrogate")
        env_mode = rlenv::EnvMode::Surrogate;
    else if (mode == "deploy")
        env_mode = rlenv::EnvMode::Deploy;
    else
        throw ConfigError("evaluate mode must be surrogate or deploy");

    rlenv::EnvConfig env_cfg = env_config_from(cfg, env_mode, &model, plant_params,
                                               derive_seed(cfg.get_u64("run.seed"), 0xe7a1ULL));
    rlenv::Env env(env_cfg, task);
    if (env.obs_dim() != policy.obs_dim)
        throw DimensionError(str_printf("policy expects obs width %zu, env provides %zu",
                                        policy.obs_dim, env.obs_dim()));

    std::ostringstream traj;
    traj << "t,p1,p2,p3,d1,d2,d3,tip_x,tip_y,tip_z,target_x,target_y,target_z,reward\n";

    EvaluateReport report;
    std::vector<geometry::Point3> achieved;
    std::vector<double> waypoint_err_sum(task.waypoints.size(), 0.0);
    std::vector<std::size_t> waypoint_err_count(task.waypoints.size(), 0);

    rlenv::EnvObservation obs = env.reset();
    double err_sum = 0.0, reward_sum = 0.0;
    for (std::size_t t = 0; t < task.episode_len; ++t) {
        std::size_t active_waypoint = env.waypoint_index();
        std::vector<double> action = policy.act_deterministic(obs.vec);
        rlenv::StepResult result = env.step({action[0], action[1], action[2]});
        obs = std::move(result.obs);

        geometry::Point3 pt = env.task_point();
        geometry::Point3 target = task.waypoints[active_waypoint];
        achieved.push_back(pt);
        double err = env.last_error();
        err_sum += err;
        reward_sum += result.reward;
        report.max_error = std::max(report.max_error, err);
        waypoint_err_sum[active_waypoint] += err;
        waypoint_err_count[active_waypoint] += 1;

        traj << obs.t << ',' << fmt_double(obs.p[0]) << ',' << fmt_double(obs.p[1]) << ','
             << fmt_double(obs.p[2]) << ',' << obs.d[0] << ',' << obs.d[1] << ',' << obs.d[2]
             << ',' << fmt_double(pt.x) << ',' << fmt_double(pt.y) << ',' << fmt_double(pt.z)
             << ',' << fmt_double(target.x) << ',' << fmt_double(target.y) << ','
             << fmt_double(target.z) << ',' << fmt_double(result.reward) << "\n";
        if (result.done) break;
    }
    report.mean_error = err_sum / static_cast<double>(task.episode_len);
    report.mean_reward = reward_sum / static_cast<double>(task.episode_len);
    for (std::size_t w = 0; w < task.waypoints.size(); ++w)
        report.per_waypoint_error.push_back(
            waypoint_err_count[w] ? waypoint_err_sum[w] / waypoint_err_count[w] : 0.0);

    report.trajectory_csv = out_stem + ".trajectory.csv";
    write_text_file(report.trajectory_csv, traj.str());

    std::vector<geometry::Point3> target_loop = task.waypoints;
    target_loop.push_back(task.waypoints.front());
    report.svg_path = out_stem + ".svg";
    svg::write_xy_overlay(report.svg_path, target_loop, achieved,
                          cfg.get("task.kind") + " tracking (" + mode + ")");

    nlohmann::ordered_json metrics = run_meta(cfg, "evaluate");
    metrics["policy_path"] = policy_path;
    metrics["model_path"] = model_path;
    metrics["mode"] = mode;
    metrics["task_kind"] = cfg.get("task.kind");
    metrics["mean_error_mm"] = report.mean_error;
    metrics["max_error_mm"] = report.max_error;
    metrics["mean_reward"] = report.mean_reward;
    metrics["per_waypoint_error_mm"] = report.per_waypoint_error;
    metrics["hysteresis_halfwidth_kpa"] = plant_params.hysteresis_halfwidth;
    report.metrics_path = out_stem + ".metrics.json";
    write_text_file(report.metrics_path, metrics.dump(2) + "\n");
    return report;
}

}  // namespace softrl::pipeline
