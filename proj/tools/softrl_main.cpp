// softrl command line: gen-data -> train-model -> train-policy -> evaluate.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "softrl/pipeline.hpp"

namespace {

using softrl::config::RunConfig;

RunConfig load_config(const std::string& config_path, long long seed_override,
                      const std::vector<std::string>& overrides) {
    RunConfig cfg = config_path.empty() ? RunConfig::defaults() : RunConfig::from_file(config_path);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw softrl::ConfigError("--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_override >= 0) cfg.set("run.seed", std::to_string(seed_override));
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"softrl: hysteresis-aware soft robot modeling and RL control"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path;
    long long seed = -1;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "INI config file (defaults used when omitted)");
    app.add_option("--seed", seed, "override run.seed");
    app.add_option("--set", overrides, "override a config key, e.g. --set ppo.total_steps=500000");

    bool print_config = false;
    app.add_flag("--print-config", print_config, "print all config keys with defaults and exit");

    auto* gen = app.add_subcommand("gen-data", "calibrate the plant and record sweep datasets");
    std::string gen_out = "data/sweep";
    gen->add_option("--out", gen_out, "output stem for .train/.val/.test.csv");
    std::string gen_steps;
    gen->add_option("--steps-per-axis", gen_steps, "override dataset.steps_per_axis");

    auto* tm = app.add_subcommand("train-model", "train the whole-body model on a dataset");
    std::string tm_data = "data/sweep", tm_out = "runs/model.ckpt", tm_mode;
    bool tm_ablation = false;
    tm->add_option("--data", tm_data, "dataset stem from gen-data");
    tm->add_option("--out", tm_out, "checkpoint path (or ablation CSV with --ablation)");
    tm->add_option("--input-mode", tm_mode, "6d (pressures+directions) or 3d (pressures only)");
    tm->add_flag("--ablation", tm_ablation, "run the six-architecture 6D-vs-3D sweep");

    auto* tp = app.add_subcommand("train-policy", "train a PPO tracking policy on the surrogate");
    std::string tp_model = "runs/model.ckpt", tp_out = "runs/policy.ckpt", tp_task;
    std::string tp_steps;
    tp->add_option("--model", tp_model, "trained model checkpoint");
    tp->add_option("--out", tp_out, "policy checkpoint path");
    tp->add_option("--task", tp_task, "circle | square | laser-circle | laser-square");
    tp->add_option("--steps", tp_steps, "override ppo.total_steps");

    auto* ev = app.add_subcommand("evaluate", "run a trained policy and report tracking errors");
    std::string ev_policy = "runs/policy.ckpt", ev_model = "runs/model.ckpt";
    std::string ev_mode = "surrogate", ev_out = "runs/eval", ev_task;
    ev->add_option("--policy", ev_policy, "policy checkpoint");
    ev->add_option("--model", ev_model, "model checkpoint the policy was trained on");
    ev->add_option("--mode", ev_mode, "surrogate (model transitions) or deploy (plant + PID)");
    ev->add_option("--task", ev_task, "override task.kind");
    ev->add_option("--out", ev_out, "output stem for trajectory/metrics/svg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (print_config) {
            std::fputs(RunConfig::documented_defaults().c_str(), stdout);
            return 0;
        }
        RunConfig cfg = load_config(config_path, seed, overrides);

        if (gen->parsed()) {
            if (!gen_steps.empty()) cfg.set("dataset.steps_per_axis", gen_steps);
            auto report = softrl::pipeline::cmd_gen_data(cfg, gen_out);
            std::printf("calibrated hysteresis half-width: %.4f kPa\n",
                        report.calibrated_halfwidth);
            std::printf("verification sweep deviation: %.2f%% of rest length\n",
                        100.0 * report.deviation_fraction);
            std::printf("samples: %zu train, %zu val, %zu test\n", report.train_count,
                        report.val_count, report.test_count);
            for (const auto& f : report.files) std::printf("wrote %s\n", f.c_str());
        } else if (tm->parsed()) {
            if (!tm_mode.empty()) cfg.set("model.input_mode", tm_mode);
            if (tm_ablation) {
                auto run = softrl::pipeline::cmd_ablation(cfg, tm_data, tm_out);
                std::printf("best 6d test MSE: %.6f\n", run.report.best_6d_mse);
                std::printf("best 3d test MSE: %.6f\n", run.report.best_3d_mse);
                std::printf("ratio: %.4f\n", run.report.best_6d_mse / run.report.best_3d_mse);
                std::printf("wrote %s\n", run.csv_path.c_str());
            } else {
                auto report = softrl::pipeline::cmd_train_model(cfg, tm_data, tm_out);
                std::printf("epochs: %zu%s\n", report.epochs_ran,
                            report.early_stopped ? " (early stopped)" : "");
                std::printf("best val weighted MSE: %.6f\n", report.best_val_wmse);
                std::printf("test weighted MSE: %.6f, test MSE: %.6f\n", report.test_wmse,
                            report.test_mse);
                std::printf("wrote %s\n", report.checkpoint_path.c_str());
            }
        } else if (tp->parsed()) {
            if (!tp_task.empty()) cfg.set("task.kind", tp_task);
            if (!tp_steps.empty()) cfg.set("ppo.total_steps", tp_steps);
            auto report = softrl::pipeline::cmd_train_policy(cfg, tp_model, tp_out);
            std::printf("updates: %zu, env steps: %zu\n", report.updates, report.total_steps);
            std::printf("best eval mean reward: %.4f\n", report.best_eval_reward);
            std::printf("status: %s\n", report.status == softrl::ppo::TrainStatus::Completed
                                            ? "completed"
                                            : "aborted (divergence)");
            std::printf("wrote %s\n", report.checkpoint_path.c_str());
            std::printf("wrote %s\n", report.curve_path.c_str());
        } else if (ev->parsed()) {
            if (!ev_task.empty()) cfg.set("task.kind", ev_task);
            auto report = softrl::pipeline::cmd_evaluate(cfg, ev_policy, ev_model, ev_mode, ev_out);
            std::printf("mean tracking error: %.4f mm\n", report.mean_error);
            std::printf("max tracking error: %.4f mm\n", report.max_error);
            std::printf("mean reward: %.4f\n", report.mean_reward);
            std::printf("wrote %s\n", report.trajectory_csv.c_str());
            std::printf("wrote %s\n", report.metrics_path.c_str());
            std::printf("wrote %s\n", report.svg_path.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
