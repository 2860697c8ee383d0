// Acceptance runner: executes the full pipeline at the documented desk-scale
// budgets and prints one pass/fail line per criterion. Test cases run in
// declaration order and share artifacts under acceptance_work/.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "softrl/pipeline.hpp"

using namespace softrl;
using config::RunConfig;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string work_dir() {
    static std::string dir = [] {
        auto d = std::filesystem::current_path() / "acceptance_work";
        std::filesystem::create_directories(d);
        return d.string() + "/";
    }();
    return dir;
}

struct CriterionLine {
    int id;
    bool pass;
    std::string text;
};
std::vector<CriterionLine>& lines() {
    static std::vector<CriterionLine> v;
    return v;
}

void report(int id, bool pass, const std::string& text) {
    lines().push_back({id, pass, text});
    std::printf("[criterion %d] %s: %s\n", id, pass ? "PASS" : "FAIL", text.c_str());
    std::fflush(stdout);
}

RunConfig base_config() {
    RunConfig cfg = RunConfig::defaults();
    cfg.set("run.seed", "7");
    // tracking-task training configuration (see configs/tracking.ini)
    cfg.set("env.reward_scale", "10");
    cfg.set("env.rest_p1", "40");
    cfg.set("env.rest_p2", "15");
    cfg.set("env.rest_p3", "15");
    cfg.set("task.waypoints", "80");
    cfg.set("task.dwell", "5");
    return cfg;
}

// shared artifacts across criteria
struct Shared {
    std::string dataset_stem;
    std::string control_stem;
    std::string model_path;
    std::string circle_policy;
    std::string laser_policy;
    double surrogate_circle_error = -1.0;
    bool have_dataset = false;
    bool have_model = false;
    bool have_circle_policy = false;
};
Shared& shared() {
    static Shared s;
    return s;
}

}  // namespace

TEST_CASE("criterion 1: hysteresis calibration hits 3.4% +- 0.1% in under 10 s") {
    Timer timer;
    RunConfig cfg = base_config();
    plant::PlantParams params = pipeline::resolve_plant(cfg);
    double deviation =
        plant::sweep_tip_deviation(params, params.hysteresis_halfwidth) / params.length_rest;
    double elapsed = timer.seconds();

    bool in_band = deviation >= 0.033 && deviation <= 0.035;
    bool fast = elapsed < 10.0;
    CHECK(in_band);
    CHECK(fast);
    report(1, in_band && fast,
           str_printf("calibrated h=%.4f kPa, sweep deviation %.3f%% of length (band "
                      "3.3%%..3.5%%), %.2f s",
                      params.hysteresis_halfwidth, 100.0 * deviation, elapsed));
}

TEST_CASE("criterion 2: 6D/3D ablation ratio <= 0.3 on the calibrated plant, "
          "control ratio in [0.5, 2] without hysteresis, under 15 min") {
    Timer timer;
    RunConfig cfg = base_config();

    shared().dataset_stem = work_dir() + "sweep";
    pipeline::GenDataReport gen = pipeline::cmd_gen_data(cfg, shared().dataset_stem);
    shared().have_dataset = true;
    REQUIRE(gen.train_count == 13824);
    REQUIRE(gen.val_count == 1000);
    REQUIRE(gen.test_count == 1000);

    pipeline::AblationRunReport main_run =
        pipeline::cmd_ablation(cfg, shared().dataset_stem, work_dir() + "ablation.csv");
    double ratio = main_run.report.best_6d_mse / main_run.report.best_3d_mse;

    RunConfig control_cfg = base_config();
    control_cfg.set("plant.hysteresis_halfwidth", "0");
    // With noiseless targets both input modes are optimization-limited near
    // zero and their MSE ratio is numerically unstable. Seeded sensor noise
    // (variance sigma^2/avg_reads = 0.2 mm^2 after averaging) gives both
    // models the same reachable floor, which is what the parity check is
    // about: direction inputs buy nothing without hysteresis.
    control_cfg.set("plant.noise_sigma", "2.0");
    control_cfg.set("ablation.max_epochs", "60");
    shared().control_stem = work_dir() + "sweep_control";
    pipeline::cmd_gen_data(control_cfg, shared().control_stem);
    pipeline::AblationRunReport control_run = pipeline::cmd_ablation(
        control_cfg, shared().control_stem, work_dir() + "ablation_control.csv");
    double control_ratio = control_run.report.best_6d_mse / control_run.report.best_3d_mse;

    double elapsed = timer.seconds();
    bool main_ok = ratio <= 0.3;
    bool control_ok = control_ratio >= 0.5 && control_ratio <= 2.0;
    bool fast = elapsed < 900.0;
    CHECK(main_ok);
    CHECK(control_ok);
    CHECK(fast);
    report(2, main_ok && control_ok && fast,
           str_printf("best 6D MSE %.4f vs best 3D MSE %.4f (ratio %.3f <= 0.3); "
                      "no-hysteresis control ratio %.2f in [0.5, 2]; %.0f s",
                      main_run.report.best_6d_mse, main_run.report.best_3d_mse, ratio,
                      control_ratio, elapsed));
}

TEST_CASE("criterion 3: analytic gradients match central differences, 10 seeds x 200 params") {
    Timer timer;
    const double fd_step = 1e-5;
    std::size_t checked = 0, failed = 0;
    double worst = 0.0;

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        nn::MlpModel model = nn::make_mlp({6, 32, 32, 15}, nn::Activation::Relu, seed);
        Rng rng(derive_seed(seed, 0xfdULL));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const std::size_t batch = 8;
        std::vector<double> x(batch * 6), y(batch * 15);
        for (auto& v : x) v = u(rng);
        for (auto& v : y) v = u(rng);
        std::vector<double> w(15);
        for (auto& v : w) v = 1.0 + std::abs(u(rng));

        nn::Gradients grads = nn::make_gradients(model);
        nn::BackpropScratch scratch;
        nn::backward(model, x.data(), y.data(), batch, w, grads, scratch);

        auto loss_at = [&]() {
            std::vector<double> pred(batch * 15);
            model.forward_batch(x.data(), batch, pred.data());
            double acc = 0.0;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t c = 0; c < 15; ++c) {
                    double e = pred[b * 15 + c] - y[b * 15 + c];
                    acc += w[c] * e * e;
                }
            return acc / (15.0 * batch);
        };

        std::uniform_int_distribution<std::size_t> layer_pick(0, model.n_affine() - 1);
        for (int trial = 0; trial < 200; ++trial) {
            std::size_t l = layer_pick(rng);
            std::uniform_int_distribution<std::size_t> idx(0, model.weights[l].size() - 1);
            std::size_t i = idx(rng);
            double saved = model.weights[l][i];
            model.weights[l][i] = saved + fd_step;
            double up = loss_at();
            model.weights[l][i] = saved - fd_step;
            double down = loss_at();
            model.weights[l][i] = saved;
            double fd = (up - down) / (2 * fd_step);
            double analytic = grads.weights[l][i];
            double rel =
                std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
            worst = std::max(worst, rel);
            ++checked;
            if (rel >= 1e-4) ++failed;
        }
    }
    double elapsed = timer.seconds();
    bool ok = failed == 0 && checked >= 2000;
    bool fast = elapsed < 10.0;
    CHECK(ok);
    CHECK(fast);
    report(3, ok && fast,
           str_printf("%zu params across 10 seeds, worst relative error %.2e (tol 1e-4), %.2f s",
                      checked, worst, elapsed));
}

TEST_CASE("criterion 4: recursive GAE equals brute force on 1000 random instances") {
    Timer timer;
    Rng rng(404);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> len_dist(1, 50);
    std::bernoulli_distribution done_dist(0.1);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        int len = len_dist(rng);
        std::vector<double> r(len), v(len), d(len);
        for (auto& x : r) x = u(rng);
        for (auto& x : v) x = u(rng);
        for (auto& x : d) x = done_dist(rng) ? 1.0 : 0.0;
        double bootstrap = u(rng);
        double gamma = 0.5 + 0.5 * std::abs(u(rng));
        double lambda = std::abs(u(rng));
        std::vector<double> adv, ret;
        ppo::gae(r, v, d, bootstrap, gamma, lambda, adv, ret);
        for (int t = 0; t < len; ++t) {
            double acc = 0.0, factor = 1.0;
            for (int k = t; k < len; ++k) {
                double next_v = k + 1 < len ? v[k + 1] : bootstrap;
                double delta = r[k] + gamma * next_v * (1.0 - d[k]) - v[k];
                acc += factor * delta;
                if (d[k] == 1.0) break;
                factor *= gamma * lambda;
            }
            worst = std::max(worst, std::abs(adv[t] - acc));
        }
    }
    double elapsed = timer.seconds();
    bool ok = worst < 1e-10;
    bool fast = elapsed < 5.0;
    CHECK(ok);
    CHECK(fast);
    report(4, ok && fast,
           str_printf("1000 instances (length <= 50), worst |recursive - brute| = %.2e, %.2f s",
                      worst, elapsed));
}

TEST_CASE("criterion 5: PPO circle tracking on the surrogate under 2% of length") {
    Timer timer;
    RunConfig cfg = base_config();
    REQUIRE(shared().have_dataset);

    shared().model_path = work_dir() + "model.ckpt";
    pipeline::TrainModelReport model_report =
        pipeline::cmd_train_model(cfg, shared().dataset_stem, shared().model_path);
    shared().have_model = true;
    std::printf("  [info] surrogate model: %zu epochs, test MSE %.4f mm^2\n",
                model_report.epochs_ran, model_report.test_mse);

    shared().circle_policy = work_dir() + "policy_circle.ckpt";
    pipeline::TrainPolicyReport policy_report =
        pipeline::cmd_train_policy(cfg, shared().model_path, shared().circle_policy);
    REQUIRE(policy_report.status == ppo::TrainStatus::Completed);
    shared().have_circle_policy = true;

    pipeline::EvaluateReport eval =
        pipeline::cmd_evaluate(cfg, shared().circle_policy, shared().model_path, "surrogate",
                               work_dir() + "eval_circle_sur");
    shared().surrogate_circle_error = eval.mean_error;

    double length = cfg.get_double("plant.length_rest");
    double bound = 0.02 * length;
    double elapsed = timer.seconds();
    bool ok = eval.mean_error < bound;
    bool fast = elapsed < 7200.0;
    CHECK(ok);
    CHECK(fast);
    report(5, ok && fast,
           str_printf("2M-step budget, mean tip error %.3f mm < %.1f mm (2%% of length), "
                      "max %.3f mm, %.0f s",
                      eval.mean_error, bound, eval.max_error, elapsed));
}

TEST_CASE("criterion 6: deploy-mode gap bounded (< 5x surrogate, < 4% of length)") {
    RunConfig cfg = base_config();
    REQUIRE(shared().have_circle_policy);
    REQUIRE(shared().surrogate_circle_error >= 0.0);

    pipeline::EvaluateReport deploy =
        pipeline::cmd_evaluate(cfg, shared().circle_policy, shared().model_path, "deploy",
                               work_dir() + "eval_circle_dep");

    double length = cfg.get_double("plant.length_rest");
    bool gap_ok = deploy.mean_error < 5.0 * shared().surrogate_circle_error;
    bool abs_ok = deploy.mean_error < 0.04 * length;
    bool ordering = shared().surrogate_circle_error <= deploy.mean_error;
    CHECK(gap_ok);
    CHECK(abs_ok);
    WARN(ordering);  // expected sim-to-real ordering, informational
    report(6, gap_ok && abs_ok,
           str_printf("deploy mean error %.3f mm vs surrogate %.3f mm (ratio %.2f < 5), "
                      "absolute bound %.1f mm, surrogate <= deploy: %s",
                      deploy.mean_error, shared().surrogate_circle_error,
                      deploy.mean_error / shared().surrogate_circle_error, 0.04 * length,
                      ordering ? "yes" : "no"));
}

TEST_CASE("criterion 7: laser policy tracks on the plane within 3% of the projected "
          "workspace diameter") {
    Timer timer;
    RunConfig cfg = base_config();
    cfg.set("task.kind", "laser-circle");
    REQUIRE(shared().have_model);

    shared().laser_policy = work_dir() + "policy_laser.ckpt";
    pipeline::TrainPolicyReport policy_report =
        pipeline::cmd_train_policy(cfg, shared().model_path, shared().laser_policy);
    REQUIRE(policy_report.status == ppo::TrainStatus::Completed);

    pipeline::EvaluateReport eval = pipeline::cmd_evaluate(
        cfg, shared().laser_policy, shared().model_path, "surrogate", work_dir() + "eval_laser");

    nn::MlpModel model = checkpoint::load_model(shared().model_path);
    plant::PlantParams params = pipeline::resolve_plant(cfg);
    rlenv::Workspace ws = rlenv::laser_workspace(
        model, params, geometry::make_plane({0, 0, 1}, cfg.get_double("task.plane_z")));
    double bound = 0.03 * ws.diameter;
    double elapsed = timer.seconds();

    bool ok = eval.mean_error < bound;
    CHECK(ok);
    report(7, ok,
           str_printf("mean intersection error %.3f mm < %.3f mm (3%% of %.1f mm projected "
                      "workspace diameter), %.0f s",
                      eval.mean_error, bound, ws.diameter, elapsed));
}

TEST_CASE("criterion 8: 64-env vectorized rollouts bit-identical to sequential") {
    REQUIRE(shared().have_model);
    RunConfig cfg = base_config();
    nn::MlpModel model = checkpoint::load_model(shared().model_path);
    plant::PlantParams params = pipeline::resolve_plant(cfg);
    rlenv::TaskSpec task = pipeline::task_from(cfg, model, params);
    task.episode_len = 37;  // forces mid-run auto-resets

    rlenv::EnvConfig env_cfg =
        pipeline::env_config_from(cfg, rlenv::EnvMode::Surrogate, &model, params, 77);
    rlenv::VecEnv sequential(env_cfg, task, 64, 1);
    rlenv::VecEnv parallel(env_cfg, task, 64, 2);

    auto obs_a = sequential.reset_all();
    auto obs_b = parallel.reset_all();
    bool identical = true;
    for (std::size_t i = 0; i < 64; ++i) identical = identical && obs_a[i].vec == obs_b[i].vec;

    Rng rng(88);
    std::uniform_real_distribution<double> act(-3.0, 3.0);
    std::size_t steps = 0;
    for (int t = 0; t < 128 && identical; ++t) {
        std::vector<std::array<double, 3>> actions(64);
        for (auto& a : actions) a = {act(rng), act(rng), act(rng)};
        auto ra = sequential.step(actions);
        auto rb = parallel.step(actions);
        for (std::size_t i = 0; i < 64; ++i) {
            identical = identical && ra[i].reward == rb[i].reward && ra[i].done == rb[i].done &&
                        ra[i].obs.vec == rb[i].obs.vec &&
                        ra[i].terminal_obs.has_value() == rb[i].terminal_obs.has_value();
            if (ra[i].terminal_obs && rb[i].terminal_obs)
                identical = identical && ra[i].terminal_obs->vec == rb[i].terminal_obs->vec;
        }
        ++steps;
    }
    CHECK(identical);
    report(8, identical,
           str_printf("64 envs, %zu steps with auto-resets: parallel == sequential bitwise",
                      steps));
}

TEST_CASE("criterion 9: the pipeline reruns bit-identically under a fixed seed") {
    // Reduced-scale end-to-end double run; determinism is scale independent
    // (identical code paths, seeded streams only).
    RunConfig cfg = base_config();
    cfg.set("dataset.steps_per_axis", "8");
    cfg.set("dataset.val_count", "120");
    cfg.set("dataset.test_count", "120");
    cfg.set("model.hidden_layers", "2");
    cfg.set("model.hidden_width", "48");
    cfg.set("model.max_epochs", "60");
    cfg.set("model.eval_every", "10");
    cfg.set("ppo.n_envs", "8");
    cfg.set("ppo.steps_per_env", "32");
    cfg.set("ppo.minibatch", "64");
    cfg.set("ppo.total_steps", "12288");
    cfg.set("task.episode_len", "80");
    cfg.set("task.waypoints", "8");
    cfg.set("run.seed", "123");

    // Both runs use the same directory (metadata records artifact paths, which
    // must match for a byte comparison); the first run is archived in between.
    auto run_all = [&](const std::string& dir) {
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        pipeline::cmd_gen_data(cfg, dir + "/sweep");
        pipeline::cmd_train_model(cfg, dir + "/sweep", dir + "/model.ckpt");
        pipeline::cmd_train_policy(cfg, dir + "/model.ckpt", dir + "/policy.ckpt");
        pipeline::cmd_evaluate(cfg, dir + "/policy.ckpt", dir + "/model.ckpt", "surrogate",
                               dir + "/eval_sur");
        pipeline::cmd_evaluate(cfg, dir + "/policy.ckpt", dir + "/model.ckpt", "deploy",
                               dir + "/eval_dep");
    };
    std::string run_dir = work_dir() + "det_run", dir_a = work_dir() + "det_a";
    run_all(run_dir);
    std::filesystem::remove_all(dir_a);
    std::filesystem::rename(run_dir, dir_a);
    run_all(run_dir);
    std::string dir_b = run_dir;

    bool identical = true;
    std::string first_diff;
    std::size_t compared = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_a)) {
        std::string name = entry.path().filename().string();
        std::string other = dir_b + "/" + name;
        if (!std::filesystem::exists(other)) {
            identical = false;
            first_diff = name + " missing";
            break;
        }
        if (read_text_file(entry.path().string()) != read_text_file(other)) {
            identical = false;
            first_diff = name;
            break;
        }
        ++compared;
    }
    CHECK(identical);
    report(9, identical,
           identical ? str_printf("%zu artifacts (datasets, checkpoints, curves, metrics, "
                                  "plots) byte-equal across reruns",
                                  compared)
                     : "first differing artifact: " + first_diff);
}

TEST_CASE("summary") {
    std::printf("\n==== acceptance summary ====\n");
    bool all = !lines().empty();
    for (const auto& line : lines()) {
        std::printf("[criterion %d] %s: %s\n", line.id, line.pass ? "PASS" : "FAIL",
                    line.text.c_str());
        all = all && line.pass;
    }
    std::printf("%zu criteria reported, %s\n", lines().size(),
                all ? "all PASS" : "FAILURES present");
}
