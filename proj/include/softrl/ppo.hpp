#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "softrl/util.hpp"

namespace softrl::ppo {

/// Actor-critic with a shared tanh trunk (2 x 64 by default), a Gaussian
/// action head squashed to [-bound, bound] by a scaled tanh, a scalar value
/// head, and a state-independent learnable log-std.
struct PolicyNet {
    std::size_t obs_dim = 0;
    std::size_t act_dim = 3;
    std::size_t hidden = 64;
    double action_bound = 3.0;
    double log_std_floor = -5.0;

    std::vector<double> w1, b1, w2, b2;  // trunk
    std::vector<double> wm, bm;          // mean head
    std::vector<double> wv, bv;          // value head
    std::vector<double> log_std;

    std::vector<std::vector<double>*> params();
    std::vector<const std::vector<double>*> params() const;
    std::size_t parameter_count() const;

    struct Cache {
        std::size_t batch = 0;
        std::vector<double> x, a1, a2, mean, value;
    };
    /// mean[B x act], value[B]; caches post-activation layers for backward.
    void forward(const double* obs, std::size_t batch, Cache& cache) const;

    /// Squash u into action space.
    std::vector<double> squash(const std::vector<double>& u) const;
    /// Log-density of the squashed action expressed via the pre-squash value u.
    double log_prob(const std::vector<double>& mean, const std::vector<double>& u) const;
    /// Entropy of the pre-squash Gaussian (state independent).
    double entropy() const;

    /// Deterministic action (squashed mean) for a single observation.
    std::vector<double> act_deterministic(const std::vector<double>& obs) const;
};

PolicyNet make_policy(std::size_t obs_dim, std::size_t act_dim, std::size_t hidden,
                      double action_bound, double log_std_init, std::uint64_t seed);

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double entropy_coef = 0.01;
    double clip_range = 0.2;
    double value_coef = 0.5;
    double learning_rate = 3e-4;
    std::size_t n_envs = 64;
    std::size_t steps_per_env = 64;  // batch = n_envs * steps_per_env = 4096
    std::size_t epochs = 10;
    std::size_t minibatch = 256;
    std::size_t total_steps = 2'000'000;
    std::size_t eval_every_updates = 10;
    std::size_t eval_episodes = 1;
    double kl_abort = 0.35;
    std::size_t kl_abort_consecutive = 5;
    double log_std_init = 0.0;
    std::size_t act_dim = 3;
    std::size_t hidden = 64;
    double action_bound = 3.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Time-major rollout storage: index t * n_envs + i.
struct RolloutBatch {
    std::size_t n_envs = 0;
    std::size_t steps = 0;
    std::size_t obs_dim = 0;
    std::size_t act_dim = 0;
    std::vector<double> obs;      // [N x obs_dim]
    std::vector<double> u;        // pre-squash actions [N x act_dim]
    std::vector<double> logp;     // [N]
    std::vector<double> rewards;  // [N]
    std::vector<double> values;   // [N]
    std::vector<double> dones;    // [N], 1.0 at episode ends
    std::vector<double> bootstrap_values;  // [n_envs]
    std::vector<double> advantages;        // filled by compute_gae
    std::vector<double> returns;

    std::size_t size() const { return n_envs * steps; }
};

/// delta_t = r_t + gamma*V_{t+1}*(1-done_t) - V_t;
/// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}; returns = A + V.
void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<double>& dones, double bootstrap, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns);

/// GAE over every env sequence of the batch.
void compute_gae(RolloutBatch& batch, double gamma, double lambda);

struct UpdateDiagnostics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
};

struct AdamState {
    std::vector<std::vector<double>> m, v;
    std::size_t t = 0;
    explicit AdamState(const PolicyNet& policy);
    AdamState() = default;
};

/// The per-sample clipped surrogate of the policy objective (before negation):
/// min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv).
inline double clipped_surrogate(double ratio, double adv, double eps) {
    double clipped = ratio < 1.0 - eps ? 1.0 - eps : (ratio > 1.0 + eps ? 1.0 + eps : ratio);
    double a = ratio * adv, b = clipped * adv;
    return a < b ? a : b;
}

struct PolicyGradients {
    std::vector<std::vector<double>> g;  // same order as PolicyNet::params()
    explicit PolicyGradients(const PolicyNet& policy);
};

/// Total PPO loss (clipped policy term + value_coef * value MSE -
/// entropy_coef * entropy) over the given batch rows, with exact gradients
/// when grads is non-null. Throws DivergenceError on a non-finite ratio.
double ppo_loss(const PolicyNet& policy, const RolloutBatch& batch, const PpoConfig& cfg,
                const std::vector<std::size_t>& rows, PolicyGradients* grads,
                UpdateDiagnostics* diag);

/// One PPO update (epochs x minibatches) over a collected batch. Advantages
/// must already be normalized.
UpdateDiagnostics ppo_update(PolicyNet& policy, const RolloutBatch& batch, const PpoConfig& cfg,
                             AdamState& adam, Rng& rng);

/// Normalizes batch advantages in place to zero mean / unit std (floor 1e-8).
void normalize_advantages(RolloutBatch& batch);

struct RolloutStats {
    double mean_step_reward = 0.0;
    std::vector<double> completed_episode_returns;
};

/// Samples `steps` transitions per env from the frozen policy. The env type
/// must provide size(), reset_all_flat(), and step_flat(actions); a faulted
/// env discards the batch by throwing EnvFault.
template <typename VecEnvT>
RolloutBatch collect_rollout(VecEnvT& env, const PolicyNet& policy, std::size_t steps, Rng& rng,
                             bool deterministic = false, RolloutStats* stats = nullptr,
                             std::vector<std::vector<double>>* obs_state = nullptr);

struct CurveRow {
    std::size_t update = 0;
    std::size_t steps = 0;
    double mean_reward = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
    double entropy = 0.0;
    double mean_episode_return = 0.0;
    double eval_mean_reward = 0.0;  // NaN when no eval ran this update
};

enum class TrainStatus { Completed, AbortedDivergence };

struct TrainResult {
    TrainStatus status = TrainStatus::Completed;
    std::vector<CurveRow> curve;
    PolicyNet best_policy;  // best deterministic-eval checkpoint
    double best_eval_reward = 0.0;
    std::size_t total_steps = 0;
    AdamState adam;
};

std::string curve_csv(const std::vector<CurveRow>& curve);

/// Full PPO loop: collect -> GAE -> clipped-surrogate epochs, with periodic
/// deterministic evaluations; returns the best-evaluation checkpoint.
template <typename VecEnvT>
TrainResult train_policy(VecEnvT& env, VecEnvT& eval_env, const PpoConfig& cfg,
                         const std::function<void(const CurveRow&)>& on_update = {});

// ---- implementation of the templated pieces --------------------------------

namespace detail {
std::vector<double> sample_u(const PolicyNet& policy, const double* mean, Rng& rng);
}  // namespace detail

template <typename VecEnvT>
RolloutBatch collect_rollout(VecEnvT& env, const PolicyNet& policy, std::size_t steps, Rng& rng,
                             bool deterministic, RolloutStats* stats,
                             std::vector<std::vector<double>>* obs_state) {
    const std::size_t n = env.size();
    RolloutBatch batch;
    batch.n_envs = n;
    batch.steps = steps;
    batch.obs_dim = policy.obs_dim;
    batch.act_dim = policy.act_dim;
    batch.obs.resize(n * steps * policy.obs_dim);
    batch.u.resize(n * steps * policy.act_dim);
    batch.logp.resize(n * steps);
    batch.rewards.resize(n * steps);
    batch.values.resize(n * steps);
    batch.dones.resize(n * steps);
    batch.bootstrap_values.resize(n);

    std::vector<std::vector<double>> obs =
        (obs_state && !obs_state->empty()) ? *obs_state : env.reset_all_flat();

    std::vector<double> obs_flat(n * policy.obs_dim);
    PolicyNet::Cache cache;
    std::vector<double> ep_return(n, 0.0);
    double reward_acc = 0.0;

    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            if (obs[i].size() != policy.obs_dim) throw DimensionError("rollout: obs width mismatch");
            std::copy(obs[i].begin(), obs[i].end(), obs_flat.begin() + i * policy.obs_dim);
        }
        policy.forward(obs_flat.data(), n, cache);

        std::vector<std::vector<double>> actions(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t row = t * n + i;
            std::copy(obs[i].begin(), obs[i].end(), batch.obs.begin() + row * policy.obs_dim);
            std::vector<double> mean(cache.mean.begin() + i * policy.act_dim,
                                     cache.mean.begin() + (i + 1) * policy.act_dim);
            std::vector<double> u;
            if (deterministic) {
                u = mean;
            } else {
                u = detail::sample_u(policy, mean.data(), rng);
            }
            std::copy(u.begin(), u.end(), batch.u.begin() + row * policy.act_dim);
            batch.logp[row] = policy.log_prob(mean, u);
            batch.values[row] = cache.value[i];
            actions[i] = policy.squash(u);
        }

        auto results = env.step_flat(actions);
        for (std::size_t i = 0; i < n; ++i) {
            if (results[i].fault)
                throw EnvFault("rollout discarded, env " + std::to_string(i) + " faulted: " +
                               results[i].fault_msg);
            const std::size_t row = t * n + i;
            batch.rewards[row] = results[i].reward;
            batch.dones[row] = results[i].done ? 1.0 : 0.0;
            reward_acc += results[i].reward;
            ep_return[i] += results[i].reward;
            if (results[i].done) {
                if (stats) stats->completed_episode_returns.push_back(ep_return[i]);
                ep_return[i] = 0.0;
            }
            obs[i] = std::move(results[i].obs);
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        std::copy(obs[i].begin(), obs[i].end(), obs_flat.begin() + i * policy.obs_dim);
    policy.forward(obs_flat.data(), n, cache);
    for (std::size_t i = 0; i < n; ++i) batch.bootstrap_values[i] = cache.value[i];

    if (stats) stats->mean_step_reward = reward_acc / static_cast<double>(n * steps);
    if (obs_state) *obs_state = std::move(obs);
    return batch;
}

template <typename VecEnvT>
TrainResult train_policy_with(VecEnvT& env, VecEnvT& eval_env, PolicyNet& policy,
                              const PpoConfig& cfg,
                              const std::function<void(const CurveRow&)>& on_update = {}) {
    cfg.validate();
    AdamState adam(policy);
    Rng sample_rng(derive_seed(cfg.seed, 0x73616d70ULL));
    Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566ULL));

    TrainResult result;
    result.best_policy = policy;
    result.best_eval_reward = -std::numeric_limits<double>::infinity();

    const std::size_t steps_per_update = cfg.n_envs * cfg.steps_per_env;
    const std::size_t n_updates = cfg.total_steps / steps_per_update;
    std::size_t kl_streak = 0;
    std::vector<std::vector<double>> obs_state;

    for (std::size_t update = 1; update <= n_updates; ++update) {
        RolloutStats stats;
        RolloutBatch batch = collect_rollout(env, policy, cfg.steps_per_env, sample_rng, false,
                                             &stats, &obs_state);
        compute_gae(batch, cfg.gamma, cfg.gae_lambda);
        normalize_advantages(batch);
        UpdateDiagnostics diag = ppo_update(policy, batch, cfg, adam, shuffle_rng);
        result.total_steps += steps_per_update;

        CurveRow row;
        row.update = update;
        row.steps = result.total_steps;
        row.mean_reward = stats.mean_step_reward;
        row.clip_fraction = diag.clip_fraction;
        row.approx_kl = diag.approx_kl;
        row.entropy = diag.entropy;
        double ep_sum = 0.0;
        for (double r : stats.completed_episode_returns) ep_sum += r;
        row.mean_episode_return = stats.completed_episode_returns.empty()
                                      ? std::numeric_limits<double>::quiet_NaN()
                                      : ep_sum / stats.completed_episode_returns.size();
        row.eval_mean_reward = std::numeric_limits<double>::quiet_NaN();

        if (update % cfg.eval_every_updates == 0 || update == n_updates) {
            double total = 0.0;
            std::size_t count = 0;
            for (std::size_t ep = 0; ep < cfg.eval_episodes; ++ep) {
                auto eval_obs = eval_env.reset_all_flat();
                bool done = false;
                while (!done) {
                    std::vector<std::vector<double>> actions(eval_env.size());
                    for (std::size_t i = 0; i < eval_env.size(); ++i)
                        actions[i] = policy.act_deterministic(eval_obs[i]);
                    auto res = eval_env.step_flat(actions);
                    for (std::size_t i = 0; i < eval_env.size(); ++i) {
                        if (res[i].fault) throw EnvFault("eval env faulted: " + res[i].fault_msg);
                        total += res[i].reward;
                        ++count;
                        eval_obs[i] = std::move(res[i].obs);
                        done = done || res[i].done;
                    }
                }
            }
            row.eval_mean_reward = count ? total / static_cast<double>(count) : 0.0;
            if (row.eval_mean_reward > result.best_eval_reward) {
                result.best_eval_reward = row.eval_mean_reward;
                result.best_policy = policy;
            }
        }

        result.curve.push_back(row);
        if (on_update) on_update(row);

        if (diag.approx_kl > cfg.kl_abort) {
            if (++kl_streak >= cfg.kl_abort_consecutive) {
                result.status = TrainStatus::AbortedDivergence;
                break;
            }
        } else {
            kl_streak = 0;
        }
    }
    result.adam = std::move(adam);
    return result;
}

template <typename VecEnvT>
TrainResult train_policy(VecEnvT& env, VecEnvT& eval_env, const PpoConfig& cfg,
                         const std::function<void(const CurveRow&)>& on_update) {
    cfg.validate();
    PolicyNet policy = make_policy(env.obs_dim(), cfg.act_dim, cfg.hidden, cfg.action_bound,
                                   cfg.log_std_init, derive_seed(cfg.seed, 0x706f6cULL));
    return train_policy_with(env, eval_env, policy, cfg, on_update);
}

}  // namespace softrl::ppo
