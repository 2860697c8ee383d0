#include "softrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "softrl/linalg.hpp"

namespace softrl::ppo {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// log(1 - tanh(u)^2), evaluated without cancellation.
inline double log_sech2(double u) {
    double au = std::abs(u);
    return 2.0 * (std::log(2.0) - au - std::log1p(std::exp(-2.0 * au)));
}
}  // namespace

void PpoConfig::validate() const {
    if (!(gamma > 0.0) || gamma > 1.0) throw ConfigError("ppo: gamma must be in (0, 1]");
    if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("ppo: lambda must be in [0, 1]");
    if (!(clip_range > 0.0)) throw ConfigError("ppo: clip range must be positive");
    if (n_envs == 0 || steps_per_env == 0 || epochs == 0 || minibatch == 0)
        throw ConfigError("ppo: counts must be positive");
    if (total_steps < n_envs * steps_per_env)
        throw ConfigError("ppo: total steps smaller than one update");
}

std::vector<std::vector<double>*> PolicyNet::params() {
    return {&w1, &b1, &w2, &b2, &wm, &bm, &wv, &bv, &log_std};
}

std::vector<const std::vector<double>*> PolicyNet::params() const {
    return {&w1, &b1, &w2, &b2, &wm, &bm, &wv, &bv, &log_std};
}

std::size_t PolicyNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : params()) n += p->size();
    return n;
}

void PolicyNet::forward(const double* obs, std::size_t batch, Cache& cache) const {
    cache.batch = batch;
    cache.x.assign(obs, obs + batch * obs_dim);
    cache.a1.resize(batch * hidden);
    cache.a2.resize(batch * hidden);
    cache.mean.resize(batch * act_dim);
    cache.value.resize(batch);

    linalg::affine_forward(cache.x.data(), batch, obs_dim, w1.data(), b1.data(), cache.a1.data(),
                           hidden);
    for (auto& v : cache.a1) v = std::tanh(v);
    linalg::affine_forward(cache.a1.data(), batch, hidden, w2.data(), b2.data(), cache.a2.data(),
                           hidden);
    for (auto& v : cache.a2) v = std::tanh(v);
    linalg::affine_forward(cache.a2.data(), batch, hidden, wm.data(), bm.data(),
                           cache.mean.data(), act_dim);
    linalg::affine_forward(cache.a2.data(), batch, hidden, wv.data(), bv.data(),
                           cache.value.data(), 1);
}

std::vector<double> PolicyNet::squash(const std::vector<double>& u) const {
    std::vector<double> a(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) a[i] = action_bound * std::tanh(u[i]);
    return a;
}

double PolicyNet::log_prob(const std::vector<double>& mean, const std::vector<double>& u) const {
    double lp = 0.0;
    for (std::size_t i = 0; i < act_dim; ++i) {
        double sigma = std::exp(log_std[i]);
        double z = (u[i] - mean[i]) / sigma;
        lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
        lp -= std::log(action_bound) + log_sech2(u[i]);  // squash correction
    }
    return lp;
}

double PolicyNet::entropy() const {
    double h = 0.0;
    for (std::size_t i = 0; i < act_dim; ++i)
        h += log_std[i] + 0.5 * (1.0 + kLog2Pi);
    return h;
}

std::vector<double> PolicyNet::act_deterministic(const std::vector<double>& obs) const {
    if (obs.size() != obs_dim) throw DimensionError("policy: obs width mismatch");
    Cache cache;
    forward(obs.data(), 1, cache);
    return squash(std::vector<double>(cache.mean.begin(), cache.mean.end()));
}

namespace {

// Semi-orthogonal init: min(in, out) orthonormal vectors of dimension
// max(in, out) via Gram-Schmidt on seeded Gaussian draws, scaled by gain and
// written into the [in x out] layout used by the affine kernels.
void orthogonal_init(std::vector<double>& w, std::size_t in, std::size_t out, double gain,
                     Rng& rng) {
    const std::size_t k = std::min(in, out), d = std::max(in, out);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> basis;
    basis.reserve(k);
    while (basis.size() < k) {
        std::vector<double> v(d);
        for (auto& x : v) x = normal(rng);
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += v[i] * b[i];
            for (std::size_t i = 0; i < d; ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;  // rare near-dependent draw; redraw
        for (auto& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    w.resize(in * out);
    if (out <= in) {
        // basis[o] spans the input dimension
        for (std::size_t o = 0; o < out; ++o)
            for (std::size_t i = 0; i < in; ++i) w[i * out + o] = gain * basis[o][i];
    } else {
        // basis[i] spans the output dimension
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t o = 0; o < out; ++o) w[i * out + o] = gain * basis[i][o];
    }
}

}  // namespace

PolicyNet make_policy(std::size_t obs_dim, std::size_t act_dim, std::size_t hidden,
                      double action_bound, double log_std_init, std::uint64_t seed) {
    PolicyNet p;
    p.obs_dim = obs_dim;
    p.act_dim = act_dim;
    p.hidden = hidden;
    p.action_bound = action_bound;
    Rng rng(derive_seed(seed, 0x706f6c696379ULL));
    // orthogonal trunk, near-zero action head so early actions stay centered,
    // unit value head
    orthogonal_init(p.w1, obs_dim, hidden, std::sqrt(2.0), rng);
    p.b1.assign(hidden, 0.0);
    orthogonal_init(p.w2, hidden, hidden, std::sqrt(2.0), rng);
    p.b2.assign(hidden, 0.0);
    orthogonal_init(p.wm, hidden, act_dim, 0.01, rng);
    p.bm.assign(act_dim, 0.0);
    orthogonal_init(p.wv, hidden, 1, 1.0, rng);
    p.bv.assign(1, 0.0);
    p.log_std.assign(act_dim, log_std_init);
    return p;
}

namespace detail {
std::vector<double> sample_u(const PolicyNet& policy, const double* mean, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> u(policy.act_dim);
    for (std::size_t i = 0; i < policy.act_dim; ++i)
        u[i] = mean[i] + std::exp(policy.log_std[i]) * normal(rng);
    return u;
}
}  // namespace detail

void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<double>& dones, double bootstrap, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns) {
    const std::size_t t_len = rewards.size();
    if (values.size() != t_len || dones.size() != t_len)
        throw DimensionError("gae: length mismatch");
    advantages.resize(t_len);
    returns.resize(t_len);
    double next_adv = 0.0;
    double next_value = bootstrap;
    for (std::size_t t = t_len; t-- > 0;) {
        double not_done = 1.0 - dones[t];
        double delta = rewards[t] + gamma * next_value * not_done - values[t];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        advantages[t] = next_adv;
        returns[t] = next_adv + values[t];
        next_value = values[t];
    }
}

void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
    batch.advantages.resize(batch.size());
    batch.returns.resize(batch.size());
    std::vector<double> r(batch.steps), v(batch.steps), d(batch.steps), adv, ret;
    for (std::size_t i = 0; i < batch.n_envs; ++i) {
        for (std::size_t t = 0; t < batch.steps; ++t) {
            r[t] = batch.rewards[t * batch.n_envs + i];
            v[t] = batch.values[t * batch.n_envs + i];
            d[t] = batch.dones[t * batch.n_envs + i];
        }
        gae(r, v, d, batch.bootstrap_values[i], gamma, lambda, adv, ret);
        for (std::size_t t = 0; t < batch.steps; ++t) {
            batch.advantages[t * batch.n_envs + i] = adv[t];
            batch.returns[t * batch.n_envs + i] = ret[t];
        }
    }
}

void normalize_advantages(RolloutBatch& batch) {
    const std::size_t n = batch.advantages.size();
    if (n == 0) throw DimensionError("normalize: empty advantages");
    double mean = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) /
                  static_cast<double>(n);
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    double std_dev = std::max(std::sqrt(var), 1e-8);
    for (double& a : batch.advantages) a = (a - mean) / std_dev;
}

AdamState::AdamState(const PolicyNet& policy) {
    for (const auto* p : policy.params()) {
        m.emplace_back(p->size(), 0.0);
        v.emplace_back(p->size(), 0.0);
    }
}

PolicyGradients::PolicyGradients(const PolicyNet& policy) {
    for (const auto* param : policy.params()) g.emplace_back(param->size(), 0.0);
}

namespace {

// Backward through trunk+heads for a minibatch; accumulates into grads.
void policy_backward(const PolicyNet& policy, const PolicyNet::Cache& cache,
                     const std::vector<double>& dmean, const std::vector<double>& dvalue,
                     PolicyGradients& grads) {
    const std::size_t batch = cache.batch;
    const std::size_t h = policy.hidden;

    // head params
    linalg::affine_backward_params(cache.a2.data(), batch, h, dmean.data(), policy.act_dim,
                                   grads.g[4].data(), grads.g[5].data());
    linalg::affine_backward_params(cache.a2.data(), batch, h, dvalue.data(), 1,
                                   grads.g[6].data(), grads.g[7].data());

    // into trunk
    std::vector<double> da2(batch * h, 0.0), tmp(batch * h, 0.0), wt;
    wt.resize(policy.wm.size());
    linalg::transpose(policy.wm.data(), h, policy.act_dim, wt.data());
    linalg::affine_backward_input(dmean.data(), batch, policy.act_dim, wt.data(), h, da2.data());
    wt.resize(policy.wv.size());
    linalg::transpose(policy.wv.data(), h, 1, wt.data());
    linalg::affine_backward_input(dvalue.data(), batch, 1, wt.data(), h, tmp.data());
    for (std::size_t i = 0; i < da2.size(); ++i) da2[i] += tmp[i];
    for (std::size_t i = 0; i < da2.size(); ++i)
        da2[i] *= 1.0 - cache.a2[i] * cache.a2[i];  // tanh'

    linalg::affine_backward_params(cache.a1.data(), batch, h, da2.data(), h, grads.g[2].data(),
                                   grads.g[3].data());
    std::vector<double> da1(batch * h, 0.0);
    wt.resize(policy.w2.size());
    linalg::transpose(policy.w2.data(), h, h, wt.data());
    linalg::affine_backward_input(da2.data(), batch, h, wt.data(), h, da1.data());
    for (std::size_t i = 0; i < da1.size(); ++i)
        da1[i] *= 1.0 - cache.a1[i] * cache.a1[i];

    linalg::affine_backward_params(cache.x.data(), batch, policy.obs_dim, da1.data(), h,
                                   grads.g[0].data(), grads.g[1].data());
}

void adam_update(PolicyNet& policy, PolicyGradients& grads, AdamState& adam, double lr) {
    adam.t += 1;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
    auto params = policy.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = *params[k];
        auto& g = grads.g[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            adam.m[k][i] = b1 * adam.m[k][i] + (1.0 - b1) * g[i];
            adam.v[k][i] = b2 * adam.v[k][i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= lr * (adam.m[k][i] / c1) / (std::sqrt(adam.v[k][i] / c2) + eps);
        }
    }
    for (auto& ls : policy.log_std) ls = std::max(ls, policy.log_std_floor);
}

}  // namespace

double ppo_loss(const PolicyNet& policy, const RolloutBatch& batch, const PpoConfig& cfg,
                const std::vector<std::size_t>& rows, PolicyGradients* grads,
                UpdateDiagnostics* diag) {
    const std::size_t m = rows.size();
    if (m == 0) throw DimensionError("ppo loss: empty row set");

    std::vector<double> mb_obs(m * policy.obs_dim);
    for (std::size_t r = 0; r < m; ++r)
        std::copy_n(&batch.obs[rows[r] * policy.obs_dim], policy.obs_dim,
                    &mb_obs[r * policy.obs_dim]);
    PolicyNet::Cache cache;
    policy.forward(mb_obs.data(), m, cache);

    std::vector<double> mb_dmean(m * policy.act_dim, 0.0), mb_dvalue(m, 0.0);
    std::vector<double> dlogstd(policy.act_dim, 0.0);
    double policy_loss = 0.0, value_loss = 0.0, clip_count = 0.0, kl = 0.0;

    for (std::size_t r = 0; r < m; ++r) {
        const std::size_t src = rows[r];
        const double adv = batch.advantages[src];
        std::vector<double> mean(cache.mean.begin() + r * policy.act_dim,
                                 cache.mean.begin() + (r + 1) * policy.act_dim);
        std::vector<double> u(batch.u.begin() + src * policy.act_dim,
                              batch.u.begin() + (src + 1) * policy.act_dim);
        const double lp_new = policy.log_prob(mean, u);
        const double ratio = std::exp(lp_new - batch.logp[src]);
        if (!std::isfinite(ratio))
            throw DivergenceError(
                str_printf("ppo update aborted: non-finite ratio (logp_new=%g logp_old=%g)",
                           lp_new, batch.logp[src]));

        policy_loss -= clipped_surrogate(ratio, adv, cfg.clip_range);
        if (std::abs(ratio - 1.0) > cfg.clip_range) clip_count += 1.0;
        kl += (ratio - 1.0) - std::log(ratio);

        // gradient flows through the ratio only while the unclipped branch is
        // the active min argument
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
        if (grads && ratio * adv <= clipped * adv) {
            const double dl_dlp = -adv * ratio / static_cast<double>(m);
            for (std::size_t jj = 0; jj < policy.act_dim; ++jj) {
                double sigma = std::exp(policy.log_std[jj]);
                double z = (u[jj] - mean[jj]) / sigma;
                mb_dmean[r * policy.act_dim + jj] += dl_dlp * (z / sigma);
                dlogstd[jj] += dl_dlp * (z * z - 1.0);
            }
        }

        const double verr = cache.value[r] - batch.returns[src];
        value_loss += verr * verr;
        mb_dvalue[r] = cfg.value_coef * 2.0 * verr / static_cast<double>(m);
    }
    policy_loss /= static_cast<double>(m);
    value_loss /= static_cast<double>(m);

    if (grads) {
        for (auto& gv : grads->g) std::fill(gv.begin(), gv.end(), 0.0);
        // entropy bonus: d(-c_e * H)/d log_std_j = -c_e
        for (std::size_t jj = 0; jj < policy.act_dim; ++jj) dlogstd[jj] -= cfg.entropy_coef;
        policy_backward(policy, cache, mb_dmean, mb_dvalue, *grads);
        std::copy(dlogstd.begin(), dlogstd.end(), grads->g[8].begin());
    }
    if (diag) {
        diag->policy_loss = policy_loss;
        diag->value_loss = value_loss;
        diag->entropy = policy.entropy();
        diag->clip_fraction = clip_count / static_cast<double>(m);
        diag->approx_kl = kl / static_cast<double>(m);
    }
    return policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * policy.entropy();
}

UpdateDiagnostics ppo_update(PolicyNet& policy, const RolloutBatch& batch, const PpoConfig& cfg,
                             AdamState& adam, Rng& rng) {
    const std::size_t n = batch.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    PolicyGradients grads(policy);
    UpdateDiagnostics total;
    std::size_t n_minibatches = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += cfg.minibatch) {
            const std::size_t m = std::min(cfg.minibatch, n - start);
            std::vector<std::size_t> rows(order.begin() + start, order.begin() + start + m);
            UpdateDiagnostics diag;
            ppo_loss(policy, batch, cfg, rows, &grads, &diag);
            adam_update(policy, grads, adam, cfg.learning_rate);

            total.policy_loss += diag.policy_loss;
            total.value_loss += diag.value_loss;
            total.entropy += diag.entropy;
            total.clip_fraction += diag.clip_fraction;
            total.approx_kl += diag.approx_kl;
            ++n_minibatches;
        }
    }
    const double inv = 1.0 / static_cast<double>(n_minibatches);
    total.policy_loss *= inv;
    total.value_loss *= inv;
    total.entropy *= inv;
    total.clip_fraction *= inv;
    total.approx_kl *= inv;
    return total;
}

std::string curve_csv(const std::vector<CurveRow>& curve) {
    std::ostringstream out;
    out << "update,steps,mean_reward,clip_frac,approx_kl,entropy,mean_episode_return,"
           "eval_mean_reward\n";
    for (const auto& r : curve) {
        out << r.update << ',' << r.steps << ',' << fmt_double(r.mean_reward) << ','
            << fmt_double(r.clip_fraction) << ',' << fmt_double(r.approx_kl) << ','
            << fmt_double(r.entropy) << ',' << fmt_double(r.mean_episode_return) << ','
            << fmt_double(r.eval_mean_reward) << "\n";
    }
    return out.str();
}

}  // namespace softrl::ppo
