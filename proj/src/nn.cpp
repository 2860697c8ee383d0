#include "softrl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "softrl/linalg.hpp"

namespace softrl::nn {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    throw Error("unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation: " + name);
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < n_affine(); ++l)
        n += weights[l].size() + biases[l].size();
    return n;
}

MlpModel make_mlp(const std::vector<std::size_t>& layer_sizes, Activation activation,
                  std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw DimensionError("mlp needs at least input and output sizes");
    MlpModel m;
    m.layer_sizes = layer_sizes;
    m.activation = activation;
    m.in_mean.assign(layer_sizes.front(), 0.0);
    m.in_std.assign(layer_sizes.front(), 1.0);
    Rng rng(derive_seed(seed, 0x6d6c70ULL));
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        std::size_t in = layer_sizes[l], out = layer_sizes[l + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> w(in * out);
        for (auto& v : w) v = dist(rng);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(out, 0.0);
    }
    return m;
}

void fit_standardizer(MlpModel& model, const DataMatrix& x,
                      const std::vector<std::size_t>& passthrough) {
    if (x.cols != model.input_size()) throw DimensionError("standardizer input width mismatch");
    if (x.rows == 0) throw DimensionError("standardizer needs data");
    std::vector<bool> skip(x.cols, false);
    for (std::size_t c : passthrough) skip.at(c) = true;
    for (std::size_t c = 0; c < x.cols; ++c) {
        if (skip[c]) {
            model.in_mean[c] = 0.0;
            model.in_std[c] = 1.0;
            continue;
        }
        double mean = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) mean += x.at(r, c);
        mean /= static_cast<double>(x.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) {
            double d = x.at(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(x.rows);
        model.in_mean[c] = mean;
        model.in_std[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
}

namespace {

inline void apply_activation(Activation a, double* v, std::size_t n) {
    switch (a) {
        case Activation::Relu:
            for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
            break;
        case Activation::Identity:
            break;
    }
}

inline double activation_grad(Activation a, double preact) {
    switch (a) {
        case Activation::Relu: return preact > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            double t = std::tanh(preact);
            return 1.0 - t * t;
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

std::vector<double> MlpModel::forward(const std::vector<double>& x) const {
    if (x.size() != input_size()) throw DimensionError("forward: input size mismatch");
    std::vector<double> out(output_size());
    forward_batch(x.data(), 1, out.data());
    return out;
}

void MlpModel::forward_batch(const double* x, std::size_t batch, double* y) const {
    const std::size_t in0 = input_size();
    std::vector<double> cur(batch * in0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < in0; ++c)
            cur[b * in0 + c] = (x[b * in0 + c] - in_mean[c]) / in_std[c];
    std::vector<double> next;
    for (std::size_t l = 0; l < n_affine(); ++l) {
        std::size_t in = layer_sizes[l], out = layer_sizes[l + 1];
        next.resize(batch * out);
        linalg::affine_forward(cur.data(), batch, in, weights[l].data(), biases[l].data(),
                               next.data(), out);
        if (l + 1 < n_affine()) apply_activation(activation, next.data(), batch * out);
        cur.swap(next);
    }
    std::copy(cur.begin(), cur.end(), y);
}

void init_output_bias(MlpModel& model, const DataMatrix& train_targets) {
    if (train_targets.cols != model.output_size())
        throw DimensionError("output bias init: target width mismatch");
    if (train_targets.rows == 0) throw DimensionError("output bias init: no data");
    std::vector<double>& bias = model.biases.back();
    for (std::size_t c = 0; c < train_targets.cols; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < train_targets.rows; ++r) mean += train_targets.at(r, c);
        bias[c] = mean / static_cast<double>(train_targets.rows);
    }
}

RangeWeights compute_range_weights(const DataMatrix& train_targets) {
    if (train_targets.rows < 2) throw DegenerateRangeError("range weights need >= 2 samples");
    const std::size_t d = train_targets.cols;
    RangeWeights rw;
    rw.delta_y.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
        double lo = train_targets.at(0, c), hi = lo;
        for (std::size_t r = 1; r < train_targets.rows; ++r) {
            double v = train_targets.at(r, c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        rw.delta_y[c] = hi - lo;
    }
    double total = std::accumulate(rw.delta_y.begin(), rw.delta_y.end(), 0.0);
    if (total <= 0.0)
        throw DegenerateRangeError("every output dimension is constant over the training set");
    rw.w.resize(d);
    for (std::size_t c = 0; c < d; ++c)
        rw.w[c] = 1.0 + static_cast<double>(d) * rw.delta_y[c] / total;
    return rw;
}

double weighted_mse(const std::vector<double>& y, const std::vector<double>& y_hat,
                    const std::vector<double>& w) {
    if (y.size() != y_hat.size() || y.size() != w.size())
        throw DimensionError("weighted_mse: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double e = y[i] - y_hat[i];
        acc += w[i] * e * e;
    }
    return acc / static_cast<double>(y.size());
}

namespace {

double evaluate_impl(const MlpModel& model, const DataMatrix& x, const DataMatrix& y,
                     const std::vector<double>* w) {
    if (x.rows != y.rows) throw DimensionError("evaluate: row count mismatch");
    const std::size_t d = y.cols;
    const std::size_t chunk = 512;
    std::vector<double> pred(chunk * d);
    double acc = 0.0;
    for (std::size_t start = 0; start < x.rows; start += chunk) {
        std::size_t n = std::min(chunk, x.rows - start);
        model.forward_batch(&x.a[start * x.cols], n, pred.data());
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double e = y.at(start + r, c) - pred[r * d + c];
                s += (w ? (*w)[c] : 1.0) * e * e;
            }
            acc += s / static_cast<double>(d);
        }
    }
    return acc / static_cast<double>(x.rows);
}

}  // namespace

double evaluate_weighted_mse(const MlpModel& model, const DataMatrix& x, const DataMatrix& y,
                             const std::vector<double>& w) {
    return evaluate_impl(model, x, y, &w);
}

double evaluate_mse(const MlpModel& model, const DataMatrix& x, const DataMatrix& y) {
    return evaluate_impl(model, x, y, nullptr);
}

Gradients make_gradients(const MlpModel& model) {
    Gradients g;
    for (std::size_t l = 0; l < model.n_affine(); ++l) {
        g.weights.emplace_back(model.weights[l].size(), 0.0);
        g.biases.emplace_back(model.biases[l].size(), 0.0);
    }
    return g;
}

double backward(const MlpModel& model, const double* x, const double* y_target,
                std::size_t batch, const std::vector<double>& w, Gradients& grads,
                BackpropScratch& scratch) {
    if (batch == 0) throw DimensionError("backward: empty batch");
    const std::size_t n_layers = model.n_affine();
    const std::size_t in0 = model.input_size();
    const std::size_t d_out = model.output_size();
    if (w.size() != d_out) throw DimensionError("backward: weight vector width mismatch");

    scratch.acts.resize(n_layers + 1);
    scratch.preacts.resize(n_layers);
    scratch.deltas.resize(n_layers);
    scratch.wt.resize(n_layers);

    // forward with caches
    scratch.acts[0].resize(batch * in0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < in0; ++c)
            scratch.acts[0][b * in0 + c] = (x[b * in0 + c] - model.in_mean[c]) / model.in_std[c];
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::size_t in = model.layer_sizes[l], out = model.layer_sizes[l + 1];
        scratch.preacts[l].resize(batch * out);
        linalg::affine_forward(scratch.acts[l].data(), batch, in, model.weights[l].data(),
                               model.biases[l].data(), scratch.preacts[l].data(), out);
        scratch.acts[l + 1] = scratch.preacts[l];
        if (l + 1 < n_layers)
            apply_activation(model.activation, scratch.acts[l + 1].data(), batch * out);
    }

    // loss and output delta
    const std::vector<double>& pred = scratch.acts[n_layers];
    double loss = 0.0;
    std::vector<double>& dout = scratch.deltas[n_layers - 1];
    dout.resize(batch * d_out);
    const double scale = 2.0 / (static_cast<double>(d_out) * static_cast<double>(batch));
    for (std::size_t b = 0; b < batch; ++b) {
        double s = 0.0;
        for (std::size_t c = 0; c < d_out; ++c) {
            double e = pred[b * d_out + c] - y_target[b * d_out + c];
            s += w[c] * e * e;
            dout[b * d_out + c] = scale * w[c] * e;
        }
        loss += s / static_cast<double>(d_out);
    }
    loss /= static_cast<double>(batch);

    // backward pass
    for (std::size_t l = n_layers; l-- > 0;) {
        std::size_t in = model.layer_sizes[l], out = model.layer_sizes[l + 1];
        std::vector<double>& delta = scratch.deltas[l];
        std::fill(grads.weights[l].begin(), grads.weights[l].end(), 0.0);
        std::fill(grads.biases[l].begin(), grads.biases[l].end(), 0.0);
        linalg::affine_backward_params(scratch.acts[l].data(), batch, in, delta.data(), out,
                                       grads.weights[l].data(), grads.biases[l].data());
        if (l > 0) {
            std::vector<double>& dprev = scratch.deltas[l - 1];
            dprev.resize(batch * in);
            scratch.wt[l].resize(in * out);
            linalg::transpose(model.weights[l].data(), in, out, scratch.wt[l].data());
            linalg::affine_backward_input(delta.data(), batch, out, scratch.wt[l].data(), in,
                                          dprev.data());
            const std::vector<double>& pre = scratch.preacts[l - 1];
            for (std::size_t i = 0; i < batch * in; ++i)
                dprev[i] *= activation_grad(model.activation, pre[i]);
        }
    }
    return loss;
}

namespace {

struct AdamState {
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    std::size_t t = 0;

    explicit AdamState(const MlpModel& model) {
        for (std::size_t l = 0; l < model.n_affine(); ++l) {
            m_w.emplace_back(model.weights[l].size(), 0.0);
            v_w.emplace_back(model.weights[l].size(), 0.0);
            m_b.emplace_back(model.biases[l].size(), 0.0);
            v_b.emplace_back(model.biases[l].size(), 0.0);
        }
    }
};

void adam_step(std::vector<double>& param, const std::vector<double>& grad,
               std::vector<double>& m, std::vector<double>& v, std::size_t t,
               const TrainConfig& cfg) {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        param[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_eps);
    }
}

void sgd_step(std::vector<double>& param, const std::vector<double>& grad,
              const TrainConfig& cfg) {
    for (std::size_t i = 0; i < param.size(); ++i)
        param[i] -= cfg.learning_rate * grad[i];
}

}  // namespace

TrainHistory train(MlpModel& model, const DataMatrix& train_x, const DataMatrix& train_y,
                   const DataMatrix& val_x, const DataMatrix& val_y,
                   const RangeWeights& range_weights, const TrainConfig& cfg) {
    if (train_x.rows == 0 || val_x.rows == 0) throw DimensionError("train: empty dataset");
    if (train_x.cols != model.input_size() || train_y.cols != model.output_size())
        throw DimensionError("train: model/data width mismatch");

    Rng rng(derive_seed(cfg.seed, 0x747261696eULL));
    std::vector<std::size_t> order(train_x.rows);
    std::iota(order.begin(), order.end(), 0);

    Gradients grads = make_gradients(model);
    BackpropScratch scratch;
    AdamState adam(model);
    const bool use_adam = cfg.optimizer == "adam";
    if (!use_adam && cfg.optimizer != "sgd")
        throw ConfigError("unknown optimizer: " + cfg.optimizer);

    std::vector<double> bx(cfg.batch_size * train_x.cols);
    std::vector<double> by(cfg.batch_size * train_y.cols);

    TrainHistory hist;
    MlpModel best = model;
    bool have_best = false;
    std::size_t stale_evals = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < train_x.rows; start += cfg.batch_size) {
            std::size_t n = std::min(cfg.batch_size, train_x.rows - start);
            for (std::size_t r = 0; r < n; ++r) {
                std::size_t src = order[start + r];
                std::copy_n(&train_x.a[src * train_x.cols], train_x.cols, &bx[r * train_x.cols]);
                std::copy_n(&train_y.a[src * train_y.cols], train_y.cols, &by[r * train_y.cols]);
            }
            double loss = backward(model, bx.data(), by.data(), n, range_weights.w, grads, scratch);
            if (!std::isfinite(loss))
                throw DivergenceError(str_printf("NaN loss at epoch %zu", epoch));
            epoch_loss += loss;
            ++n_batches;
            adam.t += 1;
            for (std::size_t l = 0; l < model.n_affine(); ++l) {
                if (use_adam) {
                    adam_step(model.weights[l], grads.weights[l], adam.m_w[l], adam.v_w[l],
                              adam.t, cfg);
                    adam_step(model.biases[l], grads.biases[l], adam.m_b[l], adam.v_b[l],
                              adam.t, cfg);
                } else {
                    sgd_step(model.weights[l], grads.weights[l], cfg);
                    sgd_step(model.biases[l], grads.biases[l], cfg);
                }
            }
        }
        hist.epochs_ran = epoch;

        if (epoch % cfg.eval_every_epochs == 0 || epoch == cfg.max_epochs) {
            double val_wmse = evaluate_weighted_mse(model, val_x, val_y, range_weights.w);
            EvalRecord rec;
            rec.epoch = epoch;
            rec.train_wmse = epoch_loss / static_cast<double>(n_batches);
            rec.val_wmse = val_wmse;
            rec.improved = !have_best || val_wmse < hist.best_val_wmse;
            hist.evals.push_back(rec);
            if (rec.improved) {
                best = model;
                have_best = true;
                hist.best_val_wmse = val_wmse;
                hist.best_epoch = epoch;
                stale_evals = 0;
            } else {
                ++stale_evals;
                if (stale_evals >= cfg.patience_evals) {
                    hist.early_stopped = true;
                    break;
                }
            }
        }
    }
    if (have_best) model = best;
    return hist;
}

AblationReport ablation_compare(const std::vector<dataset::Sample>& train_set,
                                const std::vector<dataset::Sample>& val_set,
                                const std::vector<dataset::Sample>& test_set,
                                const std::vector<Architecture>& architectures,
                                Activation activation, const TrainConfig& cfg,
                                unsigned n_threads) {
    if (train_set.empty() || val_set.empty() || test_set.empty())
        throw DimensionError("ablation: empty split");
    const DataMatrix train_y = dataset::targets(train_set);
    const DataMatrix val_y = dataset::targets(val_set);
    const DataMatrix test_y = dataset::targets(test_set);
    const RangeWeights rw = compute_range_weights(train_y);

    struct Job {
        Architecture arch;
        std::string mode;
        std::size_t arch_index;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < architectures.size(); ++a)
        for (const char* mode : {"6d", "3d"})
            jobs.push_back({architectures[a], mode, a});

    AblationReport report;
    report.entries.resize(jobs.size());
    // run heaviest jobs first so the dynamic schedule packs the tail well;
    // report entries keep the declaration order
    std::vector<std::size_t> exec_order(jobs.size());
    std::iota(exec_order.begin(), exec_order.end(), 0);
    std::stable_sort(exec_order.begin(), exec_order.end(), [&](std::size_t a, std::size_t b) {
        auto cost = [&](const Job& job) {
            return job.arch.hidden_layers * job.arch.hidden_width * job.arch.hidden_width;
        };
        return cost(jobs[a]) > cost(jobs[b]);
    });
    parallel_for(jobs.size(), n_threads, [&](std::size_t k) {
        const std::size_t j = exec_order[k];
        const Job& job = jobs[j];
        const bool six = job.mode == "6d";
        DataMatrix tx = six ? dataset::inputs_6d(train_set) : dataset::inputs_3d(train_set);
        DataMatrix vx = six ? dataset::inputs_6d(val_set) : dataset::inputs_3d(val_set);
        DataMatrix sx = six ? dataset::inputs_6d(test_set) : dataset::inputs_3d(test_set);

        std::vector<std::size_t> layers;
        layers.push_back(tx.cols);
        for (std::size_t l = 0; l < job.arch.hidden_layers; ++l)
            layers.push_back(job.arch.hidden_width);
        layers.push_back(train_y.cols);

        TrainConfig job_cfg = cfg;
        job_cfg.seed = derive_seed(cfg.seed, 100 + j);
        MlpModel model = make_mlp(layers, activation, job_cfg.seed);
        model.input_mode = job.mode;
        fit_standardizer(model, tx, six ? std::vector<std::size_t>{3, 4, 5}
                                        : std::vector<std::size_t>{});
        init_output_bias(model, train_y);
        TrainHistory hist = train(model, tx, train_y, vx, val_y, rw, job_cfg);

        AblationEntry entry;
        entry.arch = job.arch;
        entry.input_mode = job.mode;
        entry.test_wmse = evaluate_weighted_mse(model, sx, test_y, rw.w);
        entry.test_mse = evaluate_mse(model, sx, test_y);
        entry.val_wmse = hist.best_val_wmse;
        entry.epochs_ran = hist.epochs_ran;
        report.entries[j] = entry;
    });

    report.best_6d_mse = std::numeric_limits<double>::infinity();
    report.best_3d_mse = std::numeric_limits<double>::infinity();
    for (const auto& e : report.entries) {
        if (e.input_mode == "6d")
            report.best_6d_mse = std::min(report.best_6d_mse, e.test_mse);
        else
            report.best_3d_mse = std::min(report.best_3d_mse, e.test_mse);
    }
    return report;
}

std::string ablation_csv(const AblationReport& report) {
    std::ostringstream out;
    out << "architecture,input_mode,test_wmse,test_mse\n";
    for (const auto& e : report.entries) {
        out << e.arch.hidden_layers << "x" << e.arch.hidden_width << ',' << e.input_mode << ','
            << fmt_double(e.test_wmse) << ',' << fmt_double(e.test_mse) << "\n";
    }
    return out.str();
}

}  // namespace softrl::nn
