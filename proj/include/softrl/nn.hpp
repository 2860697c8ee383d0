#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softrl/dataset.hpp"
#include "softrl/util.hpp"

namespace softrl::nn {

using dataset::DataMatrix;

enum class Activation { Relu, Tanh, Identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Fully connected network. Hidden layers share one activation; the output
/// layer is linear. Weights are stored input-major ([in x out] row-major).
/// Inputs are standardized by in_mean/in_std before the affine chain
/// (identity by default); targets stay in raw mm.
struct MlpModel {
    std::vector<std::size_t> layer_sizes;     // input, hidden..., output
    std::vector<std::vector<double>> weights;  // per affine layer
    std::vector<std::vector<double>> biases;
    Activation activation = Activation::Relu;
    std::vector<double> in_mean;
    std::vector<double> in_std;
    std::string input_mode = "6d";  // metadata: "6d" (p, d) or "3d" (p only)

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t n_affine() const { return layer_sizes.size() - 1; }
    std::size_t parameter_count() const;

    std::vector<double> forward(const std::vector<double>& x) const;
    /// Row-wise forward; each row is computed independently of the batch size.
    void forward_batch(const double* x, std::size_t batch, double* y) const;
};

/// Uniform fan-in initialization, biases zero, deterministic given the seed.
MlpModel make_mlp(const std::vector<std::size_t>& layer_sizes, Activation activation,
                  std::uint64_t seed);

/// Sets in_mean/in_std from per-column train statistics; columns listed in
/// passthrough keep identity scaling (used for the +-1 direction columns).
void fit_standardizer(MlpModel& model, const DataMatrix& train_inputs,
                      const std::vector<std::size_t>& passthrough);

/// Initializes the output-layer bias to the per-dimension target mean so the
/// first predictions sit at the center of the raw-mm targets.
void init_output_bias(MlpModel& model, const DataMatrix& train_targets);

struct RangeWeights {
    std::vector<double> w;        // per output dimension, each >= 1
    std::vector<double> delta_y;  // motion range per dimension, mm
};

/// w_i = 1 + n_dims * dY_i / sum_j dY_j with dY_i the train-set motion range.
RangeWeights compute_range_weights(const DataMatrix& train_targets);

double weighted_mse(const std::vector<double>& y, const std::vector<double>& y_hat,
                    const std::vector<double>& w);

/// Mean weighted MSE of the model over a whole matrix pair.
double evaluate_weighted_mse(const MlpModel& model, const DataMatrix& x, const DataMatrix& y,
                             const std::vector<double>& w);
double evaluate_mse(const MlpModel& model, const DataMatrix& x, const DataMatrix& y);

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

Gradients make_gradients(const MlpModel& model);

/// Workspace reused across batches to avoid re-allocation.
struct BackpropScratch {
    std::vector<std::vector<double>> acts;      // standardized input + post-activation per layer
    std::vector<std::vector<double>> preacts;   // pre-activation per affine layer
    std::vector<std::vector<double>> deltas;
    std::vector<std::vector<double>> wt;        // per-layer weight transposes
};

/// Exact gradient of the mean weighted MSE over the batch; returns the loss.
double backward(const MlpModel& model, const double* x, const double* y_target,
                std::size_t batch, const std::vector<double>& w, Gradients& grads,
                BackpropScratch& scratch);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 256;
    std::size_t max_epochs = 300;
    std::size_t eval_every_epochs = 10;
    std::size_t patience_evals = 10;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::string optimizer = "adam";  // "adam" | "sgd"
};

struct EvalRecord {
    std::size_t epoch = 0;
    double train_wmse = 0.0;
    double val_wmse = 0.0;
    bool improved = false;
};

struct TrainHistory {
    std::vector<EvalRecord> evals;
    std::size_t best_epoch = 0;
    double best_val_wmse = 0.0;
    std::size_t epochs_ran = 0;
    bool early_stopped = false;
};

/// Mini-batch training with validation-driven early stopping; the model is
/// left at the best-validation checkpoint, not the last epoch.
TrainHistory train(MlpModel& model, const DataMatrix& train_x, const DataMatrix& train_y,
                   const DataMatrix& val_x, const DataMatrix& val_y,
                   const RangeWeights& range_weights, const TrainConfig& cfg);

struct Architecture {
    std::size_t hidden_layers = 4;
    std::size_t hidden_width = 128;
};

struct AblationEntry {
    Architecture arch;
    std::string input_mode;  // "6d" | "3d"
    double test_wmse = 0.0;
    double test_mse = 0.0;
    double val_wmse = 0.0;
    std::size_t epochs_ran = 0;
};

struct AblationReport {
    std::vector<AblationEntry> entries;
    double best_6d_mse = 0.0;
    double best_3d_mse = 0.0;
};

/// Trains every architecture twice (6D pressure+direction input and 3D
/// pressure-only input) on the same splits and reports test errors.
AblationReport ablation_compare(const std::vector<dataset::Sample>& train_set,
                                const std::vector<dataset::Sample>& val_set,
                                const std::vector<dataset::Sample>& test_set,
                                const std::vector<Architecture>& architectures,
                                Activation activation, const TrainConfig& cfg,
                                unsigned n_threads = 1);

std::string ablation_csv(const AblationReport& report);

}  // namespace softrl::nn
