#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ghem {

struct AttentionModelConfig {
    int layers = 4;
    int heads = 4;
    int model_dim = 64;
    int feedforward_dim = 256;
    double dropout = 0.1;
    int window = 24;          // input sequence length
    int horizon = 24;         // direct multi-horizon outputs
    int input_features = 1;

    void check_valid() const;  // throws std::invalid_argument
};

// Encoder-only attention model for 24-h-ahead sequence regression:
// linear feature embedding + sinusoidal positional encoding, `layers` blocks
// of (multi-head self-attention, feedforward) with residual connections and
// post-layer-norm, then a linear head from the flattened sequence
// representation to `horizon` outputs. Backpropagation is hand-written and
// covered by finite-difference tests.
class TransformerModel {
  public:
    struct Layer {
        Eigen::MatrixXd wq, wk, wv, wo;      // model_dim x model_dim
        Eigen::VectorXd bq, bk, bv, bo;
        Eigen::VectorXd ln1_gain, ln1_bias;  // after attention
        Eigen::MatrixXd w1, w2;              // D x Dff, Dff x D
        Eigen::VectorXd b1, b2;
        Eigen::VectorXd ln2_gain, ln2_bias;  // after feedforward
    };

    // A named view into one parameter tensor (used by the optimizer,
    // serialization, and the gradient checks).
    struct ParamRef {
        std::string name;
        Eigen::MatrixXd* matrix = nullptr;
        Eigen::VectorXd* vector = nullptr;
        std::size_t size() const;
        double* data();
    };

    TransformerModel(const AttentionModelConfig& config, std::uint64_t seed);

    const AttentionModelConfig& config() const { return config_; }

    // Deterministic inference (dropout off). `window` is window x features.
    Eigen::VectorXd predict(const Eigen::MatrixXd& window) const;

    // Mean-squared-error loss over the batch plus its gradient with respect
    // to every parameter, laid out like parameters(). Dropout masks are
    // drawn from `dropout_rng` when non-null (training mode).
    double loss_and_gradients(const std::vector<Eigen::MatrixXd>& windows,
                              const std::vector<Eigen::VectorXd>& targets,
                              std::vector<Eigen::MatrixXd>& grads,
                              std::mt19937_64* dropout_rng) const;

    std::vector<ParamRef> parameters();

    // Flat copies used by the trainer for checkpointing the best epoch.
    std::vector<Eigen::MatrixXd> snapshot_parameters() const;
    void restore_parameters(const std::vector<Eigen::MatrixXd>& snapshot);

    void serialize_params(std::ostream& out) const;
    void deserialize_params(std::istream& in);

    static Eigen::MatrixXd positional_encoding(int window, int dim);

  private:
    AttentionModelConfig config_;
    Eigen::MatrixXd embed_w_;  // features x model_dim
    Eigen::VectorXd embed_b_;
    std::vector<Layer> layers_;
    Eigen::MatrixXd head_w_;   // (window*model_dim) x horizon
    Eigen::VectorXd head_b_;
    Eigen::MatrixXd pos_enc_;  // window x model_dim

    friend struct TransformerForward;
};

struct OptimizerConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;  // decoupled (applied outside the moments)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;
    int max_epochs = 100;
    int patience = 10;  // early stopping on validation RMSE
    std::uint64_t seed = 1;
};

struct TrainingSample {
    Eigen::MatrixXd window;   // window x features, normalized
    Eigen::VectorXd target;   // horizon, normalized
};

struct EpochMetrics {
    int epoch = 0;
    double train_mse = 0.0;
    double val_rmse = 0.0;  // raw target units when a scale is supplied
    double val_mae = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    int best_epoch = -1;
    double best_val_rmse = 0.0;
};

// Adam with decoupled weight decay, minimizing MSE; shuffles with its own
// seeded generator, evaluates validation RMSE/MAE each epoch (denormalized
// by target_mean/target_std), stops early, and restores the best-validation
// parameters. Throws SolverError with diagnostics if the loss diverges.
TrainResult train_model(TransformerModel& model, const std::vector<TrainingSample>& train_set,
                        const std::vector<TrainingSample>& val_set,
                        const OptimizerConfig& optimizer, double target_mean = 0.0,
                        double target_std = 1.0);

void write_metrics_csv(const std::vector<EpochMetrics>& history, const std::string& path);

}  // namespace ghem
