#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wmmse_learn/problem.hpp"

namespace wmmse_learn {

/// Fully connected network with ReLU hidden layers. Columns of every data
/// matrix are samples. The output layer is either clamped to [0, p_max]
/// (power allocation heads) or left linear (regression heads).
enum class output_activation : std::uint8_t { clamp_power = 0, identity = 1 };

struct mlp_model {
    std::vector<int> layer_sizes;           // [input, hidden..., output]
    std::vector<Eigen::MatrixXd> weights;   // weights[l] is (sizes[l+1] x sizes[l])
    std::vector<Eigen::VectorXd> biases;    // biases[l] has sizes[l+1] entries
    output_activation activation = output_activation::clamp_power;
    double p_max = 1.0;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;
    void validate() const;
};

/// Weights are truncated-normal (two-sigma rejection) scaled by 1/sqrt(fan_in);
/// biases start at zero.
mlp_model init_model(const std::vector<int>& layer_sizes, std::uint64_t seed,
                     double p_max = 1.0,
                     output_activation activation = output_activation::clamp_power);

Eigen::MatrixXd forward(const mlp_model& model, const Eigen::MatrixXd& inputs);

/// Mean over both coordinates and samples of the squared error.
double mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

struct mse_gradients {
    std::vector<Eigen::MatrixXd> weights; // same shapes as mlp_model::weights
    std::vector<Eigen::VectorXd> biases;  // same shapes as mlp_model::biases
};

/// Backpropagated gradient of mse_loss(forward(model, inputs), targets)
/// with respect to every weight and bias.
mse_gradients mse_gradient(const mlp_model& model, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& targets);

struct train_config {
    double learning_rate = 0.001;
    double rms_decay = 0.9;
    double epsilon = 1e-8; // added inside the RMSprop square root
    int batch_size = 1000;
    int max_epochs = 100;
    int patience = 3;        // epochs without improvement before halving the rate
    int max_lr_halvings = 5; // training stops once this many halvings are spent
    bool decay_on_plateau = true;
    std::uint64_t seed = 0;

    /// Optional model-selection metric (higher is better). When absent, the
    /// negative validation MSE is used for both snapshotting and the plateau
    /// rule.
    std::function<double(const mlp_model&)> selection_score;

    void validate() const;
};

struct epoch_record {
    int epoch = 0; // 1-based
    double train_mse = 0.0;
    double valid_mse = 0.0;
    double learning_rate = 0.0;
};

struct train_history {
    std::vector<epoch_record> epochs;
    int best_epoch = 0;
    double best_valid_mse = 0.0;
    double best_score = 0.0;
};

struct training_set {
    Eigen::MatrixXd inputs;  // (feature_dim x n)
    Eigen::MatrixXd targets; // (output_dim x n)
};

training_set to_training_set(const dataset& data);

/// Mini-batch RMSprop on the mean squared error. The model is left at the
/// best-validation snapshot when training ends.
train_history train(mlp_model& model, const training_set& train_data,
                    const training_set& valid_data, const train_config& cfg);

/// Threshold each power at p_max/2: above goes to p_max, at or below goes to 0.
std::vector<double> binarize_powers(const std::vector<double>& p, double p_max);
Eigen::MatrixXd binarize_powers(const Eigen::MatrixXd& p, double p_max);

void save_checkpoint(const std::string& path, const mlp_model& model);
mlp_model load_checkpoint(const std::string& path);

void write_history_csv(const std::string& path, const train_history& history);

} // namespace wmmse_learn
