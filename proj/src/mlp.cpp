#include "wmmse_learn/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wmmse_learn/rng.hpp"

namespace wmmse_learn {

namespace {

constexpr char k_checkpoint_magic[8] = {'W', 'M', 'M', 'S', 'E', 'N', 'E', 'T'};
constexpr std::uint32_t k_checkpoint_version = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ofstream& out, double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

Eigen::MatrixXd apply_output(const mlp_model& model, Eigen::MatrixXd z) {
    if (model.activation == output_activation::clamp_power)
        return z.cwiseMax(0.0).cwiseMin(model.p_max);
    return z;
}

struct forward_cache {
    std::vector<Eigen::MatrixXd> pre;  // pre[l] = W[l]*act[l] + b[l]
    std::vector<Eigen::MatrixXd> act;  // act[0] = inputs, act.back() = outputs
};

forward_cache forward_pass(const mlp_model& model, const Eigen::MatrixXd& inputs) {
    forward_cache cache;
    const std::size_t L = model.weights.size();
    cache.pre.resize(L);
    cache.act.resize(L + 1);
    cache.act[0] = inputs;
    for (std::size_t l = 0; l < L; ++l) {
        cache.pre[l] = (model.weights[l] * cache.act[l]).colwise() + model.biases[l];
        cache.act[l + 1] =
            l + 1 < L ? cache.pre[l].cwiseMax(0.0).eval() : apply_output(model, cache.pre[l]);
    }
    return cache;
}

struct gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

gradients backward_pass(const mlp_model& model, const forward_cache& cache,
                        const Eigen::MatrixXd& targets) {
    const std::size_t L = model.weights.size();
    const double scale = 1.0 / static_cast<double>(targets.size());
    gradients g;
    g.weights.resize(L);
    g.biases.resize(L);

    Eigen::MatrixXd delta = 2.0 * scale * (cache.act[L] - targets);
    if (model.activation == output_activation::clamp_power) {
        // Zero subgradient where the clamp saturates (boundaries included).
        delta = delta.cwiseProduct(
            ((cache.pre[L - 1].array() > 0.0) && (cache.pre[L - 1].array() < model.p_max))
                .cast<double>()
                .matrix());
    }
    for (std::size_t l = L; l-- > 0;) {
        g.weights[l] = delta * cache.act[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = model.weights[l].transpose() * delta;
            delta = delta.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return g;
}

struct rmsprop_state {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    explicit rmsprop_state(const mlp_model& model) {
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
            biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
        }
    }
};

void rmsprop_step(mlp_model& model, rmsprop_state& state, const gradients& g, double lr,
                  double decay, double epsilon) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        state.weights[l] = decay * state.weights[l].array().matrix() +
                           (1.0 - decay) * g.weights[l].cwiseProduct(g.weights[l]);
        state.biases[l] = decay * state.biases[l] + (1.0 - decay) * g.biases[l].cwiseProduct(g.biases[l]);
        model.weights[l].array() -=
            lr * g.weights[l].array() / (state.weights[l].array() + epsilon).sqrt();
        model.biases[l].array() -=
            lr * g.biases[l].array() / (state.biases[l].array() + epsilon).sqrt();
    }
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace

std::size_t mlp_model::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<std::size_t>(weights[l].size()) + static_cast<std::size_t>(biases[l].size());
    return n;
}

void mlp_model::validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("mlp_model: need at least two layers");
    for (int s : layer_sizes)
        if (s < 1) throw std::invalid_argument("mlp_model: layer sizes must be positive");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size())
        throw std::invalid_argument("mlp_model: weight/bias count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
            biases[l].size() != layer_sizes[l + 1])
            throw std::invalid_argument("mlp_model: layer " + std::to_string(l) + " has wrong shape");
    }
    if (!(p_max > 0.0)) throw std::invalid_argument("mlp_model: p_max must be positive");
}

mlp_model init_model(const std::vector<int>& layer_sizes, std::uint64_t seed, double p_max,
                     output_activation activation) {
    mlp_model model;
    model.layer_sizes = layer_sizes;
    model.activation = activation;
    model.p_max = p_max;
    rng_stream rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        Eigen::MatrixXd w(fan_out, fan_in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = scale * rng.truncated_normal();
        model.weights.push_back(std::move(w));
        model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    model.validate();
    return model;
}

Eigen::MatrixXd forward(const mlp_model& model, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != model.input_dim())
        throw std::invalid_argument("forward: input has " + std::to_string(inputs.rows()) +
                                    " rows, model expects " + std::to_string(model.input_dim()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        Eigen::MatrixXd z = (model.weights[l] * a).colwise() + model.biases[l];
        a = l + 1 < model.weights.size() ? z.cwiseMax(0.0).eval() : apply_output(model, std::move(z));
    }
    return a;
}

double mse_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    if (predictions.size() == 0) throw std::invalid_argument("mse_loss: empty matrices");
    return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

mse_gradients mse_gradient(const mlp_model& model, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& targets) {
    if (inputs.cols() != targets.cols() || targets.rows() != model.output_dim())
        throw std::invalid_argument("mse_gradient: shape mismatch");
    const forward_cache cache = forward_pass(model, inputs);
    gradients g = backward_pass(model, cache, targets);
    return {std::move(g.weights), std::move(g.biases)};
}

void train_config::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train_config: learning_rate must be positive");
    if (!(rms_decay > 0.0 && rms_decay < 1.0))
        throw std::invalid_argument("train_config: rms_decay must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("train_config: epsilon must be positive");
    if (batch_size < 1) throw std::invalid_argument("train_config: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("train_config: max_epochs must be >= 1");
    if (patience < 1) throw std::invalid_argument("train_config: patience must be >= 1");
    if (max_lr_halvings < 0) throw std::invalid_argument("train_config: max_lr_halvings must be >= 0");
}

training_set to_training_set(const dataset& data) {
    data.validate();
    if (data.instances.empty()) throw std::invalid_argument("to_training_set: empty dataset");
    const int D = data.instances.front().feature_dim();
    const int K = data.instances.front().users();
    training_set set;
    set.inputs.resize(D, static_cast<Eigen::Index>(data.size()));
    set.targets.resize(K, static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& inst = data.instances[i];
        if (inst.feature_dim() != D || inst.users() != K)
            throw std::invalid_argument("to_training_set: mixed instance shapes");
        for (int d = 0; d < D; ++d) set.inputs(d, static_cast<Eigen::Index>(i)) = inst.gains[d];
        for (int k = 0; k < K; ++k)
            set.targets(k, static_cast<Eigen::Index>(i)) = data.labels[i].p[k];
    }
    return set;
}

train_history train(mlp_model& model, const training_set& train_data,
                    const training_set& valid_data, const train_config& cfg) {
    cfg.validate();
    model.validate();
    if (train_data.inputs.rows() != model.input_dim() ||
        train_data.targets.rows() != model.output_dim() ||
        valid_data.inputs.rows() != model.input_dim() ||
        valid_data.targets.rows() != model.output_dim())
        throw std::invalid_argument("train: data dimensions do not match the model");
    if (train_data.inputs.cols() != train_data.targets.cols() ||
        valid_data.inputs.cols() != valid_data.targets.cols())
        throw std::invalid_argument("train: inputs and targets disagree on sample count");
    if (train_data.inputs.cols() == 0 || valid_data.inputs.cols() == 0)
        throw std::invalid_argument("train: empty training or validation set");

    const Eigen::Index n = train_data.inputs.cols();
    rng_stream rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    rmsprop_state opt(model);
    double lr = cfg.learning_rate;
    int halvings = 0;
    int epochs_without_improvement = 0;

    train_history history;
    history.best_score = -std::numeric_limits<double>::infinity();
    std::vector<Eigen::MatrixXd> best_weights = model.weights;
    std::vector<Eigen::VectorXd> best_biases = model.biases;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (Eigen::Index i = n - 1; i > 0; --i) {
            Eigen::Index j = static_cast<Eigen::Index>(rng.raw() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double squared_error_sum = 0.0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
            const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, n - start);
            std::vector<Eigen::Index> batch(order.begin() + start, order.begin() + start + count);
            Eigen::MatrixXd xb = train_data.inputs(Eigen::all, batch);
            Eigen::MatrixXd yb = train_data.targets(Eigen::all, batch);
            forward_cache cache = forward_pass(model, xb);
            squared_error_sum += (cache.act.back() - yb).squaredNorm();
            gradients g = backward_pass(model, cache, yb);
            rmsprop_step(model, opt, g, lr, cfg.rms_decay, cfg.epsilon);
        }

        epoch_record rec;
        rec.epoch = epoch;
        rec.train_mse = squared_error_sum / static_cast<double>(n * model.output_dim());
        rec.valid_mse = mse_loss(forward(model, valid_data.inputs), valid_data.targets);
        rec.learning_rate = lr;
        history.epochs.push_back(rec);

        const double score = cfg.selection_score ? cfg.selection_score(model) : -rec.valid_mse;
        if (score > history.best_score) {
            history.best_score = score;
            history.best_epoch = epoch;
            history.best_valid_mse = rec.valid_mse;
            best_weights = model.weights;
            best_biases = model.biases;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
        }

        if (cfg.decay_on_plateau && epochs_without_improvement >= cfg.patience) {
            ++halvings;
            if (halvings > cfg.max_lr_halvings) break;
            lr *= 0.5;
            epochs_without_improvement = 0;
        }
    }

    model.weights = std::move(best_weights);
    model.biases = std::move(best_biases);
    return history;
}

std::vector<double> binarize_powers(const std::vector<double>& p, double p_max) {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > 0.5 * p_max ? p_max : 0.0;
    return out;
}

Eigen::MatrixXd binarize_powers(const Eigen::MatrixXd& p, double p_max) {
    return (p.array() > 0.5 * p_max).cast<double>().matrix() * p_max;
}

void save_checkpoint(const std::string& path, const mlp_model& model) {
    model.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(k_checkpoint_magic, sizeof(k_checkpoint_magic));
    write_u32(out, k_checkpoint_version);
    write_u32(out, static_cast<std::uint32_t>(model.layer_sizes.size()));
    for (int s : model.layer_sizes) write_u32(out, static_cast<std::uint32_t>(s));
    write_u32(out, static_cast<std::uint32_t>(model.activation));
    write_f64(out, model.p_max);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const auto& w = model.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) write_f64(out, w(r, c));
        for (Eigen::Index r = 0; r < model.biases[l].size(); ++r) write_f64(out, model.biases[l](r));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

mlp_model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, k_checkpoint_magic, sizeof(magic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    if (read_u32(in) != k_checkpoint_version)
        throw std::runtime_error("load_checkpoint: unsupported version in " + path);
    const std::uint32_t num_layers = read_u32(in);
    if (num_layers < 2 || num_layers > 1024)
        throw std::runtime_error("load_checkpoint: implausible layer count in " + path);

    mlp_model model;
    model.layer_sizes.resize(num_layers);
    for (auto& s : model.layer_sizes) s = static_cast<int>(read_u32(in));
    const std::uint32_t act = read_u32(in);
    if (act > 1) throw std::runtime_error("load_checkpoint: unknown output activation in " + path);
    model.activation = static_cast<output_activation>(act);
    model.p_max = read_f64(in);
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        Eigen::MatrixXd w(model.layer_sizes[l + 1], model.layer_sizes[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = read_f64(in);
        Eigen::VectorXd b(model.layer_sizes[l + 1]);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = read_f64(in);
        model.weights.push_back(std::move(w));
        model.biases.push_back(std::move(b));
    }
    if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
    model.validate();
    return model;
}

void write_history_csv(const std::string& path, const train_history& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
    out << "epoch,train_mse,valid_mse,learning_rate\n";
    for (const auto& rec : history.epochs)
        out << rec.epoch << "," << format_double(rec.train_mse) << ","
            << format_double(rec.valid_mse) << "," << format_double(rec.learning_rate) << "\n";
    if (!out) throw std::runtime_error("write_history_csv: write failed for " + path);
}

} // namespace wmmse_learn
