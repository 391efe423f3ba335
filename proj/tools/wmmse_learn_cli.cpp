#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmmse_learn/channel_gen.hpp"
#include "wmmse_learn/constructive.hpp"
#include "wmmse_learn/harness.hpp"
#include "wmmse_learn/mlp.hpp"
#include "wmmse_learn/parallel.hpp"
#include "wmmse_learn/problem.hpp"
#include "wmmse_learn/rng.hpp"
#include "wmmse_learn/unit_graph.hpp"
#include "wmmse_learn/wmmse.hpp"

namespace {

using namespace wmmse_learn;

/// Distinguishes certified-bound violations (exit code 2) from IO errors (3).
struct verification_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("WMMSE_LEARN_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("WMMSE_LEARN_SEED must be a nonnegative integer");
        }
    }
    return 0;
}

std::vector<int> parse_hidden(const std::string& text) {
    std::vector<int> sizes;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const int v = std::stoi(item);
        if (v < 1) throw std::invalid_argument("hidden layer sizes must be positive");
        sizes.push_back(v);
    }
    if (sizes.empty()) throw std::invalid_argument("at least one hidden layer is required");
    return sizes;
}

struct generate_args {
    std::string model = "ic";
    int users = 10;
    int samples = 1000;
    int cells = 3;
    double radius = 100.0;
    double inner = 0.0;
    double p_max = 1.0;
    double sigma2 = std::nan("");
    double label_tol = 1e-5;
    int label_iters = 500;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    std::string out;
    std::string reference;
};

int cmd_generate(const generate_args& args) {
    const std::uint64_t seed = args.seed_given ? args.seed : default_seed();
    const int threads = args.threads > 0 ? args.threads : default_thread_count();

    std::vector<problem_instance> instances;
    double sigma2 = args.sigma2;
    dataset_meta meta;
    if (args.model == "ic") {
        if (std::isnan(sigma2)) sigma2 = 1.0;
        instances = generate_gaussian_ic(args.users, args.samples, seed, sigma2, args.p_max);
    } else if (args.model == "imac") {
        if (std::isnan(sigma2)) sigma2 = 1.0;
        instances = generate_imac(args.cells, args.users, args.radius, args.inner, args.samples,
                                  seed, sigma2, args.p_max);
        meta.extra["radius"] = fmt(args.radius);
        meta.extra["inner_radius"] = fmt(args.inner);
    } else if (args.model == "stats") {
        if (std::isnan(sigma2)) sigma2 = 1e-3;
        if (args.reference.empty())
            throw std::invalid_argument("generate --model stats requires --reference");
        const dataset ref = read_dataset_csv(args.reference);
        instances = generate_from_stats(ref.instances, args.samples, seed, sigma2, args.p_max);
        meta.extra["reference"] = args.reference;
    } else {
        throw std::invalid_argument("unknown --model '" + args.model + "'");
    }

    wmmse_config cfg;
    cfg.obj_tol = args.label_tol;
    cfg.max_iter = args.label_iters;
    dataset data = label_dataset(std::move(instances), cfg, threads);
    data.meta.generator = args.model;
    data.meta.seed = seed;
    data.meta.extra = meta.extra;
    write_dataset_csv(args.out, data);
    std::cout << "wrote " << data.size() << " samples (" << data.meta.num_users
              << " users) to " << args.out << "\n";
    return 0;
}

struct train_args {
    std::string data;
    std::string valid;
    double valid_frac = 0.1;
    std::string hidden = "200,200,200";
    double lr = 0.001;
    double rms_decay = 0.9;
    double epsilon = 1e-8;
    int batch = 1000;
    int epochs = 100;
    int patience = 3;
    int halvings = 5;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool ratio_selection = false;
    std::string out = "model.ckpt";
    std::string history = "history.csv";
};

int cmd_train(const train_args& args) {
    const std::uint64_t seed = args.seed_given ? args.seed : default_seed();
    dataset full = read_dataset_csv(args.data);

    dataset train_set, valid_set;
    if (!args.valid.empty()) {
        train_set = std::move(full);
        valid_set = read_dataset_csv(args.valid);
    } else {
        if (!(args.valid_frac > 0.0 && args.valid_frac < 1.0))
            throw std::invalid_argument("--valid-frac must lie in (0, 1)");
        const std::size_t n = full.size();
        const std::size_t n_valid =
            std::max<std::size_t>(1, static_cast<std::size_t>(n * args.valid_frac));
        if (n_valid >= n) throw std::invalid_argument("dataset too small for the requested split");
        const std::size_t n_train = n - n_valid;
        train_set.meta = valid_set.meta = full.meta;
        train_set.instances.assign(full.instances.begin(), full.instances.begin() + n_train);
        train_set.labels.assign(full.labels.begin(), full.labels.begin() + n_train);
        valid_set.instances.assign(full.instances.begin() + n_train, full.instances.end());
        valid_set.labels.assign(full.labels.begin() + n_train, full.labels.end());
    }

    const int feature_dim = train_set.instances.front().feature_dim();
    const int num_users = train_set.instances.front().users();
    std::vector<int> sizes{feature_dim};
    for (int h : parse_hidden(args.hidden)) sizes.push_back(h);
    sizes.push_back(num_users);

    mlp_model model = init_model(sizes, seed, train_set.meta.p_max);
    train_config cfg;
    cfg.learning_rate = args.lr;
    cfg.rms_decay = args.rms_decay;
    cfg.epsilon = args.epsilon;
    cfg.batch_size = args.batch;
    cfg.max_epochs = args.epochs;
    cfg.patience = args.patience;
    cfg.max_lr_halvings = args.halvings;
    cfg.seed = seed;
    if (args.ratio_selection) {
        cfg.selection_score = [&](const mlp_model& m) {
            return rate_ratio(m, valid_set.instances, valid_set.labels);
        };
    }

    const training_set train_data = to_training_set(train_set);
    const training_set valid_data = to_training_set(valid_set);
    const train_history history = train(model, train_data, valid_data, cfg);
    save_checkpoint(args.out, model);
    write_history_csv(args.history, history);

    const double final_valid = mse_loss(forward(model, valid_data.inputs), valid_data.targets);
    std::cout << "trained " << history.epochs.size() << " epochs; best epoch "
              << history.best_epoch << "; final validation mse " << fmt(final_valid) << "\n";
    return 0;
}

struct eval_args {
    std::string data;
    std::string model_file;
    bool binarize = false;
    bool half_user = false;
    std::string report_dir = ".";
    int bins = 30;
    int threads = 0;
    double solver_tol = 1e-5;
    int solver_iters = 500;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int cmd_eval(const eval_args& args) {
    const dataset test = read_dataset_csv(args.data);
    const mlp_model model = load_checkpoint(args.model_file);

    eval_options opts;
    opts.binarize = args.binarize;
    opts.solver.obj_tol = args.solver_tol;
    opts.solver.max_iter = args.solver_iters;
    opts.threads = args.threads > 0 ? args.threads : default_thread_count();
    opts.random_seed = args.seed_given ? args.seed : default_seed();

    eval_report report =
        args.half_user ? half_user_eval(test, model, opts) : evaluate(test, model, opts);
    report.metadata["model_file"] = args.model_file;

    ensure_dir(args.report_dir);
    const std::string base = args.report_dir + "/";
    write_report_csv(base + "report.csv", report);
    write_cdf_csv(base + "cdf.csv", report);
    write_histogram_csv(base + "histogram.csv", report, args.bins);
    write_report_json(base + "report.json", report);

    for (const auto& policy : report.policies)
        std::cout << policy.name << ": avg_rate " << fmt(policy.avg_rate) << ", ratio "
                  << fmt(policy.ratio_pct) << "%, time " << fmt(policy.total_time_s) << " s\n";
    return 0;
}

struct bench_args {
    std::string data;
    std::string model_file;
    int reps = 5;
    int threads = 1;
    std::string report_dir = ".";
};

int cmd_bench(const bench_args& args) {
    const dataset test = read_dataset_csv(args.data);
    const mlp_model model = load_checkpoint(args.model_file);

    eval_options opts;
    opts.threads = args.threads;
    const bench_report report = bench_timing(test, model, args.reps, opts);

    ensure_dir(args.report_dir);
    std::ofstream csv(args.report_dir + "/bench.csv");
    if (!csv) throw std::runtime_error("cannot open bench.csv in " + args.report_dir);
    csv << "policy,median_time_s,n_samples,repetitions\n";
    csv << "dnn," << fmt(report.dnn_seconds) << "," << report.n_samples << ","
        << report.repetitions << "\n";
    csv << "wmmse," << fmt(report.wmmse_seconds) << "," << report.n_samples << ","
        << report.repetitions << "\n";

    std::ofstream json(args.report_dir + "/bench.json");
    if (!json) throw std::runtime_error("cannot open bench.json in " + args.report_dir);
    json << "{\n  \"n_samples\": " << report.n_samples
         << ",\n  \"repetitions\": " << report.repetitions
         << ",\n  \"dnn_seconds\": " << fmt(report.dnn_seconds)
         << ",\n  \"wmmse_seconds\": " << fmt(report.wmmse_seconds)
         << ",\n  \"dnn_over_wmmse\": " << fmt(report.dnn_over_wmmse) << "\n}\n";

    std::cout << "dnn " << fmt(report.dnn_seconds) << " s, wmmse " << fmt(report.wmmse_seconds)
              << " s, ratio " << fmt(report.dnn_over_wmmse) << "\n";
    return 0;
}

struct construct_args {
    std::string op;
    int bits = 8;
    double x_max = 2.0;
    double y_max = 2.0;
    double z_max = 1.0;
    int users = 2;
    int iters = 2;
    double h_min = 0.5;
    double h_max = 2.0;
    double p_min = 1.0;
    double p_max = 1.0;
    double sigma2 = 1.0;
    double alpha_min = 1.0;
    double alpha_max = 1.0;
    int sweep = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out = "graph.txt";
    std::string verify_out = "verify.csv";
};

int cmd_construct(const construct_args& args) {
    const std::uint64_t seed = args.seed_given ? args.seed : default_seed();
    rng_stream rng(seed);

    std::ofstream verify(args.verify_out);
    if (!verify) throw std::runtime_error("cannot open " + args.verify_out);
    verify << "input,truth,output,error,certified_bound\n";

    std::size_t violations = 0;
    double max_error = 0.0;
    auto record = [&](const std::string& input, double truth, double output, double bound) {
        const double error = std::fabs(truth - output);
        max_error = std::max(max_error, error);
        if (error > bound) ++violations;
        verify << input << "," << fmt(truth) << "," << fmt(output) << "," << fmt(error) << ","
               << fmt(bound) << "\n";
    };

    if (args.op == "mul") {
        const unit_graph graph = build_mul_net(args.x_max, args.y_max, args.bits);
        save_unit_graph(args.out, graph);
        const double bound = mul_truncation_bound(args.bits, args.y_max);
        const int sweep = args.sweep > 0 ? args.sweep : 10000;
        for (int i = 0; i < sweep; ++i) {
            const double x = rng.uniform(0.0, args.x_max);
            const double y = rng.uniform(0.0, args.y_max);
            const double out = evaluate_graph<double>(graph, {x, y}).front();
            record(fmt(x) + ";" + fmt(y), x * y, out, bound);
        }
    } else if (args.op == "div") {
        const unit_graph graph = build_div_net(args.z_max, args.y_max, args.bits);
        save_unit_graph(args.out, graph);
        const double bound = div_truncation_bound(args.bits);
        const int sweep = args.sweep > 0 ? args.sweep : 10000;
        for (int i = 0; i < sweep; ++i) {
            const double y = args.y_max * rng.uniform(0.01, 1.0);
            const double x = rng.uniform(0.0, 1.0) * args.z_max * y;
            const double out = evaluate_graph<double>(graph, {x, y}).front();
            record(fmt(x) + ";" + fmt(y), x / y, out, bound);
        }
    } else if (args.op == "wmmse") {
        admissible_set adm;
        adm.h_min = args.h_min;
        adm.h_max = args.h_max;
        adm.p_min = args.p_min;
        adm.p_max = args.p_max;
        adm.sigma2 = args.sigma2;
        adm.alpha_min = args.alpha_min;
        adm.alpha_max = args.alpha_max;
        adm.num_users = args.users;
        const unit_graph graph = build_wmmse_net(adm, args.iters, args.bits);
        save_unit_graph(args.out, graph);
        const double bound = certified_output_bound(adm, args.iters, args.bits);
        const int sweep = args.sweep > 0 ? args.sweep : 100;
        const int k = args.users;
        for (int i = 0; i < sweep; ++i) {
            std::vector<double> h(static_cast<std::size_t>(k) * k);
            for (double& g : h) g = rng.uniform(adm.h_min, adm.h_max);

            problem_instance inst;
            inst.kind = channel_kind::ic;
            inst.num_tx = k;
            inst.num_rx = k;
            inst.gains = h;
            inst.noise_power.assign(static_cast<std::size_t>(k), adm.sigma2);
            inst.weights.assign(static_cast<std::size_t>(k), 1.0);
            inst.p_max = adm.p_max;

            const auto iterates = wmmse_iterates(inst, args.iters);
            const std::vector<double> outputs = evaluate_graph<double>(graph, h);
            std::string input;
            for (std::size_t j = 0; j < h.size(); ++j)
                input += (j ? ";" : "") + fmt(h[j]);
            for (int u = 0; u < k; ++u) {
                const double v = iterates.back()[static_cast<std::size_t>(u)];
                record(input, v * v, outputs[static_cast<std::size_t>(u)], bound);
            }
        }
    } else {
        throw std::invalid_argument("unknown --op '" + args.op + "'");
    }

    std::cout << "max error " << fmt(max_error) << ", violations " << violations << " (graph "
              << args.out << ", sweep log " << args.verify_out << ")\n";
    if (violations > 0)
        throw verification_error(std::to_string(violations) +
                                 " sweep points exceeded the certified bound");
    return 0;
}

struct gd_demo_args {
    int train_n = 20000;
    int valid_n = 3000;
    int test_n = 1000;
    int iters = 3000;
    double alpha = 0.01;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = ".";
};

training_set gd_matrices(const std::vector<gd_toy_sample>& samples, bool include_x0) {
    training_set set;
    set.inputs.resize(include_x0 ? 2 : 1, static_cast<Eigen::Index>(samples.size()));
    set.targets.resize(1, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        if (include_x0) {
            set.inputs(0, col) = samples[i].x0;
            set.inputs(1, col) = samples[i].z;
        } else {
            set.inputs(0, col) = samples[i].z;
        }
        set.targets(0, col) = samples[i].xT;
    }
    return set;
}

std::vector<gd_toy_sample> filter_by_z(const std::vector<gd_toy_sample>& pool, double z_lo,
                                       double z_hi, std::size_t want) {
    std::vector<gd_toy_sample> out;
    for (const auto& s : pool) {
        if (s.z >= z_lo && s.z <= z_hi) out.push_back(s);
        if (out.size() == want) break;
    }
    if (out.size() < want)
        throw std::runtime_error("gd-demo: test pool too small for the requested window");
    return out;
}

int cmd_gd_demo(const gd_demo_args& args) {
    const std::uint64_t seed = args.seed_given ? args.seed : default_seed();

    const auto train_samples = gd_toy_dataset(args.train_n, args.iters, args.alpha, seed);
    const auto valid_samples = gd_toy_dataset(args.valid_n, args.iters, args.alpha, seed + 1);
    const auto test_pool = gd_toy_dataset(args.test_n * 8, args.iters, args.alpha, seed + 2);

    train_config cfg;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 200;
    cfg.max_epochs = 400;
    cfg.patience = 5;
    cfg.max_lr_halvings = 6;
    cfg.seed = seed;

    mlp_model full = init_model({2, 80, 80, 1}, seed, 1.0, output_activation::identity);
    train(full, gd_matrices(train_samples, true), gd_matrices(valid_samples, true), cfg);

    mlp_model z_only = init_model({1, 80, 80, 1}, seed + 1, 1.0, output_activation::identity);
    train(z_only, gd_matrices(train_samples, false), gd_matrices(valid_samples, false), cfg);

    const auto test_full = filter_by_z(test_pool, 0.0, 2.0, static_cast<std::size_t>(args.test_n));
    const auto test_z = filter_by_z(test_pool, 0.5, 2.0, static_cast<std::size_t>(args.test_n / 2));

    const training_set full_set = gd_matrices(test_full, true);
    const training_set z_set = gd_matrices(test_z, false);
    const double mse_full = mse_loss(forward(full, full_set.inputs), full_set.targets);
    const Eigen::MatrixXd z_pred = forward(z_only, z_set.inputs);
    const double mse_z = mse_loss(z_pred, z_set.targets);
    const double mean_abs_pred = z_pred.cwiseAbs().mean();

    ensure_dir(args.out_dir);
    std::ofstream json(args.out_dir + "/gd_demo.json");
    if (!json) throw std::runtime_error("cannot open gd_demo.json in " + args.out_dir);
    json << "{\n  \"mse_with_x0\": " << fmt(mse_full) << ",\n  \"mse_z_only\": " << fmt(mse_z)
         << ",\n  \"mean_abs_prediction_z_only\": " << fmt(mean_abs_pred) << "\n}\n";

    std::cout << "mse with (x0,z) input: " << fmt(mse_full) << "\n";
    std::cout << "mse with z-only input: " << fmt(mse_z) << " (mean |prediction| "
              << fmt(mean_abs_pred) << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power-allocation learning toolkit: dataset generation, MLP training, "
                 "evaluation, timing benchmarks, and certified constructive networks."};
    app.require_subcommand(1);

    generate_args gen;
    auto* gen_cmd = app.add_subcommand("generate", "Generate and label a channel dataset");
    gen_cmd->add_option("--model", gen.model, "ic, imac, or stats");
    gen_cmd->add_option("--k,--users", gen.users, "number of users");
    gen_cmd->add_option("--n", gen.samples, "number of samples");
    gen_cmd->add_option("--cells", gen.cells, "number of cells (imac)");
    gen_cmd->add_option("--radius", gen.radius, "cell radius in meters (imac)");
    gen_cmd->add_option("--inner", gen.inner, "minimum user distance in meters (imac)");
    gen_cmd->add_option("--p-max", gen.p_max, "power budget");
    gen_cmd->add_option("--sigma2", gen.sigma2, "noise power");
    gen_cmd->add_option("--label-tol", gen.label_tol, "solver objective tolerance for labels");
    gen_cmd->add_option("--label-iters", gen.label_iters, "solver iteration cap for labels");
    gen_cmd->add_option("--seed", gen.seed, "RNG seed");
    gen_cmd->add_option("--threads", gen.threads, "worker threads (default: logical cores)");
    gen_cmd->add_option("--out", gen.out, "output CSV path")->required();
    gen_cmd->add_option("--reference", gen.reference, "reference CSV for --model stats");

    train_args tr;
    auto* train_cmd = app.add_subcommand("train", "Train an MLP on a labeled dataset");
    train_cmd->add_option("--data", tr.data, "training CSV")->required();
    train_cmd->add_option("--valid", tr.valid, "validation CSV (default: tail split)");
    train_cmd->add_option("--valid-frac", tr.valid_frac, "tail fraction used for validation");
    train_cmd->add_option("--hidden", tr.hidden, "hidden layer sizes, comma separated");
    train_cmd->add_option("--lr", tr.lr, "initial learning rate");
    train_cmd->add_option("--rms-decay", tr.rms_decay, "RMSprop decay");
    train_cmd->add_option("--epsilon", tr.epsilon, "RMSprop epsilon");
    train_cmd->add_option("--batch", tr.batch, "minibatch size");
    train_cmd->add_option("--epochs", tr.epochs, "maximum epochs");
    train_cmd->add_option("--patience", tr.patience, "epochs without improvement before halving");
    train_cmd->add_option("--halvings", tr.halvings, "learning-rate halvings before stopping");
    train_cmd->add_option("--seed", tr.seed, "RNG seed");
    train_cmd->add_flag("--ratio-selection", tr.ratio_selection,
                        "select the snapshot by validation sum-rate ratio instead of MSE");
    train_cmd->add_option("--out", tr.out, "checkpoint path");
    train_cmd->add_option("--history", tr.history, "history CSV path");

    eval_args ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint against solver baselines");
    eval_cmd->add_option("--data", ev.data, "test CSV")->required();
    eval_cmd->add_option("--model-file", ev.model_file, "checkpoint path")->required();
    eval_cmd->add_flag("--binarize", ev.binarize, "threshold the outputs to {0, p_max}");
    eval_cmd->add_flag("--half-user", ev.half_user, "zero-padded half-user evaluation");
    eval_cmd->add_option("--report-dir", ev.report_dir, "directory for report files");
    eval_cmd->add_option("--bins", ev.bins, "histogram bin count");
    eval_cmd->add_option("--threads", ev.threads, "worker threads (default: logical cores)");
    eval_cmd->add_option("--solver-tol", ev.solver_tol, "baseline solver tolerance");
    eval_cmd->add_option("--solver-iters", ev.solver_iters, "baseline solver iteration cap");
    eval_cmd->add_option("--seed", ev.seed, "random-baseline seed");

    bench_args be;
    auto* bench_cmd = app.add_subcommand("bench", "Time batch inference against the solver");
    bench_cmd->add_option("--data", be.data, "test CSV")->required();
    bench_cmd->add_option("--model-file", be.model_file, "checkpoint path")->required();
    bench_cmd->add_option("--reps", be.reps, "timed repetitions (median reported)");
    bench_cmd->add_option("--threads", be.threads, "worker threads (default 1)");
    bench_cmd->add_option("--report-dir", be.report_dir, "directory for bench files");

    construct_args co;
    auto* construct_cmd =
        app.add_subcommand("construct", "Build a certified unit graph and verify it on a sweep");
    construct_cmd->add_option("--op", co.op, "mul, div, or wmmse")->required();
    construct_cmd->add_option("--bits", co.bits, "fractional bits");
    construct_cmd->add_option("--xmax", co.x_max, "multiplier input bound (mul)");
    construct_cmd->add_option("--ymax", co.y_max, "second input bound (mul/div)");
    construct_cmd->add_option("--zmax", co.z_max, "quotient bound (div)");
    construct_cmd->add_option("--k", co.users, "users (wmmse)");
    construct_cmd->add_option("--iters", co.iters, "unrolled iterations (wmmse)");
    construct_cmd->add_option("--hmin", co.h_min, "channel lower bound (wmmse)");
    construct_cmd->add_option("--hmax", co.h_max, "channel upper bound (wmmse)");
    construct_cmd->add_option("--pmin", co.p_min, "power lower bound (wmmse)");
    construct_cmd->add_option("--pmax", co.p_max, "power budget (wmmse)");
    construct_cmd->add_option("--sigma2", co.sigma2, "noise power (wmmse)");
    construct_cmd->add_option("--amin", co.alpha_min, "priority lower bound (wmmse)");
    construct_cmd->add_option("--amax", co.alpha_max, "priority upper bound (wmmse)");
    construct_cmd->add_option("--sweep", co.sweep, "sweep size (default 10000; wmmse 100)");
    construct_cmd->add_option("--seed", co.seed, "sweep RNG seed");
    construct_cmd->add_option("--out", co.out, "graph output path");
    construct_cmd->add_option("--verify-out", co.verify_out, "verification CSV path");

    gd_demo_args gd;
    auto* gd_cmd = app.add_subcommand(
        "gd-demo", "Train MLPs to imitate a gradient-descent trajectory map");
    gd_cmd->add_option("--train-n", gd.train_n, "training samples");
    gd_cmd->add_option("--valid-n", gd.valid_n, "validation samples");
    gd_cmd->add_option("--test-n", gd.test_n, "test samples per window");
    gd_cmd->add_option("--iters", gd.iters, "gradient steps per sample");
    gd_cmd->add_option("--alpha", gd.alpha, "gradient step size");
    gd_cmd->add_option("--seed", gd.seed, "RNG seed");
    gd_cmd->add_option("--out-dir", gd.out_dir, "directory for gd_demo.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    gen.seed_given = gen_cmd->count("--seed") > 0;
    tr.seed_given = train_cmd->count("--seed") > 0;
    ev.seed_given = eval_cmd->count("--seed") > 0;
    co.seed_given = construct_cmd->count("--seed") > 0;
    gd.seed_given = gd_cmd->count("--seed") > 0;

    try {
        if (gen_cmd->parsed()) return cmd_generate(gen);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (eval_cmd->parsed()) return cmd_eval(ev);
        if (bench_cmd->parsed()) return cmd_bench(be);
        if (construct_cmd->parsed()) return cmd_construct(co);
        if (gd_cmd->parsed()) return cmd_gd_demo(gd);
    } catch (const verification_error& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
