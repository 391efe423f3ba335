#include "wmmse_learn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "wmmse_learn/parallel.hpp"
#include "wmmse_learn/rng.hpp"

namespace wmmse_learn {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

Eigen::MatrixXd feature_matrix(const std::vector<problem_instance>& instances) {
    const int d = instances.front().feature_dim();
    Eigen::MatrixXd x(d, static_cast<Eigen::Index>(instances.size()));
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].feature_dim() != d)
            throw std::invalid_argument("feature_matrix: mixed instance shapes");
        for (int j = 0; j < d; ++j) x(j, static_cast<Eigen::Index>(i)) = instances[i].gains[j];
    }
    return x;
}

double mean(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::vector<power_allocation> solve_all(const std::vector<problem_instance>& instances,
                                        const wmmse_config& cfg, int threads) {
    std::vector<power_allocation> out(instances.size());
    std::vector<std::string> failures(instances.size());
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        try {
            out[i] = wmmse(instances[i], cfg).p;
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty())
            throw std::runtime_error("solver failed on sample " + std::to_string(i) + ": " +
                                     failures[i]);
    return out;
}

void finalize_ratios(eval_report& report) {
    const policy_result* solver = report.find("wmmse");
    const double base = solver ? solver->avg_rate : 0.0;
    for (auto& policy : report.policies)
        policy.ratio_pct = base > 0.0 ? policy.avg_rate / base * 100.0 : 0.0;
}

void fill_common_metadata(eval_report& report, const eval_options& opts) {
    report.metadata["binarize"] = opts.binarize ? "1" : "0";
    report.metadata["solver_obj_tol"] = format_double(opts.solver.obj_tol);
    report.metadata["solver_max_iter"] = std::to_string(opts.solver.max_iter);
    report.metadata["random_seed"] = std::to_string(opts.random_seed);
    report.metadata["threads"] = std::to_string(opts.threads);
}

/// Shared core: the "dnn" policy rates/time are supplied by the caller, the
/// three baselines run on `instances` here.
eval_report assemble_report(const std::vector<problem_instance>& instances,
                            std::vector<double> dnn_rates, double dnn_time,
                            const eval_options& opts) {
    eval_report report;
    report.n_samples = instances.size();

    policy_result dnn;
    dnn.name = "dnn";
    dnn.rates = std::move(dnn_rates);
    dnn.total_time_s = dnn_time;
    dnn.avg_rate = mean(dnn.rates);
    report.policies.push_back(std::move(dnn));

    policy_result solver;
    solver.name = "wmmse";
    auto start = clock_type::now();
    std::vector<power_allocation> solved = solve_all(instances, opts.solver, opts.threads);
    solver.total_time_s = seconds_since(start);
    solver.rates.resize(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        solver.rates[i] = sum_rate(instances[i], solved[i]);
    solver.avg_rate = mean(solver.rates);
    report.policies.push_back(std::move(solver));

    policy_result random_policy;
    random_policy.name = "random";
    start = clock_type::now();
    rng_stream rng(opts.random_seed);
    std::vector<power_allocation> randoms(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        randoms[i].p.resize(instances[i].users());
        for (double& p : randoms[i].p) p = rng.uniform(0.0, instances[i].p_max);
    }
    random_policy.total_time_s = seconds_since(start);
    random_policy.rates.resize(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        random_policy.rates[i] = sum_rate(instances[i], randoms[i]);
    random_policy.avg_rate = mean(random_policy.rates);
    report.policies.push_back(std::move(random_policy));

    policy_result max_power;
    max_power.name = "max_power";
    start = clock_type::now();
    std::vector<power_allocation> full(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) full[i] = allocate_max_power(instances[i]);
    max_power.total_time_s = seconds_since(start);
    max_power.rates.resize(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        max_power.rates[i] = sum_rate(instances[i], full[i]);
    max_power.avg_rate = mean(max_power.rates);
    report.policies.push_back(std::move(max_power));

    finalize_ratios(report);
    fill_common_metadata(report, opts);
    return report;
}

} // namespace

const policy_result* eval_report::find(const std::string& name) const {
    for (const auto& policy : policies)
        if (policy.name == name) return &policy;
    return nullptr;
}

double eval_report::dnn_over_wmmse_ratio_pct() const {
    const policy_result* dnn = find("dnn");
    if (!dnn) throw std::logic_error("eval_report: no dnn policy present");
    return dnn->ratio_pct;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> rates) {
    if (rates.empty()) throw std::invalid_argument("empirical_cdf: no rates");
    std::sort(rates.begin(), rates.end());
    const double n = static_cast<double>(rates.size());
    std::vector<std::pair<double, double>> cdf;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        const double prob = static_cast<double>(i + 1) / n;
        if (!cdf.empty() && cdf.back().first == rates[i])
            cdf.back().second = prob;
        else
            cdf.emplace_back(rates[i], prob);
    }
    return cdf;
}

std::vector<histogram_bin> rate_histogram(const std::vector<double>& rates, int num_bins) {
    if (rates.empty()) throw std::invalid_argument("rate_histogram: no rates");
    if (num_bins < 1) throw std::invalid_argument("rate_histogram: num_bins must be >= 1");
    const auto [lo_it, hi_it] = std::minmax_element(rates.begin(), rates.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (lo == hi) return {{lo, hi, rates.size()}};

    std::vector<histogram_bin> bins(static_cast<std::size_t>(num_bins));
    const double width = (hi - lo) / num_bins;
    for (int b = 0; b < num_bins; ++b) {
        bins[static_cast<std::size_t>(b)].low = lo + b * width;
        bins[static_cast<std::size_t>(b)].high = b + 1 == num_bins ? hi : lo + (b + 1) * width;
    }
    for (double r : rates) {
        int b = static_cast<int>((r - lo) / width);
        b = std::clamp(b, 0, num_bins - 1);
        ++bins[static_cast<std::size_t>(b)].count;
    }
    return bins;
}

eval_report evaluate(const dataset& test, const mlp_model& model, const eval_options& opts) {
    test.validate();
    model.validate();
    if (test.instances.empty()) throw std::invalid_argument("evaluate: empty test set");
    const auto& instances = test.instances;
    if (model.input_dim() != instances.front().feature_dim() ||
        model.output_dim() != instances.front().users())
        throw std::invalid_argument("evaluate: model shape does not match the instances");

    const Eigen::MatrixXd features = feature_matrix(instances);
    const auto start = clock_type::now();
    Eigen::MatrixXd predictions = forward(model, features);
    if (opts.binarize) predictions = binarize_powers(predictions, model.p_max);
    const double dnn_time = seconds_since(start);

    std::vector<double> dnn_rates(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        power_allocation p;
        p.p.resize(instances[i].users());
        for (int k = 0; k < instances[i].users(); ++k)
            p.p[k] = predictions(k, static_cast<Eigen::Index>(i));
        dnn_rates[i] = sum_rate(instances[i], p);
    }

    eval_report report = assemble_report(instances, std::move(dnn_rates), dnn_time, opts);
    report.metadata["scenario"] = test.meta.generator;
    report.metadata["dataset_seed"] = std::to_string(test.meta.seed);
    return report;
}

eval_report geometry_shift_eval(const dataset& test, const mlp_model& model,
                                const eval_options& opts) {
    if (test.instances.empty()) throw std::invalid_argument("geometry_shift_eval: empty test set");
    if (test.instances.front().kind != channel_kind::imac)
        throw std::invalid_argument("geometry_shift_eval: expected cellular instances");
    return evaluate(test, model, opts);
}

eval_report half_user_eval(const dataset& small_test, const mlp_model& model,
                           const eval_options& opts) {
    small_test.validate();
    model.validate();
    if (small_test.instances.empty())
        throw std::invalid_argument("half_user_eval: empty test set");
    const auto& instances = small_test.instances;
    const int k_small = instances.front().users();
    const int k_model = model.output_dim();
    if (k_model != 2 * k_small)
        throw std::invalid_argument("half_user_eval: model must be sized for twice the test users");
    if (instances.front().kind != channel_kind::ic)
        throw std::invalid_argument("half_user_eval: zero-padding applies to interference channels");
    if (model.input_dim() != k_model * k_model)
        throw std::invalid_argument("half_user_eval: model input must cover the padded matrix");

    // Present users occupy indices 0..k_small-1 of the padded channel matrix;
    // rows and columns of the absent (highest) indices stay zero.
    Eigen::MatrixXd padded =
        Eigen::MatrixXd::Zero(k_model * k_model, static_cast<Eigen::Index>(instances.size()));
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        if (inst.users() != k_small)
            throw std::invalid_argument("half_user_eval: mixed instance sizes");
        for (int k = 0; k < k_small; ++k)
            for (int j = 0; j < k_small; ++j)
                padded(k * k_model + j, static_cast<Eigen::Index>(i)) =
                    inst.gains[static_cast<std::size_t>(k) * k_small + j];
    }

    const auto start = clock_type::now();
    Eigen::MatrixXd predictions = forward(model, padded);
    if (opts.binarize) predictions = binarize_powers(predictions, model.p_max);
    const double dnn_time = seconds_since(start);

    std::vector<double> dnn_rates(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        power_allocation p;
        p.p.resize(k_small);
        for (int k = 0; k < k_small; ++k) p.p[k] = predictions(k, static_cast<Eigen::Index>(i));
        dnn_rates[i] = sum_rate(instances[i], p);
    }

    eval_report report = assemble_report(instances, std::move(dnn_rates), dnn_time, opts);
    report.metadata["scenario"] = small_test.meta.generator;
    report.metadata["padded_users"] = std::to_string(k_model);
    report.metadata["present_users"] = std::to_string(k_small);
    return report;
}

double rate_ratio(const mlp_model& model, const std::vector<problem_instance>& instances,
                  const std::vector<power_allocation>& reference, bool binarize) {
    if (instances.empty() || instances.size() != reference.size())
        throw std::invalid_argument("rate_ratio: instances and reference sizes must match");
    Eigen::MatrixXd predictions = forward(model, feature_matrix(instances));
    if (binarize) predictions = binarize_powers(predictions, model.p_max);

    double model_sum = 0.0;
    double reference_sum = 0.0;
    power_allocation p;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        p.p.assign(predictions.col(static_cast<Eigen::Index>(i)).data(),
                   predictions.col(static_cast<Eigen::Index>(i)).data() + instances[i].users());
        model_sum += sum_rate(instances[i], p);
        reference_sum += sum_rate(instances[i], reference[i]);
    }
    if (reference_sum <= 0.0) throw std::domain_error("rate_ratio: reference rates sum to zero");
    return model_sum / reference_sum;
}

bench_report bench_timing(const dataset& test, const mlp_model& model, int repetitions,
                          const eval_options& opts) {
    test.validate();
    model.validate();
    if (test.instances.empty()) throw std::invalid_argument("bench_timing: empty test set");
    if (repetitions < 1) throw std::invalid_argument("bench_timing: repetitions must be >= 1");
    const auto& instances = test.instances;
    if (model.input_dim() != instances.front().feature_dim() ||
        model.output_dim() != instances.front().users())
        throw std::invalid_argument("bench_timing: model shape does not match the instances");

    const Eigen::MatrixXd features = feature_matrix(instances);

    auto median_of = [&](auto&& body) {
        body(); // warm-up, untimed
        std::vector<double> times(static_cast<std::size_t>(repetitions));
        for (int r = 0; r < repetitions; ++r) {
            const auto start = clock_type::now();
            body();
            times[static_cast<std::size_t>(r)] = seconds_since(start);
        }
        std::sort(times.begin(), times.end());
        const std::size_t mid = times.size() / 2;
        return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    };

    bench_report report;
    report.n_samples = instances.size();
    report.repetitions = repetitions;
    report.dnn_seconds = median_of([&] {
        Eigen::MatrixXd predictions = forward(model, features);
        if (opts.binarize) predictions = binarize_powers(predictions, model.p_max);
    });
    report.wmmse_seconds = median_of([&] { solve_all(instances, opts.solver, opts.threads); });
    report.dnn_over_wmmse =
        report.wmmse_seconds > 0.0 ? report.dnn_seconds / report.wmmse_seconds : 0.0;
    return report;
}

void write_report_csv(const std::string& path, const eval_report& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
    out << "policy,avg_rate,ratio_pct,total_time_s\n";
    for (const auto& policy : report.policies)
        out << policy.name << "," << format_double(policy.avg_rate) << ","
            << format_double(policy.ratio_pct) << "," << format_double(policy.total_time_s)
            << "\n";
    if (!out) throw std::runtime_error("write_report_csv: write failed for " + path);
}

void write_cdf_csv(const std::string& path, const eval_report& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_cdf_csv: cannot open " + path);
    out << "policy,rate,cum_prob\n";
    for (const auto& policy : report.policies)
        for (const auto& [rate, prob] : empirical_cdf(policy.rates))
            out << policy.name << "," << format_double(rate) << "," << format_double(prob) << "\n";
    if (!out) throw std::runtime_error("write_cdf_csv: write failed for " + path);
}

void write_histogram_csv(const std::string& path, const eval_report& report, int num_bins) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_histogram_csv: cannot open " + path);
    out << "policy,bin_low,bin_high,count\n";
    for (const auto& policy : report.policies)
        for (const auto& bin : rate_histogram(policy.rates, num_bins))
            out << policy.name << "," << format_double(bin.low) << "," << format_double(bin.high)
                << "," << bin.count << "\n";
    if (!out) throw std::runtime_error("write_histogram_csv: write failed for " + path);
}

void write_report_json(const std::string& path, const eval_report& report) {
    nlohmann::json doc;
    doc["n_samples"] = report.n_samples;
    doc["metadata"] = report.metadata;
    doc["policies"] = nlohmann::json::array();
    for (const auto& policy : report.policies) {
        nlohmann::json entry;
        entry["name"] = policy.name;
        entry["avg_rate"] = policy.avg_rate;
        entry["ratio_pct"] = policy.ratio_pct;
        entry["total_time_s"] = policy.total_time_s;
        doc["policies"].push_back(std::move(entry));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report_json: cannot open " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("write_report_json: write failed for " + path);
}

} // namespace wmmse_learn
