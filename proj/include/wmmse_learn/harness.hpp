#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wmmse_learn/channel_gen.hpp"
#include "wmmse_learn/mlp.hpp"
#include "wmmse_learn/problem.hpp"
#include "wmmse_learn/wmmse.hpp"

namespace wmmse_learn {

struct policy_result {
    std::string name;
    double avg_rate = 0.0;
    double ratio_pct = 0.0; // average rate relative to the solver policy, in percent
    double total_time_s = 0.0;
    std::vector<double> rates; // per-sample sum rates
};

struct eval_report {
    std::vector<policy_result> policies;
    std::size_t n_samples = 0;
    std::map<std::string, std::string> metadata;

    const policy_result* find(const std::string& name) const;
    double dnn_over_wmmse_ratio_pct() const;
};

struct eval_options {
    bool binarize = false;
    wmmse_config solver;        // settings for the re-run solver baseline
    int threads = 1;
    std::uint64_t random_seed = 0;
};

/// Empirical distribution of rates: sorted (rate, cumulative probability)
/// pairs, duplicates merged, final probability 1.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> rates);

struct histogram_bin {
    double low = 0.0;
    double high = 0.0;
    std::size_t count = 0;
};

std::vector<histogram_bin> rate_histogram(const std::vector<double>& rates, int num_bins);

/// Compares the model's allocations against a fresh solver run plus random
/// and max-power baselines on the dataset's instances; labels are ignored.
/// Policies are reported as "dnn", "wmmse", "random", "max_power".
eval_report evaluate(const dataset& test, const mlp_model& model, const eval_options& opts = {});

/// evaluate() for a model applied to test sets whose cell geometry differs
/// from the training geometry; instance shapes must still match the model.
eval_report geometry_shift_eval(const dataset& test, const mlp_model& model,
                                const eval_options& opts = {});

/// Evaluates a model trained for 2K users on K-user instances by zero-padding
/// the channel matrix: present users occupy the low indices, absent users'
/// rows and columns are zero. Baselines run at the true size K.
eval_report half_user_eval(const dataset& small_test, const mlp_model& model,
                           const eval_options& opts = {});

/// Mean model sum-rate divided by the mean sum-rate of reference allocations
/// on the same instances; used for rate-based model selection.
double rate_ratio(const mlp_model& model, const std::vector<problem_instance>& instances,
                  const std::vector<power_allocation>& reference, bool binarize = false);

struct bench_report {
    std::size_t n_samples = 0;
    int repetitions = 0;
    double dnn_seconds = 0.0;    // median wall-clock of one batch forward pass
    double wmmse_seconds = 0.0;  // median wall-clock of solving every instance
    double dnn_over_wmmse = 0.0; // dnn_seconds / wmmse_seconds
};

/// Medians over `repetitions` timed runs after one untimed warm-up run each.
bench_report bench_timing(const dataset& test, const mlp_model& model, int repetitions,
                          const eval_options& opts = {});

void write_report_csv(const std::string& path, const eval_report& report);
void write_cdf_csv(const std::string& path, const eval_report& report);
void write_histogram_csv(const std::string& path, const eval_report& report, int num_bins);
void write_report_json(const std::string& path, const eval_report& report);

} // namespace wmmse_learn
