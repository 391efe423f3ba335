#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmmse_learn/channel_gen.hpp"
#include "wmmse_learn/harness.hpp"
#include "wmmse_learn/mlp.hpp"
#include "wmmse_learn/problem.hpp"
#include "wmmse_learn/wmmse.hpp"

using namespace wmmse_learn;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "wmmse_learn_harness_test";
    std::filesystem::create_directories(dir);
    return dir;
}

/// Model whose outputs are the biases of the last layer, ignoring all input.
mlp_model constant_model(int input_dim, const std::vector<double>& outputs, double p_max) {
    mlp_model m = init_model({input_dim, static_cast<int>(outputs.size())}, 0u, p_max);
    m.weights[0].setZero();
    for (std::size_t i = 0; i < outputs.size(); ++i)
        m.biases[0](static_cast<Eigen::Index>(i)) = outputs[i];
    return m;
}

dataset small_ic_dataset(int users, int samples, std::uint64_t seed) {
    auto instances = generate_gaussian_ic(users, samples, seed);
    dataset data = label_dataset(std::move(instances), {}, 1);
    data.meta.generator = "ic";
    data.meta.seed = seed;
    return data;
}

} // namespace

TEST_CASE("the empirical distribution merges duplicates and ends at one") {
    const auto cdf = empirical_cdf({3.0, 1.0});
    REQUIRE(cdf.size() == 2);
    CHECK(cdf[0].first == 1.0);
    CHECK(cdf[0].second == 0.5);
    CHECK(cdf[1].first == 3.0);
    CHECK(cdf[1].second == 1.0);

    const auto dup = empirical_cdf({2.0, 2.0, 2.0});
    REQUIRE(dup.size() == 1);
    CHECK(dup[0].first == 2.0);
    CHECK(dup[0].second == 1.0);

    const auto mixed = empirical_cdf({1.0, 1.0, 2.0, 4.0});
    REQUIRE(mixed.size() == 3);
    CHECK(mixed[0].second == 0.5);
    CHECK(mixed[1].second == 0.75);
    CHECK(mixed[2].second == 1.0);
}

TEST_CASE("histograms cover the range and count every sample") {
    const std::vector<double> rates{0.0, 0.5, 1.0, 1.5, 2.0, 2.0};
    const auto bins = rate_histogram(rates, 4);
    REQUIRE(bins.size() == 4);
    CHECK(bins.front().low == 0.0);
    CHECK(bins.back().high == 2.0);
    std::size_t total = 0;
    for (const auto& b : bins) {
        CHECK(b.high > b.low);
        total += b.count;
    }
    CHECK(total == rates.size());
    CHECK(bins.back().count == 3); // {1.5, 2.0, 2.0}: the last bin is closed

    const auto degenerate = rate_histogram({1.5, 1.5}, 8);
    REQUIRE(degenerate.size() == 1);
    CHECK(degenerate[0].count == 2);
}

TEST_CASE("evaluation reports solver, random and full-power baselines") {
    const auto data = small_ic_dataset(2, 6, 7u);
    const auto model = constant_model(4, {0.5, 0.5}, 1.0);

    eval_options opts;
    opts.random_seed = 3;
    const auto report = evaluate(data, model, opts);

    CHECK(report.n_samples == 6);
    REQUIRE(report.find("dnn") != nullptr);
    REQUIRE(report.find("wmmse") != nullptr);
    REQUIRE(report.find("random") != nullptr);
    REQUIRE(report.find("max_power") != nullptr);
    CHECK(report.metadata.at("scenario") == "ic");

    // The solver baseline is its own reference.
    CHECK(report.find("wmmse")->ratio_pct == doctest::Approx(100.0).epsilon(1e-12));

    // The constant model's rates can be recomputed directly.
    double expected = 0.0;
    for (const auto& inst : data.instances) expected += sum_rate(inst, {{0.5, 0.5}});
    expected /= static_cast<double>(data.size());
    CHECK(report.find("dnn")->avg_rate == doctest::Approx(expected).epsilon(1e-12));

    // Full power likewise.
    double full = 0.0;
    for (const auto& inst : data.instances) full += sum_rate(inst, {{1.0, 1.0}});
    full /= static_cast<double>(data.size());
    CHECK(report.find("max_power")->avg_rate == doctest::Approx(full).epsilon(1e-12));

    CHECK(report.dnn_over_wmmse_ratio_pct() == report.find("dnn")->ratio_pct);
    for (const auto& policy : report.policies) {
        CHECK(policy.rates.size() == 6);
        CHECK(policy.total_time_s >= 0.0);
    }

    // Same options, same result (the random baseline is seeded).
    const auto again = evaluate(data, model, opts);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(again.find("random")->rates[i] == report.find("random")->rates[i]);

    eval_options reseeded = opts;
    reseeded.random_seed = 4;
    const auto shifted = evaluate(data, model, reseeded);
    bool any_diff = false;
    for (std::size_t i = 0; i < 6; ++i)
        any_diff = any_diff || shifted.find("random")->rates[i] != report.find("random")->rates[i];
    CHECK(any_diff);
}

TEST_CASE("binarized evaluation thresholds the model outputs") {
    const auto data = small_ic_dataset(2, 4, 8u);
    const auto model = constant_model(4, {0.8, 0.2}, 1.0);

    eval_options opts;
    opts.binarize = true;
    const auto report = evaluate(data, model, opts);

    double expected = 0.0;
    for (const auto& inst : data.instances) expected += sum_rate(inst, {{1.0, 0.0}});
    expected /= static_cast<double>(data.size());
    CHECK(report.find("dnn")->avg_rate == doctest::Approx(expected).epsilon(1e-12));
    CHECK(report.metadata.at("binarize") == "1");
}

TEST_CASE("reference-relative rate ratios are exact for the reference itself") {
    const auto data = small_ic_dataset(2, 5, 9u);
    const auto model = constant_model(4, {0.4, 0.9}, 1.0);

    // Reference equal to the model's constant output: ratio exactly 1.
    std::vector<power_allocation> same(data.size(), power_allocation{{0.4, 0.9}});
    CHECK(rate_ratio(model, data.instances, same) == doctest::Approx(1.0).epsilon(1e-12));

    // Against the solver labels the value must match its definition: the
    // ratio of summed rates over the same instances.
    double model_sum = 0.0, label_sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        model_sum += sum_rate(data.instances[i], {{0.4, 0.9}});
        label_sum += sum_rate(data.instances[i], data.labels[i]);
    }
    CHECK(rate_ratio(model, data.instances, data.labels) ==
          doctest::Approx(model_sum / label_sum).epsilon(1e-12));
}

TEST_CASE("half-user evaluation zero-pads the channel features") {
    const auto data = small_ic_dataset(2, 5, 10u);

    // A 4-user model that marks which features it saw: the weights sum each
    // padded column, so absent-user columns must contribute nothing.
    mlp_model model = init_model({16, 4}, 0u, 1.0);
    model.weights[0].setZero();
    // Output u sums the whole padded feature vector.
    for (int u = 0; u < 4; ++u)
        for (int i = 0; i < 16; ++i) model.weights[0](u, i) = 0.01;
    model.biases[0].setZero();

    eval_options opts;
    const auto report = half_user_eval(data, model, opts);

    CHECK(report.metadata.at("padded_users") == "4");
    CHECK(report.metadata.at("present_users") == "2");
    CHECK(report.n_samples == 5);

    // Padded features contain exactly the K*K true gains at the present-user
    // block, so the expected constant allocation is 0.01 * sum(gains),
    // clamped, applied to the first two outputs.
    double expected = 0.0;
    for (const auto& inst : data.instances) {
        double s = 0.0;
        for (double g : inst.gains) s += 0.01 * g;
        const double p = std::min(1.0, std::max(0.0, s));
        expected += sum_rate(inst, {{p, p}});
    }
    expected /= static_cast<double>(data.size());
    CHECK(report.find("dnn")->avg_rate == doctest::Approx(expected).epsilon(1e-10));

    // Baselines run at the true user count.
    CHECK(report.find("wmmse")->ratio_pct == doctest::Approx(100.0).epsilon(1e-12));

    // A model whose size is not double the instance size is rejected.
    const auto bad = constant_model(4, {1.0, 1.0}, 1.0);
    CHECK_THROWS_AS(half_user_eval(data, bad, opts), std::invalid_argument);
}

TEST_CASE("geometry-shift evaluation only accepts multi-cell data") {
    const auto ic = small_ic_dataset(2, 3, 11u);
    const auto model = constant_model(4, {0.5, 0.5}, 1.0);
    CHECK_THROWS_AS(geometry_shift_eval(ic, model), std::invalid_argument);

    auto instances = generate_imac(3, 6, 120.0, 0.0, 3, 12u);
    dataset imac = label_dataset(std::move(instances), {}, 1);
    imac.meta.generator = "imac";
    const auto shifted_model = constant_model(18, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, 1.0);
    const auto report = geometry_shift_eval(imac, shifted_model);
    CHECK(report.n_samples == 3);
    CHECK(report.find("dnn") != nullptr);
}

TEST_CASE("timing benchmarks fill every field") {
    const auto data = small_ic_dataset(2, 8, 13u);
    const auto model = constant_model(4, {0.5, 0.5}, 1.0);
    const auto report = bench_timing(data, model, 3);
    CHECK(report.n_samples == 8);
    CHECK(report.repetitions == 3);
    CHECK(report.dnn_seconds > 0.0);
    CHECK(report.wmmse_seconds > 0.0);
    CHECK(report.dnn_over_wmmse ==
          doctest::Approx(report.dnn_seconds / report.wmmse_seconds).epsilon(1e-12));
}

TEST_CASE("report files carry the documented headers") {
    const auto data = small_ic_dataset(2, 4, 14u);
    const auto model = constant_model(4, {0.5, 0.5}, 1.0);
    const auto report = evaluate(data, model);

    const auto dir = temp_dir();
    write_report_csv((dir / "report.csv").string(), report);
    write_cdf_csv((dir / "cdf.csv").string(), report);
    write_histogram_csv((dir / "hist.csv").string(), report, 5);
    write_report_json((dir / "report.json").string(), report);

    auto first_line = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);
        return line;
    };
    CHECK(first_line(dir / "report.csv") == "policy,avg_rate,ratio_pct,total_time_s");
    CHECK(first_line(dir / "cdf.csv") == "policy,rate,cum_prob");
    CHECK(first_line(dir / "hist.csv") == "policy,bin_low,bin_high,count");

    std::ifstream jin(dir / "report.json");
    nlohmann::json parsed;
    jin >> parsed;
    CHECK(parsed["n_samples"] == 4);
    REQUIRE(parsed["policies"].is_array());
    CHECK(parsed["policies"].size() == report.policies.size());

    std::filesystem::remove_all(dir);
}
