#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wmmse_learn/channel_gen.hpp"
#include "wmmse_learn/problem.hpp"
#include "wmmse_learn/wmmse.hpp"

using namespace wmmse_learn;

namespace {

problem_instance make_ic(int k, std::vector<double> gains, double sigma2 = 1.0,
                         double p_max = 1.0) {
    problem_instance inst;
    inst.kind = channel_kind::ic;
    inst.num_tx = k;
    inst.num_rx = k;
    inst.gains = std::move(gains);
    inst.noise_power.assign(static_cast<std::size_t>(k), sigma2);
    inst.weights.assign(static_cast<std::size_t>(k), 1.0);
    inst.p_max = p_max;
    return inst;
}

} // namespace

TEST_CASE("sum rate matches the hand-computed symmetric two-user value") {
    const auto inst = make_ic(2, {1.0, 1.0, 1.0, 1.0});
    power_allocation p{{1.0, 1.0}};
    // SINR = 1 / (1 + 1) for both users => 2 * log2(1.5).
    CHECK(sum_rate(inst, p) == doctest::Approx(2.0 * std::log2(1.5)).epsilon(1e-14));
    CHECK(sum_rate(inst, p) == doctest::Approx(1.1699250014423124).epsilon(1e-14));
}

TEST_CASE("sum rate respects per-user weights and noise") {
    auto inst = make_ic(2, {1.0, 0.0, 0.0, 2.0}, 0.5);
    inst.weights = {2.0, 3.0};
    power_allocation p{{0.5, 1.0}};
    const double expected = 2.0 * std::log2(1.0 + 0.5 / 0.5) + 3.0 * std::log2(1.0 + 4.0 / 0.5);
    CHECK(sum_rate(inst, p) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("single-user solver takes full power immediately") {
    const auto inst = make_ic(1, {1.0});
    const auto res = wmmse(inst);
    CHECK(res.p.p.size() == 1);
    CHECK(res.p.p[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sum_rate(inst, res.p) == doctest::Approx(1.0).epsilon(1e-12));
    // Initial objective: u = 1/2, w = 2, e = 1/2 => 1 - ln 2.
    REQUIRE(!res.trace.empty());
    CHECK(res.trace.front() == doctest::Approx(0.3068528194400547).epsilon(1e-14));
    CHECK(res.trace.back() == doctest::Approx(0.3068528194400547).epsilon(1e-14));
}

TEST_CASE("weak cross interference keeps both users at full power") {
    const auto inst = make_ic(2, {2.0, 0.1, 0.1, 2.0});
    const auto res = wmmse(inst);
    CHECK(res.p.p[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.p.p[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sum_rate(inst, res.p) == doctest::Approx(4.620910620886828).epsilon(1e-12));
}

TEST_CASE("symmetric strong interference is a full-power stationary point") {
    // From the symmetric full-power start, the symmetric update keeps both
    // users at the power cap even though time sharing would be far better.
    const auto inst = make_ic(2, {1.0, 10.0, 10.0, 1.0});
    const auto res = wmmse(inst);
    CHECK(res.p.p[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.p.p[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.iterations <= 2);
    CHECK(sum_rate(inst, res.p) == doctest::Approx(0.02842771843940173).epsilon(1e-12));
}

TEST_CASE("a one-hot start stays at the single-user optimum") {
    const auto inst = make_ic(2, {1.0, 10.0, 10.0, 1.0});
    wmmse_config cfg;
    cfg.init = wmmse_config::init_mode::given;
    cfg.v0 = {1.0, 0.0};
    const auto res = wmmse(inst, cfg);
    CHECK(res.p.p[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.p.p[1] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(sum_rate(inst, res.p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("objective trace is non-increasing and powers stay in the box") {
    for (int k : {2, 5, 10}) {
        const auto instances = generate_gaussian_ic(k, 50, /*seed=*/17u + k);
        for (const auto& inst : instances) {
            const auto res = wmmse(inst);
            REQUIRE(res.trace.size() >= 1);
            for (std::size_t t = 1; t < res.trace.size(); ++t)
                CHECK(res.trace[t] <= res.trace[t - 1] + 1e-9);
            for (double p : res.p.p) {
                CHECK(p >= -1e-12);
                CHECK(p <= inst.p_max + 1e-12);
            }
        }
    }
}

TEST_CASE("uniformly scaling the weights does not change the update sweeps") {
    // The v update is invariant to a common factor on the priorities; only
    // the stopping rule sees the scaled objective. Compare fixed sweeps.
    const auto instances = generate_gaussian_ic(4, 10, 23u);
    for (auto inst : instances) {
        const auto base = wmmse_iterates(inst, 20);
        for (double& a : inst.weights) a *= 7.5;
        const auto scaled = wmmse_iterates(inst, 20);
        for (std::size_t t = 0; t < base.size(); ++t)
            for (std::size_t i = 0; i < base[t].size(); ++i)
                CHECK(scaled[t][i] == doctest::Approx(base[t][i]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("converged points are stationary under one more sweep") {
    const auto instances = generate_gaussian_ic(4, 20, 31u);
    wmmse_config tight;
    tight.obj_tol = 1e-10;
    tight.max_iter = 2000;
    for (const auto& inst : instances) {
        const auto res = wmmse(inst, tight);
        std::vector<double> v(res.p.p.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(res.p.p[i]);
        const auto iterates = wmmse_iterates(inst, 1, v);
        REQUIRE(iterates.size() == 2);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(std::fabs(iterates[1][i] - iterates[0][i]) < 1e-4);
    }
}

TEST_CASE("iterate trajectories have the requested length and a full-power start") {
    const auto inst = make_ic(3, {1.0, 0.2, 0.1, 0.3, 0.9, 0.2, 0.1, 0.4, 1.1}, 1.0, 4.0);
    const auto iterates = wmmse_iterates(inst, 5);
    REQUIRE(iterates.size() == 6);
    for (double v : iterates[0]) CHECK(v == doctest::Approx(2.0).epsilon(1e-15));
    for (const auto& vt : iterates)
        for (double v : vt) {
            CHECK(v >= 0.0);
            CHECK(v <= 2.0 + 1e-12);
        }
    // Deterministic: a second call reproduces the same trajectory exactly.
    const auto again = wmmse_iterates(inst, 5);
    for (std::size_t t = 0; t < iterates.size(); ++t)
        for (std::size_t i = 0; i < iterates[t].size(); ++i)
            CHECK(iterates[t][i] == again[t][i]);
}

TEST_CASE("solver and trajectory agree on the first sweeps") {
    const auto instances = generate_gaussian_ic(6, 5, 41u);
    for (const auto& inst : instances) {
        wmmse_config one;
        one.obj_tol = 1e-300; // effectively: stop only at exact fixed points
        one.max_iter = 3;
        const auto res = wmmse(inst, one);
        const auto iterates = wmmse_iterates(inst, 3);
        REQUIRE(res.p.p.size() == iterates[3].size());
        for (std::size_t i = 0; i < res.p.p.size(); ++i)
            CHECK(res.p.p[i] == doctest::Approx(iterates[3][i] * iterates[3][i]).epsilon(1e-12));
    }
}

TEST_CASE("multi-cell instances solve through the effective channel") {
    problem_instance imac;
    imac.kind = channel_kind::imac;
    imac.num_tx = 2;
    imac.num_rx = 1;
    imac.gains = {0.8, 0.6}; // one column: both users heard by the single BS
    imac.noise_power = {1.0, 1.0};
    imac.weights = {1.0, 1.0};
    imac.p_max = 1.0;

    // Equivalent interference channel: h_kj = gain of transmitter j at BS 0.
    const auto ic = make_ic(2, {0.8, 0.6, 0.8, 0.6});

    power_allocation p{{1.0, 0.5}};
    CHECK(sum_rate(imac, p) == doctest::Approx(sum_rate(ic, p)).epsilon(1e-14));

    const auto res_imac = wmmse(imac);
    const auto res_ic = wmmse(ic);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(res_imac.p.p[i] == doctest::Approx(res_ic.p.p[i]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("baseline allocators are deterministic and feasible") {
    const auto inst = make_ic(3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, 1.0, 2.5);
    const auto maxp = allocate_max_power(inst);
    REQUIRE(maxp.p.size() == 3);
    for (double p : maxp.p) CHECK(p == 2.5);

    const auto r1 = allocate_random(inst, 7u);
    const auto r2 = allocate_random(inst, 7u);
    const auto r3 = allocate_random(inst, 8u);
    REQUIRE(r1.p.size() == 3);
    bool any_diff = false;
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r1.p[i] == r2.p[i]);
        CHECK(r1.p[i] >= 0.0);
        CHECK(r1.p[i] <= 2.5);
        any_diff = any_diff || r1.p[i] != r3.p[i];
    }
    CHECK(any_diff);
}

TEST_CASE("invalid inputs are rejected") {
    auto inst = make_ic(2, {1.0, 1.0, 1.0, 1.0});
    inst.gains.pop_back();
    CHECK_THROWS_AS(wmmse(inst), std::invalid_argument);

    const auto good = make_ic(2, {1.0, 1.0, 1.0, 1.0});
    wmmse_config cfg;
    cfg.init = wmmse_config::init_mode::given;
    cfg.v0 = {1.0}; // wrong length
    CHECK_THROWS_AS(wmmse(good, cfg), std::invalid_argument);

    wmmse_config bad_tol;
    bad_tol.obj_tol = -1.0;
    CHECK_THROWS_AS(wmmse(good, bad_tol), std::invalid_argument);
}
