#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmmse_learn/channel_gen.hpp"
#include "wmmse_learn/problem.hpp"
#include "wmmse_learn/wmmse.hpp"

using namespace wmmse_learn;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

} // namespace

TEST_CASE("gaussian interference channels have half-normal magnitudes") {
    const int k = 10;
    const auto instances = generate_gaussian_ic(k, 400, 3u);
    REQUIRE(instances.size() == 400);

    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& inst : instances) {
        CHECK(inst.kind == channel_kind::ic);
        CHECK(inst.num_tx == k);
        CHECK(inst.num_rx == k);
        REQUIRE(inst.gains.size() == static_cast<std::size_t>(k * k));
        for (double g : inst.gains) {
            CHECK(g >= 0.0);
            sum += g;
            sum_sq += g * g;
            ++n;
        }
    }
    // |N(0,1)| has mean sqrt(2/pi) ~= 0.7979 and second moment 1.
    CHECK(sum / n == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(0.01));
    CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample streams do not depend on the batch size") {
    const auto small = generate_gaussian_ic(4, 3, 99u);
    const auto large = generate_gaussian_ic(4, 10, 99u);
    for (std::size_t s = 0; s < small.size(); ++s)
        for (std::size_t i = 0; i < small[s].gains.size(); ++i)
            CHECK(small[s].gains[i] == large[s].gains[i]);
}

TEST_CASE("base-station layouts have the documented geometry") {
    const double r = 100.0;

    const auto tri = imac_bs_layout(3, r);
    REQUIRE(tri.size() == 3);
    CHECK(dist(tri[0], tri[1]) == doctest::Approx(2 * r).epsilon(1e-12));
    CHECK(dist(tri[0], tri[2]) == doctest::Approx(2 * r).epsilon(1e-12));
    CHECK(dist(tri[1], tri[2]) == doctest::Approx(2 * r).epsilon(1e-12));

    const auto flower = imac_bs_layout(7, r);
    REQUIRE(flower.size() == 7);
    CHECK(flower[0][0] == 0.0);
    CHECK(flower[0][1] == 0.0);
    for (std::size_t i = 1; i < 7; ++i)
        CHECK(dist(flower[0], flower[i]) == doctest::Approx(2 * r).epsilon(1e-12));

    const auto grid = imac_bs_layout(5, r);
    REQUIRE(grid.size() == 5);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i + 1; j < grid.size(); ++j)
            CHECK(dist(grid[i], grid[j]) >= 2 * r - 1e-9);
}

TEST_CASE("users are placed inside their home cell outside the inner radius") {
    const double r = 100.0;
    const double inner = 30.0;
    const auto geo = make_imac_geometry(3, 24, r, inner, 5u);
    REQUIRE(geo.bs_positions.size() == 3);
    REQUIRE(geo.user_positions.size() == 24);
    CHECK(geo.users_per_cell == 8);

    const double circumradius = 2.0 * r / std::sqrt(3.0);
    for (int u = 0; u < 24; ++u) {
        const int home = u / 8;
        const auto& bs = geo.bs_positions[static_cast<std::size_t>(home)];
        const auto& pos = geo.user_positions[static_cast<std::size_t>(u)];
        const double d = dist(pos, bs);
        CHECK(d >= std::max(inner, 1.0) - 1e-9);
        CHECK(d <= circumradius + 1e-9);
        // Inside the flat-top hexagon around the home BS.
        const double dx = pos[0] - bs[0];
        const double dy = pos[1] - bs[1];
        CHECK(std::fabs(dx) <= r + 1e-9);
        CHECK(std::fabs(0.5 * dx + std::sqrt(3.0) / 2.0 * dy) <= r + 1e-9);
        CHECK(std::fabs(0.5 * dx - std::sqrt(3.0) / 2.0 * dy) <= r + 1e-9);
    }
}

TEST_CASE("the default inner radius still keeps users a meter away") {
    const auto geo = make_imac_geometry(3, 30, 100.0, 0.0, 6u);
    for (int u = 0; u < 30; ++u) {
        const auto& bs = geo.bs_positions[static_cast<std::size_t>(u / 10)];
        CHECK(dist(geo.user_positions[static_cast<std::size_t>(u)], bs) >= 1.0 - 1e-12);
    }
}

TEST_CASE("multi-cell generation produces positive user-by-station gains") {
    const auto instances = generate_imac(3, 12, 100.0, 0.0, 20, 7u);
    REQUIRE(instances.size() == 20);
    for (const auto& inst : instances) {
        CHECK(inst.kind == channel_kind::imac);
        CHECK(inst.num_tx == 12);
        CHECK(inst.num_rx == 3);
        REQUIRE(inst.gains.size() == 36);
        for (double g : inst.gains) CHECK(g > 0.0);
        inst.validate();
    }
    const auto again = generate_imac(3, 12, 100.0, 0.0, 20, 7u);
    for (std::size_t s = 0; s < instances.size(); ++s)
        for (std::size_t i = 0; i < instances[s].gains.size(); ++i)
            CHECK(instances[s].gains[i] == again[s].gains[i]);
}

TEST_CASE("multi-cell generation validates its arguments") {
    CHECK_THROWS_AS(generate_imac(0, 10, 100.0, 0.0, 5, 1u), std::invalid_argument);
    CHECK_THROWS_AS(generate_imac(3, 10, 100.0, 0.0, 5, 1u), std::invalid_argument); // 10 % 3 != 0
    CHECK_THROWS_AS(generate_imac(3, 12, -1.0, 0.0, 5, 1u), std::invalid_argument);
    CHECK_THROWS_AS(generate_imac(3, 12, 100.0, 150.0, 5, 1u), std::invalid_argument);
}

TEST_CASE("moment-matched regeneration tracks the reference statistics") {
    const auto reference = generate_gaussian_ic(6, 300, 13u);
    const auto fresh = generate_from_stats(reference, 400, 14u);
    REQUIRE(fresh.size() == 400);

    auto moments = [](const std::vector<problem_instance>& set, bool diagonal) {
        double sum = 0.0, sum_sq = 0.0;
        std::size_t n = 0;
        for (const auto& inst : set)
            for (int a = 0; a < inst.num_tx; ++a)
                for (int b = 0; b < inst.num_rx; ++b) {
                    if ((a == b) != diagonal) continue;
                    const double g = inst.gains[static_cast<std::size_t>(a) * inst.num_rx + b];
                    sum += g;
                    sum_sq += g * g;
                    ++n;
                }
        const double mean = sum / n;
        return std::pair<double, double>{mean, std::sqrt(sum_sq / n - mean * mean)};
    };

    const auto [ref_diag_mean, ref_diag_std] = moments(reference, true);
    const auto [new_diag_mean, new_diag_std] = moments(fresh, true);
    const auto [ref_off_mean, ref_off_std] = moments(reference, false);
    const auto [new_off_mean, new_off_std] = moments(fresh, false);
    CHECK(new_diag_mean == doctest::Approx(ref_diag_mean).epsilon(0.05));
    CHECK(new_diag_std == doctest::Approx(ref_diag_std).epsilon(0.12));
    CHECK(new_off_mean == doctest::Approx(ref_off_mean).epsilon(0.05));
    CHECK(new_off_std == doctest::Approx(ref_off_std).epsilon(0.12));
    for (const auto& inst : fresh)
        for (double g : inst.gains) CHECK(g >= 0.0);
}

TEST_CASE("labeling solves every instance and records the settings") {
    auto instances = generate_gaussian_ic(3, 12, 21u);
    wmmse_config cfg;
    cfg.obj_tol = 1e-7;
    cfg.max_iter = 800;
    const auto expected = wmmse(instances[5], cfg);

    const dataset data = label_dataset(instances, cfg, /*threads=*/1);
    REQUIRE(data.size() == 12);
    REQUIRE(data.labels.size() == 12);
    CHECK(data.meta.num_users == 3);
    CHECK(data.meta.label_obj_tol == 1e-7);
    CHECK(data.meta.label_max_iter == 800);
    for (std::size_t i = 0; i < expected.p.p.size(); ++i)
        CHECK(data.labels[5].p[i] == expected.p.p[i]);

    const dataset threaded = label_dataset(instances, cfg, /*threads=*/3);
    for (std::size_t s = 0; s < data.size(); ++s)
        for (std::size_t i = 0; i < data.labels[s].p.size(); ++i)
            CHECK(threaded.labels[s].p[i] == data.labels[s].p[i]);

    wmmse_config given;
    given.init = wmmse_config::init_mode::given;
    given.v0 = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(label_dataset(instances, given), std::invalid_argument);
}

TEST_CASE("gradient-descent trajectories stay bounded and deterministic") {
    const auto samples = gd_toy_dataset(500, 3000, 0.01, 2u);
    REQUIRE(samples.size() == 500);
    bool positive_converged = true;
    for (const auto& s : samples) {
        CHECK(s.x0 >= -2.0);
        CHECK(s.x0 <= 2.0);
        CHECK(s.z >= -2.0);
        CHECK(s.z <= 2.0);
        CHECK(std::isfinite(s.xT));
        CHECK(std::fabs(s.xT) <= 2.5);
        // For z > 0 and x0 away from the unstable point 0, the iteration
        // converges to +-sqrt(z); for z < 0 it decays toward 0.
        if (s.z > 0.2 && std::fabs(s.x0) > 0.1)
            positive_converged =
                positive_converged && std::fabs(std::fabs(s.xT) - std::sqrt(s.z)) < 1e-4;
        if (s.z < -0.5) CHECK(std::fabs(s.xT) < 1e-6);
    }
    CHECK(positive_converged);

    const auto again = gd_toy_dataset(500, 3000, 0.01, 2u);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].x0 == again[i].x0);
        CHECK(samples[i].z == again[i].z);
        CHECK(samples[i].xT == again[i].xT);
    }
}

TEST_CASE("dataset CSV round-trips exactly") {
    auto instances = generate_gaussian_ic(4, 9, 77u, /*sigma2=*/0.5, /*p_max=*/2.0);
    dataset data = label_dataset(std::move(instances), {}, 1);
    data.meta.generator = "ic";
    data.meta.seed = 77;
    data.meta.extra["note"] = "round-trip";

    const auto path = temp_file("wmmse_learn_roundtrip.csv");
    write_dataset_csv(path.string(), data);

    const dataset back = read_dataset_csv(path.string());
    REQUIRE(back.size() == data.size());
    CHECK(back.meta.generator == "ic");
    CHECK(back.meta.seed == 77);
    CHECK(back.meta.num_users == 4);
    CHECK(back.meta.p_max == 2.0);
    CHECK(back.meta.sigma2 == 0.5);
    CHECK(back.meta.extra.at("note") == "round-trip");
    for (std::size_t s = 0; s < data.size(); ++s) {
        for (std::size_t i = 0; i < data.instances[s].gains.size(); ++i)
            CHECK(back.instances[s].gains[i] == data.instances[s].gains[i]);
        for (std::size_t i = 0; i < data.labels[s].p.size(); ++i)
            CHECK(back.labels[s].p[i] == data.labels[s].p[i]);
    }

    // Writing the parsed copy reproduces both files byte for byte.
    const auto path2 = temp_file("wmmse_learn_roundtrip2.csv");
    write_dataset_csv(path2.string(), back);
    CHECK(slurp(path.string()) == slurp(path2.string()));
    CHECK(slurp(path.string() + ".meta") == slurp(path2.string() + ".meta"));

    std::filesystem::remove(path);
    std::filesystem::remove(path2);
    std::filesystem::remove(path.string() + ".meta");
    std::filesystem::remove(path2.string() + ".meta");
}

TEST_CASE("reading a missing dataset fails loudly") {
    CHECK_THROWS_AS(read_dataset_csv("/nonexistent/dir/data.csv"), std::runtime_error);
}
