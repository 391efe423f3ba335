#include "wmmse_learn/channel_gen.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wmmse_learn/parallel.hpp"
#include "wmmse_learn/rng.hpp"

namespace wmmse_learn {

namespace {

constexpr double k_distance_floor = 1.0; // meters; keeps path gain finite at d -> 0

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// std::stod rejects subnormal values (ERANGE underflow), but solver labels
/// can legitimately underflow to denormals; parse with strtod and accept
/// anything finite and fully consumed.
double parse_double(const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(begin, &end);
    if (end == begin || end != begin + text.size())
        throw std::runtime_error("read_dataset_csv: bad numeric field '" + text + "'");
    if (errno == ERANGE && (value == HUGE_VAL || value == -HUGE_VAL))
        throw std::runtime_error("read_dataset_csv: numeric overflow in field '" + text + "'");
    return value;
}

problem_instance blank_ic_instance(int num_users, double sigma2, double p_max) {
    problem_instance inst;
    inst.kind = channel_kind::ic;
    inst.num_tx = num_users;
    inst.num_rx = num_users;
    inst.gains.assign(static_cast<size_t>(num_users) * num_users, 0.0);
    inst.noise_power.assign(num_users, sigma2);
    inst.weights.assign(num_users, 1.0);
    inst.p_max = p_max;
    return inst;
}

/// Pointy-top hexagon with apothem `radius` centered at `center`: the three
/// edge-normal axes point at 0, 60 and 120 degrees (toward the neighboring
/// cell centers of the layouts above).
bool inside_hex(const std::array<double, 2>& p, const std::array<double, 2>& center,
                double radius) {
    const double dx = p[0] - center[0];
    const double dy = p[1] - center[1];
    const double half_sqrt3 = std::sqrt(3.0) / 2.0;
    if (std::fabs(dx) > radius) return false;
    if (std::fabs(0.5 * dx + half_sqrt3 * dy) > radius) return false;
    if (std::fabs(-0.5 * dx + half_sqrt3 * dy) > radius) return false;
    return true;
}

std::array<double, 2> sample_user_position(rng_stream& rng, const std::array<double, 2>& bs,
                                           double cell_radius, double inner_radius) {
    const double circumradius = 2.0 * cell_radius / std::sqrt(3.0);
    const double min_distance = std::max(inner_radius, k_distance_floor);
    for (;;) {
        double r = circumradius * std::sqrt(rng.uniform());
        double theta = 2.0 * M_PI * rng.uniform();
        std::array<double, 2> p{bs[0] + r * std::cos(theta), bs[1] + r * std::sin(theta)};
        if (r < min_distance) continue;
        if (inside_hex(p, bs, cell_radius)) return p;
    }
}

double distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

} // namespace

std::vector<std::array<double, 2>> imac_bs_layout(int num_cells, double cell_radius) {
    if (num_cells < 1) throw std::invalid_argument("imac_bs_layout: num_cells must be >= 1");
    const double R = cell_radius;
    const double row_step = std::sqrt(3.0) * R;
    std::vector<std::array<double, 2>> bs;
    if (num_cells == 3) {
        bs = {{0.0, 0.0}, {2.0 * R, 0.0}, {R, row_step}};
    } else if (num_cells == 7) {
        bs.push_back({0.0, 0.0});
        for (int i = 0; i < 6; ++i) {
            double angle = M_PI / 3.0 * i;
            bs.push_back({2.0 * R * std::cos(angle), 2.0 * R * std::sin(angle)});
        }
    } else {
        // Rows of a hex lattice, filled row-major; odd rows offset by R so
        // every adjacent pair of centers is exactly 2R apart.
        int width = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(num_cells))));
        for (int i = 0; i < num_cells; ++i) {
            int row = i / width;
            int col = i % width;
            bs.push_back({2.0 * R * col + (row % 2 ? R : 0.0), row_step * row});
        }
    }
    return bs;
}

imac_geometry make_imac_geometry(int num_cells, int num_users, double cell_radius,
                                 double inner_radius, std::uint64_t seed) {
    if (num_cells < 1) throw std::invalid_argument("make_imac_geometry: num_cells must be >= 1");
    if (num_users < 1 || num_users % num_cells != 0)
        throw std::invalid_argument("make_imac_geometry: num_users must be a positive multiple of num_cells");
    if (!(cell_radius > 0.0) || inner_radius < 0.0 || inner_radius >= cell_radius)
        throw std::invalid_argument("make_imac_geometry: need 0 <= inner_radius < cell_radius");

    imac_geometry geo;
    geo.num_cells = num_cells;
    geo.users_per_cell = num_users / num_cells;
    geo.cell_radius = cell_radius;
    geo.inner_radius = inner_radius;
    geo.bs_positions = imac_bs_layout(num_cells, cell_radius);

    rng_stream rng(seed);
    geo.user_positions.reserve(num_users);
    for (int u = 0; u < num_users; ++u) {
        const auto& bs = geo.bs_positions[u / geo.users_per_cell];
        geo.user_positions.push_back(sample_user_position(rng, bs, cell_radius, inner_radius));
    }
    return geo;
}

std::vector<problem_instance> generate_gaussian_ic(int num_users, int num_samples,
                                                   std::uint64_t seed, double sigma2,
                                                   double p_max) {
    if (num_users < 1) throw std::invalid_argument("generate_gaussian_ic: num_users must be >= 1");
    if (num_samples < 1) throw std::invalid_argument("generate_gaussian_ic: num_samples must be >= 1");

    std::vector<problem_instance> out(num_samples);
    for (int i = 0; i < num_samples; ++i) {
        rng_stream rng(seed, static_cast<std::uint64_t>(i));
        problem_instance inst = blank_ic_instance(num_users, sigma2, p_max);
        for (double& g : inst.gains) g = std::fabs(rng.normal());
        out[i] = std::move(inst);
    }
    return out;
}

std::vector<problem_instance> generate_imac(int num_cells, int num_users, double cell_radius,
                                            double inner_radius, int num_samples,
                                            std::uint64_t seed, double sigma2, double p_max) {
    if (num_samples < 1) throw std::invalid_argument("generate_imac: num_samples must be >= 1");
    if (num_cells < 1) throw std::invalid_argument("generate_imac: num_cells must be >= 1");
    if (num_users < 1 || num_users % num_cells != 0)
        throw std::invalid_argument("generate_imac: num_users must be a positive multiple of num_cells");
    if (!(cell_radius > 0.0) || inner_radius < 0.0 || inner_radius >= cell_radius)
        throw std::invalid_argument("generate_imac: need 0 <= inner_radius < cell_radius");

    std::vector<problem_instance> out(num_samples);
    for (int i = 0; i < num_samples; ++i) {
        rng_stream rng(seed, static_cast<std::uint64_t>(i));

        imac_geometry geo;
        geo.num_cells = num_cells;
        geo.users_per_cell = num_users / num_cells;
        geo.cell_radius = cell_radius;
        geo.inner_radius = inner_radius;
        geo.bs_positions = imac_bs_layout(num_cells, cell_radius);
        geo.user_positions.reserve(num_users);
        for (int u = 0; u < num_users; ++u) {
            const auto& bs = geo.bs_positions[u / geo.users_per_cell];
            geo.user_positions.push_back(
                sample_user_position(rng, bs, cell_radius, inner_radius));
        }

        problem_instance inst;
        inst.kind = channel_kind::imac;
        inst.num_tx = num_users;
        inst.num_rx = num_cells;
        inst.gains.resize(static_cast<size_t>(num_users) * num_cells);
        inst.noise_power.assign(num_users, sigma2);
        inst.weights.assign(num_users, 1.0);
        inst.p_max = p_max;

        for (int u = 0; u < num_users; ++u) {
            for (int b = 0; b < num_cells; ++b) {
                double d = std::max(distance(geo.user_positions[u], geo.bs_positions[b]),
                                    k_distance_floor);
                double shadow_db = 8.0 * rng.normal(); // 10*log10(L) ~ N(0, 64)
                double shadow = std::pow(10.0, shadow_db / 10.0);
                double mean_square = std::pow(200.0 / d, 3.0) * shadow;
                inst.gains[static_cast<size_t>(u) * num_cells + b] = rng.rayleigh(mean_square);
            }
        }
        out[i] = std::move(inst);
    }
    return out;
}

std::vector<problem_instance> generate_from_stats(const std::vector<problem_instance>& reference,
                                                  int num_samples, std::uint64_t seed,
                                                  double sigma2, double p_max) {
    if (reference.empty()) throw std::invalid_argument("generate_from_stats: empty reference");
    if (num_samples < 1) throw std::invalid_argument("generate_from_stats: num_samples must be >= 1");
    const int K = reference.front().users();
    for (const auto& inst : reference) {
        if (inst.kind != channel_kind::ic || inst.users() != K)
            throw std::invalid_argument("generate_from_stats: reference must be IC instances of one size");
    }

    // Moments of the direct (diagonal) and interfering (off-diagonal) gains.
    double sum_d = 0.0, sumsq_d = 0.0, sum_i = 0.0, sumsq_i = 0.0;
    std::size_t n_d = 0, n_i = 0;
    for (const auto& inst : reference) {
        for (int k = 0; k < K; ++k) {
            for (int j = 0; j < K; ++j) {
                double g = inst.gains[static_cast<size_t>(k) * K + j];
                if (k == j) {
                    sum_d += g;
                    sumsq_d += g * g;
                    ++n_d;
                } else {
                    sum_i += g;
                    sumsq_i += g * g;
                    ++n_i;
                }
            }
        }
    }
    const double mean_d = sum_d / static_cast<double>(n_d);
    const double std_d = std::sqrt(std::max(sumsq_d / static_cast<double>(n_d) - mean_d * mean_d, 0.0));
    const double mean_i = n_i ? sum_i / static_cast<double>(n_i) : 0.0;
    const double std_i =
        n_i ? std::sqrt(std::max(sumsq_i / static_cast<double>(n_i) - mean_i * mean_i, 0.0)) : 0.0;

    std::vector<problem_instance> out(num_samples);
    for (int i = 0; i < num_samples; ++i) {
        rng_stream rng(seed, static_cast<std::uint64_t>(i));
        problem_instance inst = blank_ic_instance(K, sigma2, p_max);
        for (int k = 0; k < K; ++k) {
            for (int j = 0; j < K; ++j) {
                double g = k == j ? mean_d + std_d * rng.normal() : mean_i + std_i * rng.normal();
                inst.gains[static_cast<size_t>(k) * K + j] = std::max(g, 0.0);
            }
        }
        out[i] = std::move(inst);
    }
    return out;
}

dataset label_dataset(std::vector<problem_instance> instances, const wmmse_config& cfg,
                      int threads) {
    if (instances.empty()) throw std::invalid_argument("label_dataset: no instances");
    if (cfg.init != wmmse_config::init_mode::full_power)
        throw std::invalid_argument("label_dataset: labeling uses full-power initialization");

    dataset data;
    data.labels.resize(instances.size());
    std::vector<std::string> failures(instances.size());
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        try {
            data.labels[i] = wmmse(instances[i], cfg).p;
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty())
            throw std::runtime_error("label_dataset: sample " + std::to_string(i) +
                                     " failed: " + failures[i]);

    const auto& first = instances.front();
    data.meta.num_users = first.users();
    data.meta.num_cells = first.kind == channel_kind::imac ? first.num_rx : 0;
    data.meta.p_max = first.p_max;
    data.meta.sigma2 = first.noise_power.front();
    data.meta.label_obj_tol = cfg.obj_tol;
    data.meta.label_max_iter = cfg.max_iter;
    data.instances = std::move(instances);
    return data;
}

std::vector<gd_toy_sample> gd_toy_dataset(int num_samples, int iterations, double alpha,
                                          std::uint64_t seed) {
    if (num_samples < 1) throw std::invalid_argument("gd_toy_dataset: num_samples must be >= 1");
    if (iterations < 1) throw std::invalid_argument("gd_toy_dataset: iterations must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("gd_toy_dataset: alpha must be positive");

    constexpr double k_overflow_guard = 1e6;
    std::vector<gd_toy_sample> out(num_samples);
    for (int i = 0; i < num_samples; ++i) {
        rng_stream rng(seed, static_cast<std::uint64_t>(i));
        for (;;) {
            gd_toy_sample s;
            s.x0 = rng.uniform(-2.0, 2.0);
            s.z = rng.uniform(-2.0, 2.0);
            double x = s.x0;
            bool diverged = false;
            for (int t = 0; t < iterations; ++t) {
                x = x - 2.0 * alpha * x * (x * x - s.z);
                if (std::fabs(x) > k_overflow_guard) {
                    diverged = true;
                    break;
                }
            }
            if (diverged) continue; // flagged sample: redraw from the same substream
            s.xT = x;
            out[i] = s;
            break;
        }
    }
    return out;
}

void write_dataset_csv(const std::string& path, const dataset& data) {
    data.validate();
    if (data.instances.empty()) throw std::invalid_argument("write_dataset_csv: empty dataset");

    const auto& first = data.instances.front();
    const int D = first.feature_dim();
    const int K = first.users();

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    out << "k";
    for (int d = 0; d < D; ++d) out << ",h_" << d;
    for (int k = 0; k < K; ++k) out << ",p_" << k;
    out << "\n";
    for (size_t i = 0; i < data.size(); ++i) {
        const auto& inst = data.instances[i];
        if (inst.feature_dim() != D || inst.users() != K)
            throw std::invalid_argument("write_dataset_csv: mixed instance shapes");
        out << K;
        for (double g : inst.gains) out << "," << format_double(g);
        for (double p : data.labels[i].p) out << "," << format_double(p);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_dataset_csv: write failed for " + path);

    std::ofstream meta(path + ".meta");
    if (!meta) throw std::runtime_error("write_dataset_csv: cannot open " + path + ".meta");
    meta << "generator=" << data.meta.generator << "\n";
    meta << "seed=" << data.meta.seed << "\n";
    meta << "k=" << data.meta.num_users << "\n";
    meta << "n_cells=" << data.meta.num_cells << "\n";
    meta << "p_max=" << format_double(data.meta.p_max) << "\n";
    meta << "sigma2=" << format_double(data.meta.sigma2) << "\n";
    meta << "label_obj_tol=" << format_double(data.meta.label_obj_tol) << "\n";
    meta << "label_max_iter=" << data.meta.label_max_iter << "\n";
    for (const auto& [key, value] : data.meta.extra) meta << key << "=" << value << "\n";
    if (!meta) throw std::runtime_error("write_dataset_csv: write failed for " + path + ".meta");
}

dataset read_dataset_csv(const std::string& path) {
    std::ifstream meta_in(path + ".meta");
    if (!meta_in) throw std::runtime_error("read_dataset_csv: missing sidecar " + path + ".meta");
    dataset data;
    std::string line;
    while (std::getline(meta_in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key == "generator") data.meta.generator = value;
        else if (key == "seed") data.meta.seed = std::stoull(value);
        else if (key == "k") data.meta.num_users = std::stoi(value);
        else if (key == "n_cells") data.meta.num_cells = std::stoi(value);
        else if (key == "p_max") data.meta.p_max = parse_double(value);
        else if (key == "sigma2") data.meta.sigma2 = parse_double(value);
        else if (key == "label_obj_tol") data.meta.label_obj_tol = parse_double(value);
        else if (key == "label_max_iter") data.meta.label_max_iter = std::stoi(value);
        else data.meta.extra[key] = value;
    }

    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
    if (!std::getline(in, line)) throw std::runtime_error("read_dataset_csv: empty file " + path);

    const int K = data.meta.num_users;
    const int N = data.meta.num_cells;
    if (K < 1) throw std::runtime_error("read_dataset_csv: sidecar lacks a valid user count");
    const int D = N > 0 ? K * N : K * K;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> values;
        values.reserve(1 + D + K);
        while (std::getline(row, cell, ',')) values.push_back(parse_double(cell));
        if (values.size() != static_cast<size_t>(1 + D + K))
            throw std::runtime_error("read_dataset_csv: row with " + std::to_string(values.size()) +
                                     " fields, expected " + std::to_string(1 + D + K));

        problem_instance inst;
        inst.kind = N > 0 ? channel_kind::imac : channel_kind::ic;
        inst.num_tx = K;
        inst.num_rx = N > 0 ? N : K;
        inst.gains.assign(values.begin() + 1, values.begin() + 1 + D);
        inst.noise_power.assign(K, data.meta.sigma2);
        inst.weights.assign(K, 1.0);
        inst.p_max = data.meta.p_max;
        inst.validate();
        data.instances.push_back(std::move(inst));
        data.labels.push_back({std::vector<double>(values.begin() + 1 + D, values.end())});
    }
    data.validate();
    return data;
}

} // namespace wmmse_learn
