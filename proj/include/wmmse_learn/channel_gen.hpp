#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wmmse_learn/problem.hpp"
#include "wmmse_learn/wmmse.hpp"

namespace wmmse_learn {

/// Hexagonal multi-cell layout. cell_radius is the apothem (half the
/// distance between adjacent cell centers); users are placed uniformly in
/// the hex cell outside the inner radius.
struct imac_geometry {
    int num_cells = 0;
    int users_per_cell = 0;
    double cell_radius = 0.0;
    double inner_radius = 0.0;
    std::vector<std::array<double, 2>> bs_positions;
    std::vector<std::array<double, 2>> user_positions; ///< cell-major order
};

/// Deterministic BS layout for N cells: 3 = triangle of adjacent cells,
/// 7 = center plus ring, otherwise rows of a hex lattice filled row-major.
std::vector<std::array<double, 2>> imac_bs_layout(int num_cells, double cell_radius);

/// One sampled geometry: fixed BS layout plus per-user positions drawn
/// uniformly from the home cell's hex annulus (rejection sampling).
imac_geometry make_imac_geometry(int num_cells, int num_users, double cell_radius,
                                 double inner_radius, std::uint64_t seed);

/// Gaussian IC: every |h_kj| is the magnitude of a standard normal draw.
std::vector<problem_instance> generate_gaussian_ic(int num_users, int num_samples,
                                                   std::uint64_t seed, double sigma2 = 1.0,
                                                   double p_max = 1.0);

/// Multi-cell uplink with path loss (200/d)^3, lognormal shadowing
/// (10*log10 L ~ N(0, 64)) and Rayleigh fading; one gain column per BS.
std::vector<problem_instance> generate_imac(int num_cells, int num_users, double cell_radius,
                                            double inner_radius, int num_samples,
                                            std::uint64_t seed, double sigma2 = 1.0,
                                            double p_max = 1.0);

/// Fits Normal(m, s^2) separately to the reference set's direct and cross
/// gains, then draws fresh instances from those fits (negatives clamped to
/// zero). Matches the measured-channel regeneration procedure.
std::vector<problem_instance> generate_from_stats(const std::vector<problem_instance>& reference,
                                                  int num_samples, std::uint64_t seed,
                                                  double sigma2 = 1e-3, double p_max = 1.0);

/// Labels every instance with the solver output under full-power
/// initialization; records the termination settings in the metadata.
dataset label_dataset(std::vector<problem_instance> instances, const wmmse_config& cfg = {},
                      int threads = 1);

/// One gradient-descent trajectory sample for the toy task
/// x^{t+1} = x^t - 2*alpha*x^t*((x^t)^2 - z).
struct gd_toy_sample {
    double x0 = 0.0;
    double z = 0.0;
    double xT = 0.0;
};

std::vector<gd_toy_sample> gd_toy_dataset(int num_samples, int iterations = 3000,
                                          double alpha = 0.01, std::uint64_t seed = 0);

/// Dataset CSV: header `k,h_0,...,h_{D-1},p_0,...,p_{K-1}`, one sample per
/// row, 17-significant-digit floats; a `<path>.meta` sidecar holds key=value
/// generation metadata.
void write_dataset_csv(const std::string& path, const dataset& data);
dataset read_dataset_csv(const std::string& path);

} // namespace wmmse_learn
