#pragma once

#include <cstdint>
#include <vector>

#include "wmmse_learn/problem.hpp"

namespace wmmse_learn {

/// Block-coordinate-descent state: amplitude variables v_k (sqrt-power
/// units) plus the receiver scalars u_k and MSE weights w_k.
struct wmmse_state {
    std::vector<double> v;
    std::vector<double> u;
    std::vector<double> w;
    int iteration = 0;
    double objective = 0.0;
};

struct wmmse_config {
    enum class init_mode { full_power, given };

    double obj_tol = 1e-5; ///< stop when |obj_new - obj_old| < obj_tol
    int max_iter = 500;
    init_mode init = init_mode::full_power;
    std::vector<double> v0; ///< used only with init_mode::given

    void validate(int num_users) const;
};

struct wmmse_result {
    power_allocation p;
    int iterations = 0;
    std::vector<double> trace; ///< objective after init and after each iteration
};

/// Weighted sum rate, base-2 logs (reported in bits):
/// sum_k alpha_k * log2(1 + |h_kk|^2 p_k / (sum_{j!=k} |h_kj|^2 p_j + sigma_k^2)).
double sum_rate(const problem_instance& inst, const power_allocation& p);

/// Weighted-MSE objective sum_k alpha_k (w_k e_k - ln w_k) with
/// e_k = (u_k|h_kk|v_k - 1)^2 + sum_{j!=k} (u_k|h_kj|v_j)^2 + sigma_k^2 u_k^2.
double weighted_mse_objective(const problem_instance& inst, const wmmse_state& state);

/// Power control by alternating closed-form updates of (v, u, w), starting
/// from v_k = sqrt(p_max) (or a supplied v0) and stopping on the objective
/// tolerance or the iteration cap. Returns p_k = v_k^2.
wmmse_result wmmse(const problem_instance& inst, const wmmse_config& cfg = {});

/// Runs exactly `iterations` update sweeps (no tolerance test) and returns
/// the v trajectory [v^0, v^1, ..., v^T]; reference oracle for the unrolled
/// network construction.
std::vector<std::vector<double>> wmmse_iterates(const problem_instance& inst, int iterations,
                                                const std::vector<double>& v0 = {});

power_allocation allocate_max_power(const problem_instance& inst);
power_allocation allocate_random(const problem_instance& inst, std::uint64_t seed);

} // namespace wmmse_learn
