#include "wmmse_learn/wmmse.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "wmmse_learn/rng.hpp"

namespace wmmse_learn {

namespace {

// Keeps 1 - u|h|v strictly positive under floating rounding before the
// reciprocal in the w-update.
constexpr double k_w_guard = 1e-12;

void update_u_w(const problem_instance& inst, wmmse_state& s) {
    const int K = inst.users();
    for (int k = 0; k < K; ++k) {
        double den = inst.noise_power[k];
        for (int j = 0; j < K; ++j) {
            double h = inst.effective_gain(k, j);
            den += h * h * s.v[j] * s.v[j];
        }
        double hk = inst.effective_gain(k, k);
        s.u[k] = hk * s.v[k] / den;
        s.w[k] = 1.0 / std::max(1.0 - s.u[k] * hk * s.v[k], k_w_guard);
    }
}

void update_v(const problem_instance& inst, wmmse_state& s) {
    const int K = inst.users();
    const double v_cap = std::sqrt(inst.p_max);
    std::vector<double> v_next(K);
    for (int k = 0; k < K; ++k) {
        double num = inst.weights[k] * s.w[k] * s.u[k] * inst.effective_gain(k, k);
        double den = 0.0;
        for (int j = 0; j < K; ++j) {
            double h = inst.effective_gain(j, k);
            den += inst.weights[j] * s.w[j] * s.u[j] * s.u[j] * h * h;
        }
        // den == 0 only when every u_j is 0; the unclamped update is then
        // +infinity and the projection yields the upper box bound.
        double v = den > 0.0 ? num / den : v_cap;
        v_next[k] = std::min(std::max(v, 0.0), v_cap);
    }
    s.v = std::move(v_next);
}

void check_finite(const wmmse_state& s) {
    for (double x : s.v)
        if (!std::isfinite(x))
            throw std::runtime_error("wmmse: non-finite iterate at iteration " +
                                     std::to_string(s.iteration));
    if (!std::isfinite(s.objective))
        throw std::runtime_error("wmmse: non-finite objective at iteration " +
                                 std::to_string(s.iteration));
}

wmmse_state make_initial_state(const problem_instance& inst, const wmmse_config& cfg) {
    const int K = inst.users();
    wmmse_state s;
    s.v.assign(K, std::sqrt(inst.p_max));
    if (cfg.init == wmmse_config::init_mode::given) s.v = cfg.v0;
    s.u.assign(K, 0.0);
    s.w.assign(K, 1.0);
    update_u_w(inst, s);
    s.objective = weighted_mse_objective(inst, s);
    return s;
}

} // namespace

void wmmse_config::validate(int num_users) const {
    if (!(obj_tol > 0.0)) throw std::invalid_argument("wmmse_config: obj_tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("wmmse_config: max_iter must be >= 1");
    if (init == init_mode::given) {
        if (v0.size() != static_cast<size_t>(num_users))
            throw std::invalid_argument("wmmse_config: v0 size mismatch");
        for (double v : v0)
            if (!(v >= 0.0)) throw std::invalid_argument("wmmse_config: v0 must be nonnegative");
    }
}

double sum_rate(const problem_instance& inst, const power_allocation& p) {
    const int K = inst.users();
    if (p.p.size() != static_cast<size_t>(K))
        throw std::invalid_argument("sum_rate: allocation size mismatch");
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        double interference = inst.noise_power[k];
        for (int j = 0; j < K; ++j) {
            if (j == k) continue;
            double h = inst.effective_gain(k, j);
            interference += h * h * p.p[j];
        }
        double hk = inst.effective_gain(k, k);
        total += inst.weights[k] * std::log2(1.0 + hk * hk * p.p[k] / interference);
    }
    return total;
}

double weighted_mse_objective(const problem_instance& inst, const wmmse_state& state) {
    const int K = inst.users();
    if (state.v.size() != static_cast<size_t>(K) || state.u.size() != static_cast<size_t>(K) ||
        state.w.size() != static_cast<size_t>(K))
        throw std::invalid_argument("weighted_mse_objective: state size mismatch");
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        if (!(state.w[k] > 0.0))
            throw std::domain_error("weighted_mse_objective: w must be positive");
        double hk = inst.effective_gain(k, k);
        double e = (state.u[k] * hk * state.v[k] - 1.0) * (state.u[k] * hk * state.v[k] - 1.0) +
                   inst.noise_power[k] * state.u[k] * state.u[k];
        for (int j = 0; j < K; ++j) {
            if (j == k) continue;
            double cross = state.u[k] * inst.effective_gain(k, j) * state.v[j];
            e += cross * cross;
        }
        total += inst.weights[k] * (state.w[k] * e - std::log(state.w[k]));
    }
    return total;
}

wmmse_result wmmse(const problem_instance& inst, const wmmse_config& cfg) {
    inst.validate();
    cfg.validate(inst.users());

    wmmse_state s = make_initial_state(inst, cfg);
    check_finite(s);

    wmmse_result result;
    result.trace.push_back(s.objective);
    for (int t = 1; t <= cfg.max_iter; ++t) {
        double prev_obj = s.objective;
        s.iteration = t;
        update_v(inst, s);
        update_u_w(inst, s);
        s.objective = weighted_mse_objective(inst, s);
        check_finite(s);
        result.trace.push_back(s.objective);
        result.iterations = t;
        if (std::fabs(s.objective - prev_obj) < cfg.obj_tol) break;
    }

    result.p.p.resize(inst.users());
    // v is clamped to sqrt(p_max), but squaring can overshoot by one ulp
    // (e.g. sqrt(2)^2 > 2); pin the boundary case back onto the box.
    for (int k = 0; k < inst.users(); ++k)
        result.p.p[k] = std::min(s.v[k] * s.v[k], inst.p_max);
    return result;
}

std::vector<std::vector<double>> wmmse_iterates(const problem_instance& inst, int iterations,
                                                const std::vector<double>& v0) {
    inst.validate();
    if (iterations < 0) throw std::invalid_argument("wmmse_iterates: iterations must be >= 0");

    wmmse_config cfg;
    if (!v0.empty()) {
        cfg.init = wmmse_config::init_mode::given;
        cfg.v0 = v0;
        cfg.validate(inst.users());
    }
    wmmse_state s = make_initial_state(inst, cfg);

    std::vector<std::vector<double>> trajectory;
    trajectory.push_back(s.v);
    for (int t = 1; t <= iterations; ++t) {
        s.iteration = t;
        update_v(inst, s);
        update_u_w(inst, s);
        s.objective = weighted_mse_objective(inst, s);
        check_finite(s);
        trajectory.push_back(s.v);
    }
    return trajectory;
}

power_allocation allocate_max_power(const problem_instance& inst) {
    inst.validate();
    return {std::vector<double>(inst.users(), inst.p_max)};
}

power_allocation allocate_random(const problem_instance& inst, std::uint64_t seed) {
    inst.validate();
    rng_stream rng(seed);
    power_allocation out;
    out.p.resize(inst.users());
    for (double& p : out.p) p = rng.uniform(0.0, inst.p_max);
    return out;
}

} // namespace wmmse_learn
