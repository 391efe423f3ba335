#include "wmmse_learn/problem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wmmse_learn {

void problem_instance::validate() const {
    if (num_tx < 1) throw std::invalid_argument("problem_instance: num_tx must be >= 1");
    if (num_rx < 1) throw std::invalid_argument("problem_instance: num_rx must be >= 1");
    if (kind == channel_kind::ic && num_rx != num_tx)
        throw std::invalid_argument("problem_instance: IC requires num_rx == num_tx");
    if (kind == channel_kind::imac && num_tx % num_rx != 0)
        throw std::invalid_argument("problem_instance: IMAC requires num_tx divisible by num_rx");
    if (gains.size() != static_cast<size_t>(num_tx) * num_rx)
        throw std::invalid_argument("problem_instance: gains size mismatch");
    if (noise_power.size() != static_cast<size_t>(num_tx))
        throw std::invalid_argument("problem_instance: noise_power size mismatch");
    if (weights.size() != static_cast<size_t>(num_tx))
        throw std::invalid_argument("problem_instance: weights size mismatch");
    for (double g : gains)
        if (!(g >= 0.0) || !std::isfinite(g))
            throw std::invalid_argument("problem_instance: gains must be nonnegative and finite");
    for (double s : noise_power)
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("problem_instance: noise powers must be positive");
    for (double a : weights)
        if (!(a > 0.0) || !std::isfinite(a))
            throw std::invalid_argument("problem_instance: weights must be positive");
    if (!(p_max > 0.0) || !std::isfinite(p_max))
        throw std::invalid_argument("problem_instance: p_max must be positive");
}

void dataset::validate() const {
    if (instances.size() != labels.size())
        throw std::invalid_argument("dataset: instances/labels length mismatch");
    for (size_t i = 0; i < instances.size(); ++i) {
        instances[i].validate();
        const auto& inst = instances[i];
        const auto& lab = labels[i].p;
        if (lab.size() != static_cast<size_t>(inst.users()))
            throw std::invalid_argument("dataset: label size mismatch at sample " + std::to_string(i));
        for (double p : lab)
            if (!(p >= 0.0) || !(p <= inst.p_max))
                throw std::invalid_argument("dataset: label outside [0, p_max] at sample " +
                                            std::to_string(i));
    }
}

} // namespace wmmse_learn
