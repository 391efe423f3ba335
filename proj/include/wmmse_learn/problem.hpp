#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wmmse_learn {

enum class channel_kind { ic, imac };

/// One resource-allocation slot: channel magnitudes, noise powers, user
/// weights, and the per-transmitter power budget.
///
/// Gain storage follows the feature layout consumed by the models:
///  - IC:   K x K, row-major, entry (k, j) = |h_kj| from transmitter j to
///          receiver k (receiver-major flattening).
///  - IMAC: K x N, row-major, entry (u, b) = |h| from user u to base
///          station b (user-major flattening). User u's receiver is its home
///          BS, u / (K/N), so the solver sees an equivalent K x K channel.
struct problem_instance {
    channel_kind kind = channel_kind::ic;
    int num_tx = 0; ///< K users/transmitter-receiver pairs
    int num_rx = 0; ///< K for IC, N base stations for IMAC
    std::vector<double> gains;       ///< num_tx * num_rx (IC) or num_tx * num_rx (IMAC), row-major
    std::vector<double> noise_power; ///< sigma_k^2 per user, length K
    std::vector<double> weights;     ///< alpha_k per user, length K
    double p_max = 1.0;

    int users() const { return num_tx; }
    int feature_dim() const { return num_tx * num_rx; }

    int home_bs(int user) const {
        return kind == channel_kind::ic ? user : user / (num_tx / num_rx);
    }

    /// Magnitude of the channel from transmitter j into user k's receiver.
    double effective_gain(int k, int j) const {
        if (kind == channel_kind::ic) return gains[static_cast<size_t>(k) * num_rx + j];
        return gains[static_cast<size_t>(j) * num_rx + home_bs(k)];
    }

    /// Throws std::invalid_argument when any invariant fails.
    void validate() const;
};

/// Per-transmitter power vector, the solver/model output.
struct power_allocation {
    std::vector<double> p;
};

/// Generation + labeling metadata carried alongside a dataset.
struct dataset_meta {
    std::string generator;
    std::uint64_t seed = 0;
    int num_users = 0;
    int num_cells = 0; ///< 0 for IC
    double p_max = 1.0;
    double sigma2 = 1.0;
    double label_obj_tol = 0.0; ///< 0 until labeled
    int label_max_iter = 0;
    std::map<std::string, std::string> extra;
};

/// Instances with their solver-produced label allocations.
struct dataset {
    std::vector<problem_instance> instances;
    std::vector<power_allocation> labels;
    dataset_meta meta;

    size_t size() const { return instances.size(); }
    void validate() const;
};

} // namespace wmmse_learn
