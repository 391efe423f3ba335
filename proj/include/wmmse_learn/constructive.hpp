#pragma once

#include <cstddef>
#include <vector>

#include "wmmse_learn/unit_graph.hpp"

namespace wmmse_learn {

/// Smallest nonnegative m with 2^m >= max_value (exact for powers of two).
int integer_bits_for(double max_value);

struct graph_counts {
    std::size_t binary_step = 0;
    std::size_t relu = 0;
    std::size_t affine = 0; // affine and output units together
    std::size_t inputs = 0;
    int layers = 0;

    bool operator==(const graph_counts&) const = default;
};

graph_counts counts_of(const unit_graph& graph);

/// Worst-case error of the truncating division net on in-range inputs.
double div_truncation_bound(int fractional_bits);
/// Worst-case error of the truncating product net on in-range inputs.
double mul_truncation_bound(int fractional_bits, double y_max);
/// Error of x/y when x and y themselves carry errors eps_x and eps_y.
double div_propagated_bound(double quotient_max, double y_min, double eps_x, double eps_y);
/// Error of x*y when x and y themselves carry errors eps_x and eps_y.
double mul_propagated_bound(double x_max, double y_max, double eps_x, double eps_y);

/// Two-input net computing a truncated x/y with `fractional_bits` bits after
/// the binary point. quotient_max bounds x/y over the intended input range;
/// the net saturates above roughly twice that bound and emits 0 for x < 0.
unit_graph build_div_net(double quotient_max, double y_max, int fractional_bits);

/// Two-input net computing y * (x truncated to `fractional_bits` bits).
unit_graph build_mul_net(double x_max, double y_max, int fractional_bits);

graph_counts expected_div_counts(int integer_bits, int fractional_bits);
graph_counts expected_mul_counts(int integer_bits, int fractional_bits);

/// Input ranges for which an unrolled-iteration net is certified.
struct admissible_set {
    double h_min = 0.0;
    double h_max = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
    double sigma2 = 0.0;
    double alpha_min = 0.0;
    double alpha_max = 0.0;
    int num_users = 0;

    void validate() const;
};

/// Per-iteration factor by which input errors can grow through the update.
double wmmse_error_amplifier(const admissible_set& adm);

/// Fractional bits needed so that `iterations` unrolled updates end within
/// target_error of the exact iterates.
int plan_fractional_bits(const admissible_set& adm, int iterations, double target_error);

/// Output error bound for a net built with the given number of bits.
double certified_output_bound(const admissible_set& adm, int iterations, int fractional_bits);

struct wmmse_net_options {
    bool v0_as_input = false;       // take the initial transmit scale as extra inputs
    std::vector<double> weights;    // per-user priorities; empty means all ones
};

/// Unrolls `iterations` power-control updates into a feed-forward graph over
/// the K*K channel amplitudes (receiver-major), emitting the K final powers.
unit_graph build_wmmse_net(const admissible_set& adm, int iterations, int fractional_bits,
                           const wmmse_net_options& options = {});

/// Closed-form unit/layer bookkeeping for build_wmmse_net.
graph_counts expected_wmmse_counts(const admissible_set& adm, int iterations, int fractional_bits,
                                   const wmmse_net_options& options = {});

} // namespace wmmse_learn
