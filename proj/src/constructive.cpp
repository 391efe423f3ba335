#include "wmmse_learn/constructive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace wmmse_learn {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct affine_expr {
    double bias = 0.0;
    std::vector<std::pair<int, double>> terms;
};

affine_expr unit_expr(int id, double coeff = 1.0) { return {0.0, {{id, coeff}}}; }
affine_expr const_expr(double bias) { return {bias, {}}; }

void add_scaled(affine_expr& dst, const affine_expr& src, double scale) {
    dst.bias += scale * src.bias;
    for (const auto& [id, c] : src.terms) dst.terms.emplace_back(id, scale * c);
}

class graph_builder {
public:
    unit_graph graph;

    int add_input() {
        graph_unit u;
        u.kind = unit_kind::input;
        u.layer = 0;
        const int id = static_cast<int>(graph.units.size());
        graph.units.push_back(std::move(u));
        graph.inputs.push_back(id);
        return id;
    }

    int add(unit_kind kind, const affine_expr& pre, int layer) {
        graph_unit u;
        u.kind = kind;
        u.bias = pre.bias;
        u.edges = pre.terms;
        u.layer = layer;
        const int id = static_cast<int>(graph.units.size());
        graph.units.push_back(std::move(u));
        return id;
    }
};

struct expansion_result {
    std::vector<int> bits; // bits[idx] carries weight 2^(msb - idx)
    int msb = 0;
    int end_layer = 0;
};

int expansion_depth(int m, int n) { return 2 * (m + n) + 1; }

/// Gated binary expansion of x/y (pass y == 1 for the expansion of x itself).
/// Exponent i runs from m down to -n; each step tests the running remainder
/// against 2^i * y and, through a big-M ReLU gate, subtracts exactly 2^i * y
/// when the bit fires.
expansion_result emit_expansion(graph_builder& b, const affine_expr& x, const affine_expr& y,
                                int m, int n, double big_m, int base_layer) {
    expansion_result res;
    res.msb = m;
    affine_expr z = x;
    int layer = base_layer + 1;
    for (int i = m; i >= -n; --i) {
        const double w = std::ldexp(1.0, i);
        affine_expr bit_pre = z;
        add_scaled(bit_pre, y, -w);
        const int bit = b.add(unit_kind::binary_step, bit_pre, layer);
        res.bits.push_back(bit);
        if (i > -n) {
            affine_expr gate_pre = const_expr(-big_m);
            add_scaled(gate_pre, y, w);
            gate_pre.terms.emplace_back(bit, big_m);
            const int gate = b.add(unit_kind::relu, gate_pre, layer + 1);
            z.terms.emplace_back(gate, -1.0);
        }
        layer += 2;
    }
    res.end_layer = base_layer + expansion_depth(m, n);
    return res;
}

affine_expr weighted_bit_sum(const expansion_result& e) {
    affine_expr sum;
    for (std::size_t idx = 0; idx < e.bits.size(); ++idx)
        sum.terms.emplace_back(e.bits[idx], std::ldexp(1.0, e.msb - static_cast<int>(idx)));
    return sum;
}

/// Product (sum_i 2^i bit_i) * y, one gated ReLU per bit plus a summing unit.
int emit_product(graph_builder& b, const expansion_result& e, const affine_expr& y,
                 double big_m, int base_layer, unit_kind out_kind) {
    affine_expr sum;
    for (std::size_t idx = 0; idx < e.bits.size(); ++idx) {
        const double w = std::ldexp(1.0, e.msb - static_cast<int>(idx));
        affine_expr pre = const_expr(-big_m);
        add_scaled(pre, y, w);
        pre.terms.emplace_back(e.bits[idx], big_m);
        sum.terms.emplace_back(b.add(unit_kind::relu, pre, base_layer + 1), 1.0);
    }
    return b.add(out_kind, sum, base_layer + 2);
}

struct div_result {
    expansion_result exp;
    int quotient = -1;
    int end_layer = 0;
};

div_result emit_div(graph_builder& b, const affine_expr& x, const affine_expr& y, int m, int n,
                    double big_m, int base_layer, unit_kind out_kind) {
    div_result d;
    d.exp = emit_expansion(b, x, y, m, n, big_m, base_layer);
    d.quotient = b.add(out_kind, weighted_bit_sum(d.exp), d.exp.end_layer + 1);
    d.end_layer = d.exp.end_layer + 1;
    return d;
}

/// Clamp of unit q to [0, cap]: cap - relu(cap - relu(q)), three layers.
int emit_projection(graph_builder& b, int q, double cap, int base_layer) {
    const int r1 = b.add(unit_kind::relu, unit_expr(q), base_layer + 1);
    affine_expr p2 = const_expr(cap);
    p2.terms.emplace_back(r1, -1.0);
    const int r2 = b.add(unit_kind::relu, p2, base_layer + 2);
    affine_expr po = const_expr(cap);
    po.terms.emplace_back(r2, -1.0);
    return b.add(unit_kind::affine, po, base_layer + 3);
}

constexpr int k_projection_depth = 3;

void add_expansion_counts(graph_counts& c, int m, int n) {
    c.binary_step += static_cast<std::size_t>(m + n + 1);
    c.relu += static_cast<std::size_t>(m + n);
}

void add_product_counts(graph_counts& c, int m, int n) {
    c.relu += static_cast<std::size_t>(m + n + 1);
    c.affine += 1;
}

void add_div_counts(graph_counts& c, int m, int n) {
    add_expansion_counts(c, m, n);
    c.affine += 1;
}

void add_projection_counts(graph_counts& c) {
    c.relu += 2;
    c.affine += 1;
}

/// Bit widths, value capacities and big-M constants shared by the builder and
/// the closed-form bookkeeping.
struct net_plan {
    int m_h = 0, m_v = 0, m_p = 0, m_a = 0, m_b = 0;
    double sqrt_p = 0.0;
    double m_mul_exp = 0.0, m_mul_prod = 0.0;
    double m_e1 = 0.0, m_p1 = 0.0, m_e2 = 0.0, m_p2 = 0.0, m_p3 = 0.0;
    double m_d1 = 0.0, m_p4 = 0.0, m_d2 = 0.0, m_p5 = 0.0, m_d3 = 0.0;
};

net_plan make_net_plan(const admissible_set& adm) {
    net_plan plan;
    const double H = adm.h_max;
    const double P = adm.p_max;
    const double s2 = adm.sigma2;
    plan.sqrt_p = std::sqrt(P);
    plan.m_h = integer_bits_for(H);
    plan.m_v = integer_bits_for(plan.sqrt_p);
    plan.m_p = integer_bits_for(P);
    plan.m_a = integer_bits_for(H * H * plan.sqrt_p / s2);
    plan.m_b = integer_bits_for(H * H * P / (s2 * s2));

    const double K = static_cast<double>(adm.num_users);
    const double q_cap = std::ldexp(1.0, plan.m_h + 1) * H;
    const double p3_cap = std::ldexp(1.0, plan.m_p + 1) * q_cap;
    const double a_cap = std::ldexp(1.0, plan.m_a + 1);
    const double p5_cap = std::ldexp(1.0, plan.m_b + 1) * q_cap;

    plan.m_mul_exp = std::ldexp(1.0, plan.m_h + 1);
    plan.m_mul_prod = std::ldexp(1.0, plan.m_h + 1) * H;
    plan.m_e1 = std::ldexp(1.0, plan.m_v + 1);
    plan.m_p1 = std::ldexp(1.0, plan.m_v + 1) * plan.sqrt_p;
    plan.m_e2 = std::ldexp(1.0, plan.m_p + 1);
    plan.m_p2 = std::ldexp(1.0, plan.m_v + 1) * q_cap;
    plan.m_p3 = std::ldexp(1.0, plan.m_p + 1) * q_cap;
    plan.m_d1 = std::ldexp(1.0, plan.m_a + 1) * ((K - 1.0) * p3_cap + s2);
    plan.m_p4 = std::ldexp(1.0, plan.m_v + 1) * a_cap;
    plan.m_d2 = std::ldexp(1.0, plan.m_b + 1) * (K * p3_cap + s2);
    plan.m_p5 = std::ldexp(1.0, plan.m_b + 1) * q_cap;
    plan.m_d3 = std::ldexp(1.0, plan.m_v + 1) * (K * adm.alpha_max * p5_cap);
    return plan;
}

std::vector<double> resolve_weights(const admissible_set& adm, const wmmse_net_options& options) {
    std::vector<double> weights = options.weights;
    if (weights.empty()) weights.assign(static_cast<std::size_t>(adm.num_users), 1.0);
    if (weights.size() != static_cast<std::size_t>(adm.num_users))
        throw std::invalid_argument("build_wmmse_net: weights must have one entry per user");
    for (double w : weights)
        if (!(w >= adm.alpha_min && w <= adm.alpha_max))
            throw std::invalid_argument(
                "build_wmmse_net: weights must lie within [alpha_min, alpha_max]");
    return weights;
}

void check_build_args(const admissible_set& adm, int iterations, int fractional_bits,
                      const wmmse_net_options& options) {
    adm.validate();
    if (iterations < 0)
        throw std::invalid_argument("build_wmmse_net: iterations must be nonnegative");
    if (fractional_bits < 1)
        throw std::invalid_argument("build_wmmse_net: fractional_bits must be >= 1");
    if (options.v0_as_input && iterations == 0)
        throw std::invalid_argument(
            "build_wmmse_net: v0_as_input requires at least one iteration");
}

} // namespace

int integer_bits_for(double max_value) {
    if (!(max_value > 0.0) || !std::isfinite(max_value))
        throw std::invalid_argument("integer_bits_for: max_value must be positive and finite");
    int exponent = 0;
    const double fraction = std::frexp(max_value, &exponent);
    const int bits = fraction == 0.5 ? exponent - 1 : exponent;
    return std::max(bits, 0);
}

graph_counts counts_of(const unit_graph& graph) {
    graph_counts c;
    for (const auto& u : graph.units) {
        switch (u.kind) {
            case unit_kind::binary_step: ++c.binary_step; break;
            case unit_kind::relu: ++c.relu; break;
            case unit_kind::affine:
            case unit_kind::output: ++c.affine; break;
            case unit_kind::input: ++c.inputs; break;
        }
    }
    c.layers = graph.num_layers();
    return c;
}

double div_truncation_bound(int fractional_bits) { return std::ldexp(1.0, -fractional_bits); }

double mul_truncation_bound(int fractional_bits, double y_max) {
    return y_max * std::ldexp(1.0, -fractional_bits);
}

double div_propagated_bound(double quotient_max, double y_min, double eps_x, double eps_y) {
    if (!(y_min > 0.0)) throw std::invalid_argument("div_propagated_bound: y_min must be positive");
    return (quotient_max + 1.0) / y_min * std::max(eps_x, eps_y);
}

double mul_propagated_bound(double x_max, double y_max, double eps_x, double eps_y) {
    return 3.0 * std::max(x_max, y_max) * std::max(eps_x, eps_y);
}

unit_graph build_div_net(double quotient_max, double y_max, int fractional_bits) {
    if (!(y_max > 0.0)) throw std::invalid_argument("build_div_net: y_max must be positive");
    if (fractional_bits < 1)
        throw std::invalid_argument("build_div_net: fractional_bits must be >= 1");
    const int m = integer_bits_for(quotient_max);
    const int n = fractional_bits;
    const double big_m = std::ldexp(1.0, m + 1) * y_max;

    graph_builder b;
    const int x = b.add_input();
    const int y = b.add_input();
    const div_result d =
        emit_div(b, unit_expr(x), unit_expr(y), m, n, big_m, 0, unit_kind::output);
    b.graph.outputs = {d.quotient};
    b.graph.metadata["kind"] = "div";
    b.graph.metadata["integer_bits"] = std::to_string(m);
    b.graph.metadata["fractional_bits"] = std::to_string(n);
    b.graph.metadata["big_m"] = fmt(big_m);
    b.graph.metadata["quotient_max"] = fmt(quotient_max);
    b.graph.metadata["y_max"] = fmt(y_max);
    b.graph.metadata["error_bound"] = fmt(div_truncation_bound(n));
    b.graph.validate();
    return std::move(b.graph);
}

unit_graph build_mul_net(double x_max, double y_max, int fractional_bits) {
    if (!(x_max > 0.0) || !(y_max > 0.0))
        throw std::invalid_argument("build_mul_net: x_max and y_max must be positive");
    if (fractional_bits < 1)
        throw std::invalid_argument("build_mul_net: fractional_bits must be >= 1");
    const int m = integer_bits_for(x_max);
    const int n = fractional_bits;

    graph_builder b;
    const int x = b.add_input();
    const int y = b.add_input();
    const expansion_result e =
        emit_expansion(b, unit_expr(x), const_expr(1.0), m, n, std::ldexp(1.0, m + 1), 0);
    const int out = emit_product(b, e, unit_expr(y), std::ldexp(1.0, m + 1) * y_max, e.end_layer,
                                 unit_kind::output);
    b.graph.outputs = {out};
    b.graph.metadata["kind"] = "mul";
    b.graph.metadata["integer_bits"] = std::to_string(m);
    b.graph.metadata["fractional_bits"] = std::to_string(n);
    b.graph.metadata["big_m"] = fmt(std::ldexp(1.0, m + 1) * y_max);
    b.graph.metadata["x_max"] = fmt(x_max);
    b.graph.metadata["y_max"] = fmt(y_max);
    b.graph.metadata["error_bound"] = fmt(mul_truncation_bound(n, y_max));
    b.graph.validate();
    return std::move(b.graph);
}

graph_counts expected_div_counts(int integer_bits, int fractional_bits) {
    graph_counts c;
    add_div_counts(c, integer_bits, fractional_bits);
    c.inputs = 2;
    c.layers = expansion_depth(integer_bits, fractional_bits) + 1;
    return c;
}

graph_counts expected_mul_counts(int integer_bits, int fractional_bits) {
    graph_counts c;
    add_expansion_counts(c, integer_bits, fractional_bits);
    add_product_counts(c, integer_bits, fractional_bits);
    c.inputs = 2;
    c.layers = expansion_depth(integer_bits, fractional_bits) + 2;
    return c;
}

void admissible_set::validate() const {
    if (!(h_min > 0.0) || !(h_max >= h_min))
        throw std::invalid_argument("admissible_set: need 0 < h_min <= h_max");
    if (!(p_min > 0.0) || !(p_max >= p_min))
        throw std::invalid_argument("admissible_set: need 0 < p_min <= p_max");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("admissible_set: sigma2 must be positive");
    if (!(alpha_min > 0.0) || !(alpha_max >= alpha_min))
        throw std::invalid_argument("admissible_set: need 0 < alpha_min <= alpha_max");
    if (num_users < 1) throw std::invalid_argument("admissible_set: num_users must be >= 1");
}

double wmmse_error_amplifier(const admissible_set& adm) {
    adm.validate();
    const double K = static_cast<double>(adm.num_users);
    const double H = adm.h_max;
    const double Hn = adm.h_min;
    const double P = adm.p_max;
    const double Pn = adm.p_min;
    const double s2 = adm.sigma2;
    const double s4 = s2 * s2;
    const double s8 = s4 * s4;
    const double sqrt_p = std::sqrt(P);
    const double amin = adm.alpha_min;
    const double amax = adm.alpha_max;

    const double hn4 = Hn * Hn * Hn * Hn;
    const double hn8 = hn4 * hn4;
    const double den_partial = (K - 1.0) * H * H * P + s2; // interference-only denominator
    const double den_full = K * H * H * P + s2;            // full-signal denominator

    const double lead = 1.0 / (K * amin * K * amin * s2 * hn8 * Pn * Pn);
    const double numerator_growth =
        K * amin * s2 * hn4 * Pn + amax * H * H * sqrt_p * den_partial * den_full;
    const double weight_sum_growth = K * amax * den_partial * den_full;
    const double square_stage = H * H *
        (12.0 * ((s2 + H * H * sqrt_p) / s4) * ((s4 + H * H * P) / s8) *
             (K - 1.0) * H * H * sqrt_p +
         1.0);
    return lead * numerator_growth * weight_sum_growth * square_stage + 1.0;
}

int plan_fractional_bits(const admissible_set& adm, int iterations, double target_error) {
    if (iterations < 0)
        throw std::invalid_argument("plan_fractional_bits: iterations must be nonnegative");
    if (!(target_error > 0.0))
        throw std::invalid_argument("plan_fractional_bits: target_error must be positive");
    const double g = wmmse_error_amplifier(adm);
    const double bits = iterations * std::log2(g) + std::log2(1.0 / target_error);
    const int n = static_cast<int>(std::ceil(bits));
    return std::max(n, 1);
}

double certified_output_bound(const admissible_set& adm, int iterations, int fractional_bits) {
    if (iterations < 0)
        throw std::invalid_argument("certified_output_bound: iterations must be nonnegative");
    if (fractional_bits < 1)
        throw std::invalid_argument("certified_output_bound: fractional_bits must be >= 1");
    const double g = wmmse_error_amplifier(adm);
    return std::exp2(iterations * std::log2(g) - fractional_bits);
}

unit_graph build_wmmse_net(const admissible_set& adm, int iterations, int fractional_bits,
                           const wmmse_net_options& options) {
    check_build_args(adm, iterations, fractional_bits, options);
    const std::vector<double> weights = resolve_weights(adm, options);
    const net_plan plan = make_net_plan(adm);
    const int K = adm.num_users;
    const int n = fractional_bits;
    const double P = adm.p_max;
    const double s2 = adm.sigma2;
    const double sqrt_p = plan.sqrt_p;

    graph_builder b;
    std::vector<int> h(static_cast<std::size_t>(K) * K);
    for (auto& id : h) id = b.add_input();
    std::vector<int> v_units;
    if (options.v0_as_input) {
        v_units.resize(static_cast<std::size_t>(K));
        for (auto& id : v_units) id = b.add_input();
    }

    auto set_metadata = [&](unit_graph& graph) {
        graph.metadata["kind"] = "wmmse_net";
        graph.metadata["num_users"] = std::to_string(K);
        graph.metadata["iterations"] = std::to_string(iterations);
        graph.metadata["fractional_bits"] = std::to_string(n);
        graph.metadata["integer_bits_h"] = std::to_string(plan.m_h);
        graph.metadata["integer_bits_v"] = std::to_string(plan.m_v);
        graph.metadata["integer_bits_p"] = std::to_string(plan.m_p);
        graph.metadata["integer_bits_a"] = std::to_string(plan.m_a);
        graph.metadata["integer_bits_b"] = std::to_string(plan.m_b);
        graph.metadata["amplifier"] = fmt(wmmse_error_amplifier(adm));
        graph.metadata["error_bound"] =
            fmt(certified_output_bound(adm, iterations, fractional_bits));
        graph.metadata["h_min"] = fmt(adm.h_min);
        graph.metadata["h_max"] = fmt(adm.h_max);
        graph.metadata["p_min"] = fmt(adm.p_min);
        graph.metadata["p_max"] = fmt(adm.p_max);
        graph.metadata["sigma2"] = fmt(adm.sigma2);
        graph.metadata["alpha_min"] = fmt(adm.alpha_min);
        graph.metadata["alpha_max"] = fmt(adm.alpha_max);
        graph.metadata["v0_as_input"] = options.v0_as_input ? "1" : "0";
        std::string joined;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (i) joined += ",";
            joined += fmt(weights[i]);
        }
        graph.metadata["weights"] = joined;
    };

    if (iterations == 0) {
        // Zero unrolled updates from the fixed full-power start: every output
        // is the constant p_max.
        std::vector<int> outs;
        for (int k = 0; k < K; ++k)
            outs.push_back(b.add(unit_kind::output, const_expr(P), 1));
        b.graph.outputs = outs;
        set_metadata(b.graph);
        b.graph.validate();
        return std::move(b.graph);
    }

    // Stage 0: squared channel gains q_kj from the raw amplitudes.
    std::vector<int> q(static_cast<std::size_t>(K) * K);
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < K; ++j) {
            const int in = h[static_cast<std::size_t>(k) * K + j];
            const expansion_result e =
                emit_expansion(b, unit_expr(in), const_expr(1.0), plan.m_h, n, plan.m_mul_exp, 0);
            q[static_cast<std::size_t>(k) * K + j] =
                emit_product(b, e, unit_expr(in), plan.m_mul_prod, e.end_layer, unit_kind::affine);
        }
    }
    const int lq = expansion_depth(plan.m_h, n) + 2;

    int lv = 0;
    bool v_fixed = !options.v0_as_input; // the first update starts from v = sqrt(p_max)

    for (int t = 1; t <= iterations; ++t) {
        if (v_fixed && t == 1) {
            // With the start fixed, numerators and denominators of the first
            // ratio are affine in the squared gains, so the expansion stages
            // of a general update collapse away.
            std::vector<div_result> d1(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) {
                affine_expr num = unit_expr(q[static_cast<std::size_t>(k) * K + k], sqrt_p);
                affine_expr den = const_expr(s2);
                for (int j = 0; j < K; ++j)
                    if (j != k) den.terms.emplace_back(q[static_cast<std::size_t>(k) * K + j], P);
                d1[static_cast<std::size_t>(k)] =
                    emit_div(b, num, den, plan.m_a, n, plan.m_d1, lq, unit_kind::affine);
            }
            const int d1_end = lq + expansion_depth(plan.m_a, n) + 1;

            std::vector<div_result> d2(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) {
                affine_expr num = unit_expr(d1[static_cast<std::size_t>(k)].quotient, sqrt_p);
                affine_expr den = const_expr(s2);
                for (int j = 0; j < K; ++j)
                    den.terms.emplace_back(q[static_cast<std::size_t>(k) * K + j], P);
                d2[static_cast<std::size_t>(k)] =
                    emit_div(b, num, den, plan.m_b, n, plan.m_d2, d1_end, unit_kind::affine);
            }
            const int d2_bits_end = d1_end + expansion_depth(plan.m_b, n);

            std::vector<int> p5(static_cast<std::size_t>(K) * K);
            for (int j = 0; j < K; ++j)
                for (int k = 0; k < K; ++k)
                    p5[static_cast<std::size_t>(j) * K + k] = emit_product(
                        b, d2[static_cast<std::size_t>(j)].exp,
                        unit_expr(q[static_cast<std::size_t>(j) * K + k]), plan.m_p5, d2_bits_end,
                        unit_kind::affine);
            const int p5_end = d2_bits_end + 2;

            const int d3_base = std::max(p5_end, d1_end);
            std::vector<int> new_v(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) {
                affine_expr num = unit_expr(d1[static_cast<std::size_t>(k)].quotient,
                                            weights[static_cast<std::size_t>(k)]);
                affine_expr den;
                for (int j = 0; j < K; ++j)
                    den.terms.emplace_back(p5[static_cast<std::size_t>(j) * K + k],
                                           weights[static_cast<std::size_t>(j)]);
                const div_result d3 =
                    emit_div(b, num, den, plan.m_v, n, plan.m_d3, d3_base, unit_kind::affine);
                new_v[static_cast<std::size_t>(k)] =
                    emit_projection(b, d3.quotient, sqrt_p, d3.end_layer);
            }
            lv = d3_base + expansion_depth(plan.m_v, n) + 1 + k_projection_depth;
            v_units = std::move(new_v);
            v_fixed = false;
            continue;
        }

        // General update from the previous transmit scales held in v_units.
        std::vector<expansion_result> e1(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            e1[static_cast<std::size_t>(k)] =
                emit_expansion(b, unit_expr(v_units[static_cast<std::size_t>(k)]),
                               const_expr(1.0), plan.m_v, n, plan.m_e1, lv);
        const int e1_end = lv + expansion_depth(plan.m_v, n);

        std::vector<int> p1(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            p1[static_cast<std::size_t>(k)] = emit_product(
                b, e1[static_cast<std::size_t>(k)],
                unit_expr(v_units[static_cast<std::size_t>(k)]), plan.m_p1, e1_end,
                unit_kind::affine);
        const int p1_end = e1_end + 2;

        const int p2_base = std::max(e1_end, lq);
        std::vector<int> p2(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            p2[static_cast<std::size_t>(k)] = emit_product(
                b, e1[static_cast<std::size_t>(k)],
                unit_expr(q[static_cast<std::size_t>(k) * K + k]), plan.m_p2, p2_base,
                unit_kind::affine);
        const int p2_end = p2_base + 2;

        std::vector<expansion_result> e2(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            e2[static_cast<std::size_t>(k)] =
                emit_expansion(b, unit_expr(p1[static_cast<std::size_t>(k)]), const_expr(1.0),
                               plan.m_p, n, plan.m_e2, p1_end);
        const int e2_end = p1_end + expansion_depth(plan.m_p, n);

        const int p3_base = std::max(e2_end, lq);
        std::vector<int> p3(static_cast<std::size_t>(K) * K);
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < K; ++j)
                p3[static_cast<std::size_t>(k) * K + j] = emit_product(
                    b, e2[static_cast<std::size_t>(j)],
                    unit_expr(q[static_cast<std::size_t>(k) * K + j]), plan.m_p3, p3_base,
                    unit_kind::affine);
        const int p3_end = p3_base + 2;

        const int d1_base = std::max(p3_end, p2_end);
        std::vector<div_result> d1(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            affine_expr den = const_expr(s2);
            for (int j = 0; j < K; ++j)
                if (j != k) den.terms.emplace_back(p3[static_cast<std::size_t>(k) * K + j], 1.0);
            d1[static_cast<std::size_t>(k)] =
                emit_div(b, unit_expr(p2[static_cast<std::size_t>(k)]), den, plan.m_a, n,
                         plan.m_d1, d1_base, unit_kind::affine);
        }
        const int d1_end = d1_base + expansion_depth(plan.m_a, n) + 1;

        const int p4_base = std::max(e1_end, d1_end);
        std::vector<int> p4(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            p4[static_cast<std::size_t>(k)] = emit_product(
                b, e1[static_cast<std::size_t>(k)],
                unit_expr(d1[static_cast<std::size_t>(k)].quotient), plan.m_p4, p4_base,
                unit_kind::affine);
        const int p4_end = p4_base + 2;

        const int d2_base = std::max(p4_end, p3_end);
        std::vector<div_result> d2(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            affine_expr den = const_expr(s2);
            for (int j = 0; j < K; ++j)
                den.terms.emplace_back(p3[static_cast<std::size_t>(k) * K + j], 1.0);
            d2[static_cast<std::size_t>(k)] =
                emit_div(b, unit_expr(p4[static_cast<std::size_t>(k)]), den, plan.m_b, n,
                         plan.m_d2, d2_base, unit_kind::affine);
        }
        const int d2_bits_end = d2_base + expansion_depth(plan.m_b, n);

        std::vector<int> p5(static_cast<std::size_t>(K) * K);
        for (int j = 0; j < K; ++j)
            for (int k = 0; k < K; ++k)
                p5[static_cast<std::size_t>(j) * K + k] = emit_product(
                    b, d2[static_cast<std::size_t>(j)].exp,
                    unit_expr(q[static_cast<std::size_t>(j) * K + k]), plan.m_p5, d2_bits_end,
                    unit_kind::affine);
        const int p5_end = d2_bits_end + 2;

        const int d3_base = std::max(p5_end, d1_end);
        std::vector<int> new_v(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            affine_expr num = unit_expr(d1[static_cast<std::size_t>(k)].quotient,
                                        weights[static_cast<std::size_t>(k)]);
            affine_expr den;
            for (int j = 0; j < K; ++j)
                den.terms.emplace_back(p5[static_cast<std::size_t>(j) * K + k],
                                       weights[static_cast<std::size_t>(j)]);
            const div_result d3 =
                emit_div(b, num, den, plan.m_v, n, plan.m_d3, d3_base, unit_kind::affine);
            new_v[static_cast<std::size_t>(k)] =
                emit_projection(b, d3.quotient, sqrt_p, d3.end_layer);
        }
        lv = d3_base + expansion_depth(plan.m_v, n) + 1 + k_projection_depth;
        v_units = std::move(new_v);
    }

    // Final stage: square the last transmit scales into powers.
    std::vector<int> outs(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const expansion_result e =
            emit_expansion(b, unit_expr(v_units[static_cast<std::size_t>(k)]), const_expr(1.0),
                           plan.m_v, n, plan.m_e1, lv);
        outs[static_cast<std::size_t>(k)] =
            emit_product(b, e, unit_expr(v_units[static_cast<std::size_t>(k)]), plan.m_p1,
                         e.end_layer, unit_kind::output);
    }
    b.graph.outputs = outs;
    set_metadata(b.graph);
    b.graph.validate();
    return std::move(b.graph);
}

graph_counts expected_wmmse_counts(const admissible_set& adm, int iterations, int fractional_bits,
                                   const wmmse_net_options& options) {
    check_build_args(adm, iterations, fractional_bits, options);
    resolve_weights(adm, options);
    const net_plan plan = make_net_plan(adm);
    const int K = adm.num_users;
    const int n = fractional_bits;
    const std::size_t ku = static_cast<std::size_t>(K);

    graph_counts c;
    c.inputs = ku * ku + (options.v0_as_input ? ku : 0);

    if (iterations == 0) {
        c.affine = ku;
        c.layers = 1;
        return c;
    }

    for (std::size_t i = 0; i < ku * ku; ++i) {
        add_expansion_counts(c, plan.m_h, n);
        add_product_counts(c, plan.m_h, n);
    }
    const int lq = expansion_depth(plan.m_h, n) + 2;

    int lv = 0;
    bool v_fixed = !options.v0_as_input;
    for (int t = 1; t <= iterations; ++t) {
        if (v_fixed && t == 1) {
            for (std::size_t k = 0; k < ku; ++k) add_div_counts(c, plan.m_a, n);
            const int d1_end = lq + expansion_depth(plan.m_a, n) + 1;
            for (std::size_t k = 0; k < ku; ++k) add_div_counts(c, plan.m_b, n);
            const int d2_bits_end = d1_end + expansion_depth(plan.m_b, n);
            for (std::size_t i = 0; i < ku * ku; ++i) add_product_counts(c, plan.m_b, n);
            const int p5_end = d2_bits_end + 2;
            const int d3_base = std::max(p5_end, d1_end);
            for (std::size_t k = 0; k < ku; ++k) {
                add_div_counts(c, plan.m_v, n);
                add_projection_counts(c);
            }
            lv = d3_base + expansion_depth(plan.m_v, n) + 1 + k_projection_depth;
            v_fixed = false;
            continue;
        }

        for (std::size_t k = 0; k < ku; ++k) add_expansion_counts(c, plan.m_v, n);
        const int e1_end = lv + expansion_depth(plan.m_v, n);
        for (std::size_t k = 0; k < ku; ++k) add_product_counts(c, plan.m_v, n);
        const int p1_end = e1_end + 2;
        const int p2_base = std::max(e1_end, lq);
        for (std::size_t k = 0; k < ku; ++k) add_product_counts(c, plan.m_v, n);
        const int p2_end = p2_base + 2;
        for (std::size_t k = 0; k < ku; ++k) add_expansion_counts(c, plan.m_p, n);
        const int e2_end = p1_end + expansion_depth(plan.m_p, n);
        const int p3_base = std::max(e2_end, lq);
        for (std::size_t i = 0; i < ku * ku; ++i) add_product_counts(c, plan.m_p, n);
        const int p3_end = p3_base + 2;
        const int d1_base = std::max(p3_end, p2_end);
        for (std::size_t k = 0; k < ku; ++k) add_div_counts(c, plan.m_a, n);
        const int d1_end = d1_base + expansion_depth(plan.m_a, n) + 1;
        const int p4_base = std::max(e1_end, d1_end);
        for (std::size_t k = 0; k < ku; ++k) add_product_counts(c, plan.m_v, n);
        const int p4_end = p4_base + 2;
        const int d2_base = std::max(p4_end, p3_end);
        for (std::size_t k = 0; k < ku; ++k) add_div_counts(c, plan.m_b, n);
        const int d2_bits_end = d2_base + expansion_depth(plan.m_b, n);
        for (std::size_t i = 0; i < ku * ku; ++i) add_product_counts(c, plan.m_b, n);
        const int p5_end = d2_bits_end + 2;
        const int d3_base = std::max(p5_end, d1_end);
        for (std::size_t k = 0; k < ku; ++k) {
            add_div_counts(c, plan.m_v, n);
            add_projection_counts(c);
        }
        lv = d3_base + expansion_depth(plan.m_v, n) + 1 + k_projection_depth;
    }

    for (std::size_t k = 0; k < ku; ++k) {
        add_expansion_counts(c, plan.m_v, n);
        add_product_counts(c, plan.m_v, n);
    }
    c.layers = lv + expansion_depth(plan.m_v, n) + 2;
    return c;
}

} // namespace wmmse_learn
