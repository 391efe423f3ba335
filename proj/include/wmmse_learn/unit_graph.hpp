#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wmmse_learn {

/// One node of a feed-forward computation graph. Every unit computes
/// bias + sum(coeff * value[src]) over its incoming edges and then applies
/// its activation: identity for affine/output units, max(0, .) for relu
/// units, and the 0/1 threshold (1 when the pre-activation is >= 0) for
/// binary_step units. Input units carry no edges and take their value from
/// the evaluation argument.
enum class unit_kind { input, affine, relu, binary_step, output };

struct graph_unit {
    unit_kind kind = unit_kind::affine;
    double bias = 0.0;
    std::vector<std::pair<int, double>> edges; // (source unit id, coefficient)
    int layer = 0;                             // inputs sit at layer 0
};

struct unit_graph {
    std::vector<graph_unit> units; // unit id == index; edges point backwards
    std::vector<int> inputs;
    std::vector<int> outputs;
    std::map<std::string, std::string> metadata;

    std::size_t count(unit_kind kind) const;
    int num_layers() const; // largest layer index in the graph
    void validate() const;
};

const char* unit_kind_name(unit_kind kind);
unit_kind unit_kind_from_name(const std::string& name);

void save_unit_graph(const std::string& path, const unit_graph& graph);
unit_graph load_unit_graph(const std::string& path);

/// Evaluates the graph on one input vector. Works for double as well as for
/// exact scalar types (e.g. boost rationals); the only operations used are
/// +, *, comparison against zero and construction from double.
template <class Scalar>
std::vector<Scalar> evaluate_graph(const unit_graph& graph, const std::vector<Scalar>& input) {
    if (input.size() != graph.inputs.size())
        throw std::invalid_argument("evaluate_graph: expected " +
                                    std::to_string(graph.inputs.size()) + " inputs, got " +
                                    std::to_string(input.size()));
    std::vector<Scalar> value(graph.units.size(), Scalar(0));
    for (std::size_t i = 0; i < graph.inputs.size(); ++i)
        value[static_cast<std::size_t>(graph.inputs[i])] = input[i];

    for (std::size_t id = 0; id < graph.units.size(); ++id) {
        const graph_unit& unit = graph.units[id];
        if (unit.kind == unit_kind::input) continue;
        Scalar acc = Scalar(unit.bias);
        for (const auto& [src, coeff] : unit.edges)
            acc += Scalar(coeff) * value[static_cast<std::size_t>(src)];
        switch (unit.kind) {
            case unit_kind::relu:
                value[id] = acc > Scalar(0) ? acc : Scalar(0);
                break;
            case unit_kind::binary_step:
                value[id] = acc >= Scalar(0) ? Scalar(1) : Scalar(0);
                break;
            default: // affine, output
                value[id] = acc;
        }
    }

    std::vector<Scalar> out;
    out.reserve(graph.outputs.size());
    for (int id : graph.outputs) out.push_back(value[static_cast<std::size_t>(id)]);
    return out;
}

} // namespace wmmse_learn
