#include "wmmse_learn/unit_graph.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace wmmse_learn {

namespace {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace

std::size_t unit_graph::count(unit_kind kind) const {
    std::size_t n = 0;
    for (const auto& u : units)
        if (u.kind == kind) ++n;
    return n;
}

int unit_graph::num_layers() const {
    int depth = 0;
    for (const auto& u : units) depth = std::max(depth, u.layer);
    return depth;
}

void unit_graph::validate() const {
    const int n = static_cast<int>(units.size());
    for (int id = 0; id < n; ++id) {
        const graph_unit& u = units[static_cast<std::size_t>(id)];
        if (!std::isfinite(u.bias))
            throw std::invalid_argument("unit_graph: unit " + std::to_string(id) +
                                        " has a non-finite bias");
        if (u.kind == unit_kind::input) {
            if (!u.edges.empty() || u.layer != 0)
                throw std::invalid_argument("unit_graph: input unit " + std::to_string(id) +
                                            " must have no edges and layer 0");
            continue;
        }
        if (u.layer < 1)
            throw std::invalid_argument("unit_graph: non-input unit " + std::to_string(id) +
                                        " must have layer >= 1");
        for (const auto& [src, coeff] : u.edges) {
            if (src < 0 || src >= id)
                throw std::invalid_argument("unit_graph: unit " + std::to_string(id) +
                                            " references invalid source " + std::to_string(src));
            if (units[static_cast<std::size_t>(src)].layer >= u.layer)
                throw std::invalid_argument("unit_graph: unit " + std::to_string(id) +
                                            " does not sit strictly above source " +
                                            std::to_string(src));
            if (!std::isfinite(coeff))
                throw std::invalid_argument("unit_graph: unit " + std::to_string(id) +
                                            " has a non-finite edge coefficient");
        }
    }
    for (int id : inputs)
        if (id < 0 || id >= n || units[static_cast<std::size_t>(id)].kind != unit_kind::input)
            throw std::invalid_argument("unit_graph: inputs list mentions a non-input unit");
    for (int id : outputs)
        if (id < 0 || id >= n)
            throw std::invalid_argument("unit_graph: outputs list mentions an unknown unit");
    std::size_t declared_inputs = inputs.size();
    if (declared_inputs != count(unit_kind::input))
        throw std::invalid_argument("unit_graph: inputs list does not cover all input units");
}

const char* unit_kind_name(unit_kind kind) {
    switch (kind) {
        case unit_kind::input: return "input";
        case unit_kind::affine: return "affine";
        case unit_kind::relu: return "relu";
        case unit_kind::binary_step: return "binstep";
        case unit_kind::output: return "output";
    }
    throw std::invalid_argument("unit_kind_name: unknown kind");
}

unit_kind unit_kind_from_name(const std::string& name) {
    if (name == "input") return unit_kind::input;
    if (name == "affine") return unit_kind::affine;
    if (name == "relu") return unit_kind::relu;
    if (name == "binstep") return unit_kind::binary_step;
    if (name == "output") return unit_kind::output;
    throw std::invalid_argument("unit_kind_from_name: unknown kind '" + name + "'");
}

void save_unit_graph(const std::string& path, const unit_graph& graph) {
    graph.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_unit_graph: cannot open " + path);
    out << "wmmse_unit_graph 1\n";
    for (const auto& [key, value] : graph.metadata) out << "meta " << key << " " << value << "\n";
    out << "inputs";
    for (int id : graph.inputs) out << " " << id;
    out << "\noutputs";
    for (int id : graph.outputs) out << " " << id;
    out << "\nunits " << graph.units.size() << "\n";
    for (std::size_t id = 0; id < graph.units.size(); ++id) {
        const graph_unit& u = graph.units[id];
        out << id << " " << unit_kind_name(u.kind) << " " << format_double(u.bias) << " ";
        if (u.edges.empty()) {
            out << "-";
        } else {
            for (std::size_t e = 0; e < u.edges.size(); ++e) {
                if (e) out << ",";
                out << u.edges[e].first << ":" << format_double(u.edges[e].second);
            }
        }
        out << " " << u.layer << "\n";
    }
    if (!out) throw std::runtime_error("save_unit_graph: write failed for " + path);
}

unit_graph load_unit_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_unit_graph: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "wmmse_unit_graph 1")
        throw std::runtime_error("load_unit_graph: bad header in " + path);

    unit_graph graph;
    std::size_t expected_units = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            graph.metadata[key] = value;
        } else if (tag == "inputs") {
            int id;
            while (ls >> id) graph.inputs.push_back(id);
        } else if (tag == "outputs") {
            int id;
            while (ls >> id) graph.outputs.push_back(id);
        } else if (tag == "units") {
            ls >> expected_units;
            break;
        } else {
            throw std::runtime_error("load_unit_graph: unexpected line '" + line + "'");
        }
    }

    graph.units.reserve(expected_units);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t id;
        std::string kind_name, edge_text;
        graph_unit u;
        if (!(ls >> id >> kind_name >> u.bias >> edge_text >> u.layer))
            throw std::runtime_error("load_unit_graph: malformed unit line '" + line + "'");
        if (id != graph.units.size())
            throw std::runtime_error("load_unit_graph: unit ids must be consecutive from 0");
        u.kind = unit_kind_from_name(kind_name);
        if (edge_text != "-") {
            std::istringstream es(edge_text);
            std::string item;
            while (std::getline(es, item, ',')) {
                auto colon = item.find(':');
                if (colon == std::string::npos)
                    throw std::runtime_error("load_unit_graph: malformed edge '" + item + "'");
                // strtod instead of stod: the latter rejects subnormal values.
                const std::string coeff_text = item.substr(colon + 1);
                char* end = nullptr;
                const double coeff = std::strtod(coeff_text.c_str(), &end);
                if (end != coeff_text.c_str() + coeff_text.size() || coeff_text.empty())
                    throw std::runtime_error("load_unit_graph: bad coefficient '" + item + "'");
                u.edges.emplace_back(std::stoi(item.substr(0, colon)), coeff);
            }
        }
        graph.units.push_back(std::move(u));
    }
    if (graph.units.size() != expected_units)
        throw std::runtime_error("load_unit_graph: unit count mismatch in " + path);
    graph.validate();
    return graph;
}

} // namespace wmmse_learn
