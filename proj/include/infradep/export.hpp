#pragma once

// DOT rendering of state graphs and JSON rendering of measure results.

#include <cmath>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "infradep/model.hpp"
#include "infradep/number_format.hpp"
#include "infradep/solvers.hpp"
#include "infradep/statespace.hpp"

namespace infradep {

struct DotOptions {
  bool hide_vanishing = false;  // render the reduced chain instead of the full graph
};

namespace detail {

inline std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

inline std::string dot_node_label(const CompiledModel& model, const StateVector& s) {
  std::string text = model.describe(s, "\\n");
  std::string names;
  for (std::size_t l = 0; l < model.num_labels(); ++l) {
    if (!model.label_holds(l, s)) continue;
    if (!names.empty()) names += ", ";
    names += model.model().labels[l].name;
  }
  if (!names.empty()) text += "\\n[" + names + "]";
  return text;
}

}  // namespace detail

/// Nodes are named s<index> after the state's position in the reachability
/// graph, so ids agree between the full and the reduced rendering.
inline std::string export_dot(const Ctmc& c, const CompiledModel& model) {
  std::ostringstream os;
  os << "digraph \"" << detail::dot_escape(model.model().name) << "\" {\n";
  os << "  node [shape=box];\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    os << "  s" << c.graph_index[i] << " [label=\"" << detail::dot_node_label(model, c.states[i]) << "\"];\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    for (const auto& [j, q] : c.rows[i])
      os << "  s" << c.graph_index[i] << " -> s" << c.graph_index[j] << " [label=\"rate=" << format_number(q) << "\"];\n";
  os << "}\n";
  return os.str();
}

inline std::string export_dot(const ReachabilityGraph& g, const CompiledModel& model, const DotOptions& options = {}) {
  if (options.hide_vanishing) return export_dot(eliminate_vanishing(g), model);
  std::ostringstream os;
  os << "digraph \"" << detail::dot_escape(model.model().name) << "\" {\n";
  os << "  node [shape=box];\n";
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    os << "  s" << s << " [label=\"" << detail::dot_node_label(model, g.states[s]) << '"';
    if (g.vanishing[s]) os << ", style=dashed";
    os << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  s" << e.src << " -> s" << e.dst << " [label=\"" << detail::dot_escape(model.transition_name(e.transition))
       << "\\n" << (e.timed ? "rate=" : "p=") << format_number(e.value) << '"';
    if (!e.timed) os << ", style=dashed";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

namespace detail {

inline nlohmann::ordered_json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline nlohmann::ordered_json json_meta(const MetaValue& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>)
          return json_number(x);
        else
          return x;
      },
      v);
}

}  // namespace detail

inline nlohmann::ordered_json result_to_json(const MeasureResult& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["value"] = detail::json_number(r.value);
  j["method"] = std::string(to_string(r.method));
  j["ci_halfwidth"] = r.ci_halfwidth ? detail::json_number(*r.ci_halfwidth) : nlohmann::ordered_json(nullptr);
  auto meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = detail::json_meta(v);
  j["metadata"] = std::move(meta);
  return j;
}

/// JSON array of results, in the given order, two-space indented.
inline std::string export_results_json(const std::vector<MeasureResult>& results) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) arr.push_back(result_to_json(r));
  return arr.dump(2) + "\n";
}

}  // namespace infradep
