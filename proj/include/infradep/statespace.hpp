#pragma once

// Reachability graph construction and reduction of vanishing states to a
// continuous-time Markov chain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "infradep/error.hpp"
#include "infradep/model.hpp"

namespace infradep {

struct GraphEdge {
  std::size_t src = 0;
  std::size_t transition = 0;
  std::size_t dst = 0;
  double value = 0.0;  // rate for timed edges, probability for immediate edges
  bool timed = true;
};

/// Tangible and vanishing states in BFS discovery order; edges grouped by
/// source in the same order, each group in transition declaration order.
struct ReachabilityGraph {
  std::vector<StateVector> states;
  std::vector<bool> vanishing;
  std::vector<GraphEdge> edges;
  std::vector<std::size_t> edge_begin;  // edges of state s are [edge_begin[s], edge_begin[s+1])
  std::size_t initial = 0;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_tangible() const {
    return static_cast<std::size_t>(std::count(vanishing.begin(), vanishing.end(), false));
  }
  std::size_t num_vanishing() const { return num_states() - num_tangible(); }

  struct EdgeRange {
    const GraphEdge* first;
    const GraphEdge* last;
    const GraphEdge* begin() const { return first; }
    const GraphEdge* end() const { return last; }
  };
  EdgeRange out_edges(std::size_t s) const {
    return {edges.data() + edge_begin[s], edges.data() + edge_begin[s + 1]};
  }
};

struct ReachabilityOptions {
  std::size_t state_limit = 1'000'000;
};

namespace detail {

// Iterative DFS over the immediate-edge subgraph; returns a vanishing state on
// a cycle, if any.
inline std::optional<std::size_t> find_vanishing_cycle(const ReachabilityGraph& g) {
  enum : unsigned char { White, Grey, Black };
  std::vector<unsigned char> color(g.num_states(), White);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t root = 0; root < g.num_states(); ++root) {
    if (!g.vanishing[root] || color[root] != White) continue;
    stack.emplace_back(root, g.edge_begin[root]);
    color[root] = Grey;
    while (!stack.empty()) {
      auto& [s, next] = stack.back();
      if (next == g.edge_begin[s + 1]) {
        color[s] = Black;
        stack.pop_back();
        continue;
      }
      const auto& e = g.edges[next++];
      if (!g.vanishing[e.dst]) continue;
      if (color[e.dst] == Grey) return e.dst;
      if (color[e.dst] == White) {
        color[e.dst] = Grey;
        stack.emplace_back(e.dst, g.edge_begin[e.dst]);
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Breadth-first closure from the initial state. Throws STATE_LIMIT when the
/// number of states exceeds the cap and IMMEDIATE_CYCLE when vanishing states
/// form a cycle.
inline ReachabilityGraph build_reachability_graph(const CompiledModel& model, const ReachabilityOptions& options = {}) {
  ReachabilityGraph g;
  std::unordered_map<StateVector, std::size_t, StateVectorHash> index;
  auto intern = [&](const StateVector& s) -> std::size_t {
    auto [it, inserted] = index.emplace(s, g.states.size());
    if (inserted) {
      if (g.states.size() >= options.state_limit)
        throw Error(ErrorCode::StateLimit, "state space exceeds the limit of " + std::to_string(options.state_limit) + " states");
      g.states.push_back(s);
    }
    return it->second;
  };

  g.initial = intern(model.initial_state());
  std::vector<std::size_t> enabled;
  for (std::size_t s = 0; s < g.states.size(); ++s) {
    g.edge_begin.push_back(g.edges.size());
    const StateVector current = g.states[s];
    model.enabled_transitions(current, enabled);
    const bool vanishing = !enabled.empty() && !model.is_timed(enabled.front());
    g.vanishing.push_back(vanishing);
    double total_weight = 0.0;
    if (vanishing)
      for (auto t : enabled) total_weight += model.weight(t);
    for (auto t : enabled) {
      const std::size_t dst = intern(model.apply_transition(current, t));
      GraphEdge e;
      e.src = s;
      e.transition = t;
      e.dst = dst;
      e.timed = !vanishing;
      e.value = vanishing ? model.weight(t) / total_weight : model.rate(t);
      g.edges.push_back(e);
    }
  }
  g.edge_begin.push_back(g.edges.size());

  if (auto v = detail::find_vanishing_cycle(g))
    throw Error(ErrorCode::ImmediateCycle, "immediate transitions cycle through " + model.describe(g.states[*v]));
  return g;
}

/// Sparse generator of a CTMC over tangible states.
struct Ctmc {
  std::vector<StateVector> states;
  std::vector<std::size_t> graph_index;  // position of each state in the source graph
  /// Off-diagonal entries per row, sorted by column, strictly positive.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  /// Rate of transitions that leave a state and return to it through
  /// immediate firings; it does not appear in Q.
  std::vector<double> self_loop;
  std::vector<double> initial;
  std::map<std::string, std::vector<std::size_t>> labels;

  std::size_t size() const { return states.size(); }

  /// -Q[i][i].
  double exit_rate(std::size_t i) const {
    double r = 0.0;
    for (const auto& [j, q] : rows[i]) r += q;
    return r;
  }

  double max_exit_rate() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, exit_rate(i));
    return m;
  }

  /// Incoming entries per column: cols[j] = {(i, q_ij)}.
  std::vector<std::vector<std::pair<std::size_t, double>>> columns() const {
    std::vector<std::vector<std::pair<std::size_t, double>>> cols(size());
    for (std::size_t i = 0; i < size(); ++i)
      for (const auto& [j, q] : rows[i]) cols[j].emplace_back(i, q);
    return cols;
  }
};

/// For each label, the indices of graph states satisfying its predicate.
inline std::map<std::string, std::vector<std::size_t>> label_sets(const ReachabilityGraph& g, const CompiledModel& model) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t l = 0; l < model.num_labels(); ++l) {
    auto& set = out[model.model().labels[l].name];
    for (std::size_t s = 0; s < g.num_states(); ++s)
      if (model.label_holds(l, g.states[s])) set.push_back(s);
  }
  return out;
}

/// States of a graph satisfying an arbitrary predicate.
inline std::vector<std::size_t> matching_states(const std::vector<StateVector>& states, const CompiledGuard& predicate) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < states.size(); ++s)
    if (predicate.eval(states[s].values)) out.push_back(s);
  return out;
}

inline std::map<std::string, std::vector<std::size_t>> label_sets(const Ctmc& c, const CompiledModel& model) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t l = 0; l < model.num_labels(); ++l) {
    auto& set = out[model.model().labels[l].name];
    for (std::size_t s = 0; s < c.size(); ++s)
      if (model.label_holds(l, c.states[s])) set.push_back(s);
  }
  return out;
}

/// Removes vanishing states: rate entering a vanishing state is split over the
/// tangible states its immediate chains reach, weighted by path probability.
/// Labels are filled when a model is supplied.
inline Ctmc eliminate_vanishing(const ReachabilityGraph& g, const CompiledModel* model = nullptr) {
  if (auto v = detail::find_vanishing_cycle(g))
    throw Error(ErrorCode::ImmediateCycle, "vanishing states form a cycle");

  Ctmc c;
  std::vector<std::size_t> tangible_index(g.num_states(), static_cast<std::size_t>(-1));
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    if (g.vanishing[s]) continue;
    tangible_index[s] = c.states.size();
    c.states.push_back(g.states[s]);
    c.graph_index.push_back(s);
  }

  // Absorption distribution of each vanishing state over tangible states,
  // computed in post-order so every successor is resolved first.
  using Dist = std::vector<std::pair<std::size_t, double>>;
  std::vector<Dist> resolved(g.num_states());
  std::vector<bool> done(g.num_states(), false);
  auto merge = [](Dist& d) {
    std::sort(d.begin(), d.end());
    Dist out;
    for (const auto& [k, p] : d) {
      if (!out.empty() && out.back().first == k)
        out.back().second += p;
      else
        out.emplace_back(k, p);
    }
    d = std::move(out);
  };
  auto resolve = [&](std::size_t root) {
    std::vector<std::pair<std::size_t, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [s, expanded] = stack.back();
      stack.pop_back();
      if (done[s]) continue;
      if (!expanded) {
        stack.emplace_back(s, true);
        for (const auto& e : g.out_edges(s))
          if (g.vanishing[e.dst] && !done[e.dst]) stack.emplace_back(e.dst, false);
        continue;
      }
      Dist d;
      for (const auto& e : g.out_edges(s)) {
        if (!g.vanishing[e.dst]) {
          d.emplace_back(tangible_index[e.dst], e.value);
        } else {
          for (const auto& [k, p] : resolved[e.dst]) d.emplace_back(k, e.value * p);
        }
      }
      merge(d);
      resolved[s] = std::move(d);
      done[s] = true;
    }
  };
  for (std::size_t s = 0; s < g.num_states(); ++s)
    if (g.vanishing[s]) resolve(s);

  c.rows.resize(c.size());
  c.self_loop.assign(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::size_t s = c.graph_index[i];
    Dist row;
    for (const auto& e : g.out_edges(s)) {
      if (!g.vanishing[e.dst]) {
        row.emplace_back(tangible_index[e.dst], e.value);
      } else {
        for (const auto& [k, p] : resolved[e.dst]) row.emplace_back(k, e.value * p);
      }
    }
    merge(row);
    for (const auto& [k, q] : row) {
      if (k == i)
        c.self_loop[i] += q;
      else if (q > 0.0)
        c.rows[i].emplace_back(k, q);
    }
  }

  c.initial.assign(c.size(), 0.0);
  if (!g.vanishing[g.initial]) {
    c.initial[tangible_index[g.initial]] = 1.0;
  } else {
    for (const auto& [k, p] : resolved[g.initial]) c.initial[k] += p;
  }

  if (model) c.labels = label_sets(c, *model);
  return c;
}

/// Graph plus chain in one call, with labels attached.
inline Ctmc build_ctmc(const CompiledModel& model, const ReachabilityOptions& options = {}) {
  return eliminate_vanishing(build_reachability_graph(model, options), &model);
}

}  // namespace infradep
