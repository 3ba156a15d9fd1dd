#pragma once

// Graph-property checks over reachability graphs, and the claim suites run
// against each built-in model.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "infradep/error.hpp"
#include "infradep/model.hpp"
#include "infradep/statespace.hpp"

namespace infradep {

/// Alternating state/transition sequence: states.size() == transitions.size() + 1.
struct Witness {
  std::vector<std::size_t> states;
  std::vector<std::size_t> transitions;
};

struct PathCheck {
  bool holds = false;
  std::optional<Witness> witness;  // a path when found, a counterexample when a universal check fails
};

struct SetCheck {
  bool holds = false;
  std::vector<std::size_t> offenders;  // graph state indices
};

namespace detail {

inline std::vector<bool> tangible_label_mask(const ReachabilityGraph& g, const CompiledModel& model, std::string_view label) {
  auto l = model.label_index(label);
  if (!l) throw Error(ErrorCode::UnknownLabel, "unknown label '" + std::string(label) + "'");
  std::vector<bool> mask(g.num_states(), false);
  for (std::size_t s = 0; s < g.num_states(); ++s) mask[s] = !g.vanishing[s] && model.label_holds(*l, g.states[s]);
  return mask;
}

inline std::vector<bool> transition_mask(const CompiledModel& model, const std::vector<std::string>& names) {
  std::vector<bool> mask(model.num_transitions(), false);
  for (const auto& n : names) {
    auto t = model.transition_index(n);
    if (!t) throw Error(ErrorCode::InvalidArg, "unknown transition '" + n + "'");
    mask[*t] = true;
  }
  return mask;
}

// BFS over (state, matched-prefix length) with the via sequence matched
// greedily; skipped edges are excluded entirely.
inline std::optional<Witness> find_path(const ReachabilityGraph& g, const std::vector<bool>& from, const std::vector<bool>& to,
                                        const std::vector<std::size_t>& via, const std::vector<bool>* skip = nullptr) {
  const std::size_t layers = via.size() + 1;
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(g.num_states() * layers, none);
  std::vector<std::size_t> parent_edge(g.num_states() * layers, none);
  std::vector<bool> seen(g.num_states() * layers, false);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    if (!from[s]) continue;
    seen[s * layers] = true;
    queue.push_back(s * layers);
  }
  std::optional<std::size_t> goal;
  while (!queue.empty()) {
    const std::size_t node = queue.front();
    queue.pop_front();
    const std::size_t s = node / layers, k = node % layers;
    if (k == via.size() && to[s]) {
      goal = node;
      break;
    }
    for (std::size_t e = g.edge_begin[s]; e < g.edge_begin[s + 1]; ++e) {
      const auto& edge = g.edges[e];
      if (skip && (*skip)[edge.transition]) continue;
      const std::size_t nk = k < via.size() && via[k] == edge.transition ? k + 1 : k;
      const std::size_t next = edge.dst * layers + nk;
      if (seen[next]) continue;
      seen[next] = true;
      parent[next] = node;
      parent_edge[next] = e;
      queue.push_back(next);
    }
  }
  if (!goal) return std::nullopt;
  Witness w;
  for (std::size_t node = *goal; node != none; node = parent[node]) {
    w.states.push_back(node / layers);
    if (parent_edge[node] != none) w.transitions.push_back(g.edges[parent_edge[node]].transition);
  }
  std::reverse(w.states.begin(), w.states.end());
  std::reverse(w.transitions.begin(), w.transitions.end());
  return w;
}

}  // namespace detail

/// Is there a path from a tangible state in `from` to a tangible state in
/// `to` that fires the `via` transitions in order (other firings may be
/// interleaved)?
inline PathCheck check_path_exists(const ReachabilityGraph& g, const CompiledModel& model, std::string_view from,
                                   std::string_view to, const std::vector<std::string>& via = {}) {
  const auto from_mask = detail::tangible_label_mask(g, model, from);
  const auto to_mask = detail::tangible_label_mask(g, model, to);
  std::vector<std::size_t> via_idx;
  for (const auto& n : via) {
    auto t = model.transition_index(n);
    if (!t) throw Error(ErrorCode::InvalidArg, "unknown transition '" + n + "'");
    via_idx.push_back(*t);
  }
  PathCheck r;
  r.witness = detail::find_path(g, from_mask, to_mask, via_idx);
  r.holds = r.witness.has_value();
  return r;
}

/// Every path from `from` to `to` fires at least one transition of each
/// group. Checked per group by deleting the group's edges and testing that
/// `to` becomes unreachable; the first surviving path is the counterexample.
/// Throws INVALID_ARG when `to` is not reachable from `from` at all.
inline PathCheck check_all_paths_contain(const ReachabilityGraph& g, const CompiledModel& model, std::string_view from,
                                         std::string_view to, const std::vector<std::vector<std::string>>& groups) {
  const auto from_mask = detail::tangible_label_mask(g, model, from);
  const auto to_mask = detail::tangible_label_mask(g, model, to);
  if (!detail::find_path(g, from_mask, to_mask, {}))
    throw Error(ErrorCode::InvalidArg, "label '" + std::string(to) + "' is not reachable from '" + std::string(from) + "'");
  PathCheck r;
  r.holds = true;
  for (const auto& group : groups) {
    const auto skip = detail::transition_mask(model, group);
    if (auto w = detail::find_path(g, from_mask, to_mask, {}, &skip)) {
      r.holds = false;
      r.witness = std::move(w);
      return r;
    }
  }
  return r;
}

/// Graph states satisfying `predicate`; holds when there are none.
inline SetCheck check_set_unreachable(const ReachabilityGraph& g, const CompiledGuard& predicate) {
  SetCheck r;
  r.offenders = matching_states(g.states, predicate);
  r.holds = r.offenders.empty();
  return r;
}

/// Edges (as indices into g.edges) leaving a tangible `from` state into a
/// tangible `to` state, optionally restricted to one transition.
inline std::vector<std::size_t> find_edges(const ReachabilityGraph& g, const CompiledModel& model, std::string_view from,
                                           std::string_view to, std::optional<std::string_view> transition = std::nullopt) {
  const auto from_mask = detail::tangible_label_mask(g, model, from);
  const auto to_mask = detail::tangible_label_mask(g, model, to);
  std::optional<std::size_t> t;
  if (transition) {
    t = model.transition_index(*transition);
    if (!t) throw Error(ErrorCode::InvalidArg, "unknown transition '" + std::string(*transition) + "'");
  }
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& edge = g.edges[e];
    if (from_mask[edge.src] && to_mask[edge.dst] && (!t || edge.transition == *t)) out.push_back(e);
  }
  return out;
}

/// For models with paired real_X / app_X variables and an `attack`
/// variable: apparent equals real in every reachable state where the
/// attack is absent or detected. Throws NOT_ATTACK_MODEL otherwise.
inline SetCheck check_apparent_consistency(const ReachabilityGraph& g, const CompiledModel& model) {
  const auto& vars = model.model().variables;
  auto index_of = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i].name == name) return i;
    return std::nullopt;
  };
  const auto attack = index_of("attack");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].name.rfind("real_", 0) != 0) continue;
    if (auto a = index_of("app_" + vars[i].name.substr(5)); a && vars[*a].values == vars[i].values) pairs.emplace_back(i, *a);
  }
  if (!attack || pairs.empty() || !vars[*attack].is_enum())
    throw Error(ErrorCode::NotAttackModel, "model '" + model.model().name + "' has no attack variable with real/apparent pairs");
  const auto& av = vars[*attack].values;
  std::vector<bool> calm(av.size(), false);
  for (std::size_t k = 0; k < av.size(); ++k) calm[k] = av[k] == "none" || av[k] == "detected";

  SetCheck r;
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    const auto& v = g.states[s].values;
    if (!calm[static_cast<std::size_t>(v[*attack])]) continue;
    for (const auto& [real, app] : pairs) {
      if (v[real] != v[app]) {
        r.offenders.push_back(s);
        break;
      }
    }
  }
  r.holds = r.offenders.empty();
  return r;
}

/// Every tangible state outside both label sets has a direct edge into each
/// of them. Offenders are the states lacking one of the edges.
inline SetCheck check_direct_edges_into(const ReachabilityGraph& g, const CompiledModel& model, std::string_view a,
                                        std::string_view b) {
  const auto in_a = detail::tangible_label_mask(g, model, a);
  const auto in_b = detail::tangible_label_mask(g, model, b);
  SetCheck r;
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    if (g.vanishing[s] || in_a[s] || in_b[s]) continue;
    bool to_a = false, to_b = false;
    for (const auto& e : g.out_edges(s)) {
      to_a = to_a || in_a[e.dst];
      to_b = to_b || in_b[e.dst];
    }
    if (!to_a || !to_b) r.offenders.push_back(s);
  }
  r.holds = r.offenders.empty();
  return r;
}

inline std::string format_witness(const ReachabilityGraph& g, const CompiledModel& model, const Witness& w) {
  std::ostringstream os;
  for (std::size_t i = 0; i < w.states.size(); ++i) {
    if (i) os << " --" << model.transition_name(w.transitions[i - 1]) << "--> ";
    os << '(' << model.describe(g.states[w.states[i]]) << ')';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Claim suites

struct ClaimResult {
  std::string id;
  std::string description;
  bool pass = false;
  std::string detail;
};

namespace detail {

class ClaimRunner {
 public:
  ClaimRunner(const ReachabilityGraph& g, const CompiledModel& m) : g_(g), m_(m) {}

  void path(std::string id, std::string description, std::string_view from, std::string_view to,
            std::vector<std::string> via = {}, bool expect = true) {
    run(std::move(id), std::move(description), [&] {
      auto r = check_path_exists(g_, m_, from, to, via);
      return verdict(r, expect, "no such path");
    });
  }

  void all_paths(std::string id, std::string description, std::string_view from, std::string_view to,
                 std::vector<std::vector<std::string>> groups, bool expect = true) {
    run(std::move(id), std::move(description), [&] {
      auto r = check_all_paths_contain(g_, m_, from, to, groups);
      return verdict(r, expect, "every path fires each required group");
    });
  }

  void unreachable(std::string id, std::string description, const Guard& predicate, bool expect = true) {
    run(std::move(id), std::move(description), [&] {
      auto r = check_set_unreachable(g_, m_.compile_predicate(predicate));
      return verdict(r, expect);
    });
  }

  void reachable_label(std::string id, std::string description, std::string_view label) {
    run(std::move(id), std::move(description), [&] {
      const auto mask = tangible_label_mask(g_, m_, label);
      const bool found = std::find(mask.begin(), mask.end(), true) != mask.end();
      return std::pair{found, std::string(found ? "" : "no reachable tangible state")};
    });
  }

  void edge(std::string id, std::string description, std::string_view from, std::string_view to,
            std::string_view transition, std::optional<double> rate = std::nullopt) {
    run(std::move(id), std::move(description), [&] {
      auto edges = find_edges(g_, m_, from, to, transition);
      bool ok = false;
      for (auto e : edges) ok = ok || !rate || g_.edges[e].value == *rate;
      std::string detail;
      if (!ok) detail = edges.empty() ? "no such edge" : "edge present with a different rate";
      return std::pair{ok, detail};
    });
  }

  void set(std::string id, std::string description, SetCheck (*check)(const ReachabilityGraph&, const CompiledModel&)) {
    run(std::move(id), std::move(description), [&] { return verdict(check(g_, m_), true); });
  }

  void direct_edges(std::string id, std::string description, std::string_view a, std::string_view b) {
    run(std::move(id), std::move(description), [&] { return verdict(check_direct_edges_into(g_, m_, a, b), true); });
  }

  template <class F>
  void custom(std::string id, std::string description, F&& f) {
    run(std::move(id), std::move(description), std::forward<F>(f));
  }

  std::vector<ClaimResult> take() { return std::move(results_); }

 private:
  template <class F>
  void run(std::string id, std::string description, F&& f) {
    ClaimResult c{std::move(id), std::move(description), false, {}};
    try {
      auto [pass, detail] = f();
      c.pass = pass;
      c.detail = std::move(detail);
    } catch (const Error& e) {
      c.detail = e.what();
    }
    results_.push_back(std::move(c));
  }

  std::pair<bool, std::string> verdict(const PathCheck& r, bool expect, std::string_view when_missing = "") {
    std::string detail;
    if (r.witness) detail = format_witness(g_, m_, *r.witness);
    else if (r.holds != expect) detail = std::string(when_missing);
    return {r.holds == expect, detail};
  }

  std::pair<bool, std::string> verdict(const SetCheck& r, bool expect) {
    std::string detail;
    for (std::size_t i = 0; i < r.offenders.size() && i < 5; ++i) {
      if (i) detail += "; ";
      detail += "(" + m_.describe(g_.states[r.offenders[i]]) + ")";
    }
    if (r.offenders.size() > 5) detail += "; ... " + std::to_string(r.offenders.size()) + " in total";
    return {r.holds == expect, detail};
  }

  const ReachabilityGraph& g_;
  const CompiledModel& m_;
  std::vector<ClaimResult> results_;
};

inline std::vector<ClaimResult> accidental_claims(const ReachabilityGraph& g, const CompiledModel& m) {
  using namespace guards;
  ClaimRunner c(g, m);
  const std::vector<std::string> e_rest = {"e_restoration_fast", "e_restoration_slow"};
  for (const char* from : {"state6", "state7", "state8"}) {
    c.all_paths(std::string("restore_both_") + from,
                std::string("every path from ") + from + " back to state1 needs i-restoration and e-restoration", from,
                "state1", {{"i_restoration"}, e_rest});
  }
  c.all_paths("state2_without_e_restoration", "state2 can return to state1 without any e-restoration", "state2", "state1",
              {e_rest}, false);
  c.path("signalled_outage_escalates", "a signalled i-failure can escalate an e-failure (state1 to state6)", "state1",
         "state6", {"signalled", "e_failure_escal_rest"});
  c.path("blackout_weakens_info", "an e-failure weakens the information infrastructure (state1 to state5)", "state1",
         "state5", {"e_failure_normal"});
  c.custom("weakening_is_immediate", "states with i_working during an e-outage are vanishing", [&] {
    auto pred = m.compile_predicate(all_of({eq("info", "i_working"), in("elec", {"partial_e_outage", "e_lost"})}));
    std::size_t count = 0;
    for (std::size_t s = 0; s < g.num_states(); ++s) {
      if (!pred.eval(g.states[s].values)) continue;
      ++count;
      if (!g.vanishing[s]) return std::pair{false, "tangible state (" + m.describe(g.states[s]) + ")"};
    }
    return std::pair{count > 0, std::string(count ? "" : "no such state reached")};
  });
  return c.take();
}

inline std::vector<ClaimResult> cascading_only_claims(const ReachabilityGraph& g, const CompiledModel& m, double lambda_e) {
  using namespace guards;
  ClaimRunner c(g, m);
  c.path("path_1_2_7", "state1 to state2 to state7 via masked_passive then e_failure_escal_sev", "state1", "state7",
         {"masked_passive", "e_failure_escal_sev"});
  c.path("path_1_2", "state1 to state2 via masked_passive", "state1", "state2", {"masked_passive"});
  c.edge("edge_2_7", "state2 has an e_failure_escal_sev edge into state7 at rate lambda_e", "state2", "state7",
         "e_failure_escal_sev", lambda_e);
  c.unreachable("no_i_weakened", "no reachable state has info == i_weakened", eq("info", "i_weakened"));
  c.reachable_label("state3_reachable", "cascading failure state3 is reachable", "state3");
  c.reachable_label("state4_reachable", "cascading failure state4 is reachable", "state4");
  c.path("accumulation_5_7", "e-failures accumulate from state5 to state7", "state5", "state7", {"e_fail_accumulate"});
  return c.take();
}

inline std::vector<ClaimResult> common_cause_claims(const ReachabilityGraph& g, const CompiledModel& m) {
  ClaimRunner c(g, m);
  c.direct_edges("cc_interconnection", "every tangible state outside state6/state8 has direct edges into both", "state6",
                 "state8");
  c.path("cc_1_8", "state1 to state8 via cc_to_8", "state1", "state8", {"cc_to_8"});
  c.path("cc_1_6", "state1 to state6 via cc_to_6", "state1", "state6", {"cc_to_6"});
  c.edge("cc_edge_1_8", "state1 has a direct cc_to_8 edge into state8", "state1", "state8", "cc_to_8");
  c.edge("cc_edge_1_6", "state1 has a direct cc_to_6 edge into state6", "state1", "state6", "cc_to_6");
  return c.take();
}

inline std::vector<ClaimResult> attack_claims(const ReachabilityGraph& g, const CompiledModel& m, std::int64_t K) {
  using namespace guards;
  ClaimRunner c(g, m);
  c.set("apparent_resync", "apparent status equals real status whenever the attack is absent or detected",
        &check_apparent_consistency);
  std::vector<std::string> via = {"passive_attack"};
  for (std::int64_t k = 0; k < K; ++k) via.push_back("operator_cfg");
  via.push_back("operator_overflow");
  c.path("operator_blackout", "operator configuration changes under deception lead to state8", "state1", "state8", via);
  c.all_paths("detected_needs_i_restoration", "leaving state4 for state1 requires i-restoration", "state4", "state1",
              {{"i_restoration"}});
  c.path("active_cfg_hidden", "a configuration change by the compromised infrastructure is reachable", "state1", "state3",
         {"active_attack", "ii_cfg"});
  c.custom("active_cfg_not_reported", "ii_cfg never changes the apparent electricity status", [&] {
    auto t = m.transition_index("ii_cfg");
    auto v = m.model().find_variable("app_elec");
    if (!t || !v) return std::pair{false, std::string("model lacks ii_cfg or app_elec")};
    const auto vi = static_cast<std::size_t>(v - m.model().variables.data());
    std::size_t fired = 0;
    for (const auto& e : g.edges) {
      if (e.transition != *t) continue;
      ++fired;
      if (g.states[e.src].values[vi] != g.states[e.dst].values[vi])
        return std::pair{false, "app_elec changes at (" + m.describe(g.states[e.src]) + ")"};
    }
    return std::pair{fired > 0, std::string(fired ? "" : "ii_cfg never fires")};
  });
  c.reachable_label("deception_visible", "some reachable state has apparent status differing from real", "deceived");
  return c.take();
}

}  // namespace detail

/// Whether a claim suite exists for a model name.
inline bool has_claims(std::string_view model_name) {
  return model_name == "accidental" || model_name == "cascading_only" || model_name == "common_cause" ||
         model_name == "attack";
}

/// Runs the claim suite for a model, chosen by its name. Check errors are
/// reported as failing claims rather than thrown.
inline std::vector<ClaimResult> run_claims(const CompiledModel& model, const ReachabilityOptions& options = {}) {
  const auto& name = model.model().name;
  if (!has_claims(name)) throw Error(ErrorCode::InvalidArg, "no claim suite for model '" + name + "'");
  const auto g = build_reachability_graph(model, options);
  auto param = [&](std::string_view p, double fallback) {
    const auto* q = model.model().find_parameter(p);
    return q ? q->value : fallback;
  };
  if (name == "accidental") return detail::accidental_claims(g, model);
  if (name == "cascading_only") return detail::cascading_only_claims(g, model, param("lambda_e", 0.0));
  if (name == "common_cause") return detail::common_cause_claims(g, model);
  const auto* n_cfg = model.model().find_variable("n_cfg");
  return detail::attack_claims(g, model, n_cfg ? n_cfg->hi : 0);
}

}  // namespace infradep
