#pragma once

// Exact measures on a CTMC: steady state, transient distribution by
// uniformization, and mean time to absorption into a target set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "infradep/error.hpp"
#include "infradep/statespace.hpp"

namespace infradep {

struct SolverOptions {
  double steady_tolerance = 1e-10;      // on ||pi Q||_inf
  std::size_t max_iterations = 1'000'000;
  double truncation_mass = 1e-9;        // Poisson mass dropped by uniformization
  double uniformization_rate = 0.0;     // 0: use the largest exit rate
  double mtta_tolerance = 1e-10;        // on the hitting-time equations
  bool allow_defective = false;         // conditional MTTA when the hit probability < 1
};

struct Distribution {
  std::vector<double> probabilities;
  double time = std::numeric_limits<double>::infinity();  // infinity for steady state
  double min_entry = 0.0;                                 // smallest entry before clamping
};

enum class Method { Steady, Transient, Mtta, Simulation };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Steady: return "steady";
    case Method::Transient: return "transient";
    case Method::Mtta: return "mtta";
    case Method::Simulation: return "simulation";
  }
  return "?";
}

using MetaValue = std::variant<std::int64_t, std::uint64_t, double, std::string>;
using Metadata = std::vector<std::pair<std::string, MetaValue>>;

struct MeasureResult {
  std::string name;
  double value = 0.0;
  Method method = Method::Steady;
  std::optional<double> ci_halfwidth;  // simulation only
  Metadata metadata;

  const MetaValue* meta(std::string_view key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return &v;
    return nullptr;
  }
};

class UnreachableTargetError : public Error {
 public:
  UnreachableTargetError(const std::string& msg, double hit_probability)
      : Error(ErrorCode::UnreachableTarget, msg), hit_probability_(hit_probability) {}
  double hit_probability() const noexcept { return hit_probability_; }

 private:
  double hit_probability_;
};

namespace detail {

inline Distribution finish_distribution(std::vector<double> p, double time) {
  Distribution d;
  d.time = time;
  d.min_entry = p.empty() ? 0.0 : *std::min_element(p.begin(), p.end());
  for (auto& x : p)
    if (x < 0.0) x = 0.0;
  d.probabilities = std::move(p);
  return d;
}

/// Strongly connected components (iterative Tarjan); returns the component id
/// per state and the number of components.
inline std::pair<std::vector<std::size_t>, std::size_t> strongly_connected(const Ctmc& c) {
  const std::size_t n = c.size();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0, components = 0;
  std::vector<std::pair<std::size_t, std::size_t>> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, k] = call.back();
      if (k < c.rows[v].size()) {
        const std::size_t w = c.rows[v][k++].first;
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = components;
        } while (w != v);
        ++components;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  return {comp, components};
}

inline std::vector<std::size_t> terminal_components(const Ctmc& c, const std::vector<std::size_t>& comp,
                                                    std::size_t components) {
  std::vector<bool> leaves(components, false);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (const auto& [j, q] : c.rows[i])
      if (comp[j] != comp[i]) leaves[comp[i]] = true;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < components; ++k)
    if (!leaves[k]) out.push_back(k);
  return out;
}

inline double steady_residual(const Ctmc& c, const std::vector<double>& pi,
                              const std::vector<std::vector<std::pair<std::size_t, double>>>& cols,
                              const std::vector<double>& exit) {
  double r = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    double acc = -pi[j] * exit[j];
    for (const auto& [i, q] : cols[j]) acc += pi[i] * q;
    r = std::max(r, std::fabs(acc));
  }
  return r;
}

}  // namespace detail

/// Stationary distribution. The chain may have transient states as long as
/// exactly one terminal strongly connected component exists.
inline Distribution steady_state(const Ctmc& c, const SolverOptions& opt = {}, Metadata* meta = nullptr) {
  const std::size_t n = c.size();
  if (n == 0) throw Error(ErrorCode::InvalidArg, "empty chain");
  auto [comp, components] = detail::strongly_connected(c);
  const auto terminal = detail::terminal_components(c, comp, components);
  if (terminal.size() != 1)
    throw Error(ErrorCode::NotErgodic, "chain has " + std::to_string(terminal.size()) + " terminal components");

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i)
    if (comp[i] == terminal.front()) members.push_back(i);

  const auto cols = c.columns();
  std::vector<double> exit(n);
  for (std::size_t i = 0; i < n; ++i) exit[i] = c.exit_rate(i);

  std::vector<double> pi(n, 0.0);
  std::size_t iterations = 0;
  double residual = 0.0;
  std::string method = "gauss-seidel";
  if (members.size() == 1) {
    pi[members.front()] = 1.0;
  } else {
    for (auto i : members) pi[i] = 1.0 / static_cast<double>(members.size());
    residual = detail::steady_residual(c, pi, cols, exit);
    const std::size_t gs_budget = opt.max_iterations / 2;
    while (residual > opt.steady_tolerance && iterations < gs_budget) {
      for (auto j : members) {
        double acc = 0.0;
        for (const auto& [i, q] : cols[j]) acc += pi[i] * q;  // only terminal members carry mass
        pi[j] = acc / exit[j];
      }
      double sum = 0.0;
      for (auto i : members) sum += pi[i];
      for (auto i : members) pi[i] /= sum;
      ++iterations;
      residual = detail::steady_residual(c, pi, cols, exit);
    }
    if (residual > opt.steady_tolerance) {
      // Power iteration on the uniformized chain; aperiodic because the
      // uniformization rate exceeds every exit rate.
      method = "power";
      const double lambda = 1.02 * c.max_exit_rate();
      std::vector<double> next(n);
      while (residual > opt.steady_tolerance && iterations < opt.max_iterations) {
        for (std::size_t i = 0; i < n; ++i) next[i] = pi[i] * (1.0 - exit[i] / lambda);
        for (std::size_t i = 0; i < n; ++i)
          for (const auto& [j, q] : c.rows[i]) next[j] += pi[i] * q / lambda;
        pi.swap(next);
        ++iterations;
        if (iterations % 16 == 0) residual = detail::steady_residual(c, pi, cols, exit);
      }
      residual = detail::steady_residual(c, pi, cols, exit);
    }
    if (residual > opt.steady_tolerance)
      throw Error(ErrorCode::NoConvergence, "steady-state residual " + format_number(residual) + " after " +
                                                std::to_string(iterations) + " iterations");
  }
  if (meta) {
    meta->emplace_back("iterations", static_cast<std::int64_t>(iterations));
    meta->emplace_back("residual", residual);
    meta->emplace_back("solver", method);
  }
  return detail::finish_distribution(std::move(pi), std::numeric_limits<double>::infinity());
}

/// Poisson weights over [left, right], normalised to sum to one; the mass
/// outside the window is at most `epsilon`.
struct PoissonWindow {
  std::size_t left = 0;
  std::size_t right = 0;
  std::vector<double> weights;
};

inline PoissonWindow poisson_window(double mean, double epsilon) {
  PoissonWindow w;
  const auto mode = static_cast<std::size_t>(std::floor(mean));
  // Unnormalised weights relative to the mode; the ratios decay
  // monotonically away from the mode, bounding each tail geometrically.
  std::vector<double> left_part{1.0};
  double sum = 1.0;
  std::size_t k = mode;
  while (k > 0) {
    const double r = static_cast<double>(k) / mean;
    const double tail = left_part.back() * r / (1.0 - r);
    if (r < 1.0 && tail <= 0.5 * epsilon * sum) break;
    left_part.push_back(left_part.back() * r);
    sum += left_part.back();
    --k;
  }
  w.left = k;
  std::vector<double> right_part;
  double last = 1.0;
  std::size_t j = mode;
  while (true) {
    const double r = mean / static_cast<double>(j + 1);
    const double tail = last * r / (1.0 - r);
    if (r < 1.0 && tail <= 0.5 * epsilon * sum) break;
    last *= r;
    right_part.push_back(last);
    sum += last;
    ++j;
  }
  w.right = j;
  w.weights.assign(left_part.rbegin(), left_part.rend());
  w.weights.insert(w.weights.end(), right_part.begin(), right_part.end());
  for (auto& x : w.weights) x /= sum;
  return w;
}

/// p(t) = p(0) exp(Qt) by uniformization.
inline Distribution transient(const Ctmc& c, double t, const SolverOptions& opt = {}, Metadata* meta = nullptr) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArg, "time must be finite and non-negative");
  const std::size_t n = c.size();
  const double max_exit = c.max_exit_rate();
  double lambda = opt.uniformization_rate > 0.0 ? opt.uniformization_rate : max_exit;
  if (opt.uniformization_rate > 0.0 && opt.uniformization_rate < max_exit)
    throw Error(ErrorCode::InvalidArg, "uniformization rate below the largest exit rate");
  if (t == 0.0 || lambda == 0.0) {
    if (meta) {
      meta->emplace_back("uniformization_rate", lambda);
      meta->emplace_back("left", std::int64_t{0});
      meta->emplace_back("right", std::int64_t{0});
    }
    return detail::finish_distribution(c.initial, t);
  }

  const auto window = poisson_window(lambda * t, opt.truncation_mass);
  std::vector<double> exit(n);
  for (std::size_t i = 0; i < n; ++i) exit[i] = c.exit_rate(i);

  std::vector<double> p = c.initial, next(n), result(n, 0.0);
  for (std::size_t k = 0; k <= window.right; ++k) {
    if (k >= window.left) {
      const double w = window.weights[k - window.left];
      for (std::size_t i = 0; i < n; ++i) result[i] += w * p[i];
    }
    if (k == window.right) break;
    for (std::size_t i = 0; i < n; ++i) next[i] = p[i] * (1.0 - exit[i] / lambda);
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] == 0.0) continue;
      for (const auto& [j, q] : c.rows[i]) next[j] += p[i] * q / lambda;
    }
    p.swap(next);
  }
  if (meta) {
    meta->emplace_back("uniformization_rate", lambda);
    meta->emplace_back("left", static_cast<std::int64_t>(window.left));
    meta->emplace_back("right", static_cast<std::int64_t>(window.right));
  }
  return detail::finish_distribution(std::move(result), t);
}

namespace detail {

// Gauss-Seidel on x_i = (b_i + sum_{j in active} q_ij x_j) / exit_i over the
// active states; other states keep their fixed values in x.
inline std::pair<std::size_t, double> solve_hitting_system(const Ctmc& c, const std::vector<bool>& active,
                                                           const std::vector<double>& b, std::vector<double>& x,
                                                           const SolverOptions& opt) {
  const std::size_t n = c.size();
  std::vector<double> exit(n);
  for (std::size_t i = 0; i < n; ++i) exit[i] = c.exit_rate(i);
  auto residual = [&] {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      double acc = b[i] - exit[i] * x[i];
      for (const auto& [j, q] : c.rows[i]) acc += q * x[j];
      r = std::max(r, std::fabs(acc));
    }
    return r;
  };
  std::size_t iterations = 0;
  double res = residual();
  while (res > opt.mtta_tolerance && iterations < opt.max_iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      double acc = b[i];
      for (const auto& [j, q] : c.rows[i]) acc += q * x[j];
      x[i] = acc / exit[i];
    }
    ++iterations;
    res = residual();
  }
  if (res > opt.mtta_tolerance)
    throw Error(ErrorCode::NoConvergence, "hitting-time residual " + format_number(res) + " after " +
                                              std::to_string(iterations) + " iterations");
  return {iterations, res};
}

}  // namespace detail

/// Expected time until the chain first enters `target`, starting from the
/// chain's initial distribution.
inline MeasureResult mean_time_to_absorption(const Ctmc& c, const std::vector<std::size_t>& target,
                                             const SolverOptions& opt = {}, std::string name = "mtta") {
  const std::size_t n = c.size();
  if (target.empty()) throw UnreachableTargetError("no reachable state belongs to the target", 0.0);
  std::vector<bool> in_target(n, false);
  for (auto s : target) {
    if (s >= n) throw Error(ErrorCode::InvalidArg, "target index out of range");
    in_target[s] = true;
  }

  // States the chain can visit before hitting the target.
  std::vector<bool> visited(n, false);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i)
    if (c.initial[i] > 0.0 && !in_target[i]) {
      visited[i] = true;
      frontier.push_back(i);
    }
  while (!frontier.empty()) {
    const auto i = frontier.back();
    frontier.pop_back();
    for (const auto& [j, q] : c.rows[i])
      if (!in_target[j] && !visited[j]) {
        visited[j] = true;
        frontier.push_back(j);
      }
  }
  // States from which the target is reachable.
  const auto cols = c.columns();
  std::vector<bool> reaches(n, false);
  for (std::size_t i = 0; i < n; ++i)
    if (in_target[i]) {
      reaches[i] = true;
      frontier.push_back(i);
    }
  while (!frontier.empty()) {
    const auto j = frontier.back();
    frontier.pop_back();
    for (const auto& [i, q] : cols[j])
      if (!reaches[i]) {
        reaches[i] = true;
        frontier.push_back(i);
      }
  }

  bool defective = false;
  for (std::size_t i = 0; i < n; ++i)
    if (visited[i] && !reaches[i]) defective = true;

  MeasureResult result;
  result.name = std::move(name);
  result.method = Method::Mtta;

  if (!defective) {
    std::vector<bool> active(n, false);
    std::vector<double> b(n, 0.0), m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (visited[i]) {
        active[i] = true;
        b[i] = 1.0;
      }
    auto [iterations, residual] = detail::solve_hitting_system(c, active, b, m, opt);
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) value += c.initial[i] * m[i];
    result.value = value;
    result.metadata = {{"iterations", static_cast<std::int64_t>(iterations)},
                       {"residual", residual},
                       {"hit_probability", 1.0}};
    return result;
  }

  // Hit probabilities h, then g = E[T * 1{hit}] for a conditional mean.
  std::vector<bool> active(n, false);
  std::vector<double> zero(n, 0.0), h(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (in_target[i]) h[i] = 1.0;
    if (visited[i] && reaches[i]) active[i] = true;
  }
  auto [it_h, res_h] = detail::solve_hitting_system(c, active, zero, h, opt);
  double hit = 0.0;
  for (std::size_t i = 0; i < n; ++i) hit += c.initial[i] * h[i];
  if (!opt.allow_defective || hit <= 0.0)
    throw UnreachableTargetError("target is hit with probability " + format_number(hit), hit);

  std::vector<double> g(n, 0.0), b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) b[i] = h[i];
  auto [it_g, res_g] = detail::solve_hitting_system(c, active, b, g, opt);
  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) num += c.initial[i] * g[i];
  result.value = num / hit;
  result.metadata = {{"iterations", static_cast<std::int64_t>(it_h + it_g)},
                     {"residual", std::max(res_h, res_g)},
                     {"hit_probability", hit},
                     {"conditional", std::string("true")}};
  return result;
}

inline MeasureResult label_probability(const Distribution& d, const std::vector<std::size_t>& set,
                                       std::string name = "probability") {
  MeasureResult r;
  r.name = std::move(name);
  r.method = std::isinf(d.time) ? Method::Steady : Method::Transient;
  double sum = 0.0;
  for (auto s : set) {
    if (s >= d.probabilities.size()) throw Error(ErrorCode::InvalidArg, "state index out of range");
    sum += d.probabilities[s];
  }
  r.value = sum;
  if (!std::isinf(d.time)) r.metadata.emplace_back("time", d.time);
  return r;
}

}  // namespace infradep
