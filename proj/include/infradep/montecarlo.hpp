#pragma once

// Discrete-event simulation of a model under race semantics, with
// reproducible per-replication random streams.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "infradep/error.hpp"
#include "infradep/model.hpp"
#include "infradep/number_format.hpp"
#include "infradep/solvers.hpp"

namespace infradep {

// ---------------------------------------------------------------------------
// Random streams
//
// The generator is SplitMix64 used as a counter-based generator: draw k
// (k = 1, 2, ...) of a stream with key `key` is finalize(key + k * 0x9E3779B97F4A7C15)
// with Stafford's mix-13 finalizer:
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
// The stream key of replication r under seed s is mix64(s, r) =
// finalize(s ^ finalize(r + 0x9E3779B97F4A7C15)).
// Uniforms take the top 53 bits: (x >> 11) * 2^-53, giving [0, 1).
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t finalize64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t seed, std::uint64_t replication) {
  return finalize64(seed ^ finalize64(replication + kGolden));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next() { return finalize64(key_ + (++counter_) * kGolden); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Inverse transform; 1 - u lies in (0, 1] so the log is finite.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

enum class EndReason { Horizon, Absorbed, EventCap };

inline std::string_view to_string(EndReason r) {
  switch (r) {
    case EndReason::Horizon: return "horizon";
    case EndReason::Absorbed: return "absorbed";
    case EndReason::EventCap: return "event-cap";
  }
  return "?";
}

struct TraceEvent {
  double time = 0.0;
  std::size_t transition = 0;
  StateVector state;  // after firing
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
  std::uint64_t replication = 0;
  std::uint64_t seed = 0;
  StateVector initial;
  std::vector<TraceEvent> events;
  EndReason end = EndReason::Horizon;
  double end_time = 0.0;
  friend bool operator==(const Trace&, const Trace&) = default;
};

class EventCapExceeded : public Error {
 public:
  explicit EventCapExceeded(Trace partial)
      : Error(ErrorCode::EventCapExceeded, "event cap reached after " + std::to_string(partial.events.size()) + " events"),
        partial_(std::move(partial)) {}
  const Trace& partial_trace() const noexcept { return partial_; }

 private:
  Trace partial_;
};

struct SimulationLimits {
  std::size_t event_cap = 10'000'000;
  std::size_t immediate_limit = 10'000;  // consecutive immediate firings
};

namespace detail {

// Observer interface for the event loop:
//   bool tangible(double time, const StateVector& s)  -> false stops the run
//   void fired(double time, std::size_t t, const StateVector& s)
template <class Observer>
EndReason run_replication(const CompiledModel& model, CounterRng& rng, double horizon, const SimulationLimits& limits,
                          Observer& obs, double& end_time, std::size_t& events) {
  StateVector s = model.initial_state();
  double now = 0.0;
  std::size_t consecutive_immediate = 0;
  std::vector<std::size_t> enabled;
  events = 0;
  while (true) {
    model.enabled_transitions(s, enabled);
    const bool vanishing = !enabled.empty() && !model.is_timed(enabled.front());
    if (!vanishing) {
      consecutive_immediate = 0;
      if (!obs.tangible(now, s)) {
        end_time = now;
        return EndReason::Horizon;
      }
    }
    if (enabled.empty()) {
      end_time = now;
      return EndReason::Absorbed;
    }
    std::size_t chosen = enabled.front();
    if (vanishing) {
      if (++consecutive_immediate > limits.immediate_limit)
        throw Error(ErrorCode::ImmediateCycle, "more than " + std::to_string(limits.immediate_limit) +
                                                   " consecutive immediate firings");
      double total = 0.0;
      for (auto t : enabled) total += model.weight(t);
      double u = rng.uniform() * total;
      chosen = enabled.back();
      for (auto t : enabled) {
        if (u < model.weight(t)) {
          chosen = t;
          break;
        }
        u -= model.weight(t);
      }
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (auto t : enabled) {
        const double d = rng.exponential(model.rate(t));
        if (d < best) {
          best = d;
          chosen = t;
        }
      }
      if (now + best > horizon) {
        end_time = horizon;
        return EndReason::Horizon;
      }
      now += best;
    }
    if (events >= limits.event_cap) {
      end_time = now;
      return EndReason::EventCap;
    }
    s = model.apply_transition(s, chosen);
    ++events;
    obs.fired(now, chosen, s);
  }
}

struct RecordingObserver {
  Trace* trace;
  bool tangible(double, const StateVector&) { return true; }
  void fired(double time, std::size_t t, const StateVector& s) { trace->events.push_back({time, t, s}); }
};

}  // namespace detail

/// One replication from the initial state until `horizon`, absorption or the
/// event cap. Fully determined by (model, horizon, stream_key, limits).
inline Trace simulate(const CompiledModel& model, double horizon, std::uint64_t stream_key,
                      const SimulationLimits& limits = {}, std::uint64_t replication = 0) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArg, "horizon must be positive");
  Trace trace;
  trace.replication = replication;
  trace.seed = stream_key;
  trace.initial = model.initial_state();
  CounterRng rng(stream_key);
  detail::RecordingObserver obs{&trace};
  std::size_t events = 0;
  trace.end = detail::run_replication(model, rng, horizon, limits, obs, trace.end_time, events);
  if (trace.end == EndReason::EventCap) throw EventCapExceeded(std::move(trace));
  return trace;
}

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

struct Estimate {
  std::string name;
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal approximation
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::size_t censored = 0;
  Metadata extra;

  bool covers(double value, double sigmas = 3.0) const {
    return std::fabs(value - mean) <= half_width * sigmas / 1.96 + 1e-15;
  }

  MeasureResult to_result() const {
    MeasureResult r;
    r.name = name;
    r.value = mean;
    r.method = Method::Simulation;
    r.ci_halfwidth = half_width;
    r.metadata = {{"replications", static_cast<std::int64_t>(replications)},
                  {"seed", seed},
                  {"censored", static_cast<std::int64_t>(censored)}};
    r.metadata.insert(r.metadata.end(), extra.begin(), extra.end());
    return r;
  }
};

struct ReplicationOptions {
  std::size_t replications = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency
  SimulationLimits limits;
};

namespace detail {

/// Runs `body(r)` for every replication index, possibly concurrently.
/// Results land at their index; the lowest-index failure is rethrown, so the
/// outcome never depends on scheduling.
template <class Result, class Body>
std::vector<Result> run_replications(std::size_t count, std::size_t threads, Body body) {
  std::vector<Result> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      try {
        results[r] = body(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

inline std::pair<double, double> mean_and_halfwidth(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, 1.96 * sd / std::sqrt(n)};
}

}  // namespace detail

/// Per replication, the fraction of [burn_in, horizon] spent in states
/// satisfying `predicate`; burn_in < 0 selects horizon / 10.
inline Estimate estimate_occupancy(const CompiledModel& model, const CompiledGuard& predicate, double horizon,
                                   const ReplicationOptions& opt, double burn_in = -1.0, std::string name = "occupancy") {
  if (opt.replications < 2) throw Error(ErrorCode::InvalidArg, "at least 2 replications are required");
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArg, "horizon must be positive");
  if (burn_in < 0.0) burn_in = horizon / 10.0;
  if (!(burn_in < horizon)) throw Error(ErrorCode::InvalidArg, "burn-in must be shorter than the horizon");

  struct Occupancy {
    const CompiledGuard* predicate;
    double burn_in, horizon;
    double last_time = 0.0;
    bool inside = false;
    double accumulated = 0.0;
    void close(double until) {
      if (inside) {
        const double a = std::max(last_time, burn_in), b = std::min(until, horizon);
        if (b > a) accumulated += b - a;
      }
    }
    bool tangible(double time, const StateVector& s) {
      close(time);
      last_time = time;
      inside = predicate->eval(s.values);
      return true;
    }
    void fired(double, std::size_t, const StateVector&) {}
  };

  auto values = detail::run_replications<double>(opt.replications, opt.threads, [&](std::size_t r) {
    CounterRng rng(mix64(opt.seed, r));
    Occupancy obs{&predicate, burn_in, horizon};
    double end_time = 0.0;
    std::size_t events = 0;
    auto end = detail::run_replication(model, rng, horizon, opt.limits, obs, end_time, events);
    if (end == EndReason::EventCap) throw Error(ErrorCode::EventCapExceeded, "event cap reached in replication " + std::to_string(r));
    obs.close(horizon);  // the last tangible state persists to the horizon
    return obs.accumulated / (horizon - burn_in);
  });

  Estimate e;
  e.name = std::move(name);
  std::tie(e.mean, e.half_width) = detail::mean_and_halfwidth(values);
  e.replications = opt.replications;
  e.seed = opt.seed;
  e.extra = {{"horizon", horizon}, {"burn_in", burn_in}};
  return e;
}

/// Mean first time a tangible state satisfies `predicate`. Replications that
/// have not hit it by `cap_time` (or get absorbed elsewhere) are censored and
/// contribute cap_time, so the mean is a lower bound whenever censored > 0.
inline Estimate estimate_time_to(const CompiledModel& model, const CompiledGuard& predicate, double cap_time,
                                 const ReplicationOptions& opt, std::string name = "time_to") {
  if (opt.replications < 2) throw Error(ErrorCode::InvalidArg, "at least 2 replications are required");
  if (!(cap_time > 0.0)) throw Error(ErrorCode::InvalidArg, "cap time must be positive");

  struct Hit {
    const CompiledGuard* predicate;
    double time = -1.0;
    bool tangible(double now, const StateVector& s) {
      if (predicate->eval(s.values)) {
        time = now;
        return false;
      }
      return true;
    }
    void fired(double, std::size_t, const StateVector&) {}
  };

  auto values = detail::run_replications<std::pair<double, bool>>(opt.replications, opt.threads, [&](std::size_t r) {
    CounterRng rng(mix64(opt.seed, r));
    Hit obs{&predicate};
    double end_time = 0.0;
    std::size_t events = 0;
    auto end = detail::run_replication(model, rng, cap_time, opt.limits, obs, end_time, events);
    if (end == EndReason::EventCap) throw Error(ErrorCode::EventCapExceeded, "event cap reached in replication " + std::to_string(r));
    if (obs.time >= 0.0) return std::make_pair(obs.time, false);
    return std::make_pair(cap_time, true);
  });

  std::vector<double> times;
  Estimate e;
  for (const auto& [t, censored] : values) {
    times.push_back(t);
    if (censored) ++e.censored;
  }
  e.name = std::move(name);
  std::tie(e.mean, e.half_width) = detail::mean_and_halfwidth(times);
  e.replications = opt.replications;
  e.seed = opt.seed;
  e.extra = {{"cap_time", cap_time},
             {"all_censored", std::string(e.censored == opt.replications ? "true" : "false")}};
  return e;
}

// ---------------------------------------------------------------------------
// Trace export
// ---------------------------------------------------------------------------

/// `time,transition,var1=val1,...` per event.
inline void write_trace_csv(std::ostream& os, const CompiledModel& model, const Trace& trace) {
  for (const auto& e : trace.events) {
    os << format_number(e.time) << ',' << model.transition_name(e.transition);
    for (std::size_t i = 0; i < e.state.values.size(); ++i)
      os << ',' << model.model().variables[i].name << '=' << model.value_name(i, e.state.values[i]);
    os << '\n';
  }
}

/// One JSON object per event: {"time":..,"transition":"..","state":{"var":value,..}}.
/// Enum values are strings, counters are integers.
inline void write_trace_jsonl(std::ostream& os, const CompiledModel& model, const Trace& trace) {
  for (const auto& e : trace.events) {
    os << "{\"time\":" << format_number(e.time) << ",\"transition\":\"" << model.transition_name(e.transition)
       << "\",\"state\":{";
    for (std::size_t i = 0; i < e.state.values.size(); ++i) {
      const auto& decl = model.model().variables[i];
      if (i) os << ',';
      os << '"' << decl.name << "\":";
      if (decl.is_enum())
        os << '"' << model.value_name(i, e.state.values[i]) << '"';
      else
        os << e.state.values[i];
    }
    os << "}}\n";
  }
}

}  // namespace infradep
