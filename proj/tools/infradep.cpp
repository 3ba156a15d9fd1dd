// infradep: command-line front end for the interdependency models.
//
// Exit codes: 0 ok, 1 validation, 2 parse, 3 numeric, 4 limits, 64 usage.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "infradep/builtin.hpp"
#include "infradep/checks.hpp"
#include "infradep/dsl.hpp"
#include "infradep/export.hpp"
#include "infradep/montecarlo.hpp"
#include "infradep/solvers.hpp"
#include "infradep/statespace.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace infradep;

namespace {

enum Exit { kOk = 0, kValidation = 1, kParse = 2, kNumeric = 3, kLimits = 4, kUsage = 64 };

// Thrown to leave a command with a specific exit status after the message
// has been printed.
struct Abort {
  int code;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArg:
    case ErrorCode::UnknownLabel: return kUsage;
    case ErrorCode::InvalidParam:
    case ErrorCode::InvalidModel:
    case ErrorCode::GuardViolation:
    case ErrorCode::OutOfDomain:
    case ErrorCode::ImmediateCycle:
    case ErrorCode::NotAttackModel: return kValidation;
    case ErrorCode::NotErgodic:
    case ErrorCode::NoConvergence:
    case ErrorCode::UnreachableTarget: return kNumeric;
    case ErrorCode::StateLimit:
    case ErrorCode::EventCapExceeded: return kLimits;
  }
  return kValidation;
}

struct Common {
  std::string builtin;
  std::string file;
  std::vector<std::string> sets;
  std::string format = "text";
  std::string out;
};

void add_model_options(CLI::App* cmd, Common& c) {
  auto* m = cmd->add_option("--model", c.builtin, "built-in model name (see list-models)");
  auto* f = cmd->add_option("--file", c.file, "model file in the .gsts format");
  m->excludes(f);
  cmd->add_option("--set", c.sets, "override a parameter, NAME=VALUE (repeatable)");
}

void add_output_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"text", "json"}));
  cmd->add_option("--out", c.out, "write output to PATH instead of stdout");
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + c.out + "'");
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::pair<std::string, double> split_override(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects NAME=VALUE, got '" + s + "'");
  auto value = parse_number(std::string_view(s).substr(eq + 1));
  if (!value) throw UsageError("--set value for '" + s.substr(0, eq) + "' is not a number");
  return {s.substr(0, eq), *value};
}

void print_parse_failure(const ParseResult& r, const std::string& file) {
  for (const auto& e : r.errors) std::cerr << format_error(e, file) << '\n';
  for (const auto& i : r.validation.issues) std::cerr << format_issue(i, file) << '\n';
}

/// Builds the model named by the options, overrides applied before validation.
/// Prints diagnostics and throws Abort on parse or validation failure.
Model load_model(const Common& c, ValidationReport* warnings = nullptr) {
  if (c.builtin.empty() == c.file.empty()) throw UsageError("exactly one of --model or --file is required");
  if (!c.builtin.empty()) {
    ModelParams p;
    for (const auto& s : c.sets) {
      auto [name, value] = split_override(s);
      if (!ModelParams::has(name)) throw UsageError("unknown parameter '" + name + "'");
      p.set(name, value);
    }
    auto m = builtin_model(c.builtin, p);
    if (!m) throw UsageError("unknown model '" + c.builtin + "'");
    return *m;
  }
  auto syntax = parse_syntax(read_file(c.file));
  if (syntax.model) {
    for (const auto& s : c.sets) {
      auto [name, value] = split_override(s);
      auto* param = syntax.model->find_parameter(name);
      if (!param) throw UsageError("model has no parameter '" + name + "'");
      param->value = value;
    }
  }
  auto parsed = finish_parse(std::move(syntax));
  if (!parsed.errors.empty()) {
    print_parse_failure(parsed, c.file);
    throw Abort{kParse};
  }
  if (!parsed.model) {
    print_parse_failure(parsed, c.file);
    throw Abort{kValidation};
  }
  if (warnings) *warnings = parsed.validation;
  return std::move(*parsed.model);
}

ReachabilityOptions reachability_options() {
  ReachabilityOptions o;
  if (const char* env = std::getenv("INFRADEP_STATE_LIMIT")) {
    auto v = parse_number(env);
    if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
      throw UsageError("INFRADEP_STATE_LIMIT must be a positive integer");
    o.state_limit = static_cast<std::size_t>(*v);
  }
  return o;
}

std::string meta_text(const MetaValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>)
          return format_number(x);
        else if constexpr (std::is_same_v<T, std::string>)
          return x;
        else
          return std::to_string(x);
      },
      v);
}

std::string results_text(const std::vector<MeasureResult>& results) {
  std::ostringstream os;
  os << "name\tvalue\tmethod\tci_halfwidth\tmetadata\n";
  for (const auto& r : results) {
    os << r.name << '\t' << format_number(r.value) << '\t' << to_string(r.method) << '\t'
       << (r.ci_halfwidth ? format_number(*r.ci_halfwidth) : "-") << '\t';
    for (std::size_t i = 0; i < r.metadata.size(); ++i)
      os << (i ? "," : "") << r.metadata[i].first << '=' << meta_text(r.metadata[i].second);
    os << '\n';
  }
  return os.str();
}

std::string render_results(const Common& c, const std::vector<MeasureResult>& results) {
  return c.format == "json" ? export_results_json(results) : results_text(results);
}

// --- commands ---------------------------------------------------------------

int cmd_list_models(const Common& c) {
  if (c.format == "json") {
    auto arr = json::array();
    for (const auto& b : builtin_models())
      arr.push_back({{"name", b.name}, {"description", b.description}});
    emit(c, arr.dump(2) + "\n");
  } else {
    std::ostringstream os;
    for (const auto& b : builtin_models()) os << b.name << "\t" << b.description << '\n';
    emit(c, os.str());
  }
  return kOk;
}

struct GraphArgs {
  bool hide_vanishing = false;
  bool summary = false;
};

int cmd_graph(const Common& c, const GraphArgs& a) {
  const CompiledModel model(load_model(c));
  const auto g = build_reachability_graph(model, reachability_options());
  DotOptions dot_opt;
  dot_opt.hide_vanishing = a.hide_vanishing;

  json summary;
  summary["model"] = model.model().name;
  auto labels = json::object();
  if (a.hide_vanishing) {
    const auto ctmc = eliminate_vanishing(g, &model);
    std::size_t edges = 0;
    for (const auto& row : ctmc.rows) edges += row.size();
    summary["states"] = ctmc.size();
    summary["tangible"] = ctmc.size();
    summary["vanishing"] = 0;
    summary["edges"] = edges;
    for (const auto& [name, set] : ctmc.labels) labels[name] = set.size();
  } else {
    summary["states"] = g.num_states();
    summary["tangible"] = g.num_tangible();
    summary["vanishing"] = g.num_vanishing();
    summary["edges"] = g.edges.size();
    for (const auto& [name, set] : label_sets(g, model)) labels[name] = set.size();
  }
  summary["labels"] = labels;

  if (c.format == "json") {
    if (!a.summary) summary["dot"] = export_dot(g, model, dot_opt);
    emit(c, summary.dump(2) + "\n");
  } else if (a.summary) {
    std::ostringstream os;
    os << "model\t" << model.model().name << "\nstates\t" << summary["states"].get<std::size_t>() << "\ntangible\t"
       << summary["tangible"].get<std::size_t>() << "\nvanishing\t" << summary["vanishing"].get<std::size_t>()
       << "\nedges\t" << summary["edges"].get<std::size_t>() << '\n';
    for (const auto& [name, count] : labels.items()) os << "label " << name << '\t' << count.get<std::size_t>() << '\n';
    emit(c, os.str());
  } else {
    emit(c, export_dot(g, model, dot_opt));
  }
  return kOk;
}

struct SolveArgs {
  std::string measure;
  std::optional<double> time;
  std::string target;
  std::vector<std::string> labels;
  bool allow_defective = false;
};

int cmd_solve(const Common& c, const SolveArgs& a) {
  const CompiledModel model(load_model(c));
  const auto ctmc = build_ctmc(model, reachability_options());
  SolverOptions opt;
  opt.allow_defective = a.allow_defective;
  std::vector<MeasureResult> results;

  auto label_results = [&](const Distribution& d, const Metadata& meta) {
    std::vector<std::string> names = a.labels;
    if (names.empty())
      for (const auto& l : model.model().labels) names.push_back(l.name);
    for (const auto& n : names) {
      const auto set = matching_states(ctmc.states, predicate_from_text(model, n));
      auto r = label_probability(d, set, n);
      r.metadata.insert(r.metadata.end(), meta.begin(), meta.end());
      results.push_back(std::move(r));
    }
  };

  std::string measure = a.measure;
  if (measure == "label-prob") {
    if (a.labels.empty()) throw UsageError("--measure label-prob needs --label");
    measure = a.time ? "transient" : "steady";
  }
  if (measure == "steady") {
    if (a.time) throw UsageError("--time is not used by --measure steady");
    Metadata meta;
    const auto d = steady_state(ctmc, opt, &meta);
    label_results(d, meta);
  } else if (measure == "transient") {
    if (!a.time) throw UsageError("--measure transient needs --time");
    Metadata meta;
    const auto d = transient(ctmc, *a.time, opt, &meta);
    label_results(d, meta);
  } else {
    if (a.target.empty()) throw UsageError("--measure mtta needs --target");
    const auto set = matching_states(ctmc.states, predicate_from_text(model, a.target));
    results.push_back(mean_time_to_absorption(ctmc, set, opt, a.target));
  }
  emit(c, render_results(c, results));
  return kOk;
}

struct SimulateArgs {
  std::vector<std::string> occupancy;
  std::vector<std::string> time_to;
  double horizon = 0.0;
  std::optional<double> burn_in;
  std::optional<double> cap_time;
  std::size_t reps = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::size_t event_cap = SimulationLimits{}.event_cap;
  std::string trace_dir;
  std::string trace_format = "csv";
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  const CompiledModel model(load_model(c));
  if (a.reps < 2) throw UsageError("--reps must be at least 2");
  if (a.occupancy.empty() && a.time_to.empty() && a.trace_dir.empty())
    throw UsageError("nothing to do: give --occupancy, --time-to or --trace-dir");
  if ((!a.occupancy.empty() || !a.trace_dir.empty()) && !(a.horizon > 0.0))
    throw UsageError("--horizon must be positive");
  ReplicationOptions opt;
  opt.replications = a.reps;
  opt.seed = a.seed;
  opt.threads = a.threads;
  opt.limits.event_cap = a.event_cap;

  std::vector<CompiledGuard> occ, hit;
  for (const auto& t : a.occupancy) occ.push_back(predicate_from_text(model, t));
  for (const auto& t : a.time_to) hit.push_back(predicate_from_text(model, t));

  std::vector<MeasureResult> results;
  for (std::size_t i = 0; i < occ.size(); ++i)
    results.push_back(estimate_occupancy(model, occ[i], a.horizon, opt, a.burn_in.value_or(-1.0), a.occupancy[i]).to_result());
  for (std::size_t i = 0; i < hit.size(); ++i) {
    const double cap = a.cap_time.value_or(a.horizon > 0.0 ? a.horizon : 1e6);
    results.push_back(estimate_time_to(model, hit[i], cap, opt, a.time_to[i]).to_result());
  }

  if (!a.trace_dir.empty()) {
    std::error_code ec;
    fs::create_directories(a.trace_dir, ec);
    if (ec) throw UsageError("cannot create '" + a.trace_dir + "'");
    const int digits = static_cast<int>(std::to_string(a.reps - 1).size());
    for (std::size_t r = 0; r < a.reps; ++r) {
      const auto trace = simulate(model, a.horizon, mix64(a.seed, r), opt.limits, r);
      std::ostringstream name;
      name << "trace_" << std::setw(digits) << std::setfill('0') << r << '.' << a.trace_format;
      std::ofstream f(fs::path(a.trace_dir) / name.str(), std::ios::binary);
      if (!f) throw UsageError("cannot write traces into '" + a.trace_dir + "'");
      if (a.trace_format == "csv")
        write_trace_csv(f, model, trace);
      else
        write_trace_jsonl(f, model, trace);
    }
  }
  emit(c, render_results(c, results));
  return kOk;
}

struct ValidateArgs {
  bool claims = false;
};

int cmd_validate(const Common& c, const ValidateArgs& a) {
  ValidationReport warnings;
  Model m = load_model(c, &warnings);
  const CompiledModel model(m);
  if (c.file.empty()) warnings = model.warnings();
  std::vector<ClaimResult> claims;
  if (a.claims) claims = run_claims(model, reachability_options());
  bool ok = true;
  for (const auto& cl : claims) ok = ok && cl.pass;

  if (c.format == "json") {
    json j;
    j["model"] = m.name;
    auto issues = json::array();
    for (const auto& i : warnings.issues) {
      json o;
      o["severity"] = i.severity == Severity::Error ? "error" : "warning";
      o["code"] = std::string(to_string(i.code));
      o["message"] = i.message;
      if (i.span) {
        o["line"] = i.span->line;
        o["column"] = i.span->column;
      }
      issues.push_back(std::move(o));
    }
    j["issues"] = std::move(issues);
    auto arr = json::array();
    for (const auto& cl : claims)
      arr.push_back({{"id", cl.id}, {"description", cl.description}, {"pass", cl.pass}, {"detail", cl.detail}});
    j["claims"] = std::move(arr);
    j["ok"] = ok;
    emit(c, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    for (const auto& i : warnings.issues) os << format_issue(i, c.file) << '\n';
    os << "model " << m.name << ": valid\n";
    for (const auto& cl : claims) {
      os << (cl.pass ? "PASS " : "FAIL ") << cl.id << ": " << cl.description << '\n';
      if (!cl.pass && !cl.detail.empty()) os << "  " << cl.detail << '\n';
    }
    if (a.claims) os << (ok ? "all claims hold\n" : "some claims fail\n");
    emit(c, os.str());
  }
  return ok ? kOk : kValidation;
}

struct FmtArgs {
  std::string path;
  bool in_place = false;
};

int cmd_fmt(Common c, const FmtArgs& a) {
  if (!a.path.empty()) {
    if (!c.file.empty() || !c.builtin.empty()) throw UsageError("give either a file argument or --model/--file");
    c.file = a.path;
  }
  if (a.in_place && c.file.empty()) throw UsageError("--in-place needs a file");
  const Model m = load_model(c);
  const std::string text = serialize_model(m);
  if (a.in_place) {
    std::ofstream f(c.file, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + c.file + "'");
    f << text;
    return kOk;
  }
  if (c.format == "json")
    emit(c, json{{"model", m.name}, {"text", text}}.dump(2) + "\n");
  else
    emit(c, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interdependency failure models for electricity and information infrastructures"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common list_c, graph_c, solve_c, sim_c, val_c, fmt_c;
  GraphArgs graph_a;
  SolveArgs solve_a;
  SimulateArgs sim_a;
  ValidateArgs val_a;
  FmtArgs fmt_a;

  auto* list = app.add_subcommand("list-models", "list the built-in models");
  add_output_options(list, list_c);

  auto* graph = app.add_subcommand("graph", "reachability graph as DOT, or a summary");
  add_model_options(graph, graph_c);
  add_output_options(graph, graph_c);
  graph->add_flag("--hide-vanishing", graph_a.hide_vanishing, "render the reduced chain without vanishing states");
  graph->add_flag("--summary", graph_a.summary, "print state, edge and label counts instead of DOT");

  auto* solve = app.add_subcommand("solve", "exact CTMC measures");
  add_model_options(solve, solve_c);
  add_output_options(solve, solve_c);
  solve->add_option("--measure", solve_a.measure, "steady | transient | mtta | label-prob")
      ->required()
      ->check(CLI::IsMember({"steady", "transient", "mtta", "label-prob"}));
  solve->add_option("--time", solve_a.time, "time point for transient measures")->check(CLI::NonNegativeNumber);
  solve->add_option("--target", solve_a.target, "label or guard expression for mtta");
  solve->add_option("--label,--label-prob", solve_a.labels, "label or guard expression to report (repeatable)");
  solve->add_flag("--allow-defective", solve_a.allow_defective, "report the conditional mean when the target may be missed");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimates and traces");
  add_model_options(sim, sim_c);
  add_output_options(sim, sim_c);
  sim->add_option("--occupancy", sim_a.occupancy, "label or expression whose time fraction is estimated (repeatable)");
  sim->add_option("--time-to", sim_a.time_to, "label or expression whose first hitting time is estimated (repeatable)");
  sim->add_option("--horizon", sim_a.horizon, "simulated time per replication");
  sim->add_option("--burn-in", sim_a.burn_in, "discarded initial time for occupancy (default horizon/10)")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--cap-time", sim_a.cap_time, "censoring time for --time-to (default: horizon, else 1e6)")
      ->check(CLI::PositiveNumber);
  sim->add_option("--reps", sim_a.reps, "replications");
  sim->add_option("--seed", sim_a.seed, "base seed (default 0)");
  sim->add_option("--threads", sim_a.threads, "worker threads, 0 = all cores");
  sim->add_option("--event-cap", sim_a.event_cap, "events per replication before aborting")->check(CLI::PositiveNumber);
  sim->add_option("--trace-dir", sim_a.trace_dir, "write one trace file per replication here");
  sim->add_option("--trace-format", sim_a.trace_format, "csv | jsonl")->check(CLI::IsMember({"csv", "jsonl"}));

  auto* val = app.add_subcommand("validate", "check a model, optionally run its claim suite");
  add_model_options(val, val_c);
  add_output_options(val, val_c);
  val->add_flag("--claims", val_a.claims, "run the structural claim suite");

  auto* fmt = app.add_subcommand("fmt", "print a model in canonical form");
  add_model_options(fmt, fmt_c);
  add_output_options(fmt, fmt_c);
  fmt->add_option("path", fmt_a.path, "model file");
  fmt->add_flag("--in-place,-i", fmt_a.in_place, "rewrite the file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*list) return cmd_list_models(list_c);
    if (*graph) return cmd_graph(graph_c, graph_a);
    if (*solve) return cmd_solve(solve_c, solve_a);
    if (*sim) return cmd_simulate(sim_c, sim_a);
    if (*val) return cmd_validate(val_c, val_a);
    if (*fmt) return cmd_fmt(fmt_c, fmt_a);
  } catch (const Abort& a) {
    return a.code;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ModelError& e) {
    for (const auto& i : e.report().issues) std::cerr << format_issue(i) << '\n';
    return kValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kUsage;
}
