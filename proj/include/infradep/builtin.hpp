#pragma once

// The four ready-made infrastructure models: accidental failures, the
// cascading-only restriction, common-cause failures, and malicious attacks
// with apparent-vs-real status.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infradep/error.hpp"
#include "infradep/model.hpp"

namespace infradep {

/// Rate and structure parameters shared by the built-in models. All rates
/// are per unit time; the defaults are arbitrary desk-scale values.
struct ModelParams {
  double lambda_mp = 0.01;  // masked i-failure -> passive latent error
  double lambda_ma = 0.01;  // masked i-failure -> active latent error
  double lambda_s = 0.01;   // signalled i-failure
  double lambda_e = 0.02;   // e-failure
  double lambda_e2 = 0.05;  // accumulation of e-failures
  double lambda_c = 0.1;    // undue configuration change
  double lambda_k = 0.1;    // constraint of a partial i-outage on the grid
  double mu_i = 1.0;        // i-restoration
  double mu_e = 2.0;        // e-restoration
  double mu_c = 2.0;        // configuration restoration
  double rho = 0.25;        // restoration slow-down under escalation, in (0,1]
  std::int64_t K = 2;       // configuration changes tolerated before e-lost
  double lambda_cc = 0.001; // common-cause failure
  double p8 = 0.5;          // share of common-cause failures ending in e-lost
  double lambda_ap = 0.005; // passive deceptive attack
  double lambda_aa = 0.005; // active deceptive attack
  double lambda_pa = 0.005; // perceptible attack
  double lambda_oc = 0.1;   // operator configuration change under deception
  double lambda_ic = 0.1;   // configuration change by the compromised infrastructure
  double lambda_d = 0.5;    // attack detection

  static const std::vector<std::string_view>& names() {
    static const std::vector<std::string_view> n = {
        "lambda_mp", "lambda_ma", "lambda_s", "lambda_e",  "lambda_e2", "lambda_c",  "lambda_k",
        "mu_i",      "mu_e",      "mu_c",     "rho",       "K",         "lambda_cc", "p8",
        "lambda_ap", "lambda_aa", "lambda_pa", "lambda_oc", "lambda_ic", "lambda_d"};
    return n;
  }

  static bool has(std::string_view name) {
    for (auto n : names())
      if (n == name) return true;
    return false;
  }

  /// Overrides one field by name. Throws INVALID_PARAM for unknown names or a
  /// non-integral K; range checks happen in validate().
  void set(std::string_view name, double value) {
    if (name == "K") {
      if (!std::isfinite(value) || value != std::floor(value) || std::fabs(value) > 1e6)
        throw Error(ErrorCode::InvalidParam, "K must be an integer");
      K = static_cast<std::int64_t>(value);
      return;
    }
    double* field = slot(name);
    if (!field) throw Error(ErrorCode::InvalidParam, "unknown parameter '" + std::string(name) + "'");
    *field = value;
  }

  double get(std::string_view name) const {
    if (name == "K") return static_cast<double>(K);
    const double* field = const_cast<ModelParams*>(this)->slot(name);
    if (!field) throw Error(ErrorCode::InvalidParam, "unknown parameter '" + std::string(name) + "'");
    return *field;
  }

  void validate() const {
    for (auto n : names()) {
      if (n == "K" || n == "rho" || n == "p8") continue;
      const double v = get(n);
      if (!std::isfinite(v) || v <= 0.0)
        throw Error(ErrorCode::InvalidParam, std::string(n) + " must be a positive rate, got " + format_number(v));
    }
    if (!(rho > 0.0 && rho <= 1.0)) throw Error(ErrorCode::InvalidParam, "rho must lie in (0,1], got " + format_number(rho));
    if (!(p8 >= 0.0 && p8 <= 1.0)) throw Error(ErrorCode::InvalidParam, "p8 must lie in [0,1], got " + format_number(p8));
    if (K < 1) throw Error(ErrorCode::InvalidParam, "K must be at least 1");
  }

 private:
  double* slot(std::string_view name) {
    if (name == "lambda_mp") return &lambda_mp;
    if (name == "lambda_ma") return &lambda_ma;
    if (name == "lambda_s") return &lambda_s;
    if (name == "lambda_e") return &lambda_e;
    if (name == "lambda_e2") return &lambda_e2;
    if (name == "lambda_c") return &lambda_c;
    if (name == "lambda_k") return &lambda_k;
    if (name == "mu_i") return &mu_i;
    if (name == "mu_e") return &mu_e;
    if (name == "mu_c") return &mu_c;
    if (name == "rho") return &rho;
    if (name == "lambda_cc") return &lambda_cc;
    if (name == "p8") return &p8;
    if (name == "lambda_ap") return &lambda_ap;
    if (name == "lambda_aa") return &lambda_aa;
    if (name == "lambda_pa") return &lambda_pa;
    if (name == "lambda_oc") return &lambda_oc;
    if (name == "lambda_ic") return &lambda_ic;
    if (name == "lambda_d") return &lambda_d;
    return nullptr;
  }
};

namespace detail {

enum class AccidentalVariant { Full, CascadingOnly, CommonCause };

inline Model build_accidental(const ModelParams& p, AccidentalVariant variant) {
  using namespace guards;
  using A = Assignment;
  p.validate();
  const bool full = variant != AccidentalVariant::CascadingOnly;

  Model m;
  m.name = variant == AccidentalVariant::Full            ? "accidental"
           : variant == AccidentalVariant::CascadingOnly ? "cascading_only"
                                                         : "common_cause";
  m.parameters = {{"lambda_mp", p.lambda_mp}, {"lambda_ma", p.lambda_ma}, {"lambda_s", p.lambda_s},
                  {"lambda_e", p.lambda_e},   {"lambda_e2", p.lambda_e2}, {"lambda_c", p.lambda_c},
                  {"lambda_k", p.lambda_k},   {"mu_i", p.mu_i},           {"mu_e", p.mu_e},
                  {"mu_c", p.mu_c},           {"rho", p.rho}};
  const bool split_cc = p.p8 > 0.0 && p.p8 < 1.0;
  if (variant == AccidentalVariant::CommonCause) {
    m.parameters.push_back({"lambda_cc", p.lambda_cc});
    if (split_cc) m.parameters.push_back({"p8", p.p8});
  }

  m.variables = {
      VariableDecl::enumeration("info", {"i_working", "passive_latent", "active_latent", "partial_i_outage", "i_weakened"},
                                "i_working"),
      VariableDecl::enumeration("elec", {"e_working", "e_weakened", "partial_e_outage", "e_lost"}, "e_working"),
      VariableDecl::counter("n_cfg", 0, p.K, 0),
  };

  auto rate = [](const char* param) { return RateExpr::parameter(param); };
  const std::int64_t K = p.K;
  auto& ts = m.transitions;

  ts.push_back(Transition::timed("masked_passive", rate("lambda_mp"), eq("info", "i_working"),
                                 {A::set("info", "passive_latent")}, {Tag::Internal}));
  ts.push_back(Transition::timed("masked_active", rate("lambda_ma"), in("info", {"i_working", "passive_latent"}),
                                 {A::set("info", "active_latent")}, {Tag::Internal}));
  ts.push_back(Transition::timed("signalled", rate("lambda_s"),
                                 full ? in("info", {"i_working", "passive_latent", "active_latent", "i_weakened"})
                                      : in("info", {"i_working", "passive_latent", "active_latent"}),
                                 {A::set("info", "partial_i_outage")}, {Tag::Internal}));
  ts.push_back(Transition::timed("i_restoration", rate("mu_i"), eq("info", "partial_i_outage"),
                                 {A::set("info", "i_working")}, {Tag::Restoration}));
  ts.push_back(Transition::timed("e_failure_normal", rate("lambda_e"),
                                 all_of({full ? in("info", {"i_working", "i_weakened"}) : eq("info", "i_working"),
                                         eq("elec", "e_working")}),
                                 {A::set("elec", "partial_e_outage")}, {Tag::Internal}));
  ts.push_back(Transition::timed("e_failure_escal_sev", rate("lambda_e"),
                                 all_of({in("info", {"passive_latent", "active_latent"}), eq("elec", "e_working")}),
                                 {A::set("elec", "e_lost")}, {Tag::Escalating}));
  ts.push_back(Transition::timed("e_failure_escal_rest", rate("lambda_e"),
                                 all_of({eq("info", "partial_i_outage"), eq("elec", "e_working")}),
                                 {A::set("elec", "partial_e_outage")}, {Tag::Escalating}));
  ts.push_back(Transition::timed("e_fail_accumulate", rate("lambda_e2"), eq("elec", "partial_e_outage"),
                                 {A::set("elec", "e_lost")}, {Tag::Internal}));
  ts.push_back(Transition::timed("cfg_change_first", rate("lambda_c"),
                                 all_of({eq("info", "active_latent"), eq("elec", "e_working"), lt("n_cfg", K)}),
                                 {A::set("elec", "e_weakened"), A::increment("n_cfg")}, {Tag::Cascading}));
  ts.push_back(Transition::timed("cfg_change_more", rate("lambda_c"),
                                 all_of({eq("info", "active_latent"), eq("elec", "e_weakened"), lt("n_cfg", K)}),
                                 {A::increment("n_cfg")}, {Tag::Cascading}));
  ts.push_back(Transition::timed("cfg_overflow", rate("lambda_c"),
                                 all_of({eq("info", "active_latent"), eq("elec", "e_weakened"), eq("n_cfg", K)}),
                                 {A::set("elec", "e_lost")}, {Tag::Cascading}));
  ts.push_back(Transition::timed("outage_constraint", rate("lambda_k"),
                                 all_of({eq("info", "partial_i_outage"), eq("elec", "e_working")}),
                                 {A::set("elec", "e_weakened")}, {Tag::Cascading}));
  ts.push_back(Transition::timed("cfg_restoration", rate("mu_c"), all_of({eq("info", "i_working"), eq("elec", "e_weakened")}),
                                 {A::set("elec", "e_working"), A::set("n_cfg", std::int64_t{0})}, {Tag::Restoration}));
  // A restored grid starts from a fresh configuration.
  ts.push_back(Transition::timed("e_restoration_fast", rate("mu_e"),
                                 all_of({in("info", {"i_working"}), in("elec", {"partial_e_outage", "e_lost"})}),
                                 {A::set("elec", "e_working"), A::set("n_cfg", std::int64_t{0})}, {Tag::Restoration}));
  ts.push_back(Transition::timed("e_restoration_slow", rate("mu_e").times(RateFactor::parameter("rho")),
                                 all_of({in("info", {"passive_latent", "active_latent", "partial_i_outage"}),
                                         in("elec", {"partial_e_outage", "e_lost"})}),
                                 {A::set("elec", "e_working"), A::set("n_cfg", std::int64_t{0})},
                                 {Tag::Restoration, Tag::Escalating}));
  if (full) {
    ts.push_back(Transition::immediate("i_weaken", 1, 1.0,
                                       all_of({eq("info", "i_working"), in("elec", {"partial_e_outage", "e_lost"})}),
                                       {A::set("info", "i_weakened")}, {Tag::Cascading}));
    ts.push_back(Transition::immediate("i_unweaken", 1, 1.0,
                                       all_of({eq("info", "i_weakened"), in("elec", {"e_working", "e_weakened"})}),
                                       {A::set("info", "i_working")}, {Tag::Restoration}));
  }

  auto state6 = all_of({eq("info", "partial_i_outage"), eq("elec", "partial_e_outage")});
  auto state8 = all_of({eq("info", "partial_i_outage"), eq("elec", "e_lost")});

  if (variant == AccidentalVariant::CommonCause) {
    auto outside = negate(any_of({state6, state8}));
    if (split_cc) {
      ts.push_back(Transition::timed("cc_to_6", rate("lambda_cc").times(RateFactor::complement(1.0, "p8")), outside,
                                     {A::set("info", "partial_i_outage"), A::set("elec", "partial_e_outage")},
                                     {Tag::CommonCause}));
      ts.push_back(Transition::timed("cc_to_8", rate("lambda_cc").times(RateFactor::parameter("p8")), outside,
                                     {A::set("info", "partial_i_outage"), A::set("elec", "e_lost")}, {Tag::CommonCause}));
    } else if (p.p8 == 0.0) {
      ts.push_back(Transition::timed("cc_to_6", rate("lambda_cc"), outside,
                                     {A::set("info", "partial_i_outage"), A::set("elec", "partial_e_outage")},
                                     {Tag::CommonCause}));
    } else {
      ts.push_back(Transition::timed("cc_to_8", rate("lambda_cc"), outside,
                                     {A::set("info", "partial_i_outage"), A::set("elec", "e_lost")}, {Tag::CommonCause}));
    }
  }

  m.labels = {
      {"state1", all_of({eq("info", "i_working"), eq("elec", "e_working")})},
      {"state2", all_of({in("info", {"passive_latent", "active_latent"}), eq("elec", "e_working")})},
      {"state3", all_of({eq("info", "active_latent"), eq("elec", "e_weakened")})},
      {"state4", all_of({eq("info", "partial_i_outage"), eq("elec", "e_weakened")})},
      {"state5", full ? all_of({eq("info", "i_weakened"), eq("elec", "partial_e_outage")})
                      : all_of({eq("info", "i_working"), eq("elec", "partial_e_outage")})},
      {"state6", state6},
      {"state7", full ? all_of({eq("info", "i_weakened"), eq("elec", "e_lost")})
                      : all_of({in("info", {"i_working", "passive_latent", "active_latent"}), eq("elec", "e_lost")})},
      {"state8", state8},
  };
  return m;
}

}  // namespace detail

/// Accidental failures of both infrastructures with cascading and
/// escalating interactions in both directions.
inline Model accidental_model(const ModelParams& p = {}) {
  return detail::build_accidental(p, detail::AccidentalVariant::Full);
}

/// Only the constraints of the information infrastructure on the
/// electricity infrastructure; no i-weakening.
inline Model cascading_only_model(const ModelParams& p = {}) {
  return detail::build_accidental(p, detail::AccidentalVariant::CascadingOnly);
}

/// The accidental model plus common-cause failures into states 6 and 8 from
/// every other state.
inline Model common_cause_model(const ModelParams& p = {}) {
  return detail::build_accidental(p, detail::AccidentalVariant::CommonCause);
}

/// Attacks on the information infrastructure, distinguishing the real and
/// the apparent (reported) status of each infrastructure.
inline Model attack_model(const ModelParams& p = {}) {
  using namespace guards;
  using A = Assignment;
  p.validate();

  Model m;
  m.name = "attack";
  m.parameters = {{"lambda_ap", p.lambda_ap}, {"lambda_aa", p.lambda_aa}, {"lambda_pa", p.lambda_pa},
                  {"lambda_oc", p.lambda_oc}, {"lambda_ic", p.lambda_ic}, {"lambda_d", p.lambda_d},
                  {"lambda_e", p.lambda_e},   {"lambda_e2", p.lambda_e2}, {"mu_i", p.mu_i},
                  {"mu_e", p.mu_e},           {"mu_c", p.mu_c},           {"rho", p.rho}};
  const std::vector<std::string> info_values = {"i_working", "partial_i_outage"};
  const std::vector<std::string> elec_values = {"e_working", "e_weakened", "partial_e_outage", "e_lost"};
  m.variables = {
      VariableDecl::enumeration("attack", {"none", "passive_dec", "active_dec", "perceptible", "detected"}, "none"),
      VariableDecl::enumeration("real_info", info_values, "i_working"),
      VariableDecl::enumeration("real_elec", elec_values, "e_working"),
      VariableDecl::enumeration("app_info", info_values, "i_working"),
      VariableDecl::enumeration("app_elec", elec_values, "e_working"),
      VariableDecl::counter("n_cfg", 0, p.K, 0),
  };

  auto rate = [](const char* param) { return RateExpr::parameter(param); };
  const std::int64_t K = p.K;
  auto deceived = in("attack", {"passive_dec", "active_dec"});
  auto undeceived = in("attack", {"none", "perceptible", "detected"});
  auto& ts = m.transitions;

  ts.push_back(Transition::timed("passive_attack", rate("lambda_ap"), eq("attack", "none"),
                                 {A::set("attack", "passive_dec"), A::set("real_info", "partial_i_outage"),
                                  A::set("app_elec", "partial_e_outage")},
                                 {Tag::Attack}));
  ts.push_back(Transition::timed("operator_cfg", rate("lambda_oc"),
                                 all_of({eq("attack", "passive_dec"), in("real_elec", {"e_working", "e_weakened"}), lt("n_cfg", K)}),
                                 {A::set("real_elec", "e_weakened"), A::set("app_elec", "e_weakened"), A::increment("n_cfg")},
                                 {Tag::Attack, Tag::Cascading}));
  ts.push_back(Transition::timed("operator_overflow", rate("lambda_oc"),
                                 all_of({eq("attack", "passive_dec"), eq("real_elec", "e_weakened"), eq("n_cfg", K)}),
                                 {A::set("real_elec", "e_lost"), A::set("app_elec", "partial_e_outage")},
                                 {Tag::Attack, Tag::Cascading}));
  ts.push_back(Transition::timed("active_attack", rate("lambda_aa"), eq("attack", "none"),
                                 {A::set("attack", "active_dec"), A::set("real_info", "partial_i_outage")}, {Tag::Attack}));
  ts.push_back(Transition::timed("ii_cfg", rate("lambda_ic"),
                                 all_of({eq("attack", "active_dec"), in("real_elec", {"e_working", "e_weakened"}), lt("n_cfg", K)}),
                                 {A::set("real_elec", "e_weakened"), A::increment("n_cfg")}, {Tag::Attack, Tag::Cascading}));
  ts.push_back(Transition::timed("ii_overflow", rate("lambda_ic"),
                                 all_of({eq("attack", "active_dec"), eq("real_elec", "e_weakened"), eq("n_cfg", K)}),
                                 {A::set("real_elec", "e_lost"), A::set("app_elec", "partial_e_outage")},
                                 {Tag::Attack, Tag::Cascading}));
  // Detection copies the real electricity status into the apparent one; one
  // transition per real_elec value.
  for (const auto& e : elec_values) {
    ts.push_back(Transition::timed("detection_" + e, rate("lambda_d"), all_of({deceived, eq("real_elec", e)}),
                                   {A::set("attack", "detected"), A::set("app_info", "partial_i_outage"), A::set("app_elec", e)},
                                   {Tag::Attack}));
  }
  ts.push_back(Transition::timed("perceptible_attack", rate("lambda_pa"), eq("attack", "none"),
                                 {A::set("attack", "perceptible"), A::set("real_info", "partial_i_outage"),
                                  A::set("app_info", "partial_i_outage")},
                                 {Tag::Attack}));
  ts.push_back(Transition::timed("e_failure", rate("lambda_e"), all_of({eq("real_elec", "e_working"), undeceived}),
                                 {A::set("real_elec", "partial_e_outage"), A::set("app_elec", "partial_e_outage")},
                                 {Tag::Internal}));
  ts.push_back(Transition::timed("e_failure_deceived", rate("lambda_e"), all_of({eq("real_elec", "e_working"), deceived}),
                                 {A::set("real_elec", "partial_e_outage")}, {Tag::Internal}));
  ts.push_back(Transition::timed("e_fail_accumulate", rate("lambda_e2"), all_of({eq("real_elec", "partial_e_outage"), undeceived}),
                                 {A::set("real_elec", "e_lost"), A::set("app_elec", "e_lost")}, {Tag::Internal}));
  ts.push_back(Transition::timed("e_fail_accumulate_deceived", rate("lambda_e2"),
                                 all_of({eq("real_elec", "partial_e_outage"), deceived}), {A::set("real_elec", "e_lost")},
                                 {Tag::Internal}));
  ts.push_back(Transition::timed("i_restoration", rate("mu_i"),
                                 all_of({in("attack", {"detected", "perceptible"}), eq("real_info", "partial_i_outage")}),
                                 {A::set("attack", "none"), A::set("real_info", "i_working"), A::set("app_info", "i_working")},
                                 {Tag::Restoration}));
  ts.push_back(Transition::timed("cfg_restoration", rate("mu_c"),
                                 all_of({eq("attack", "none"), eq("real_info", "i_working"), eq("real_elec", "e_weakened")}),
                                 {A::set("real_elec", "e_working"), A::set("app_elec", "e_working"), A::set("n_cfg", std::int64_t{0})},
                                 {Tag::Restoration}));
  ts.push_back(Transition::timed("e_restoration_fast", rate("mu_e"),
                                 all_of({in("real_elec", {"partial_e_outage", "e_lost"}), undeceived, eq("real_info", "i_working")}),
                                 {A::set("real_elec", "e_working"), A::set("app_elec", "e_working"), A::set("n_cfg", std::int64_t{0})},
                                 {Tag::Restoration}));
  ts.push_back(Transition::timed("e_restoration_slow", rate("mu_e").times(RateFactor::parameter("rho")),
                                 all_of({in("real_elec", {"partial_e_outage", "e_lost"}), undeceived,
                                         eq("real_info", "partial_i_outage")}),
                                 {A::set("real_elec", "e_working"), A::set("app_elec", "e_working"), A::set("n_cfg", std::int64_t{0})},
                                 {Tag::Restoration, Tag::Escalating}));

  // app != real cannot be written as a variable-vs-literal comparison;
  // expand it over the shared value sets.
  std::vector<Guard> differ;
  for (const auto& v : info_values) differ.push_back(all_of({eq("real_info", v), ne("app_info", v)}));
  for (const auto& v : elec_values) differ.push_back(all_of({eq("real_elec", v), ne("app_elec", v)}));

  m.labels = {
      {"state1", all_of({eq("attack", "none"), eq("real_info", "i_working"), eq("real_elec", "e_working")})},
      {"state2", eq("attack", "passive_dec")},
      {"state3", eq("attack", "active_dec")},
      {"state4", eq("attack", "detected")},
      {"state8", all_of({eq("real_elec", "e_lost"), eq("app_elec", "partial_e_outage"), deceived})},
      {"deceived", any_of(std::move(differ))},
  };
  return m;
}

struct BuiltinInfo {
  std::string_view name;
  std::string_view description;
};

inline const std::vector<BuiltinInfo>& builtin_models() {
  static const std::vector<BuiltinInfo> list = {
      {"accidental", "accidental i- and e-failures with cascading and escalating interactions"},
      {"cascading-only", "only constraints of the information infrastructure on the electricity infrastructure"},
      {"common-cause", "accidental model plus common-cause failures into states 6 and 8"},
      {"attack", "malicious attacks with real versus apparent infrastructure status"},
  };
  return list;
}

/// Builds a built-in model by its CLI name; nullopt for unknown names.
inline std::optional<Model> builtin_model(std::string_view name, const ModelParams& p = {}) {
  if (name == "accidental") return accidental_model(p);
  if (name == "cascading-only") return cascading_only_model(p);
  if (name == "common-cause") return common_cause_model(p);
  if (name == "attack") return attack_model(p);
  return std::nullopt;
}

}  // namespace infradep
