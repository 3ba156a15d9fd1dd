#pragma once

// Model formalism: finite guarded stochastic transition systems with timed
// (exponential) and immediate (priority/weight) transitions, plus the
// validation pass and the compiled executable form used by every analysis.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "infradep/error.hpp"
#include "infradep/number_format.hpp"

namespace infradep {

using Value = std::int32_t;

/// An enum value name or an integer constant, as written in guards and updates.
using Literal = std::variant<std::int64_t, std::string>;

inline std::string literal_text(const Literal& lit) {
  if (const auto* i = std::get_if<std::int64_t>(&lit)) return std::to_string(*i);
  return std::get<std::string>(lit);
}

// ---------------------------------------------------------------------------
// Declarative model
// ---------------------------------------------------------------------------

struct VariableDecl {
  enum class Kind { Enumeration, Counter };

  std::string name;
  Kind kind = Kind::Enumeration;
  std::vector<std::string> values;  // enumeration only
  std::int64_t lo = 0;              // counter only
  std::int64_t hi = 0;
  Literal init;

  static VariableDecl enumeration(std::string name, std::vector<std::string> values,
                                  std::string init) {
    VariableDecl v;
    v.name = std::move(name);
    v.kind = Kind::Enumeration;
    v.values = std::move(values);
    v.init = std::move(init);
    return v;
  }

  static VariableDecl counter(std::string name, std::int64_t lo, std::int64_t hi,
                              std::int64_t init) {
    VariableDecl v;
    v.name = std::move(name);
    v.kind = Kind::Counter;
    v.lo = lo;
    v.hi = hi;
    v.init = init;
    return v;
  }

  bool is_enum() const { return kind == Kind::Enumeration; }

  friend bool operator==(const VariableDecl&, const VariableDecl&) = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

inline std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

/// Boolean expression over variables. And/Or nodes are n-ary and keep the
/// exact shape they were built with, so structural equality is meaningful.
struct Guard {
  enum class Kind { True, False, Compare, Not, And, Or };

  Kind kind = Kind::True;
  std::string var;
  CmpOp op = CmpOp::Eq;
  Literal literal;
  std::vector<Guard> children;

  friend bool operator==(const Guard&, const Guard&) = default;
};

namespace guards {

inline Guard always() { return Guard{}; }

inline Guard never() {
  Guard g;
  g.kind = Guard::Kind::False;
  return g;
}

inline Guard compare(std::string var, CmpOp op, Literal lit) {
  Guard g;
  g.kind = Guard::Kind::Compare;
  g.var = std::move(var);
  g.op = op;
  g.literal = std::move(lit);
  return g;
}

inline Guard eq(std::string var, std::string value) {
  return compare(std::move(var), CmpOp::Eq, std::move(value));
}
inline Guard ne(std::string var, std::string value) {
  return compare(std::move(var), CmpOp::Ne, std::move(value));
}
inline Guard eq(std::string var, std::int64_t value) { return compare(std::move(var), CmpOp::Eq, value); }
inline Guard lt(std::string var, std::int64_t value) { return compare(std::move(var), CmpOp::Lt, value); }
inline Guard le(std::string var, std::int64_t value) { return compare(std::move(var), CmpOp::Le, value); }
inline Guard gt(std::string var, std::int64_t value) { return compare(std::move(var), CmpOp::Gt, value); }
inline Guard ge(std::string var, std::int64_t value) { return compare(std::move(var), CmpOp::Ge, value); }

inline Guard negate(Guard inner) {
  Guard g;
  g.kind = Guard::Kind::Not;
  g.children.push_back(std::move(inner));
  return g;
}

inline Guard all_of(std::vector<Guard> parts) {
  if (parts.size() == 1) return std::move(parts.front());
  Guard g;
  g.kind = Guard::Kind::And;
  g.children = std::move(parts);
  return g;
}

inline Guard any_of(std::vector<Guard> parts) {
  if (parts.size() == 1) return std::move(parts.front());
  Guard g;
  g.kind = Guard::Kind::Or;
  g.children = std::move(parts);
  return g;
}

// var ∈ {values}, written as a disjunction of equalities.
inline Guard in(const std::string& var, std::initializer_list<std::string_view> values) {
  std::vector<Guard> parts;
  for (auto v : values) parts.push_back(eq(var, std::string(v)));
  return any_of(std::move(parts));
}

}  // namespace guards

struct Assignment {
  enum class Kind { Set, Increment, Decrement };

  std::string target;
  Kind kind = Kind::Set;
  Literal value;       // Set
  std::string source;  // Increment / Decrement

  static Assignment set(std::string target, Literal value) {
    Assignment a;
    a.target = std::move(target);
    a.kind = Kind::Set;
    a.value = std::move(value);
    return a;
  }
  static Assignment increment(std::string target) {
    Assignment a;
    a.source = target;
    a.target = std::move(target);
    a.kind = Kind::Increment;
    return a;
  }
  static Assignment decrement(std::string target) {
    Assignment a;
    a.source = target;
    a.target = std::move(target);
    a.kind = Kind::Decrement;
    return a;
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// One multiplicative factor of a rate: a literal, a parameter, or
/// `(constant - parameter)`.
struct RateFactor {
  enum class Kind { Literal, Parameter, Complement };

  Kind kind = Kind::Literal;
  double value = 1.0;
  std::string param;

  static RateFactor literal(double v) { return RateFactor{Kind::Literal, v, {}}; }
  static RateFactor parameter(std::string p) { return RateFactor{Kind::Parameter, 1.0, std::move(p)}; }
  static RateFactor complement(double c, std::string p) {
    return RateFactor{Kind::Complement, c, std::move(p)};
  }

  friend bool operator==(const RateFactor&, const RateFactor&) = default;
};

struct RateExpr {
  std::vector<RateFactor> factors;

  static RateExpr literal(double v) { return RateExpr{{RateFactor::literal(v)}}; }
  static RateExpr parameter(std::string p) { return RateExpr{{RateFactor::parameter(std::move(p))}}; }

  RateExpr times(RateFactor f) const {
    RateExpr r = *this;
    r.factors.push_back(std::move(f));
    return r;
  }

  friend bool operator==(const RateExpr&, const RateExpr&) = default;
};

enum class Tag : std::uint8_t { Cascading, Escalating, CommonCause, Restoration, Attack, Internal };

inline constexpr std::array<Tag, 6> kAllTags = {Tag::Cascading, Tag::Escalating, Tag::CommonCause,
                                                Tag::Restoration, Tag::Attack, Tag::Internal};

inline std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::Cascading: return "cascading";
    case Tag::Escalating: return "escalating";
    case Tag::CommonCause: return "common_cause";
    case Tag::Restoration: return "restoration";
    case Tag::Attack: return "attack";
    case Tag::Internal: return "internal";
  }
  return "?";
}

inline std::optional<Tag> tag_from_string(std::string_view name) {
  for (Tag t : kAllTags)
    if (to_string(t) == name) return t;
  return std::nullopt;
}

class TagSet {
 public:
  TagSet() = default;
  TagSet(std::initializer_list<Tag> tags) {
    for (Tag t : tags) insert(t);
  }
  void insert(Tag t) { bits_ |= bit(t); }
  bool contains(Tag t) const { return (bits_ & bit(t)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<Tag> list() const {
    std::vector<Tag> out;
    for (Tag t : kAllTags)
      if (contains(t)) out.push_back(t);
    return out;
  }
  friend bool operator==(const TagSet&, const TagSet&) = default;

 private:
  static std::uint8_t bit(Tag t) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t)); }
  std::uint8_t bits_ = 0;
};

struct Transition {
  enum class Kind { Timed, Immediate };

  std::string name;
  Kind kind = Kind::Timed;
  RateExpr rate;               // timed
  std::int64_t priority = 0;   // immediate
  double weight = 1.0;         // immediate
  Guard guard;
  std::vector<Assignment> update;
  TagSet tags;

  static Transition timed(std::string name, RateExpr rate, Guard guard, std::vector<Assignment> update,
                          TagSet tags = {}) {
    Transition t;
    t.name = std::move(name);
    t.kind = Kind::Timed;
    t.rate = std::move(rate);
    t.guard = std::move(guard);
    t.update = std::move(update);
    t.tags = tags;
    return t;
  }

  static Transition immediate(std::string name, std::int64_t priority, double weight, Guard guard,
                              std::vector<Assignment> update, TagSet tags = {}) {
    Transition t;
    t.name = std::move(name);
    t.kind = Kind::Immediate;
    t.priority = priority;
    t.weight = weight;
    t.guard = std::move(guard);
    t.update = std::move(update);
    t.tags = tags;
    return t;
  }

  bool is_timed() const { return kind == Kind::Timed; }

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct Label {
  std::string name;
  Guard predicate;
  friend bool operator==(const Label&, const Label&) = default;
};

struct Parameter {
  std::string name;
  double value = 0.0;
  friend bool operator==(const Parameter&, const Parameter&) = default;
};

struct Model {
  std::string name;
  std::vector<Parameter> parameters;
  std::vector<VariableDecl> variables;
  std::vector<Transition> transitions;
  std::vector<Label> labels;

  const Parameter* find_parameter(std::string_view n) const {
    for (const auto& p : parameters)
      if (p.name == n) return &p;
    return nullptr;
  }
  Parameter* find_parameter(std::string_view n) {
    for (auto& p : parameters)
      if (p.name == n) return &p;
    return nullptr;
  }
  const VariableDecl* find_variable(std::string_view n) const {
    for (const auto& v : variables)
      if (v.name == n) return &v;
    return nullptr;
  }
  const Transition* find_transition(std::string_view n) const {
    for (const auto& t : transitions)
      if (t.name == n) return &t;
    return nullptr;
  }
  Transition* find_transition(std::string_view n) {
    for (auto& t : transitions)
      if (t.name == n) return &t;
    return nullptr;
  }
  const Label* find_label(std::string_view n) const {
    for (const auto& l : labels)
      if (l.name == n) return &l;
    return nullptr;
  }

  friend bool operator==(const Model&, const Model&) = default;
};

/// One value per declared variable, in declaration order. Enum variables
/// hold the index of their value; counters hold the integer itself.
struct StateVector {
  std::vector<Value> values;

  friend bool operator==(const StateVector&, const StateVector&) = default;
  friend auto operator<=>(const StateVector&, const StateVector&) = default;
};

struct StateVectorHash {
  std::size_t operator()(const StateVector& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Value v : s.values) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 0x100000001b3ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 14> kKeywords = {
    "model", "param", "var",  "init", "timed", "immediate", "rate",
    "prio",  "weight", "when", "tags", "label", "true",      "false"};

inline bool is_keyword(std::string_view s) {
  return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) return false;
  for (char c : s)
    if (!alpha(c) && !digit(c)) return false;
  return !is_keyword(s);
}

/// 1-based line/column, byte offset and byte length in the source text.
struct SourceSpan {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t offset = 0;
  std::size_t length = 0;
  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class Severity { Error, Warning };

enum class IssueCode {
  DuplicateName,
  UndeclaredIdent,
  TypeMismatch,
  InvalidIdentifier,
  EmptyEnum,
  BadRange,
  BadInit,
  InvalidParam,
  InvalidRate,
  InvalidWeight,
  InvalidPriority,
  NoTransitions,
  DuplicateAssignment,
  OutOfDomainUpdate,
  UnsatisfiableGuard,
};

inline std::string_view to_string(IssueCode c) {
  switch (c) {
    case IssueCode::DuplicateName: return "DUPLICATE_NAME";
    case IssueCode::UndeclaredIdent: return "UNDECLARED_IDENT";
    case IssueCode::TypeMismatch: return "TYPE_MISMATCH";
    case IssueCode::InvalidIdentifier: return "INVALID_IDENTIFIER";
    case IssueCode::EmptyEnum: return "EMPTY_ENUM";
    case IssueCode::BadRange: return "BAD_RANGE";
    case IssueCode::BadInit: return "BAD_INIT";
    case IssueCode::InvalidParam: return "INVALID_PARAM";
    case IssueCode::InvalidRate: return "INVALID_RATE";
    case IssueCode::InvalidWeight: return "INVALID_WEIGHT";
    case IssueCode::InvalidPriority: return "INVALID_PRIORITY";
    case IssueCode::NoTransitions: return "NO_TRANSITIONS";
    case IssueCode::DuplicateAssignment: return "DUPLICATE_ASSIGNMENT";
    case IssueCode::OutOfDomainUpdate: return "OUT_OF_DOMAIN_UPDATE";
    case IssueCode::UnsatisfiableGuard: return "UNSATISFIABLE_GUARD";
  }
  return "?";
}

enum class ItemKind { Model, Parameter, Variable, Transition, Label };

enum class ItemPart { Whole, Name, Value, Init, Domain, Rate, Weight, Priority, Guard, Update };

/// Where inside the model an issue sits. `path` descends into the part:
/// child indices for guards, the assignment index for updates, the factor
/// index for rates, the value index for enum domains. `literal` selects the
/// right-hand side of a comparison or assignment instead of its variable.
struct Locus {
  ItemKind kind = ItemKind::Model;
  std::size_t index = 0;
  ItemPart part = ItemPart::Whole;
  std::vector<std::size_t> path;
  bool literal = false;
};

struct Issue {
  Severity severity = Severity::Error;
  IssueCode code = IssueCode::InvalidParam;
  std::string message;
  Locus locus;
  std::optional<SourceSpan> span;
};

struct ValidationReport {
  std::vector<Issue> issues;

  bool ok() const { return error_count() == 0; }
  std::size_t error_count() const {
    return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(),
                                                  [](const Issue& i) { return i.severity == Severity::Error; }));
  }
  bool has(IssueCode code) const {
    return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) { return i.code == code; });
  }
};

class ModelError : public Error {
 public:
  explicit ModelError(ValidationReport report)
      : Error(ErrorCode::InvalidModel, summarize(report)), report_(std::move(report)) {}

  const ValidationReport& report() const noexcept { return report_; }

 private:
  static std::string summarize(const ValidationReport& r) {
    for (const auto& i : r.issues)
      if (i.severity == Severity::Error) return std::string(to_string(i.code)) + " " + i.message;
    return "model is invalid";
  }
  ValidationReport report_;
};

// Executable guard: variables resolved to indices, enum literals to value
// indices.
struct CompiledGuard {
  Guard::Kind kind = Guard::Kind::True;
  std::size_t var = 0;
  CmpOp op = CmpOp::Eq;
  Value value = 0;
  std::vector<CompiledGuard> children;

  bool eval(const std::vector<Value>& s) const {
    switch (kind) {
      case Guard::Kind::True: return true;
      case Guard::Kind::False: return false;
      case Guard::Kind::Compare: {
        const Value x = s[var];
        switch (op) {
          case CmpOp::Eq: return x == value;
          case CmpOp::Ne: return x != value;
          case CmpOp::Lt: return x < value;
          case CmpOp::Le: return x <= value;
          case CmpOp::Gt: return x > value;
          case CmpOp::Ge: return x >= value;
        }
        return false;
      }
      case Guard::Kind::Not: return !children.front().eval(s);
      case Guard::Kind::And:
        for (const auto& c : children)
          if (!c.eval(s)) return false;
        return true;
      case Guard::Kind::Or:
        for (const auto& c : children)
          if (c.eval(s)) return true;
        return false;
    }
    return false;
  }

  void collect_vars(std::vector<std::size_t>& out) const {
    if (kind == Guard::Kind::Compare && std::find(out.begin(), out.end(), var) == out.end())
      out.push_back(var);
    for (const auto& c : children) c.collect_vars(out);
  }
};

struct CompiledAssignment {
  std::size_t target = 0;
  Assignment::Kind kind = Assignment::Kind::Set;
  Value value = 0;
  std::size_t source = 0;
};

namespace detail {

struct Domain {
  Value lo = 0;
  Value hi = 0;
};

inline Domain domain_of(const VariableDecl& v) {
  if (v.is_enum()) return {0, static_cast<Value>(v.values.size()) - 1};
  return {static_cast<Value>(v.lo), static_cast<Value>(v.hi)};
}

inline std::optional<std::size_t> variable_index(const Model& m, std::string_view name) {
  for (std::size_t i = 0; i < m.variables.size(); ++i)
    if (m.variables[i].name == name) return i;
  return std::nullopt;
}

inline std::optional<Value> enum_value_index(const VariableDecl& v, std::string_view value) {
  for (std::size_t i = 0; i < v.values.size(); ++i)
    if (v.values[i] == value) return static_cast<Value>(i);
  return std::nullopt;
}

// Variables whose declarations are broken are skipped by later checks so a
// single mistake does not cascade into unrelated reports.
class Checker {
 public:
  Checker(const Model& m, std::vector<Issue>* issues, const std::vector<bool>* usable)
      : model_(m), issues_(issues), usable_(usable) {}

  std::optional<CompiledGuard> guard(const Guard& g, Locus locus) {
    CompiledGuard out;
    out.kind = g.kind;
    switch (g.kind) {
      case Guard::Kind::True:
      case Guard::Kind::False:
        return out;
      case Guard::Kind::Compare: {
        auto idx = variable_index(model_, g.var);
        if (!idx) {
          report(IssueCode::UndeclaredIdent, "undeclared variable '" + g.var + "'", locus);
          return std::nullopt;
        }
        if (usable_ && !(*usable_)[*idx]) return std::nullopt;
        const auto& decl = model_.variables[*idx];
        out.var = *idx;
        out.op = g.op;
        Locus lit_locus = locus;
        lit_locus.literal = true;
        if (decl.is_enum()) {
          const auto* name = std::get_if<std::string>(&g.literal);
          if (g.op != CmpOp::Eq && g.op != CmpOp::Ne) {
            report(IssueCode::TypeMismatch,
                   "enum variable '" + g.var + "' only supports == and !=", locus);
            return std::nullopt;
          }
          if (!name) {
            report(IssueCode::TypeMismatch,
                   "enum variable '" + g.var + "' compared with integer " + literal_text(g.literal), lit_locus);
            return std::nullopt;
          }
          auto vi = enum_value_index(decl, *name);
          if (!vi) {
            report(IssueCode::TypeMismatch,
                   "'" + *name + "' is not a value of enum variable '" + g.var + "'", lit_locus);
            return std::nullopt;
          }
          out.value = *vi;
        } else {
          const auto* num = std::get_if<std::int64_t>(&g.literal);
          if (!num) {
            report(IssueCode::TypeMismatch,
                   "counter '" + g.var + "' compared with name '" + literal_text(g.literal) + "'", lit_locus);
            return std::nullopt;
          }
          // Clamp into Value range; comparisons outside the domain keep their truth value.
          const std::int64_t clamped = std::clamp<std::int64_t>(
              *num, std::numeric_limits<Value>::min() / 2, std::numeric_limits<Value>::max() / 2);
          out.value = static_cast<Value>(clamped);
        }
        return out;
      }
      case Guard::Kind::Not:
      case Guard::Kind::And:
      case Guard::Kind::Or: {
        bool ok = true;
        if (g.children.empty() || (g.kind == Guard::Kind::Not && g.children.size() != 1)) {
          report(IssueCode::TypeMismatch, "malformed boolean node", locus);
          return std::nullopt;
        }
        for (std::size_t i = 0; i < g.children.size(); ++i) {
          Locus child = locus;
          child.path.push_back(i);
          auto c = guard(g.children[i], child);
          if (!c) {
            ok = false;
            continue;
          }
          out.children.push_back(std::move(*c));
        }
        if (!ok) return std::nullopt;
        return out;
      }
    }
    return std::nullopt;
  }

  void report(IssueCode code, std::string msg, Locus locus, Severity sev = Severity::Error) {
    if (issues_) issues_->push_back(Issue{sev, code, std::move(msg), std::move(locus), std::nullopt});
  }

 private:
  const Model& model_;
  std::vector<Issue>* issues_;
  const std::vector<bool>* usable_;
};

inline std::optional<double> evaluate_rate(const RateExpr& r, const Model& m) {
  double value = 1.0;
  for (const auto& f : r.factors) {
    switch (f.kind) {
      case RateFactor::Kind::Literal: value *= f.value; break;
      case RateFactor::Kind::Parameter: {
        const auto* p = m.find_parameter(f.param);
        if (!p) return std::nullopt;
        value *= p->value;
        break;
      }
      case RateFactor::Kind::Complement: {
        const auto* p = m.find_parameter(f.param);
        if (!p) return std::nullopt;
        value *= f.value - p->value;
        break;
      }
    }
  }
  return value;
}

// Exact satisfiability by enumerating the variables the guard reads.
// `fixed` pins one variable to a value. Guards reading so many variables that
// enumeration exceeds the budget are conservatively reported satisfiable.
inline bool satisfiable(const CompiledGuard& g, const std::vector<Domain>& domains,
                        std::optional<std::pair<std::size_t, Value>> fixed = std::nullopt) {
  std::vector<std::size_t> vars;
  g.collect_vars(vars);
  if (fixed) vars.erase(std::remove(vars.begin(), vars.end(), fixed->first), vars.end());
  double product = 1.0;
  for (auto v : vars) product *= static_cast<double>(domains[v].hi - domains[v].lo + 1);
  if (product > double(1 << 22)) return true;

  std::vector<Value> s(domains.size(), 0);
  for (std::size_t i = 0; i < domains.size(); ++i) s[i] = domains[i].lo;
  if (fixed) s[fixed->first] = fixed->second;
  std::function<bool(std::size_t)> rec = [&](std::size_t k) -> bool {
    if (k == vars.size()) return g.eval(s);
    const auto v = vars[k];
    for (Value x = domains[v].lo; x <= domains[v].hi; ++x) {
      s[v] = x;
      if (rec(k + 1)) return true;
    }
    return false;
  };
  return rec(0);
}

}  // namespace detail

/// Checks every structural invariant of the model and runs interval analysis
/// on counter updates. Never throws; all findings are report entries.
inline ValidationReport validate_model(const Model& m) {
  ValidationReport report;
  auto& issues = report.issues;
  auto add = [&](IssueCode code, std::string msg, Locus locus, Severity sev = Severity::Error) {
    issues.push_back(Issue{sev, code, std::move(msg), std::move(locus), std::nullopt});
  };
  auto item = [](ItemKind k, std::size_t i, ItemPart part = ItemPart::Whole) {
    Locus l;
    l.kind = k;
    l.index = i;
    l.part = part;
    return l;
  };

  if (!is_identifier(m.name)) add(IssueCode::InvalidIdentifier, "invalid model name '" + m.name + "'", item(ItemKind::Model, 0, ItemPart::Name));

  auto check_names = [&](ItemKind kind, std::size_t count, auto name_of) {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < count; ++i) {
      const std::string& n = name_of(i);
      if (!is_identifier(n)) add(IssueCode::InvalidIdentifier, "invalid identifier '" + n + "'", item(kind, i, ItemPart::Name));
      if (!seen.emplace(n, i).second) add(IssueCode::DuplicateName, "duplicate name '" + n + "'", item(kind, i, ItemPart::Name));
    }
  };
  check_names(ItemKind::Parameter, m.parameters.size(), [&](std::size_t i) -> const std::string& { return m.parameters[i].name; });
  check_names(ItemKind::Variable, m.variables.size(), [&](std::size_t i) -> const std::string& { return m.variables[i].name; });
  check_names(ItemKind::Transition, m.transitions.size(), [&](std::size_t i) -> const std::string& { return m.transitions[i].name; });
  check_names(ItemKind::Label, m.labels.size(), [&](std::size_t i) -> const std::string& { return m.labels[i].name; });

  for (std::size_t i = 0; i < m.parameters.size(); ++i) {
    const double v = m.parameters[i].value;
    if (!std::isfinite(v) || v <= 0.0)
      add(IssueCode::InvalidParam, "parameter '" + m.parameters[i].name + "' must be a positive finite number, got " + format_number(v),
          item(ItemKind::Parameter, i, ItemPart::Value));
  }

  // Variables
  std::vector<bool> usable(m.variables.size(), true);
  std::vector<detail::Domain> domains(m.variables.size());
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    const auto& v = m.variables[i];
    if (v.is_enum()) {
      if (v.values.empty()) {
        add(IssueCode::EmptyEnum, "enum variable '" + v.name + "' has no values", item(ItemKind::Variable, i, ItemPart::Domain));
        usable[i] = false;
        continue;
      }
      std::unordered_map<std::string, std::size_t> seen;
      for (std::size_t k = 0; k < v.values.size(); ++k) {
        Locus l = item(ItemKind::Variable, i, ItemPart::Domain);
        l.path = {k};
        if (!is_identifier(v.values[k])) add(IssueCode::InvalidIdentifier, "invalid enum value '" + v.values[k] + "'", l);
        if (!seen.emplace(v.values[k], k).second) add(IssueCode::DuplicateName, "duplicate enum value '" + v.values[k] + "'", l);
      }
      const auto* init = std::get_if<std::string>(&v.init);
      if (!init) {
        add(IssueCode::TypeMismatch, "enum variable '" + v.name + "' initialised with an integer", item(ItemKind::Variable, i, ItemPart::Init));
        usable[i] = false;
      } else if (!detail::enum_value_index(v, *init)) {
        add(IssueCode::TypeMismatch, "'" + *init + "' is not a value of enum variable '" + v.name + "'", item(ItemKind::Variable, i, ItemPart::Init));
        usable[i] = false;
      }
    } else {
      constexpr std::int64_t kMin = std::numeric_limits<Value>::min() / 2;
      constexpr std::int64_t kMax = std::numeric_limits<Value>::max() / 2;
      if (v.lo > v.hi || v.lo < kMin || v.hi > kMax) {
        add(IssueCode::BadRange, "counter '" + v.name + "' has invalid range [" + std::to_string(v.lo) + ".." + std::to_string(v.hi) + "]",
            item(ItemKind::Variable, i, ItemPart::Domain));
        usable[i] = false;
        continue;
      }
      const auto* init = std::get_if<std::int64_t>(&v.init);
      if (!init) {
        add(IssueCode::TypeMismatch, "counter '" + v.name + "' initialised with a name", item(ItemKind::Variable, i, ItemPart::Init));
        usable[i] = false;
      } else if (*init < v.lo || *init > v.hi) {
        add(IssueCode::BadInit, "initial value " + std::to_string(*init) + " of '" + v.name + "' outside its range",
            item(ItemKind::Variable, i, ItemPart::Init));
        usable[i] = false;
      }
    }
    domains[i] = detail::domain_of(v);
  }

  detail::Checker checker(m, &issues, &usable);

  if (m.transitions.empty()) add(IssueCode::NoTransitions, "model declares no transitions", item(ItemKind::Model, 0));

  for (std::size_t ti = 0; ti < m.transitions.size(); ++ti) {
    const auto& t = m.transitions[ti];
    if (t.is_timed()) {
      bool factors_ok = !t.rate.factors.empty();
      for (std::size_t k = 0; k < t.rate.factors.size(); ++k) {
        const auto& f = t.rate.factors[k];
        Locus l = item(ItemKind::Transition, ti, ItemPart::Rate);
        l.path = {k};
        if (f.kind != RateFactor::Kind::Parameter && !std::isfinite(f.value)) {
          add(IssueCode::InvalidRate, "non-finite rate constant", l);
          factors_ok = false;
        }
        if (f.kind != RateFactor::Kind::Literal && !m.find_parameter(f.param)) {
          add(IssueCode::UndeclaredIdent, "undeclared parameter '" + f.param + "'", l);
          factors_ok = false;
        }
      }
      if (factors_ok) {
        auto r = detail::evaluate_rate(t.rate, m);
        if (!r || !std::isfinite(*r) || *r <= 0.0)
          add(IssueCode::InvalidRate, "rate of '" + t.name + "' must be positive, got " + format_number(r.value_or(0.0)),
              item(ItemKind::Transition, ti, ItemPart::Rate));
      } else if (t.rate.factors.empty()) {
        add(IssueCode::InvalidRate, "timed transition '" + t.name + "' has no rate", item(ItemKind::Transition, ti, ItemPart::Rate));
      }
    } else {
      if (!std::isfinite(t.weight) || t.weight <= 0.0)
        add(IssueCode::InvalidWeight, "weight of '" + t.name + "' must be positive", item(ItemKind::Transition, ti, ItemPart::Weight));
      if (t.priority < 0)
        add(IssueCode::InvalidPriority, "priority of '" + t.name + "' must be non-negative", item(ItemKind::Transition, ti, ItemPart::Priority));
    }

    auto guard = checker.guard(t.guard, item(ItemKind::Transition, ti, ItemPart::Guard));
    if (guard && !detail::satisfiable(*guard, domains))
      add(IssueCode::UnsatisfiableGuard, "guard of '" + t.name + "' is unsatisfiable over the variable domains",
          item(ItemKind::Transition, ti, ItemPart::Guard), Severity::Warning);

    std::vector<std::size_t> assigned;
    for (std::size_t k = 0; k < t.update.size(); ++k) {
      const auto& a = t.update[k];
      Locus l = item(ItemKind::Transition, ti, ItemPart::Update);
      l.path = {k};
      Locus rhs = l;
      rhs.literal = true;
      auto target = detail::variable_index(m, a.target);
      if (!target) {
        add(IssueCode::UndeclaredIdent, "undeclared variable '" + a.target + "'", l);
        continue;
      }
      if (std::find(assigned.begin(), assigned.end(), *target) != assigned.end()) {
        add(IssueCode::DuplicateAssignment, "variable '" + a.target + "' assigned twice in '" + t.name + "'", l);
        continue;
      }
      assigned.push_back(*target);
      if (!usable[*target]) continue;
      const auto& decl = m.variables[*target];
      const auto dom = domains[*target];
      if (a.kind == Assignment::Kind::Set) {
        if (decl.is_enum()) {
          const auto* name = std::get_if<std::string>(&a.value);
          if (!name || !detail::enum_value_index(decl, *name))
            add(IssueCode::TypeMismatch, "'" + literal_text(a.value) + "' is not a value of enum variable '" + a.target + "'", rhs);
        } else {
          const auto* num = std::get_if<std::int64_t>(&a.value);
          if (!num)
            add(IssueCode::TypeMismatch, "counter '" + a.target + "' assigned a name", rhs);
          else if (*num < decl.lo || *num > decl.hi)
            add(IssueCode::OutOfDomainUpdate, "assignment '" + a.target + " := " + std::to_string(*num) + "' leaves the range", rhs);
        }
        continue;
      }
      if (decl.is_enum()) {
        add(IssueCode::TypeMismatch, "cannot increment or decrement enum variable '" + a.target + "'", l);
        continue;
      }
      auto source = detail::variable_index(m, a.source);
      if (!source) {
        add(IssueCode::UndeclaredIdent, "undeclared variable '" + a.source + "'", rhs);
        continue;
      }
      if (!usable[*source]) continue;
      if (m.variables[*source].is_enum()) {
        add(IssueCode::TypeMismatch, "cannot do arithmetic on enum variable '" + a.source + "'", rhs);
        continue;
      }
      if (!guard) continue;
      const Value delta = a.kind == Assignment::Kind::Increment ? 1 : -1;
      const auto sdom = domains[*source];
      bool escapes = false;
      for (Value v = sdom.lo; v <= sdom.hi && !escapes; ++v) {
        const Value next = v + delta;
        if (next >= dom.lo && next <= dom.hi) continue;
        // Only the boundary values can escape; each is checked against the guard.
        if (detail::satisfiable(*guard, domains, std::make_pair(*source, v))) escapes = true;
      }
      if (escapes)
        add(IssueCode::OutOfDomainUpdate,
            "update '" + a.target + " := " + a.source + (delta > 0 ? " + 1" : " - 1") + "' of '" + t.name +
                "' can leave [" + std::to_string(decl.lo) + ".." + std::to_string(decl.hi) + "] from a state satisfying its guard",
            l);
    }
  }

  for (std::size_t li = 0; li < m.labels.size(); ++li)
    checker.guard(m.labels[li].predicate, item(ItemKind::Label, li, ItemPart::Guard));

  return report;
}

// ---------------------------------------------------------------------------
// Compiled model
// ---------------------------------------------------------------------------

/// Executable view of a validated model: guards resolved to indices, rates
/// evaluated. Immutable once built; safe to share across threads.
class CompiledModel {
 public:
  explicit CompiledModel(Model model) : model_(std::move(model)) {
    ValidationReport report = validate_model(model_);
    if (!report.ok()) throw ModelError(std::move(report));
    warnings_ = std::move(report);

    for (const auto& v : model_.variables) domains_.push_back(detail::domain_of(v));
    for (const auto& v : model_.variables) {
      if (v.is_enum())
        initial_.values.push_back(*detail::enum_value_index(v, std::get<std::string>(v.init)));
      else
        initial_.values.push_back(static_cast<Value>(std::get<std::int64_t>(v.init)));
    }

    detail::Checker checker(model_, nullptr, nullptr);
    for (const auto& t : model_.transitions) {
      CompiledTransition ct;
      ct.timed = t.is_timed();
      ct.rate = ct.timed ? *detail::evaluate_rate(t.rate, model_) : 0.0;
      ct.weight = t.weight;
      ct.priority = t.priority;
      ct.guard = *checker.guard(t.guard, {});
      for (const auto& a : t.update) {
        CompiledAssignment ca;
        ca.target = *detail::variable_index(model_, a.target);
        ca.kind = a.kind;
        if (a.kind == Assignment::Kind::Set) {
          const auto& decl = model_.variables[ca.target];
          ca.value = decl.is_enum() ? *detail::enum_value_index(decl, std::get<std::string>(a.value))
                                    : static_cast<Value>(std::get<std::int64_t>(a.value));
        } else {
          ca.source = *detail::variable_index(model_, a.source);
        }
        ct.update.push_back(ca);
      }
      transitions_.push_back(std::move(ct));
      has_immediate_ = has_immediate_ || !t.is_timed();
    }
    for (const auto& l : model_.labels) labels_.push_back(*checker.guard(l.predicate, {}));
  }

  const Model& model() const { return model_; }
  const ValidationReport& warnings() const { return warnings_; }
  std::size_t num_variables() const { return model_.variables.size(); }
  std::size_t num_transitions() const { return transitions_.size(); }
  std::size_t num_labels() const { return labels_.size(); }
  bool has_immediate() const { return has_immediate_; }

  const StateVector& initial_state() const { return initial_; }

  bool in_domain(const StateVector& s) const {
    if (s.values.size() != domains_.size()) return false;
    for (std::size_t i = 0; i < domains_.size(); ++i)
      if (s.values[i] < domains_[i].lo || s.values[i] > domains_[i].hi) return false;
    return true;
  }

  bool is_timed(std::size_t t) const { return transitions_[t].timed; }
  double rate(std::size_t t) const { return transitions_[t].rate; }
  double weight(std::size_t t) const { return transitions_[t].weight; }
  std::int64_t priority(std::size_t t) const { return transitions_[t].priority; }
  const std::string& transition_name(std::size_t t) const { return model_.transitions[t].name; }

  bool guard_holds(std::size_t t, const StateVector& s) const { return transitions_[t].guard.eval(s.values); }

  /// Enabled transitions in declaration order. When any immediate transition
  /// is enabled, only the enabled immediates of maximal priority are kept.
  void enabled_transitions(const StateVector& s, std::vector<std::size_t>& out) const {
    out.clear();
    bool any_immediate = false;
    std::int64_t best = -1;
    if (has_immediate_) {
      for (std::size_t t = 0; t < transitions_.size(); ++t) {
        const auto& ct = transitions_[t];
        if (!ct.timed && ct.priority >= best && ct.guard.eval(s.values)) {
          any_immediate = true;
          best = std::max(best, ct.priority);
        }
      }
    }
    for (std::size_t t = 0; t < transitions_.size(); ++t) {
      const auto& ct = transitions_[t];
      if (any_immediate) {
        if (!ct.timed && ct.priority == best && ct.guard.eval(s.values)) out.push_back(t);
      } else if (ct.timed && ct.guard.eval(s.values)) {
        out.push_back(t);
      }
    }
  }

  std::vector<std::size_t> enabled_transitions(const StateVector& s) const {
    std::vector<std::size_t> out;
    enabled_transitions(s, out);
    return out;
  }

  /// Fires `t` in `s`. Assignments read the pre-state, so the update is atomic.
  StateVector apply_transition(const StateVector& s, std::size_t t) const {
    if (t >= transitions_.size()) throw Error(ErrorCode::InvalidArg, "transition index out of range");
    const auto& ct = transitions_[t];
    if (!ct.guard.eval(s.values))
      throw Error(ErrorCode::GuardViolation, "guard of '" + transition_name(t) + "' does not hold in " + describe(s));
    StateVector next = s;
    for (const auto& a : ct.update) {
      Value v = a.value;
      if (a.kind == Assignment::Kind::Increment) v = s.values[a.source] + 1;
      if (a.kind == Assignment::Kind::Decrement) v = s.values[a.source] - 1;
      if (v < domains_[a.target].lo || v > domains_[a.target].hi)
        throw Error(ErrorCode::OutOfDomain, "'" + transition_name(t) + "' drives '" + model_.variables[a.target].name +
                                                "' to " + std::to_string(v) + ", outside its range");
      next.values[a.target] = v;
    }
    return next;
  }

  std::optional<std::size_t> transition_index(std::string_view name) const {
    for (std::size_t i = 0; i < model_.transitions.size(); ++i)
      if (model_.transitions[i].name == name) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> label_index(std::string_view name) const {
    for (std::size_t i = 0; i < model_.labels.size(); ++i)
      if (model_.labels[i].name == name) return i;
    return std::nullopt;
  }

  bool label_holds(std::size_t label, const StateVector& s) const { return labels_[label].eval(s.values); }

  /// Compiles an ad-hoc predicate against this model's variables.
  CompiledGuard compile_predicate(const Guard& g) const {
    std::vector<Issue> issues;
    detail::Checker checker(model_, &issues, nullptr);
    auto out = checker.guard(g, {});
    if (!out) throw Error(ErrorCode::InvalidArg, issues.empty() ? "invalid predicate" : issues.front().message);
    return *out;
  }

  std::string value_name(std::size_t var, Value v) const {
    const auto& decl = model_.variables[var];
    if (decl.is_enum() && v >= 0 && static_cast<std::size_t>(v) < decl.values.size()) return decl.values[v];
    return std::to_string(v);
  }

  /// "var=value" pairs joined by `sep`.
  std::string describe(const StateVector& s, std::string_view sep = ", ") const {
    std::string out;
    for (std::size_t i = 0; i < s.values.size() && i < model_.variables.size(); ++i) {
      if (i) out += sep;
      out += model_.variables[i].name;
      out += '=';
      out += value_name(i, s.values[i]);
    }
    return out;
  }

  /// Builds a state from (variable, value-name) pairs; unnamed variables keep
  /// their initial value.
  StateVector make_state(std::initializer_list<std::pair<std::string_view, std::string_view>> assigns) const {
    StateVector s = initial_;
    for (const auto& [var, val] : assigns) {
      auto idx = detail::variable_index(model_, var);
      if (!idx) throw Error(ErrorCode::InvalidArg, "unknown variable '" + std::string(var) + "'");
      const auto& decl = model_.variables[*idx];
      if (decl.is_enum()) {
        auto vi = detail::enum_value_index(decl, val);
        if (!vi) throw Error(ErrorCode::InvalidArg, "unknown value '" + std::string(val) + "'");
        s.values[*idx] = *vi;
      } else {
        auto num = parse_number(val);
        if (!num) throw Error(ErrorCode::InvalidArg, "bad counter value '" + std::string(val) + "'");
        s.values[*idx] = static_cast<Value>(*num);
      }
    }
    return s;
  }

 private:
  struct CompiledTransition {
    bool timed = true;
    double rate = 0.0;
    double weight = 1.0;
    std::int64_t priority = 0;
    CompiledGuard guard;
    std::vector<CompiledAssignment> update;
  };

  Model model_;
  ValidationReport warnings_;
  std::vector<detail::Domain> domains_;
  StateVector initial_;
  std::vector<CompiledTransition> transitions_;
  std::vector<CompiledGuard> labels_;
  bool has_immediate_ = false;
};

inline StateVector initial_state(const CompiledModel& m) { return m.initial_state(); }

inline std::vector<std::size_t> enabled_transitions(const CompiledModel& m, const StateVector& s) {
  return m.enabled_transitions(s);
}

inline StateVector apply_transition(const CompiledModel& m, const StateVector& s, std::size_t t) {
  return m.apply_transition(s, t);
}

inline StateVector apply_transition(const CompiledModel& m, const StateVector& s, std::string_view name) {
  auto t = m.transition_index(name);
  if (!t) throw Error(ErrorCode::InvalidArg, "unknown transition '" + std::string(name) + "'");
  return m.apply_transition(s, *t);
}

}  // namespace infradep
