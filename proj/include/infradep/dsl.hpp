#pragma once

// Text format for models (.gsts): parser with source spans and error
// recovery, and the canonical serializer.
//
//   model    := "model" IDENT "{" item* "}"
//   item     := param | var | transition | label
//   param    := "param" IDENT "=" NUMBER ";"
//   var      := "var" IDENT ":" ( "{" IDENT ("," IDENT)* "}" | "[" INT ".." INT "]" )
//               "init" (IDENT | INT) ";"
//   transition := ( "timed" IDENT "rate" rexpr
//                 | "immediate" IDENT "prio" INT "weight" NUMBER )
//                 "when" guard "->" "{" assign* "}" tagclause? ";"
//   rexpr    := factor ("*" factor)*
//   factor   := NUMBER | IDENT | "(" NUMBER "-" IDENT ")"
//   guard    := conj ("||" conj)*
//   conj     := unary ("&&" unary)*
//   unary    := "!" unary | "(" guard ")" | "true" | "false" | IDENT cmp literal
//   cmp      := "==" | "!=" | "<" | "<=" | ">" | ">="
//   literal  := IDENT | INT | "-" INT
//   assign   := IDENT ":=" ( literal | IDENT "+" "1" | IDENT "-" "1" ) ";"
//   label    := "label" IDENT ":=" guard ";"
//   tagclause:= "tags" "(" IDENT ("," IDENT)* ")"
//
// `#` starts a comment running to the end of the line. INT may carry a
// leading "-" in bounds, init values and literals.

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infradep/model.hpp"
#include "infradep/number_format.hpp"

namespace infradep {

enum class ParseErrorCode { UnexpectedToken, UndeclaredIdent, TypeMismatch, DuplicateName, BadLiteral };

inline std::string_view to_string(ParseErrorCode c) {
  switch (c) {
    case ParseErrorCode::UnexpectedToken: return "UNEXPECTED_TOKEN";
    case ParseErrorCode::UndeclaredIdent: return "UNDECLARED_IDENT";
    case ParseErrorCode::TypeMismatch: return "TYPE_MISMATCH";
    case ParseErrorCode::DuplicateName: return "DUPLICATE_NAME";
    case ParseErrorCode::BadLiteral: return "BAD_LITERAL";
  }
  return "?";
}

struct ParseError {
  ParseErrorCode code = ParseErrorCode::UnexpectedToken;
  std::string message;
  SourceSpan span;
  std::string hint;
};

struct ParseResult {
  std::optional<Model> model;     // present iff there are no errors of any kind
  std::vector<ParseError> errors;
  ValidationReport validation;    // remaining validation findings, with spans

  bool ok() const { return model.has_value(); }
};

inline std::string format_error(const ParseError& e, std::string_view file = "") {
  std::ostringstream os;
  if (!file.empty()) os << file << ':';
  os << e.span.line << ':' << e.span.column << ": " << to_string(e.code) << ": " << e.message;
  if (!e.hint.empty()) os << " (" << e.hint << ')';
  return os.str();
}

inline std::string format_issue(const Issue& i, std::string_view file = "") {
  std::ostringstream os;
  if (!file.empty()) os << file << ':';
  if (i.span) os << i.span->line << ':' << i.span->column << ": ";
  os << (i.severity == Severity::Error ? "error " : "warning ") << to_string(i.code) << ": " << i.message;
  return os.str();
}

namespace dsl {

enum class Tok {
  Ident, Int, Number,
  LBrace, RBrace, LParen, RParen, LBracket, RBracket,
  Comma, Semi, Colon, Assign, Equals,
  EqEq, NotEq, Lt, Le, Gt, Ge, AndAnd, OrOr, Bang,
  Arrow, Plus, Minus, Star, DotDot,
  End, Invalid,
};

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  SourceSpan span;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.span = SourceSpan{line, col, i, 0};
    std::size_t len = 1;
    auto peek = [&](std::size_t k) { return i + k < src.size() ? src[i + k] : '\0'; };
    if (is_alpha(c)) {
      while (i + len < src.size() && (is_alpha(src[i + len]) || is_digit(src[i + len]))) ++len;
      t.kind = Tok::Ident;
    } else if (is_digit(c)) {
      while (is_digit(peek(len))) ++len;
      t.kind = Tok::Int;
      if (peek(len) == '.' && is_digit(peek(len + 1))) {
        len += 1;
        while (is_digit(peek(len))) ++len;
        t.kind = Tok::Number;
      }
      if (peek(len) == 'e' || peek(len) == 'E') {
        std::size_t k = len + 1;
        if (peek(k) == '+' || peek(k) == '-') ++k;
        if (is_digit(peek(k))) {
          while (is_digit(peek(k))) ++k;
          len = k;
          t.kind = Tok::Number;
        }
      }
    } else {
      const char n = peek(1);
      switch (c) {
        case '{': t.kind = Tok::LBrace; break;
        case '}': t.kind = Tok::RBrace; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '[': t.kind = Tok::LBracket; break;
        case ']': t.kind = Tok::RBracket; break;
        case ',': t.kind = Tok::Comma; break;
        case ';': t.kind = Tok::Semi; break;
        case '*': t.kind = Tok::Star; break;
        case '+': t.kind = Tok::Plus; break;
        case ':':
          if (n == '=') { t.kind = Tok::Assign; len = 2; } else { t.kind = Tok::Colon; }
          break;
        case '=':
          if (n == '=') { t.kind = Tok::EqEq; len = 2; } else { t.kind = Tok::Equals; }
          break;
        case '!':
          if (n == '=') { t.kind = Tok::NotEq; len = 2; } else { t.kind = Tok::Bang; }
          break;
        case '<':
          if (n == '=') { t.kind = Tok::Le; len = 2; } else { t.kind = Tok::Lt; }
          break;
        case '>':
          if (n == '=') { t.kind = Tok::Ge; len = 2; } else { t.kind = Tok::Gt; }
          break;
        case '&':
          t.kind = n == '&' ? Tok::AndAnd : Tok::Invalid;
          len = n == '&' ? 2 : 1;
          break;
        case '|':
          t.kind = n == '|' ? Tok::OrOr : Tok::Invalid;
          len = n == '|' ? 2 : 1;
          break;
        case '-':
          if (n == '>') { t.kind = Tok::Arrow; len = 2; } else { t.kind = Tok::Minus; }
          break;
        case '.':
          t.kind = n == '.' ? Tok::DotDot : Tok::Invalid;
          len = n == '.' ? 2 : 1;
          break;
        default: t.kind = Tok::Invalid; break;
      }
    }
    t.text = src.substr(i, len);
    t.span.length = len;
    out.push_back(t);
    advance(len);
  }
  Token end;
  end.kind = Tok::End;
  end.span = SourceSpan{line, col, src.size(), 0};
  out.push_back(end);
  return out;
}

struct GuardSpans {
  SourceSpan whole;
  SourceSpan var;
  SourceSpan literal;
  std::vector<GuardSpans> children;
};

struct ItemSpans {
  SourceSpan whole;
  SourceSpan name;
  SourceSpan value;                // parameter value, var init, transition weight
  SourceSpan extra;                // var domain, transition rate, transition priority
  std::vector<SourceSpan> parts;   // enum values, rate factors
  GuardSpans guard;
  std::vector<std::pair<SourceSpan, SourceSpan>> assigns;  // (target, rhs)
};

struct SpanTable {
  SourceSpan model_name;
  std::vector<ItemSpans> params, vars, transitions, labels;

  std::optional<SourceSpan> locate(const Locus& l) const {
    const std::vector<ItemSpans>* items = nullptr;
    switch (l.kind) {
      case ItemKind::Model: return model_name;
      case ItemKind::Parameter: items = &params; break;
      case ItemKind::Variable: items = &vars; break;
      case ItemKind::Transition: items = &transitions; break;
      case ItemKind::Label: items = &labels; break;
    }
    if (!items || l.index >= items->size()) return std::nullopt;
    const auto& it = (*items)[l.index];
    switch (l.part) {
      case ItemPart::Whole: return it.whole;
      case ItemPart::Name: return it.name;
      case ItemPart::Value:
      case ItemPart::Init:
      case ItemPart::Weight: return it.value;
      case ItemPart::Priority: return it.extra;
      case ItemPart::Domain:
      case ItemPart::Rate:
        if (!l.path.empty() && l.path[0] < it.parts.size()) return it.parts[l.path[0]];
        return it.extra;
      case ItemPart::Guard: {
        const GuardSpans* g = &it.guard;
        for (auto k : l.path) {
          if (k >= g->children.size()) return g->whole;
          g = &g->children[k];
        }
        if (l.literal) return g->literal;
        return g->var.length ? g->var : g->whole;
      }
      case ItemPart::Update:
        if (!l.path.empty() && l.path[0] < it.assigns.size())
          return l.literal ? it.assigns[l.path[0]].second : it.assigns[l.path[0]].first;
        return it.whole;
    }
    return it.whole;
  }
};

struct SyntaxResult {
  std::optional<Model> model;
  std::vector<ParseError> errors;
  SpanTable spans;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), toks_(lex(src)) {}

  /// Syntax only: the model is present when there are no syntax errors and
  /// has not been validated yet.
  SyntaxResult parse_syntax() {
    SyntaxResult result;
    Model m;
    bool header_ok = true;
    try {
      expect_keyword("model");
      m.name = std::string(expect(Tok::Ident, "model name").text);
      spans_.model_name = toks_[pos_ - 1].span;
      expect(Tok::LBrace, "'{'");
    } catch (const Failure&) {
      header_ok = false;
      while (!at(Tok::End) && !at(Tok::LBrace)) ++pos_;
      if (at(Tok::LBrace)) ++pos_;
    }
    bool closed = false;
    while (!at(Tok::End)) {
      if (at(Tok::RBrace)) {
        ++pos_;
        closed = true;
        break;
      }
      const std::size_t start = pos_;
      try {
        parse_item(m);
      } catch (const Failure&) {
        recover(start);
      }
    }
    if (!closed && (header_ok || errors_.empty())) error(ParseErrorCode::UnexpectedToken, peek().span, "missing '}' at end of model");
    if (closed && !at(Tok::End)) error(ParseErrorCode::UnexpectedToken, peek().span, "unexpected text after the model");

    result.errors = std::move(errors_);
    result.spans = std::move(spans_);
    if (result.errors.empty()) result.model = std::move(m);
    return result;
  }

  /// A standalone guard expression, e.g. a CLI target.
  std::optional<Guard> parse_guard_only(std::vector<ParseError>& errors) {
    std::optional<Guard> g;
    try {
      GuardSpans spans;
      g = guard(spans, 0);
      if (!at(Tok::End)) fail(ParseErrorCode::UnexpectedToken, peek().span, "unexpected text after expression");
    } catch (const Failure&) {
      g.reset();
    }
    errors = std::move(errors_);
    return g;
  }

 private:
  struct Failure {};
  static constexpr std::size_t kMaxDepth = 200;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_keyword(std::string_view kw) const { return at(Tok::Ident) && peek().text == kw; }

  void error(ParseErrorCode code, SourceSpan span, std::string msg, std::string hint = {}) {
    errors_.push_back(ParseError{code, std::move(msg), span, std::move(hint)});
  }
  [[noreturn]] void fail(ParseErrorCode code, SourceSpan span, std::string msg) {
    error(code, span, std::move(msg));
    throw Failure{};
  }
  std::string describe(const Token& t) const {
    if (t.kind == Tok::End) return "end of input";
    return "'" + std::string(t.text) + "'";
  }
  const Token& expect(Tok k, std::string_view what) {
    if (!at(k) || (k == Tok::Ident && is_keyword(peek().text)))
      fail(peek().kind == Tok::Invalid ? ParseErrorCode::BadLiteral : ParseErrorCode::UnexpectedToken, peek().span,
           "expected " + std::string(what) + ", found " + describe(peek()));
    return toks_[pos_++];
  }
  void expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail(ParseErrorCode::UnexpectedToken, peek().span, "expected '" + std::string(kw) + "', found " + describe(peek()));
    ++pos_;
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }
  static SourceSpan join(SourceSpan a, SourceSpan b) {
    a.length = b.offset + b.length > a.offset ? b.offset + b.length - a.offset : a.length;
    return a;
  }
  SourceSpan from(SourceSpan start) const { return join(start, toks_[pos_ ? pos_ - 1 : 0].span); }

  // Skips to the end of the broken item: a ';' outside braces, the start of
  // the next item, or the model's closing brace.
  void recover(std::size_t start) {
    if (pos_ == start) ++pos_;
    int depth = 0;
    for (std::size_t k = start; k < pos_; ++k) {
      if (toks_[k].kind == Tok::LBrace) ++depth;
      if (toks_[k].kind == Tok::RBrace) --depth;
    }
    while (!at(Tok::End)) {
      if (depth <= 0 && (at_keyword("param") || at_keyword("var") || at_keyword("timed") || at_keyword("immediate") ||
                         at_keyword("label")))
        return;
      if (at(Tok::LBrace)) ++depth;
      if (at(Tok::RBrace)) {
        if (depth <= 0) return;
        --depth;
      }
      if (at(Tok::Semi) && depth <= 0) {
        ++pos_;
        return;
      }
      ++pos_;
    }
  }

  std::int64_t integer(SourceSpan& span) {
    const SourceSpan start = peek().span;
    const bool negative = accept(Tok::Minus);
    const Token& t = expect(Tok::Int, "integer");
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) fail(ParseErrorCode::BadLiteral, t.span, "integer out of range");
    span = from(start);
    return negative ? -v : v;
  }

  double number(SourceSpan& span) {
    if (!at(Tok::Int) && !at(Tok::Number))
      fail(ParseErrorCode::UnexpectedToken, peek().span, "expected number, found " + describe(peek()));
    const Token& t = toks_[pos_++];
    auto v = parse_number(t.text);
    if (!v) fail(ParseErrorCode::BadLiteral, t.span, "number " + std::string(t.text) + " is not representable");
    span = t.span;
    return *v;
  }

  Literal literal(SourceSpan& span) {
    if (at(Tok::Ident) && !is_keyword(peek().text)) {
      span = peek().span;
      return std::string(toks_[pos_++].text);
    }
    if (at(Tok::Int) || at(Tok::Minus)) return integer(span);
    if (at(Tok::Number)) fail(ParseErrorCode::BadLiteral, peek().span, "expected an integer or a name, found " + describe(peek()));
    fail(ParseErrorCode::UnexpectedToken, peek().span, "expected an integer or a name, found " + describe(peek()));
  }

  Guard guard(GuardSpans& spans, std::size_t depth) {
    if (depth > kMaxDepth) fail(ParseErrorCode::UnexpectedToken, peek().span, "expression nested too deeply");
    const SourceSpan start = peek().span;
    std::vector<Guard> parts;
    std::vector<GuardSpans> part_spans;
    do {
      part_spans.emplace_back();
      parts.push_back(conjunction(part_spans.back(), depth + 1));
    } while (accept(Tok::OrOr));
    if (parts.size() == 1) {
      spans = std::move(part_spans.front());
      return std::move(parts.front());
    }
    Guard g;
    g.kind = Guard::Kind::Or;
    g.children = std::move(parts);
    spans.whole = from(start);
    spans.children = std::move(part_spans);
    return g;
  }

  Guard conjunction(GuardSpans& spans, std::size_t depth) {
    const SourceSpan start = peek().span;
    std::vector<Guard> parts;
    std::vector<GuardSpans> part_spans;
    do {
      part_spans.emplace_back();
      parts.push_back(unary(part_spans.back(), depth + 1));
    } while (accept(Tok::AndAnd));
    if (parts.size() == 1) {
      spans = std::move(part_spans.front());
      return std::move(parts.front());
    }
    Guard g;
    g.kind = Guard::Kind::And;
    g.children = std::move(parts);
    spans.whole = from(start);
    spans.children = std::move(part_spans);
    return g;
  }

  Guard unary(GuardSpans& spans, std::size_t depth) {
    if (depth > kMaxDepth) fail(ParseErrorCode::UnexpectedToken, peek().span, "expression nested too deeply");
    const SourceSpan start = peek().span;
    if (accept(Tok::Bang)) {
      spans.children.emplace_back();
      Guard inner = unary(spans.children.back(), depth + 1);
      spans.whole = from(start);
      return guards::negate(std::move(inner));
    }
    if (accept(Tok::LParen)) {
      Guard inner = guard(spans, depth + 1);
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (at_keyword("true")) {
      ++pos_;
      spans.whole = start;
      return guards::always();
    }
    if (at_keyword("false")) {
      ++pos_;
      spans.whole = start;
      return guards::never();
    }
    const Token& var = expect(Tok::Ident, "variable name");
    CmpOp op;
    switch (peek().kind) {
      case Tok::EqEq: op = CmpOp::Eq; break;
      case Tok::NotEq: op = CmpOp::Ne; break;
      case Tok::Lt: op = CmpOp::Lt; break;
      case Tok::Le: op = CmpOp::Le; break;
      case Tok::Gt: op = CmpOp::Gt; break;
      case Tok::Ge: op = CmpOp::Ge; break;
      default: fail(ParseErrorCode::UnexpectedToken, peek().span, "expected comparison operator, found " + describe(peek()));
    }
    ++pos_;
    spans.var = var.span;
    Literal lit = literal(spans.literal);
    spans.whole = from(start);
    return guards::compare(std::string(var.text), op, std::move(lit));
  }

  void parse_item(Model& m) {
    if (at_keyword("param")) return parse_param(m);
    if (at_keyword("var")) return parse_var(m);
    if (at_keyword("timed") || at_keyword("immediate")) return parse_transition(m);
    if (at_keyword("label")) return parse_label(m);
    fail(peek().kind == Tok::Invalid ? ParseErrorCode::BadLiteral : ParseErrorCode::UnexpectedToken, peek().span,
         "expected 'param', 'var', 'timed', 'immediate' or 'label', found " + describe(peek()));
  }

  void parse_param(Model& m) {
    ItemSpans s;
    const SourceSpan start = peek().span;
    ++pos_;
    Parameter p;
    p.name = std::string(expect(Tok::Ident, "parameter name").text);
    s.name = toks_[pos_ - 1].span;
    expect(Tok::Equals, "'='");
    p.value = number(s.value);
    expect(Tok::Semi, "';'");
    s.whole = from(start);
    m.parameters.push_back(std::move(p));
    spans_.params.push_back(std::move(s));
  }

  void parse_var(Model& m) {
    ItemSpans s;
    const SourceSpan start = peek().span;
    ++pos_;
    VariableDecl v;
    v.name = std::string(expect(Tok::Ident, "variable name").text);
    s.name = toks_[pos_ - 1].span;
    expect(Tok::Colon, "':'");
    const SourceSpan dom_start = peek().span;
    if (accept(Tok::LBrace)) {
      v.kind = VariableDecl::Kind::Enumeration;
      do {
        const Token& value = expect(Tok::Ident, "enum value");
        v.values.emplace_back(value.text);
        s.parts.push_back(value.span);
      } while (accept(Tok::Comma));
      expect(Tok::RBrace, "'}'");
    } else if (accept(Tok::LBracket)) {
      v.kind = VariableDecl::Kind::Counter;
      SourceSpan ignored;
      v.lo = integer(ignored);
      expect(Tok::DotDot, "'..'");
      v.hi = integer(ignored);
      expect(Tok::RBracket, "']'");
    } else {
      fail(ParseErrorCode::UnexpectedToken, peek().span, "expected '{' or '[' for the variable domain, found " + describe(peek()));
    }
    s.extra = from(dom_start);
    expect_keyword("init");
    v.init = literal(s.value);
    expect(Tok::Semi, "';'");
    s.whole = from(start);
    m.variables.push_back(std::move(v));
    spans_.vars.push_back(std::move(s));
  }

  void parse_transition(Model& m) {
    ItemSpans s;
    const SourceSpan start = peek().span;
    Transition t;
    t.kind = peek().text == "timed" ? Transition::Kind::Timed : Transition::Kind::Immediate;
    ++pos_;
    t.name = std::string(expect(Tok::Ident, "transition name").text);
    s.name = toks_[pos_ - 1].span;
    if (t.is_timed()) {
      expect_keyword("rate");
      const SourceSpan rate_start = peek().span;
      do {
        const SourceSpan fstart = peek().span;
        if (at(Tok::Ident) && !is_keyword(peek().text)) {
          t.rate.factors.push_back(RateFactor::parameter(std::string(toks_[pos_++].text)));
        } else if (accept(Tok::LParen)) {
          SourceSpan ignored;
          const double c = number(ignored);
          expect(Tok::Minus, "'-'");
          std::string p(expect(Tok::Ident, "parameter name").text);
          expect(Tok::RParen, "')'");
          t.rate.factors.push_back(RateFactor::complement(c, std::move(p)));
        } else {
          SourceSpan ignored;
          t.rate.factors.push_back(RateFactor::literal(number(ignored)));
        }
        s.parts.push_back(from(fstart));
      } while (accept(Tok::Star));
      s.extra = from(rate_start);
    } else {
      expect_keyword("prio");
      t.priority = integer(s.extra);
      expect_keyword("weight");
      t.weight = number(s.value);
    }
    expect_keyword("when");
    t.guard = guard(s.guard, 0);
    expect(Tok::Arrow, "'->'");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      std::pair<SourceSpan, SourceSpan> as;
      const Token& target = expect(Tok::Ident, "variable name or '}'");
      as.first = target.span;
      expect(Tok::Assign, "':='");
      const SourceSpan rhs_start = peek().span;
      Assignment a;
      a.target = std::string(target.text);
      if (at(Tok::Ident) && (peek(1).kind == Tok::Plus || peek(1).kind == Tok::Minus)) {
        a.source = std::string(toks_[pos_++].text);
        a.kind = peek().kind == Tok::Plus ? Assignment::Kind::Increment : Assignment::Kind::Decrement;
        ++pos_;
        const Token& one = expect(Tok::Int, "'1'");
        if (one.text != "1") fail(ParseErrorCode::BadLiteral, one.span, "only +1 and -1 updates are supported");
      } else {
        SourceSpan ignored;
        a.kind = Assignment::Kind::Set;
        a.value = literal(ignored);
      }
      as.second = from(rhs_start);
      expect(Tok::Semi, "';'");
      t.update.push_back(std::move(a));
      s.assigns.push_back(as);
    }
    expect(Tok::RBrace, "'}'");
    if (at_keyword("tags")) {
      ++pos_;
      expect(Tok::LParen, "'('");
      do {
        const Token& tag = expect(Tok::Ident, "tag");
        auto parsed = tag_from_string(tag.text);
        if (!parsed)
          fail(ParseErrorCode::BadLiteral, tag.span, "unknown tag '" + std::string(tag.text) + "'");
        t.tags.insert(*parsed);
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    expect(Tok::Semi, "';'");
    s.whole = from(start);
    m.transitions.push_back(std::move(t));
    spans_.transitions.push_back(std::move(s));
  }

  void parse_label(Model& m) {
    ItemSpans s;
    const SourceSpan start = peek().span;
    ++pos_;
    Label l;
    l.name = std::string(expect(Tok::Ident, "label name").text);
    s.name = toks_[pos_ - 1].span;
    expect(Tok::Assign, "':='");
    l.predicate = guard(s.guard, 0);
    expect(Tok::Semi, "';'");
    s.whole = from(start);
    m.labels.push_back(std::move(l));
    spans_.labels.push_back(std::move(s));
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<ParseError> errors_;
  SpanTable spans_;
};

}  // namespace dsl

/// Syntax phase only; pair with finish_parse once any edits (such as
/// parameter overrides) have been applied to the model.
inline dsl::SyntaxResult parse_syntax(std::string_view text) {
  dsl::Parser parser(text);
  return parser.parse_syntax();
}

/// Validates a syntactically valid model and attaches source spans to the
/// findings. Name and type problems become ParseErrors.
inline ParseResult finish_parse(dsl::SyntaxResult syntax) {
  ParseResult result;
  result.errors = std::move(syntax.errors);
  if (!result.errors.empty() || !syntax.model) return result;
  Model& m = *syntax.model;
  ValidationReport report = validate_model(m);
  for (auto& issue : report.issues) {
    issue.span = syntax.spans.locate(issue.locus);
    std::optional<ParseErrorCode> code;
    if (issue.code == IssueCode::UndeclaredIdent) code = ParseErrorCode::UndeclaredIdent;
    if (issue.code == IssueCode::TypeMismatch) code = ParseErrorCode::TypeMismatch;
    if (issue.code == IssueCode::DuplicateName) code = ParseErrorCode::DuplicateName;
    if (code)
      result.errors.push_back(ParseError{*code, issue.message, issue.span.value_or(SourceSpan{}), {}});
    else
      result.validation.issues.push_back(issue);
  }
  if (result.errors.empty() && result.validation.ok()) result.model = std::move(m);
  return result;
}

/// Parses model text. Never throws on malformed input; every problem comes
/// back as a ParseError or a validation issue with its source span.
inline ParseResult parse_model(std::string_view text) { return finish_parse(parse_syntax(text)); }

/// Parses a standalone guard such as `elec == e_lost && n_cfg > 0`.
inline Guard parse_guard(std::string_view text) {
  dsl::Parser parser(text);
  std::vector<ParseError> errors;
  auto g = parser.parse_guard_only(errors);
  if (!g) throw Error(ErrorCode::InvalidArg, errors.empty() ? "invalid expression" : format_error(errors.front()));
  return *g;
}

/// A label name or a guard expression, compiled against the model.
inline CompiledGuard predicate_from_text(const CompiledModel& model, std::string_view text) {
  if (const auto* label = model.model().find_label(text)) return model.compile_predicate(label->predicate);
  if (is_identifier(text)) throw Error(ErrorCode::UnknownLabel, "unknown label '" + std::string(text) + "'");
  return model.compile_predicate(parse_guard(text));
}

namespace detail {

inline void write_guard(std::ostream& os, const Guard& g) {
  auto child = [&](const Guard& c, bool parens) {
    if (parens) os << '(';
    write_guard(os, c);
    if (parens) os << ')';
  };
  switch (g.kind) {
    case Guard::Kind::True: os << "true"; break;
    case Guard::Kind::False: os << "false"; break;
    case Guard::Kind::Compare: os << g.var << ' ' << to_string(g.op) << ' ' << literal_text(g.literal); break;
    case Guard::Kind::Not: {
      // "!x == b" would parse the same, but reads as (!x) == b.
      os << '!';
      const auto& c = g.children.front();
      child(c, c.kind != Guard::Kind::Not && c.kind != Guard::Kind::True && c.kind != Guard::Kind::False);
      break;
    }
    case Guard::Kind::And:
      for (std::size_t i = 0; i < g.children.size(); ++i) {
        if (i) os << " && ";
        const auto& c = g.children[i];
        child(c, c.kind == Guard::Kind::And || c.kind == Guard::Kind::Or);
      }
      break;
    case Guard::Kind::Or:
      for (std::size_t i = 0; i < g.children.size(); ++i) {
        if (i) os << " || ";
        const auto& c = g.children[i];
        child(c, c.kind == Guard::Kind::Or);
      }
      break;
  }
}

}  // namespace detail

inline std::string guard_to_string(const Guard& g) {
  std::ostringstream os;
  detail::write_guard(os, g);
  return os.str();
}

inline std::string rate_to_string(const RateExpr& r) {
  std::string out;
  for (std::size_t i = 0; i < r.factors.size(); ++i) {
    if (i) out += " * ";
    const auto& f = r.factors[i];
    switch (f.kind) {
      case RateFactor::Kind::Literal: out += format_number(f.value); break;
      case RateFactor::Kind::Parameter: out += f.param; break;
      case RateFactor::Kind::Complement: out += "(" + format_number(f.value) + " - " + f.param + ")"; break;
    }
  }
  return out;
}

/// Canonical text: items grouped as parameters, variables, transitions,
/// labels, declaration order within each group, one item per line.
inline std::string serialize_model(const Model& m) {
  std::ostringstream os;
  os << "model " << m.name << " {\n";
  bool section = false;
  auto gap = [&](bool nonempty) {
    if (nonempty && section) os << '\n';
    section = section || nonempty;
  };
  gap(!m.parameters.empty());
  for (const auto& p : m.parameters) os << "  param " << p.name << " = " << format_number(p.value) << ";\n";
  gap(!m.variables.empty());
  for (const auto& v : m.variables) {
    os << "  var " << v.name << " : ";
    if (v.is_enum()) {
      os << '{';
      for (std::size_t i = 0; i < v.values.size(); ++i) os << (i ? ", " : "") << v.values[i];
      os << '}';
    } else {
      os << '[' << v.lo << ".." << v.hi << ']';
    }
    os << " init " << literal_text(v.init) << ";\n";
  }
  gap(!m.transitions.empty());
  for (const auto& t : m.transitions) {
    if (t.is_timed())
      os << "  timed " << t.name << " rate " << rate_to_string(t.rate);
    else
      os << "  immediate " << t.name << " prio " << t.priority << " weight " << format_number(t.weight);
    os << " when ";
    detail::write_guard(os, t.guard);
    os << " -> {";
    for (const auto& a : t.update) {
      os << ' ' << a.target << " := ";
      switch (a.kind) {
        case Assignment::Kind::Set: os << literal_text(a.value); break;
        case Assignment::Kind::Increment: os << a.source << " + 1"; break;
        case Assignment::Kind::Decrement: os << a.source << " - 1"; break;
      }
      os << ';';
    }
    os << " }";
    if (!t.tags.empty()) {
      os << " tags(";
      const auto tags = t.tags.list();
      for (std::size_t i = 0; i < tags.size(); ++i) os << (i ? ", " : "") << to_string(tags[i]);
      os << ')';
    }
    os << ";\n";
  }
  gap(!m.labels.empty());
  for (const auto& l : m.labels) {
    os << "  label " << l.name << " := ";
    detail::write_guard(os, l.predicate);
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace infradep
