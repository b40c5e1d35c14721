#include "flowgen/rules.hpp"

#include <cctype>
#include <charconv>
#include <set>

#include "flowgen/errors.hpp"
#include "flowgen/registry.hpp"

namespace flowgen {
namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 0, column = 0;
};

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {"rule", "as",    "on",  "where", "and", "let",
                                          "say",  "start", "nonterminals", "true", "false"};
  return k;
}

// Guard-only helpers that are not registry functions.
bool is_guard_builtin(const std::string& name) { return name == "kind"; }

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.'))
        ++j;
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      std::size_t j = i + 1;
      std::string text;
      while (true) {
        if (j >= src.size()) throw SyntaxError("unterminated string", line, col);
        if (src[j] == '"') break;
        if (src[j] == '\\' && j + 1 < src.size()) {
          text.push_back(src[j + 1]);
          j += 2;
          continue;
        }
        text.push_back(src[j++]);
      }
      t.kind = Tok::String;
      t.text = std::move(text);
      advance(j + 1 - i);
    } else {
      static const char* two[] = {"==", "!=", "<=", ">="};
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      for (const char* op : two) {
        if (src.substr(i, 2) == op) t.text = op;
      }
      if (std::string_view("(),:;=<>!").find(c) == std::string_view::npos)
        throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
      if (t.text == "!") throw SyntaxError("unexpected '!'", line, col);
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, const FunctionRegistry* registry)
      : toks_(std::move(toks)), registry_(registry) {}

  RuleSet parse() {
    RuleSet set;
    bool declared = false;
    std::size_t start_line = 0, start_col = 0;
    while (peek().kind != Tok::End) {
      if (is_kw("start")) {
        next();
        start_line = peek().line;
        start_col = peek().column;
        set.start = expect_ident("start nonterminal");
      } else if (is_kw("nonterminals")) {
        next();
        declared = true;
        while (peek().kind == Tok::Ident && !keywords().count(peek().text))
          set.nonterminals.push_back(next().text);
      } else if (is_kw("rule")) {
        set.rules.push_back(parse_rule());
      } else {
        fail("expected 'rule', 'start' or 'nonterminals'");
      }
    }
    if (set.rules.empty()) throw RuleError("rule file defines no rules");

    if (!declared) {
      for (const auto& r : set.rules) set.nonterminals.push_back(r.head);
    }
    std::set<std::string> types(set.nonterminals.begin(), set.nonterminals.end());
    types.insert(std::string(kLexType));
    // Keep the declared set in first-seen order without duplicates.
    std::vector<std::string> ordered;
    std::set<std::string> seen;
    for (const auto& t : set.nonterminals)
      if (seen.insert(t).second) ordered.push_back(t);
    if (!seen.count(std::string(kLexType))) ordered.push_back(std::string(kLexType));
    set.nonterminals = std::move(ordered);

    if (set.start.empty()) set.start = set.rules.front().head;
    if (!types.count(set.start))
      throw SyntaxError("start nonterminal " + set.start + " is not declared", start_line,
                        start_col);
    for (const auto& r : set.rules) check_rule(r, types);
    return set;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool is_kw(const char* kw) const { return peek().kind == Tok::Ident && peek().text == kw; }
  bool is_punct(const char* p) const { return peek().kind == Tok::Punct && peek().text == p; }

  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what, peek().line, peek().column);
  }

  void expect_punct(const char* p) {
    if (!is_punct(p)) fail(std::string("expected '") + p + "'");
    next();
  }

  void expect_kw(const char* kw) {
    if (!is_kw(kw)) fail(std::string("expected '") + kw + "'");
    next();
  }

  std::string expect_ident(const char* what) {
    if (peek().kind != Tok::Ident || keywords().count(peek().text))
      fail(std::string("expected ") + what);
    return next().text;
  }

  TransductionRule parse_rule() {
    TransductionRule r;
    r.line = peek().line;
    expect_kw("rule");
    r.head = expect_ident("rule head");
    if (is_kw("as")) {
      next();
      r.name = expect_ident("rule name");
    } else {
      r.name = r.head + ":" + std::to_string(r.line);
    }
    expect_kw("on");
    r.pattern = parse_pattern();
    if (is_kw("where")) {
      next();
      r.guards.push_back(parse_guard());
      while (is_kw("and")) {
        next();
        r.guards.push_back(parse_guard());
      }
    }
    while (is_kw("let")) {
      next();
      r.lets.push_back(parse_binding());
      while (is_punct(";")) {
        next();
        if (is_kw("say") || is_kw("let")) break;
        r.lets.push_back(parse_binding());
      }
    }
    expect_kw("say");
    if (peek().kind != Tok::String) fail("expected response template string");
    const Token tmpl = next();
    try {
      r.response = parse_template(tmpl.text);
    } catch (const RuleError& e) {
      throw SyntaxError(std::string(e.what()) + " in rule " + r.name, tmpl.line, tmpl.column);
    }
    return r;
  }

  Pattern parse_pattern() {
    if (peek().kind != Tok::Ident || keywords().count(peek().text)) fail("expected pattern");
    std::string name = next().text;
    Pattern p;
    if (name == "_") return p;
    if (is_punct(":")) {
      next();
      p = parse_pattern();
      if (!p.capture.empty()) fail("pattern captures '" + p.capture + "' twice");
      p.capture = name;
      if (p.kind == Pattern::Kind::Wildcard) p.kind = Pattern::Kind::Capture;
      return p;
    }
    if (is_punct("(")) {
      next();
      p.kind = Pattern::Kind::Op;
      p.op = name;
      if (!is_punct(")")) {
        p.args.push_back(parse_pattern());
        while (is_punct(",")) {
          next();
          p.args.push_back(parse_pattern());
        }
      }
      expect_punct(")");
      return p;
    }
    p.kind = Pattern::Kind::Capture;
    p.capture = name;
    return p;
  }

  RuleExpr parse_expr() {
    RuleExpr e;
    const Token& t = peek();
    if (t.kind == Tok::String) {
      e.literal = Value(next().text);
      return e;
    }
    if (t.kind == Tok::Number) {
      std::string s = next().text;
      std::int64_t i = 0;
      auto r = std::from_chars(s.data(), s.data() + s.size(), i);
      if (r.ec == std::errc() && r.ptr == s.data() + s.size()) {
        e.literal = Value(i);
      } else {
        double d = 0;
        auto rd = std::from_chars(s.data(), s.data() + s.size(), d);
        if (rd.ec != std::errc() || rd.ptr != s.data() + s.size()) fail("malformed number " + s);
        e.literal = Value(d);
      }
      return e;
    }
    if (is_kw("true") || is_kw("false")) {
      e.literal = Value(next().text == "true");
      return e;
    }
    std::string name = expect_ident("expression");
    if (is_punct("(")) {
      next();
      e.kind = RuleExpr::Kind::Call;
      e.name = name;
      if (!is_punct(")")) {
        e.args.push_back(parse_expr());
        while (is_punct(",")) {
          next();
          e.args.push_back(parse_expr());
        }
      }
      expect_punct(")");
      return e;
    }
    e.kind = RuleExpr::Kind::Var;
    e.name = name;
    return e;
  }

  Guard parse_guard() {
    Guard g;
    g.lhs = parse_expr();
    static const std::pair<const char*, CompareOp> ops[] = {
        {"==", CompareOp::Eq}, {"!=", CompareOp::Ne}, {"<=", CompareOp::Le},
        {">=", CompareOp::Ge}, {"<", CompareOp::Lt},  {">", CompareOp::Gt}};
    for (const auto& [text, op] : ops) {
      if (is_punct(text)) {
        next();
        g.op = op;
        g.rhs = parse_expr();
        break;
      }
    }
    return g;
  }

  Binding parse_binding() {
    Binding b;
    b.var = expect_ident("let variable");
    expect_punct("=");
    b.expr = parse_expr();
    return b;
  }

  // ---- static checks -------------------------------------------------------

  [[noreturn]] static void rule_fail(const TransductionRule& r, const std::string& what) {
    throw RuleError("rule " + r.name + " (line " + std::to_string(r.line) + "): " + what);
  }

  static void collect_captures(const TransductionRule& r, const Pattern& p,
                               std::set<std::string>& bound) {
    if (!p.capture.empty()) {
      if (p.capture == kSelfVar) rule_fail(r, "'self' cannot be captured explicitly");
      if (!bound.insert(p.capture).second)
        rule_fail(r, "variable '" + p.capture + "' captured twice");
    }
    for (const auto& a : p.args) collect_captures(r, a, bound);
  }

  void check_expr(const TransductionRule& r, const RuleExpr& e,
                  const std::set<std::string>& bound, bool in_guard) const {
    switch (e.kind) {
      case RuleExpr::Kind::Literal: return;
      case RuleExpr::Kind::Var:
        if (!bound.count(e.name)) rule_fail(r, "unbound variable '" + e.name + "'");
        return;
      case RuleExpr::Kind::Call:
        if (is_guard_builtin(e.name)) {
          if (!in_guard) rule_fail(r, "'" + e.name + "' is only available in guards");
          if (e.args.size() != 1) rule_fail(r, "'" + e.name + "' takes one argument");
        } else if (registry_) {
          const FunctionSpec* f = registry_->find(e.name);
          if (!f) rule_fail(r, "unknown function '" + e.name + "'");
          if (f->params.size() != e.args.size())
            rule_fail(r, e.name + " expects " + std::to_string(f->params.size()) +
                             " arguments, got " + std::to_string(e.args.size()));
        }
        for (const auto& a : e.args) check_expr(r, a, bound, in_guard);
        return;
    }
  }

  void check_rule(const TransductionRule& r, const std::set<std::string>& types) const {
    if (!types.count(r.head)) rule_fail(r, "unknown nonterminal " + r.head);
    if (r.pattern.kind == Pattern::Kind::Op && registry_ && !is_literal_op(r.pattern.op) &&
        !registry_->contains(r.pattern.op))
      rule_fail(r, "pattern names unknown function '" + r.pattern.op + "'");
    std::set<std::string> bound{std::string(kSelfVar)};
    collect_captures(r, r.pattern, bound);
    for (const auto& g : r.guards) {
      check_expr(r, g.lhs, bound, true);
      if (g.op) check_expr(r, g.rhs, bound, true);
    }
    for (const auto& b : r.lets) {
      check_expr(r, b.expr, bound, false);
      if (!bound.insert(b.var).second) rule_fail(r, "variable '" + b.var + "' bound twice");
    }
    if (r.response.empty()) rule_fail(r, "empty response template");
    for (const auto& item : r.response) {
      if (auto* nt = std::get_if<TemplateNonterminal>(&item)) {
        if (!types.count(nt->type)) rule_fail(r, "unknown nonterminal " + nt->type);
        if (!bound.count(nt->var)) rule_fail(r, "unbound variable '" + nt->var + "'");
      } else if (auto* vc = std::get_if<TemplateValueCopy>(&item)) {
        if (!bound.count(vc->var)) rule_fail(r, "unbound variable '" + vc->var + "'");
      }
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const FunctionRegistry* registry_;
};

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<TemplateItem> parse_template(std::string_view text) {
  std::vector<TemplateItem> out;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto ident = [&](const char* what) {
    std::size_t j = i;
    while (j < text.size() && ident_char(text[j])) ++j;
    if (j == i) throw RuleError(std::string("expected ") + what + " in template");
    std::string s(text.substr(i, j - i));
    i = j;
    return s;
  };
  auto expect = [&](char c) {
    if (i >= text.size() || text[i] != c)
      throw RuleError(std::string("expected '") + c + "' in template");
    ++i;
  };
  while (true) {
    skip_ws();
    if (i >= text.size()) break;
    if (text[i] == '{') {
      ++i;
      skip_ws();
      std::string type = ident("nonterminal type");
      skip_ws();
      expect('<');
      std::string var = ident("variable");
      expect('>');
      skip_ws();
      expect('}');
      out.emplace_back(TemplateNonterminal{std::move(type), std::move(var)});
    } else if (text[i] == '<') {
      ++i;
      std::string var = ident("variable");
      expect('>');
      out.emplace_back(TemplateValueCopy{std::move(var)});
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
             text[j] != '{' && text[j] != '<')
        ++j;
      out.emplace_back(TemplateTerminal{std::string(text.substr(i, j - i))});
      i = j;
    }
  }
  return out;
}

RuleSet parse_rules(std::string_view text, const FunctionRegistry* registry) {
  return Parser(lex(text), registry).parse();
}

}  // namespace flowgen
