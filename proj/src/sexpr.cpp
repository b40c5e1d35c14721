#include "flowgen/sexpr.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <unordered_map>

#include "flowgen/errors.hpp"
#include "flowgen/registry.hpp"

namespace flowgen {
namespace {

struct Expr {
  std::size_t line = 1, column = 1;
  bool backref = false;
  std::string op;           // or referenced id when backref
  std::string explicit_id;
  bool literal = false;
  Value value;
  std::vector<std::pair<std::string, Expr>> args;  // (param name, expr)
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  Expr read_top() {
    skip_space();
    Expr e = read_expr();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input after expression");
    if (e.backref) fail("a graph cannot be a bare reference");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, line_, col_); }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  char get() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (c == ';') {  // comment to end of line
        while (!at_end() && peek() != '\n') get();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        get();
      } else {
        break;
      }
    }
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
           c == '+' || c == '?' || c == '!' || c == '*' || c == '/';
  }

  std::string read_name(const char* what) {
    std::string out;
    while (!at_end() && name_char(peek())) out.push_back(get());
    if (out.empty()) fail(std::string("expected ") + what);
    return out;
  }

  std::string read_string() {
    if (peek() != '"') fail("expected string literal");
    get();
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated string literal");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        char e = get();
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unknown escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  // A bare atom or a quoted string.
  std::string read_atom() {
    if (peek() == '"') return read_string();
    return read_name("literal");
  }

  Value read_literal(const std::string& type) {
    const std::size_t line = line_, col = col_;
    std::string tok = read_atom();
    try {
      if (type == "Text") return Value(tok);
      if (type == "Boolean") {
        if (tok == "true") return Value(true);
        if (tok == "false") return Value(false);
        throw TypeMismatch("Boolean literal must be true or false");
      }
      if (type == "Date") return Value(Date::parse(tok));
      if (type == "Time") return Value(Time::parse(tok));
      if (type == "DateTime") return Value(DateTime::parse(tok));
      // Number and Integer: integral spellings produce Integer values.
      std::int64_t i = 0;
      auto ri = std::from_chars(tok.data(), tok.data() + tok.size(), i);
      if (ri.ec == std::errc() && ri.ptr == tok.data() + tok.size()) return Value(i);
      if (type == "Integer") throw TypeMismatch("Integer literal '" + tok + "' is not integral");
      double d = 0;
      auto rd = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (rd.ec == std::errc() && rd.ptr == tok.data() + tok.size()) return Value(d);
      throw TypeMismatch("malformed number '" + tok + "'");
    } catch (const TypeMismatch& e) {
      throw SyntaxError(e.what(), line, col);
    }
  }

  Expr read_expr() {
    Expr e;
    e.line = line_;
    e.column = col_;
    if (peek() == '@') {
      get();
      e.backref = true;
      e.op = read_name("node id");
      return e;
    }
    if (peek() != '(') fail("expected '(' or '@'");
    get();
    skip_space();
    e.op = read_name("function name");
    if (peek() == '@') {
      get();
      e.explicit_id = read_name("node id");
    }
    skip_space();
    if (is_literal_op(e.op)) {
      e.literal = true;
      e.value = read_literal(e.op);
      skip_space();
      if (peek() != ')') fail("literal takes exactly one value");
      get();
      return e;
    }
    while (true) {
      skip_space();
      if (at_end()) fail("unbalanced parentheses");
      if (peek() == ')') {
        get();
        return e;
      }
      std::string name;
      if (peek() == ':') {
        get();
        name = read_name("parameter name");
        skip_space();
      }
      e.args.emplace_back(std::move(name), read_expr());
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1, col_ = 1;
};

void collect_explicit(const Expr& e, std::set<std::string>& ids) {
  if (e.backref) return;
  if (!e.explicit_id.empty() && !ids.insert(e.explicit_id).second)
    throw SyntaxError("node id " + e.explicit_id + " defined twice", e.line, e.column);
  for (const auto& [_, a] : e.args) collect_explicit(a, ids);
}

class Builder {
 public:
  Builder(const std::set<std::string>& taken, const FunctionRegistry* registry)
      : taken_(taken), registry_(registry) {}

  void assign(const Expr& e) {
    if (e.backref) return;
    if (e.explicit_id.empty()) {
      std::string id;
      do {
        id = "v" + std::to_string(counter_++);
      } while (taken_.count(id));
      ids_[&e] = id;
    } else {
      ids_[&e] = e.explicit_id;
    }
    for (const auto& [_, a] : e.args) assign(a);
  }

  NodeId build(const Expr& e, DataflowGraph& g) {
    if (e.backref) {
      if (!g.contains(NodeId(e.op)))
        throw SyntaxError("reference @" + e.op + " precedes its definition or forms a cycle",
                          e.line, e.column);
      return NodeId(e.op);
    }
    if (registry_ && !e.literal && !registry_->contains(e.op)) throw UnknownFunction(e.op);
    Node n;
    n.id = NodeId(ids_.at(&e));
    n.op = e.op;
    n.literal = e.literal;
    if (e.literal) n.value = e.value;
    for (const auto& [name, a] : e.args) n.args.push_back(Argument{build(a, g), name});
    return g.insert(std::move(n)).id;
  }

 private:
  const std::set<std::string>& taken_;
  const FunctionRegistry* registry_;
  std::unordered_map<const Expr*, std::string> ids_;
  std::size_t counter_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"";
}

std::string literal_text(const Value& v) {
  switch (v.tag()) {
    case ValueTag::Text: return quote(v.as_text());
    case ValueTag::Number: {
      std::string s = render_text(v);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
    case ValueTag::Date:
    case ValueTag::Time:
    case ValueTag::DateTime: return quote(render_text(v));
    default: return render_text(v);
  }
}

}  // namespace

DataflowGraph parse_graph(std::string_view text, const FunctionRegistry* registry) {
  Reader reader(text);
  Expr top = reader.read_top();
  std::set<std::string> taken;
  collect_explicit(top, taken);
  Builder builder(taken, registry);
  builder.assign(top);
  DataflowGraph g;
  NodeId root = builder.build(top, g);
  g.set_root(root);
  return g;
}

std::string serialize_graph(const DataflowGraph& graph) {
  if (graph.root().empty()) throw Error("graph has no root");
  std::map<std::string, int> uses;
  for (const auto& id : graph.reachable())
    for (const auto& a : graph.node(id).args) ++uses[a.node.str()];
  std::set<std::string> emitted;
  std::string out;
  std::function<void(const NodeId&)> emit = [&](const NodeId& id) {
    const bool shared = uses[id.str()] > 1;
    if (shared && emitted.count(id.str())) {
      out += "@" + id.str();
      return;
    }
    emitted.insert(id.str());
    const Node& n = graph.node(id);
    out += "(" + n.op;
    if (shared) out += "@" + id.str();
    if (n.literal) {
      out += " " + literal_text(*n.value) + ")";
      return;
    }
    for (const auto& a : n.args) {
      out += " ";
      if (!a.name.empty()) out += ":" + a.name + " ";
      emit(a.node);
    }
    out += ")";
  };
  emit(graph.root());
  return out;
}

}  // namespace flowgen
