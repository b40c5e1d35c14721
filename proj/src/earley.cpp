#include "flowgen/earley.hpp"

#include <algorithm>
#include <functional>
#include <tuple>
#include <map>
#include <mutex>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "flowgen/errors.hpp"

namespace flowgen {
namespace detail {

// Dotted item. `offset` is the position inside a multi-token terminal that
// sits right after the dot.
struct Item {
  std::uint32_t production = 0;
  std::uint32_t dot = 0;
  std::uint32_t origin = 0;
  std::uint32_t offset = 0;

  bool operator==(const Item&) const = default;
};

struct ItemHash {
  std::size_t operator()(const Item& i) const noexcept {
    std::uint64_t h = i.production;
    h = h * 0x9E3779B97F4A7C15ULL + i.dot;
    h = h * 0x9E3779B97F4A7C15ULL + i.origin;
    h = h * 0x9E3779B97F4A7C15ULL + i.offset;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

struct Column {
  std::vector<Item> items;
  std::unordered_set<Item, ItemHash> present;
  // Items whose dot precedes the given nonterminal.
  std::unordered_map<std::size_t, std::vector<std::uint32_t>> waiting;
  bool accepts = false;

  mutable std::once_flag scan_once;
  mutable std::vector<TokenId> allowed;
  mutable std::unordered_map<TokenId, std::vector<std::uint32_t>> scan;

  bool add(const Item& item) {
    if (!present.insert(item).second) return false;
    items.push_back(item);
    return true;
  }
};

}  // namespace detail

namespace {

using detail::Column;
using detail::Item;

// Closes `col` (at chart position `pos`) under predict and complete.
// Completion never finds an origin equal to `pos` because productions have
// non-empty right-hand sides.
void close_column(Column& col, std::size_t pos, const TokenGrammar& g,
                  const std::vector<std::shared_ptr<const Column>>& chart) {
  std::vector<bool> predicted(g.nonterminals().size(), false);
  for (std::size_t i = 0; i < col.items.size(); ++i) {
    const Item item = col.items[i];
    const auto& prod = g.productions()[item.production];
    if (item.dot == prod.rhs.size()) {
      if (item.origin == pos) continue;
      if (prod.lhs == g.start() && item.origin == 0) col.accepts = true;
      const Column& from = *chart[item.origin];
      auto it = from.waiting.find(prod.lhs);
      if (it == from.waiting.end()) continue;
      for (std::uint32_t w : it->second) {
        const Item& parent = from.items[w];
        col.add(Item{parent.production, parent.dot + 1, parent.origin, 0});
      }
      continue;
    }
    const TokenSymbol& next = prod.rhs[item.dot];
    if (!next.is_nonterminal()) continue;
    const std::size_t nt = *next.nonterminal;
    col.waiting[nt].push_back(static_cast<std::uint32_t>(i));
    if (!predicted[nt]) {
      predicted[nt] = true;
      for (std::size_t p : g.productions_for(nt))
        col.add(Item{static_cast<std::uint32_t>(p), 0, static_cast<std::uint32_t>(pos), 0});
    }
  }
}

void build_scan_index(const Column& col, const TokenGrammar& g) {
  std::call_once(col.scan_once, [&] {
    for (std::size_t i = 0; i < col.items.size(); ++i) {
      const Item& item = col.items[i];
      const auto& prod = g.productions()[item.production];
      if (item.dot == prod.rhs.size()) continue;
      const TokenSymbol& next = prod.rhs[item.dot];
      if (next.is_nonterminal()) continue;
      col.scan[next.tokens[item.offset]].push_back(static_cast<std::uint32_t>(i));
    }
    col.allowed.reserve(col.scan.size());
    for (const auto& [tok, _] : col.scan) col.allowed.push_back(tok);
    std::sort(col.allowed.begin(), col.allowed.end());
  });
}

}  // namespace

DecoderState DecoderState::init(std::shared_ptr<const TokenGrammar> grammar) {
  if (!grammar) throw Error("decoder state needs a grammar");
  DecoderState s;
  s.grammar_ = std::move(grammar);
  auto col = std::make_shared<Column>();
  for (std::size_t p : s.grammar_->productions_for(s.grammar_->start()))
    col->add(Item{static_cast<std::uint32_t>(p), 0, 0, 0});
  close_column(*col, 0, *s.grammar_, s.chart_);
  s.chart_.push_back(std::move(col));
  if (!s.accepts() && s.allowed_next().empty())
    throw EmptyLanguage("grammar generates no strings");
  return s;
}

const std::vector<TokenId>& DecoderState::allowed_next() const {
  const Column& col = *chart_.back();
  build_scan_index(col, *grammar_);
  return col.allowed;
}

bool DecoderState::is_allowed(TokenId token) const {
  const auto& allowed = allowed_next();
  return std::binary_search(allowed.begin(), allowed.end(), token);
}

bool DecoderState::accepts() const { return chart_.back()->accepts; }

DecoderState DecoderState::advance(TokenId token) const {
  const Column& cur = *chart_.back();
  build_scan_index(cur, *grammar_);
  auto it = cur.scan.find(token);
  if (it == cur.scan.end())
    throw IllegalToken("token " + std::to_string(token) + " cannot follow the current prefix");
  auto col = std::make_shared<Column>();
  for (std::uint32_t idx : it->second) {
    const Item& item = cur.items[idx];
    const TokenSymbol& sym = grammar_->productions()[item.production].rhs[item.dot];
    if (item.offset + 1 < sym.tokens.size())
      col->add(Item{item.production, item.dot, item.origin, item.offset + 1});
    else
      col->add(Item{item.production, item.dot + 1, item.origin, 0});
  }
  DecoderState next;
  next.grammar_ = grammar_;
  next.chart_ = chart_;
  next.consumed_ = consumed_;
  next.consumed_.push_back(token);
  close_column(*col, chart_.size(), *grammar_, next.chart_);
  next.chart_.push_back(std::move(col));
  return next;
}

std::size_t DecoderState::chart_size() const {
  std::size_t n = 0;
  for (const auto& c : chart_) n += c->items.size();
  return n;
}

std::optional<Derivation> DecoderState::derivation() const {
  if (!accepts()) return std::nullopt;
  const TokenGrammar& g = *grammar_;
  const auto& chart = chart_;
  const auto& toks = consumed_;
  auto has = [&](std::size_t col, const Item& item) {
    return chart[col]->present.count(item) != 0;
  };
  auto complete_in = [&](std::size_t nt, std::size_t origin, std::size_t end) {
    for (std::size_t p : g.productions_for(nt)) {
      const auto len = static_cast<std::uint32_t>(g.productions()[p].rhs.size());
      if (has(end, Item{static_cast<std::uint32_t>(p), len, static_cast<std::uint32_t>(origin), 0}))
        return true;
    }
    return false;
  };

  // (nonterminal, i, j) spans currently being derived; guards unit cycles.
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> active;
  std::function<std::optional<Derivation>(std::size_t, std::size_t, std::size_t)> derive;
  std::function<bool(std::size_t, std::size_t, std::size_t, std::size_t, std::vector<Derivation>&)>
      match;

  // Matches rhs[0, k) of production p over tokens [i, m); children are
  // appended in reverse order.
  match = [&](std::size_t p, std::size_t k, std::size_t i, std::size_t m,
              std::vector<Derivation>& kids) -> bool {
    if (k == 0) return m == i;
    const auto& prod = g.productions()[p];
    const TokenSymbol& sym = prod.rhs[k - 1];
    const Item before{static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(k - 1),
                      static_cast<std::uint32_t>(i), 0};
    if (!sym.is_nonterminal()) {
      const std::size_t len = sym.tokens.size();
      if (m < i + len) return false;
      if (!std::equal(sym.tokens.begin(), sym.tokens.end(), toks.begin() + (m - len)))
        return false;
      if (!has(m - len, before)) return false;
      return match(p, k - 1, i, m - len, kids);
    }
    for (std::size_t s = m; s-- > i;) {
      if (!has(s, before) || !complete_in(*sym.nonterminal, s, m)) continue;
      auto child = derive(*sym.nonterminal, s, m);
      if (!child) continue;
      const std::size_t mark = kids.size();
      kids.push_back(std::move(*child));
      if (match(p, k - 1, i, s, kids)) return true;
      kids.resize(mark);
    }
    return false;
  };

  derive = [&](std::size_t nt, std::size_t i, std::size_t j) -> std::optional<Derivation> {
    auto key = std::make_tuple(nt, i, j);
    if (!active.insert(key).second) return std::nullopt;
    std::optional<Derivation> out;
    for (std::size_t p : g.productions_for(nt)) {
      const auto len = static_cast<std::uint32_t>(g.productions()[p].rhs.size());
      if (!has(j, Item{static_cast<std::uint32_t>(p), len, static_cast<std::uint32_t>(i), 0}))
        continue;
      std::vector<Derivation> kids;
      if (match(p, len, i, j, kids)) {
        std::reverse(kids.begin(), kids.end());
        out = Derivation{p, std::move(kids)};
        break;
      }
    }
    active.erase(key);
    return out;
  };
  return derive(g.start(), 0, toks.size());
}

}  // namespace flowgen
