#include "flowgen/qcfg.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>

#include "flowgen/earley.hpp"
#include "flowgen/errors.hpp"
#include "flowgen/token_grammar.hpp"
#include "flowgen/tokenizer.hpp"

namespace flowgen {
namespace {

bool has_space(const std::string& w) {
  return std::any_of(w.begin(), w.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();

// Dense view of a grammar: nonterminals numbered in map order.
struct Dense {
  std::vector<QcfgNonterminal> names;
  std::map<QcfgNonterminal, std::size_t> index;
  std::size_t start = 0;
  // Per production: lhs index and rhs as (is_nt, id) where id is a word
  // index into sigma for terminals.
  std::vector<std::size_t> lhs;
  std::vector<std::vector<std::pair<bool, std::size_t>>> rhs;
  std::vector<std::vector<std::size_t>> by_lhs;

  explicit Dense(const Qcfg& g) {
    for (const auto& p : g.productions()) index.emplace(p.lhs, 0);
    for (auto& [nt, i] : index) {
      i = names.size();
      names.push_back(nt);
    }
    start = index.at(g.start());
    by_lhs.resize(names.size());
    const auto& sigma = g.sigma();
    for (std::size_t i = 0; i < g.productions().size(); ++i) {
      const auto& p = g.productions()[i];
      lhs.push_back(index.at(p.lhs));
      by_lhs[lhs.back()].push_back(i);
      std::vector<std::pair<bool, std::size_t>> r;
      for (const auto& s : p.rhs) {
        if (auto* nt = std::get_if<QcfgNonterminal>(&s)) {
          r.emplace_back(true, index.at(*nt));
        } else {
          const auto& w = std::get<Terminal>(s).word;
          r.emplace_back(false, static_cast<std::size_t>(
                                    std::lower_bound(sigma.begin(), sigma.end(), w) - sigma.begin()));
        }
      }
      rhs.push_back(std::move(r));
    }
  }

  // Minimum derivation height per nonterminal (kInf if unproductive).
  std::vector<std::size_t> min_heights() const {
    std::vector<std::size_t> h(names.size(), kInf);
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t p = 0; p < rhs.size(); ++p) {
        std::size_t v = production_height(p, h);
        if (v < h[lhs[p]]) {
          h[lhs[p]] = v;
          changed = true;
        }
      }
    }
    return h;
  }

  std::size_t production_height(std::size_t p, const std::vector<std::size_t>& h) const {
    std::size_t v = 1;
    for (auto [is_nt, id] : rhs[p]) {
      if (!is_nt) continue;
      if (h[id] == kInf) return kInf;
      v = std::max(v, h[id] + 1);
    }
    return v;
  }

  std::vector<std::size_t> min_lengths() const {
    std::vector<std::size_t> len(names.size(), kInf);
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t p = 0; p < rhs.size(); ++p) {
        std::size_t v = 0;
        for (auto [is_nt, id] : rhs[p]) {
          if (!is_nt) {
            ++v;
          } else if (len[id] == kInf) {
            v = kInf;
            break;
          } else {
            v += len[id];
          }
        }
        if (v < len[lhs[p]]) {
          len[lhs[p]] = v;
          changed = true;
        }
      }
    }
    return len;
  }

  // Longest string length per nonterminal; kInf where the language is
  // infinite, i.e. some reachable nonterminal re-derives itself alongside
  // other symbols. Every symbol yields at least one word, so any production
  // with two or more symbols grows the yield.
  std::vector<std::size_t> max_lengths() const {
    const std::size_t n = names.size();
    const auto minlen = min_lengths();
    std::vector<std::vector<std::pair<std::size_t, bool>>> edges(n);
    for (std::size_t p = 0; p < rhs.size(); ++p) {
      if (minlen[lhs[p]] == kInf) continue;
      for (auto [is_nt, id] : rhs[p])
        if (is_nt) edges[lhs[p]].emplace_back(id, rhs[p].size() > 1);
    }
    std::vector<bool> pumps(n, false);
    for (std::size_t m = 0; m < n; ++m) {
      // States (node, grown) reachable from m.
      std::vector<std::array<bool, 2>> seen(n, {false, false});
      std::vector<std::pair<std::size_t, bool>> stack{{m, false}};
      while (!stack.empty()) {
        auto [v, g] = stack.back();
        stack.pop_back();
        for (auto [w, grow] : edges[v]) {
          const bool ng = g || grow;
          if (!seen[w][ng]) {
            seen[w][ng] = true;
            stack.emplace_back(w, ng);
          }
        }
      }
      pumps[m] = seen[m][1];
    }
    std::vector<bool> infinite(pumps);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<bool> seen(n, false);
      std::vector<std::size_t> stack{v};
      seen[v] = true;
      while (!stack.empty() && !infinite[v]) {
        std::size_t u = stack.back();
        stack.pop_back();
        if (pumps[u]) infinite[v] = true;
        for (auto [w, _] : edges[u])
          if (!seen[w]) {
            seen[w] = true;
            stack.push_back(w);
          }
      }
    }
    std::vector<std::size_t> len = minlen;
    for (std::size_t v = 0; v < n; ++v)
      if (infinite[v]) len[v] = kInf;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t p = 0; p < rhs.size(); ++p) {
        if (minlen[lhs[p]] == kInf || infinite[lhs[p]]) continue;
        std::size_t v = 0;
        for (auto [is_nt, id] : rhs[p]) v += is_nt ? len[id] : 1;
        if (v > len[lhs[p]]) {
          len[lhs[p]] = v;
          changed = true;
        }
      }
    }
    return len;
  }
};

}  // namespace

QcfgNonterminal QcfgNonterminal::parse(std::string_view text) {
  auto at = text.rfind('@');
  if (at == std::string_view::npos || at == 0 || at + 1 == text.size())
    throw InvalidGrammar("malformed nonterminal '" + std::string(text) + "', expected TYPE@node");
  return QcfgNonterminal{std::string(text.substr(0, at)), NodeId(std::string(text.substr(at + 1)))};
}

std::string to_string(const QcfgProduction& p) {
  std::string out = p.lhs.str() + " ->";
  for (const auto& s : p.rhs) {
    out.push_back(' ');
    if (auto* nt = std::get_if<QcfgNonterminal>(&s))
      out += nt->str();
    else
      out += "\"" + std::get<Terminal>(s).word + "\"";
  }
  return out;
}

Qcfg::Qcfg(QcfgNonterminal start, std::vector<QcfgProduction> productions)
    : start_(std::move(start)), productions_(std::move(productions)) {
  std::set<std::string> words;
  for (std::size_t i = 0; i < productions_.size(); ++i) {
    const auto& p = productions_[i];
    if (p.rhs.empty()) throw InvalidGrammar("empty right-hand side in " + to_string(p));
    for (const auto& s : p.rhs) {
      if (auto* t = std::get_if<Terminal>(&s)) {
        if (t->word.empty() || has_space(t->word))
          throw InvalidGrammar("terminal must be a single non-empty word in " + to_string(p));
        words.insert(t->word);
      }
    }
    by_lhs_[p.lhs].push_back(i);
  }
  sigma_.assign(words.begin(), words.end());
  if (!by_lhs_.count(start_)) throw InvalidGrammar("start " + start_.str() + " has no productions");
  for (const auto& p : productions_)
    for (const auto& s : p.rhs)
      if (auto* nt = std::get_if<QcfgNonterminal>(&s); nt && !by_lhs_.count(*nt))
        throw InvalidGrammar("nonterminal " + nt->str() + " has no productions");

  Dense d(*this);
  auto h = d.min_heights();
  std::vector<bool> seen(d.names.size(), false);
  std::vector<std::size_t> stack{d.start};
  seen[d.start] = true;
  while (!stack.empty()) {
    std::size_t n = stack.back();
    stack.pop_back();
    if (h[n] == kInf) throw InvalidGrammar("nonterminal " + d.names[n].str() + " derives no string");
    for (std::size_t p : d.by_lhs[n])
      for (auto [is_nt, id] : d.rhs[p])
        if (is_nt && !seen[id]) {
          seen[id] = true;
          stack.push_back(id);
        }
  }
}

const std::vector<std::size_t>& Qcfg::productions_for(const QcfgNonterminal& nt) const {
  static const std::vector<std::size_t> none;
  auto it = by_lhs_.find(nt);
  return it == by_lhs_.end() ? none : it->second;
}

std::vector<QcfgNonterminal> Qcfg::nonterminals() const {
  std::vector<QcfgNonterminal> out;
  for (const auto& [nt, _] : by_lhs_) out.push_back(nt);
  return out;
}

std::vector<std::string> Qcfg::yield(const Derivation& d) const {
  std::vector<std::string> out;
  std::function<void(const Derivation&)> walk = [&](const Derivation& node) {
    if (node.production >= productions_.size()) throw Error("derivation names an unknown production");
    std::size_t c = 0;
    for (const auto& s : productions_[node.production].rhs) {
      if (auto* t = std::get_if<Terminal>(&s)) {
        out.push_back(t->word);
      } else {
        if (c >= node.children.size()) throw Error("derivation is missing a child");
        walk(node.children[c++]);
      }
    }
  };
  walk(d);
  return out;
}

nlohmann::ordered_json Qcfg::to_json() const {
  nlohmann::ordered_json prods = nlohmann::ordered_json::array();
  for (const auto& p : productions_) {
    nlohmann::ordered_json rhs = nlohmann::ordered_json::array();
    for (const auto& s : p.rhs) {
      nlohmann::ordered_json sym;
      if (auto* nt = std::get_if<QcfgNonterminal>(&s))
        sym["nt"] = nt->str();
      else
        sym["t"] = std::get<Terminal>(s).word;
      rhs.push_back(std::move(sym));
    }
    nlohmann::ordered_json jp;
    jp["lhs"] = p.lhs.str();
    jp["rhs"] = std::move(rhs);
    prods.push_back(std::move(jp));
  }
  nlohmann::ordered_json j;
  j["start"] = start_.str();
  j["productions"] = std::move(prods);
  return j;
}

Qcfg Qcfg::from_json(const nlohmann::json& j) {
  try {
    std::vector<QcfgProduction> prods;
    for (const auto& jp : j.at("productions")) {
      QcfgProduction p;
      p.lhs = QcfgNonterminal::parse(jp.at("lhs").get<std::string>());
      for (const auto& js : jp.at("rhs")) {
        if (js.contains("nt"))
          p.rhs.emplace_back(QcfgNonterminal::parse(js.at("nt").get<std::string>()));
        else
          p.rhs.emplace_back(Terminal{js.at("t").get<std::string>()});
      }
      prods.push_back(std::move(p));
    }
    return Qcfg(QcfgNonterminal::parse(j.at("start").get<std::string>()), std::move(prods));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidGrammar(std::string("malformed grammar JSON: ") + e.what());
  }
}

std::string Qcfg::dump() const { return to_json().dump(2) + "\n"; }

std::pair<std::string, double> sample_scored(const Qcfg& grammar, std::uint64_t seed,
                                             std::size_t max_depth) {
  Dense d(grammar);
  const auto h = d.min_heights();
  if (h[d.start] > max_depth)
    throw DepthExceeded("shortest derivation needs depth " + std::to_string(h[d.start]) +
                        ", limit is " + std::to_string(max_depth));
  std::mt19937_64 rng(seed);
  std::vector<std::string> words;
  double logp = 0.0;
  std::function<void(std::size_t, std::size_t)> expand = [&](std::size_t nt, std::size_t budget) {
    std::vector<std::size_t> fits;
    for (std::size_t p : d.by_lhs[nt])
      if (d.production_height(p, h) <= budget) fits.push_back(p);
    std::uniform_int_distribution<std::size_t> pick(0, fits.size() - 1);
    const std::size_t p = fits[pick(rng)];
    logp -= std::log(static_cast<double>(fits.size()));
    for (auto [is_nt, id] : d.rhs[p]) {
      if (is_nt)
        expand(id, budget - 1);
      else
        words.push_back(grammar.sigma()[id]);
    }
  };
  expand(d.start, max_depth);
  return {join_words(words), logp};
}

std::string sample(const Qcfg& grammar, std::uint64_t seed, std::size_t max_depth) {
  return sample_scored(grammar, seed, max_depth).first;
}

std::vector<std::string> enumerate(const Qcfg& grammar, std::size_t limit, std::size_t max_words) {
  std::vector<std::string> out;
  if (limit == 0) return out;
  Dense d(grammar);
  const auto minlen = d.min_lengths();
  const auto maxlen = d.max_lengths();
  const std::size_t n = d.names.size();
  using Str = std::vector<std::size_t>;
  using Set = std::vector<Str>;
  // layers[L][nt]: the smallest `limit` strings of length L derivable from nt.
  std::vector<std::vector<Set>> layers(1, std::vector<Set>(n));

  auto finish = [&](Set& s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    if (s.size() > limit) s.resize(limit);
  };

  // Suffix lengths: strings of rhs[k..] spanning exactly `len` words.
  std::function<Set(std::size_t, std::size_t, std::size_t)> spans =
      [&](std::size_t p, std::size_t k, std::size_t len) -> Set {
    const auto& r = d.rhs[p];
    if (k == r.size()) return len == 0 ? Set{Str{}} : Set{};
    std::size_t rest_min = 0;
    for (std::size_t i = k + 1; i < r.size(); ++i) {
      if (r[i].first && minlen[r[i].second] == kInf) return {};
      rest_min += r[i].first ? minlen[r[i].second] : 1;
    }
    if (len < rest_min + 1) return {};
    Set result;
    auto [is_nt, id] = r[k];
    if (!is_nt) {
      for (auto& tail : spans(p, k + 1, len - 1)) {
        Str s{id};
        s.insert(s.end(), tail.begin(), tail.end());
        result.push_back(std::move(s));
      }
      return result;
    }
    for (std::size_t l = std::max<std::size_t>(minlen[id], 1); l + rest_min <= len; ++l) {
      if (l >= layers.size()) break;
      const Set& heads = layers[l][id];
      if (heads.empty()) continue;
      const Set tails = spans(p, k + 1, len - l);
      std::size_t taken = 0;
      for (const auto& a : heads) {
        for (const auto& b : tails) {
          Str s = a;
          s.insert(s.end(), b.begin(), b.end());
          result.push_back(std::move(s));
          if (++taken >= limit) break;
        }
        if (taken >= limit) break;
      }
    }
    finish(result);
    return result;
  };

  const std::size_t cap = std::min(max_words, maxlen[d.start]);
  for (std::size_t len = 1; len <= cap && out.size() < limit; ++len) {
    std::vector<Set> layer(n);
    layers.push_back(std::vector<Set>(n));
    // Non-unit productions depend only on shorter layers.
    std::vector<std::pair<std::size_t, std::size_t>> units;
    for (std::size_t p = 0; p < d.rhs.size(); ++p) {
      if (minlen[d.lhs[p]] == kInf) continue;
      if (d.rhs[p].size() == 1 && d.rhs[p][0].first) {
        units.emplace_back(d.lhs[p], d.rhs[p][0].second);
        continue;
      }
      Set s = spans(p, 0, len);
      auto& dst = layer[d.lhs[p]];
      dst.insert(dst.end(), s.begin(), s.end());
    }
    for (auto& s : layer) finish(s);
    // Unit productions: propagate to a fixpoint within this length.
    for (bool changed = true; changed;) {
      changed = false;
      for (auto [a, b] : units) {
        if (layer[b].empty()) continue;
        Set merged = layer[a];
        merged.insert(merged.end(), layer[b].begin(), layer[b].end());
        finish(merged);
        if (merged != layer[a]) {
          layer[a] = std::move(merged);
          changed = true;
        }
      }
    }
    layers.back() = std::move(layer);
    for (const auto& s : layers.back()[d.start]) {
      if (out.size() >= limit) break;
      std::vector<std::string> words;
      for (std::size_t w : s) words.push_back(grammar.sigma()[w]);
      out.push_back(join_words(words));
    }
  }
  return out;
}

std::optional<Derivation> parse(const Qcfg& grammar, const std::vector<std::string>& words) {
  for (const auto& w : words)
    if (!std::binary_search(grammar.sigma().begin(), grammar.sigma().end(), w)) return std::nullopt;
  auto tok = std::make_shared<const WhitespaceTokenizer>(grammar.sigma());
  auto tg = std::make_shared<const TokenGrammar>(compile_tokens(grammar, tok));
  auto state = DecoderState::init(tg);
  for (const auto& w : words) {
    TokenId id = *tok->lookup(w);
    if (!state.is_allowed(id)) return std::nullopt;
    state = state.advance(id);
  }
  return state.derivation();
}

bool contains(const Qcfg& grammar, const std::vector<std::string>& words) {
  return parse(grammar, words).has_value();
}

bool contains(const Qcfg& grammar, std::string_view sentence) {
  return contains(grammar, split_words(sentence));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace flowgen
