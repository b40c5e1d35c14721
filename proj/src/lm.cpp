#include "flowgen/lm.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "flowgen/errors.hpp"
#include "json.hpp"

namespace flowgen {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr char kJoin = '\x1f';

std::string history_key(std::span<const std::string> h) {
  std::string key;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) key.push_back(kJoin);
    key += h[i];
  }
  return key;
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> out;
  if (key.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = key.find(kJoin, start);
    out.push_back(key.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double logsumexp(const LogProbs& lp) {
  double m = lp.eos;
  for (double v : lp.tokens) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double s = std::exp(lp.eos - m);
  for (double v : lp.tokens) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

LogProbs apply_mask(LogProbs full, const TokenMask& mask, bool renormalize) {
  const auto eos_id = static_cast<TokenId>(full.tokens.size());
  LogProbs out;
  out.tokens.assign(full.tokens.size(), kNegInf);
  out.eos = kNegInf;
  for (TokenId id : mask) {
    if (id == eos_id)
      out.eos = full.eos;
    else if (id >= 0 && id < eos_id)
      out.tokens[static_cast<std::size_t>(id)] = full.tokens[static_cast<std::size_t>(id)];
    else
      throw OutOfVocabulary("mask id " + std::to_string(id) + " outside vocabulary");
  }
  if (renormalize) {
    const double z = logsumexp(out);
    if (z != kNegInf) {
      for (double& v : out.tokens)
        if (v != kNegInf) v -= z;
      if (out.eos != kNegInf) out.eos -= z;
    }
  }
  return out;
}

LogProbs LocalScorer::next_logprobs(std::span<const TokenId> context, const TokenMask* mask,
                                    bool renormalize) const {
  for (TokenId id : context)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size())
      throw OutOfVocabulary("context token " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(vocab_size()));
  LogProbs full = distribution(context);
  if (!mask) return full;
  return apply_mask(std::move(full), *mask, renormalize);
}

LogProbs UniformScorer::distribution(std::span<const TokenId>) const {
  const double v = -std::log(static_cast<double>(size_ + 1));
  return LogProbs{std::vector<double>(size_, v), v};
}

NgramModel NgramModel::train(const std::vector<NgramExample>& corpus, std::size_t order, double k) {
  if (corpus.empty()) throw Error("cannot train an n-gram model on an empty corpus");
  if (order == 0) throw Error("n-gram order must be at least 1");
  if (!(k > 0)) throw Error("add-k smoothing needs k > 0");
  NgramModel m;
  m.order_ = order;
  m.k_ = k;
  std::set<std::string> vocab;
  for (const auto& ex : corpus) {
    std::vector<std::string> seq(order - 1, std::string(kBosWord));
    seq.insert(seq.end(), ex.context.begin(), ex.context.end());
    vocab.insert(ex.context.begin(), ex.context.end());
    vocab.insert(ex.response.begin(), ex.response.end());
    for (std::size_t i = 0; i <= ex.response.size(); ++i) {
      const std::string w = i < ex.response.size() ? ex.response[i] : std::string(kEosWord);
      for (std::size_t len = 0; len < order; ++len) {
        std::span<const std::string> h(seq.data() + seq.size() - len, len);
        ++m.counts_[history_key(h)][w];
      }
      seq.push_back(w);
    }
  }
  m.vocabulary_.assign(vocab.begin(), vocab.end());
  return m;
}

std::size_t NgramModel::count(const std::vector<std::string>& history,
                              const std::string& word) const {
  const auto* s = successors(history);
  if (!s) return 0;
  auto it = s->find(word);
  return it == s->end() ? 0 : it->second;
}

const std::map<std::string, std::size_t>* NgramModel::successors(
    const std::vector<std::string>& history) const {
  auto it = counts_.find(history_key(history));
  return it == counts_.end() ? nullptr : &it->second;
}

std::string NgramModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "flowgen-ngram";
  j["version"] = 1;
  j["order"] = order_;
  j["k"] = k_;
  j["vocabulary"] = vocabulary_;
  auto counts = nlohmann::ordered_json::array();
  for (const auto& [key, next] : counts_) {
    nlohmann::ordered_json row;
    row["history"] = split_key(key);
    row["next"] = nlohmann::ordered_json(next);
    counts.push_back(std::move(row));
  }
  j["counts"] = std::move(counts);
  return j.dump() + "\n";
}

NgramModel NgramModel::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "flowgen-ngram") throw Error("not an n-gram model file");
    if (j.at("version") != 1) throw Error("unsupported n-gram model version");
    NgramModel m;
    m.order_ = j.at("order").get<std::size_t>();
    m.k_ = j.at("k").get<double>();
    m.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
    for (const auto& row : j.at("counts")) {
      auto h = row.at("history").get<std::vector<std::string>>();
      if (h.size() >= m.order_) throw Error("history longer than the model order");
      m.counts_[history_key(h)] = row.at("next").get<std::map<std::string, std::size_t>>();
    }
    if (m.order_ == 0 || !(m.k_ > 0)) throw Error("invalid n-gram parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed n-gram model: ") + e.what());
  }
}

void NgramModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << to_json();
}

NgramModel NgramModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open n-gram model " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

NgramScorer::NgramScorer(std::shared_ptr<const NgramModel> model,
                         std::shared_ptr<const Tokenizer> tokenizer)
    : model_(std::move(model)), tokenizer_(std::move(tokenizer)) {
  if (!model_ || !tokenizer_) throw Error("n-gram scorer needs a model and a tokenizer");
}

LogProbs NgramScorer::distribution(std::span<const TokenId> context) const {
  const std::size_t n = model_->order();
  const std::size_t v = tokenizer_->size();
  const double kv = model_->k() * static_cast<double>(v + 1);

  std::vector<std::string> hist;
  const std::size_t have = std::min(context.size(), n - 1);
  for (std::size_t i = have; i < n - 1; ++i) hist.emplace_back(kBosWord);
  for (std::size_t i = context.size() - have; i < context.size(); ++i)
    hist.push_back(tokenizer_->surface(context[i]));

  std::vector<double> p(v + 1, 1.0 / static_cast<double>(v + 1));
  for (std::size_t m = 1; m <= n; ++m) {
    std::vector<std::string> h(hist.end() - static_cast<std::ptrdiff_t>(m - 1), hist.end());
    const auto* next = model_->successors(h);
    if (!next) continue;
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    double total = 0;
    for (const auto& [word, c] : *next) {
      std::optional<TokenId> id;
      if (word == kEosWord)
        id = static_cast<TokenId>(v);
      else
        id = tokenizer_->lookup(word);
      if (!id) continue;
      hits.emplace_back(static_cast<std::size_t>(*id), c);
      total += static_cast<double>(c);
    }
    const double denom = total + kv;
    for (double& x : p) x *= kv / denom;
    for (auto [id, c] : hits) p[id] += static_cast<double>(c) / denom;
  }
  LogProbs out;
  out.tokens.resize(v);
  for (std::size_t i = 0; i < v; ++i) out.tokens[i] = std::log(p[i]);
  out.eos = std::log(p[v]);
  return out;
}

LmSession UniformProvider::session(const std::vector<std::string>& words) const {
  auto tok = std::make_shared<const WhitespaceTokenizer>(WhitespaceTokenizer::with_specials(words));
  return LmSession{tok, std::make_shared<const UniformScorer>(tok->size())};
}

LmSession NgramProvider::session(const std::vector<std::string>& words) const {
  std::vector<std::string> all = model_->vocabulary();
  all.insert(all.end(), words.begin(), words.end());
  auto tok = std::make_shared<const WhitespaceTokenizer>(WhitespaceTokenizer::with_specials(all));
  return LmSession{tok, std::make_shared<const NgramScorer>(model_, tok)};
}

std::shared_ptr<const Tokenizer> load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file " + path);
  std::vector<std::string> tokens;
  bool subword = false;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("##", 0) == 0) subword = true;
    tokens.push_back(line);
  }
  if (subword) return std::make_shared<const SubwordTokenizer>(std::move(tokens));
  return std::make_shared<const WhitespaceTokenizer>(std::move(tokens));
}

}  // namespace flowgen
