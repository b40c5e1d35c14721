#include "flowgen/tokenizer.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include "flowgen/errors.hpp"

namespace flowgen {
namespace {

constexpr std::string_view kContinuation = "##";

bool piece_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '.' ||
         c == '\'' || c == '-';
}

}  // namespace

Tokenizer::Tokenizer(std::vector<std::string> surfaces) : surfaces_(std::move(surfaces)) {
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    if (surfaces_[i].empty()) throw Error("empty token in vocabulary");
    if (!ids_.emplace(surfaces_[i], static_cast<TokenId>(i)).second)
      throw Error("duplicate token '" + surfaces_[i] + "' in vocabulary");
  }
}

const std::string& Tokenizer::surface(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= surfaces_.size())
    throw OutOfVocabulary("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(surfaces_.size()));
  return surfaces_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Tokenizer::lookup(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool Tokenizer::is_special(TokenId id) const {
  const std::string& s = surface(id);
  return s == kUnkToken || s == kSepToken;
}

std::string Tokenizer::digest() const {
  std::string input;
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    if (i) input.push_back('\n');
    input += std::to_string(i) + "\t" + surfaces_[i];
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(input.data(), input.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

WhitespaceTokenizer::WhitespaceTokenizer(std::vector<std::string> vocabulary)
    : Tokenizer(std::move(vocabulary)) {}

WhitespaceTokenizer WhitespaceTokenizer::with_specials(std::vector<std::string> words) {
  std::set<std::string> distinct(words.begin(), words.end());
  distinct.erase(std::string(kUnkToken));
  distinct.erase(std::string(kSepToken));
  std::vector<std::string> vocab{std::string(kUnkToken), std::string(kSepToken)};
  vocab.insert(vocab.end(), distinct.begin(), distinct.end());
  return WhitespaceTokenizer(std::move(vocab));
}

std::vector<TokenId> WhitespaceTokenizer::encode(std::string_view word) const {
  if (word.empty()) throw UnknownToken("cannot encode an empty word");
  if (auto id = lookup(word)) return {*id};
  throw UnknownToken("word '" + std::string(word) + "' is not in the vocabulary");
}

std::string WhitespaceTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += surface(ids[i]);
  }
  return out;
}

SubwordTokenizer::SubwordTokenizer(std::vector<std::string> pieces)
    : Tokenizer(std::move(pieces)) {}

std::vector<TokenId> SubwordTokenizer::encode(std::string_view word) const {
  if (word.empty()) throw UnknownToken("cannot encode an empty word");
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < word.size()) {
    std::optional<TokenId> best;
    std::size_t best_len = 0;
    for (std::size_t len = word.size() - pos; len > 0; --len) {
      std::string piece(word.substr(pos, len));
      if (pos > 0) piece = std::string(kContinuation) + piece;
      if (auto id = lookup(piece)) {
        best = id;
        best_len = len;
        break;
      }
    }
    if (!best)
      throw UnknownToken("word '" + std::string(word) + "' cannot be covered by subword pieces");
    out.push_back(*best);
    pos += best_len;
  }
  return out;
}

std::string SubwordTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string& s = surface(ids[i]);
    if (s.rfind(kContinuation, 0) == 0) {
      out += s.substr(kContinuation.size());
    } else {
      if (i) out.push_back(' ');
      out += s;
    }
  }
  return out;
}

std::vector<std::string> pretokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '<') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '>') {
        out.emplace_back(text.substr(i, j + 1 - i));
        i = j + 1;
        continue;
      }
    }
    if (piece_char(c)) {
      std::size_t j = i;
      while (j < text.size() && piece_char(text[j])) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    out.emplace_back(1, c);
    ++i;
  }
  return out;
}

std::vector<TokenId> encode_context(const Tokenizer& tokenizer, std::string_view text) {
  const auto unk = tokenizer.lookup(kUnkToken);
  std::vector<TokenId> out;
  for (const auto& piece : pretokenize(text)) {
    try {
      auto ids = tokenizer.encode(piece);
      out.insert(out.end(), ids.begin(), ids.end());
    } catch (const UnknownToken&) {
      if (!unk) throw OutOfVocabulary("context piece '" + piece + "' is not in the vocabulary");
      out.push_back(*unk);
    }
  }
  return out;
}

}  // namespace flowgen
