#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace flowgen {

using TokenId = std::int32_t;

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kSepToken = "<SEP>";

/// Maps words to token-id sequences and back. Implementations are immutable
/// after construction.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  std::size_t size() const { return surfaces_.size(); }
  const std::string& surface(TokenId id) const;
  std::optional<TokenId> lookup(std::string_view surface) const;
  const std::vector<std::string>& vocabulary() const { return surfaces_; }

  /// Token ids for one whitespace-free word. Throws UnknownToken when the
  /// vocabulary cannot cover it.
  virtual std::vector<TokenId> encode(std::string_view word) const = 0;
  /// Inverse of encode over a sequence of words' tokens.
  virtual std::string decode(std::span<const TokenId> ids) const = 0;

  /// Marker tokens (<unk>, <SEP>) that are never generated.
  bool is_special(TokenId id) const;

  /// SHA-256 (lowercase hex) of the lines "id\ttoken" in ascending id order,
  /// joined by "\n" with no trailing newline.
  std::string digest() const;

 protected:
  explicit Tokenizer(std::vector<std::string> surfaces);

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// One token per word.
class WhitespaceTokenizer : public Tokenizer {
 public:
  explicit WhitespaceTokenizer(std::vector<std::string> vocabulary);

  /// Specials first, then the sorted distinct union of `words`.
  static WhitespaceTokenizer with_specials(std::vector<std::string> words);

  std::vector<TokenId> encode(std::string_view word) const override;
  std::string decode(std::span<const TokenId> ids) const override;
};

/// Greedy longest-match subword tokenizer. Word-initial pieces are plain,
/// continuation pieces carry a "##" prefix: "tomorrow" -> ["tom", "##orrow"].
class SubwordTokenizer : public Tokenizer {
 public:
  explicit SubwordTokenizer(std::vector<std::string> pieces);

  std::vector<TokenId> encode(std::string_view word) const override;
  std::string decode(std::span<const TokenId> ids) const override;
};

/// Splits prompt text into word-like pieces: <MARKER> tags, runs of
/// [A-Za-z0-9_:.'-], and single other non-space characters.
std::vector<std::string> pretokenize(std::string_view text);

/// Encodes free text for use as LM context; pieces the tokenizer cannot
/// cover map to <unk>. Throws OutOfVocabulary when there is no <unk>.
std::vector<TokenId> encode_context(const Tokenizer& tokenizer, std::string_view text);

}  // namespace flowgen
