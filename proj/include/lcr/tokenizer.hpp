#pragma once

// Word/punctuation tokenizer shared by the encoder, decoder, and metrics.
//
// ASCII letter runs (with inner hyphens/apostrophes) and digit runs are single
// tokens; other ASCII punctuation is one token per character; every non-ASCII
// UTF-8 code point is its own token.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcr {

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

std::vector<Token> tokenize(std::string_view text);
std::vector<std::string> token_strings(std::string_view text);

// Inverse of tokenize() for canonically spaced text.
std::string detokenize(std::span<const std::string> tokens);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  int add(std::string_view token);
  void add_text(std::string_view text);
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::string_view text) const;
  // Skips reserved ids except UNK, which renders as "<unk>".
  std::string decode(std::span<const int> ids) const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

}  // namespace lcr
