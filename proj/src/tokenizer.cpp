#include "lcr/tokenizer.hpp"

#include <cctype>
#include <set>

#include "lcr/errors.hpp"

namespace lcr {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_ascii(char c) { return (static_cast<unsigned char>(c) & 0x80u) == 0; }

std::size_t utf8_length(unsigned char lead) {
  if (lead >= 0xF0) return 4;
  if (lead >= 0xE0) return 3;
  if (lead >= 0xC0) return 2;
  return 1;
}

bool attaches_left(const std::string& t) {
  static const std::set<std::string> kLeft = {".", ",", ";", ":", "!", "?", ")", "]", "%"};
  return kLeft.count(t) != 0;
}

bool attaches_right(const std::string& t) { return t == "(" || t == "["; }

bool non_ascii(const std::string& t) { return !t.empty() && !is_ascii(t.front()); }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto emit = [&](std::size_t b, std::size_t e) {
    out.push_back(Token{std::string(text.substr(b, e - b)), b, e});
  };
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (is_letter(c)) {
      std::size_t j = i + 1;
      while (j < n) {
        if (is_letter(text[j])) {
          ++j;
        } else if ((text[j] == '-' || text[j] == '\'') && j + 1 < n && is_letter(text[j + 1])) {
          j += 2;
        } else if (text[j] == '\'' && (text[j - 1] == 's' || text[j - 1] == 'S') &&
                   (j + 1 == n || !is_letter(text[j + 1]))) {
          ++j;  // plural possessive: others'
          break;
        } else {
          break;
        }
      }
      emit(i, j);
      i = j;
    } else if (is_digit(c)) {
      std::size_t j = i + 1;
      while (j < n && is_digit(text[j])) ++j;
      emit(i, j);
      i = j;
    } else if (is_ascii(c)) {
      emit(i, i + 1);
      ++i;
    } else {
      const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(c)), n - i);
      emit(i, i + len);
      i += len;
    }
  }
  return out;
}

std::vector<std::string> token_strings(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (i > 0) {
      const auto& prev = tokens[i - 1];
      const bool glue = attaches_left(t) || attaches_right(prev) || non_ascii(t) || non_ascii(prev);
      if (!glue) out.push_back(' ');
    }
    out += t;
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  static const std::vector<std::string> kSpecial = {"<pad>", "<unk>", "<bos>", "<eos>"};
  if (tokens.empty()) tokens = kSpecial;
  for (std::size_t i = 0; i < kSpecial.size(); ++i)
    if (tokens.size() <= i || tokens[i] != kSpecial[i])
      throw ArgumentError("vocabulary must begin with the reserved tokens");
  for (auto& t : tokens) add(t);
}

int Vocabulary::add(std::string_view token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(std::string(token), id);
  return id;
}

void Vocabulary::add_text(std::string_view text) {
  for (const auto& t : tokenize(text)) add(t.text);
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw ArgumentError("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t.text));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> words;
  for (int id : ids) {
    if (id < kReserved && id != kUnk) continue;
    words.push_back(token(id));
  }
  return detokenize(words);
}

}  // namespace lcr
