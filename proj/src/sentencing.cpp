#include "lcr/sentencing.hpp"

#include <algorithm>
#include <regex>
#include <string>

#include "lcr/tokenizer.hpp"

namespace lcr {

namespace {

const std::regex& english_clause() {
  static const std::regex re(R"(([0-9]+)\s+months?\s+of\s+fixed-term\s+imprisonment)",
                             std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& chinese_clause() {
  static const std::regex re("判处有期徒刑([0-9]+)个月");
  return re;
}

void collect(std::string_view text, const std::regex& re, std::vector<SentencingClause>& out) {
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    SentencingClause c;
    c.begin = static_cast<std::size_t>(m.position(0));
    c.end = c.begin + static_cast<std::size_t>(m.length(0));
    c.number_begin = static_cast<std::size_t>(m.position(1));
    c.number_end = c.number_begin + static_cast<std::size_t>(m.length(1));
    const std::string digits = m.str(1);
    if (digits.size() > 6) continue;  // not a plausible term in months
    c.months = std::stoi(digits);
    out.push_back(c);
  }
}

}  // namespace

std::vector<SentencingClause> find_sentencing_clauses(std::string_view text) {
  std::vector<SentencingClause> out;
  collect(text, english_clause(), out);
  collect(text, chinese_clause(), out);
  std::sort(out.begin(), out.end(),
            [](const SentencingClause& a, const SentencingClause& b) { return a.begin < b.begin; });
  return out;
}

std::optional<int> extract_sentence_months(std::string_view text) {
  const auto clauses = find_sentencing_clauses(text);
  if (clauses.empty()) return std::nullopt;
  return clauses.back().months;
}

std::optional<TokenInterval> tokens_covering(std::string_view text, std::size_t begin,
                                             std::size_t end) {
  const auto tokens = tokenize(text);
  std::optional<TokenInterval> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].end <= begin || tokens[i].begin >= end) continue;
    if (!out) out = TokenInterval{i, i + 1};
    out->end = i + 1;
  }
  return out;
}

std::optional<TokenInterval> mark_sentencing_span(std::string_view opinion_text) {
  const auto clauses = find_sentencing_clauses(opinion_text);
  if (clauses.empty()) return std::nullopt;
  return tokens_covering(opinion_text, clauses.back().begin, clauses.back().end);
}

}  // namespace lcr
