#pragma once

// Sentencing-clause grammar shared by span marking, corpus validation, and
// evaluation. Recognised clauses:
//   "<N> months of fixed-term imprisonment"
//   "判处有期徒刑<N>个月"

#include <optional>
#include <string_view>
#include <vector>

namespace lcr {

struct SentencingClause {
  std::size_t begin = 0;  // byte range of the clause
  std::size_t end = 0;
  std::size_t number_begin = 0;  // byte range of the months figure
  std::size_t number_end = 0;
  int months = 0;
};

// All clauses in text order.
std::vector<SentencingClause> find_sentencing_clauses(std::string_view text);

// Months of the last clause, if any.
std::optional<int> extract_sentence_months(std::string_view text);

struct TokenInterval {
  std::size_t begin = 0;  // first token index
  std::size_t end = 0;    // one past the last token
  bool operator==(const TokenInterval&) const = default;
};

// Tokens covering the last sentencing clause.
std::optional<TokenInterval> mark_sentencing_span(std::string_view opinion_text);

// Tokens overlapping the byte range [begin, end).
std::optional<TokenInterval> tokens_covering(std::string_view text, std::size_t begin,
                                             std::size_t end);

}  // namespace lcr
