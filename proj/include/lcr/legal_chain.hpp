#pragma once

// Legal chains: premise / situation / conclusion triplets decomposed from a
// statutory provision, with AND/OR condition trees and a sentencing range.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lcr {

// Trim, ASCII case-fold, and collapse internal whitespace runs to one space.
std::string normalize_label(std::string_view text);

class ConditionExpr {
 public:
  enum class Kind { Predicate, And, Or };

  static ConditionExpr predicate(std::string_view label);
  static ConditionExpr all_of(std::vector<ConditionExpr> children);
  static ConditionExpr any_of(std::vector<ConditionExpr> children);

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  const std::vector<ConditionExpr>& children() const { return children_; }

  void collect_labels(std::set<std::string>& out) const;
  std::set<std::string> labels() const;
  std::size_t operator_count() const;

  // Structural problems (too few children, empty labels), as readable strings.
  std::vector<std::string> defects() const;

  bool operator==(const ConditionExpr&) const = default;

 private:
  Kind kind_ = Kind::Predicate;
  std::string label_;
  std::vector<ConditionExpr> children_;
};

// True when the expression holds given the set of established predicate labels.
bool eval_condition(const ConditionExpr& expr, const std::set<std::string>& facts);

struct SentencingRange {
  std::string label;
  std::optional<int> min_months;
  std::optional<int> max_months;
  std::string text;  // optional surface form; rendered from the range when empty

  bool has_range() const { return min_months.has_value() && max_months.has_value(); }
  bool well_formed() const {
    return has_range() && *min_months >= 0 && *min_months <= *max_months;
  }
  bool contains(int months) const {
    return well_formed() && months >= *min_months && months <= *max_months;
  }

  bool operator==(const SentencingRange&) const = default;
};

struct ChainComponent {
  std::string text;
  ConditionExpr expr;

  bool operator==(const ChainComponent&) const = default;
};

struct LegalChain {
  ChainComponent premise;
  ChainComponent situation;
  SentencingRange conclusion;
  std::string source_provision;

  // Text embedded for the conclusion slot.
  std::string conclusion_text() const;

  bool operator==(const LegalChain&) const = default;
};

using PhraseLexicon = std::map<std::string, std::vector<std::string>>;

struct ChainSet {
  std::string charge;
  std::vector<LegalChain> chains;
  // Surface phrases that realize a predicate in opinion text (keyed by normalized label).
  PhraseLexicon lexicon;
  // Surface phrases that realize a predicate in fact text, for corpus synthesis.
  PhraseLexicon fact_phrases;

  bool operator==(const ChainSet&) const = default;
};

// Chain-file (JSON) I/O. Parse errors name the offending field path.
ChainSet parse_chain_file(std::string_view text);
std::string serialize_chain_set(const ChainSet& cs);
ChainSet load_chain_file(const std::filesystem::path& path);
void save_chain_file(const ChainSet& cs, const std::filesystem::path& path);

using ChainLibrary = std::map<std::string, ChainSet>;

// Every *.json file in `dir`, keyed by charge.
ChainLibrary load_chain_library(const std::filesystem::path& dir);

enum class CheckStatus { Pass, Fail, NotCheckable };

struct ConstraintCheck {
  std::string constraint;
  CheckStatus status = CheckStatus::Pass;
  bool advisory = false;
  std::vector<std::string> details;

  bool operator==(const ConstraintCheck&) const = default;
};

struct ValidationReport {
  std::vector<ConstraintCheck> checks;

  const ConstraintCheck& check(std::string_view constraint) const;
  // All non-advisory, machine-checkable constraints pass.
  bool ok() const;

  bool operator==(const ValidationReport&) const = default;
};

struct ValidationOptions {
  std::set<std::string> pronoun_stoplist = default_pronoun_stoplist();

  static std::set<std::string> default_pronoun_stoplist();
};

ValidationReport validate_chain_set(const ChainSet& cs, const ValidationOptions& opts = {});

std::string to_string(CheckStatus s);

// Extraction prompt sent to a completion model for one statutory provision.
std::string build_extraction_prompt(std::string_view provision_text, std::string_view charge);

struct ExtractionDiagnostic {
  std::size_t triplet_index = 0;  // 0-based position in the response
  std::size_t line = 0;           // 1-based line of the triplet's delimiter
  std::string message;
};

struct ExtractionResult {
  ChainSet chains;
  std::vector<ExtractionDiagnostic> diagnostics;
};

// Parses the delimited triplet response format; malformed triplets become
// diagnostics. Throws ExtractionError when no triplet is well formed.
ExtractionResult parse_extraction_response(std::string_view text, std::string_view charge);

// Condition mini-language used in extraction responses:
//   [label] AND ([label] OR [label])
// AND binds tighter than OR. Text without brackets is a single predicate.
ConditionExpr parse_condition(std::string_view text);
std::string format_condition(const ConditionExpr& expr);

}  // namespace lcr
