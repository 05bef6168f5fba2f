#pragma once

// Sentence-prediction error, n-gram overlap metrics, rule-based opinion
// screening, and the pairwise judge prompt.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcr/corpus.hpp"
#include "lcr/legal_chain.hpp"

namespace lcr {

enum class AbsentPolicy {
  PenalizeAsZero,  // a missing prediction counts as 0 months
  Drop,            // a missing prediction is left out of the averages
};

struct ErrorStats {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t counted = 0;
  std::size_t absent = 0;
};

ErrorStats sentence_error(std::span<const std::optional<int>> predicted, std::span<const int> gold,
                          AbsentPolicy policy = AbsentPolicy::PenalizeAsZero);
ErrorStats sentence_error(std::span<const double> predicted, std::span<const double> gold);

struct OverlapScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t overlap = 0;          // clipped n-gram matches, or LCS length
  std::size_t candidate_total = 0;  // candidate n-grams, or candidate length
  std::size_t reference_total = 0;
};

OverlapScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference,
                     int n);
OverlapScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct BleuScore {
  std::vector<std::size_t> matches;  // clipped matches per order 1..N
  std::vector<std::size_t> totals;   // candidate n-grams per order
  std::vector<double> precisions;    // modified precisions (smoothed if requested)
  double brevity_penalty = 0.0;
  std::vector<double> cumulative;    // BLEU-1 .. BLEU-N

  double bleu(int n) const { return cumulative.at(static_cast<std::size_t>(n - 1)); }
};

// Cumulative BLEU with uniform weights. Add-one smoothing is off by default.
BleuScore bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
               int max_order = 4, bool add_one_smoothing = false);

// Per-opinion text metrics on tokenized strings.
struct TextScores {
  OverlapScore rouge1, rouge2, rougeL;
  BleuScore bleu;
};
TextScores score_text(std::string_view candidate, std::string_view reference);

struct CaseMetrics {
  std::string case_id;
  std::optional<int> predicted_months;
  int gold_months = 0;
  double rouge1 = 0.0, rouge2 = 0.0, rougeL = 0.0;
  double bleu1 = 0.0, bleu2 = 0.0, bleuN = 0.0;
};

struct MetricReport {
  std::size_t cases = 0;
  ErrorStats error;
  double rouge1 = 0.0, rouge2 = 0.0, rougeL = 0.0;  // mean F1, in [0, 1]
  double bleu1 = 0.0, bleu2 = 0.0, bleuN = 0.0;      // mean cumulative BLEU, in [0, 1]
  std::vector<CaseMetrics> per_case;
  std::vector<std::string> diagnostics;
};

MetricReport evaluate_opinions(std::span<const std::string> predicted,
                               std::span<const CaseRecord> gold,
                               AbsentPolicy policy = AbsentPolicy::PenalizeAsZero);

std::string metric_report_json(const MetricReport& report);

// Rule-based screening of one generated opinion.
struct CaseScreening {
  bool defendant_ok = false;
  bool situation_ok = false;
  bool sentencing_ok = false;
  std::optional<std::size_t> matched_chain;
  std::optional<int> extracted_months;
  std::vector<std::string> realized_predicates;
};

// Predicate labels whose surface forms occur in `opinion`.
std::vector<std::string> realized_predicates(std::string_view opinion, const ChainSet& chains);

CaseScreening screen_opinion(std::string_view opinion, std::string_view defendant,
                             const ChainSet& chains);

struct ScreeningReport {
  std::vector<CaseScreening> cases;
  double defendant_accuracy = 0.0;  // percentages
  double situation_accuracy = 0.0;
  double sentencing_accuracy = 0.0;
  double combined = 0.0;
};

ScreeningReport screen_corpus(std::span<const std::string> opinions,
                              std::span<const CaseRecord> cases, const ChainLibrary& library);

// Product of three percentage accuracies, as a percentage.
double combined_score(double defendant_pct, double situation_pct, double sentencing_pct);

// Prompt asking a judge model which of two opinions is better. Swapping the
// opinions swaps their labels and nothing else.
std::string build_pairwise_prompt(std::string_view fact, std::string_view opinion_a,
                                  std::string_view opinion_b);

enum class PairwiseVerdict { A, B, Unparsed };
PairwiseVerdict parse_pairwise_verdict(std::string_view response);

}  // namespace lcr
