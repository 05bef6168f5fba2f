#include "lcr/evaluation.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "lcr/errors.hpp"
#include "lcr/sentencing.hpp"
#include "lcr/text.hpp"
#include "lcr/tokenizer.hpp"

namespace lcr {

ErrorStats sentence_error(std::span<const std::optional<int>> predicted, std::span<const int> gold,
                          AbsentPolicy policy) {
  if (predicted.size() != gold.size())
    throw ArgumentError("sentence_error: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(gold.size()) + " gold terms");
  if (gold.empty()) throw ArgumentError("sentence_error: no cases");
  ErrorStats s;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    double p;
    if (predicted[i]) {
      p = *predicted[i];
    } else {
      ++s.absent;
      if (policy == AbsentPolicy::Drop) continue;
      p = 0.0;
    }
    const double e = p - gold[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    ++s.counted;
  }
  if (s.counted > 0) {
    s.mae = abs_sum / static_cast<double>(s.counted);
    s.rmse = std::sqrt(sq_sum / static_cast<double>(s.counted));
  }
  return s;
}

ErrorStats sentence_error(std::span<const double> predicted, std::span<const double> gold) {
  if (predicted.size() != gold.size()) throw ArgumentError("sentence_error: length mismatch");
  if (gold.empty()) throw ArgumentError("sentence_error: no cases");
  ErrorStats s;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const double e = predicted[i] - gold[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  s.counted = gold.size();
  if (s.counted > 0) {
    s.mae = abs_sum / static_cast<double>(s.counted);
    s.rmse = std::sqrt(sq_sum / static_cast<double>(s.counted));
  }
  return s;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(std::span<const std::string> toks, int n) {
  NgramCounts out;
  const auto un = static_cast<std::size_t>(n);
  if (toks.size() < un) return out;
  for (std::size_t i = 0; i + un <= toks.size(); ++i)
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + un))];
  return out;
}

std::size_t total(const NgramCounts& c) {
  std::size_t t = 0;
  for (const auto& [g, k] : c) t += k;
  return t;
}

std::size_t clipped_matches(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [g, k] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) m += std::min(k, it->second);
  }
  return m;
}

OverlapScore finish(std::size_t overlap, std::size_t cand_total, std::size_t ref_total) {
  OverlapScore s;
  s.overlap = overlap;
  s.candidate_total = cand_total;
  s.reference_total = ref_total;
  s.precision = cand_total ? static_cast<double>(overlap) / static_cast<double>(cand_total) : 0.0;
  s.recall = ref_total ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

}  // namespace

OverlapScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference,
                     int n) {
  if (n < 1) throw ArgumentError("rouge_n: n must be >= 1");
  const auto c = ngrams(candidate, n);
  const auto r = ngrams(reference, n);
  return finish(clipped_matches(c, r), total(c), total(r));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

OverlapScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return finish(lcs_length(candidate, reference), candidate.size(), reference.size());
}

BleuScore bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
               int max_order, bool add_one_smoothing) {
  if (max_order < 1) throw ArgumentError("bleu: max_order must be >= 1");
  BleuScore s;
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  s.brevity_penalty = c == 0.0 ? 0.0 : (c >= r ? 1.0 : std::exp(1.0 - r / c));
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_order; ++n) {
    const auto cn = ngrams(candidate, n);
    const auto m = clipped_matches(cn, ngrams(reference, n));
    const auto t = total(cn);
    s.matches.push_back(m);
    s.totals.push_back(t);
    double p;
    if (add_one_smoothing)
      p = (static_cast<double>(m) + 1.0) / (static_cast<double>(t) + 1.0);
    else
      p = t ? static_cast<double>(m) / static_cast<double>(t) : 0.0;
    s.precisions.push_back(p);
    if (p <= 0.0) zero = true;
    else log_sum += std::log(p);
    s.cumulative.push_back(zero || s.brevity_penalty == 0.0
                               ? 0.0
                               : s.brevity_penalty * std::exp(log_sum / static_cast<double>(n)));
  }
  return s;
}

TextScores score_text(std::string_view candidate, std::string_view reference) {
  const auto c = token_strings(candidate);
  const auto r = token_strings(reference);
  return {rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r), bleu(c, r, 4)};
}

MetricReport evaluate_opinions(std::span<const std::string> predicted,
                               std::span<const CaseRecord> gold, AbsentPolicy policy) {
  if (predicted.size() != gold.size())
    throw ArgumentError("evaluate_opinions: " + std::to_string(predicted.size()) +
                        " opinions for " + std::to_string(gold.size()) + " cases");
  MetricReport rep;
  rep.cases = gold.size();
  std::vector<std::optional<int>> months;
  std::vector<int> gold_months;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    months.push_back(extract_sentence_months(predicted[i]));
    if (!months.back()) rep.diagnostics.push_back(gold[i].case_id + ": no sentencing clause");
    gold_months.push_back(gold[i].sentence_months);
    if (trim(gold[i].opinion).empty())
      rep.diagnostics.push_back(gold[i].case_id + ": empty reference opinion");
    const auto t = score_text(predicted[i], gold[i].opinion);
    rep.rouge1 += t.rouge1.f1;
    rep.rouge2 += t.rouge2.f1;
    rep.rougeL += t.rougeL.f1;
    rep.bleu1 += t.bleu.bleu(1);
    rep.bleu2 += t.bleu.bleu(2);
    rep.bleuN += t.bleu.bleu(4);
    rep.per_case.push_back({gold[i].case_id, months.back(), gold[i].sentence_months, t.rouge1.f1,
                            t.rouge2.f1, t.rougeL.f1, t.bleu.bleu(1), t.bleu.bleu(2),
                            t.bleu.bleu(4)});
  }
  rep.error = sentence_error(months, gold_months, policy);
  if (!gold.empty()) {
    const double n = static_cast<double>(gold.size());
    for (double* v : {&rep.rouge1, &rep.rouge2, &rep.rougeL, &rep.bleu1, &rep.bleu2, &rep.bleuN})
      *v /= n;
  }
  return rep;
}

std::string metric_report_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["cases"] = r.cases;
  j["mae"] = r.error.mae;
  j["rmse"] = r.error.rmse;
  j["absent_sentences"] = r.error.absent;
  j["rouge1"] = r.rouge1;
  j["rouge2"] = r.rouge2;
  j["rougeL"] = r.rougeL;
  j["bleu1"] = r.bleu1;
  j["bleu2"] = r.bleu2;
  j["bleu4"] = r.bleuN;
  auto& cases = j["per_case"] = nlohmann::ordered_json::array();
  for (const auto& c : r.per_case) {
    nlohmann::ordered_json e;
    e["case_id"] = c.case_id;
    e["predicted_months"] = c.predicted_months ? nlohmann::ordered_json(*c.predicted_months)
                                               : nlohmann::ordered_json(nullptr);
    e["gold_months"] = c.gold_months;
    e["rouge1"] = c.rouge1;
    e["rouge2"] = c.rouge2;
    e["rougeL"] = c.rougeL;
    e["bleu1"] = c.bleu1;
    e["bleu2"] = c.bleu2;
    e["bleu4"] = c.bleuN;
    cases.push_back(std::move(e));
  }
  j["diagnostics"] = r.diagnostics;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Screening
// ---------------------------------------------------------------------------

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Whole-word occurrence of `needle` in `hay` (both normalized).
bool contains_phrase(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return false;
  for (std::size_t at = hay.find(needle); at != std::string_view::npos;
       at = hay.find(needle, at + 1)) {
    const bool left = at == 0 || !is_word_char(hay[at - 1]) || !is_word_char(needle.front());
    const std::size_t after = at + needle.size();
    const bool right =
        after >= hay.size() || !is_word_char(hay[after]) || !is_word_char(needle.back());
    if (left && right) return true;
  }
  return false;
}

std::set<std::string> chain_labels(const LegalChain& ch) {
  auto out = ch.premise.expr.labels();
  ch.situation.expr.collect_labels(out);
  return out;
}

}  // namespace

std::vector<std::string> realized_predicates(std::string_view opinion, const ChainSet& chains) {
  const std::string text = normalize_label(opinion);
  std::set<std::string> labels;
  for (const auto& ch : chains.chains) {
    const auto l = chain_labels(ch);
    labels.insert(l.begin(), l.end());
  }
  std::vector<std::string> out;
  for (const auto& label : labels) {
    bool hit = contains_phrase(text, label);
    if (auto it = chains.lexicon.find(label); !hit && it != chains.lexicon.end())
      for (const auto& phrase : it->second)
        if (contains_phrase(text, normalize_label(phrase))) {
          hit = true;
          break;
        }
    if (hit) out.push_back(label);
  }
  return out;
}

CaseScreening screen_opinion(std::string_view opinion, std::string_view defendant,
                             const ChainSet& chains) {
  if (chains.chains.empty())
    throw ConfigError("screen_opinion: no chains for charge '" + chains.charge + "'");
  CaseScreening s;
  const std::string text = normalize_label(opinion);
  const std::string who = normalize_label(defendant);
  s.defendant_ok = !who.empty() && contains_phrase(text, who);
  s.realized_predicates = realized_predicates(opinion, chains);
  const std::set<std::string> realized(s.realized_predicates.begin(), s.realized_predicates.end());

  std::size_t best_overlap = 0;
  for (std::size_t i = 0; i < chains.chains.size(); ++i) {
    std::size_t overlap = 0;
    for (const auto& l : chain_labels(chains.chains[i])) overlap += realized.count(l);
    if (!s.matched_chain || overlap > best_overlap) {
      s.matched_chain = i;
      best_overlap = overlap;
    }
  }
  s.extracted_months = extract_sentence_months(opinion);
  if (s.matched_chain && best_overlap > 0) {
    const auto& ch = chains.chains[*s.matched_chain];
    s.situation_ok =
        eval_condition(ch.premise.expr, realized) && eval_condition(ch.situation.expr, realized);
    s.sentencing_ok = s.extracted_months && ch.conclusion.contains(*s.extracted_months);
  }
  return s;
}

double combined_score(double defendant_pct, double situation_pct, double sentencing_pct) {
  for (double v : {defendant_pct, situation_pct, sentencing_pct})
    if (!(v >= 0.0 && v <= 100.0))
      throw ArgumentError("combined_score: accuracy " + std::to_string(v) + " outside [0, 100]");
  return defendant_pct / 100.0 * (situation_pct / 100.0) * (sentencing_pct / 100.0) * 100.0;
}

ScreeningReport screen_corpus(std::span<const std::string> opinions,
                              std::span<const CaseRecord> cases, const ChainLibrary& library) {
  if (opinions.size() != cases.size())
    throw ArgumentError("screen_corpus: " + std::to_string(opinions.size()) + " opinions for " +
                        std::to_string(cases.size()) + " cases");
  ScreeningReport rep;
  std::size_t d = 0, s = 0, t = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    auto it = library.find(cases[i].charge);
    if (it == library.end())
      throw UnknownChargeError("screen_corpus: no chain set for charge '" + cases[i].charge + "'");
    rep.cases.push_back(screen_opinion(opinions[i], cases[i].defendant, it->second));
    d += rep.cases.back().defendant_ok;
    s += rep.cases.back().situation_ok;
    t += rep.cases.back().sentencing_ok;
  }
  if (!cases.empty()) {
    const double n = static_cast<double>(cases.size());
    rep.defendant_accuracy = 100.0 * static_cast<double>(d) / n;
    rep.situation_accuracy = 100.0 * static_cast<double>(s) / n;
    rep.sentencing_accuracy = 100.0 * static_cast<double>(t) / n;
  }
  rep.combined = combined_score(rep.defendant_accuracy, rep.situation_accuracy,
                                rep.sentencing_accuracy);
  return rep;
}

std::string build_pairwise_prompt(std::string_view fact, std::string_view opinion_a,
                                  std::string_view opinion_b) {
  if (trim(fact).empty() || trim(opinion_a).empty() || trim(opinion_b).empty())
    throw ArgumentError("build_pairwise_prompt: fact and both opinions must be non-empty");
  std::string p;
  p += "You are reviewing two draft opinions written by a criminal court for the same case.\n\n";
  p += "Case facts:\n";
  p += fact;
  p += "\n\nOpinion A:\n";
  p += opinion_a;
  p += "\n\nOpinion B:\n";
  p += opinion_b;
  p += "\n\nJudge which draft reasons more soundly from the facts to the charge and whose "
       "sentence follows from that reasoning. Answer with a single letter, A or B.\n";
  return p;
}

PairwiseVerdict parse_pairwise_verdict(std::string_view response) {
  for (char c : response) {
    if (c == 'A') return PairwiseVerdict::A;
    if (c == 'B') return PairwiseVerdict::B;
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '"' && c != '\'' && c != '(') break;
  }
  return PairwiseVerdict::Unparsed;
}

}  // namespace lcr
