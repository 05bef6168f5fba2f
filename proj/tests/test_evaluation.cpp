#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "lcr/errors.hpp"
#include "lcr/evaluation.hpp"
#include "lcr/sentencing.hpp"
#include "lcr/tokenizer.hpp"
#include "oracles.hpp"

using namespace lcr;
using Toks = std::vector<std::string>;

namespace {

Toks toks(std::initializer_list<const char*> w) { return Toks(w.begin(), w.end()); }

}  // namespace

TEST(SentenceError, HandValues) {
  std::vector<std::optional<int>> p = {48};
  std::vector<int> g = {42};
  auto s = sentence_error(p, g);
  EXPECT_DOUBLE_EQ(s.mae, 6.0);
  EXPECT_DOUBLE_EQ(s.rmse, 6.0);
  p = {36, 48};
  g = {42, 42};
  s = sentence_error(p, g);
  EXPECT_DOUBLE_EQ(s.mae, 6.0);
  EXPECT_DOUBLE_EQ(s.rmse, 6.0);
  p = {42, 42};
  s = sentence_error(p, g);
  EXPECT_EQ(s.mae, 0.0);
  EXPECT_EQ(s.rmse, 0.0);
}

TEST(SentenceError, AbsentPolicies) {
  std::vector<std::optional<int>> p = {std::nullopt, 40};
  std::vector<int> g = {30, 42};
  const auto pen = sentence_error(p, g);
  EXPECT_DOUBLE_EQ(pen.mae, 16.0);
  EXPECT_EQ(pen.absent, 1u);
  const auto drop = sentence_error(p, g, AbsentPolicy::Drop);
  EXPECT_DOUBLE_EQ(drop.mae, 2.0);
  EXPECT_EQ(drop.counted, 1u);
}

TEST(SentenceError, EmptyAndMismatchedInputsThrow) {
  std::vector<std::optional<int>> p;
  std::vector<int> g;
  EXPECT_THROW(sentence_error(p, g), ArgumentError);
  p = {1};
  EXPECT_THROW(sentence_error(p, g), ArgumentError);
}

TEST(SentenceError, MaeNeverExceedsRmse) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(1, 30), months(0, 240);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p, g;
    for (int i = len(rng); i > 0; --i) {
      p.push_back(months(rng));
      g.push_back(months(rng));
    }
    const auto s = sentence_error(p, g);
    EXPECT_LE(s.mae, s.rmse + 1e-12);
  }
}

TEST(Rouge, HandCounts) {
  const auto r1 = rouge_n(toks({"a", "b", "c"}), toks({"a", "b", "d"}), 1);
  EXPECT_DOUBLE_EQ(r1.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r1.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r1.f1, 2.0 / 3.0);
  const auto rl = rouge_l(toks({"a", "b", "c"}), toks({"c", "a", "b"}));
  EXPECT_EQ(rl.overlap, 2u);
  EXPECT_DOUBLE_EQ(rl.f1, 2.0 / 3.0);
}

TEST(Rouge, IdenticalAndEmpty) {
  const auto t = toks({"the", "court", "holds", "the", "charge"});
  EXPECT_DOUBLE_EQ(rouge_n(t, t, 1).f1, 1.0);
  EXPECT_DOUBLE_EQ(rouge_n(t, t, 2).f1, 1.0);
  EXPECT_DOUBLE_EQ(rouge_l(t, t).f1, 1.0);
  const auto e = rouge_n(t, Toks{}, 1);
  EXPECT_EQ(e.precision, 0.0);
  EXPECT_EQ(e.recall, 0.0);
  EXPECT_EQ(e.f1, 0.0);
}

TEST(Bleu, ClippingAndIdentity) {
  const auto b = bleu(toks({"a", "a", "a"}), toks({"a", "b"}), 1);
  EXPECT_EQ(b.matches[0], 1u);
  EXPECT_DOUBLE_EQ(b.brevity_penalty, 1.0);
  EXPECT_DOUBLE_EQ(b.bleu(1), 1.0 / 3.0);
  const auto t = toks({"a", "b", "c", "d", "e"});
  const auto same = bleu(t, t);
  for (int n = 1; n <= 4; ++n) EXPECT_DOUBLE_EQ(same.bleu(n), 1.0);
  EXPECT_EQ(bleu(Toks{}, t).bleu(4), 0.0);
}

TEST(Bleu, ShortCandidateAndSmoothing) {
  const auto c = toks({"a", "b"});
  const auto r = toks({"a", "b", "c"});
  const auto plain = bleu(c, r, 4);
  EXPECT_EQ(plain.precisions[2], 0.0);
  EXPECT_EQ(plain.bleu(4), 0.0);
  EXPECT_NEAR(plain.brevity_penalty, std::exp(1.0 - 3.0 / 2.0), 1e-15);
  const auto smooth = bleu(c, r, 4, true);
  EXPECT_GT(smooth.bleu(4), 0.0);
}

TEST(MetricOracle, RandomPairsMatchBruteForce) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [cand, ref] = oracle::random_pair(rng);
    for (int n = 1; n <= 2; ++n) {
      const auto got = rouge_n(cand, ref, n);
      const auto want = oracle::rouge_n(cand, ref, n);
      EXPECT_EQ(got.overlap, want.overlap);
      EXPECT_EQ(got.f1, want.f1);
    }
    EXPECT_EQ(rouge_l(cand, ref).f1, oracle::rouge_l(cand, ref).f1);
    const auto b = bleu(cand, ref, 4);
    for (int n : {1, 2, 4}) EXPECT_EQ(b.bleu(n), oracle::bleu(cand, ref, n)) << trial;
  }
}

TEST(MetricReport, TextMetricsInUnitInterval) {
  SynthesisSpec spec;
  spec.cases_per_charge = 3;
  const auto lib = load_chain_library(LCR_DATA_DIR "/chains");
  const auto gold = synthesize_corpus(1, spec, lib);
  std::vector<std::string> pred;
  for (std::size_t i = 0; i < gold.size(); ++i) pred.push_back(gold[(i + 1) % gold.size()].opinion);
  const auto rep = evaluate_opinions(pred, gold);
  for (double v : {rep.rouge1, rep.rouge2, rep.rougeL, rep.bleu1, rep.bleu2, rep.bleuN}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_LE(rep.error.mae, rep.error.rmse);
  EXPECT_EQ(rep.per_case.size(), gold.size());
  const auto j = nlohmann::json::parse(metric_report_json(rep));
  EXPECT_EQ(j.at("cases").get<std::size_t>(), gold.size());
}

TEST(Extraction, SentenceClauses) {
  EXPECT_EQ(extract_sentence_months("the judgment is as follows: 42 months of fixed-term imprisonment."),
            42);
  EXPECT_EQ(extract_sentence_months("判处有期徒刑42个月"), 42);
  EXPECT_EQ(extract_sentence_months("no sentence here"), std::nullopt);
  EXPECT_EQ(extract_sentence_months("12 months of fixed-term imprisonment, then 30 months of "
                                    "fixed-term imprisonment"),
            30);
}

TEST(Screening, RobberyOpinionsMatchRecordedVerdicts) {
  const auto chains = load_chain_file(LCR_FIXTURE_DIR "/robbery_chains.json");
  std::ifstream in(LCR_FIXTURE_DIR "/robbery_opinions.jsonl");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const auto s = screen_opinion(j.at("opinion").get<std::string>(), "Defendant A", chains);
    const auto sys = j.at("system").get<std::string>();
    EXPECT_EQ(s.defendant_ok, j.at("defendant_ok").get<bool>()) << sys;
    EXPECT_EQ(s.situation_ok, j.at("situation_ok").get<bool>()) << sys;
    EXPECT_EQ(s.sentencing_ok, j.at("sentencing_ok").get<bool>()) << sys;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Screening, GoldSyntheticOpinionsPassEveryCheck) {
  const auto lib = load_chain_library(LCR_DATA_DIR "/chains");
  SynthesisSpec spec;
  spec.cases_per_charge = 20;
  const auto gold = synthesize_corpus(8, spec, lib);
  std::vector<std::string> opinions;
  for (const auto& r : gold) opinions.push_back(r.opinion);
  const auto rep = screen_corpus(opinions, gold, lib);
  EXPECT_DOUBLE_EQ(rep.combined, 100.0);
  for (std::size_t i = 0; i < gold.size(); ++i)
    EXPECT_TRUE(rep.cases[i].situation_ok && rep.cases[i].sentencing_ok) << gold[i].case_id;
}

TEST(Screening, EmptyChainSetIsAConfigurationError) {
  ChainSet empty;
  empty.charge = "robbery";
  EXPECT_THROW(screen_opinion("Defendant A", "Defendant A", empty), ConfigError);
}

TEST(CombinedScore, MultiplicativeAndChecked) {
  EXPECT_NEAR(combined_score(8.45, 42.26, 76.15), 2.72, 0.01);
  EXPECT_DOUBLE_EQ(combined_score(100, 100, 100), 100.0);
  EXPECT_NEAR(combined_score(99.41, 67.20, 78.49), 52.39, 0.1);
  EXPECT_THROW(combined_score(101, 50, 50), ArgumentError);
  EXPECT_THROW(combined_score(-1, 50, 50), ArgumentError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng), bump = u(rng) * (100.0 - a) / 100.0;
    EXPECT_LE(combined_score(a, b, c), combined_score(a + bump, b, c) + 1e-12);
    EXPECT_NEAR(combined_score(a, b, c), a * b * c / 1e4, 1e-9);
  }
}

TEST(PairwisePrompt, DeterministicMirroredAndVerbatim) {
  const std::string fact = "Defendant A took a wallet.";
  const std::string a = "Opinion text one.", b = "Opinion text two.";
  const auto p = build_pairwise_prompt(fact, a, b);
  EXPECT_EQ(p, build_pairwise_prompt(fact, a, b));
  EXPECT_NE(p.find(a), std::string::npos);
  EXPECT_NE(p.find(b), std::string::npos);
  // Swapping the candidates exchanges their slots and changes nothing else.
  std::string mirrored = build_pairwise_prompt(fact, b, a);
  const auto ia = mirrored.find(b), ib = mirrored.find(a);
  mirrored.replace(ib, a.size(), b);
  mirrored.replace(ia, b.size(), a);
  EXPECT_EQ(mirrored, p);
  EXPECT_THROW(build_pairwise_prompt(fact, "", b), ArgumentError);
}

TEST(PairwisePrompt, VerdictParsing) {
  EXPECT_EQ(parse_pairwise_verdict(" A"), PairwiseVerdict::A);
  EXPECT_EQ(parse_pairwise_verdict("\"B\" is better"), PairwiseVerdict::B);
  EXPECT_EQ(parse_pairwise_verdict("neither"), PairwiseVerdict::Unparsed);
}
