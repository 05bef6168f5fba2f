#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <iostream>

#include "lcr/errors.hpp"
#include "lcr/legal_chain.hpp"
#include "lcr/text.hpp"

#include "condition_enum.hpp"

using namespace lcr;
using namespace condition_enum;

namespace {

ConditionExpr P(const char* l) { return ConditionExpr::predicate(l); }

std::vector<std::filesystem::path> chain_fixtures() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(LCR_DATA_DIR "/chains")) out.push_back(e.path());
  out.emplace_back(LCR_FIXTURE_DIR "/robbery_chains.json");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(ChainFile, RoundTripOnEveryFixture) {
  for (const auto& path : chain_fixtures()) {
    const ChainSet cs = load_chain_file(path);
    const std::string once = serialize_chain_set(cs);
    EXPECT_EQ(parse_chain_file(once), cs) << path;
    EXPECT_EQ(serialize_chain_set(parse_chain_file(once)), once) << path;
  }
}

TEST(ChainFile, RobberyBaseRange) {
  const ChainSet cs = load_chain_file(LCR_FIXTURE_DIR "/robbery_chains.json");
  EXPECT_EQ(cs.charge, "robbery");
  EXPECT_EQ(cs.chains.front().conclusion.min_months, 36);
  EXPECT_EQ(cs.chains.front().conclusion.max_months, 120);
}

TEST(ChainFile, Errors) {
  EXPECT_THROW(parse_chain_file(R"({"charge": "x", "chains": []})"), ValidationError);
  const std::string inverted = R"({"charge": "x", "chains": [{
    "premise": {"text": "p", "expr": {"pred": "p"}},
    "situation": {"text": "s", "expr": {"pred": "s"}},
    "conclusion": {"min_months": 48, "max_months": 36, "label": "c"},
    "source_provision": "Article 1"}]})";
  EXPECT_THROW(parse_chain_file(inverted), ValidationError);
  try {
    parse_chain_file(R"({"charge": "x", "chains": [{"premise": {"text": "p"}}]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("premise"), std::string::npos) << e.what();
  }
  try {
    parse_chain_file("{\n  \"charge\": \"x\",\n  oops\n}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ChainLibrary, LoadsEveryCharge) {
  const auto lib = load_chain_library(LCR_DATA_DIR "/chains");
  EXPECT_EQ(lib.size(), 12u);
  for (const auto& [charge, cs] : lib) {
    EXPECT_EQ(charge, cs.charge);
    EXPECT_TRUE(validate_chain_set(cs).ok()) << charge;
  }
  EXPECT_THROW(load_chain_library(LCR_DATA_DIR "/missing"), IoError);
}

TEST(Condition, HandCases) {
  const auto ab = ConditionExpr::all_of({P("a"), P("b")});
  EXPECT_TRUE(eval_condition(ab, {"a", "b"}));
  EXPECT_FALSE(eval_condition(ab, {"a"}));
  const auto e = ConditionExpr::any_of({P("a"), ConditionExpr::all_of({P("b"), P("c")})});
  EXPECT_FALSE(eval_condition(e, {"c"}));
  EXPECT_TRUE(eval_condition(e, {"b", "c"}));
  EXPECT_TRUE(eval_condition(P("Used  Violence "), {"used violence"}));
}

TEST(Condition, ExhaustiveTruthTables) {
  std::vector<std::set<std::string>> assignments;
  for (int a = 0; a < 64; ++a) assignments.push_back(facts_of(a));
  const std::size_t expressions = for_each_expression(4, [&](const ConditionExpr& e, std::uint64_t table) {
    EXPECT_LE(e.operator_count(), 4u);
    for (int a = 0; a < 64; ++a) {
      if (eval_condition(e, assignments[static_cast<std::size_t>(a)]) != static_cast<bool>(table >> a & 1)) {
        ADD_FAILURE() << format_condition(e) << " @" << a;
        return false;
      }
    }
    // Monotone upper bound: every labelled fact set makes it true.
    EXPECT_TRUE(eval_condition(e, e.labels()));
    EXPECT_EQ(parse_condition(format_condition(e)), e) << format_condition(e);
    return !HasFailure();
  });
  EXPECT_GT(expressions, 100000u);
  std::cout << expressions << " expressions checked\n";
}

TEST(Condition, MonotoneUnderAddedFacts) {
  const auto e = ConditionExpr::any_of(
      {ConditionExpr::all_of({P("a"), P("b")}), ConditionExpr::all_of({P("c"), P("d"), P("e")})});
  for (int a = 0; a < 64; ++a)
    for (int extra = 0; extra < 6; ++extra)
      if (eval_condition(e, facts_of(a))) {
        EXPECT_TRUE(eval_condition(e, facts_of(a | 1 << extra)));
      }
}

TEST(Condition, ParseDsl) {
  EXPECT_EQ(parse_condition("[a] AND [b] OR [c]"),
            ConditionExpr::any_of({ConditionExpr::all_of({P("a"), P("b")}), P("c")}));
  EXPECT_EQ(parse_condition("[a] AND ([b] OR [c])"),
            ConditionExpr::all_of({P("a"), ConditionExpr::any_of({P("b"), P("c")})}));
  EXPECT_EQ(parse_condition("[a] OR [b] OR [c]"), ConditionExpr::any_of({P("a"), P("b"), P("c")}));
  EXPECT_EQ(parse_condition("robbery with a gun"), P("robbery with a gun"));
  EXPECT_THROW(parse_condition("[a] AND"), ParseError);
  EXPECT_THROW(parse_condition("([a] OR [b]"), ParseError);
  EXPECT_THROW(parse_condition("[a] AND []"), ParseError);
}

TEST(Condition, StructuralDefects) {
  EXPECT_TRUE(ConditionExpr::all_of({P("a"), P("b")}).defects().empty());
  EXPECT_EQ(ConditionExpr::all_of({P("a")}).defects().size(), 1u);
  EXPECT_EQ(ConditionExpr::any_of({P(""), P("b")}).defects().size(), 1u);
}

TEST(Validation, RobberyPassesEveryCheckableConstraint) {
  const ChainSet cs = load_chain_file(LCR_FIXTURE_DIR "/robbery_chains.json");
  const auto rep = validate_chain_set(cs);
  EXPECT_TRUE(rep.ok());
  for (const char* c : {"semantic_separation", "logical_coherence", "referential_specificity",
                        "sentencing_specificity"})
    EXPECT_EQ(rep.check(c).status, CheckStatus::Pass) << c;
  EXPECT_EQ(rep.check("exhaustiveness").status, CheckStatus::NotCheckable);
  EXPECT_EQ(validate_chain_set(cs), rep);
}

TEST(Validation, FailuresAreReported) {
  ChainSet cs = load_chain_file(LCR_FIXTURE_DIR "/robbery_chains.json");
  ChainSet overlap = cs;
  overlap.chains[0].premise.expr =
      ConditionExpr::all_of({P("used violence and threats"), P("purpose of illegal possession")});
  auto rep = validate_chain_set(overlap);
  EXPECT_EQ(rep.check("semantic_separation").status, CheckStatus::Fail);
  EXPECT_FALSE(rep.ok());

  ChainSet vague = cs;
  vague.chains[1].conclusion = SentencingRange{"punish severely", std::nullopt, std::nullopt, ""};
  rep = validate_chain_set(vague);
  EXPECT_EQ(rep.check("sentencing_specificity").status, CheckStatus::Fail);
  EXPECT_THROW(serialize_chain_set(vague), ValidationError);

  ChainSet pronoun = cs;
  pronoun.chains[0].situation.text = "he kept the property";
  rep = validate_chain_set(pronoun);
  EXPECT_EQ(rep.check("referential_specificity").status, CheckStatus::Fail);
  EXPECT_TRUE(rep.check("referential_specificity").advisory);
  EXPECT_TRUE(rep.ok());
  ValidationOptions opts;
  opts.pronoun_stoplist = {"kept"};
  EXPECT_EQ(validate_chain_set(cs, opts).check("referential_specificity").status, CheckStatus::Pass);
}

TEST(ExtractionPrompt, ContainsConstraintsAndIsStable) {
  const std::string provision = "Article 263: Whoever robs public or private property by violence...";
  const auto p = build_extraction_prompt(provision, "robbery");
  for (const char* c : {"Exhaustiveness", "Semantic separation", "Logical coherence",
                        "Referential specificity", "Sentencing specificity"})
    EXPECT_NE(p.find(c), std::string::npos) << c;
  EXPECT_NE(p.find(provision), std::string::npos);
  EXPECT_EQ(p, build_extraction_prompt(provision, "robbery"));
  EXPECT_THROW(build_extraction_prompt("", "robbery"), ArgumentError);
}

TEST(ExtractionResponse, TripletsInOrder) {
  const std::string two =
      "Here are the chains.\n"
      "===CHAIN===\n"
      "PREMISE: [used violence] AND [rob property]\n"
      "SITUATION: [purpose of illegal possession]\n"
      "CONCLUSION: base robbery range: 36-120 months\n"
      "===CHAIN===\n"
      "PREMISE: [used violence] AND [rob property]\n"
      "SITUATION: [robbery with a gun] OR [robbery committed many times]\n"
      "CONCLUSION: aggravated robbery range: 120-180 months\n";
  const auto r = parse_extraction_response(two, "robbery");
  ASSERT_EQ(r.chains.chains.size(), 2u);
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_EQ(r.chains.charge, "robbery");
  EXPECT_EQ(r.chains.chains[0].conclusion.min_months, 36);
  EXPECT_EQ(r.chains.chains[1].conclusion.max_months, 180);
  EXPECT_EQ(r.chains.chains[1].situation.expr.kind(), ConditionExpr::Kind::Or);
}

TEST(ExtractionResponse, MalformedTripletBecomesDiagnostic) {
  const std::string three =
      "===CHAIN===\n"
      "PREMISE: [a] AND [b]\n"
      "SITUATION: [c]\n"
      "CONCLUSION: first range: 6-36 months\n"
      "===CHAIN===\n"
      "PREMISE: [a] AND [b]\n"
      "CONCLUSION: missing situation range: 36-120 months\n"
      "===CHAIN===\n"
      "PREMISE: [a] AND [b]\n"
      "SITUATION: [d]\n"
      "CONCLUSION: third range: 36-120 months\n";
  const auto r = parse_extraction_response(three, "x");
  EXPECT_EQ(r.chains.chains.size(), 2u);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].triplet_index, 1u);
  EXPECT_EQ(r.diagnostics[0].line, 5u);
  EXPECT_THROW(parse_extraction_response("", "x"), ExtractionError);
  EXPECT_THROW(parse_extraction_response("===CHAIN===\nPREMISE: [a]\n", "x"), ExtractionError);
}

TEST(NormalizeLabel, TrimFoldCollapse) {
  EXPECT_EQ(normalize_label("  Used\tViolence   AND threats "), "used violence and threats");
  EXPECT_EQ(normalize_label(""), "");
}
