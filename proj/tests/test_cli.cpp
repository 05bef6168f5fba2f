#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include <nlohmann/json.hpp>

#include "cli_harness.hpp"

using namespace cli_harness;

namespace {

const std::string kChains = LCR_DATA_DIR "/chains";

}  // namespace

TEST(Cli, PipelineIsByteReproducible) {
  const auto steps = pipeline(LCR_DATA_DIR, LCR_FIXTURE_DIR);
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  for (const auto& step : steps) {
    const auto ra = run(a, step.args);
    const auto rb = run(b, step.args);
    ASSERT_EQ(ra.code, 0) << step.name << ": " << ra.err;
    ASSERT_EQ(rb.code, 0) << step.name << ": " << rb.err;
    EXPECT_EQ(ra.out, rb.out) << step.name;
  }
  const auto sa = snapshot(a);
  EXPECT_EQ(sa, snapshot(b));
  for (const char* f : {"prompt.txt", "parsed.json", "corpus.jsonl", "model.ckpt", "log.csv", "generated.jsonl",
                        "sampled.jsonl", "metrics.json", "screen.json", "judge.jsonl"})
    EXPECT_TRUE(sa.count(f)) << f;
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(Cli, ScreeningGoldCorpusScoresFull) {
  const auto d = fresh_dir("gold");
  ASSERT_EQ(run(d, {"synth-corpus", "--chains", kChains, "--seed", "1", "--out", "gold.jsonl"}).code, 0);
  const auto r = run(d, {"screen", "--opinions", "gold.jsonl", "--chains", kChains});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("combined score 100.00"), std::string::npos) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["cases"], 240);
  EXPECT_EQ(j["combined_score"], 100.0);
  const auto e = run(d, {"evaluate", "--opinions", "gold.jsonl", "--corpus", "gold.jsonl"});
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(nlohmann::json::parse(e.out)["rougeL"], 1.0);
  std::filesystem::remove_all(d);
}

TEST(Cli, ExitCodes) {
  const auto d = fresh_dir("codes");
  EXPECT_EQ(run(d, {"--help"}).code, 0);
  EXPECT_EQ(run(d, {"train", "--help"}).code, 0);
  EXPECT_EQ(run(d, {}).code, 1);
  EXPECT_EQ(run(d, {"frobnicate"}).code, 1);
  EXPECT_EQ(run(d, {"train", "--chains", kChains}).code, 1);
  EXPECT_EQ(run(d, {"synth-corpus", "--chains", kChains, "--out", "x.jsonl", "--seed", "abc"}).code, 1);

  EXPECT_EQ(run(d, {"screen", "--opinions", "missing.jsonl", "--chains", kChains}).code, 3);
  EXPECT_EQ(run(d, {"validate-chains", "--chains", "/nonexistent"}).code, 3);

  // Validation and contract failures.
  {
    std::ofstream f(d / "bad.json");
    f << R"({"charge": "x", "chains": [{"premise": {"text": "he took it", "expr": {"and": [{"pred": "a"}, {"pred": "b"}]}},
      "situation": {"text": "s", "expr": {"pred": "a"}}, "conclusion": {"min_months": 1, "max_months": 2, "label": "c"},
      "source_provision": "Article 1"}]})";
  }
  const auto v = run(d, {"validate-chains", "--chains", "bad.json"});
  EXPECT_EQ(v.code, 2);
  EXPECT_EQ(nlohmann::json::parse(v.out)["x"]["checks"]["semantic_separation"]["status"], "fail");
  {
    std::ofstream f(d / "garbage.jsonl");
    f << "{\"case_id\": \"a\"}\n";
  }
  const auto g = run(d, {"screen", "--opinions", "garbage.jsonl", "--chains", kChains});
  EXPECT_EQ(g.code, 2);
  EXPECT_NE(g.err.find("line 1"), std::string::npos) << g.err;
  EXPECT_EQ(run(d, {"synth-corpus", "--chains", kChains, "--out", "x.jsonl", "--ratio", "1.5",
                    "--train-out", "t.jsonl"}).code,
            2);
  EXPECT_EQ(run(d, {"gradcheck", "--d", "8", "--heads", "3"}).code, 2);
  EXPECT_EQ(run(d, {"gradcheck", "--d", "8", "--layers", "1", "--ff-dim", "8", "--tolerance", "0"}).code, 2);
  std::filesystem::remove_all(d);
}

TEST(Cli, ConfigFilePrecedence) {
  const auto d = fresh_dir("config");
  {
    std::ofstream f(d / "run.toml");
    f << "[synth-corpus]\ncases-per-charge = 1\nseed = 4\n";
  }
  const std::vector<std::string> base = {"synth-corpus", "--chains", kChains, "--out", "c.jsonl"};
  auto r = run(d, base, "CHAIN_REASONER_CONFIG=run.toml");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "wrote 12 cases\n");
  EXPECT_NE(r.err.find("\"seed\":\"4\""), std::string::npos) << r.err;

  auto flags = base;
  flags.insert(flags.end(), {"--cases-per-charge", "3"});
  r = run(d, flags, "CHAIN_REASONER_CONFIG=run.toml");
  EXPECT_EQ(r.out, "wrote 36 cases\n");

  auto explicit_cfg = base;
  explicit_cfg.insert(explicit_cfg.end(), {"--config", "run.toml"});
  EXPECT_EQ(run(d, explicit_cfg).out, "wrote 12 cases\n");
  EXPECT_EQ(run(d, base).out, "wrote 240 cases\n");
  std::filesystem::remove_all(d);
}

TEST(Cli, ExtractPromptThroughEndpoint) {
  httplib::Server server;
  std::string auth;
  server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    const auto prompt = nlohmann::json::parse(req.body).at("prompt").get<std::string>();
    res.set_content(nlohmann::json{{"text", "chars=" + std::to_string(prompt.size())}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto d = fresh_dir("endpoint");
  const std::string provision = LCR_FIXTURE_DIR "/article263.txt";
  const auto local = run(d, {"extract-prompt", "--provision", provision, "--charge", "robbery"});
  const auto remote = run(d, {"extract-prompt", "--provision", provision, "--charge", "robbery",
                              "--llm-endpoint", "http://127.0.0.1:" + std::to_string(port) + "/v1/complete"},
                          "CHAIN_REASONER_LLM_TOKEN=tok");
  server.stop();
  t.join();
  ASSERT_EQ(remote.code, 0) << remote.err;
  EXPECT_EQ(remote.out, "chars=" + std::to_string(local.out.size()));
  EXPECT_EQ(auth, "Bearer tok");
  EXPECT_EQ(run(d, {"extract-prompt", "--provision", provision, "--charge", "robbery", "--llm-endpoint",
                    "http://127.0.0.1:1/none"}).code,
            3);
  std::filesystem::remove_all(d);
}

TEST(Cli, ParseChainsReportsSkippedTriplets) {
  const auto d = fresh_dir("parse");
  const auto r = run(d, {"parse-chains", "--response", LCR_FIXTURE_DIR "/robbery_response.txt", "--charge",
                         "robbery", "--out", "robbery.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "parsed 2 chain(s), 1 skipped\n");
  EXPECT_NE(r.err.find("triplet 2"), std::string::npos) << r.err;
  EXPECT_EQ(run(d, {"validate-chains", "--chains", "robbery.json"}).code, 0);
  std::filesystem::remove_all(d);
}
