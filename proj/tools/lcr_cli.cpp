// lcr: command-line driver for chain extraction, corpus synthesis, training,
// generation, and evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 validation or contract failure,
// 3 I/O failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcr/checkpoint.hpp"
#include "lcr/completion_client.hpp"
#include "lcr/corpus.hpp"
#include "lcr/errors.hpp"
#include "lcr/evaluation.hpp"
#include "lcr/legal_chain.hpp"
#include "lcr/model_check.hpp"
#include "lcr/text.hpp"
#include "lcr/training.hpp"

using namespace lcr;
using ojson = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kIo = 3 };

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
}

// One generated or gold opinion, keyed by case.
struct OpinionRow {
  std::string case_id;
  std::string opinion;
  std::string charge;
  std::string defendant;
};

std::vector<OpinionRow> load_opinions(const std::string& path) {
  std::vector<OpinionRow> rows;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(read_file(path))) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      OpinionRow r;
      r.case_id = j.at("case_id").get<std::string>();
      r.opinion = j.at("opinion").get<std::string>();
      r.charge = j.value("charge", "");
      r.defendant = j.value("defendant", "");
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what(), line_no);
    }
  }
  return rows;
}

// Gold records reordered to match `rows` by case_id.
std::vector<CaseRecord> align(const std::vector<OpinionRow>& rows,
                              const std::vector<CaseRecord>& gold) {
  std::map<std::string, const CaseRecord*> by_id;
  for (const auto& g : gold) by_id[g.case_id] = &g;
  std::vector<CaseRecord> out;
  for (const auto& r : rows) {
    auto it = by_id.find(r.case_id);
    if (it == by_id.end()) throw ValidationError("no gold record for case '" + r.case_id + "'");
    out.push_back(*it->second);
  }
  return out;
}

ChainLibrary load_chains(const std::string& path) {
  if (std::filesystem::is_directory(path)) return load_chain_library(path);
  ChainLibrary lib;
  auto cs = load_chain_file(path);
  lib.emplace(cs.charge, std::move(cs));
  return lib;
}

ojson report_json(const ScreeningReport& rep, const std::vector<OpinionRow>& rows) {
  ojson j;
  j["cases"] = rep.cases.size();
  j["defendant_accuracy"] = rep.defendant_accuracy;
  j["situation_accuracy"] = rep.situation_accuracy;
  j["sentencing_accuracy"] = rep.sentencing_accuracy;
  j["combined_score"] = rep.combined;
  auto& per = j["per_case"] = ojson::array();
  for (std::size_t i = 0; i < rep.cases.size(); ++i) {
    const auto& c = rep.cases[i];
    ojson e;
    e["case_id"] = rows[i].case_id;
    e["defendant_ok"] = c.defendant_ok;
    e["situation_ok"] = c.situation_ok;
    e["sentencing_ok"] = c.sentencing_ok;
    e["matched_chain"] = c.matched_chain ? ojson(*c.matched_chain) : ojson(nullptr);
    e["extracted_months"] = c.extracted_months ? ojson(*c.extracted_months) : ojson(nullptr);
    per.push_back(std::move(e));
  }
  return j;
}

// Resolved options of a subcommand as JSON (defaults included).
ojson resolved_config(const CLI::App& sub) {
  ojson j;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
      continue;
    }
    auto res = opt->results();
    if (res.empty()) {
      const std::string def = opt->get_default_str();
      j[name] = def;
    } else if (res.size() == 1) {
      j[name] = res.front();
    } else {
      j[name] = res;
    }
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Legal-chain opinion generation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML configuration file (flags override it)")
      ->envname("CHAIN_REASONER_CONFIG");
  std::string llm_token;
  app.add_option("--llm-token", llm_token, "Bearer token for the completion endpoint")
      ->envname("CHAIN_REASONER_LLM_TOKEN");

  // Shared option values.
  std::string chains_path, corpus_path, checkpoint_path, out_path, llm_endpoint;
  std::uint64_t seed = 0;
  TrainConfig tc;

  // extract-prompt
  auto* extract = app.add_subcommand("extract-prompt", "Build the chain-extraction prompt for a provision");
  std::string provision_path, charge;
  extract->add_option("--provision", provision_path, "Statutory provision text file")->required();
  extract->add_option("--charge", charge, "Charge the provision defines")->required();
  extract->add_option("--llm-endpoint", llm_endpoint, "Send the prompt and print the completion");
  extract->add_option("--out", out_path, "Output file (default stdout)");

  // parse-chains
  auto* parse = app.add_subcommand("parse-chains", "Convert a completion response into a chain file");
  std::string response_path;
  parse->add_option("--response", response_path, "Completion response file")->required();
  parse->add_option("--charge", charge, "Charge of the chains")->required();
  parse->add_option("--out", out_path, "Chain file to write")->required();

  // validate-chains
  auto* validate = app.add_subcommand("validate-chains", "Check chain files against the construction constraints");
  validate->add_option("--chains", chains_path, "Chain file or directory")->required();
  validate->add_option("--out", out_path, "Report file (default stdout)");

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "Generate a synthetic case corpus from a chain library");
  SynthesisSpec synth_spec;
  double ratio = 0.8;
  std::string train_out, test_out;
  synth->add_option("--chains", chains_path, "Chain library directory")->required();
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth->add_option("--cases-per-charge", synth_spec.cases_per_charge, "Cases per charge")->capture_default_str();
  synth->add_option("--distractors", synth_spec.distractors, "Unrelated sentences per fact")->capture_default_str();
  synth->add_option("--charges", synth_spec.charges, "Restrict to these charges");
  synth->add_option("--out", out_path, "Corpus JSONL to write")->required();
  synth->add_option("--ratio", ratio, "Train fraction when splitting")->capture_default_str();
  synth->add_option("--train-out", train_out, "Also write the stratified train split here");
  synth->add_option("--test-out", test_out, "Also write the stratified test split here");

  // train
  auto* trn = app.add_subcommand("train", "Train an opinion model");
  std::string heldout_path;
  bool no_chains = false, no_eval = false;
  trn->add_option("--chains", chains_path, "Chain library directory")->required();
  trn->add_option("--corpus", corpus_path, "Training corpus JSONL")->required();
  trn->add_option("--heldout", heldout_path, "Held-out JSONL (default: split --corpus by --ratio)");
  trn->add_option("--ratio", ratio, "Train fraction when splitting --corpus")->capture_default_str();
  trn->add_option("--checkpoint", checkpoint_path, "Checkpoint file, rewritten every epoch")->required();
  trn->add_option("--out", out_path, "Training log CSV (default stdout)");
  trn->add_option("--seed", tc.seed, "Random seed")->capture_default_str();
  trn->add_option("--d", tc.d, "Model dimension")->capture_default_str();
  trn->add_option("--heads", tc.heads, "Chain-encoder attention heads")->capture_default_str();
  trn->add_option("--decoder-heads", tc.decoder_heads, "Decoder attention heads")->capture_default_str();
  trn->add_option("--layers", tc.decoder_layers, "Decoder blocks")->capture_default_str();
  trn->add_option("--ff-dim", tc.ff_dim, "Decoder feed-forward width")->capture_default_str();
  trn->add_option("--context", tc.context, "Decoder context length")->capture_default_str();
  trn->add_option("--alpha", tc.alpha, "Reasoning loss weight")->capture_default_str();
  trn->add_option("--beta", tc.beta, "Sentencing loss weight")->capture_default_str();
  trn->add_option("--lr", tc.lr, "Adam learning rate")->capture_default_str();
  trn->add_option("--epochs", tc.epochs, "Training epochs")->capture_default_str();
  trn->add_option("--batch-size", tc.batch_size, "Cases per optimizer step")->capture_default_str();
  trn->add_option("--dropout", tc.dropout, "Dropout rate")->capture_default_str();
  trn->add_option("--clip", tc.clip_norm, "Global gradient-norm clip (<= 0 disables)")->capture_default_str();
  trn->add_option("--max-len", tc.max_generate, "Decode budget for held-out evaluation")->capture_default_str();
  trn->add_flag("--no-chains", no_chains, "Ablation: train without the chain prefix");
  trn->add_flag("--no-eval", no_eval, "Skip held-out evaluation after each epoch");

  // generate
  auto* gen = app.add_subcommand("generate", "Write opinions for a case file");
  GenerateConfig gcfg;
  int top_k = 0;
  gen->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")->required();
  gen->add_option("--corpus", corpus_path, "Cases JSONL")->required();
  gen->add_option("--chains", chains_path, "Chain library directory (required for chain models)");
  gen->add_option("--out", out_path, "Opinions JSONL (default stdout)");
  gen->add_option("--max-len", gcfg.max_len, "Maximum generated tokens")->capture_default_str();
  gen->add_option("--top-k", top_k, "Sample from the k best tokens (0: greedy)")->capture_default_str();
  gen->add_option("--seed", gcfg.seed, "Sampling seed")->capture_default_str();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score opinions against gold cases");
  std::string opinions_path;
  bool drop_absent = false;
  eval->add_option("--opinions", opinions_path, "Opinions JSONL")->required();
  eval->add_option("--corpus", corpus_path, "Gold cases JSONL")->required();
  eval->add_option("--out", out_path, "Report JSON (default stdout)");
  eval->add_flag("--drop-absent", drop_absent, "Leave cases without a sentence out of MAE/RMSE");

  // screen
  auto* screen = app.add_subcommand("screen", "Rule-based screening of opinions");
  screen->add_option("--opinions", opinions_path, "Opinions JSONL")->required();
  screen->add_option("--chains", chains_path, "Chain library directory")->required();
  screen->add_option("--corpus", corpus_path, "Gold cases (default: charge/defendant fields of --opinions)");
  screen->add_option("--out", out_path, "Report JSON (default stdout)");

  // judge
  auto* judge = app.add_subcommand("judge", "Pairwise comparison of two opinion sets by a completion model");
  std::string opinions_b_path;
  bool prompts_only = false;
  judge->add_option("--corpus", corpus_path, "Cases JSONL supplying the facts")->required();
  judge->add_option("--opinions", opinions_path, "First opinions JSONL")->required();
  judge->add_option("--opinions-b", opinions_b_path, "Second opinions JSONL")->required();
  judge->add_option("--llm-endpoint", llm_endpoint, "Completion endpoint");
  judge->add_flag("--prompts-only", prompts_only, "Write the prompts instead of calling the endpoint");
  judge->add_option("--out", out_path, "Output JSONL (default stdout)");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  ModelCheckSpec mcs;
  double tolerance = 1e-4;
  gc->add_option("--seed", mcs.seed, "Initialization seed")->capture_default_str();
  gc->add_option("--d", mcs.d, "Model dimension")->capture_default_str();
  gc->add_option("--heads", mcs.encoder_heads, "Chain-encoder heads")->capture_default_str();
  gc->add_option("--decoder-heads", mcs.decoder_heads, "Decoder heads")->capture_default_str();
  gc->add_option("--layers", mcs.decoder_layers, "Decoder blocks")->capture_default_str();
  gc->add_option("--ff-dim", mcs.ff_dim, "Feed-forward width")->capture_default_str();
  gc->add_option("--alpha", mcs.alpha, "Reasoning loss weight")->capture_default_str();
  gc->add_option("--beta", mcs.beta, "Sentencing loss weight")->capture_default_str();
  gc->add_option("--tolerance", tolerance, "Maximum accepted relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::cerr << "config " << resolved_config(*sub).dump() << "\n";

  try {
    if (sub == extract) {
      const std::string prompt = build_extraction_prompt(read_file(provision_path), charge);
      if (llm_endpoint.empty()) {
        emit(prompt, out_path);
      } else {
        HttpCompletionClient client(llm_endpoint, llm_token);
        emit(client.complete(prompt), out_path);
      }
    } else if (sub == parse) {
      const auto res = parse_extraction_response(read_file(response_path), charge);
      for (const auto& d : res.diagnostics)
        std::cerr << "triplet " << d.triplet_index << " (line " << d.line << "): " << d.message << "\n";
      save_chain_file(res.chains, out_path);
      std::cout << "parsed " << res.chains.chains.size() << " chain(s), " << res.diagnostics.size()
                << " skipped\n";
    } else if (sub == validate) {
      const auto lib = load_chains(chains_path);
      ojson j;
      bool ok = true;
      for (const auto& [c, cs] : lib) {
        const auto rep = validate_chain_set(cs);
        ok = ok && rep.ok();
        ojson jc;
        jc["ok"] = rep.ok();
        for (const auto& ch : rep.checks) {
          ojson e;
          e["status"] = to_string(ch.status);
          e["advisory"] = ch.advisory;
          e["details"] = ch.details;
          jc["checks"][ch.constraint] = std::move(e);
        }
        j[c] = std::move(jc);
      }
      emit(j.dump(2) + "\n", out_path);
      return ok ? kOk : kInvalid;
    } else if (sub == synth) {
      const auto lib = load_chain_library(chains_path);
      const auto corpus = synthesize_corpus(seed, synth_spec, lib);
      save_jsonl(corpus, out_path);
      if (!train_out.empty() || !test_out.empty()) {
        const auto split = split_corpus(corpus, ratio, seed);
        for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";
        if (!train_out.empty()) save_jsonl(split.train, train_out);
        if (!test_out.empty()) save_jsonl(split.test, test_out);
      }
      std::cout << "wrote " << corpus.size() << " cases\n";
    } else if (sub == trn) {
      tc.use_chains = !no_chains;
      tc.evaluate_each_epoch = !no_eval;
      const auto lib = load_chain_library(chains_path);
      CorpusSplit split;
      const auto corpus = load_jsonl(corpus_path).records;
      if (heldout_path.empty()) {
        split = split_corpus(corpus, ratio, tc.seed);
      } else {
        split.train = corpus;
        split.test = load_jsonl(heldout_path).records;
        split.seed = tc.seed;
      }
      for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";
      TrainHooks hooks;
      hooks.checkpoint = checkpoint_path;
      hooks.on_epoch = [](const EpochLog& e) {
        std::fprintf(stderr, "epoch %d loss %.6f (reasoning %.6f, sentencing %.6f) heldout mae %.3f\n",
                     e.epoch, e.loss_total, e.loss_reasoning, e.loss_sentencing, e.heldout_mae);
      };
      const auto result = train(split, lib, tc, hooks);
      if (tc.epochs == 0) {
        CheckpointInfo info{tc.use_chains, tc.seed, 0};
        save_checkpoint(result.model, info, checkpoint_path);
      }
      emit(training_log_csv(result.log), out_path);
    } else if (sub == gen) {
      const auto ck = load_checkpoint(checkpoint_path);
      ChainLibrary lib;
      if (ck.info.use_chains) {
        if (chains_path.empty())
          throw ConfigError("checkpoint was trained with chains; pass --chains");
        lib = load_chain_library(chains_path);
      }
      if (top_k > 0) {
        gcfg.mode = GenerateConfig::Mode::TopK;
        gcfg.top_k = top_k;
      }
      std::string text;
      for (const auto& rec : load_jsonl(corpus_path).records) {
        const ChainSet* chains = nullptr;
        if (ck.info.use_chains) {
          auto it = lib.find(rec.charge);
          if (it == lib.end()) throw ConfigError("no chain set for charge '" + rec.charge + "'");
          chains = &it->second;
        }
        const auto out = ck.model.generate(rec.fact, chains, gcfg);
        ojson j;
        j["case_id"] = rec.case_id;
        j["charge"] = rec.charge;
        j["defendant"] = rec.defendant;
        j["opinion"] = out.text;
        j["sentence_months"] = out.extracted_months ? ojson(*out.extracted_months) : ojson(nullptr);
        text += j.dump() + "\n";
      }
      emit(text, out_path);
    } else if (sub == eval) {
      const auto rows = load_opinions(opinions_path);
      const auto gold = align(rows, load_jsonl(corpus_path).records);
      std::vector<std::string> texts;
      for (const auto& r : rows) texts.push_back(r.opinion);
      const auto rep = evaluate_opinions(texts, gold,
                                         drop_absent ? AbsentPolicy::Drop : AbsentPolicy::PenalizeAsZero);
      auto j = ojson::parse(metric_report_json(rep));
      j["config"] = resolved_config(*sub);
      emit(j.dump(2) + "\n", out_path);
    } else if (sub == screen) {
      const auto rows = load_opinions(opinions_path);
      const auto lib = load_chain_library(chains_path);
      std::vector<CaseRecord> cases;
      if (!corpus_path.empty()) {
        cases = align(rows, load_jsonl(corpus_path).records);
      } else {
        for (const auto& r : rows) {
          if (r.charge.empty() || r.defendant.empty())
            throw ValidationError("case '" + r.case_id + "' lacks charge/defendant; pass --corpus");
          CaseRecord c;
          c.case_id = r.case_id;
          c.charge = r.charge;
          c.defendant = r.defendant;
          cases.push_back(std::move(c));
        }
      }
      std::vector<std::string> texts;
      for (const auto& r : rows) texts.push_back(r.opinion);
      const auto rep = screen_corpus(texts, cases, lib);
      auto j = report_json(rep, rows);
      j["config"] = resolved_config(*sub);
      emit(j.dump(2) + "\n", out_path);
      std::fprintf(stderr, "combined score %.2f\n", rep.combined);
    } else if (sub == judge) {
      const auto a = load_opinions(opinions_path);
      const auto b = load_opinions(opinions_b_path);
      const auto gold = align(a, load_jsonl(corpus_path).records);
      const auto gold_b = align(b, gold);
      if (a.size() != b.size()) throw ValidationError("opinion files cover different cases");
      std::optional<HttpCompletionClient> client;
      if (!prompts_only) {
        if (llm_endpoint.empty()) throw ConfigError("judge needs --llm-endpoint or --prompts-only");
        client.emplace(llm_endpoint, llm_token);
      }
      std::map<std::string, const OpinionRow*> b_by_id;
      for (const auto& r : b) b_by_id[r.case_id] = &r;
      std::string text;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& other = *b_by_id.at(a[i].case_id);
        const auto forward = build_pairwise_prompt(gold[i].fact, a[i].opinion, other.opinion);
        const auto mirrored = build_pairwise_prompt(gold[i].fact, other.opinion, a[i].opinion);
        ojson j;
        j["case_id"] = a[i].case_id;
        if (prompts_only) {
          j["prompt"] = forward;
          j["prompt_mirrored"] = mirrored;
        } else {
          // Ask in both orders; a consistent preference wins, otherwise a tie.
          const auto v1 = parse_pairwise_verdict(client->complete(forward));
          const auto v2 = parse_pairwise_verdict(client->complete(mirrored));
          std::string winner = "tie";
          if (v1 == PairwiseVerdict::A && v2 == PairwiseVerdict::B) winner = "a";
          if (v1 == PairwiseVerdict::B && v2 == PairwiseVerdict::A) winner = "b";
          j["winner"] = winner;
        }
        text += j.dump() + "\n";
      }
      emit(text, out_path);
    } else if (sub == gc) {
      const auto r = check_model_gradients(mcs);
      std::printf("max_rel_error %.3e\nworst %s[%ld]\nchecked %zu scalars in %zu tensors\n",
                  r.report.max_rel_error, r.report.worst_param.c_str(),
                  static_cast<long>(r.report.worst_index), r.report.checked, r.parameters);
      std::fprintf(stderr, "elapsed %.2f s\n", r.seconds);
      return r.report.max_rel_error < tolerance ? kOk : kInvalid;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
