#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lcr/corpus.hpp"
#include "lcr/errors.hpp"
#include "lcr/model_check.hpp"
#include "lcr/opinion_model.hpp"
#include "lcr/training.hpp"

using namespace lcr;

namespace {

const ChainLibrary& library() {
  static const ChainLibrary lib = load_chain_library(LCR_DATA_DIR "/chains");
  return lib;
}

const std::vector<CaseRecord>& corpus() {
  static const std::vector<CaseRecord> c = [] {
    SynthesisSpec spec;
    spec.cases_per_charge = 2;
    return synthesize_corpus(4, spec, library());
  }();
  return c;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.encoder_heads = 4;
  cfg.decoder_heads = 2;
  cfg.ff_dim = 24;
  cfg.context = 200;
  cfg.dropout = 0.0;
  return cfg;
}

OpinionModel small_model(std::uint64_t seed = 3) {
  std::vector<std::string> charges;
  for (const auto& [c, cs] : library()) charges.push_back(c);
  return OpinionModel(small_config(), build_vocabulary(corpus(), library()), charges, seed);
}

struct Forward {
  Tape tape;
  Binding bind;
  ForwardContext ctx;
  Forward(const OpinionModel& m, std::mt19937_64* rng = nullptr)
      : bind(tape, m.params()), ctx{bind, m.config(), m.vocab(), rng} {}
};

}  // namespace

TEST(Encoder, CombineShapeLaw) {
  const auto model = small_model();
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto& rec = corpus()[rng() % corpus().size()];
    const ChainSet& cs = library().at(rec.charge);
    Forward f(model);
    const auto enc = encode_chain_set(f.ctx, cs);
    const Var comb = combine(f.ctx, &enc, rec.fact);
    const auto fact_len = static_cast<Eigen::Index>(tokenize(rec.fact).size());
    EXPECT_EQ(comb.rows(), static_cast<Eigen::Index>(cs.chains.size()) + fact_len);
    EXPECT_EQ(comb.cols(), 16);
    for (const auto& w : enc.attention)
      for (Eigen::Index r = 0; r < 3; ++r) EXPECT_NEAR(w.row(r).sum(), 1.0, 1e-9);
    const Var plain = combine(f.ctx, nullptr, rec.fact);
    EXPECT_EQ(plain.rows(), fact_len);
  }
}

TEST(Encoder, FactRowsAreTokenEmbeddings) {
  const auto model = small_model();
  const auto& rec = corpus().front();
  Forward f(model);
  const auto enc = encode_chain_set(f.ctx, library().at(rec.charge));
  const Var comb = combine(f.ctx, &enc, rec.fact);
  const int first = model.vocab().id(tokenize(rec.fact).front().text);
  const Eigen::Index n = static_cast<Eigen::Index>(enc.size());
  EXPECT_EQ(comb.value().row(n), model.params().at("embed").row(first));
}

TEST(Encoder, GateIsAConvexMix) {
  const auto model = small_model();
  Forward f(model);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Var r = f.tape.constant(uniform_matrix(1, 16, 2.0, rng));
    const auto out = crime_transform(f.ctx, r, "robbery");
    for (Eigen::Index j = 0; j < 16; ++j) {
      const double g = out.g.value()(0, j);
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
      const double lo = std::min(out.u.value()(0, j), out.v.value()(0, j));
      const double hi = std::max(out.u.value()(0, j), out.v.value()(0, j));
      EXPECT_GE(out.t.value()(0, j), lo - 1e-12);
      EXPECT_LE(out.t.value()(0, j), hi + 1e-12);
    }
  }
}

TEST(Encoder, UnknownChargeHandling) {
  ParamStore p;
  ModelConfig cfg = small_config();
  std::mt19937_64 rng(1);
  init_encoder_params(p, cfg, {"theft"}, rng);
  EXPECT_FALSE(has_charge(p, "arson"));
  ensure_charge(p, cfg, "arson");
  EXPECT_TRUE(has_charge(p, "arson"));
  EXPECT_EQ(p.at(param_names::charge_weight("arson")), Matrix::Identity(16, 16));
  cfg.auto_register_charges = false;
  EXPECT_THROW(ensure_charge(p, cfg, "piracy"), UnknownChargeError);
}

TEST(Encoder, EmptyChainSetIsRejected) {
  const auto model = small_model();
  Forward f(model);
  ChainSet empty;
  empty.charge = "robbery";
  EXPECT_THROW(encode_chain_set(f.ctx, empty), ArgumentError);
}

TEST(Decoder, IncrementalMatchesTapedLogits) {
  const auto model = small_model();
  const auto& rec = corpus()[5];
  const ChainSet& cs = library().at(rec.charge);
  Forward f(model);
  const auto enc = encode_chain_set(f.ctx, cs);
  const Var prefix = combine(f.ctx, &enc, rec.fact);
  std::vector<int> inputs{Vocabulary::kBos};
  for (int id : model.vocab().encode(rec.opinion)) inputs.push_back(id);
  inputs.resize(20);
  const auto rows = static_cast<Eigen::Index>(enc.size());
  const Matrix taped = decoder_logits(f.ctx, prefix, rows, inputs).value();
  const Matrix inc = model.incremental_logits(prefix.value(), rows, inputs);
  EXPECT_LT((taped - inc).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Decoder, CausalMasking) {
  const auto model = small_model();
  const auto& rec = corpus()[2];
  std::vector<int> inputs{Vocabulary::kBos};
  for (int id : model.vocab().encode(rec.opinion)) inputs.push_back(id);
  inputs.resize(16);
  Forward f(model);
  const Var prefix = combine(f.ctx, nullptr, rec.fact);
  const Matrix base = decoder_logits(f.ctx, prefix, 0, inputs).value();
  const std::size_t k = 9;
  inputs[k] = Vocabulary::kUnk;
  const Matrix changed = decoder_logits(f.ctx, prefix, 0, inputs).value();
  EXPECT_EQ(base.topRows(static_cast<Eigen::Index>(k)), changed.topRows(static_cast<Eigen::Index>(k)));
  EXPECT_NE(base.row(static_cast<Eigen::Index>(k)), changed.row(static_cast<Eigen::Index>(k)));
}

TEST(Decoder, ContextOverflowIsACapacityError) {
  const auto model = small_model();
  Forward f(model);
  const Var prefix = combine(f.ctx, nullptr, corpus()[0].fact);
  std::vector<int> inputs(250, Vocabulary::kBos);
  EXPECT_THROW(decoder_logits(f.ctx, prefix, 0, inputs), CapacityError);
  GenerateConfig g;
  g.max_len = 250;
  EXPECT_THROW(model.generate(corpus()[0].fact, nullptr, g), CapacityError);
}

TEST(JointLoss, UniformTwoTokenModelGivesLn2) {
  Tape tape;
  const std::vector<Var> logits = {tape.variable(Matrix::Zero(3, 2))};
  const std::vector<std::vector<int>> targets = {{0, 1, 1}};
  const std::vector<std::vector<double>> masks = {{0.0, 1.0, 0.0}};
  const auto l = joint_loss_from_logits(logits, targets, masks, 1.0, 1.0);
  EXPECT_NEAR(l.reasoning, std::log(2.0), 1e-15);
  EXPECT_NEAR(l.sentencing, std::log(2.0), 1e-15);
  EXPECT_NEAR(l.total.item(), 2.0 * std::log(2.0), 1e-15);
  const auto r_only = joint_loss_from_logits(logits, targets, masks, 1.0, 0.0);
  EXPECT_EQ(r_only.total.item(), r_only.reasoning);
}

TEST(JointLoss, PerfectFitIsZeroAndWeightsAreChecked) {
  Tape tape;
  Matrix sharp = Matrix::Constant(2, 3, -800.0);
  sharp(0, 1) = 800.0;
  sharp(1, 2) = 800.0;
  const std::vector<Var> logits = {tape.variable(sharp)};
  const std::vector<std::vector<int>> targets = {{1, 2}};
  std::vector<std::vector<double>> masks = {{1.0, 0.0}};
  EXPECT_EQ(joint_loss_from_logits(logits, targets, masks, 1.0, 1.0).total.item(), 0.0);
  EXPECT_THROW(joint_loss_from_logits(logits, targets, masks, 0.0, 0.0), ArgumentError);
  EXPECT_THROW(joint_loss_from_logits(logits, targets, masks, -1.0, 1.0), ArgumentError);
  masks = {{0.0, 0.0}};
  EXPECT_THROW(joint_loss_from_logits(logits, targets, masks, 1.0, 1.0), ContractError);
  EXPECT_NO_THROW(joint_loss_from_logits(logits, targets, masks, 1.0, 0.0));
}

TEST(JointLoss, NonNegativeOnRealBatches) {
  const auto model = small_model();
  Forward f(model);
  std::vector<DecoderExample> batch;
  for (int i = 0; i < 3; ++i)
    batch.push_back(make_example(corpus()[static_cast<std::size_t>(i)], model.vocab(),
                                 &library().at(corpus()[static_cast<std::size_t>(i)].charge)));
  const auto l = joint_loss(f.ctx, batch, 1.0, 1.0);
  EXPECT_GT(l.total.item(), 0.0);
  EXPECT_GT(l.sentencing_tokens, 0u);
}

TEST(Generate, DegenerateAndDeterministic) {
  const auto model = small_model();
  const auto& rec = corpus()[1];
  const ChainSet* cs = &library().at(rec.charge);
  GenerateConfig g;
  g.max_len = 0;
  EXPECT_EQ(model.generate(rec.fact, cs, g).text, "");
  g.max_len = 12;
  const auto a = model.generate(rec.fact, cs, g);
  const auto b = model.generate(rec.fact, cs, g);
  EXPECT_EQ(a.token_ids, b.token_ids);
  EXPECT_LE(a.token_ids.size(), 12u);
  g.mode = GenerateConfig::Mode::TopK;
  g.seed = 4;
  EXPECT_EQ(model.generate(rec.fact, cs, g).token_ids, model.generate(rec.fact, cs, g).token_ids);
  for (int id : a.token_ids) {
    EXPECT_NE(id, Vocabulary::kPad);
    EXPECT_NE(id, Vocabulary::kBos);
  }
}

TEST(GradientCheck, SmallModelMatchesFiniteDifferences) {
  ModelCheckSpec spec;
  spec.d = 8;
  spec.encoder_heads = 2;
  spec.decoder_heads = 2;
  spec.decoder_layers = 1;
  spec.ff_dim = 8;
  const auto r = check_model_gradients(spec);
  EXPECT_LT(r.report.max_rel_error, 1e-4) << r.report.worst_param << "[" << r.report.worst_index << "]";
  EXPECT_GT(r.report.checked, 100u);
}
