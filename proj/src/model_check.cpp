#include "lcr/model_check.hpp"

#include <chrono>

#include "lcr/opinion_model.hpp"
#include "lcr/sentencing.hpp"

namespace lcr {

namespace {

LegalChain toy_chain(const std::string& premise, const std::string& situation, int lo, int hi) {
  LegalChain c;
  c.premise = {premise, ConditionExpr::predicate(premise)};
  c.situation = {situation, ConditionExpr::predicate(situation)};
  c.conclusion.label = "term";
  c.conclusion.min_months = lo;
  c.conclusion.max_months = hi;
  c.source_provision = "Article 1";
  return c;
}

}  // namespace

ModelCheckResult check_model_gradients(const ModelCheckSpec& spec) {
  const auto start = std::chrono::steady_clock::now();

  ChainSet robbery, theft;
  robbery.charge = "robbery";
  robbery.chains = {toy_chain("used violence", "took property", 36, 120),
                    toy_chain("used violence", "used a gun", 120, 180)};
  theft.charge = "theft";
  theft.chains = {toy_chain("secretly took property", "large amount", 6, 36)};

  const std::string fact_a = "Defendant A used violence and took a wallet.";
  const std::string fact_b = "Defendant B secretly took a phone.";
  const std::string op_a = "Defendant A is guilty: 48 months of fixed-term imprisonment.";
  const std::string op_b = "Defendant B is guilty: 12 months of fixed-term imprisonment.";

  Vocabulary vocab;
  for (const auto* cs : {&robbery, &theft})
    for (const auto& ch : cs->chains) {
      vocab.add_text(ch.premise.text);
      vocab.add_text(ch.situation.text);
      vocab.add_text(ch.conclusion_text());
    }
  for (const auto& t : {fact_a, fact_b, op_a, op_b}) vocab.add_text(t);

  ModelConfig cfg;
  cfg.d = spec.d;
  cfg.encoder_heads = spec.encoder_heads;
  cfg.decoder_heads = spec.decoder_heads;
  cfg.decoder_layers = spec.decoder_layers;
  cfg.ff_dim = spec.ff_dim;
  cfg.context = 48;
  cfg.dropout = 0.0;
  OpinionModel model(cfg, vocab, {"robbery", "theft"}, spec.seed);
  // Move the charge transforms off the identity so their gradients are generic.
  std::mt19937_64 rng(spec.seed + 1);
  for (const char* c : {"robbery", "theft"}) {
    auto& w = model.params().at(param_names::charge_weight(c));
    w += uniform_matrix(w.rows(), w.cols(), 0.3, rng);
    auto& b = model.params().at(param_names::charge_bias(c));
    b += uniform_matrix(b.rows(), b.cols(), 0.3, rng);
  }

  auto example = [&](const std::string& fact, const ChainSet& cs, const std::string& opinion) {
    DecoderExample ex;
    ex.fact = fact;
    ex.chains = &cs;
    ex.target = vocab.encode(opinion);
    ex.target.push_back(Vocabulary::kEos);
    ex.sentencing_mask.assign(ex.target.size(), 0.0);
    if (auto span = mark_sentencing_span(opinion))
      for (std::size_t i = span->begin; i < span->end; ++i) ex.sentencing_mask[i] = 1.0;
    return ex;
  };
  const std::vector<DecoderExample> batch = {example(fact_a, robbery, op_a),
                                             example(fact_b, theft, op_b)};

  const LossBuilder<double> fn = [&](Tape&, Binding& bind) {
    ForwardContext ctx{bind, model.config(), model.vocab()};
    return joint_loss(ctx, batch, spec.alpha, spec.beta).total;
  };
  ModelCheckResult out;
  const auto names = model.params().names();
  out.parameters = names.size();
  out.report = grad_check(model.params(), names, fn, spec.eps);
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace lcr
