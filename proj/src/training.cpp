#include "lcr/training.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "lcr/checkpoint.hpp"
#include "lcr/errors.hpp"
#include "lcr/sentencing.hpp"
#include "lcr/tokenizer.hpp"

namespace lcr {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("learning rate must be positive");
  if (alpha < 0.0 || beta < 0.0) throw ArgumentError("loss weights must be non-negative");
  if (alpha == 0.0 && beta == 0.0) throw ArgumentError("loss weights must not both be zero");
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (max_generate < 0) throw ArgumentError("max_generate must be >= 0");
  model_config().validate();
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.d = d;
  m.encoder_heads = heads;
  m.decoder_heads = decoder_heads;
  m.decoder_layers = decoder_layers;
  m.ff_dim = ff_dim;
  m.context = context;
  m.dropout = dropout;
  return m;
}

void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double lr) {
  if (grads.size() != params.size())
    throw ContractError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                        std::to_string(params.size()) + " parameters");
  for (const auto& [name, value] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) throw ContractError("adam_step: no gradient for '" + name + "'");
    if (g->second.rows() != value.rows() || g->second.cols() != value.cols())
      throw ContractError("adam_step: gradient for '" + name + "' is " + shape_str(g->second) +
                          ", parameter is " + shape_str(value));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (auto& [name, value] : params) {
    const Matrix& g = grads.at(name);
    auto [mi, m_new] = state.m.try_emplace(name, Matrix::Zero(value.rows(), value.cols()));
    auto [vi, v_new] = state.v.try_emplace(name, Matrix::Zero(value.rows(), value.cols()));
    Matrix& m = mi->second;
    Matrix& v = vi->second;
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [k, g] : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [k, g] : grads) g *= scale;
  }
  return norm;
}

Vocabulary build_vocabulary(const std::vector<CaseRecord>& train, const ChainLibrary& library) {
  Vocabulary vocab;
  int max_months = 0;
  for (const auto& [charge, cs] : library) {
    for (const auto& ch : cs.chains) {
      vocab.add_text(ch.premise.text);
      vocab.add_text(ch.situation.text);
      vocab.add_text(ch.conclusion_text());
      if (ch.conclusion.max_months) max_months = std::max(max_months, *ch.conclusion.max_months);
    }
  }
  for (const auto& r : train) {
    vocab.add_text(r.fact);
    vocab.add_text(r.opinion);
    max_months = std::max(max_months, r.sentence_months);
  }
  for (int m = 0; m <= max_months; ++m) vocab.add(std::to_string(m));
  return vocab;
}

DecoderExample make_example(const CaseRecord& rec, const Vocabulary& vocab, const ChainSet* chains) {
  DecoderExample ex;
  ex.fact = rec.fact;
  ex.chains = chains;
  ex.target = vocab.encode(rec.opinion);
  ex.target.push_back(Vocabulary::kEos);
  ex.sentencing_mask.assign(ex.target.size(), 0.0);
  auto span = tokens_covering(rec.opinion, rec.sentencing_span.first, rec.sentencing_span.second);
  if (!span) span = mark_sentencing_span(rec.opinion);
  if (span)
    for (std::size_t i = span->begin; i < span->end; ++i) ex.sentencing_mask[i] = 1.0;
  return ex;
}

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(((rng() >> 32) * static_cast<std::uint64_t>(n)) >> 32);
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

const ChainSet* chains_for(const CaseRecord& rec, const ChainLibrary& library, bool use_chains) {
  if (!use_chains) return nullptr;
  auto it = library.find(rec.charge);
  if (it == library.end())
    throw ConfigError("no chain set for charge '" + rec.charge + "' (case " + rec.case_id + ")");
  return &it->second;
}

StepLoss optimize_batch(OpinionModel& model, AdamState& state,
                         const std::vector<DecoderExample>& batch, const TrainConfig& cfg,
                         std::mt19937_64& dropout_rng) {
  Tape tape;
  Binding bind(tape, model.params());
  ForwardContext ctx{bind, model.config(), model.vocab(),
                     model.config().dropout > 0.0 ? &dropout_rng : nullptr};
  const JointLoss loss = joint_loss(ctx, batch, cfg.alpha, cfg.beta);
  const StepLoss values{loss.total.item(), loss.reasoning, loss.sentencing};
  tape.backward(loss.total);
  Gradients grads = bind.gradients();
  for (const auto& [name, value] : model.params())
    if (!grads.count(name)) grads.emplace(name, Matrix::Zero(value.rows(), value.cols()));
  clip_global_norm(grads, cfg.clip_norm);
  adam_step(model.params(), grads, state, cfg.lr);
  return values;
}

}  // namespace

void train_steps(OpinionModel& model, AdamState& state, const std::vector<CaseRecord>& cases,
                 const ChainLibrary& library, const TrainConfig& cfg, long long steps,
                 std::mt19937_64& order_rng, std::mt19937_64& dropout_rng,
                 std::vector<double>* step_losses,
                 const std::function<void(long long, const StepLoss&)>& on_step) {
  if (cases.empty()) throw ArgumentError("train_steps: no training cases");
  std::vector<DecoderExample> examples;
  for (const auto& rec : cases)
    examples.push_back(make_example(rec, model.vocab(), chains_for(rec, library, cfg.use_chains)));
  std::vector<std::size_t> order(examples.size());
  std::size_t cursor = order.size();
  for (long long s = 0; s < steps; ++s) {
    std::vector<DecoderExample> batch;
    while (batch.size() < static_cast<std::size_t>(cfg.batch_size) && batch.size() < examples.size()) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, order_rng);
        cursor = 0;
      }
      batch.push_back(examples[order[cursor++]]);
    }
    const StepLoss loss = optimize_batch(model, state, batch, cfg, dropout_rng);
    if (step_losses) step_losses->push_back(loss.total);
    if (on_step) on_step(state.step, loss);
  }
}

std::vector<std::string> generate_opinions(const OpinionModel& model,
                                           const std::vector<CaseRecord>& cases,
                                           const ChainLibrary& library, bool use_chains,
                                           int max_len) {
  GenerateConfig gen;
  gen.max_len = max_len;
  std::vector<std::string> out;
  out.reserve(cases.size());
  for (const auto& rec : cases) {
    const ChainSet* chains = chains_for(rec, library, use_chains);
    GenerateConfig g = gen;
    // Leave room for the prefix inside the context window.
    const auto prefix_rows = static_cast<int>(tokenize(rec.fact).size()) +
                             (chains ? static_cast<int>(chains->chains.size()) : 0);
    g.max_len = std::max(0, std::min(max_len, model.config().context - prefix_rows - 1));
    out.push_back(model.generate(rec.fact, chains, g).text);
  }
  return out;
}

TrainResult train(const CorpusSplit& split, const ChainLibrary& library, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (split.train.empty()) throw ArgumentError("train: the training split is empty");
  if (cfg.use_chains) {
    for (const auto* part : {&split.train, &split.test})
      for (const auto& rec : *part) chains_for(rec, library, true);
  }

  std::vector<std::string> charges;
  for (const auto& [c, cs] : library) charges.push_back(c);
  TrainResult result{OpinionModel(cfg.model_config(), build_vocabulary(split.train, library),
                                  charges, cfg.seed),
                     {},
                     {}};

  std::seed_seq order_seq{static_cast<std::uint32_t>(cfg.seed),
                          static_cast<std::uint32_t>(cfg.seed >> 32), 1u};
  std::seed_seq dropout_seq{static_cast<std::uint32_t>(cfg.seed),
                            static_cast<std::uint32_t>(cfg.seed >> 32), 2u};
  std::mt19937_64 order_rng(order_seq), dropout_rng(dropout_seq);
  AdamState state;

  const auto n = static_cast<long long>(split.train.size());
  const long long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog row;
    row.epoch = epoch;
    long long batches = 0;
    train_steps(result.model, state, split.train, library, cfg, steps_per_epoch, order_rng,
                dropout_rng, &result.step_losses, [&](long long step, const StepLoss& loss) {
                  row.loss_total += loss.total;
                  row.loss_reasoning += loss.reasoning;
                  row.loss_sentencing += loss.sentencing;
                  ++batches;
                  if (hooks.on_step) hooks.on_step(step, loss);
                });
    row.loss_total /= static_cast<double>(batches);
    row.loss_reasoning /= static_cast<double>(batches);
    row.loss_sentencing /= static_cast<double>(batches);
    if (cfg.evaluate_each_epoch && !split.test.empty()) {
      const auto opinions = generate_opinions(result.model, split.test, library, cfg.use_chains,
                                              cfg.max_generate);
      const auto rep = evaluate_opinions(opinions, split.test);
      row.heldout_mae = rep.error.mae;
      row.heldout_rmse = rep.error.rmse;
    }
    result.log.push_back(row);
    if (hooks.checkpoint) {
      CheckpointInfo info;
      info.use_chains = cfg.use_chains;
      info.seed = cfg.seed;
      info.epoch = epoch;
      save_checkpoint(result.model, info, *hooks.checkpoint);
    }
    if (hooks.on_epoch) hooks.on_epoch(row);
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss_total,loss_reasoning,loss_sentencing,heldout_mae,heldout_rmse\n";
  for (const auto& r : log)
    out << r.epoch << ',' << r.loss_total << ',' << r.loss_reasoning << ',' << r.loss_sentencing
        << ',' << r.heldout_mae << ',' << r.heldout_rmse << '\n';
  return out.str();
}

}  // namespace lcr
