#include "lcr/opinion_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lcr/errors.hpp"

namespace lcr {

namespace {

constexpr double kNormEps = 1e-5;

std::string layer_name(int layer, const char* leaf) {
  return "dec." + std::to_string(layer) + "." + leaf;
}

}  // namespace

void init_decoder_params(ParamStore& params, const ModelConfig& cfg, std::size_t vocab_size,
                         std::mt19937_64& rng) {
  const Eigen::Index d = cfg.d, ff = cfg.ff_dim, v = static_cast<Eigen::Index>(vocab_size);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  const double ff_bound = 1.0 / std::sqrt(static_cast<double>(ff));
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    params.set(layer_name(l, "ln1.g"), Matrix::Ones(1, d));
    params.set(layer_name(l, "ln1.b"), Matrix::Zero(1, d));
    for (const char* leaf : {"attn.q", "attn.k", "attn.v", "attn.o"})
      params.set(layer_name(l, leaf), uniform_matrix(d, d, bound, rng));
    params.set(layer_name(l, "ln2.g"), Matrix::Ones(1, d));
    params.set(layer_name(l, "ln2.b"), Matrix::Zero(1, d));
    params.set(layer_name(l, "ffn.w1"), uniform_matrix(d, ff, bound, rng));
    params.set(layer_name(l, "ffn.b1"), Matrix::Zero(1, ff));
    params.set(layer_name(l, "ffn.w2"), uniform_matrix(ff, d, ff_bound, rng));
    params.set(layer_name(l, "ffn.b2"), Matrix::Zero(1, d));
  }
  params.set("dec.lnf.g", Matrix::Ones(1, d));
  params.set("dec.lnf.b", Matrix::Zero(1, d));
  params.set("dec.out.w", uniform_matrix(d, v, bound, rng));
  params.set("dec.out.b", Matrix::Zero(1, v));
}

// ---------------------------------------------------------------------------
// Training-time forward (taped)
// ---------------------------------------------------------------------------

Var combine(const ForwardContext& ctx, const EncodedChainSet* encoded, std::string_view fact_text) {
  const auto ids = ctx.vocab.encode(fact_text);
  if (ids.empty()) throw ArgumentError("combine: fact text has no tokens");
  const Var facts = gather_rows(ctx.params(param_names::kEmbed), std::span<const int>(ids));
  if (!encoded || encoded->size() == 0) return facts;
  if (encoded->rows.cols() != facts.cols())
    throw DimensionError("combine: chain rows " + shape_str(encoded->rows.value()) +
                         " vs fact rows " + shape_str(facts.value()));
  return vstack({encoded->rows, facts});
}

Var decoder_logits(const ForwardContext& ctx, const Var& prefix, Eigen::Index chain_rows,
                   std::span<const int> inputs) {
  auto& p = ctx.params;
  const auto& cfg = ctx.config;
  const Eigen::Index n_in = static_cast<Eigen::Index>(inputs.size());
  const Eigen::Index total = prefix.rows() + n_in;
  if (n_in == 0) throw ArgumentError("decoder_logits: no input tokens");
  if (chain_rows < 0 || chain_rows > prefix.rows())
    throw DimensionError("decoder_logits: chain_rows outside prefix");
  if (total > cfg.context)
    throw CapacityError("sequence of " + std::to_string(total) + " positions exceeds context " +
                        std::to_string(cfg.context));

  const Var tokens = gather_rows(p(param_names::kEmbed), inputs);
  Var x = vstack({prefix, tokens});
  Var pos = slice_rows(p("pos"), 0, total - chain_rows);
  if (chain_rows > 0)
    pos = vstack({p.tape().constant(Matrix::Zero(chain_rows, cfg.d)), pos});
  x = x + pos;

  for (int l = 0; l < cfg.decoder_layers; ++l) {
    const Var h1 = layer_norm_rows(x, p(layer_name(l, "ln1.g")), p(layer_name(l, "ln1.b")), kNormEps);
    x = x + self_attention(ctx, h1, "dec." + std::to_string(l) + ".attn", cfg.decoder_heads, true)
                .output;
    const Var h2 = layer_norm_rows(x, p(layer_name(l, "ln2.g")), p(layer_name(l, "ln2.b")), kNormEps);
    const Var hidden = relu(matmul(h2, p(layer_name(l, "ffn.w1"))) + p(layer_name(l, "ffn.b1")));
    x = x + (matmul(hidden, p(layer_name(l, "ffn.w2"))) + p(layer_name(l, "ffn.b2")));
  }
  const Var tail = slice_rows(x, prefix.rows(), n_in);
  const Var normed = layer_norm_rows(tail, p("dec.lnf.g"), p("dec.lnf.b"), kNormEps);
  return matmul(normed, p("dec.out.w")) + p("dec.out.b");
}

JointLoss joint_loss_from_logits(std::span<const Var> logits,
                                 std::span<const std::vector<int>> targets,
                                 std::span<const std::vector<double>> masks, double alpha,
                                 double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || (alpha == 0.0 && beta == 0.0))
    throw ArgumentError("joint loss weights must be >= 0 and not both zero");
  if (logits.empty() || logits.size() != targets.size() || logits.size() != masks.size())
    throw ContractError("joint loss: logits, targets and masks must be non-empty and aligned");

  JointLoss out;
  Var reasoning_sum, sentencing_sum;
  double masked = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& tgt = targets[i];
    const auto& mask = masks[i];
    if (static_cast<Eigen::Index>(tgt.size()) != logits[i].rows() || mask.size() != tgt.size())
      throw DimensionError("joint loss: sequence " + std::to_string(i) + " has " +
                           std::to_string(tgt.size()) + " targets, " + std::to_string(mask.size()) +
                           " mask entries, logits " + shape_str(logits[i].value()));
    const std::vector<double> ones(tgt.size(), 1.0);
    const Var r = cross_entropy_rows(logits[i], std::span<const int>(tgt), std::span<const double>(ones));
    reasoning_sum = reasoning_sum.valid() ? reasoning_sum + r : r;
    out.tokens += tgt.size();
    const double m = std::accumulate(mask.begin(), mask.end(), 0.0);
    if (m > 0.0) {
      const Var s = cross_entropy_rows(logits[i], std::span<const int>(tgt), std::span<const double>(mask));
      sentencing_sum = sentencing_sum.valid() ? sentencing_sum + s : s;
      masked += m;
      out.sentencing_tokens += static_cast<std::size_t>(
          std::count_if(mask.begin(), mask.end(), [](double w) { return w != 0.0; }));
    }
  }
  if (beta > 0.0 && masked == 0.0)
    throw ContractError("joint loss: sentencing mask covers no tokens but beta > 0");

  const Var l_r = reasoning_sum * (1.0 / static_cast<double>(out.tokens));
  out.reasoning = l_r.item();
  Var total = l_r * alpha;
  if (masked > 0.0) {
    const Var l_s = sentencing_sum * (1.0 / masked);
    out.sentencing = l_s.item();
    if (beta > 0.0) total = total + l_s * beta;
  }
  out.total = total;
  return out;
}

JointLoss joint_loss(const ForwardContext& ctx, std::span<const DecoderExample> batch, double alpha,
                     double beta) {
  std::vector<Var> logits;
  std::vector<std::vector<int>> targets;
  std::vector<std::vector<double>> masks;
  for (const auto& ex : batch) {
    if (ex.target.empty()) throw ArgumentError("joint loss: empty target sequence");
    std::optional<EncodedChainSet> enc;
    if (ex.chains) enc = encode_chain_set(ctx, *ex.chains);
    const Var prefix = combine(ctx, enc ? &*enc : nullptr, ex.fact);
    std::vector<int> inputs{Vocabulary::kBos};
    inputs.insert(inputs.end(), ex.target.begin(), ex.target.end() - 1);
    logits.push_back(decoder_logits(ctx, prefix, enc ? static_cast<Eigen::Index>(enc->size()) : 0,
                                    inputs));
    targets.push_back(ex.target);
    masks.push_back(ex.sentencing_mask);
  }
  return joint_loss_from_logits(logits, targets, masks, alpha, beta);
}

// ---------------------------------------------------------------------------
// Inference path: cached incremental decoding over plain matrices
// ---------------------------------------------------------------------------

namespace {

using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

RowVec layer_norm(const RowVec& x, const Matrix& gain, const Matrix& shift) {
  const double mu = x.mean();
  const double var = (x.array() - mu).square().mean();
  const double inv = 1.0 / std::sqrt(var + kNormEps);
  return ((x.array() - mu) * inv * gain.row(0).array() + shift.row(0).array()).matrix();
}

class IncrementalDecoder {
 public:
  IncrementalDecoder(const ModelConfig& cfg, const ParamStore& p) : cfg_(cfg), p_(p) {
    layers_.resize(static_cast<std::size_t>(cfg.decoder_layers));
    for (auto& c : layers_) {
      c.keys = Matrix(cfg.context, cfg.d);
      c.values = Matrix(cfg.context, cfg.d);
    }
  }

  Eigen::Index length() const { return length_; }

  // Appends one input row and returns the output logits at that position.
  RowVec feed(RowVec x) {
    if (length_ >= cfg_.context)
      throw CapacityError("decoding exceeds context " + std::to_string(cfg_.context));
    const Eigen::Index hd = cfg_.d / cfg_.decoder_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      auto& cache = layers_[static_cast<std::size_t>(l)];
      const RowVec h = layer_norm(x, p_.at(layer_name(l, "ln1.g")), p_.at(layer_name(l, "ln1.b")));
      const RowVec q = h * p_.at(layer_name(l, "attn.q"));
      cache.keys.row(length_) = h * p_.at(layer_name(l, "attn.k"));
      cache.values.row(length_) = h * p_.at(layer_name(l, "attn.v"));
      const Eigen::Index t = length_ + 1;
      RowVec joined(cfg_.d);
      for (int head = 0; head < cfg_.decoder_heads; ++head) {
        const Eigen::Index c0 = head * hd;
        const Eigen::VectorXd scores =
            (cache.keys.block(0, c0, t, hd) * q.segment(c0, hd).transpose()) * scale;
        const double m = scores.maxCoeff();
        Eigen::VectorXd w = (scores.array() - m).exp();
        w /= w.sum();
        joined.segment(c0, hd) = w.transpose() * cache.values.block(0, c0, t, hd);
      }
      x += joined * p_.at(layer_name(l, "attn.o"));
      const RowVec h2 = layer_norm(x, p_.at(layer_name(l, "ln2.g")), p_.at(layer_name(l, "ln2.b")));
      const RowVec hidden =
          (h2 * p_.at(layer_name(l, "ffn.w1")) + p_.at(layer_name(l, "ffn.b1"))).cwiseMax(0.0);
      x += hidden * p_.at(layer_name(l, "ffn.w2")) + p_.at(layer_name(l, "ffn.b2"));
    }
    ++length_;
    const RowVec normed = layer_norm(x, p_.at("dec.lnf.g"), p_.at("dec.lnf.b"));
    return normed * p_.at("dec.out.w") + p_.at("dec.out.b");
  }

 private:
  struct Cache {
    Matrix keys;
    Matrix values;
  };
  const ModelConfig& cfg_;
  const ParamStore& p_;
  std::vector<Cache> layers_;
  Eigen::Index length_ = 0;
};

// Feeds the prefix; returns the decoder and logits after the last prefix row.
RowVec feed_prefix(IncrementalDecoder& dec, const ParamStore& p, const Matrix& prefix,
                   Eigen::Index chain_rows) {
  const Matrix& pos = p.at("pos");
  RowVec last;
  for (Eigen::Index i = 0; i < prefix.rows(); ++i) {
    RowVec row = prefix.row(i);
    if (i >= chain_rows) row += pos.row(i - chain_rows);
    last = dec.feed(std::move(row));
  }
  return last;
}

}  // namespace

OpinionModel::OpinionModel(ModelConfig config, Vocabulary vocab,
                           const std::vector<std::string>& charges, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.d));
  params_.set(param_names::kEmbed,
              uniform_matrix(static_cast<Eigen::Index>(vocab_.size()), config_.d, bound, rng));
  params_.set("pos", uniform_matrix(config_.context, config_.d, bound, rng));
  init_encoder_params(params_, config_, charges, rng);
  init_decoder_params(params_, config_, vocab_.size(), rng);
}

OpinionModel::OpinionModel(ModelConfig config, Vocabulary vocab, ParamStore params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
  config_.validate();
  const auto& emb = params_.at(param_names::kEmbed);
  if (emb.rows() != static_cast<Eigen::Index>(vocab_.size()) || emb.cols() != config_.d)
    throw DimensionError("embedding table " + shape_str(emb) + " does not match vocabulary of " +
                         std::to_string(vocab_.size()) + " and d=" + std::to_string(config_.d));
  if (params_.at("dec.out.w").cols() != static_cast<Eigen::Index>(vocab_.size()))
    throw DimensionError("output projection width differs from vocabulary size");
}

Matrix OpinionModel::combined_prefix(const ChainSet* chains, std::string_view fact) const {
  const ParamStore* store = &params_;
  ParamStore extended;
  if (chains && !has_charge(params_, chains->charge)) {
    if (!config_.auto_register_charges)
      throw UnknownChargeError("charge '" + chains->charge + "' has no registered transform");
    extended = params_;
    lcr::ensure_charge(extended, config_, chains->charge);
    store = &extended;
  }
  Tape tape;
  Binding bind(tape, *store, false);
  ForwardContext ctx{bind, config_, vocab_};
  std::optional<EncodedChainSet> enc;
  if (chains) enc = encode_chain_set(ctx, *chains);
  return combine(ctx, enc ? &*enc : nullptr, fact).value();
}

Matrix OpinionModel::incremental_logits(const Matrix& prefix, Eigen::Index chain_rows,
                                        std::span<const int> inputs) const {
  IncrementalDecoder dec(config_, params_);
  feed_prefix(dec, params_, prefix, chain_rows);
  const Matrix& emb = params_.at(param_names::kEmbed);
  const Matrix& pos = params_.at("pos");
  Matrix out(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(vocab_.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Eigen::Index at = dec.length() - chain_rows;
    out.row(static_cast<Eigen::Index>(i)) = dec.feed(emb.row(inputs[i]) + pos.row(at));
  }
  return out;
}

OpinionOutput OpinionModel::generate(std::string_view fact, const ChainSet* chains,
                                     const GenerateConfig& cfg) const {
  const Matrix prefix = combined_prefix(chains, fact);
  const Eigen::Index n = chains ? static_cast<Eigen::Index>(chains->chains.size()) : 0;
  return generate_from_prefix(prefix, n, cfg);
}

OpinionOutput OpinionModel::generate_from_prefix(const Matrix& prefix, Eigen::Index chain_rows,
                                                 const GenerateConfig& cfg) const {
  if (cfg.max_len < 0) throw ArgumentError("generate: max_len must be >= 0");
  if (prefix.rows() + 1 + cfg.max_len > config_.context)
    throw CapacityError("prefix of " + std::to_string(prefix.rows()) + " rows plus " +
                        std::to_string(cfg.max_len) + " new tokens exceeds context " +
                        std::to_string(config_.context));
  OpinionOutput out;
  if (cfg.max_len == 0) return out;

  IncrementalDecoder dec(config_, params_);
  feed_prefix(dec, params_, prefix, chain_rows);
  const Matrix& emb = params_.at(param_names::kEmbed);
  const Matrix& pos = params_.at("pos");
  std::mt19937_64 rng(cfg.seed);

  auto next_token = [&](RowVec logits) {
    logits(Vocabulary::kPad) = -std::numeric_limits<double>::infinity();
    logits(Vocabulary::kBos) = -std::numeric_limits<double>::infinity();
    if (cfg.mode == GenerateConfig::Mode::Greedy || cfg.top_k <= 1) {
      Eigen::Index best = 0;
      logits.maxCoeff(&best);
      return static_cast<int>(best);
    }
    std::vector<int> order(static_cast<std::size_t>(logits.size()));
    std::iota(order.begin(), order.end(), 0);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.top_k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                      [&](int a, int b) { return logits(a) > logits(b) || (logits(a) == logits(b) && a < b); });
    const double m = logits(order.front());
    std::vector<double> w(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += (w[i] = std::exp(logits(order[i]) - m));
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    for (std::size_t i = 0; i < k; ++i) {
      if (u < w[i]) return order[i];
      u -= w[i];
    }
    return order[k - 1];
  };

  RowVec logits = dec.feed(emb.row(Vocabulary::kBos) + pos.row(dec.length() - chain_rows));
  std::vector<std::string> words;
  std::vector<std::size_t> begins, ends;
  for (int step = 0; step < cfg.max_len; ++step) {
    const int tok = next_token(logits);
    if (tok == Vocabulary::kEos) break;
    out.token_ids.push_back(tok);
    words.push_back(vocab_.token(tok));
    if (step + 1 < cfg.max_len)
      logits = dec.feed(emb.row(tok) + pos.row(dec.length() - chain_rows));
  }
  // Render incrementally so token byte offsets are known.
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string joined = detokenize(std::span<const std::string>(words.data(), i + 1));
    ends.push_back(joined.size());
    begins.push_back(joined.size() - words[i].size());
  }
  out.text = detokenize(words);
  const auto clauses = find_sentencing_clauses(out.text);
  if (!clauses.empty()) {
    out.extracted_months = clauses.back().months;
    std::optional<TokenInterval> span;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (ends[i] <= clauses.back().begin || begins[i] >= clauses.back().end) continue;
      if (!span) span = TokenInterval{i, i + 1};
      span->end = i + 1;
    }
    out.sentencing_span = span;
  }
  return out;
}

}  // namespace lcr
