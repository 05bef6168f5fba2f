#include "lcr/chain_encoder.hpp"

#include <cmath>

#include "lcr/errors.hpp"

namespace lcr {

void ModelConfig::validate() const {
  if (d <= 0) throw ArgumentError("model dimension must be positive");
  if (encoder_heads <= 0 || d % encoder_heads != 0)
    throw ArgumentError("encoder heads (" + std::to_string(encoder_heads) + ") must divide d (" +
                        std::to_string(d) + ")");
  if (decoder_heads <= 0 || d % decoder_heads != 0)
    throw ArgumentError("decoder heads (" + std::to_string(decoder_heads) + ") must divide d (" +
                        std::to_string(d) + ")");
  if (decoder_layers < 0) throw ArgumentError("decoder layers must be >= 0");
  if (ff_dim <= 0) throw ArgumentError("feed-forward width must be positive");
  if (context < 2) throw ArgumentError("context must hold at least 2 positions");
  if (dropout < 0.0 || dropout >= 1.0) throw ArgumentError("dropout must lie in [0, 1)");
}

Var ForwardContext::dropout(const Var& x) const {
  if (!dropout_rng) return x;
  return lcr::dropout(x, config.dropout, *dropout_rng);
}

void ForwardContext::note(std::string message) const {
  if (diagnostics) diagnostics->push_back(std::move(message));
}

namespace param_names {
std::string charge_weight(std::string_view charge) {
  return "enc.charge." + std::string(charge) + ".w";
}
std::string charge_bias(std::string_view charge) {
  return "enc.charge." + std::string(charge) + ".b";
}
}  // namespace param_names

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m.data()[i] = (2.0 * u - 1.0) * bound;
  }
  return m;
}

void init_encoder_params(ParamStore& params, const ModelConfig& cfg,
                         const std::vector<std::string>& charges, std::mt19937_64& rng) {
  const Eigen::Index d = cfg.d;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (const char* p : {"enc.attn.q", "enc.attn.k", "enc.attn.v", "enc.attn.o"})
    params.set(p, uniform_matrix(d, d, bound, rng));
  params.set("enc.general.w1", uniform_matrix(d, d, bound, rng));
  params.set("enc.general.b1", Matrix::Zero(1, d));
  params.set("enc.general.w2", uniform_matrix(d, d, bound, rng));
  params.set("enc.general.b2", Matrix::Zero(1, d));
  params.set("enc.gate.w", uniform_matrix(d, d, bound, rng));
  params.set("enc.gate.b", Matrix::Zero(1, d));
  params.set("enc.fusion.w", uniform_matrix(2 * d, d, bound, rng));
  params.set("enc.fusion.b", Matrix::Zero(1, d));
  ModelConfig reg = cfg;
  reg.auto_register_charges = true;
  for (const auto& c : charges) ensure_charge(params, reg, c);
}

bool has_charge(const ParamStore& params, std::string_view charge) {
  return params.contains(param_names::charge_weight(charge));
}

void ensure_charge(ParamStore& params, const ModelConfig& cfg, std::string_view charge) {
  if (has_charge(params, charge)) return;
  if (!cfg.auto_register_charges)
    throw UnknownChargeError("charge '" + std::string(charge) + "' has no registered transform");
  if (charge.empty() || charge.find('.') != std::string_view::npos)
    throw ArgumentError("charge identifier '" + std::string(charge) + "' is empty or contains '.'");
  params.set(param_names::charge_weight(charge), Matrix::Identity(cfg.d, cfg.d));
  params.set(param_names::charge_bias(charge), Matrix::Zero(1, cfg.d));
}

std::vector<std::string> registered_charges(const ParamStore& params) {
  const std::string prefix = "enc.charge.";
  const std::string suffix = ".w";
  std::vector<std::string> out;
  for (const auto& [name, v] : params) {
    if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size() + suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      out.push_back(name.substr(prefix.size(), name.size() - prefix.size() - suffix.size()));
  }
  return out;
}

AttentionResult self_attention(const ForwardContext& ctx, const Var& x, const std::string& prefix,
                               int heads, bool causal) {
  auto& p = ctx.params;
  const Eigen::Index d = x.cols();
  if (heads <= 0 || d % heads != 0)
    throw DimensionError("self_attention: " + std::to_string(heads) + " heads do not divide width " +
                         std::to_string(d));
  const Eigen::Index hd = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const Var q = matmul(x, p(prefix + ".q"));
  const Var k = matmul(x, p(prefix + ".k"));
  const Var v = matmul(x, p(prefix + ".v"));

  AttentionResult res;
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var qh = slice_cols(q, h * hd, hd);
    const Var kh = slice_cols(k, h * hd, hd);
    const Var vh = slice_cols(v, h * hd, hd);
    const Var probs = softmax_rows(matmul(qh, transpose(kh)) * scale, causal);
    res.head_weights.push_back(probs.value());
    outs.push_back(matmul(probs, vh));
  }
  const Var joined = heads == 1 ? outs.front() : hstack(outs);
  res.output = ctx.dropout(matmul(joined, p(prefix + ".o")));
  return res;
}

Var embed_component(const ForwardContext& ctx, std::string_view text) {
  const auto ids = ctx.vocab.encode(text);
  auto& tape = ctx.params.tape();
  if (ids.empty()) {
    ctx.note("empty component text embeds as the zero vector");
    return tape.constant(Matrix::Zero(1, ctx.config.d));
  }
  return mean_rows(gather_rows(ctx.params(param_names::kEmbed), std::span<const int>(ids)));
}

ChainRepresentation encode_chain(const ForwardContext& ctx, const LegalChain& chain) {
  const Var h = vstack({embed_component(ctx, chain.premise.text),
                        embed_component(ctx, chain.situation.text),
                        embed_component(ctx, chain.conclusion_text())});
  if (h.cols() != ctx.config.d)
    throw DimensionError("encode_chain: embedding width " + std::to_string(h.cols()) +
                         " != model dimension " + std::to_string(ctx.config.d));
  auto attn = self_attention(ctx, h, "enc.attn", ctx.config.encoder_heads, false);
  ChainRepresentation out;
  out.r = mean_rows(h + attn.output);
  out.w = Matrix::Zero(3, 3);
  for (const auto& w : attn.head_weights) out.w += w;
  out.w /= static_cast<double>(attn.head_weights.size());
  return out;
}

CrimeTransformResult crime_transform(const ForwardContext& ctx, const Var& r,
                                     std::string_view charge) {
  auto& p = ctx.params;
  const auto& store = p.params();
  if (!has_charge(store, charge))
    throw UnknownChargeError("charge '" + std::string(charge) + "' has no registered transform");
  const Var hidden = ctx.dropout(relu(matmul(r, p("enc.general.w1")) + p("enc.general.b1")));
  CrimeTransformResult out;
  out.u = matmul(hidden, p("enc.general.w2")) + p("enc.general.b2");
  out.v = matmul(out.u, p(param_names::charge_weight(charge))) + p(param_names::charge_bias(charge));
  out.g = sigmoid(matmul(out.u, p("enc.gate.w")) + p("enc.gate.b"));
  // g * v + (1 - g) * u
  out.t = cwise_product(out.g, out.v) + cwise_product(affine(out.g, -1.0, 1.0), out.u);
  return out;
}

Var fuse(const ForwardContext& ctx, const Var& r, const Var& t) {
  if (r.cols() != t.cols() || r.rows() != t.rows())
    throw DimensionError("fuse: " + shape_str(r.value()) + " vs " + shape_str(t.value()));
  return matmul(hstack({r, t}), ctx.params("enc.fusion.w")) + ctx.params("enc.fusion.b");
}

EncodedChainSet encode_chain_set(const ForwardContext& ctx, const ChainSet& cs) {
  if (cs.chains.empty())
    throw ArgumentError("encode_chain_set: chain set for '" + cs.charge + "' is empty");
  EncodedChainSet out;
  std::vector<Var> rows;
  for (const auto& chain : cs.chains) {
    auto rep = encode_chain(ctx, chain);
    auto tr = crime_transform(ctx, rep.r, cs.charge);
    rows.push_back(fuse(ctx, rep.r, tr.t));
    out.attention.push_back(std::move(rep.w));
  }
  out.rows = rows.size() == 1 ? rows.front() : vstack(rows);
  return out;
}

}  // namespace lcr
