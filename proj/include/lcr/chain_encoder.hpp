#pragma once

// Chain-aware encoding: component embeddings, intra-chain self-attention with
// residual and mean pooling, the gated general/charge-specific crime
// transformation, and the fusion layer. One fused row per chain.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lcr/legal_chain.hpp"
#include "lcr/params.hpp"
#include "lcr/tokenizer.hpp"

namespace lcr {

struct ModelConfig {
  int d = 64;
  int encoder_heads = 8;
  int decoder_heads = 4;
  int decoder_layers = 2;
  int ff_dim = 128;
  int context = 256;
  double dropout = 0.1;
  bool auto_register_charges = true;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Everything a forward pass reads. A null dropout_rng disables dropout.
struct ForwardContext {
  Binding& params;
  const ModelConfig& config;
  const Vocabulary& vocab;
  std::mt19937_64* dropout_rng = nullptr;
  std::vector<std::string>* diagnostics = nullptr;

  double dropout_rate() const { return dropout_rng ? config.dropout : 0.0; }
  Var dropout(const Var& x) const;
  void note(std::string message) const;
};

namespace param_names {
inline const std::string kEmbed = "embed";
std::string charge_weight(std::string_view charge);
std::string charge_bias(std::string_view charge);
}  // namespace param_names

// Draws uniform(-1/sqrt(d), 1/sqrt(d)) from a raw 64-bit engine.
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng);

// Adds encoder parameters (shared layers plus one transform per charge).
void init_encoder_params(ParamStore& params, const ModelConfig& cfg,
                         const std::vector<std::string>& charges, std::mt19937_64& rng);

// Gives `charge` fresh (W_C = I, b_C = 0) storage if it has none.
// Throws UnknownChargeError when absent and auto-registration is off.
void ensure_charge(ParamStore& params, const ModelConfig& cfg, std::string_view charge);
bool has_charge(const ParamStore& params, std::string_view charge);
std::vector<std::string> registered_charges(const ParamStore& params);

struct AttentionResult {
  Var output;                       // rows x d, after output projection and dropout
  std::vector<Matrix> head_weights;  // one rows x rows matrix per head
};

// Multi-head scaled dot-product self-attention using "<prefix>.q/k/v/o".
AttentionResult self_attention(const ForwardContext& ctx, const Var& x, const std::string& prefix,
                               int heads, bool causal);

// Mean of the component's token embeddings; empty text gives a zero row.
Var embed_component(const ForwardContext& ctx, std::string_view text);

struct ChainRepresentation {
  Var r;     // 1 x d pooled representation
  Matrix w;  // 3 x 3 head-averaged attention weights
};

ChainRepresentation encode_chain(const ForwardContext& ctx, const LegalChain& chain);

struct CrimeTransformResult {
  Var t;  // gated mix
  Var g;  // gate
  Var u;  // general transform T_G(r)
  Var v;  // charge-specific transform T_C(u)
};

CrimeTransformResult crime_transform(const ForwardContext& ctx, const Var& r,
                                     std::string_view charge);

Var fuse(const ForwardContext& ctx, const Var& r, const Var& t);

struct EncodedChainSet {
  Var rows;                        // n x d
  std::vector<Matrix> attention;   // n matrices, 3 x 3
  std::size_t size() const { return attention.size(); }
};

EncodedChainSet encode_chain_set(const ForwardContext& ctx, const ChainSet& cs);

}  // namespace lcr
