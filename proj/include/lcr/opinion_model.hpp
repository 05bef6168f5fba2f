#pragma once

// Chain prefix + fact embeddings fed to a small causal decoder that writes the
// judicial opinion; joint reasoning/sentencing cross-entropy.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcr/chain_encoder.hpp"
#include "lcr/sentencing.hpp"

namespace lcr {

// Rows 0..n-1 are the encoded chains, rows n.. the fact token embeddings.
// A null `encoded` yields the fact rows alone.
Var combine(const ForwardContext& ctx, const EncodedChainSet* encoded, std::string_view fact_text);

// Decoder logits for each input position. `prefix` holds `chain_rows` chain
// slots (no positional signal) followed by fact rows; `inputs` begin with BOS.
Var decoder_logits(const ForwardContext& ctx, const Var& prefix, Eigen::Index chain_rows,
                   std::span<const int> inputs);

// One supervised sequence.
struct DecoderExample {
  std::string fact;
  const ChainSet* chains = nullptr;  // null routes through the no-chain path
  std::vector<int> target;           // opinion ids followed by EOS
  std::vector<double> sentencing_mask;  // 1 on sentencing-clause tokens, else 0
};

struct JointLoss {
  Var total;
  double reasoning = 0.0;   // mean token cross-entropy
  double sentencing = 0.0;  // mean cross-entropy over masked tokens (0 when none)
  std::size_t tokens = 0;
  std::size_t sentencing_tokens = 0;
};

// alpha * L_R + beta * L_S from per-sequence logits. Throws ArgumentError on
// invalid weights and ContractError on an empty mask with beta > 0.
JointLoss joint_loss_from_logits(std::span<const Var> logits,
                                 std::span<const std::vector<int>> targets,
                                 std::span<const std::vector<double>> masks, double alpha,
                                 double beta);

JointLoss joint_loss(const ForwardContext& ctx, std::span<const DecoderExample> batch, double alpha,
                     double beta);

struct GenerateConfig {
  enum class Mode { Greedy, TopK };
  int max_len = 160;
  Mode mode = Mode::Greedy;
  int top_k = 5;
  std::uint64_t seed = 0;
};

struct OpinionOutput {
  std::string text;
  std::vector<int> token_ids;
  std::optional<TokenInterval> sentencing_span;
  std::optional<int> extracted_months;
};

class OpinionModel {
 public:
  OpinionModel() = default;
  OpinionModel(ModelConfig config, Vocabulary vocab, const std::vector<std::string>& charges,
               std::uint64_t seed);
  OpinionModel(ModelConfig config, Vocabulary vocab, ParamStore params);

  const ModelConfig& config() const { return config_; }
  ModelConfig& config() { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  void ensure_charge(std::string_view charge) { lcr::ensure_charge(params_, config_, charge); }

  // Value of the combined prefix with no gradient tracking.
  Matrix combined_prefix(const ChainSet* chains, std::string_view fact) const;

  // Logits for each input via the cached incremental decoder (inference path).
  Matrix incremental_logits(const Matrix& prefix, Eigen::Index chain_rows,
                            std::span<const int> inputs) const;

  OpinionOutput generate(std::string_view fact, const ChainSet* chains,
                         const GenerateConfig& cfg) const;
  OpinionOutput generate_from_prefix(const Matrix& prefix, Eigen::Index chain_rows,
                                     const GenerateConfig& cfg) const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ParamStore params_;
};

void init_decoder_params(ParamStore& params, const ModelConfig& cfg, std::size_t vocab_size,
                         std::mt19937_64& rng);

}  // namespace lcr
