#pragma once

// Adam optimization of the joint objective over a corpus split, with the
// with/without-chains ablation switch and per-epoch checkpoints.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lcr/corpus.hpp"
#include "lcr/evaluation.hpp"
#include "lcr/opinion_model.hpp"

namespace lcr {

struct TrainConfig {
  double lr = 1e-3;
  double alpha = 1.0;
  double beta = 1.0;
  int epochs = 20;
  int batch_size = 4;
  std::uint64_t seed = 0;
  double dropout = 0.1;
  bool use_chains = true;
  int heads = 8;  // encoder attention heads
  int d = 64;
  int decoder_layers = 2;
  int decoder_heads = 4;
  int ff_dim = 128;
  int context = 256;
  double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping
  int max_generate = 160;  // decode budget for held-out evaluation
  bool evaluate_each_epoch = true;

  void validate() const;
  ModelConfig model_config() const;
};

struct AdamState {
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
  long long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update. `grads` must carry exactly the keys of `params`.
void adam_step(ParamStore& params, const Gradients& grads, AdamState& state, double lr);

// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
// Returns the norm before scaling.
double clip_global_norm(Gradients& grads, double max_norm);

// Tokens of the training opinions and facts, every chain text in the library,
// and every whole month count up to the library's largest range bound.
Vocabulary build_vocabulary(const std::vector<CaseRecord>& train, const ChainLibrary& library);

// Teacher-forcing example for one case; `chains` may be null.
DecoderExample make_example(const CaseRecord& rec, const Vocabulary& vocab, const ChainSet* chains);

// Loss values of one optimizer step.
struct StepLoss {
  double total = 0.0;
  double reasoning = 0.0;
  double sentencing = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_reasoning = 0.0;
  double loss_sentencing = 0.0;
  double heldout_mae = 0.0;
  double heldout_rmse = 0.0;
};

struct TrainHooks {
  std::optional<std::filesystem::path> checkpoint;  // rewritten after every epoch
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(long long step, const StepLoss&)> on_step;
};

struct TrainResult {
  OpinionModel model;
  std::vector<EpochLog> log;
  std::vector<double> step_losses;
};

// Fresh model trained on split.train; held-out metrics come from split.test.
TrainResult train(const CorpusSplit& split, const ChainLibrary& library, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

// Continues training an existing model for `steps` optimizer steps on `cases`.
void train_steps(OpinionModel& model, AdamState& state, const std::vector<CaseRecord>& cases,
                 const ChainLibrary& library, const TrainConfig& cfg, long long steps,
                 std::mt19937_64& order_rng, std::mt19937_64& dropout_rng,
                 std::vector<double>* step_losses = nullptr,
                 const std::function<void(long long, const StepLoss&)>& on_step = {});

// Greedy opinions for `cases`, in order.
std::vector<std::string> generate_opinions(const OpinionModel& model,
                                           const std::vector<CaseRecord>& cases,
                                           const ChainLibrary& library, bool use_chains,
                                           int max_len);

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace lcr
