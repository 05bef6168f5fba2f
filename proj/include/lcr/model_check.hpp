#pragma once

// Finite-difference check of the whole pipeline (chain encoder, decoder, joint
// loss) on a fixed two-case toy batch.

#include <cstdint>

#include "lcr/params.hpp"

namespace lcr {

struct ModelCheckSpec {
  std::uint64_t seed = 7;
  int d = 16;
  int encoder_heads = 2;
  int decoder_heads = 2;
  int decoder_layers = 2;
  int ff_dim = 32;
  double alpha = 1.0;
  double beta = 1.0;
  double eps = 1e-5;
};

struct ModelCheckResult {
  GradCheckReport report;
  std::size_t parameters = 0;  // parameter tensors checked
  double seconds = 0.0;
};

ModelCheckResult check_model_gradients(const ModelCheckSpec& spec);

}  // namespace lcr
