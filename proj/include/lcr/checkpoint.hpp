#pragma once

// Binary model container.
//
//   bytes 0..7   magic "LCRCKPT\0"
//   u32          major version
//   u32          minor version
//   u64          header length, then that many bytes of JSON:
//                  {"config": {...}, "vocabulary": [...], "charges": [...],
//                   "use_chains": bool, "seed": n, "epoch": n}
//   u64          tensor count, then per tensor (sorted by name):
//                  u32 name length, name bytes, u64 rows, u64 cols,
//                  rows*cols IEEE-754 doubles in row-major order
//
// Integers and doubles are little-endian. Readers accept any minor version
// of their own major version.

#include <cstdint>
#include <filesystem>
#include <string>

#include "lcr/opinion_model.hpp"

namespace lcr {

inline constexpr std::uint32_t kCheckpointMajor = 1;
inline constexpr std::uint32_t kCheckpointMinor = 0;

struct CheckpointInfo {
  bool use_chains = true;
  std::uint64_t seed = 0;
  int epoch = 0;
  bool operator==(const CheckpointInfo&) const = default;
};

struct Checkpoint {
  OpinionModel model;
  CheckpointInfo info;
};

std::string encode_checkpoint(const OpinionModel& model, const CheckpointInfo& info);
Checkpoint decode_checkpoint(std::string_view bytes);

// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const OpinionModel& model, const CheckpointInfo& info,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lcr
