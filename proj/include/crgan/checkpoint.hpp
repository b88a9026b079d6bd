#pragma once

// Binary checkpoint layout (all integers little-endian, doubles IEEE-754 binary64):
//
//   bytes 0..7    magic "CRGANCKP"
//   u32           format version (currently 1)
//   u64 + bytes   config text (key=value lines)
//   i64           generator updates completed
//   u32           tensor count, then per tensor:
//                   u32 + bytes  name
//                   u64, u64     rows, cols
//                   f64[rows*cols] row-major data
//   u32           rng stream count, then per stream:
//                   u32 + bytes  name
//                   u64 + bytes  textual engine state
//
// Tensors cover every trainable parameter plus each spectral-norm vector
// ("<layer>.sn_u", "head.sn_u.<i>").

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crgan/tensor.hpp"

namespace crgan {

inline constexpr char kCheckpointMagic[8] = {'C', 'R', 'G', 'A', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;
  std::int64_t g_updates = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<std::pair<std::string, std::string>> rng_states;

  [[nodiscard]] const Tensor* find(const std::string& name) const;
};

/// Writes to a sibling temporary file and renames it over `path`, so an existing
/// checkpoint is only replaced by a complete one.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace crgan
