#pragma once

// .iatw checkpoint files. Little-endian throughout:
//
//   "IATW" | u32 version | u32 record count | records
//   record: u16 name length | name | u8 kind | u64 payload length | payload
//
// Kinds: 0 text, 1 u64, 2 float32 tensor (u32 rank, u64 extents, values).
// Records: "arch" and "meta" (key = value text), "rng" (text), "iteration"
// and "hash" (u64), and one "param/<name>" tensor per model parameter.

#include <cstdint>
#include <memory>
#include <string>

#include "iat/config.hpp"
#include "iat/model.hpp"

namespace iat::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<CodecModel<float>> model;
  std::int64_t iteration = 0;
  std::string rng_state;
  KeyValues metadata;  // training settings and final statistics

  std::uint64_t model_hash() const { return model->hash(); }
};

/// Writes through a temporary file and an atomic rename.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);

/// Throws IoError on a malformed file, a parameter set that does not match
/// the stored architecture, or a stored hash that does not match the values.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace iat::train
