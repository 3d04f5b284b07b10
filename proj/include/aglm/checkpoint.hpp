#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aglm/model.hpp"

namespace aglm {

// Versioned binary container for trained parameters. Little-endian
// throughout; payload is f32. Layout:
//   magic "AGLM" | version u16 | header-blob u32 len + bytes
//   tensor count u32 | per tensor: name (u16 len + bytes), rank u8,
//   dims u32[rank], payload offset u64 | payload bytes
// The header blob is UTF-8 `key = value` lines and carries the model config
// snapshot, vocabulary hashes and the PRNG id.
struct Checkpoint {
  static constexpr uint16_t kVersion = 1;

  ModelConfig config;
  std::map<std::string, std::string> extra;  // provenance: resolved run config
  uint64_t word_vocab_hash = 0;
  uint64_t morph_vocab_hash = 0;
  uint64_t syll_vocab_hash = 0;
  uint64_t jamo_vocab_hash = 0;
  std::string prng_id;
  ModelParams params;  // f64 in memory, f32 on disk
};

enum class CheckpointError {
  BadMagic,
  VersionSkew,
  Truncated,
  VocabHashMismatch,
  Malformed,
};

struct CheckpointException : std::runtime_error {
  CheckpointError code;
  CheckpointException(CheckpointError code, const std::string& what);
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Throws CheckpointException(VocabHashMismatch) unless all four hashes match.
void verify_vocab_hashes(const Checkpoint& ckpt, const VocabSet& vocabs);

}  // namespace aglm
