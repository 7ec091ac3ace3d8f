#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "moglow/config.hpp"
#include "moglow/keyvalue.hpp"
#include "moglow/model.hpp"
#include "moglow/motion.hpp"
#include "moglow/trainer.hpp"

namespace moglow::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunProfile profile;
  MoGlowModel model;
  std::optional<TrainerState> trainer;
  std::optional<motion::Skeleton> skeleton;  // what the poses describe
  KeyValue provenance;  // producing command, seed, data files
};

/// "MGCK" file: version, key-value header (hyperparameters, scaler, engine
/// states), parameter manifest (name, shape, offset) and f64 blobs, CRC32.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws LoadError naming the field (magic, version, CRC, manifest entry).
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace moglow::train
