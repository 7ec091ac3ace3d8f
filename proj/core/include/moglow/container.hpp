#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "moglow/keyvalue.hpp"
#include "moglow/motion.hpp"

namespace moglow::motion {

inline constexpr std::uint32_t kClipFormatVersion = 1;

/// "MGMC" container: little-endian header (fps, J, D, C, T, joint names,
/// parents, mirror pairs, rest offsets), f32 poses, optional control and
/// world root, CRC32 trailer. Values are stored in single precision.
std::vector<std::uint8_t> encode_clip(const MotionClip& clip);
/// Throws LoadError naming the failing field.
MotionClip decode_clip(std::span<const std::uint8_t> bytes);

/// Writes the container and, when `meta` is given, a `<path>.meta`
/// key-value sidecar with the producing configuration.
void save_clip(const std::filesystem::path& path, const MotionClip& clip,
               const KeyValue* meta = nullptr);
MotionClip load_clip(const std::filesystem::path& path);
std::optional<KeyValue> load_clip_meta(const std::filesystem::path& path);
std::filesystem::path meta_path(const std::filesystem::path& clip_path);

}  // namespace moglow::motion
