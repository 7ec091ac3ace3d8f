#include "moglow/container.hpp"

#include <cstring>
#include <string>

#include "moglow/binary_io.hpp"
#include "moglow/error.hpp"

namespace moglow::motion {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'M', 'C'};
constexpr std::uint32_t kNoMirror = 0xFFFFFFFFu;

void put_matrix(io::ByteWriter& w, const Tensor& m) {
  for (Real v : m.data()) w.f32(static_cast<float>(v));
}

Tensor get_matrix(io::ByteReader& r, std::size_t rows, std::size_t cols, const char* field) {
  Tensor m = Tensor::zeros(rows, cols);
  for (Real& v : m.data()) v = r.f32(field);
  return m;
}

}  // namespace

std::vector<std::uint8_t> encode_clip(const MotionClip& clip) {
  clip.validate();
  const Skeleton& s = clip.skeleton;
  io::ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kClipFormatVersion);
  w.f32(static_cast<float>(clip.fps));
  w.u32(static_cast<std::uint32_t>(s.joints()));
  w.u32(static_cast<std::uint32_t>(clip.pose_dims()));
  w.u32(clip.control ? static_cast<std::uint32_t>(kControlDims) : 0u);
  w.u64(clip.frames());
  for (const std::string& name : s.names) w.string(name);
  for (int p : s.parents) w.u32(static_cast<std::uint32_t>(p));
  if (s.mirror) {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t j = 0; j < s.joints(); ++j) {
      const int m = (*s.mirror)[j];
      if (m >= static_cast<int>(j)) pairs.emplace_back(static_cast<int>(j), m);
    }
    w.u32(static_cast<std::uint32_t>(pairs.size()));
    for (auto [a, b] : pairs) {
      w.u32(static_cast<std::uint32_t>(a));
      w.u32(static_cast<std::uint32_t>(b));
    }
  } else {
    w.u32(kNoMirror);
  }
  for (const Vec3& o : s.offsets)
    for (Real v : o) w.f32(static_cast<float>(v));
  put_matrix(w, clip.poses);
  if (clip.control) put_matrix(w, *clip.control);
  if (clip.world_root) put_matrix(w, *clip.world_root);
  w.crc_trailer();
  return w.buffer();
}

MotionClip decode_clip(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw LoadError("not a motion container (magic 'MGMC' missing)");
  }
  io::ByteReader head(bytes.subspan(4));
  const std::uint32_t version = head.u32("version");
  if (version != kClipFormatVersion) {
    throw LoadError("motion container version " + std::to_string(version) + " unsupported (expected " +
                    std::to_string(kClipFormatVersion) + ")");
  }
  const auto payload = io::verify_crc_trailer(bytes, "motion container");
  io::ByteReader r(payload.subspan(8));

  MotionClip clip;
  clip.fps = r.f32("fps");
  const std::uint32_t joints = r.u32("joint count");
  const std::uint32_t dims = r.u32("pose dims");
  const std::uint32_t cdims = r.u32("control dims");
  const std::uint64_t frames = r.u64("frame count");
  if (dims != 3 * joints) throw LoadError("pose dims " + std::to_string(dims) + " != 3 x joints");
  if (cdims != 0 && cdims != kControlDims) throw LoadError("control dims must be 0 or 3");
  Skeleton& s = clip.skeleton;
  for (std::uint32_t j = 0; j < joints; ++j) s.names.push_back(r.string("joint name"));
  for (std::uint32_t j = 0; j < joints; ++j) s.parents.push_back(static_cast<int>(r.u32("parent index")));
  const std::uint32_t pairs = r.u32("mirror pair count");
  if (pairs != kNoMirror) {
    std::vector<int> mirror(joints);
    for (std::uint32_t j = 0; j < joints; ++j) mirror[j] = static_cast<int>(j);
    for (std::uint32_t k = 0; k < pairs; ++k) {
      const std::uint32_t a = r.u32("mirror pair");
      const std::uint32_t b = r.u32("mirror pair");
      if (a >= joints || b >= joints) throw LoadError("mirror pair index out of range");
      mirror[a] = static_cast<int>(b);
      mirror[b] = static_cast<int>(a);
    }
    s.mirror = std::move(mirror);
  }
  for (std::uint32_t j = 0; j < joints; ++j) {
    Vec3 o;
    for (Real& v : o) v = r.f32("rest offset");
    s.offsets.push_back(o);
  }
  const std::size_t t = static_cast<std::size_t>(frames);
  if (t * dims * 4 > r.remaining()) throw LoadError("truncated data while reading poses");
  clip.poses = get_matrix(r, t, dims, "poses");
  if (cdims) clip.control = get_matrix(r, t, cdims, "control");
  if (r.remaining() == t * 3 * 4 && t > 0) {
    clip.world_root = get_matrix(r, t, 3, "world root");
  }
  if (r.remaining() != 0) throw LoadError("unexpected trailing bytes before the CRC32 trailer");
  try {
    clip.validate();
  } catch (const ContractError& e) {
    throw LoadError(std::string("invalid motion container: ") + e.what());
  }
  return clip;
}

std::filesystem::path meta_path(const std::filesystem::path& clip_path) {
  std::filesystem::path p = clip_path;
  p += ".meta";
  return p;
}

void save_clip(const std::filesystem::path& path, const MotionClip& clip, const KeyValue* meta) {
  io::write_file(path, encode_clip(clip));
  if (meta) io::write_text(meta_path(path), meta->to_text());
}

MotionClip load_clip(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = io::read_file(path);
  try {
    return decode_clip(bytes);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

std::optional<KeyValue> load_clip_meta(const std::filesystem::path& path) {
  const auto p = meta_path(path);
  if (!std::filesystem::exists(p)) return std::nullopt;
  return KeyValue::parse(io::read_text(p));
}

}  // namespace moglow::motion
