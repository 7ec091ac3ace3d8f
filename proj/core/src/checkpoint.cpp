#include "moglow/checkpoint.hpp"

#include <cstring>
#include <map>
#include <string>

#include "moglow/binary_io.hpp"
#include "moglow/error.hpp"

namespace moglow::train {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'C', 'K'};

struct Blob {
  std::string name;
  const Tensor* tensor;
};

std::string join_indices(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<std::size_t> split_indices(const std::string& s, const std::string& key) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos >= s.size()) break;
    std::size_t end = s.find(' ', pos);
    if (end == std::string::npos) end = s.size();
    auto v = parse_int(std::string_view(s).substr(pos, end - pos));
    if (!v || *v < 0) throw LoadError("malformed index list in field '" + key + "'");
    out.push_back(static_cast<std::size_t>(*v));
    pos = end;
  }
  return out;
}

Tensor row_tensor(const std::vector<Real>& v) { return Tensor::row(v); }

void write_skeleton(KeyValue& header, const motion::Skeleton& s) {
  std::string names;
  std::string parents;
  std::vector<Real> offsets;
  for (std::size_t j = 0; j < s.joints(); ++j) {
    if (s.names[j].find_first_of(" \t\n") != std::string::npos) {
      throw ContractError("joint names stored in checkpoints cannot contain whitespace");
    }
    names += (j ? " " : "") + s.names[j];
    parents += (j ? " " : "") + std::to_string(s.parents[j]);
    offsets.insert(offsets.end(), s.offsets[j].begin(), s.offsets[j].end());
  }
  header.set("skeleton.names", names);
  header.set("skeleton.parents", parents);
  header.set_reals("skeleton.offsets", offsets);
  if (s.mirror) {
    std::vector<std::size_t> m(s.mirror->begin(), s.mirror->end());
    header.set("skeleton.mirror", join_indices(m));
  }
}

motion::Skeleton read_skeleton(const KeyValue& header) {
  motion::Skeleton s;
  const std::string names = header.require("skeleton.names");
  std::size_t pos = 0;
  while (pos < names.size()) {
    std::size_t end = names.find(' ', pos);
    if (end == std::string::npos) end = names.size();
    if (end > pos) s.names.push_back(names.substr(pos, end - pos));
    pos = end + 1;
  }
  for (Real p : header.require_reals("skeleton.parents")) s.parents.push_back(static_cast<int>(p));
  const std::vector<Real> offsets = header.require_reals("skeleton.offsets");
  if (offsets.size() != 3 * s.names.size() || s.parents.size() != s.names.size()) {
    throw LoadError("skeleton fields disagree in joint count");
  }
  for (std::size_t j = 0; j < s.names.size(); ++j) {
    s.offsets.push_back({offsets[3 * j], offsets[3 * j + 1], offsets[3 * j + 2]});
  }
  if (auto m = header.get("skeleton.mirror")) {
    std::vector<int> mirror;
    for (std::size_t v : split_indices(*m, "skeleton.mirror")) mirror.push_back(static_cast<int>(v));
    s.mirror = std::move(mirror);
  }
  s.validate();
  return s;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const MoGlowModel& m = ckpt.model;
  KeyValue header;
  header.set("format", "moglow-checkpoint");
  const KeyValue config = to_keyvalue(ckpt.profile);
  for (const auto& [k, v] : config.entries()) header.set("config." + k, v);
  header.set("config.profile", ckpt.profile.name);
  header.set_int("model.pose_dims", static_cast<std::int64_t>(m.config.pose_dims));
  header.set_int("model.control_dims", static_cast<std::int64_t>(m.config.control_dims));
  header.set_int("model.steps", static_cast<std::int64_t>(m.config.steps));
  header.set_int("model.history", static_cast<std::int64_t>(m.config.history));
  header.set_int("model.hidden", static_cast<std::int64_t>(m.config.hidden));
  header.set_real("model.scale_floor", m.config.scale_floor);
  header.set_real("model.dropout_rate", m.config.dropout_rate);
  header.set_real("model.fps", m.config.fps);
  header.set_reals("scaler.pose_mean", m.scaler.pose_mean.data());
  header.set_reals("scaler.pose_std", m.scaler.pose_std.data());
  header.set_reals("scaler.control_mean", m.scaler.control_mean.data());
  header.set_reals("scaler.control_std", m.scaler.control_std.data());
  for (std::size_t n = 0; n < m.steps.size(); ++n) {
    const std::string p = "step" + std::to_string(n) + ".";
    header.set(p + "linear.permutation", join_indices(m.steps[n].linear.permutation));
    header.set(p + "actnorm.initialized", m.steps[n].actnorm.initialized ? "true" : "false");
  }
  header.set("trainer.present", ckpt.trainer ? "true" : "false");
  if (ckpt.trainer) {
    const TrainerState& t = *ckpt.trainer;
    header.set_int("trainer.step", static_cast<std::int64_t>(t.step));
    header.set_real("trainer.best_heldout", t.best_heldout);
    header.set_int("trainer.best_step", static_cast<std::int64_t>(t.best_step));
    header.set("trainer.batch_rng", t.batch_rng);
    header.set("trainer.mask_rng", t.mask_rng);
  }
  if (ckpt.skeleton) write_skeleton(header, *ckpt.skeleton);
  for (const auto& [k, v] : ckpt.provenance.entries()) header.set("provenance." + k, v);

  std::vector<Blob> blobs;
  std::vector<std::string> names;
  m.for_each_parameter([&](const std::string& name, const Tensor& t) { blobs.push_back({name, &t}); });
  for (std::size_t n = 0; n < m.steps.size(); ++n) {
    blobs.push_back({"step" + std::to_string(n) + ".linear.sign", &m.steps[n].linear.sign});
  }
  const std::size_t param_count = blobs.size() - m.steps.size();
  if (ckpt.trainer) {
    for (std::size_t i = 0; i < param_count; ++i) {
      blobs.push_back({"adam.m." + blobs[i].name, &ckpt.trainer->adam_m.at(i)});
    }
    for (std::size_t i = 0; i < param_count; ++i) {
      blobs.push_back({"adam.v." + blobs[i].name, &ckpt.trainer->adam_v.at(i)});
    }
  }

  io::ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);
  w.string(header.to_text());
  w.u32(static_cast<std::uint32_t>(blobs.size()));
  std::uint64_t offset = 0;
  for (const Blob& b : blobs) {
    w.string(b.name);
    w.u32(static_cast<std::uint32_t>(b.tensor->rank()));
    for (std::size_t d : b.tensor->shape()) w.u64(d);
    w.u64(offset);
    offset += b.tensor->size();
  }
  w.u64(offset);
  for (const Blob& b : blobs)
    for (Real v : b.tensor->data()) w.f64(v);
  w.crc_trailer();
  return w.buffer();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw LoadError("not a checkpoint (magic 'MGCK' missing)");
  }
  {
    io::ByteReader r(bytes.subspan(4));
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
      throw LoadError("field 'version': checkpoint version " + std::to_string(version) +
                      " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
  }
  const auto payload = io::verify_crc_trailer(bytes, "checkpoint");
  io::ByteReader r(payload.subspan(8));
  KeyValue header;
  try {
    header = KeyValue::parse(r.string("header"));
  } catch (const ParseError& e) {
    throw LoadError(std::string("checkpoint header: ") + e.what());
  }

  const std::uint32_t count = r.u32("manifest count");
  struct Entry {
    Tensor::Shape shape;
    std::uint64_t offset;
  };
  std::map<std::string, Entry> manifest;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const std::string name = r.string("manifest name");
    const std::uint32_t rank = r.u32("manifest rank");
    if (rank > 4) throw LoadError("manifest entry '" + name + "' has rank " + std::to_string(rank));
    for (std::uint32_t k = 0; k < rank; ++k) e.shape.push_back(static_cast<std::size_t>(r.u64("manifest shape")));
    e.offset = r.u64("manifest offset");
    manifest.emplace(name, std::move(e));
  }
  const std::uint64_t total = r.u64("blob length");
  if (total * 8 != r.remaining()) throw LoadError("field 'blob length' disagrees with the file size");
  std::vector<Real> blob(total);
  for (Real& v : blob) v = r.f64("blob");

  auto fill = [&](const std::string& name, Tensor& t) {
    auto it = manifest.find(name);
    if (it == manifest.end()) throw LoadError("manifest entry '" + name + "' missing");
    if (it->second.shape != t.shape()) {
      throw LoadError("manifest entry '" + name + "' has shape " + shape_string(it->second.shape) +
                      ", model expects " + shape_string(t.shape()));
    }
    if (it->second.offset + t.size() > total) throw LoadError("manifest entry '" + name + "' out of range");
    std::copy_n(blob.data() + it->second.offset, t.size(), t.ptr());
  };

  Checkpoint ckpt;
  try {
    ModelConfig mc;
    mc.pose_dims = static_cast<std::size_t>(header.require_int("model.pose_dims"));
    mc.control_dims = static_cast<std::size_t>(header.require_int("model.control_dims"));
    mc.steps = static_cast<std::size_t>(header.require_int("model.steps"));
    mc.history = static_cast<std::size_t>(header.require_int("model.history"));
    mc.hidden = static_cast<std::size_t>(header.require_int("model.hidden"));
    mc.scale_floor = header.require_real("model.scale_floor");
    mc.dropout_rate = header.require_real("model.dropout_rate");
    mc.fps = header.require_real("model.fps");
    mc.validate();

    ckpt.profile = named_profile(header.require("config.profile"), mc.pose_dims, mc.control_dims);
    KeyValue settings;
    for (const auto& [k, v] : header.entries()) {
      if (k.rfind("config.", 0) == 0 && k != "config.profile") settings.set(k.substr(7), v);
    }
    apply_config(ckpt.profile, settings);
    ckpt.profile.model = mc;

    ckpt.model = MoGlowModel::create(mc, 0);
    ckpt.model.scaler.pose_mean = row_tensor(header.require_reals("scaler.pose_mean"));
    ckpt.model.scaler.pose_std = row_tensor(header.require_reals("scaler.pose_std"));
    ckpt.model.scaler.control_mean = row_tensor(header.require_reals("scaler.control_mean"));
    ckpt.model.scaler.control_std = row_tensor(header.require_reals("scaler.control_std"));
    if (ckpt.model.scaler.pose_mean.cols() != mc.pose_dims ||
        ckpt.model.scaler.control_mean.cols() != mc.control_dims) {
      throw LoadError("scaler width disagrees with the model dimensions");
    }
    ckpt.model.for_each_parameter([&](const std::string& name, Tensor& t) { fill(name, t); });
    for (std::size_t n = 0; n < mc.steps; ++n) {
      const std::string p = "step" + std::to_string(n) + ".";
      FlowStep& s = ckpt.model.steps[n];
      fill(p + "linear.sign", s.linear.sign);
      s.linear.permutation = split_indices(header.require(p + "linear.permutation"), p + "linear.permutation");
      if (s.linear.permutation.size() != mc.pose_dims) throw LoadError("field '" + p + "linear.permutation' has the wrong length");
      s.actnorm.initialized = header.require(p + "actnorm.initialized") == "true";
    }

    if (header.require("trainer.present") == "true") {
      TrainerState t;
      t.step = static_cast<std::uint64_t>(header.require_int("trainer.step"));
      t.best_heldout = header.require_real("trainer.best_heldout");
      t.best_step = static_cast<std::uint64_t>(header.require_int("trainer.best_step"));
      t.batch_rng = header.require("trainer.batch_rng");
      t.mask_rng = header.require("trainer.mask_rng");
      ckpt.model.for_each_parameter([&](const std::string& name, Tensor& param) {
        Tensor m = Tensor::zeros(param.shape());
        Tensor v = Tensor::zeros(param.shape());
        fill("adam.m." + name, m);
        fill("adam.v." + name, v);
        t.adam_m.push_back(std::move(m));
        t.adam_v.push_back(std::move(v));
      });
      ckpt.trainer = std::move(t);
    }
    if (header.contains("skeleton.names")) ckpt.skeleton = read_skeleton(header);
    for (const auto& [k, v] : header.entries()) {
      if (k.rfind("provenance.", 0) == 0) ckpt.provenance.set(k.substr(11), v);
    }
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint header: ") + e.what());
  } catch (const ContractError& e) {
    throw LoadError(std::string("checkpoint header: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = io::read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

}  // namespace moglow::train
