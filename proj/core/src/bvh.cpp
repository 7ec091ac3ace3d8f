#include "moglow/bvh.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "moglow/error.hpp"

namespace moglow::motion {

namespace {

struct Token {
  std::string_view text;
  int line;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  int line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '\n') {
      ++line;
      ++i;
    } else if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++i;
    } else if (ch == '{' || ch == '}') {
      tokens.push_back({text.substr(i, 1), line});
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' &&
             text[i] != '\n' && text[i] != '{' && text[i] != '}') {
        ++i;
      }
      tokens.push_back({text.substr(start, i - start), line});
    }
  }
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  int line() const { return done() ? (tokens_.empty() ? 0 : tokens_.back().line) : tokens_[pos_].line; }

  const Token& next(const char* what) {
    if (done()) throw ParseError(std::string("unexpected end of file, expected ") + what, line());
    return tokens_[pos_++];
  }
  const Token& peek() const { return tokens_[pos_]; }

  void expect(std::string_view word) {
    const Token& t = next(std::string(word).c_str());
    if (t.text != word) {
      throw ParseError("expected '" + std::string(word) + "', found '" + std::string(t.text) + "'",
                       t.line);
    }
  }

  Real number(const char* what) {
    const Token& t = next(what);
    Real v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(v)) {
      throw ParseError(std::string("expected ") + what + ", found '" + std::string(t.text) + "'",
                       t.line);
    }
    return v;
  }

  long integer(const char* what) {
    const Token& t = next(what);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      throw ParseError(std::string("expected ") + what + ", found '" + std::string(t.text) + "'",
                       t.line);
    }
    return v;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

BvhChannel parse_channel(const Token& t) {
  if (t.text == "Xposition") return BvhChannel::x_position;
  if (t.text == "Yposition") return BvhChannel::y_position;
  if (t.text == "Zposition") return BvhChannel::z_position;
  if (t.text == "Xrotation") return BvhChannel::x_rotation;
  if (t.text == "Yrotation") return BvhChannel::y_rotation;
  if (t.text == "Zrotation") return BvhChannel::z_rotation;
  throw ParseError("unknown channel '" + std::string(t.text) + "'", t.line);
}

void parse_joint(Parser& p, std::vector<BvhJoint>& joints, int parent, std::size_t& channels,
                 bool end_site) {
  BvhJoint joint;
  joint.parent = parent;
  joint.end_site = end_site;
  if (end_site) {
    p.expect("Site");
    joint.name = joints[parent].name + "_end";
  } else {
    joint.name = std::string(p.next("joint name").text);
  }
  p.expect("{");
  p.expect("OFFSET");
  for (Real& v : joint.offset) v = p.number("offset value");
  const int index = static_cast<int>(joints.size());
  if (!end_site) {
    p.expect("CHANNELS");
    const int line = p.line();
    const long n = p.integer("channel count");
    if (n < 0 || n > 6) throw ParseError("channel count must be in [0, 6]", line);
    for (long k = 0; k < n; ++k) joint.channels.push_back(parse_channel(p.next("channel name")));
    joint.channel_offset = channels;
    channels += joint.channels.size();
  }
  joints.push_back(std::move(joint));
  while (true) {
    const Token& t = p.next("'}'");
    if (t.text == "}") break;
    if (end_site) throw ParseError("end site cannot have children", t.line);
    if (t.text == "JOINT") {
      parse_joint(p, joints, index, channels, false);
    } else if (t.text == "End") {
      parse_joint(p, joints, index, channels, true);
    } else {
      throw ParseError("unexpected '" + std::string(t.text) + "' in joint block", t.line);
    }
  }
}

using Mat3 = std::array<std::array<Real, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
  return r;
}

Mat3 axis_rotation(int axis, Real degrees) {
  const Real rad = degrees * std::numbers::pi / 180.0;
  const Real c = std::cos(rad);
  const Real s = std::sin(rad);
  switch (axis) {
    case 0:
      return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
    case 1:
      return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
    default:
      return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  }
}

}  // namespace

std::size_t BvhDocument::channel_count() const {
  std::size_t n = 0;
  for (const BvhJoint& j : joints) n += j.channels.size();
  return n;
}

Skeleton BvhDocument::skeleton() const {
  Skeleton s;
  for (const BvhJoint& j : joints) {
    s.names.push_back(j.name);
    s.parents.push_back(j.parent);
    s.offsets.push_back(j.offset);
  }
  return s;
}

BvhDocument parse_bvh(std::string_view text) {
  Parser p(tokenize(text));
  BvhDocument doc;
  p.expect("HIERARCHY");
  std::size_t channels = 0;
  while (!p.done() && p.peek().text == "ROOT") {
    p.next("ROOT");
    parse_joint(p, doc.joints, -1, channels, false);
  }
  if (doc.joints.empty()) throw ParseError("hierarchy declares no ROOT joint", p.line());
  p.expect("MOTION");
  p.expect("Frames:");
  const int frames_line = p.line();
  const long frames = p.integer("frame count");
  if (frames < 0) throw ParseError("negative frame count", frames_line);
  p.expect("Frame");
  p.expect("Time:");
  const int time_line = p.line();
  doc.frame_time = p.number("frame time");
  if (!(doc.frame_time > 0.0)) throw ParseError("frame time must be positive", time_line);

  doc.frames = Tensor::zeros(static_cast<std::size_t>(frames), channels);
  for (long f = 0; f < frames; ++f) {
    for (std::size_t k = 0; k < channels; ++k) {
      if (p.done()) {
        throw ParseError("header declares " + std::to_string(frames) + " frames but data ends in frame " +
                             std::to_string(f + 1),
                         p.line());
      }
      doc.frames(static_cast<std::size_t>(f), k) = p.number("channel value");
    }
  }
  if (!p.done()) {
    throw ParseError("more motion data than the " + std::to_string(frames) + " declared frames",
                     p.line());
  }
  return doc;
}

BvhDocument load_bvh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open BVH file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bvh(buf.str());
}

Tensor forward_kinematics(const BvhDocument& doc, std::span<const Real> frame) {
  if (frame.size() != doc.channel_count()) {
    throw DimensionError("frame has " + std::to_string(frame.size()) + " values, hierarchy needs " +
                         std::to_string(doc.channel_count()));
  }
  const std::size_t j = doc.joints.size();
  std::vector<Mat3> rot(j);
  Tensor out = Tensor::zeros(1, 3 * j);
  for (std::size_t i = 0; i < j; ++i) {
    const BvhJoint& joint = doc.joints[i];
    Vec3 local = joint.offset;
    Mat3 r{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (std::size_t k = 0; k < joint.channels.size(); ++k) {
      const Real v = frame[joint.channel_offset + k];
      const int ch = static_cast<int>(joint.channels[k]);
      if (ch < 3) {
        local[ch] += v;
      } else {
        r = mul(r, axis_rotation(ch - 3, v));
      }
    }
    if (joint.parent < 0) {
      rot[i] = r;
      for (int a = 0; a < 3; ++a) out[3 * i + a] = local[a];
    } else {
      const std::size_t p = static_cast<std::size_t>(joint.parent);
      const Mat3& pr = rot[p];
      for (int a = 0; a < 3; ++a) {
        out[3 * i + a] =
            out[3 * p + a] + pr[a][0] * local[0] + pr[a][1] * local[1] + pr[a][2] * local[2];
      }
      rot[i] = mul(pr, r);
    }
  }
  return out;
}

Tensor bvh_positions(const BvhDocument& doc) {
  const std::size_t frames = doc.frames.rows();
  const std::size_t width = 3 * doc.joints.size();
  Tensor out = Tensor::zeros(frames, width);
  for (std::size_t f = 0; f < frames; ++f) {
    const Tensor row = forward_kinematics(doc, doc.frames.row_span(f));
    std::copy_n(row.ptr(), width, out.ptr() + f * width);
  }
  return out;
}

}  // namespace moglow::motion
