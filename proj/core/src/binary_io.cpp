#include "moglow/binary_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "moglow/error.hpp"

namespace moglow::io {

static_assert(std::endian::native == std::endian::little, "byte streams assume a little-endian host");

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& buf, T v) {
  std::uint8_t tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) { put(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put(buf_, v); }
void ByteWriter::f32(float v) { put(buf_, v); }
void ByteWriter::f64(double v) { put(buf_, v); }
void ByteWriter::bytes(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
void ByteWriter::raw(std::string_view text) { buf_.insert(buf_.end(), text.begin(), text.end()); }

void ByteWriter::string(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s);
}

void ByteWriter::crc_trailer() { u32(crc32(buf_)); }

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n, const char* field) {
  if (n > remaining()) {
    throw LoadError(std::string("truncated data while reading ") + field);
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::u32(const char* field) {
  std::uint32_t v;
  std::memcpy(&v, bytes(4, field).data(), 4);
  return v;
}
std::uint64_t ByteReader::u64(const char* field) {
  std::uint64_t v;
  std::memcpy(&v, bytes(8, field).data(), 8);
  return v;
}
float ByteReader::f32(const char* field) {
  float v;
  std::memcpy(&v, bytes(4, field).data(), 4);
  return v;
}
double ByteReader::f64(const char* field) {
  double v;
  std::memcpy(&v, bytes(8, field).data(), 8);
  return v;
}

std::string ByteReader::string(const char* field) {
  const std::uint32_t n = u32(field);
  auto b = bytes(n, field);
  return std::string(b.begin(), b.end());
}

std::span<const std::uint8_t> verify_crc_trailer(std::span<const std::uint8_t> file,
                                                 const std::string& what) {
  if (file.size() < 4) throw LoadError(what + ": file too short for a CRC32 trailer");
  const auto payload = file.first(file.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, file.data() + payload.size(), 4);
  if (crc32(payload) != stored) {
    throw LoadError(what + ": CRC32 mismatch (file truncated or corrupt)");
  }
  return payload;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw LoadError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string read_text(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> b = read_file(path);
  return std::string(b.begin(), b.end());
}

}  // namespace moglow::io
