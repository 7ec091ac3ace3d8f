#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace moglow::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Little-endian serialisation into a growing buffer.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::span<const std::uint8_t> data);
  void raw(std::string_view text);
  /// u32 byte length followed by UTF-8 bytes.
  void string(const std::string& s);
  /// Appends the CRC32 of everything written so far.
  void crc_trailer();

  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
  std::size_t size() const noexcept { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reads. Every failure names the field.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint32_t u32(const char* field);
  std::uint64_t u64(const char* field);
  float f32(const char* field);
  double f64(const char* field);
  std::span<const std::uint8_t> bytes(std::size_t n, const char* field);
  std::string string(const char* field);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Checks the trailing CRC32 and returns the payload before it.
std::span<const std::uint8_t> verify_crc_trailer(std::span<const std::uint8_t> file,
                                                 const std::string& what);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace moglow::io
