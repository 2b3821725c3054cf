#pragma once

// Little-endian binary encoding used by session files.

#include <cstdint>
#include <string>
#include <string_view>

#include "datalabel/error.hpp"

namespace datalabel {

class ArchiveWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v);
  void f64(double v);
  void boolean(bool v) { u8(v ? 1 : 0); }
  void str(std::string_view s);
  void raw(std::string_view s) { bytes_.append(s); }

  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

/// Reads what ArchiveWriter wrote; any overrun throws Error(kIo).
class ArchiveReader {
 public:
  explicit ArchiveReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32();
  double f64();
  bool boolean();
  std::string str();
  std::string_view raw(std::size_t n);
  /// Element count guarded against counts the remaining bytes cannot hold.
  std::size_t count(std::size_t min_element_bytes = 1);

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view take(std::size_t n);

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

/// Writes to `path` atomically: temp file, fsync, rename.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace datalabel
