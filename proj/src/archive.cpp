#include "datalabel/archive.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace datalabel {

void ArchiveWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ArchiveWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ArchiveWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ArchiveWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ArchiveWriter::str(std::string_view s) {
  u64(s.size());
  bytes_.append(s);
}

std::string_view ArchiveReader::take(std::size_t n) {
  if (n > bytes_.size() - pos_) throw Error(ErrorCode::kIo, "archive truncated");
  auto out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ArchiveReader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::uint32_t ArchiveReader::u32() {
  const auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

std::uint64_t ArchiveReader::u64() {
  const auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

float ArchiveReader::f32() { return std::bit_cast<float>(u32()); }
double ArchiveReader::f64() { return std::bit_cast<double>(u64()); }

bool ArchiveReader::boolean() {
  const auto v = u8();
  if (v > 1) throw Error(ErrorCode::kIo, "archive corrupt: bad boolean");
  return v == 1;
}

std::string ArchiveReader::str() { return std::string(take(count())); }

std::string_view ArchiveReader::raw(std::size_t n) { return take(n); }

std::size_t ArchiveReader::count(std::size_t min_element_bytes) {
  const std::uint64_t n = u64();
  if (min_element_bytes > 0 && n > (bytes_.size() - pos_) / min_element_bytes) {
    throw Error(ErrorCode::kIo, "archive truncated");
  }
  return static_cast<std::size_t>(n);
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot open " + tmp + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < contents.size()) {
    const ssize_t n = ::write(fd, contents.data() + written, contents.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error(ErrorCode::kIo, "write failed for " + tmp + ": " + std::strerror(err));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    throw Error(ErrorCode::kIo, "cannot flush " + tmp + ": " + std::strerror(errno));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorCode::kIo, "cannot rename " + tmp + " to " + path + ": " + std::strerror(errno));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace datalabel
