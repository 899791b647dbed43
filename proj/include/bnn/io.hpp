#pragma once

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bnn/error.hpp"

namespace bnn {

using Bytes = std::vector<std::uint8_t>;

static_assert(std::endian::native == std::endian::little,
              "byte codecs assume a little-endian host");

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void i8(std::int8_t v) { buf_.push_back(static_cast<std::uint8_t>(v)); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void i32(std::int32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(v); }
  void raw(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  void str(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  const Bytes& bytes() const& noexcept { return buf_; }
  Bytes bytes() && noexcept { return std::move(buf_); }

 private:
  template <typename V>
  void put(V v) {
    std::uint8_t tmp[sizeof(V)];
    std::memcpy(tmp, &v, sizeof(V));
    buf_.insert(buf_.end(), tmp, tmp + sizeof(V));
  }
  Bytes buf_;
};

/// Bounds-checked little-endian reader. Running past the end throws
/// FormatError(kTruncated).
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::int8_t i8() { return get<std::int8_t>(); }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return get<float>(); }

  std::uint32_t u32_be() {
    const auto b = take(4);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    require(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  /// Throws kTruncated unless `count * elem` more bytes are available.
  void require(std::size_t count, std::size_t elem = 1) const {
    if (elem != 0 && count > remaining() / elem) {
      throw FormatError(FormatErrc::kTruncated,
                        "need " + std::to_string(count) + "x" + std::to_string(elem) +
                            " bytes at offset " + std::to_string(pos_) + ", have " +
                            std::to_string(remaining()));
    }
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  template <typename V>
  V get() {
    const auto b = take(sizeof(V));
    V v;
    std::memcpy(&v, b.data(), sizeof(V));
    return v;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Lowercase hex SHA-256 of `bytes`.
inline std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Refuses to replace an existing file unless `force` is set.
inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                       bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw IoError(path.string() + " exists (pass --force to overwrite)");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text, bool force) {
  write_file(path,
             std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                           text.size()),
             force);
}

}  // namespace bnn
