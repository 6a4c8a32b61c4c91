#pragma once

#include "hsi/error.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hsi::detail {

// Little-endian writer/reader for the binary model formats.
class ByteWriter {
 public:
  void magic(std::string_view m) {
    for (char c : m) out_.push_back(static_cast<std::byte>(c));
  }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::byte> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void blob(std::span<const std::byte> b) {
    u64(b.size());
    bytes(b);
  }

  std::vector<std::byte> take() { return std::move(out_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
      out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }

  std::vector<std::byte> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (static_cast<char>(in_[pos_ + i]) != m[i])
        throw Error(ErrorCode::BadMagic, "expected '" + std::string(m) + "'");
    }
    pos_ += m.size();
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::span<const std::byte> blob() {
    const auto n = u64();
    need(n);
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == in_.size(); }
  void expect_done() const {
    if (!done()) throw Error(ErrorCode::CorruptModel, "trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::CorruptModel, "truncated payload");
  }
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(std::to_integer<std::uint8_t>(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

}  // namespace hsi::detail
