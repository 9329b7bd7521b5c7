#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace dstack {

// 64-bit FNV-1a. Multi-byte values are fed little-endian regardless of host.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kPrime;
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) {
    for (char c : s) byte(static_cast<std::uint8_t>(c));
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = kOffsetBasis;
};

std::string to_hex(std::uint64_t v);
std::uint64_t parse_hex_u64(std::string_view text);

}  // namespace dstack
