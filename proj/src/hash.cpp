#include "dstack/hash.hpp"

#include <charconv>

#include "dstack/errors.hpp"

namespace dstack {

std::string to_hex(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t parse_hex_u64(std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError("malformed hex digest '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace dstack
