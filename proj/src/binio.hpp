#pragma once

// Little-endian primitive I/O shared by the codebook, index and vector
// file formats. Readers track the stream offset for error reporting.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "mkmh/core.hpp"

namespace mkmh::binio {

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
  }
  os.write(buf, sizeof(T));
}

inline void put_f32(std::ostream& os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }

inline void put_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {
    const auto p = is.tellg();
    offset_ = p < 0 ? 0 : static_cast<std::int64_t>(p);
  }

  std::int64_t offset() const noexcept { return offset_; }

  void read_bytes(char* dst, std::size_t n, const char* what) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw FormatError(std::string("truncated input while reading ") + what, offset_);
    }
    offset_ += static_cast<std::int64_t>(n);
  }

  template <typename T>
  T get_le(const char* what) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    read_bytes(reinterpret_cast<char*>(buf), sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    }
    return static_cast<T>(u);
  }

  float get_f32(const char* what) { return std::bit_cast<float>(get_le<std::uint32_t>(what)); }

  void expect_magic(std::string_view magic) {
    const std::int64_t at = offset_;
    char buf[8] = {};
    read_bytes(buf, magic.size(), "magic");
    if (std::string_view(buf, magic.size()) != magic) {
      throw FormatError("bad magic: expected \"" + std::string(magic) + "\"", at);
    }
  }

 private:
  std::istream& is_;
  std::int64_t offset_ = 0;
};

}  // namespace mkmh::binio
