#pragma once

// Little-endian primitive readers/writers shared by the binary formats.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "mvtp/error.hpp"

namespace mvtp::binio {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, std::string_view what) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), sizeof(T))) {
    throw FormatError("truncated input while reading " + std::string(what));
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline void write_floats(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) write_le(out, v);
  }
}

inline void read_floats(std::istream& in, std::span<float> values, std::string_view what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size_bytes()))) {
      throw FormatError("truncated input while reading " + std::string(what));
    }
  } else {
    for (float& v : values) v = read_le<float>(in, what);
  }
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
  }
}

inline void write_bytes(std::ostream& out, std::span<const std::uint8_t> bytes) {
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline void read_bytes(std::istream& in, std::span<std::uint8_t> bytes, std::string_view what) {
  if (!in.read(reinterpret_cast<char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()))) {
    throw FormatError("truncated input while reading " + std::string(what));
  }
}

/// Writes a length-prefixed (u16) string.
inline void write_id(std::ostream& out, const std::string& id) {
  if (id.size() > 0xFFFF) throw InvalidArgument("id longer than 65535 bytes: " + id.substr(0, 32));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
  out.write(id.data(), static_cast<std::streamsize>(id.size()));
}

inline std::string read_id(std::istream& in) {
  const auto len = read_le<std::uint16_t>(in, "id length");
  std::string id(len, '\0');
  if (len > 0 && !in.read(id.data(), len)) throw FormatError("truncated input while reading id");
  return id;
}

inline void expect_eof(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after end of data");
  }
}

}  // namespace mvtp::binio
