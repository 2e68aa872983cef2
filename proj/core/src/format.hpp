#pragma once

#include <charconv>
#include <string>

namespace ldc {

/// Shortest round-trip decimal form, independent of the global locale.
inline std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace ldc
