#pragma once

#include "ldc/estimation.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ldc {

/// Memo key of a DP node: step, state, and interval endpoints (or a point)
/// expressed as integer multiples of a resolution.
struct NodeKey {
  int h = 0;
  int state = 0;
  std::vector<std::int64_t> coords;

  bool operator==(const NodeKey&) const = default;
  auto operator<=>(const NodeKey&) const = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& key) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(key.h) << 32) ^
                      static_cast<std::uint64_t>(key.state);
    for (std::int64_t c : key.coords) {
      h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline std::int64_t quantize_coordinate(double value, double resolution) {
  const double scaled = std::round(value / resolution);
  if (!(std::abs(scaled) < 9.0e18)) throw std::overflow_error("node key: coordinate out of range");
  return static_cast<std::int64_t>(scaled);
}

template <typename Vector>
void append_coords(std::vector<std::int64_t>& out, const Vector& v, double resolution) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(quantize_coordinate(v[i], resolution));
}

inline NodeKey make_node_key(int h, int state, const AggregatedInterval& ci, double resolution) {
  NodeKey key{h, state, {}};
  key.coords.reserve(2 * ci.lower.size());
  append_coords(key.coords, ci.lower, resolution);
  append_coords(key.coords, ci.upper, resolution);
  return key;
}

template <typename Vector>
NodeKey make_point_key(int h, int state, const Vector& sigma, double resolution) {
  NodeKey key{h, state, {}};
  key.coords.reserve(sigma.size());
  append_coords(key.coords, sigma, resolution);
  return key;
}

}  // namespace ldc
