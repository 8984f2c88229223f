#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hdlp/panel.hpp"

namespace hdlp::testing {

/// Panel with i.i.d. N(offset, scale^2) entries.
inline PanelTensor random_panel(std::size_t n, std::size_t T, std::size_t p, std::uint64_t seed,
                                double scale = 1.0, double offset = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(offset, scale);
  std::vector<double> v(n * T * p);
  for (auto& x : v) x = z(rng);
  return PanelTensor(n, T, p, std::move(v));
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace hdlp::testing
