#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/random.hpp"

namespace samlab {

using Vec = std::vector<double>;

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw LengthError(std::string(op) + ": length mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
}
}  // namespace detail

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Euclidean norm. Scaled accumulation so that tiny or huge entries do not
/// underflow/overflow the sum of squares.
inline double norm2(std::span<const double> a) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double v : a) {
    const double r = v / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

/// alpha * x + y
inline Vec axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x.size(), y.size(), "axpy");
  Vec out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

inline Vec scale(double alpha, std::span<const double> x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i];
  return out;
}

/// y += alpha * x, in place.
inline void add_scaled(std::span<double> y, double alpha, std::span<const double> x) {
  detail::require_same_length(x.size(), y.size(), "add_scaled");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// x + y
inline Vec add(std::span<const double> x, std::span<const double> y) {
  return axpy(1.0, x, y);
}

/// Uniform direction on the unit sphere: g / ||g|| for g ~ N(0, I).
inline Vec sample_unit_direction(std::size_t dim, Rng& rng) {
  if (dim == 0) throw ConfigError("sample_unit_direction: dim must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec g(dim);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (auto& v : g) v = normal(rng);
    const double n = norm2(g);
    if (n > 1e-300 && std::isfinite(n)) {
      for (auto& v : g) v /= n;
      return g;
    }
  }
  throw NumericError("sample_unit_direction: norm underflow after 100 resamples");
}

}  // namespace samlab
