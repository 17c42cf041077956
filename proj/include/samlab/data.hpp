#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/model.hpp"
#include "samlab/random.hpp"
#include "samlab/tensor.hpp"

namespace samlab {

/// Row-major feature matrix with one class label per row.
struct Dataset {
  Tensor features;
  std::vector<int> labels;
  int n_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t n_features() const noexcept { return features.cols(); }

  void validate() const {
    if (n_classes <= 0) throw ConfigError("dataset: n_classes must be positive");
    if (features.rows() != labels.size()) {
      throw LengthError("dataset: " + std::to_string(features.rows()) + " feature rows vs " +
                        std::to_string(labels.size()) + " labels");
    }
    for (int y : labels) {
      if (y < 0 || y >= n_classes) {
        throw ConfigError("dataset: label " + std::to_string(y) + " outside [0, " +
                          std::to_string(n_classes) + ")");
      }
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Rows `indices` of the dataset, in that order.
inline Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t f = data.n_features();
  Dataset out;
  out.n_classes = data.n_classes;
  out.features = Tensor::matrix(indices.size(), f);
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    for (std::size_t c = 0; c < f; ++c) out.features(r, c) = data.features(src, c);
    out.labels.push_back(data.labels[src]);
  }
  return out;
}

inline Batch to_batch(const Dataset& data) { return Batch{data.features, data.labels, {}}; }

inline Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset s = subset(data, indices);
  return Batch{std::move(s.features), std::move(s.labels), {}};
}

/// Two interleaving half circles. Class 0 lies on (cos t, sin t), class 1 on
/// (1 - cos t, 0.5 - sin t), t evenly spaced over [0, pi]; isotropic Gaussian
/// noise of sd `noise_sd` is added to both coordinates.
inline Dataset gen_two_moons(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw ConfigError("gen_two_moons: n must be >= 2");
  if (noise_sd < 0.0) throw ConfigError("gen_two_moons: noise_sd must be >= 0");
  const std::size_t n_outer = n / 2;
  const std::size_t n_inner = n - n_outer;
  auto angle = [](std::size_t i, std::size_t count) {
    return count <= 1 ? 0.0
                      : std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
  };

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.n_classes = 2;
  d.features = Tensor::matrix(n, 2);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x, y;
    if (i < n_outer) {
      const double t = angle(i, n_outer);
      x = std::cos(t);
      y = std::sin(t);
      d.labels[i] = 0;
    } else {
      const double t = angle(i - n_outer, n_inner);
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
      d.labels[i] = 1;
    }
    if (noise_sd > 0.0) {
      x += noise_sd * noise(rng);
      y += noise_sd * noise(rng);
    }
    d.features(i, 0) = x;
    d.features(i, 1) = y;
  }
  return d;
}

/// Example i belongs to class i % k and is drawn around centers[i % k].
inline Dataset gen_gaussian_blobs(std::size_t n, const std::vector<std::vector<double>>& centers,
                                  double sd, std::uint64_t seed) {
  if (centers.size() < 2) throw ConfigError("gen_gaussian_blobs: need at least 2 centers");
  if (sd < 0.0) throw ConfigError("gen_gaussian_blobs: sd must be >= 0");
  const std::size_t dim = centers.front().size();
  if (dim == 0) throw ConfigError("gen_gaussian_blobs: centers must be non-empty");
  for (const auto& c : centers) {
    if (c.size() != dim) throw ShapeError("gen_gaussian_blobs: centers differ in dimension");
  }
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.n_classes = static_cast<int>(centers.size());
  d.features = Tensor::matrix(n, dim);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % centers.size();
    d.labels[i] = static_cast<int>(k);
    for (std::size_t j = 0; j < dim; ++j) {
      d.features(i, j) = centers[k][j] + (sd > 0.0 ? sd * noise(rng) : 0.0);
    }
  }
  return d;
}

/// Relabels exactly round(fraction * n) distinct examples with a label drawn
/// uniformly from the other n_classes - 1 classes. Features are untouched.
inline Dataset inject_label_noise(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("inject_label_noise: fraction must be in [0, 1]");
  }
  Dataset out = data;
  const auto count =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size())));
  if (count == 0) return out;
  if (data.n_classes < 2) throw ConfigError("inject_label_noise: need at least 2 classes");

  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> pick(0, data.n_classes - 2);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = order[i];
    const int r = pick(rng);
    out.labels[idx] = r >= data.labels[idx] ? r + 1 : r;
  }
  return out;
}

/// Seeded shuffle, then the first round(train_fraction * n) rows go to train.
/// For n >= 2 both sides keep at least one example.
inline std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("split: train_fraction must be in (0, 1)");
  }
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const std::span<const std::size_t> all(order);
  return {subset(data, all.first(n_train)), subset(data, all.subspan(n_train))};
}

/// Index batches for one epoch. The order is a pure function of (seed, epoch);
/// the last batch may be short.
inline std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size,
                                                         std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("minibatches: batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

inline std::vector<std::vector<std::size_t>> minibatches(const Dataset& data,
                                                         std::size_t batch_size,
                                                         std::uint64_t seed, std::uint64_t epoch) {
  return minibatches(data.size(), batch_size, seed, epoch);
}

}  // namespace samlab
