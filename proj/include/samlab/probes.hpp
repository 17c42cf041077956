#pragma once

// Checkpoint sharpness probes. Every function here is a pure function of
// (objective, w, rho, seed): nothing about how w was trained enters.
//
//   ascent-direction   L(w + rho g/||g||)
//   average-direction  E_u L(w + rho u), u uniform on the unit sphere
//   worst-direction    max_{||e|| <= rho} L(w + e), estimated from below

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/objective.hpp"
#include "samlab/optimizers.hpp"
#include "samlab/random.hpp"
#include "samlab/vector_ops.hpp"

namespace samlab {

struct AscentLoss {
  double loss = 0.0;       // L(w + eps_1)
  double base_loss = 0.0;  // L(w)
  bool zero_gradient = false;
};

/// L at the first-order ascent point. With a zero gradient eps_1 = 0 and the
/// base loss is returned, flagged.
template <Objective F>
AscentLoss loss_ascent_direction(const F& objective, std::span<const double> w, double rho) {
  const LossGradient at_w = objective.loss_and_grad(w);
  const Perturbation eps = epsilon_first_order(at_w.gradient, rho);
  if (eps.zero_gradient) return {at_w.value, at_w.value, true};
  return {objective.loss(add(eps.epsilon, w)), at_w.value, false};
}

struct AverageLoss {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate over n_samples unit directions drawn from Rng(seed).
template <Objective F>
AverageLoss loss_average_direction(const F& objective, std::span<const double> w, double rho,
                                   std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw ConfigError("loss_average_direction: n_samples must be >= 2");
  if (!(rho > 0.0)) throw ConfigError("loss_average_direction: rho must be > 0");
  Rng rng(seed);
  std::vector<double> values;
  values.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto u = sample_unit_direction(w.size(), rng);
    values.push_back(objective.loss(axpy(rho, u, w)));
  }
  const double n = static_cast<double>(n_samples);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n), n_samples};
}

namespace detail {

/// Scales eps back onto the rho-ball if it left it.
inline void project_to_ball(std::vector<double>& eps, double rho) {
  const double n = norm2(eps);
  if (n > rho) {
    for (auto& v : eps) v *= rho / n;
  }
}

/// Projected normalised ascent from eps, returning the best loss visited
/// (including the start).
template <Objective F>
double ascend_in_ball(const F& objective, std::span<const double> w, std::vector<double> eps,
                      double rho, int inner_steps) {
  double best = objective.loss(add(eps, w));
  for (int k = 0; k < inner_steps; ++k) {
    const LossGradient lg = objective.loss_and_grad(add(eps, w));
    best = std::max(best, lg.value);
    const double g = norm2(lg.gradient);
    if (g < kZeroGradientNorm) break;
    add_scaled(eps, rho / g, lg.gradient);
    project_to_ball(eps, rho);
  }
  return std::max(best, objective.loss(add(eps, w)));
}

}  // namespace detail

/// Lower-bound estimate of max_{||e|| <= rho} L(w + e).
///
/// Restart 0 starts at eps_1; restarts 1..`restarts` start at points drawn
/// uniformly from the ball with Rng(mix_seed(seed, r)). Each takes
/// `inner_steps` steps of length rho along the normalised gradient, projected
/// back onto the ball. The maximum over every visited point is returned, so the
/// result never falls below the ascent-direction loss and never decreases when
/// restarts grows.
template <Objective F>
double loss_worst_direction_estimate(const F& objective, std::span<const double> w, double rho,
                                     int restarts, int inner_steps, std::uint64_t seed) {
  if (restarts < 1) throw ConfigError("loss_worst_direction_estimate: restarts must be >= 1");
  if (inner_steps < 1) throw ConfigError("loss_worst_direction_estimate: inner_steps must be >= 1");
  if (!(rho > 0.0)) throw ConfigError("loss_worst_direction_estimate: rho must be > 0");

  const LossGradient at_w = objective.loss_and_grad(w);
  double best = at_w.value;
  const Perturbation first = epsilon_first_order(at_w.gradient, rho);
  best = std::max(best, detail::ascend_in_ball(objective, w, first.epsilon, rho, inner_steps));

  const double dim = static_cast<double>(w.size());
  for (int r = 1; r <= restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto eps = sample_unit_direction(w.size(), rng);
    const double radius = rho * std::pow(unit(rng), 1.0 / dim);
    for (auto& v : eps) v *= radius;
    best = std::max(best, detail::ascend_in_ball(objective, w, std::move(eps), rho, inner_steps));
  }
  return best;
}

/// L(w + eps_1) - L(w). Depends only on the objective, w and rho; 0 when the
/// gradient vanishes.
template <Objective F>
double standardized_sharpness(const F& objective, std::span<const double> w, double rho) {
  const AscentLoss a = loss_ascent_direction(objective, w, rho);
  return a.zero_gradient ? 0.0 : a.loss - a.base_loss;
}

/// L_test(w) - L_train(w); positive when the model fits train better.
template <Objective F, Objective G>
double generalization_gap(const F& train, const G& test, std::span<const double> w) {
  return test.loss(w) - train.loss(w);
}

struct SliceGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  /// losses[i * betas.size() + j] = L(w + alphas[i] a + betas[j] b)
  std::vector<double> losses;
  std::size_t n = 0;

  double at(std::size_t i, std::size_t j) const { return losses[i * betas.size() + j]; }
};

/// Orthonormalises (dir_a, dir_b) by Gram-Schmidt.
inline std::pair<std::vector<double>, std::vector<double>> orthonormalize(
    std::span<const double> dir_a, std::span<const double> dir_b) {
  detail::require_same_length(dir_a.size(), dir_b.size(), "orthonormalize");
  const double na = norm2(dir_a);
  if (na < kZeroGradientNorm) throw ConfigError("loss_plane_slice: dir_a is zero");
  std::vector<double> a = scale(1.0 / na, dir_a);
  std::vector<double> b = axpy(-dot(a, dir_b), a, dir_b);
  const double nb = norm2(b);
  if (nb < 1e-9 * norm2(dir_b) || nb < kZeroGradientNorm) {
    throw ConfigError("loss_plane_slice: directions are parallel");
  }
  for (auto& v : b) v /= nb;
  return {std::move(a), std::move(b)};
}

/// Losses on a grid_n x grid_n uniform grid over [-extent, extent]^2 in the
/// plane spanned by the orthonormalised directions. Coordinates are computed
/// so that the middle of an odd grid is exactly 0.
template <Objective F>
SliceGrid loss_plane_slice(const F& objective, std::span<const double> w,
                           std::span<const double> dir_a, std::span<const double> dir_b,
                           double extent, std::size_t grid_n) {
  if (grid_n < 2) throw ConfigError("loss_plane_slice: grid_n must be >= 2");
  if (!(extent >= 0.0)) throw ConfigError("loss_plane_slice: extent must be >= 0");
  detail::require_same_length(w.size(), dir_a.size(), "loss_plane_slice");
  const auto [a, b] = orthonormalize(dir_a, dir_b);

  SliceGrid grid;
  grid.n = grid_n;
  const double denom = static_cast<double>(grid_n - 1);
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double t = (2.0 * static_cast<double>(i) - denom) / denom;
    grid.alphas.push_back(extent * t);
  }
  grid.betas = grid.alphas;
  grid.losses.reserve(grid_n * grid_n);
  std::vector<double> point(w.size());
  for (double alpha : grid.alphas) {
    for (double beta : grid.betas) {
      for (std::size_t k = 0; k < w.size(); ++k) point[k] = w[k] + alpha * a[k] + beta * b[k];
      grid.losses.push_back(objective.loss(point));
    }
  }
  return grid;
}

struct ProbeConfig {
  double rho = 0.05;
  std::size_t n_samples = 64;
  int restarts = 8;
  int inner_steps = 20;
  std::uint64_t seed = 0;
};

struct SharpnessReport {
  double base_loss = 0.0;
  double l_asc = 0.0;
  double l_avg_mean = 0.0;
  double l_avg_stderr = 0.0;
  std::size_t l_avg_samples = 0;
  double l_max_estimate = 0.0;
  int l_max_restarts = 0;
  double standardized_sharpness = 0.0;
  double generalization_gap = 0.0;
  double rho = 0.0;
  /// "full-train" or "sampled(n)".
  std::string data_scope = "full-train";
  /// Ascent direction undefined (zero gradient); l_asc fell back to base_loss.
  bool zero_gradient = false;

  friend bool operator==(const SharpnessReport&, const SharpnessReport&) = default;
};

/// Runs every probe on `train` at w and the gap against `test`.
template <Objective F, Objective G>
SharpnessReport probe_sharpness(const F& train, const G& test, std::span<const double> w,
                                const ProbeConfig& config, std::string data_scope = "full-train") {
  SharpnessReport r;
  r.rho = config.rho;
  r.data_scope = std::move(data_scope);
  const AscentLoss asc = loss_ascent_direction(train, w, config.rho);
  r.base_loss = asc.base_loss;
  r.l_asc = asc.loss;
  r.zero_gradient = asc.zero_gradient;
  r.standardized_sharpness = asc.zero_gradient ? 0.0 : asc.loss - asc.base_loss;
  const AverageLoss avg =
      loss_average_direction(train, w, config.rho, config.n_samples, mix_seed(config.seed, 0));
  r.l_avg_mean = avg.mean;
  r.l_avg_stderr = avg.std_error;
  r.l_avg_samples = avg.samples;
  r.l_max_estimate = loss_worst_direction_estimate(train, w, config.rho, config.restarts,
                                                   config.inner_steps, mix_seed(config.seed, 1));
  r.l_max_restarts = config.restarts;
  r.generalization_gap = generalization_gap(train, test, w);
  return r;
}

}  // namespace samlab
