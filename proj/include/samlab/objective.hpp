#pragma once

#include <concepts>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/vector_ops.hpp"

namespace samlab {

/// L(w) and its gradient at one point.
struct LossGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// A scalar loss over a flat parameter vector. Everything in the optimizer and
/// probe layers is written against this; ModelObjective binds a network to a
/// batch, the closed-form objectives below serve as oracles.
template <class F>
concept Objective = requires(const F& f, std::span<const double> w) {
  { f.loss(w) } -> std::convertible_to<double>;
  { f.loss_and_grad(w) } -> std::same_as<LossGradient>;
};

/// Counts loss and gradient evaluations of a wrapped objective. Copies share
/// the counters.
template <Objective F>
class CountingObjective {
 public:
  struct Counters {
    std::size_t loss_evals = 0;
    std::size_t grad_evals = 0;
  };

  explicit CountingObjective(F inner)
      : inner_(std::move(inner)), counters_(std::make_shared<Counters>()) {}
  CountingObjective(F inner, std::shared_ptr<Counters> counters)
      : inner_(std::move(inner)), counters_(std::move(counters)) {}

  double loss(std::span<const double> w) const {
    ++counters_->loss_evals;
    return inner_.loss(w);
  }
  LossGradient loss_and_grad(std::span<const double> w) const {
    ++counters_->grad_evals;
    return inner_.loss_and_grad(w);
  }

  std::size_t grad_evals() const { return counters_->grad_evals; }
  std::size_t loss_evals() const { return counters_->loss_evals; }
  const std::shared_ptr<Counters>& counters() const { return counters_; }

 private:
  F inner_;
  std::shared_ptr<Counters> counters_;
};

/// L(w) = 0.5 * sum_i a_i * w_i^2
class DiagonalQuadratic {
 public:
  explicit DiagonalQuadratic(std::vector<double> diagonal) : diag_(std::move(diagonal)) {}

  static DiagonalQuadratic isotropic(std::size_t dim) {
    return DiagonalQuadratic(std::vector<double>(dim, 1.0));
  }

  double loss(std::span<const double> w) const {
    detail::require_same_length(w.size(), diag_.size(), "DiagonalQuadratic");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += 0.5 * diag_[i] * w[i] * w[i];
    return acc;
  }

  LossGradient loss_and_grad(std::span<const double> w) const {
    LossGradient out{loss(w), std::vector<double>(w.size())};
    for (std::size_t i = 0; i < w.size(); ++i) out.gradient[i] = diag_[i] * w[i];
    return out;
  }

  const std::vector<double>& diagonal() const noexcept { return diag_; }

 private:
  std::vector<double> diag_;
};

/// L(w) = c . w
class LinearObjective {
 public:
  explicit LinearObjective(std::vector<double> c) : c_(std::move(c)) {}
  double loss(std::span<const double> w) const { return dot(c_, w); }
  LossGradient loss_and_grad(std::span<const double> w) const { return {loss(w), c_}; }

 private:
  std::vector<double> c_;
};

/// L(w) = c for every w.
class ConstantObjective {
 public:
  explicit ConstantObjective(double c) : c_(c) {}
  double loss(std::span<const double>) const { return c_; }
  LossGradient loss_and_grad(std::span<const double> w) const {
    return {c_, std::vector<double>(w.size(), 0.0)};
  }

 private:
  double c_;
};

}  // namespace samlab
