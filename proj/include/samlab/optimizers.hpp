#pragma once

// SGD baseline and the SAM family. All SAM variants share one outer step:
//
//   1. pick a perturbation eps on the current minibatch (first-order, N-step
//      gradient ascent, or a random direction),
//   2. evaluate g' = grad L(w + eps) on the same minibatch,
//   3. apply the SGD update to w (never to w + eps) with g'.
//
// Weight decay only enters step 3; eps is always computed from the raw loss.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/objective.hpp"
#include "samlab/random.hpp"
#include "samlab/vector_ops.hpp"

namespace samlab {

/// Gradient norms below this are treated as zero when normalising.
inline constexpr double kZeroGradientNorm = 1e-12;

enum class PerturbationKind { FirstOrder, GradientAscent, Random };

inline std::string to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::FirstOrder: return "first_order";
    case PerturbationKind::GradientAscent: return "gradient_ascent";
    case PerturbationKind::Random: return "random";
  }
  return "?";
}

struct Perturbation {
  std::vector<double> epsilon;
  double rho = 0.0;
  PerturbationKind kind = PerturbationKind::FirstOrder;
  /// Configured N for gradient ascent; 1 otherwise.
  int ga_steps = 1;
  /// Ascent sub-steps actually taken.
  int steps_used = 0;
  /// Set when a zero gradient forced epsilon = 0 (first-order) or ended the
  /// ascent early (gradient ascent).
  bool zero_gradient = false;
  /// Loss at each ascent iterate w^0 .. w^(steps_used - 1), as returned by the
  /// gradient evaluations the ascent performed anyway.
  std::vector<double> iterate_losses;
};

/// eps_1 = rho * g / ||g||. Falls back to eps = 0 (flagged) when ||g|| < 1e-12.
inline Perturbation epsilon_first_order(std::span<const double> gradient, double rho) {
  if (gradient.empty()) throw ConfigError("epsilon_first_order: empty gradient");
  if (!(rho > 0.0)) throw ConfigError("epsilon_first_order: rho must be > 0");
  Perturbation p;
  p.rho = rho;
  p.kind = PerturbationKind::FirstOrder;
  const double n = norm2(gradient);
  if (n < kZeroGradientNorm) {
    p.epsilon.assign(gradient.size(), 0.0);
    p.zero_gradient = true;
    return p;
  }
  p.epsilon = scale(rho / n, gradient);
  p.steps_used = 1;
  return p;
}

/// N normalised ascent sub-steps of length rho / N, each using the gradient at
/// the current iterate: w^n = w^(n-1) + (rho/N) g/||g||. Returns w^N - w with no
/// projection onto the rho-ball. `first` may carry an already computed
/// evaluation at w, which is then not repeated.
template <Objective F>
Perturbation epsilon_gradient_ascent(const F& objective, std::span<const double> w, double rho,
                                     int steps, const LossGradient* first = nullptr) {
  if (steps < 1) throw ConfigError("epsilon_gradient_ascent: N must be >= 1");
  if (!(rho > 0.0)) throw ConfigError("epsilon_gradient_ascent: rho must be > 0");
  Perturbation p;
  p.rho = rho;
  p.kind = PerturbationKind::GradientAscent;
  p.ga_steps = steps;
  p.epsilon.assign(w.size(), 0.0);
  const double step_length = rho / static_cast<double>(steps);
  std::vector<double> point(w.begin(), w.end());
  for (int n = 0; n < steps; ++n) {
    const LossGradient lg =
        (n == 0 && first != nullptr) ? *first : objective.loss_and_grad(point);
    p.iterate_losses.push_back(lg.value);
    const double g_norm = norm2(lg.gradient);
    if (g_norm < kZeroGradientNorm) {
      p.zero_gradient = true;
      break;
    }
    add_scaled(p.epsilon, step_length / g_norm, lg.gradient);
    for (std::size_t i = 0; i < w.size(); ++i) point[i] = w[i] + p.epsilon[i];
    ++p.steps_used;
  }
  return p;
}

/// eps = rho * u with u uniform on the unit sphere.
inline Perturbation epsilon_random(std::size_t param_len, double rho, Rng& rng) {
  if (!(rho > 0.0)) throw ConfigError("epsilon_random: rho must be > 0");
  Perturbation p;
  p.rho = rho;
  p.kind = PerturbationKind::Random;
  p.epsilon = scale(rho, sample_unit_direction(param_len, rng));
  p.steps_used = 1;
  return p;
}

enum class OptimizerKind { Sgd, SamFirstOrder, SamGradientAscent, RandSam };

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::SamFirstOrder: return "sam";
    case OptimizerKind::SamGradientAscent: return "sam-ga";
    case OptimizerKind::RandSam: return "rand-sam";
  }
  return "?";
}

inline OptimizerKind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "sam") return OptimizerKind::SamFirstOrder;
  if (s == "sam-ga") return OptimizerKind::SamGradientAscent;
  if (s == "rand-sam") return OptimizerKind::RandSam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd, sam, sam-ga, rand-sam)");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double rho = 0.05;
  int ga_steps = 1;

  bool is_sam() const noexcept { return kind != OptimizerKind::Sgd; }

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (ga_steps < 1) throw ConfigError("ga_steps must be >= 1");
    if (is_sam() && !(rho > 0.0)) throw ConfigError("rho must be > 0 for SAM variants");
  }

  /// Gradient evaluations one optimizer step costs.
  std::size_t grad_evals_per_step() const noexcept {
    switch (kind) {
      case OptimizerKind::Sgd: return 1;
      case OptimizerKind::SamGradientAscent: return static_cast<std::size_t>(ga_steps) + 1;
      default: return 2;
    }
  }
};

struct OptimizerState {
  std::vector<double> momentum_buffer;
  std::uint64_t step = 0;
  /// Direction sampler for Rand-SAM.
  Rng rng;

  OptimizerState() = default;
  OptimizerState(std::size_t param_len, std::uint64_t seed)
      : momentum_buffer(param_len, 0.0), rng(seed) {}
};

struct StepReport {
  double loss = 0.0;            // L(w)
  double perturbed_loss = 0.0;  // L(w + eps); equals loss for SGD
  double epsilon_norm = 0.0;
  bool zero_gradient = false;
  int ascent_steps = 0;
};

/// buffer <- momentum * buffer + g;  w <- w - lr * (buffer + wd * w)
inline void apply_sgd_update(std::span<double> w, std::span<const double> gradient,
                             const OptimizerConfig& config, OptimizerState& state) {
  detail::require_same_length(w.size(), gradient.size(), "sgd update");
  if (state.momentum_buffer.size() != w.size()) {
    throw LengthError("optimizer state buffer has " +
                      std::to_string(state.momentum_buffer.size()) + " entries for " +
                      std::to_string(w.size()) + " parameters");
  }
  auto& buf = state.momentum_buffer;
  for (std::size_t i = 0; i < w.size(); ++i) {
    buf[i] = config.momentum * buf[i] + gradient[i];
    w[i] -= config.learning_rate * (buf[i] + config.weight_decay * w[i]);
  }
  ++state.step;
}

template <Objective F>
StepReport sgd_step(const F& objective, std::span<double> w, const OptimizerConfig& config,
                    OptimizerState& state) {
  const LossGradient lg = objective.loss_and_grad(w);
  apply_sgd_update(w, lg.gradient, config, state);
  return StepReport{lg.value, lg.value, 0.0, false, 0};
}

/// Perturbation for the configured SAM variant, evaluated on `objective`.
template <Objective F>
Perturbation sam_perturbation(const F& objective, std::span<const double> w,
                              const LossGradient& at_w, const OptimizerConfig& config,
                              OptimizerState& state) {
  switch (config.kind) {
    case OptimizerKind::SamFirstOrder:
      return epsilon_first_order(at_w.gradient, config.rho);
    case OptimizerKind::SamGradientAscent:
      return epsilon_gradient_ascent(objective, w, config.rho, config.ga_steps, &at_w);
    case OptimizerKind::RandSam:
      return epsilon_random(w.size(), config.rho, state.rng);
    case OptimizerKind::Sgd:
      break;
  }
  throw ConfigError("sam_perturbation: optimizer is not a SAM variant");
}

/// One SAM step. Costs 2 gradient evaluations for first-order and Rand-SAM,
/// N + 1 for gradient ascent (fewer if the ascent stops on a zero gradient).
template <Objective F>
StepReport sam_step(const F& objective, std::span<double> w, const OptimizerConfig& config,
                    OptimizerState& state) {
  if (!config.is_sam()) throw ConfigError("sam_step: optimizer is not a SAM variant");
  const LossGradient at_w = objective.loss_and_grad(w);
  const Perturbation eps = sam_perturbation(objective, w, at_w, config, state);
  const std::vector<double> perturbed = add(eps.epsilon, w);
  const LossGradient at_perturbed = objective.loss_and_grad(perturbed);
  apply_sgd_update(w, at_perturbed.gradient, config, state);
  return StepReport{at_w.value, at_perturbed.value, norm2(eps.epsilon), eps.zero_gradient,
                    eps.steps_used};
}

/// Dispatches on config.kind.
template <Objective F>
StepReport optimizer_step(const F& objective, std::span<double> w, const OptimizerConfig& config,
                          OptimizerState& state) {
  return config.is_sam() ? sam_step(objective, w, config, state)
                         : sgd_step(objective, w, config, state);
}

}  // namespace samlab
