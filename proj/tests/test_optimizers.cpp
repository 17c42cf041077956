#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "samlab/objective.hpp"
#include "samlab/optimizers.hpp"
#include "test_support.hpp"

using namespace samlab;

namespace {

OptimizerConfig plain(OptimizerKind kind, double lr = 0.1, double rho = 0.05) {
  OptimizerConfig c;
  c.kind = kind;
  c.learning_rate = lr;
  c.momentum = 0.0;
  c.weight_decay = 0.0;
  c.rho = rho;
  return c;
}

}  // namespace

TEST(FirstOrder, ThreeFourGradient) {
  const auto p = epsilon_first_order(std::vector<double>{3, 4}, 0.05);
  EXPECT_NEAR(p.epsilon[0], 0.03, 1e-17);
  EXPECT_NEAR(p.epsilon[1], 0.04, 1e-17);
  EXPECT_EQ(p.kind, PerturbationKind::FirstOrder);
  EXPECT_FALSE(p.zero_gradient);
}

TEST(FirstOrder, UnitBasisVector) {
  const auto p = epsilon_first_order(std::vector<double>{1, 0, 0}, 0.1);
  EXPECT_EQ(p.epsilon, (std::vector<double>{0.1, 0, 0}));
}

TEST(FirstOrder, ZeroGradientFallsBackToZero) {
  const auto p = epsilon_first_order(std::vector<double>{0, 0, 0}, 0.05);
  EXPECT_EQ(p.epsilon, (std::vector<double>{0, 0, 0}));
  EXPECT_TRUE(p.zero_gradient);
  EXPECT_THROW(epsilon_first_order(std::vector<double>{1}, 0.0), ConfigError);
}

TEST(FirstOrder, NormEqualsRhoProperty) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::lognormal_distribution<double> magnitude(0.0, 4.0);
  for (double rho : {1e-3, 0.05, 1.0}) {
    for (std::size_t dim = 1; dim <= 10'000; dim = dim < 32 ? dim + 1 : dim * 2) {
      std::vector<double> g(dim);
      const double s = magnitude(rng);
      for (auto& v : g) v = s * normal(rng);
      const auto p = epsilon_first_order(g, rho);
      EXPECT_NEAR(norm2(p.epsilon) / rho, 1.0, 1e-9) << "dim " << dim << " rho " << rho;
    }
  }
}

TEST(FirstOrder, InvariantToPositiveScaling) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> g(13);
    for (auto& v : g) v = normal(rng);
    const double alpha = std::exp(normal(rng) * 5.0);
    const auto a = epsilon_first_order(g, 0.05);
    const auto b = epsilon_first_order(scale(alpha, g), 0.05);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(a.epsilon[i], b.epsilon[i], 1e-9);
  }
}

TEST(GradientAscent, SingleStepEqualsFirstOrder) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = samlab::testing::random_instance(static_cast<std::uint64_t>(trial));
    const ModelObjective f(inst.spec, inst.batch);
    const auto ga = epsilon_gradient_ascent(f, inst.params, 0.05, 1);
    const auto fo = epsilon_first_order(f.loss_and_grad(inst.params).gradient, 0.05);
    ASSERT_EQ(ga.epsilon.size(), fo.epsilon.size());
    for (std::size_t i = 0; i < ga.epsilon.size(); ++i) {
      EXPECT_NEAR(ga.epsilon[i], fo.epsilon[i], 1e-12);
    }
    EXPECT_EQ(ga.steps_used, 1);
  }
}

TEST(GradientAscent, LinearLossIsCollinear) {
  const LinearObjective f({1.0, -2.0, 2.0});
  for (int n : {1, 2, 5, 9}) {
    const auto p = epsilon_gradient_ascent(f, std::vector<double>{0.3, 0.1, -4}, 0.3, n);
    EXPECT_NEAR(p.epsilon[0], 0.1, 1e-14);
    EXPECT_NEAR(p.epsilon[1], -0.2, 1e-14);
    EXPECT_NEAR(p.epsilon[2], 0.2, 1e-14);
    EXPECT_EQ(p.steps_used, n);
  }
}

TEST(GradientAscent, AnisotropicQuadraticMatchesRecursionOracle) {
  const std::vector<double> a = {1.0, 4.0};
  const DiagonalQuadratic f(a);
  for (int n : {1, 2, 3, 5}) {
    const auto p = epsilon_gradient_ascent(f, std::vector<double>{1, 1}, 0.2, n);
    const auto oracle = samlab::testing::ga_recursion_oracle(a, {1, 1}, 0.2, n);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(p.epsilon[i], oracle[i], 1e-12) << "N=" << n;
  }
}

TEST(GradientAscent, NormNeverExceedsRho) {
  const DiagonalQuadratic f({1.0, 4.0, 0.25});
  for (int n : {1, 2, 3, 5, 10}) {
    const auto p = epsilon_gradient_ascent(f, std::vector<double>{1, -1, 2}, 0.5, n);
    EXPECT_LE(norm2(p.epsilon), 0.5 + 1e-9);
  }
}

TEST(GradientAscent, LossNonDecreasingAcrossSubSteps) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> diag(0.1, 10.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(6), w(6);
    for (auto& v : a) v = diag(rng);
    for (auto& v : w) v = normal(rng);
    const DiagonalQuadratic f(a);
    const auto p = epsilon_gradient_ascent(f, w, 0.3, 7);
    std::vector<double> losses = p.iterate_losses;
    losses.push_back(f.loss(add(p.epsilon, w)));
    for (std::size_t k = 1; k < losses.size(); ++k) EXPECT_GE(losses[k], losses[k - 1] - 1e-12);
  }
}

TEST(GradientAscent, ZeroGradientStopsEarly) {
  const DiagonalQuadratic f({1.0, 1.0});
  const auto p = epsilon_gradient_ascent(f, std::vector<double>{0, 0}, 0.1, 4);
  EXPECT_TRUE(p.zero_gradient);
  EXPECT_EQ(p.steps_used, 0);
  EXPECT_EQ(p.epsilon, (std::vector<double>{0, 0}));
}

TEST(RandomPerturbation, NormAndOneDimension) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto p = epsilon_random(37, 0.05, rng);
    EXPECT_NEAR(norm2(p.epsilon) / 0.05, 1.0, 1e-9);
  }
  const auto p = epsilon_random(1, 0.07, rng);
  EXPECT_EQ(std::abs(p.epsilon[0]), 0.07);
}

TEST(RandomPerturbation, MeanConcentratesAndCoordinatesAreUniform) {
  Rng rng(123);
  const int m = 10'000;
  std::vector<double> mean(16, 0.0);
  std::vector<double> unit_mean(16, 0.0);
  for (int i = 0; i < m; ++i) {
    const auto p = epsilon_random(16, 0.05, rng);
    add_scaled(mean, 1.0 / m, p.epsilon);
    add_scaled(unit_mean, 1.0 / (0.05 * m), p.epsilon);
  }
  EXPECT_LT(norm2(mean), 0.0025);
  for (double mi : unit_mean) EXPECT_LT(std::abs(mi), 4.0 / std::sqrt(m));
}

TEST(RandomPerturbation, IndependentDrawsPerCall) {
  Rng rng(5);
  EXPECT_NE(epsilon_random(4, 1.0, rng).epsilon, epsilon_random(4, 1.0, rng).epsilon);
}

TEST(Sgd, SingleStep) {
  const LinearObjective f({1.0, 0.0});
  std::vector<double> w = {1.0, 1.0};
  const auto cfg = plain(OptimizerKind::Sgd);
  OptimizerState state(2, 0);
  sgd_step(f, w, cfg, state);
  EXPECT_DOUBLE_EQ(w[0], 0.9);
  EXPECT_DOUBLE_EQ(w[1], 1.0);
}

TEST(Sgd, MomentumSecondStepMovesOnePointNineTimes) {
  const LinearObjective f({0.5, -2.0});
  std::vector<double> w = {0.0, 0.0};
  auto cfg = plain(OptimizerKind::Sgd);
  cfg.momentum = 0.9;
  OptimizerState state(2, 0);
  sgd_step(f, w, cfg, state);
  const std::vector<double> first = w;
  sgd_step(f, w, cfg, state);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(w[i] - first[i], 1.9 * first[i], 1e-15);
}

TEST(Sgd, DecoupledWeightDecayUpdateOrder) {
  const LinearObjective f({1.0});
  std::vector<double> w = {2.0};
  auto cfg = plain(OptimizerKind::Sgd);
  cfg.momentum = 0.5;
  cfg.weight_decay = 0.1;
  OptimizerState state(1, 0);
  sgd_step(f, w, cfg, state);  // buf = 1, w = 2 - 0.1 (1 + 0.2)
  EXPECT_DOUBLE_EQ(w[0], 2.0 - 0.1 * 1.2);
  sgd_step(f, w, cfg, state);  // buf = 1.5
  EXPECT_DOUBLE_EQ(w[0], 1.88 - 0.1 * (1.5 + 0.1 * 1.88));
}

TEST(SamStep, HandComputedQuadraticStep) {
  const DiagonalQuadratic f = DiagonalQuadratic::isotropic(2);
  std::vector<double> w = {1.0, 0.0};
  OptimizerState state(2, 0);
  const auto report = sam_step(f, w, plain(OptimizerKind::SamFirstOrder), state);
  EXPECT_NEAR(w[0], 0.895, 1e-15);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_DOUBLE_EQ(report.loss, 0.5);
  EXPECT_NEAR(report.perturbed_loss, 0.55125, 1e-15);
  EXPECT_NEAR(report.epsilon_norm, 0.05, 1e-15);
}

TEST(SamStep, SameStepThroughNetworkModel) {
  const auto [spec, batch] = samlab::testing::half_norm_squared_model(2);
  std::vector<double> w = {1.0, 0.0};
  OptimizerState state(2, 0);
  sam_step(ModelObjective(spec, batch), w, plain(OptimizerKind::SamFirstOrder), state);
  EXPECT_NEAR(w[0], 0.895, 1e-15);
  EXPECT_EQ(w[1], 0.0);
}

TEST(SamStep, VanishingRandomRadiusIsPlainSgd) {
  const auto inst = samlab::testing::random_instance(31);
  const ModelObjective f(inst.spec, inst.batch);
  std::vector<double> w_sam = inst.params, w_sgd = inst.params;
  OptimizerState s1(w_sam.size(), 4), s2(w_sgd.size(), 4);
  sam_step(f, w_sam, plain(OptimizerKind::RandSam, 0.1, 1e-12), s1);
  sgd_step(f, w_sgd, plain(OptimizerKind::Sgd), s2);
  for (std::size_t i = 0; i < w_sam.size(); ++i) EXPECT_NEAR(w_sam[i], w_sgd[i], 1e-9);
}

TEST(SamStep, GradientAscentStepMatchesStraightLineTrace) {
  // Independent trace of the three SAM stages on 0.5 (x^2 + 4 y^2).
  const std::vector<double> a = {1.0, 4.0};
  const std::vector<double> w0 = {1.0, 1.0};
  const double rho = 0.2, lr = 0.1;
  const auto eps = samlab::testing::ga_recursion_oracle(a, w0, rho, 3);
  std::vector<double> expected = w0;
  for (std::size_t i = 0; i < 2; ++i) expected[i] -= lr * a[i] * (w0[i] + eps[i]);

  std::vector<double> w = w0;
  OptimizerState state(2, 0);
  auto cfg = plain(OptimizerKind::SamGradientAscent, lr, rho);
  cfg.ga_steps = 3;
  const auto report = sam_step(DiagonalQuadratic(a), w, cfg, state);
  EXPECT_EQ(report.ascent_steps, 3);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(w[i], expected[i], 1e-12);
}

TEST(SamStep, GradientEvaluationCounts) {
  const auto inst = samlab::testing::random_instance(8);
  for (auto [kind, n, expected] : {std::tuple{OptimizerKind::Sgd, 1, 1u},
                                   std::tuple{OptimizerKind::SamFirstOrder, 1, 2u},
                                   std::tuple{OptimizerKind::RandSam, 1, 2u},
                                   std::tuple{OptimizerKind::SamGradientAscent, 1, 2u},
                                   std::tuple{OptimizerKind::SamGradientAscent, 3, 4u},
                                   std::tuple{OptimizerKind::SamGradientAscent, 5, 6u}}) {
    CountingObjective f(ModelObjective(inst.spec, inst.batch));
    auto cfg = plain(kind);
    cfg.ga_steps = n;
    std::vector<double> w = inst.params;
    OptimizerState state(w.size(), 1);
    optimizer_step(f, w, cfg, state);
    EXPECT_EQ(f.grad_evals(), expected) << to_string(kind) << " N=" << n;
    EXPECT_EQ(cfg.grad_evals_per_step(), expected);
  }
}

TEST(SamStep, ZeroGradientDegeneratesToSgd) {
  const ConstantObjective f(1.0);
  std::vector<double> w = {1.0, 2.0};
  OptimizerState state(2, 0);
  const auto report = sam_step(f, w, plain(OptimizerKind::SamFirstOrder), state);
  EXPECT_TRUE(report.zero_gradient);
  EXPECT_EQ(report.epsilon_norm, 0.0);
  EXPECT_EQ(w, (std::vector<double>{1.0, 2.0}));
}

TEST(SamStep, RejectsSgdConfigAndBadState) {
  const ConstantObjective f(1.0);
  std::vector<double> w = {1.0};
  OptimizerState state(1, 0);
  EXPECT_THROW(sam_step(f, w, plain(OptimizerKind::Sgd), state), ConfigError);
  OptimizerState wrong(3, 0);
  EXPECT_THROW(sgd_step(f, w, plain(OptimizerKind::Sgd), wrong), LengthError);
}

TEST(OptimizerConfigTest, Validation) {
  auto c = plain(OptimizerKind::SamGradientAscent);
  c.ga_steps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = plain(OptimizerKind::SamFirstOrder, 0.1, 0.0);
  EXPECT_THROW(c.validate(), ConfigError);
  c = plain(OptimizerKind::Sgd);
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_optimizer_kind("rand-sam"), OptimizerKind::RandSam);
  EXPECT_THROW(parse_optimizer_kind("adam"), ConfigError);
}
