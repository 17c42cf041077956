#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <vector>

#include "samlab/data.hpp"
#include "samlab/idx.hpp"
#include "samlab/model.hpp"
#include "samlab/optimizers.hpp"

using namespace samlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto p = fs::temp_directory_path() / ("samlab_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(p);
  return p;
}

/// Plain minibatch SGD used as the reference training loop.
double train_and_score(const Dataset& train, const Dataset& test, const ModelSpec& spec,
                       int epochs, std::uint64_t seed) {
  ParameterVector params = init_params(spec, seed);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Sgd;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  OptimizerState state(params.size(), seed);
  for (int e = 0; e < epochs; ++e) {
    for (const auto& idx : minibatches(train, 32, seed, static_cast<std::uint64_t>(e))) {
      const Batch b = make_batch(train, idx);
      sgd_step(ModelObjective(spec, b), params.values(), cfg, state);
    }
  }
  return accuracy(spec, params.values(), to_batch(test));
}

}  // namespace

TEST(TwoMoons, ZeroNoiseGeometry) {
  const Dataset d = gen_two_moons(4, 0.0, 1);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 0, 1, 1}));
  // Outer moon: (cos t, sin t) at t = 0, pi. Inner: (1 - cos t, 0.5 - sin t).
  EXPECT_DOUBLE_EQ(d.features(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.features(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(d.features(1, 0), -1.0);
  EXPECT_NEAR(d.features(1, 1), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(d.features(2, 0), 0.0);
  EXPECT_DOUBLE_EQ(d.features(2, 1), 0.5);
  EXPECT_DOUBLE_EQ(d.features(3, 0), 2.0);
  EXPECT_NEAR(d.features(3, 1), 0.5, 1e-15);
}

TEST(TwoMoons, PointsLieOnHalfCircles) {
  const Dataset d = gen_two_moons(101, 0.0, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = d.features(i, 0), y = d.features(i, 1);
    if (d.labels[i] == 0) {
      EXPECT_NEAR(x * x + y * y, 1.0, 1e-12);
      EXPECT_GE(y, -1e-12);
    } else {
      EXPECT_NEAR((x - 1) * (x - 1) + (y - 0.5) * (y - 0.5), 1.0, 1e-12);
      EXPECT_LE(y, 0.5 + 1e-12);
    }
  }
}

TEST(TwoMoons, BalancedAndDeterministic) {
  for (std::size_t n : {2u, 3u, 10u, 777u}) {
    const Dataset d = gen_two_moons(n, 0.1, 42);
    const auto ones = static_cast<std::size_t>(std::count(d.labels.begin(), d.labels.end(), 1));
    EXPECT_LE(std::abs(static_cast<long>(ones) - static_cast<long>(n - ones)), 1);
  }
  EXPECT_EQ(gen_two_moons(200, 0.2, 5), gen_two_moons(200, 0.2, 5));
  EXPECT_NE(gen_two_moons(200, 0.2, 5), gen_two_moons(200, 0.2, 6));
}

TEST(TwoMoons, PreconditionsChecked) {
  EXPECT_THROW(gen_two_moons(1, 0.1, 0), ConfigError);
  EXPECT_THROW(gen_two_moons(10, -0.1, 0), ConfigError);
}

TEST(TwoMoons, SgdReferenceRunClearsAccuracyFloor) {
  const Dataset all = gen_two_moons(2000, 0.2, 3);
  const auto [train, test] = split(all, {0.8, 3});
  const ModelSpec spec = make_mlp(2, {16}, 2);
  EXPECT_GT(train_and_score(train, test, spec, 50, 1), 0.85);
}

TEST(Blobs, ZeroSpreadSitsOnCenters) {
  const std::vector<std::vector<double>> centers = {{0, 0}, {5, 1}, {-3, 2}};
  const Dataset d = gen_gaussian_blobs(9, centers, 0.0, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& c = centers[static_cast<std::size_t>(d.labels[i])];
    EXPECT_EQ(d.features(i, 0), c[0]);
    EXPECT_EQ(d.features(i, 1), c[1]);
  }
  EXPECT_EQ(d.n_classes, 3);
}

TEST(Blobs, SeparableCentersGiveLinearModelFullTrainAccuracy) {
  const Dataset d = gen_gaussian_blobs(200, {{-5, 0}, {5, 0}}, 0.5, 8);
  const ModelSpec spec = make_mlp(2, {}, 2);
  ParameterVector p = init_params(spec, 2);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.0;
  OptimizerState state(p.size(), 0);
  const Batch all = to_batch(d);
  for (int i = 0; i < 200; ++i) sgd_step(ModelObjective(spec, all), p.values(), cfg, state);
  EXPECT_EQ(accuracy(spec, p.values(), all), 1.0);
}

TEST(Blobs, DeterministicAndValidated) {
  const std::vector<std::vector<double>> c = {{0.0}, {1.0}};
  EXPECT_EQ(gen_gaussian_blobs(50, c, 0.3, 4), gen_gaussian_blobs(50, c, 0.3, 4));
  EXPECT_THROW(gen_gaussian_blobs(10, {{0.0}}, 0.1, 0), ConfigError);
}

TEST(LabelNoise, ZeroFractionIsIdentity) {
  const Dataset d = gen_two_moons(100, 0.1, 1);
  EXPECT_EQ(inject_label_noise(d, 0.0, 9), d);
}

TEST(LabelNoise, FullFractionFlipsEveryBinaryLabel) {
  const Dataset d = gen_two_moons(100, 0.1, 1);
  const Dataset noisy = inject_label_noise(d, 1.0, 9);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(noisy.labels[i], 1 - d.labels[i]);
}

TEST(LabelNoise, ExactCountAndFeaturesUntouched) {
  const Dataset d = gen_gaussian_blobs(100, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 0.2, 1);
  for (double fraction : {0.1, 0.25, 0.333, 0.9}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dataset noisy = inject_label_noise(d, fraction, seed);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < d.size(); ++i) changed += noisy.labels[i] != d.labels[i];
      EXPECT_EQ(changed, static_cast<std::size_t>(std::llround(fraction * 100)));
      EXPECT_EQ(noisy.features, d.features);
      EXPECT_NO_THROW(noisy.validate());
    }
  }
  EXPECT_EQ(inject_label_noise(d, 0.3, 2), inject_label_noise(d, 0.3, 2));
  EXPECT_THROW(inject_label_noise(d, 1.5, 2), ConfigError);
}

TEST(Split, EightTwo) {
  const auto [train, test] = split(gen_two_moons(10, 0.1, 1), {0.8, 4});
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
}

TEST(Split, DisjointAndExhaustiveProperty) {
  std::mt19937_64 rng(12);
  for (std::size_t n = 2; n <= 1000; n += (n < 40 ? 1 : 37)) {
    Dataset d = gen_gaussian_blobs(n, {{0.0}, {1.0}}, 0.0, 0);
    for (std::size_t i = 0; i < n; ++i) d.features(i, 0) = static_cast<double>(i);  // row ids
    const double fraction = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const auto [train, test] = split(d, {fraction, rng()});
    std::set<double> seen;
    for (const auto* part : {&train, &test}) {
      for (std::size_t i = 0; i < part->size(); ++i) {
        EXPECT_TRUE(seen.insert(part->features(i, 0)).second) << "duplicate row, n=" << n;
      }
    }
    EXPECT_EQ(seen.size(), n);
    EXPECT_GE(train.size(), 1u);
    EXPECT_GE(test.size(), 1u);
  }
}

TEST(Minibatches, OversizedBatchHoldsEverything) {
  const auto batches = minibatches(7, 10, 1, 0);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].size(), 7u);
}

TEST(Minibatches, ShortFinalBatchKept) {
  const auto batches = minibatches(10, 4, 1, 0);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[2].size(), 2u);
  std::set<std::size_t> all;
  for (const auto& b : batches) all.insert(b.begin(), b.end());
  EXPECT_EQ(all.size(), 10u);
}

TEST(Minibatches, OrderIsPureFunctionOfSeedAndEpoch) {
  EXPECT_EQ(minibatches(100, 8, 3, 5), minibatches(100, 8, 3, 5));
  EXPECT_NE(minibatches(100, 8, 3, 5), minibatches(100, 8, 3, 6));
  EXPECT_NE(minibatches(100, 8, 3, 5), minibatches(100, 8, 4, 5));
  EXPECT_THROW(minibatches(10, 0, 1, 0), ConfigError);
}

TEST(ModelSpecTest, ParameterCountWithoutInstantiation) {
  const ModelSpec spec = make_mlp(2, {32}, 2);
  EXPECT_EQ(spec.parameter_count(), 2u * 32 + 32 + 32 * 2 + 2);
  ModelSpec bad = spec;
  bad.layers[1].inputs = 31;
  EXPECT_THROW(bad.validate(), ShapeError);
}

TEST(ModelSpecTest, InitIsSeeded) {
  const ModelSpec spec = make_mlp(2, {8}, 3);
  EXPECT_EQ(init_params(spec, 1), init_params(spec, 1));
  EXPECT_NE(init_params(spec, 1), init_params(spec, 2));
}

TEST(Idx, ImagesAndLabels) {
  const auto dir = temp_dir();
  std::vector<std::uint8_t> pixels(2 * 4 * 4);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>(i * 8);
  write_idx_images(dir / "img.idx", 4, 4, pixels);
  write_idx_labels(dir / "lbl.idx", {3, 7});

  // Header bytes are big-endian.
  std::ifstream raw(dir / "img.idx", std::ios::binary);
  unsigned char header[16];
  raw.read(reinterpret_cast<char*>(header), 16);
  EXPECT_EQ(header[0], 0x00);
  EXPECT_EQ(header[2], 0x08);
  EXPECT_EQ(header[3], 0x03);
  EXPECT_EQ(header[7], 2);

  const Dataset d = load_idx(dir / "img.idx", dir / "lbl.idx");
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.n_features(), 16u);
  EXPECT_EQ(d.labels, (std::vector<int>{3, 7}));
  EXPECT_EQ(d.n_classes, 8);
  EXPECT_DOUBLE_EQ(d.features(1, 15), 31 * 8 / 255.0);
  for (double v : d.features.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Idx, BadMagicNamesExpectedConstant) {
  const auto dir = temp_dir();
  write_idx_labels(dir / "lbl.idx", {1});
  write_idx_images(dir / "img.idx", 2, 2, std::vector<std::uint8_t>(4));
  try {
    load_idx(dir / "lbl.idx", dir / "lbl.idx");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("0x00000803"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_idx(dir / "img.idx", dir / "img.idx"), FormatError);
}

TEST(Idx, CountMismatchAndTruncation) {
  const auto dir = temp_dir();
  write_idx_images(dir / "img.idx", 2, 2, std::vector<std::uint8_t>(8));
  write_idx_labels(dir / "lbl.idx", {1, 2, 3});
  EXPECT_THROW(load_idx(dir / "img.idx", dir / "lbl.idx"), LengthError);

  write_idx_labels(dir / "lbl2.idx", {1, 2});
  fs::resize_file(dir / "img.idx", fs::file_size(dir / "img.idx") - 1);
  EXPECT_THROW(load_idx(dir / "img.idx", dir / "lbl2.idx"), LengthError);
  fs::resize_file(dir / "img.idx", 6);
  EXPECT_THROW(load_idx(dir / "img.idx", dir / "lbl2.idx"), LengthError);
}
