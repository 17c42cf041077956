#pragma once

// Multi-seed training runs and checkpoint probing.
//
// Everything a run does is derived from (config, seed): parameter init,
// minibatch order, Rand-SAM directions and probe sampling each use
// derive_seed(seed, role) with their own role constant. Data generation, the
// train/test split and label noise use data_seed, so all seeds of a suite see
// the same data.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "samlab/data.hpp"
#include "samlab/harness/checkpoint.hpp"
#include "samlab/harness/config.hpp"
#include "samlab/idx.hpp"
#include "samlab/model.hpp"
#include "samlab/objective.hpp"
#include "samlab/optimizers.hpp"
#include "samlab/probes.hpp"

namespace samlab::harness {

struct PreparedData {
  Dataset train;  // after label noise
  Dataset test;
};

inline PreparedData prepare_data(const ExperimentConfig& c) {
  Dataset all;
  if (c.dataset == "two_moons") {
    all = gen_two_moons(c.n_examples, c.noise_sd, c.data_seed);
  } else if (c.dataset == "blobs") {
    all = gen_gaussian_blobs(c.n_examples, c.blob_centers, c.blob_sd, c.data_seed);
  } else if (c.dataset == "idx") {
    all = load_idx(c.idx_images, c.idx_labels);
  } else {
    throw ConfigError("unknown dataset '" + c.dataset + "'");
  }
  all.validate();
  auto [train, test] = split(all, SplitSpec{c.train_fraction, mix_seed(c.data_seed, 1)});
  train = inject_label_noise(train, c.label_noise_fraction, mix_seed(c.data_seed, 2));
  return {std::move(train), std::move(test)};
}

inline ModelSpec build_model(const ExperimentConfig& c, const Dataset& data) {
  return make_mlp(data.n_features(), c.hidden_widths, static_cast<std::size_t>(data.n_classes),
                  c.activation, c.head);
}

/// Label used in result files: sgd, sam, sam-ga, rand-sam.
inline std::string optimizer_label(const OptimizerConfig& o) { return to_string(o.kind); }

/// N of the gradient-ascent variant; 1 for first-order SAM, 0 for SGD and Rand-SAM.
inline int ga_steps_column(const OptimizerConfig& o) {
  switch (o.kind) {
    case OptimizerKind::SamGradientAscent: return o.ga_steps;
    case OptimizerKind::SamFirstOrder: return 1;
    default: return 0;
  }
}

struct EpochMetrics {
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;  // fraction in [0, 1]
};

struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string optimizer;
  double rho = 0.0;
  int ga_steps = 0;
  int epochs = 0;
  std::vector<EpochMetrics> series;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double test_accuracy = 0.0;  // fraction in [0, 1]
  SharpnessReport sharpness;
  std::size_t grad_evals = 0;
  std::size_t batches = 0;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;
  ParameterVector params;
};

/// Examples the probes evaluate on: the full training set, or a seeded sample.
inline Dataset probe_data(const ExperimentConfig& c, const Dataset& train, std::uint64_t seed) {
  if (c.probe_sample_size == 0 || c.probe_sample_size >= train.size()) return train;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, seed_role::kProbe));
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(c.probe_sample_size);
  return subset(train, order);
}

inline ProbeConfig probe_config(const ExperimentConfig& c, std::uint64_t seed) {
  return ProbeConfig{c.probe_rho, c.probe_n_samples, c.probe_restarts, c.probe_inner_steps,
                     derive_seed(seed, seed_role::kProbe)};
}

/// Probes parameters `w` of `spec` against the configured data.
inline SharpnessReport probe_parameters(const ExperimentConfig& c, const PreparedData& data,
                                        const ModelSpec& spec, std::span<const double> w,
                                        std::uint64_t seed) {
  const Dataset scope = probe_data(c, data.train, seed);
  const Batch train_batch = to_batch(scope);
  const Batch full_train = to_batch(data.train);
  const Batch test_batch = to_batch(data.test);
  const std::string scope_name = c.probe_sample_size == 0 || c.probe_sample_size >= data.train.size()
                                     ? "full-train"
                                     : "sampled(" + std::to_string(c.probe_sample_size) + ")";
  SharpnessReport r = probe_sharpness(ModelObjective(spec, train_batch),
                                      ModelObjective(spec, test_batch), w, probe_config(c, seed),
                                      scope_name);
  // The gap is always measured on the full training set.
  r.generalization_gap = generalization_gap(ModelObjective(spec, full_train),
                                            ModelObjective(spec, test_batch), w);
  return r;
}

inline RunRecord run_training(const ExperimentConfig& c, std::uint64_t seed,
                              const PreparedData& data) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config_hash = config_hash(c);
  rec.seed = seed;
  rec.optimizer = optimizer_label(c.optimizer);
  rec.rho = c.optimizer.is_sam() ? c.optimizer.rho : 0.0;
  rec.ga_steps = ga_steps_column(c.optimizer);
  rec.epochs = c.epochs;

  const ModelSpec spec = build_model(c, data.train);
  rec.params = init_params(spec, derive_seed(seed, seed_role::kInit));
  OptimizerState state(rec.params.size(), derive_seed(seed, seed_role::kEpsilon));
  auto counters = std::make_shared<CountingObjective<ModelObjective>::Counters>();
  const Batch train_all = to_batch(data.train);
  const Batch test_all = to_batch(data.test);
  const std::uint64_t shuffle_seed = derive_seed(seed, seed_role::kShuffle);

  try {
    for (int epoch = 0; epoch < c.epochs; ++epoch) {
      for (const auto& idx : minibatches(data.train, c.batch_size, shuffle_seed,
                                         static_cast<std::uint64_t>(epoch))) {
        const Batch batch = make_batch(data.train, idx);
        const CountingObjective<ModelObjective> objective(ModelObjective(spec, batch), counters);
        optimizer_step(objective, rec.params.values(), c.optimizer, state);
        ++rec.batches;
      }
      rec.series.push_back({forward(spec, rec.params.values(), train_all),
                            forward(spec, rec.params.values(), test_all),
                            accuracy(spec, rec.params.values(), test_all)});
    }
    rec.final_train_loss = forward(spec, rec.params.values(), train_all);
    rec.final_test_loss = forward(spec, rec.params.values(), test_all);
    rec.test_accuracy = accuracy(spec, rec.params.values(), test_all);
    rec.sharpness = probe_parameters(c, data, spec, rec.params.values(), seed);
  } catch (const NumericError& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  rec.grad_evals = counters->grad_evals;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

inline RunRecord run_training(const ExperimentConfig& c, std::uint64_t seed) {
  return run_training(c, seed, prepare_data(c));
}

/// Runs every seed, `jobs` at a time. Results are ordered as c.seeds.
inline std::vector<RunRecord> run_seeds(const ExperimentConfig& c, const PreparedData& data,
                                        unsigned jobs) {
  std::vector<RunRecord> records(c.seeds.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(c.seeds.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < c.seeds.size(); ++i) records[i] = run_training(c, c.seeds[i], data);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < c.seeds.size(); i = next++) {
        records[i] = run_training(c, c.seeds[i], data);
      }
    });
  }
  workers.clear();
  return records;
}

/// Re-evaluates a saved checkpoint. The probe seed is derived from `seed` the
/// same way a training run derives it, so probing the checkpoint of run `seed`
/// reproduces that run's report.
inline SharpnessReport probe_checkpoint(const std::filesystem::path& checkpoint,
                                        const ExperimentConfig& c, std::uint64_t seed) {
  const ParameterVector params = read_checkpoint(checkpoint);
  const PreparedData data = prepare_data(c);
  const ModelSpec spec = build_model(c, data.train);
  if (params.size() != spec.parameter_count() || params.layout() != spec.layout()) {
    throw LengthError("checkpoint layout mismatch: model expects " +
                      std::to_string(spec.parameter_count()) + " parameters in " +
                      std::to_string(spec.layout().size()) + " blocks, checkpoint has " +
                      std::to_string(params.size()) + " parameters in " +
                      std::to_string(params.layout().size()) + " blocks");
  }
  return probe_parameters(c, data, spec, params.values(), seed);
}

/// Loss-plane slice around a checkpoint along two seeded random directions.
inline SliceGrid slice_checkpoint(const std::filesystem::path& checkpoint,
                                  const ExperimentConfig& c, std::uint64_t seed, double extent,
                                  std::size_t grid_n) {
  const ParameterVector params = read_checkpoint(checkpoint);
  const PreparedData data = prepare_data(c);
  const ModelSpec spec = build_model(c, data.train);
  if (params.layout() != spec.layout()) {
    throw LengthError("checkpoint layout mismatch: model expects " +
                      std::to_string(spec.parameter_count()) + " parameters, checkpoint has " +
                      std::to_string(params.size()));
  }
  Rng rng(derive_seed(seed, seed_role::kSlice));
  const auto a = sample_unit_direction(params.size(), rng);
  const auto b = sample_unit_direction(params.size(), rng);
  const Batch train = to_batch(data.train);
  return loss_plane_slice(ModelObjective(spec, train), params.values(), a, b, extent, grid_n);
}

}  // namespace samlab::harness
