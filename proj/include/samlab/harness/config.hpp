#pragma once

// Experiment configuration and its text format.
//
// The file is a list of `key = value` lines; `#` starts a comment. Keys are
// exactly the ExperimentConfig member names below and an unknown key is an
// error. Lists are comma separated; blob centers are `x y; x y; ...`.
//
//   dataset              two_moons | blobs | idx
//   n_examples           generated dataset size (two_moons, blobs)
//   noise_sd             two-moons noise
//   blob_centers         e.g. "-2 0; 2 0"
//   blob_sd              blob spread
//   idx_images           IDX image file (dataset = idx)
//   idx_labels           IDX label file (dataset = idx)
//   data_seed            dataset generation, split and label-noise seed
//   train_fraction       share of examples used for training
//   label_noise_fraction share of training labels replaced by a wrong class
//   hidden_widths        e.g. "32" or "64,64"
//   activation           relu | tanh | identity
//   head                 softmax_xent | half_mse
//   optimizer            sgd | sam | sam-ga | rand-sam
//   learning_rate, momentum, weight_decay, rho, ga_steps
//   epochs, batch_size
//   seeds                e.g. "1,2,3"
//   probe_rho, probe_n_samples, probe_restarts, probe_inner_steps
//   probe_data_scope     full | sampled:<n>
//   output_dir
//   save_checkpoints     true | false
//   record_wall_time     true | false (off keeps outputs byte-stable)

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "samlab/error.hpp"
#include "samlab/format.hpp"
#include "samlab/model.hpp"
#include "samlab/optimizers.hpp"

namespace samlab::harness {

struct ExperimentConfig {
  std::string dataset = "two_moons";
  std::size_t n_examples = 2000;
  double noise_sd = 0.2;
  std::vector<std::vector<double>> blob_centers = {{-2.0, 0.0}, {2.0, 0.0}};
  double blob_sd = 1.0;
  std::string idx_images;
  std::string idx_labels;
  std::uint64_t data_seed = 0;
  double train_fraction = 0.8;
  double label_noise_fraction = 0.0;

  std::vector<std::size_t> hidden_widths = {32};
  Activation activation = Activation::Relu;
  Head head = Head::SoftmaxCrossEntropy;

  OptimizerConfig optimizer;
  int epochs = 100;
  std::size_t batch_size = 32;
  std::vector<std::uint64_t> seeds = {1};

  double probe_rho = 0.05;
  std::size_t probe_n_samples = 64;
  int probe_restarts = 8;
  int probe_inner_steps = 20;
  /// 0 = full training set, otherwise a seeded sample of this many examples.
  std::size_t probe_sample_size = 0;

  std::string output_dir = "out";
  bool save_checkpoints = true;
  bool record_wall_time = false;

  void validate() const;
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline double parse_number(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const FormatError&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline std::string format_centers(const std::vector<std::vector<double>>& centers) {
  std::vector<std::string> rows;
  for (const auto& c : centers) {
    std::vector<std::string> xs;
    for (double x : c) xs.push_back(format_double(x));
    rows.push_back(join(xs, " "));
  }
  return join(rows, "; ");
}

}  // namespace detail

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split_string(text, ',')) {
    const std::string t = trim(part);
    if (t.empty()) continue;
    seeds.push_back(detail::parse_uint("seeds", t));
  }
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  return seeds;
}

inline Activation parse_activation(const std::string& v) {
  if (v == "relu") return Activation::Relu;
  if (v == "tanh") return Activation::Tanh;
  if (v == "identity") return Activation::Identity;
  throw ConfigError("activation: expected relu, tanh or identity, got '" + v + "'");
}

inline Head parse_head(const std::string& v) {
  if (v == "softmax_xent") return Head::SoftmaxCrossEntropy;
  if (v == "half_mse") return Head::HalfSquaredError;
  throw ConfigError("head: expected softmax_xent or half_mse, got '" + v + "'");
}

/// Applies one key/value pair; throws ConfigError for unknown keys.
inline void set_config_value(ExperimentConfig& c, const std::string& key,
                             const std::string& value) {
  using namespace detail;
  if (key == "dataset") {
    if (value != "two_moons" && value != "blobs" && value != "idx") {
      throw ConfigError("dataset: expected two_moons, blobs or idx, got '" + value + "'");
    }
    c.dataset = value;
  } else if (key == "n_examples") {
    c.n_examples = parse_uint(key, value);
  } else if (key == "noise_sd") {
    c.noise_sd = parse_number(key, value);
  } else if (key == "blob_centers") {
    c.blob_centers.clear();
    for (const auto& row : split_string(value, ';')) {
      std::istringstream in(row);
      std::vector<double> center;
      std::string tok;
      while (in >> tok) center.push_back(parse_number(key, tok));
      if (!center.empty()) c.blob_centers.push_back(center);
    }
  } else if (key == "blob_sd") {
    c.blob_sd = parse_number(key, value);
  } else if (key == "idx_images") {
    c.idx_images = value;
  } else if (key == "idx_labels") {
    c.idx_labels = value;
  } else if (key == "data_seed") {
    c.data_seed = parse_uint(key, value);
  } else if (key == "train_fraction") {
    c.train_fraction = parse_number(key, value);
  } else if (key == "label_noise_fraction") {
    c.label_noise_fraction = parse_number(key, value);
  } else if (key == "hidden_widths") {
    c.hidden_widths.clear();
    for (const auto& part : split_string(value, ',')) {
      const std::string t = trim(part);
      if (!t.empty()) c.hidden_widths.push_back(parse_uint(key, t));
    }
  } else if (key == "activation") {
    c.activation = parse_activation(value);
  } else if (key == "head") {
    c.head = parse_head(value);
  } else if (key == "optimizer") {
    c.optimizer.kind = parse_optimizer_kind(value);
  } else if (key == "learning_rate") {
    c.optimizer.learning_rate = parse_number(key, value);
  } else if (key == "momentum") {
    c.optimizer.momentum = parse_number(key, value);
  } else if (key == "weight_decay") {
    c.optimizer.weight_decay = parse_number(key, value);
  } else if (key == "rho") {
    c.optimizer.rho = parse_number(key, value);
  } else if (key == "ga_steps") {
    c.optimizer.ga_steps = static_cast<int>(parse_uint(key, value));
  } else if (key == "epochs") {
    c.epochs = static_cast<int>(parse_uint(key, value));
  } else if (key == "batch_size") {
    c.batch_size = parse_uint(key, value);
  } else if (key == "seeds") {
    c.seeds = parse_seed_list(value);
  } else if (key == "probe_rho") {
    c.probe_rho = parse_number(key, value);
  } else if (key == "probe_n_samples") {
    c.probe_n_samples = parse_uint(key, value);
  } else if (key == "probe_restarts") {
    c.probe_restarts = static_cast<int>(parse_uint(key, value));
  } else if (key == "probe_inner_steps") {
    c.probe_inner_steps = static_cast<int>(parse_uint(key, value));
  } else if (key == "probe_data_scope") {
    if (value == "full") {
      c.probe_sample_size = 0;
    } else if (value.rfind("sampled:", 0) == 0) {
      c.probe_sample_size = parse_uint(key, value.substr(8));
      if (c.probe_sample_size == 0) throw ConfigError("probe_data_scope: sample size must be > 0");
    } else {
      throw ConfigError("probe_data_scope: expected full or sampled:<n>, got '" + value + "'");
    }
  } else if (key == "output_dir") {
    c.output_dir = value;
  } else if (key == "save_checkpoints") {
    c.save_checkpoints = parse_bool(key, value);
  } else if (key == "record_wall_time") {
    c.record_wall_time = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string probe_scope_string(const ExperimentConfig& c) {
  return c.probe_sample_size == 0 ? "full" : "sampled:" + std::to_string(c.probe_sample_size);
}

/// Canonical text of every setting that influences results. Seeds, output
/// location and bookkeeping switches are excluded, so the hash identifies the
/// experiment rather than the invocation.
inline std::string canonical_text(const ExperimentConfig& c) {
  std::vector<std::string> widths;
  for (auto w : c.hidden_widths) widths.push_back(std::to_string(w));
  std::ostringstream o;
  o << "dataset=" << c.dataset << '\n'
    << "n_examples=" << c.n_examples << '\n'
    << "noise_sd=" << format_double(c.noise_sd) << '\n'
    << "blob_centers=" << detail::format_centers(c.blob_centers) << '\n'
    << "blob_sd=" << format_double(c.blob_sd) << '\n'
    << "idx_images=" << c.idx_images << '\n'
    << "idx_labels=" << c.idx_labels << '\n'
    << "data_seed=" << c.data_seed << '\n'
    << "train_fraction=" << format_double(c.train_fraction) << '\n'
    << "label_noise_fraction=" << format_double(c.label_noise_fraction) << '\n'
    << "hidden_widths=" << join(widths, ",") << '\n'
    << "activation=" << to_string(c.activation) << '\n'
    << "head=" << to_string(c.head) << '\n'
    << "optimizer=" << to_string(c.optimizer.kind) << '\n'
    << "learning_rate=" << format_double(c.optimizer.learning_rate) << '\n'
    << "momentum=" << format_double(c.optimizer.momentum) << '\n'
    << "weight_decay=" << format_double(c.optimizer.weight_decay) << '\n'
    << "rho=" << format_double(c.optimizer.rho) << '\n'
    << "ga_steps=" << c.optimizer.ga_steps << '\n'
    << "epochs=" << c.epochs << '\n'
    << "batch_size=" << c.batch_size << '\n'
    << "probe_rho=" << format_double(c.probe_rho) << '\n'
    << "probe_n_samples=" << c.probe_n_samples << '\n'
    << "probe_restarts=" << c.probe_restarts << '\n'
    << "probe_inner_steps=" << c.probe_inner_steps << '\n'
    << "probe_data_scope=" << probe_scope_string(c) << '\n';
  return o.str();
}

/// FNV-1a 64 of the canonical text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return out;
}

inline void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (dataset == "idx") {
    if (idx_images.empty() || idx_labels.empty()) {
      throw ConfigError("dataset idx needs idx_images and idx_labels");
    }
    for (const auto& p : {idx_images, idx_labels}) {
      if (!std::filesystem::exists(p)) throw ConfigError("file not found: " + p);
    }
  } else if (n_examples < 2) {
    throw ConfigError("n_examples must be >= 2");
  }
  if (dataset == "blobs" && blob_centers.size() < 2) {
    throw ConfigError("blob_centers: need at least 2 centers");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must be in (0, 1)");
  }
  if (!(label_noise_fraction >= 0.0 && label_noise_fraction <= 1.0)) {
    throw ConfigError("label_noise_fraction must be in [0, 1]");
  }
  for (auto w : hidden_widths) {
    if (w == 0) throw ConfigError("hidden_widths: widths must be positive");
  }
  optimizer.validate();
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(probe_rho > 0.0)) throw ConfigError("probe_rho must be > 0");
  if (probe_n_samples < 2) throw ConfigError("probe_n_samples must be >= 2");
  if (probe_restarts < 1) throw ConfigError("probe_restarts must be >= 1");
  if (probe_inner_steps < 1) throw ConfigError("probe_inner_steps must be >= 1");
}

}  // namespace samlab::harness
