#pragma once

// Aggregation across seeds and the result files:
//
//   runs.csv          one row per successful run
//   summary.csv       one row per aggregate (one per optimizer configuration)
//   summary.json      aggregates, per-run reports and failures
//   slice_<name>.csv  alpha,beta,loss grids
//
// Sharpness and generalization gap are stored x1e3 and accuracy in percent,
// matching the way the tables are read. Aggregates are computed from exactly
// the values written to runs.csv, so re-reading runs.csv reproduces them.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "samlab/format.hpp"
#include "samlab/harness/experiment.hpp"
#include "samlab/probes.hpp"
#include "samlab/report.hpp"

namespace samlab::harness {

inline const std::vector<std::string>& runs_csv_columns() {
  static const std::vector<std::string> cols = {
      "config_hash",    "seed",           "optimizer",
      "rho",            "ga_steps",       "epochs",
      "final_train_loss", "final_test_loss", "test_accuracy",
      "l_asc",          "l_avg_mean",     "l_avg_stderr",
      "l_max_estimate", "standardized_sharpness_x1e3", "generalization_gap_x1e3",
      "grad_evals",     "wall_seconds"};
  return cols;
}

/// Metrics aggregated across seeds, named as their runs.csv column.
inline const std::vector<std::string>& aggregate_metrics() {
  static const std::vector<std::string> m = {
      "final_train_loss", "final_test_loss", "test_accuracy",
      "l_asc",            "l_avg_mean",      "l_max_estimate",
      "standardized_sharpness_x1e3", "generalization_gap_x1e3", "grad_evals"};
  return m;
}

/// Numeric value of a runs.csv column for a record.
inline double run_metric(const RunRecord& r, const std::string& name) {
  if (name == "final_train_loss") return r.final_train_loss;
  if (name == "final_test_loss") return r.final_test_loss;
  if (name == "test_accuracy") return 100.0 * r.test_accuracy;
  if (name == "l_asc") return r.sharpness.l_asc;
  if (name == "l_avg_mean") return r.sharpness.l_avg_mean;
  if (name == "l_avg_stderr") return r.sharpness.l_avg_stderr;
  if (name == "l_max_estimate") return r.sharpness.l_max_estimate;
  if (name == "standardized_sharpness_x1e3") return 1e3 * r.sharpness.standardized_sharpness;
  if (name == "generalization_gap_x1e3") return 1e3 * r.sharpness.generalization_gap;
  if (name == "grad_evals") return static_cast<double>(r.grad_evals);
  throw ConfigError("unknown metric '" + name + "'");
}

struct MetricStats {
  std::string name;
  double mean = std::nan("");
  /// Sample standard deviation; NaN when fewer than two values.
  double std = std::nan("");
  std::size_t count = 0;
};

inline MetricStats compute_stats(std::string name, const std::vector<double>& values) {
  MetricStats s;
  s.name = std::move(name);
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

struct AggregateResult {
  std::string config_hash;
  std::string optimizer;
  double rho = 0.0;
  int ga_steps = 0;
  std::size_t n_seeds = 0;
  std::size_t n_failed = 0;
  std::vector<MetricStats> metrics;

  const MetricStats& metric(const std::string& name) const {
    for (const auto& m : metrics) {
      if (m.name == name) return m;
    }
    throw ConfigError("aggregate has no metric '" + name + "'");
  }
};

/// Mean and sample std over the successful runs; failures are counted.
inline AggregateResult aggregate(const ExperimentConfig& c, const std::vector<RunRecord>& runs) {
  AggregateResult a;
  a.config_hash = config_hash(c);
  a.optimizer = optimizer_label(c.optimizer);
  a.rho = c.optimizer.is_sam() ? c.optimizer.rho : 0.0;
  a.ga_steps = ga_steps_column(c.optimizer);
  for (const auto& r : runs) r.failed ? ++a.n_failed : ++a.n_seeds;
  for (const auto& name : aggregate_metrics()) {
    std::vector<double> values;
    for (const auto& r : runs) {
      if (!r.failed) values.push_back(run_metric(r, name));
    }
    a.metrics.push_back(compute_stats(name, values));
  }
  return a;
}

struct SuiteResult {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
  AggregateResult summary;
};

inline SuiteResult run_suite(const ExperimentConfig& c, unsigned jobs = 1) {
  c.validate();
  const PreparedData data = prepare_data(c);
  SuiteResult s{c, run_seeds(c, data, jobs), {}};
  s.summary = aggregate(c, s.runs);
  return s;
}

/// One suite per optimizer; data, model, seeds and probes are shared, only the
/// optimizer differs.
inline std::vector<SuiteResult> compare_optimizers(const ExperimentConfig& base,
                                                   const std::vector<OptimizerConfig>& optimizers,
                                                   unsigned jobs = 1) {
  if (optimizers.empty()) throw ConfigError("compare_optimizers: empty optimizer list");
  base.validate();
  const PreparedData data = prepare_data(base);
  std::vector<SuiteResult> out;
  for (const auto& o : optimizers) {
    ExperimentConfig c = base;
    c.optimizer = o;
    c.validate();
    SuiteResult s{c, run_seeds(c, data, jobs), {}};
    s.summary = aggregate(c, s.runs);
    out.push_back(std::move(s));
  }
  return out;
}

/// Parses an optimizer sweep entry: sgd, sam, rand-sam, or sam-ga:<N>.
inline OptimizerConfig parse_optimizer_entry(const std::string& entry, OptimizerConfig base) {
  const auto colon = entry.find(':');
  base.kind = parse_optimizer_kind(entry.substr(0, colon));
  if (colon != std::string::npos) {
    if (base.kind != OptimizerKind::SamGradientAscent) {
      throw ConfigError("only sam-ga takes a step count: '" + entry + "'");
    }
    base.ga_steps = std::stoi(entry.substr(colon + 1));
  }
  base.validate();
  return base;
}

// ---------------------------------------------------------------------------
// Files

inline std::string runs_csv_row(const RunRecord& r, bool with_wall_time) {
  std::vector<std::string> f = {r.config_hash,
                                std::to_string(r.seed),
                                r.optimizer,
                                format_double(r.rho),
                                std::to_string(r.ga_steps),
                                std::to_string(r.epochs),
                                format_double(run_metric(r, "final_train_loss")),
                                format_double(run_metric(r, "final_test_loss")),
                                format_double(run_metric(r, "test_accuracy")),
                                format_double(run_metric(r, "l_asc")),
                                format_double(run_metric(r, "l_avg_mean")),
                                format_double(run_metric(r, "l_avg_stderr")),
                                format_double(run_metric(r, "l_max_estimate")),
                                format_double(run_metric(r, "standardized_sharpness_x1e3")),
                                format_double(run_metric(r, "generalization_gap_x1e3")),
                                std::to_string(r.grad_evals),
                                format_double(with_wall_time ? r.wall_seconds : 0.0)};
  return join(f, ",");
}

inline std::string runs_csv(const std::vector<RunRecord>& runs, bool with_wall_time) {
  std::string out = join(runs_csv_columns(), ",") + "\n";
  for (const auto& r : runs) {
    if (!r.failed) out += runs_csv_row(r, with_wall_time) + "\n";
  }
  return out;
}

inline std::vector<std::string> summary_csv_columns() {
  std::vector<std::string> cols = {"config_hash", "optimizer", "rho", "ga_steps", "n_seeds",
                                   "n_failed"};
  for (const auto& m : aggregate_metrics()) {
    cols.push_back(m + "_mean");
    cols.push_back(m + "_std");
  }
  return cols;
}

/// Marker written where a standard deviation is undefined (a single seed).
inline constexpr const char* kNotApplicable = "n/a";

inline std::string summary_csv(const std::vector<AggregateResult>& aggregates) {
  std::string out = join(summary_csv_columns(), ",") + "\n";
  for (const auto& a : aggregates) {
    std::vector<std::string> f = {a.config_hash, a.optimizer, format_double(a.rho),
                                  std::to_string(a.ga_steps), std::to_string(a.n_seeds),
                                  std::to_string(a.n_failed)};
    for (const auto& m : a.metrics) {
      f.push_back(format_double(m.mean));
      f.push_back(m.count < 2 ? kNotApplicable : format_double(m.std));
    }
    out += join(f, ",") + "\n";
  }
  return out;
}

inline nlohmann::ordered_json summary_json(const std::vector<RunRecord>& runs,
                                           const std::vector<AggregateResult>& aggregates) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["aggregates"] = ordered_json::array();
  for (const auto& a : aggregates) {
    ordered_json e;
    e["config_hash"] = a.config_hash;
    e["optimizer"] = a.optimizer;
    e["rho"] = a.rho;
    e["ga_steps"] = a.ga_steps;
    e["n_seeds"] = a.n_seeds;
    e["n_failed"] = a.n_failed;
    ordered_json metrics;
    for (const auto& m : a.metrics) {
      metrics[m.name] = {{"mean", m.count ? ordered_json(m.mean) : ordered_json()},
                         {"std", m.count >= 2 ? ordered_json(m.std) : ordered_json()}};
    }
    e["metrics"] = metrics;
    j["aggregates"].push_back(e);
  }
  j["runs"] = ordered_json::array();
  for (const auto& r : runs) {
    ordered_json e;
    e["config_hash"] = r.config_hash;
    e["seed"] = r.seed;
    e["optimizer"] = r.optimizer;
    e["ga_steps"] = r.ga_steps;
    e["failed"] = r.failed;
    if (r.failed) {
      e["error"] = r.error;
    } else {
      e["sharpness"] = to_json(r.sharpness);
      ordered_json series = ordered_json::array();
      for (const auto& m : r.series) {
        series.push_back({{"train_loss", m.train_loss},
                          {"test_loss", m.test_loss},
                          {"test_accuracy", m.test_accuracy}});
      }
      e["series"] = series;
    }
    e["grad_evals"] = r.grad_evals;
    j["runs"].push_back(e);
  }
  return j;
}

inline std::string slice_csv(const SliceGrid& g) {
  std::string out = "alpha,beta,loss\n";
  for (std::size_t i = 0; i < g.alphas.size(); ++i) {
    for (std::size_t j = 0; j < g.betas.size(); ++j) {
      out += format_double(g.alphas[i]) + "," + format_double(g.betas[j]) + "," +
             format_double(g.at(i, j)) + "\n";
    }
  }
  return out;
}

/// Creates `dir` and checks that a file can be written there.
inline void validate_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto probe = dir / ".samlab_write_test";
  {
    std::ofstream out(probe);
    if (ec || !out || !(out << "ok")) {
      throw ConfigError("output directory not writable: " + dir.string());
    }
  }
  std::filesystem::remove(probe, ec);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

struct OutputFiles {
  std::vector<RunRecord> runs;
  std::vector<AggregateResult> aggregates;
  std::map<std::string, SliceGrid> slices;
  bool with_wall_time = false;
};

inline void emit_outputs(const std::filesystem::path& dir, const OutputFiles& files) {
  validate_output_dir(dir);
  write_text(dir / "runs.csv", runs_csv(files.runs, files.with_wall_time));
  write_text(dir / "summary.csv", summary_csv(files.aggregates));
  write_text(dir / "summary.json", summary_json(files.runs, files.aggregates).dump(2) + "\n");
  for (const auto& [name, grid] : files.slices) {
    write_text(dir / ("slice_" + name + ".csv"), slice_csv(grid));
  }
}

inline OutputFiles collect_outputs(const std::vector<SuiteResult>& suites) {
  OutputFiles files;
  for (const auto& s : suites) {
    files.runs.insert(files.runs.end(), s.runs.begin(), s.runs.end());
    files.aggregates.push_back(s.summary);
    files.with_wall_time = files.with_wall_time || s.config.record_wall_time;
  }
  return files;
}

inline std::string checkpoint_name(const RunRecord& r) {
  return "ckpt_" + r.config_hash + "_seed" + std::to_string(r.seed) + ".bin";
}

// ---------------------------------------------------------------------------
// Table formatting

/// "mean±std" with `decimals` digits; "±<0.1"-style when the spread is below
/// display precision and "±n/a" for a single seed.
inline std::string format_pm(const MetricStats& m, int decimals = 1) {
  if (m.count == 0) return "n/a";
  std::string s = format_fixed(m.mean, decimals) + "±";
  if (m.count < 2) return s + kNotApplicable;
  const double unit = std::pow(10.0, -decimals);
  if (m.std < unit) return s + "<" + format_fixed(unit, decimals);
  return s + format_fixed(m.std, decimals);
}

/// Results table with accuracy in percent and sharpness / gap scaled x1e3.
inline std::string format_results_table(const std::vector<AggregateResult>& rows) {
  std::vector<std::vector<std::string>> cells = {
      {"Optimizer", "GA-Steps", "Seeds", "Accuracy (%)", "Sharpness x1e3",
       "Generalization Gap x1e3"}};
  for (const auto& a : rows) {
    cells.push_back({a.optimizer, a.ga_steps ? std::to_string(a.ga_steps) : "-",
                     std::to_string(a.n_seeds) + (a.n_failed ? " (+" + std::to_string(a.n_failed) + " failed)" : ""),
                     format_pm(a.metric("test_accuracy")),
                     format_pm(a.metric("standardized_sharpness_x1e3")),
                     format_pm(a.metric("generalization_gap_x1e3"))});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  auto display_len = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;  // count UTF-8 code points
    return n;
  };
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], display_len(row[i]));
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      if (i) out += " | ";
      out += cells[r][i] + std::string(width[i] - display_len(cells[r][i]), ' ');
    }
    out += "\n";
    if (r == 0) {
      for (std::size_t i = 0; i < width.size(); ++i) {
        if (i) out += "-+-";
        out += std::string(width[i], '-');
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace samlab::harness
