// samlab: multi-seed SAM experiments, checkpoint probes and loss-plane slices.
//
//   samlab train   --config run.cfg [--seeds 1,2,3] [--out dir] [--jobs n]
//   samlab compare --config run.cfg --optimizers sgd,sam,rand-sam,sam-ga:3 [...]
//   samlab probe   --config run.cfg --checkpoint ckpt.bin [--seeds s] [--out dir]
//   samlab slice   --config run.cfg --checkpoint ckpt.bin [--grid 21] [--extent 1]

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "samlab/format.hpp"
#include "samlab/harness/checkpoint.hpp"
#include "samlab/harness/config.hpp"
#include "samlab/harness/experiment.hpp"
#include "samlab/harness/results.hpp"
#include "samlab/report.hpp"

namespace fs = std::filesystem;
using namespace samlab;
using namespace samlab::harness;

namespace {

struct CommonArgs {
  std::string config;
  std::string seeds;
  std::string out;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seeds", args.seeds, "comma-separated seeds, overrides the config");
  cmd->add_option("--out", args.out, "output directory, overrides the config");
  cmd->add_option("--jobs", args.jobs, "seeds trained in parallel")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig c = load_config(args.config);
  if (!args.seeds.empty()) c.seeds = parse_seed_list(args.seeds);
  if (!args.out.empty()) c.output_dir = args.out;
  c.validate();
  return c;
}

void report_failures(const std::vector<SuiteResult>& suites) {
  for (const auto& s : suites) {
    for (const auto& r : s.runs) {
      if (r.failed) {
        std::cerr << "run " << r.optimizer << " seed " << r.seed << " failed: " << r.error << "\n";
      }
    }
  }
}

void finish(const std::vector<SuiteResult>& suites, const fs::path& out) {
  for (const auto& s : suites) {
    if (!s.config.save_checkpoints) continue;
    for (const auto& r : s.runs) {
      if (!r.failed) write_checkpoint(out / checkpoint_name(r), r.params);
    }
  }
  emit_outputs(out, collect_outputs(suites));
  report_failures(suites);
  std::vector<AggregateResult> rows;
  for (const auto& s : suites) rows.push_back(s.summary);
  std::cout << format_results_table(rows);
  std::cout << "wrote " << (out / "runs.csv").string() << ", summary.csv, summary.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"samlab: sharpness-aware minimization experiments"};
  app.require_subcommand(1);

  CommonArgs train_args;
  auto* train = app.add_subcommand("train", "train one configuration over all seeds");
  add_common(train, train_args);

  CommonArgs compare_args;
  std::string optimizer_list;
  auto* compare = app.add_subcommand("compare", "train the same setup with several optimizers");
  add_common(compare, compare_args);
  compare->add_option("--optimizers", optimizer_list,
                      "comma-separated: sgd, sam, rand-sam, sam-ga:<N>")
      ->required();

  CommonArgs probe_args;
  std::string probe_ckpt;
  auto* probe = app.add_subcommand("probe", "measure sharpness of a saved checkpoint");
  add_common(probe, probe_args);
  probe->add_option("--checkpoint", probe_ckpt)->required()->check(CLI::ExistingFile);

  CommonArgs slice_args;
  std::string slice_ckpt;
  std::string slice_name;
  std::size_t grid_n = 21;
  double extent = 1.0;
  auto* slice = app.add_subcommand("slice", "loss on a 2-D plane through a checkpoint");
  add_common(slice, slice_args);
  slice->add_option("--checkpoint", slice_ckpt)->required()->check(CLI::ExistingFile);
  slice->add_option("--grid", grid_n, "points per axis")->check(CLI::Range(2, 10000));
  slice->add_option("--extent", extent, "half-width of the plane")->check(CLI::NonNegativeNumber);
  slice->add_option("--name", slice_name, "suffix of slice_<name>.csv (default: checkpoint stem)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const ExperimentConfig c = resolve(train_args);
      validate_output_dir(c.output_dir);
      finish({run_suite(c, train_args.jobs)}, c.output_dir);
    } else if (*compare) {
      const ExperimentConfig c = resolve(compare_args);
      std::vector<OptimizerConfig> optimizers;
      for (const auto& entry : split_string(optimizer_list, ',')) {
        if (!trim(entry).empty()) optimizers.push_back(parse_optimizer_entry(trim(entry), c.optimizer));
      }
      validate_output_dir(c.output_dir);
      finish(compare_optimizers(c, optimizers, compare_args.jobs), c.output_dir);
    } else if (*probe) {
      const ExperimentConfig c = resolve(probe_args);
      const SharpnessReport r = probe_checkpoint(probe_ckpt, c, c.seeds.front());
      std::cout << to_json(r).dump(2) << "\n";
      if (!probe_args.out.empty()) {
        validate_output_dir(c.output_dir);
        write_text(fs::path(c.output_dir) / "probe.json", to_json(r).dump(2) + "\n");
        write_text(fs::path(c.output_dir) / "probe.csv",
                   sharpness_csv_header() + "\n" + to_csv_row(r) + "\n");
      }
    } else if (*slice) {
      const ExperimentConfig c = resolve(slice_args);
      validate_output_dir(c.output_dir);
      const std::string name = slice_name.empty() ? fs::path(slice_ckpt).stem().string() : slice_name;
      const fs::path path = fs::path(c.output_dir) / ("slice_" + name + ".csv");
      write_text(path, slice_csv(slice_checkpoint(slice_ckpt, c, c.seeds.front(), extent, grid_n)));
      std::cout << "wrote " << path.string() << "\n";
    }
  } catch (const samlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
