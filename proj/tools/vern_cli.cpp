// Command-line front end: batch runs, reports, few-shot training and
// property checks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vern/error.hpp"
#include "vern/fewshot.hpp"
#include "vern/harness.hpp"
#include "vern/invariants.hpp"
#include "vern/perception.hpp"
#include "vern/scenario.hpp"

namespace fs = std::filesystem;
using namespace vern;

namespace {

// A bare name like "scenario2" resolves against the bundled directory.
std::string resolve_scenario(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const fs::path bundled = fs::path(bundled_scenario_dir()) / (arg + ".scn");
  if (fs::exists(bundled)) return bundled.string();
  throw ConfigError("no scenario file '" + arg + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vegetation-aware navigation simulator"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run trials and write the raw archive");
  std::vector<std::string> scenario_args;
  std::vector<std::string> variant_args{"all"};
  int trials = 10;
  std::uint64_t seed = 1;
  std::string out_path;
  unsigned threads = 0;
  std::string model_path;
  run->add_option("--scenario", scenario_args, "scenario file or bundled name (repeatable)")
      ->required();
  run->add_option("--variant", variant_args,
                  "vern, vern-no-height, vern-no-recovery, dwa-baseline or all (repeatable)");
  run->add_option("--trials", trials, "trials per scenario and variant")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "base seed");
  run->add_option("--out", out_path, "raw archive (JSON)")->required();
  run->add_option("--threads", threads, "worker threads, 0 for all cores");
  run->add_option("--model", model_path, "few-shot parameters; oracle perception when absent");

  // report
  auto* report = app.add_subcommand("report", "metric table from a raw archive");
  std::string in_path;
  std::string format = "csv";
  report->add_option("--in", in_path, "raw archive")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));

  // train-fewshot
  auto* trainer = app.add_subcommand("train-fewshot", "train the few-shot embedder on synthetic data");
  int classes = 4;
  fewshot::PipelineConfig pipeline;
  std::string model_out;
  std::string loss_csv;
  trainer->add_option("--classes", classes)->check(CLI::Range(4, 4));
  trainer->add_option("--per-class", pipeline.per_class)->check(CLI::Range(2, 1000000));
  trainer->add_option("--epochs", pipeline.training.epochs)->check(CLI::PositiveNumber);
  trainer->add_option("--seed", pipeline.seed);
  trainer->add_option("--out", model_out, "parameter file")->required();
  trainer->add_option("--loss-csv", loss_csv, "per-epoch mean loss");

  // check-invariants
  auto* check = app.add_subcommand("check-invariants", "run the property suites");
  std::uint64_t check_seed = 2024;
  check->add_option("--seed", check_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      std::vector<ScenarioSpec> specs;
      for (const auto& a : scenario_args) specs.push_back(load_scenario(resolve_scenario(a)));
      std::vector<harness::Variant> variants;
      for (const auto& v : variant_args) {
        if (v == "all") {
          variants.insert(variants.end(), harness::kAllVariants.begin(), harness::kAllVariants.end());
        } else {
          variants.push_back(harness::variant_from_string(v));
        }
      }
      std::optional<perception::FewShotBackend> backend;
      harness::BatchOptions opt;
      opt.threads = threads;
      if (!model_path.empty()) {
        const fewshot::DescriptorGenerator gen(fewshot::SyntheticConfig{});
        backend.emplace(fewshot::load_params(model_path), fewshot::reference_set(gen, 5, 17), gen);
        opt.fewshot = &*backend;
      }
      const auto batch = harness::run_batch(specs, variants, trials, seed, opt);
      write_file(out_path, harness::archive_to_json(batch));
      std::cout << harness::table_csv(batch.table);
      return 0;
    }
    if (*report) {
      const auto batch = harness::archive_from_json(read_file(in_path));
      std::cout << (format == "csv" ? harness::table_csv(batch.table)
                                    : harness::table_json(batch.table));
      return 0;
    }
    if (*trainer) {
      (void)classes;
      const auto r = fewshot::run_pipeline(pipeline);
      fewshot::save_params(r.training.params, model_out);
      if (!loss_csv.empty()) fewshot::write_loss_csv(r.training.loss_curve, loss_csv);
      std::cout << "train descriptors " << r.train_size << ", held out " << r.test_size
                << ", loss " << r.training.loss_curve.front() << " -> "
                << r.training.loss_curve.back() << ", held-out accuracy " << r.holdout_accuracy
                << "\n";
      return 0;
    }
    if (*check) {
      bool ok = true;
      for (const auto& s : invariants::run_all(check_seed)) {
        std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
        ok = ok && s.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
