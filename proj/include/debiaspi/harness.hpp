#pragma once

// Experiment harness shared by the CLI: loads an experiment config, builds
// the backend and belief source, executes a run or ablation, and writes the
// trace journal, report, and final-histogram CSV to the output directory.

#include <filesystem>
#include <optional>
#include <string>

#include "debiaspi/control_loop.hpp"
#include "debiaspi/serialization.hpp"

namespace debiaspi {

struct GeneratorChoice {
  enum class Type { MockPreset, MockCustom, Fixture, Remote };
  Type type = Type::MockPreset;
  std::string preset;                   // MockPreset
  std::vector<double> weights;          // MockCustom
  double compliance = 1.0;              // both mock variants
  std::filesystem::path fixture_path;   // Fixture
  std::string endpoint;                 // Remote
};

struct BeliefChoice {
  BeliefMode mode = BeliefMode::Internal;
  std::string classifier = "token";  // "token" or "remote"
  std::string endpoint;              // classifier endpoint for "remote"
};

struct ExperimentConfig {
  AttributeSchema schema;
  TargetSpec target;
  std::int64_t total = 0;
  GeneratorChoice generator;
  BeliefChoice belief;
  PromptTier tier = PromptTier::AttributeDistribution;
  int batch_size = 5;
  int max_retries = 10;
  int subgroups = 1;
  std::optional<std::uint64_t> seed;  // mandatory for mock backends
  std::filesystem::path headlines_path;
  std::filesystem::path out_dir;

  ExperimentConfig(AttributeSchema schema_, TargetSpec target_)
      : schema(std::move(schema_)), target(std::move(target_)) {}

  void validate() const;
};

// Relative paths inside the file resolve against the config's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
Json experiment_config_to_json(const ExperimentConfig& config);

struct HarnessResult {
  RunReport report;
  std::filesystem::path trace_path;
  std::filesystem::path report_path;
  std::filesystem::path histogram_path;

  explicit HarnessResult(RunReport report_) : report(std::move(report_)) {}
};

// Executes the configured run (or its quota-disabled ablation) and writes
// trace.jsonl, report.json, and final_histogram.csv under config.out_dir.
// The trace is flushed record by record, so backend failures leave a partial
// journal behind before the error propagates.
HarnessResult execute_run(const ExperimentConfig& config, bool ablation);

}  // namespace debiaspi
