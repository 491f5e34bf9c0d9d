// Command-line experiment harness.
//
// Subcommands: run, ablate, simulate, metrics, kappa, trace-export.
// Exit codes: 0 converged / success, 2 configuration error,
//             3 non-convergence, 4 backend or classifier failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "debiaspi/annotation.hpp"
#include "debiaspi/harness.hpp"
#include "debiaspi/metrics.hpp"
#include "debiaspi/serialization.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitBackend = 4;

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> batch_size;
  std::optional<int> subgroups;
};

int do_run(const RunOptions& options, bool ablation) {
  auto config = debiaspi::load_experiment_config(options.config_path);
  if (options.seed) config.seed = *options.seed;
  if (options.out_dir) config.out_dir = *options.out_dir;
  if (options.batch_size) config.batch_size = *options.batch_size;
  if (options.subgroups) config.subgroups = *options.subgroups;

  const auto result = debiaspi::execute_run(config, ablation);
  const auto& report = result.report;
  std::cout << (ablation ? "ablation" : "run") << " finished: converged="
            << (report.converged ? "true" : "false") << " iterations=" << report.iterations
            << " unmatched=" << report.unmatched << " js_div=" << report.js_div
            << " emd=" << report.emd << '\n';
  std::cout << "trace:     " << result.trace_path.string() << '\n';
  std::cout << "report:    " << result.report_path.string() << '\n';
  std::cout << "histogram: " << result.histogram_path.string() << '\n';
  return report.converged ? kExitOk : kExitNotConverged;
}

int do_simulate(int k, int b, int trials, std::int64_t runs, std::uint64_t seed) {
  const auto analysis = debiaspi::coverage_analysis(k, b, trials);
  std::printf("coverage probability p = %llu/%llu = %.6f\n",
              static_cast<unsigned long long>(analysis.p_num),
              static_cast<unsigned long long>(analysis.p_den), analysis.p);
  std::printf("expected per category  = %.4f (trials * p)\n", analysis.expected);
  std::printf("sigma                  = %.4f\n", analysis.sigma);

  const auto sim = debiaspi::coverage_simulation(k, b, trials, runs, seed);
  std::printf("\nsimulation over %lld runs\n", static_cast<long long>(runs));
  std::printf("%-10s %12s %10s %10s %12s\n", "category", "mean-share%", "min%", "max%",
              "mean-count");
  for (int c = 0; c < k; ++c) {
    const auto& s = sim.per_category[static_cast<std::size_t>(c)];
    std::printf("%-10d %12.3f %10.3f %10.3f %12.3f\n", c + 1, s.mean_pct, s.min_pct, s.max_pct,
                s.mean_count);
  }
  return kExitOk;
}

int do_metrics(const std::string& path_a, const std::string& path_b,
               const std::string& distance) {
  const auto rows_a = debiaspi::load_label_counts(path_a);
  const auto rows_b = debiaspi::load_label_counts(path_b);

  std::vector<std::string> labels;
  labels.reserve(rows_a.size());
  for (const auto& [label, count] : rows_a) labels.push_back(label);

  const auto kind = distance == "linear" ? debiaspi::SchemaKind::Ordinal
                                         : debiaspi::SchemaKind::Nominal;
  debiaspi::AttributeSchema schema("histogram", kind, labels);

  debiaspi::Histogram hist_a = debiaspi::Histogram::zeros(schema);
  debiaspi::Histogram hist_b = debiaspi::Histogram::zeros(schema);
  for (const auto& [label, count] : rows_a) hist_a.add(*schema.index_of(label), count);
  for (const auto& [label, count] : rows_b) {
    const auto index = schema.index_of(label);
    if (!index) {
      throw debiaspi::ConfigError("histogram files disagree on labels: '" + label + "'");
    }
    hist_b.add(*index, count);
  }

  const auto p = debiaspi::ProbDist::from_histogram(hist_a);
  const auto q = debiaspi::ProbDist::from_histogram(hist_b);
  const auto ground = distance == "linear" ? debiaspi::GroundDistance::linear(schema.size())
                                           : debiaspi::GroundDistance::unit(schema.size());
  debiaspi::Json out{{"js_div", debiaspi::js_divergence(p, q)},
                     {"emd", debiaspi::emd(p, q, ground)},
                     {"tv", debiaspi::total_variation(p, q)}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

debiaspi::AnnotationSet load_single_coder(const std::string& path) {
  const auto rows = debiaspi::load_annotation_rows(path);
  if (rows.empty()) throw debiaspi::ConfigError("annotation file is empty: " + path);
  debiaspi::AnnotationSet set{rows.front().coder_id,
                              debiaspi::codebook_schema(rows.front().schema_name),
                              {}};
  for (const auto& row : rows) {
    if (row.coder_id != set.coder_id) {
      throw debiaspi::ConfigError("file " + path + " mixes coders '" + set.coder_id +
                                  "' and '" + row.coder_id + "'");
    }
    if (row.schema_name != set.schema.name()) {
      throw debiaspi::ConfigError("file " + path + " mixes schemas");
    }
    set.insert(row.item_id, row.label);
  }
  return set;
}

int do_kappa(const std::string& path_a, const std::string& path_b) {
  const auto a = load_single_coder(path_a);
  const auto b = load_single_coder(path_b);
  const auto score = debiaspi::score_pair(a, b);
  debiaspi::Json out{{"coder_a", a.coder_id},
                     {"coder_b", b.coder_id},
                     {"schema", a.schema.name()},
                     {"items", score.items},
                     {"kappa", score.kappa},
                     {"percent_agreement", score.agreement},
                     {"robust", score.robust}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int do_trace_export(const std::string& report_path, const std::optional<std::string>& out_path) {
  const auto report = debiaspi::load_report(report_path);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (out_path) {
    file.open(*out_path);
    if (!file) throw debiaspi::ConfigError("cannot write file: " + *out_path);
    out = &file;
  }
  *out << "iteration,label,running_tv\n";
  for (const auto& record : report.records) {
    if (record.outcome != debiaspi::StepOutcome::Accepted) continue;
    *out << record.iteration << ',' << record.believed.value_or("") << ','
         << (record.running_tv ? debiaspi::Json(*record.running_tv).dump() : "") << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DebiasPI: quota-steered attribute control for generative backends"};
  app.require_subcommand(1);

  RunOptions run_options;

  const auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", run_options.config_path, "experiment config file")->required();
    cmd->add_option_function<std::string>(
        "--seed", [&](const std::string& v) { run_options.seed = std::stoull(v); },
        "override the config seed");
    cmd->add_option_function<std::string>(
        "--out-dir", [&](const std::string& v) { run_options.out_dir = v; },
        "override the output directory");
    cmd->add_option_function<int>(
        "--batch-size", [&](const int& v) { run_options.batch_size = v; },
        "override the batch size");
    cmd->add_option_function<int>(
        "--subgroups", [&](const int& v) { run_options.subgroups = v; },
        "override the subgroup count");
  };

  auto* cmd_run = app.add_subcommand("run", "execute a quota-steered generation run");
  add_run_flags(cmd_run);

  auto* cmd_ablate =
      app.add_subcommand("ablate", "execute the same run with quota tracking disabled");
  add_run_flags(cmd_ablate);

  int sim_k = 9, sim_b = 5, sim_trials = 40;
  std::int64_t sim_runs = 10000;
  std::uint64_t sim_seed = 0;
  auto* cmd_simulate =
      app.add_subcommand("simulate", "batch-coverage analysis and Monte Carlo simulation");
  cmd_simulate->add_option("-k,--categories", sim_k, "number of categories")->required();
  cmd_simulate->add_option("-b,--batch", sim_b, "distinct categories per trial")->required();
  cmd_simulate->add_option("--trials", sim_trials, "trials per run")->required();
  cmd_simulate->add_option("--runs", sim_runs, "simulation runs");
  cmd_simulate->add_option("--seed", sim_seed, "simulation seed");

  std::string metrics_a, metrics_b, metrics_distance = "unit";
  auto* cmd_metrics =
      app.add_subcommand("metrics", "divergence report for two histogram CSV files");
  cmd_metrics->add_option("hist_a", metrics_a, "first histogram (label,count per line)")
      ->required();
  cmd_metrics->add_option("hist_b", metrics_b, "second histogram")->required();
  cmd_metrics->add_option("--distance", metrics_distance, "ground distance preset")
      ->check(CLI::IsMember({"unit", "linear"}));

  std::string kappa_a, kappa_b;
  auto* cmd_kappa =
      app.add_subcommand("kappa", "intercoder reliability for two annotation files");
  cmd_kappa->add_option("file_a", kappa_a, "first coder's annotation rows")->required();
  cmd_kappa->add_option("file_b", kappa_b, "second coder's annotation rows")->required();

  std::string export_report;
  std::optional<std::string> export_out;
  auto* cmd_export =
      app.add_subcommand("trace-export", "per-iteration CSV of accepted labels and running TV");
  cmd_export->add_option("report", export_report, "report.json produced by run/ablate")
      ->required();
  cmd_export->add_option_function<std::string>(
      "--out", [&](const std::string& v) { export_out = v; },
      "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cmd_run->parsed()) return do_run(run_options, false);
    if (cmd_ablate->parsed()) return do_run(run_options, true);
    if (cmd_simulate->parsed()) return do_simulate(sim_k, sim_b, sim_trials, sim_runs, sim_seed);
    if (cmd_metrics->parsed()) return do_metrics(metrics_a, metrics_b, metrics_distance);
    if (cmd_kappa->parsed()) return do_kappa(kappa_a, kappa_b);
    if (cmd_export->parsed()) return do_trace_export(export_report, export_out);
  } catch (const debiaspi::BackendError& error) {
    std::cerr << "backend failure: " << error.what() << '\n';
    return kExitBackend;
  } catch (const debiaspi::ClassifierError& error) {
    std::cerr << "classifier failure: " << error.what() << '\n';
    return kExitBackend;
  } catch (const debiaspi::Error& error) {
    std::cerr << "error: " << error.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
