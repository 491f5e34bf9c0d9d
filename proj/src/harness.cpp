#include "debiaspi/harness.hpp"

#include <memory>
#include <sstream>

#include "debiaspi/remote.hpp"
#include "debiaspi/rng.hpp"

namespace debiaspi {

void ExperimentConfig::validate() const {
  target.validate();
  if (target.schema != schema) throw ConfigError("target spec uses a different schema");
  if (total < 1) throw ConfigError("experiment total must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (max_retries < 0) throw ConfigError("max retries must be non-negative");
  if (subgroups < 1) throw ConfigError("subgroup count must be at least 1");
  const bool is_mock = generator.type == GeneratorChoice::Type::MockPreset ||
                       generator.type == GeneratorChoice::Type::MockCustom;
  if (is_mock && !seed) throw ConfigError("mock runs need a seed for reproducibility");
  if (generator.type == GeneratorChoice::Type::Fixture &&
      !std::filesystem::exists(generator.fixture_path)) {
    throw ConfigError("fixture file does not exist: " + generator.fixture_path.string());
  }
  if (generator.type == GeneratorChoice::Type::Remote && generator.endpoint.empty()) {
    throw ConfigError("remote generator needs an endpoint");
  }
  if (belief.mode == BeliefMode::External && belief.classifier == "remote" &&
      belief.endpoint.empty()) {
    throw ConfigError("remote classifier needs an endpoint");
  }
  if (!std::filesystem::exists(headlines_path)) {
    throw ConfigError("headline corpus does not exist: " + headlines_path.string());
  }
  if (out_dir.empty()) throw ConfigError("experiment needs an output directory");
}

namespace {

std::filesystem::path resolve_relative(const std::filesystem::path& base,
                                       const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

GeneratorChoice generator_from_json(const Json& j) {
  GeneratorChoice choice;
  const std::string type = j.value("type", "mock");
  if (type == "mock") {
    choice.compliance = j.value("compliance", 1.0);
    if (j.contains("preset")) {
      choice.type = GeneratorChoice::Type::MockPreset;
      choice.preset = j["preset"].get<std::string>();
    } else if (j.contains("weights")) {
      choice.type = GeneratorChoice::Type::MockCustom;
      choice.weights = j["weights"].get<std::vector<double>>();
    } else {
      throw ConfigError("mock generator needs 'preset' or 'weights'");
    }
  } else if (type == "fixture") {
    choice.type = GeneratorChoice::Type::Fixture;
    choice.fixture_path = j.value("path", "");
  } else if (type == "remote") {
    choice.type = GeneratorChoice::Type::Remote;
    choice.endpoint = j.value("endpoint", "");
  } else {
    throw ConfigError("unknown generator type: " + type);
  }
  return choice;
}

Json generator_to_json(const GeneratorChoice& choice) {
  switch (choice.type) {
    case GeneratorChoice::Type::MockPreset:
      return Json{{"type", "mock"}, {"preset", choice.preset}, {"compliance", choice.compliance}};
    case GeneratorChoice::Type::MockCustom:
      return Json{
          {"type", "mock"}, {"weights", choice.weights}, {"compliance", choice.compliance}};
    case GeneratorChoice::Type::Fixture:
      return Json{{"type", "fixture"}, {"path", choice.fixture_path.string()}};
    case GeneratorChoice::Type::Remote:
      return Json{{"type", "remote"}, {"endpoint", choice.endpoint}};
  }
  throw ConfigError("unknown generator type");
}

}  // namespace

namespace {

Json parse_json_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Json j = Json::parse(buffer.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed JSON in " + path.string());
  return j;
}

AttributeSchema schema_for_config(const Json& j, const std::filesystem::path& base) {
  if (j.contains("schema_file")) {
    return schema_from_json(
        parse_json_document(resolve_relative(base, j["schema_file"].get<std::string>())));
  }
  if (!j.contains("schema")) throw ConfigError("config needs 'schema' or 'schema_file'");
  return schema_from_json(j["schema"]);
}

TargetSpec target_for_config(const Json& j, const AttributeSchema& schema) {
  if (!j.contains("target")) throw ConfigError("config needs a 'target'");
  const Json& t = j["target"];
  if (t.contains("counts")) {
    return TargetSpec::from_counts(schema, t["counts"].get<std::vector<std::int64_t>>());
  }
  if (t.contains("weights")) {
    return TargetSpec::from_weights(schema, t["weights"].get<std::vector<double>>());
  }
  throw ConfigError("target needs 'weights' or 'counts'");
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const Json j = parse_json_document(path);
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  auto schema = schema_for_config(j, base);
  auto target = target_for_config(j, schema);
  ExperimentConfig config(std::move(schema), std::move(target));

  if (!j.contains("total")) throw ConfigError("config needs 'total'");
  config.total = j["total"].get<std::int64_t>();

  if (!j.contains("generator")) throw ConfigError("config needs a 'generator'");
  config.generator = generator_from_json(j["generator"]);
  if (config.generator.type == GeneratorChoice::Type::Fixture) {
    config.generator.fixture_path = resolve_relative(base, config.generator.fixture_path);
  }

  if (j.contains("belief")) {
    const Json& b = j["belief"];
    const std::string mode = b.value("mode", "internal");
    if (mode == "internal") {
      config.belief.mode = BeliefMode::Internal;
    } else if (mode == "external") {
      config.belief.mode = BeliefMode::External;
      config.belief.classifier = b.value("classifier", "token");
      config.belief.endpoint = b.value("endpoint", "");
    } else {
      throw ConfigError("unknown belief mode: " + mode);
    }
  }

  config.tier = prompt_tier_from_string(j.value("tier", "distribution"));
  config.batch_size = j.value("batch_size", 5);
  config.max_retries = j.value("max_retries", 10);
  config.subgroups = j.value("subgroups", 1);
  if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();

  if (!j.contains("headlines")) throw ConfigError("config needs a 'headlines' corpus path");
  config.headlines_path = resolve_relative(base, j["headlines"].get<std::string>());
  config.out_dir = resolve_relative(base, j.value("out_dir", "out"));
  return config;
}

Json experiment_config_to_json(const ExperimentConfig& config) {
  Json belief{{"mode", config.belief.mode == BeliefMode::Internal ? "internal" : "external"}};
  if (config.belief.mode == BeliefMode::External) {
    belief["classifier"] = config.belief.classifier;
    if (!config.belief.endpoint.empty()) belief["endpoint"] = config.belief.endpoint;
  }
  Json j{{"format", "debiaspi-config"},
         {"version", 1},
         {"schema", schema_to_json(config.schema)},
         {"target", config.target.is_counts() ? Json{{"counts", config.target.counts()}}
                                              : Json{{"weights", config.target.weights()}}},
         {"total", config.total},
         {"generator", generator_to_json(config.generator)},
         {"belief", std::move(belief)},
         {"tier", std::string(to_string(config.tier))},
         {"batch_size", config.batch_size},
         {"max_retries", config.max_retries},
         {"subgroups", config.subgroups},
         {"headlines", config.headlines_path.string()},
         {"out_dir", config.out_dir.string()}};
  if (config.seed) j["seed"] = *config.seed;
  return j;
}

HarnessResult execute_run(const ExperimentConfig& config, bool ablation) {
  config.validate();

  std::unique_ptr<GenerationBackend> backend;
  const std::uint64_t base_seed = config.seed.value_or(0);
  switch (config.generator.type) {
    case GeneratorChoice::Type::MockPreset: {
      auto mock = mock_preset(config.generator.preset, stream_seed(base_seed, "mock"));
      mock.compliance = config.generator.compliance;
      backend = std::make_unique<MockGenerator>(std::move(mock));
      break;
    }
    case GeneratorChoice::Type::MockCustom: {
      MockBiasConfig mock{config.schema, config.generator.weights,
                          config.generator.compliance, stream_seed(base_seed, "mock")};
      backend = std::make_unique<MockGenerator>(std::move(mock));
      break;
    }
    case GeneratorChoice::Type::Fixture:
      backend = std::make_unique<ReplayBackend>(load_fixture(config.generator.fixture_path));
      break;
    case GeneratorChoice::Type::Remote:
      backend = std::make_unique<RemoteBackend>(config.generator.endpoint);
      break;
  }

  BeliefSource belief = BeliefSource::internal();
  if (config.belief.mode == BeliefMode::External) {
    if (config.belief.classifier == "token") {
      belief = BeliefSource::external(std::make_shared<TokenClassifier>());
    } else if (config.belief.classifier == "remote") {
      belief = BeliefSource::external(std::make_shared<RemoteClassifier>(config.belief.endpoint));
    } else {
      throw ConfigError("unknown classifier adapter: " + config.belief.classifier);
    }
  }

  LoopConfig loop{config.schema,
                  quantize_target(config.target, config.total),
                  std::move(belief),
                  config.batch_size,
                  config.max_retries,
                  config.subgroups,
                  config.tier,
                  base_seed};

  const auto headlines = load_headlines(config.headlines_path);

  std::filesystem::create_directories(config.out_dir);
  const auto trace_path = config.out_dir / "trace.jsonl";

  Json header{{"schema", schema_to_json(config.schema)},
              {"target_counts", loop.ledger.remaining()},
              {"tier", std::string(to_string(config.tier))},
              {"batch_size", config.batch_size},
              {"max_retries", config.max_retries},
              {"subgroups", config.subgroups},
              {"ablation", ablation}};
  if (config.seed) header["seed"] = *config.seed;
  TraceWriter trace(trace_path, std::move(header));
  const RecordSink sink = [&trace](const GenerationRecord& record) { trace.write(record); };

  HarnessResult result(ablation ? run_ablation(loop, *backend, headlines, sink)
                                : run(loop, *backend, headlines, sink));
  result.trace_path = trace_path;
  result.report_path = config.out_dir / "report.json";
  result.histogram_path = config.out_dir / "final_histogram.csv";
  save_report(result.report_path, result.report);
  save_histogram_csv(result.histogram_path, result.report.final_histogram);
  return result;
}

}  // namespace debiaspi
