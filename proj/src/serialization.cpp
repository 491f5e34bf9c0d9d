#include "debiaspi/serialization.hpp"

#include <limits>
#include <sstream>

namespace debiaspi {

namespace {

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read file: " + path.string());
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  return out;
}

Json parse_json(const std::string& text, const std::string& context) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed JSON in " + context);
  return j;
}

Json parse_json_file(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str(), path.string());
}

const Json& require_field(const Json& j, const char* key, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(context + " is missing field '" + key + "'");
  return *it;
}

std::string trimmed(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

Json schema_to_json(const AttributeSchema& schema) {
  return Json{{"name", schema.name()},
              {"kind", std::string(to_string(schema.kind()))},
              {"labels", schema.labels()}};
}

AttributeSchema schema_from_json(const Json& j) {
  return AttributeSchema(
      require_field(j, "name", "schema").get<std::string>(),
      schema_kind_from_string(require_field(j, "kind", "schema").get<std::string>()),
      require_field(j, "labels", "schema").get<std::vector<std::string>>());
}

Json target_spec_to_json(const TargetSpec& spec) {
  Json j{{"schema", schema_to_json(spec.schema)}};
  if (spec.is_counts()) {
    j["counts"] = spec.counts();
  } else {
    j["weights"] = spec.weights();
  }
  return j;
}

TargetSpec target_spec_from_json(const Json& j) {
  auto schema = schema_from_json(require_field(j, "schema", "target spec"));
  const bool has_weights = j.contains("weights");
  const bool has_counts = j.contains("counts");
  if (has_weights == has_counts) {
    throw ConfigError("target spec needs exactly one of 'weights' or 'counts'");
  }
  if (has_counts) {
    return TargetSpec::from_counts(std::move(schema),
                                   j["counts"].get<std::vector<std::int64_t>>());
  }
  return TargetSpec::from_weights(std::move(schema), j["weights"].get<std::vector<double>>());
}

TargetSpec load_target_spec(const std::filesystem::path& path) {
  return target_spec_from_json(parse_json_file(path));
}

void save_target_spec(const std::filesystem::path& path, const TargetSpec& spec) {
  open_for_write(path) << target_spec_to_json(spec).dump(2) << '\n';
}

Json request_to_json(const GenerationRequest& request) {
  return Json{{"prompt_text", request.prompt_text},
              {"tier", std::string(to_string(request.tier))},
              {"menu", request.menu},
              {"batch_hint", request.batch_hint}};
}

GenerationRequest request_from_json(const Json& j) {
  GenerationRequest request;
  request.prompt_text = require_field(j, "prompt_text", "request").get<std::string>();
  request.tier = prompt_tier_from_string(require_field(j, "tier", "request").get<std::string>());
  request.menu = require_field(j, "menu", "request").get<std::vector<std::string>>();
  request.batch_hint = j.value("batch_hint", 5);
  return request;
}

Json response_to_json(const GenerationResponse& response) {
  Json j = Json::object();
  if (response.claimed_label) j["claimed_label"] = *response.claimed_label;
  j["image_ref"] = response.image_ref;
  return j;
}

GenerationResponse response_from_json(const Json& j) {
  GenerationResponse response;
  if (j.contains("claimed_label") && !j["claimed_label"].is_null()) {
    response.claimed_label = j["claimed_label"].get<std::string>();
  }
  response.image_ref = require_field(j, "image_ref", "response").get<std::string>();
  return response;
}

Json classify_request_to_json(const std::string& image_ref, const AttributeSchema& schema) {
  return Json{{"image_ref", image_ref},
              {"schema", schema.name()},
              {"labels", schema.labels()}};
}

Json classify_response_to_json(const std::string& label) { return Json{{"label", label}}; }

std::string classify_response_from_json(const Json& j) {
  return require_field(j, "label", "classifier response").get<std::string>();
}

std::vector<GenerationResponse> load_fixture(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<GenerationResponse> transcript;
  std::string line;
  while (std::getline(in, line)) {
    if (trimmed(line).empty()) continue;
    transcript.push_back(response_from_json(parse_json(line, path.string())));
  }
  return transcript;
}

void save_fixture(const std::filesystem::path& path,
                  const std::vector<GenerationResponse>& transcript) {
  auto out = open_for_write(path);
  for (const auto& response : transcript) out << response_to_json(response).dump() << '\n';
}

Json record_to_json(const GenerationRecord& record) {
  Json j{{"iteration", record.iteration},
         {"subgroup", record.subgroup},
         {"headline", record.headline},
         {"menu", record.menu},
         {"claimed", record.claimed ? Json(*record.claimed) : Json(nullptr)},
         {"believed", record.believed ? Json(*record.believed) : Json(nullptr)},
         {"outcome", std::string(to_string(record.outcome))},
         {"retries_used", record.retries_used}};
  if (record.running_tv) j["running_tv"] = *record.running_tv;
  return j;
}

GenerationRecord record_from_json(const Json& j) {
  GenerationRecord record;
  record.iteration = require_field(j, "iteration", "record").get<int>();
  record.subgroup = j.value("subgroup", 0);
  record.headline = require_field(j, "headline", "record").get<std::string>();
  record.menu = require_field(j, "menu", "record").get<std::vector<std::string>>();
  if (j.contains("claimed") && !j["claimed"].is_null()) {
    record.claimed = j["claimed"].get<std::string>();
  }
  if (j.contains("believed") && !j["believed"].is_null()) {
    record.believed = j["believed"].get<std::string>();
  }
  record.outcome =
      step_outcome_from_string(require_field(j, "outcome", "record").get<std::string>());
  record.retries_used = j.value("retries_used", 0);
  if (j.contains("running_tv") && !j["running_tv"].is_null()) {
    record.running_tv = j["running_tv"].get<double>();
  }
  return record;
}

TraceWriter::TraceWriter(const std::filesystem::path& path, Json header) : path_(path) {
  out_ = open_for_write(path);
  header["format"] = "debiaspi-trace";
  header["version"] = 1;
  // Re-order so the format tag leads the header line.
  Json ordered{{"format", header["format"]}, {"version", header["version"]}};
  for (const auto& [key, value] : header.items()) {
    if (key != "format" && key != "version") ordered[key] = value;
  }
  out_ << ordered.dump() << '\n';
  out_.flush();
}

void TraceWriter::write(const GenerationRecord& record) {
  out_ << record_to_json(record).dump() << '\n';
  out_.flush();
}

TraceFile load_trace(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  TraceFile trace;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trace file is empty: " + path.string());
  trace.header = parse_json(line, path.string());
  if (trace.header.value("format", "") != "debiaspi-trace") {
    throw ConfigError("not a trace journal: " + path.string());
  }
  while (std::getline(in, line)) {
    if (trimmed(line).empty()) continue;
    trace.records.push_back(record_from_json(parse_json(line, path.string())));
  }
  return trace;
}

Json report_to_json(const RunReport& report) {
  Json records = Json::array();
  for (const auto& record : report.records) records.push_back(record_to_json(record));
  return Json{{"format", "debiaspi-report"},
              {"version", 1},
              {"schema", schema_to_json(report.schema)},
              {"target_counts", report.target_histogram.counts},
              {"final_counts", report.final_histogram.counts},
              {"js_div", report.js_div},
              {"emd", report.emd},
              {"tv", report.tv},
              {"converged", report.converged},
              {"iterations", report.iterations},
              {"unmatched", report.unmatched},
              {"records", std::move(records)}};
}

RunReport report_from_json(const Json& j) {
  if (j.value("format", "") != "debiaspi-report") {
    throw ConfigError("not a run report document");
  }
  auto schema = schema_from_json(require_field(j, "schema", "report"));
  RunReport report(
      schema,
      Histogram{schema,
                require_field(j, "final_counts", "report").get<std::vector<std::int64_t>>()},
      Histogram{schema,
                require_field(j, "target_counts", "report").get<std::vector<std::int64_t>>()});
  const auto number_or_nan = [&](const char* key) {
    const auto& v = require_field(j, key, "report");
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  report.js_div = number_or_nan("js_div");
  report.emd = number_or_nan("emd");
  report.tv = number_or_nan("tv");
  report.converged = require_field(j, "converged", "report").get<bool>();
  report.iterations = require_field(j, "iterations", "report").get<int>();
  report.unmatched = require_field(j, "unmatched", "report").get<int>();
  for (const auto& r : require_field(j, "records", "report")) {
    report.records.push_back(record_from_json(r));
  }
  return report;
}

void save_report(const std::filesystem::path& path, const RunReport& report) {
  open_for_write(path) << report_to_json(report).dump(2) << '\n';
}

RunReport load_report(const std::filesystem::path& path) {
  return report_from_json(parse_json_file(path));
}

void save_histogram_csv(const std::filesystem::path& path, const Histogram& histogram) {
  auto out = open_for_write(path);
  for (std::size_t i = 0; i < histogram.schema.size(); ++i) {
    out << histogram.schema.labels()[i] << ',' << histogram.counts[i] << '\n';
  }
}

std::vector<std::pair<std::string, std::int64_t>> load_label_counts(
    const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<std::pair<std::string, std::int64_t>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string text = trimmed(line);
    if (text.empty()) continue;
    const auto comma = text.rfind(',');
    if (comma == std::string::npos || comma == 0) {
      throw ConfigError("bad histogram line '" + text + "' in " + path.string());
    }
    const std::string label = trimmed(text.substr(0, comma));
    const std::string count_text = trimmed(text.substr(comma + 1));
    try {
      rows.emplace_back(label, std::stoll(count_text));
    } catch (const std::exception&) {
      throw ConfigError("bad count '" + count_text + "' in " + path.string());
    }
  }
  if (rows.empty()) throw ConfigError("histogram file is empty: " + path.string());
  return rows;
}

MonkScale load_monk_scale(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::array<Rgb, MonkScale::kSwatches> swatches{};
  std::array<bool, MonkScale::kSwatches> seen{};
  std::string line;
  while (std::getline(in, line)) {
    const std::string text = trimmed(line);
    if (text.empty() || text.front() == '#') continue;
    std::istringstream fields(text);
    int index = 0;
    double r = 0, g = 0, b = 0;
    char sep = ',';
    if (!(fields >> index >> sep >> r >> sep >> g >> sep >> b)) {
      throw ConfigError("bad palette line '" + text + "' in " + path.string());
    }
    if (index < 1 || index > static_cast<int>(MonkScale::kSwatches)) {
      throw ConfigError("palette index out of range in " + path.string());
    }
    const auto slot = static_cast<std::size_t>(index - 1);
    if (seen[slot]) throw ConfigError("palette repeats index " + std::to_string(index));
    seen[slot] = true;
    swatches[slot] = Rgb{r, g, b};
  }
  for (bool s : seen) {
    if (!s) throw ConfigError("palette file must define all 10 swatches: " + path.string());
  }
  return MonkScale(swatches);
}

void save_monk_scale(const std::filesystem::path& path, const MonkScale& scale) {
  auto out = open_for_write(path);
  for (std::size_t i = 0; i < MonkScale::kSwatches; ++i) {
    const Rgb& c = scale.swatches()[i];
    out << (i + 1) << ", " << c.r << ", " << c.g << ", " << c.b << '\n';
  }
}

std::vector<AnnotationRow> load_annotation_rows(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<AnnotationRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string text = trimmed(line);
    if (text.empty() || text.front() == '#') continue;
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(',', c1 + 1);
    const auto c3 = c2 == std::string::npos ? std::string::npos : text.find(',', c2 + 1);
    if (c3 == std::string::npos) {
      throw ConfigError("bad annotation line '" + text + "' in " + path.string());
    }
    rows.push_back(AnnotationRow{trimmed(text.substr(0, c1)),
                                 trimmed(text.substr(c1 + 1, c2 - c1 - 1)),
                                 trimmed(text.substr(c2 + 1, c3 - c2 - 1)),
                                 trimmed(text.substr(c3 + 1))});
  }
  return rows;
}

std::vector<std::string> load_headlines(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<std::string> headlines;
  std::string line;
  while (std::getline(in, line)) {
    const std::string text = trimmed(line);
    if (!text.empty()) headlines.push_back(text);
  }
  return headlines;
}

}  // namespace debiaspi
