#pragma once

// File formats and message schemas: target-spec configs, the message-level
// generation protocol, response fixtures, the trace journal, run reports,
// histogram CSVs, the Monk palette file, and annotation rows. JSON documents
// keep insertion order so serialization is byte-stable.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "debiaspi/attribute_model.hpp"
#include "debiaspi/belief.hpp"
#include "debiaspi/control_loop.hpp"
#include "debiaspi/generator.hpp"

namespace debiaspi {

using Json = nlohmann::ordered_json;

// --- schemas and target specs -------------------------------------------

Json schema_to_json(const AttributeSchema& schema);
AttributeSchema schema_from_json(const Json& j);

Json target_spec_to_json(const TargetSpec& spec);
TargetSpec target_spec_from_json(const Json& j);

TargetSpec load_target_spec(const std::filesystem::path& path);
void save_target_spec(const std::filesystem::path& path, const TargetSpec& spec);

// --- generation wire protocol (message level) ----------------------------

Json request_to_json(const GenerationRequest& request);
GenerationRequest request_from_json(const Json& j);

Json response_to_json(const GenerationResponse& response);
GenerationResponse response_from_json(const Json& j);

// Classifier adapter messages follow the same style.
Json classify_request_to_json(const std::string& image_ref, const AttributeSchema& schema);
Json classify_response_to_json(const std::string& label);
std::string classify_response_from_json(const Json& j);

// Fixture: one response message per line; blank lines are skipped.
std::vector<GenerationResponse> load_fixture(const std::filesystem::path& path);
void save_fixture(const std::filesystem::path& path,
                  const std::vector<GenerationResponse>& transcript);

// --- trace journal and run report ----------------------------------------

Json record_to_json(const GenerationRecord& record);
GenerationRecord record_from_json(const Json& j);

// Append-only journal: a tagged header line followed by one record per line,
// flushed per record so a crash still leaves a readable partial trace.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, Json header);

  void write(const GenerationRecord& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct TraceFile {
  Json header;
  std::vector<GenerationRecord> records;
};
TraceFile load_trace(const std::filesystem::path& path);

Json report_to_json(const RunReport& report);
RunReport report_from_json(const Json& j);
void save_report(const std::filesystem::path& path, const RunReport& report);
RunReport load_report(const std::filesystem::path& path);

// --- plain-text formats ----------------------------------------------------

// Histogram CSV: one "label,count" line per label. Labels may contain commas;
// the count is everything after the last one.
void save_histogram_csv(const std::filesystem::path& path, const Histogram& histogram);
std::vector<std::pair<std::string, std::int64_t>> load_label_counts(
    const std::filesystem::path& path);

// Monk palette file: ten "index, R, G, B" lines.
MonkScale load_monk_scale(const std::filesystem::path& path);
void save_monk_scale(const std::filesystem::path& path, const MonkScale& scale);

// Annotation row: "item_id,coder_id,schema_name,label". The label is
// everything after the third comma, so labels themselves may contain commas.
struct AnnotationRow {
  std::string item_id;
  std::string coder_id;
  std::string schema_name;
  std::string label;
};
std::vector<AnnotationRow> load_annotation_rows(const std::filesystem::path& path);

// Headline corpus: one headline per non-empty line.
std::vector<std::string> load_headlines(const std::filesystem::path& path);

}  // namespace debiaspi
