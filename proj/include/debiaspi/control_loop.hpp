#pragma once

// The quota-steering engine. Each step offers the backend a menu of
// non-depleted labels, validates the resolved attribute against that menu,
// decrements the matching bin on acceptance, and retries non-compliant
// outputs up to a bound. A run iterates steps in batches until the ledger
// empties or a slot exhausts its retries.
//
// The loop is a sequential state machine: ledger updates are strictly
// serialized, and the engine may move between threads but not be shared
// during a run.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "debiaspi/attribute_model.hpp"
#include "debiaspi/belief.hpp"
#include "debiaspi/generator.hpp"

namespace debiaspi {

enum class StepOutcome { Accepted, RejectedRetry, Exhausted };

std::string_view to_string(StepOutcome outcome);
StepOutcome step_outcome_from_string(std::string_view text);

// One backend attempt. A step that retries emits a RejectedRetry record per
// failed attempt followed by one Accepted or Exhausted record.
struct GenerationRecord {
  int iteration = 0;  // 1-based step the attempt belongs to
  int subgroup = 0;   // 0-based sub-run index
  std::string headline;
  std::vector<std::string> menu;  // labels offered on this attempt
  std::optional<std::string> claimed;
  std::optional<std::string> believed;
  StepOutcome outcome = StepOutcome::RejectedRetry;
  int retries_used = 0;  // retries consumed up to and including this attempt
  // Total-variation distance between the cumulative accepted histogram and
  // the target weights; set on Accepted records.
  std::optional<double> running_tv;
};

struct LoopConfig {
  AttributeSchema schema;
  QuotaLedger ledger;  // quantized target, untouched by the run itself
  BeliefSource belief = BeliefSource::internal();
  int batch_size = 5;
  int max_retries = 10;
  int subgroups = 1;
  PromptTier tier = PromptTier::AttributeDistribution;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RunReport {
  AttributeSchema schema;
  std::vector<GenerationRecord> records;
  Histogram final_histogram;   // believed labels of accepted records
  Histogram target_histogram;  // the quantized target
  double js_div = 0.0;
  double emd = 0.0;
  double tv = 0.0;
  bool converged = false;
  int iterations = 0;  // steps executed (accepted + exhausted slots)
  int unmatched = 0;   // exhausted slots

  RunReport(AttributeSchema schema_, Histogram final_h, Histogram target_h)
      : schema(std::move(schema_)),
        final_histogram(std::move(final_h)),
        target_histogram(std::move(target_h)) {}
};

using RecordSink = std::function<void(const GenerationRecord&)>;

// Backend failure wrapped with the attempt that was in flight. Records
// emitted before the failure have already reached the sink.
class StepBackendError : public BackendError {
 public:
  StepBackendError(const std::string& what, GenerationRecord partial)
      : BackendError(what), partial_(std::move(partial)) {}

  const GenerationRecord& partial_record() const { return partial_; }

 private:
  GenerationRecord partial_;
};

// Labels with remaining quota, in schema order; empty iff converged.
std::vector<std::string> remaining_menu(const QuotaLedger& ledger);

// Prompt text for the three intervention tiers. The distribution tier lists
// the remaining per-label counts aligned with the menu.
std::string build_prompt(PromptTier tier, const std::string& headline,
                         std::span<const std::string> menu,
                         std::span<const std::int64_t> remaining_counts);

// One slot: request against the current menu, validate, decrement on
// acceptance, retry up to config.max_retries, else mark Exhausted and leave
// the ledger untouched. Every attempt is forwarded to the sink; the returned
// record is the step's final outcome.
GenerationRecord step(const LoopConfig& config, GenerationBackend& backend, QuotaLedger& ledger,
                      const std::string& headline, int iteration, int subgroup = 0,
                      const RecordSink& sink = {});

// Full run: subgroup partition, batched steps against menu snapshots with
// sequential validation, and a report with divergence scores. A slot that
// exhausts its retries finishes the batch and then aborts the run
// (converged = false); backend failures propagate as StepBackendError.
RunReport run(const LoopConfig& config, GenerationBackend& backend,
              const std::vector<std::string>& headlines, const RecordSink& sink = {});

// Identical pipeline with quota tracking disabled: the ledger is never
// decremented and the menu is always the full label set, so the final
// histogram reflects the backend's own bias.
RunReport run_ablation(const LoopConfig& config, GenerationBackend& backend,
                       const std::vector<std::string>& headlines, const RecordSink& sink = {});

// Partitions a target into `groups` sub-ledgers, apportioning each label's
// count evenly (largest remainder over subgroups). Concatenated sub-ledgers
// sum to the original target exactly.
std::vector<QuotaLedger> split_into_subgroups(const QuotaLedger& ledger, int groups);

enum class BeliefField { Claimed, Believed };

// Histogram over accepted records only; rejected and exhausted attempts are
// excluded. Errors when an accepted label falls outside the schema.
Histogram histogram_of(std::span<const GenerationRecord> records, BeliefField which,
                       const AttributeSchema& schema);

}  // namespace debiaspi
