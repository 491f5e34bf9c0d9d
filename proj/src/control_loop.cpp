#include "debiaspi/control_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "debiaspi/metrics.hpp"

namespace debiaspi {

std::string_view to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::Accepted:
      return "accepted";
    case StepOutcome::RejectedRetry:
      return "rejected_retry";
    case StepOutcome::Exhausted:
      return "exhausted";
  }
  return "exhausted";
}

StepOutcome step_outcome_from_string(std::string_view text) {
  if (text == "accepted") return StepOutcome::Accepted;
  if (text == "rejected_retry") return StepOutcome::RejectedRetry;
  if (text == "exhausted") return StepOutcome::Exhausted;
  throw ConfigError("unknown step outcome: " + std::string(text));
}

void LoopConfig::validate() const {
  if (ledger.schema() != schema) {
    throw ValidationError("loop ledger belongs to a different schema");
  }
  belief.validate();
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (max_retries < 0) throw ValidationError("max retries must be non-negative");
  if (subgroups < 1) throw ValidationError("subgroup count must be at least 1");
  if (tier == PromptTier::Baseline) {
    throw ValidationError("the loop needs an attribute-aware prompt tier");
  }
}

std::vector<std::string> remaining_menu(const QuotaLedger& ledger) {
  std::vector<std::string> menu;
  const auto& labels = ledger.schema().labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (ledger.remaining()[i] > 0) menu.push_back(labels[i]);
  }
  return menu;
}

std::string build_prompt(PromptTier tier, const std::string& headline,
                         std::span<const std::string> menu,
                         std::span<const std::int64_t> remaining_counts) {
  std::ostringstream out;
  out << "Generate a photograph of a single person, facing forward, that visualizes "
         "this news headline: \""
      << headline << "\".";
  if (tier == PromptTier::Baseline) return out.str();

  if (tier == PromptTier::AttributeList) {
    out << " Choose one attribute for the person from [";
    for (std::size_t i = 0; i < menu.size(); ++i) {
      if (i) out << ", ";
      out << menu[i];
    }
    out << "].";
  } else {
    out << " Choose one attribute for the person according to the remaining quota {";
    for (std::size_t i = 0; i < menu.size(); ++i) {
      if (i) out << ", ";
      out << menu[i] << ": " << (i < remaining_counts.size() ? remaining_counts[i] : 0);
    }
    out << "}.";
  }
  out << " Report the chosen attribute together with the image.";
  return out.str();
}

namespace {

std::vector<std::int64_t> menu_counts(const QuotaLedger& ledger,
                                      std::span<const std::string> menu) {
  std::vector<std::int64_t> counts;
  counts.reserve(menu.size());
  for (const auto& label : menu) {
    counts.push_back(ledger.remaining_of(*ledger.schema().index_of(label)));
  }
  return counts;
}

void emit(const RecordSink& sink, const GenerationRecord& record) {
  if (sink) sink(record);
}

GenerationRequest make_request(const LoopConfig& config, const std::string& headline,
                               std::vector<std::string> menu,
                               std::span<const std::int64_t> counts) {
  GenerationRequest request;
  request.tier = config.tier;
  request.prompt_text = build_prompt(config.tier, headline, menu, counts);
  request.menu = std::move(menu);
  request.batch_hint = config.batch_size;
  return request;
}

GenerationResponse call_backend(GenerationBackend& backend, const GenerationRequest& request,
                                GenerationRecord in_flight, const RecordSink& sink) {
  try {
    return backend.generate(request);
  } catch (const BackendError& error) {
    in_flight.outcome = StepOutcome::Exhausted;
    emit(sink, in_flight);
    throw StepBackendError(error.what(), std::move(in_flight));
  }
}

// Resolves the attribute of a response; a missing claim under internal belief
// is a malformed backend reply.
std::string believe(const LoopConfig& config, const GenerationResponse& response,
                    GenerationRecord& record, const RecordSink& sink) {
  record.claimed = response.claimed_label;
  if (config.belief.mode == BeliefMode::Internal && !response.claimed_label) {
    record.outcome = StepOutcome::Exhausted;
    emit(sink, record);
    throw StepBackendError("backend reply claims no attribute on an attribute-aware tier",
                           record);
  }
  return resolve_attribute(config.belief, response, config.schema);
}

// Tracks the cumulative accepted histogram so Accepted records can carry the
// running deviation from the target weights.
class DeviationTracker {
 public:
  DeviationTracker(const AttributeSchema& schema, const std::vector<std::int64_t>& target_counts)
      : cumulative_(Histogram::zeros(schema)) {
    const double total = static_cast<double>(
        std::accumulate(target_counts.begin(), target_counts.end(), std::int64_t{0}));
    target_weights_.reserve(target_counts.size());
    for (std::int64_t c : target_counts) {
      target_weights_.push_back(static_cast<double>(c) / total);
    }
  }

  double on_accept(std::size_t label_index) {
    cumulative_.add(label_index);
    const double total = static_cast<double>(cumulative_.total());
    double sum = 0.0;
    for (std::size_t i = 0; i < target_weights_.size(); ++i) {
      sum += std::abs(static_cast<double>(cumulative_.counts[i]) / total - target_weights_[i]);
    }
    return 0.5 * sum;
  }

 private:
  Histogram cumulative_;
  std::vector<double> target_weights_;
};

// Validates one response against the live ledger and retries against the
// live menu until acceptance or retry exhaustion. Returns the final record.
GenerationRecord settle_slot(const LoopConfig& config, GenerationBackend& backend,
                             QuotaLedger& ledger, const std::string& headline, int iteration,
                             int subgroup, std::vector<std::string> offered_menu,
                             GenerationResponse response, DeviationTracker* deviation,
                             const RecordSink& sink) {
  GenerationRecord record;
  record.iteration = iteration;
  record.subgroup = subgroup;
  record.headline = headline;
  record.menu = std::move(offered_menu);

  for (int attempt = 0;; ++attempt) {
    record.retries_used = attempt;
    const std::string believed = believe(config, response, record, sink);
    record.believed = believed;

    const auto index = config.schema.index_of(believed);
    const bool in_menu =
        index && ledger.remaining_of(*index) > 0 &&
        std::find(record.menu.begin(), record.menu.end(), believed) != record.menu.end();
    if (in_menu) {
      ledger.decrement(*index);
      record.outcome = StepOutcome::Accepted;
      if (deviation) record.running_tv = deviation->on_accept(*index);
      emit(sink, record);
      return record;
    }

    if (attempt >= config.max_retries) {
      record.outcome = StepOutcome::Exhausted;
      emit(sink, record);
      return record;
    }

    record.outcome = StepOutcome::RejectedRetry;
    emit(sink, record);

    // Retry against the live menu.
    auto live_menu = remaining_menu(ledger);
    const auto counts = menu_counts(ledger, live_menu);
    record.menu = live_menu;
    record.claimed.reset();
    record.believed.reset();
    record.running_tv.reset();
    GenerationRecord in_flight = record;
    in_flight.retries_used = attempt + 1;
    response = call_backend(backend, make_request(config, headline, std::move(live_menu), counts),
                            std::move(in_flight), sink);
  }
}

RunReport finalize_report(const LoopConfig& config, std::vector<GenerationRecord> records,
                          int iterations, int unmatched, bool aborted) {
  RunReport report(config.schema, histogram_of(records, BeliefField::Believed, config.schema),
                   Histogram{config.schema, config.ledger.remaining()});
  report.records = std::move(records);
  report.iterations = iterations;
  report.unmatched = unmatched;
  report.converged =
      !aborted && unmatched == 0 && report.final_histogram == report.target_histogram;

  if (report.final_histogram.total() > 0) {
    const auto final_dist = ProbDist::from_histogram(report.final_histogram);
    const auto target_dist = ProbDist::from_histogram(report.target_histogram);
    report.js_div = js_divergence(final_dist, target_dist);
    report.emd = emd(final_dist, target_dist, default_ground_distance(config.schema));
    report.tv = total_variation(final_dist, target_dist);
  } else {
    report.js_div = std::numeric_limits<double>::quiet_NaN();
    report.emd = std::numeric_limits<double>::quiet_NaN();
    report.tv = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace

GenerationRecord step(const LoopConfig& config, GenerationBackend& backend, QuotaLedger& ledger,
                      const std::string& headline, int iteration, int subgroup,
                      const RecordSink& sink) {
  config.validate();
  if (ledger.converged()) throw ValidationError("step on a converged ledger");

  auto menu = remaining_menu(ledger);
  const auto counts = menu_counts(ledger, menu);
  GenerationRecord in_flight;
  in_flight.iteration = iteration;
  in_flight.subgroup = subgroup;
  in_flight.headline = headline;
  in_flight.menu = menu;
  auto response = call_backend(
      backend, make_request(config, headline, menu, counts), std::move(in_flight), sink);
  return settle_slot(config, backend, ledger, headline, iteration, subgroup, std::move(menu),
                     std::move(response), nullptr, sink);
}

RunReport run(const LoopConfig& config, GenerationBackend& backend,
              const std::vector<std::string>& headlines, const RecordSink& sink) {
  config.validate();
  if (static_cast<std::int64_t>(headlines.size()) < config.ledger.total_target()) {
    throw ValidationError("headline corpus is smaller than the generation target");
  }

  auto subledgers = split_into_subgroups(config.ledger, config.subgroups);
  DeviationTracker deviation(config.schema, config.ledger.remaining());

  std::vector<GenerationRecord> records;
  int iteration = 0;
  int unmatched = 0;
  std::size_t headline_cursor = 0;
  bool aborted = false;

  const RecordSink collect = [&](const GenerationRecord& record) {
    records.push_back(record);
    emit(sink, record);
  };

  for (int g = 0; g < static_cast<int>(subledgers.size()) && !aborted; ++g) {
    QuotaLedger& ledger = subledgers[static_cast<std::size_t>(g)];
    while (!ledger.converged() && !aborted) {
      // The whole batch is issued against the menu snapshot; acceptance and
      // decrements happen sequentially in response order, and a response
      // whose bin depleted mid-batch counts as non-compliant.
      const auto snapshot_menu = remaining_menu(ledger);
      const auto snapshot_counts = menu_counts(ledger, snapshot_menu);
      const std::int64_t slots =
          std::min<std::int64_t>(config.batch_size, ledger.total_remaining());

      struct PendingSlot {
        int iteration;
        std::string headline;
        GenerationResponse response;
      };
      std::vector<PendingSlot> pending;
      pending.reserve(static_cast<std::size_t>(slots));
      for (std::int64_t s = 0; s < slots; ++s) {
        const std::string& headline = headlines[headline_cursor % headlines.size()];
        ++headline_cursor;
        ++iteration;
        GenerationRecord in_flight;
        in_flight.iteration = iteration;
        in_flight.subgroup = g;
        in_flight.headline = headline;
        in_flight.menu = snapshot_menu;
        try {
          auto response =
              backend.generate(make_request(config, headline, snapshot_menu, snapshot_counts));
          pending.push_back({iteration, headline, std::move(response)});
        } catch (const BackendError& error) {
          // Settle what the batch already produced so the trace stays
          // faithful, then surface the failure.
          for (auto& slot : pending) {
            const auto record =
                settle_slot(config, backend, ledger, slot.headline, slot.iteration, g,
                            snapshot_menu, std::move(slot.response), &deviation, collect);
            if (record.outcome == StepOutcome::Exhausted) ++unmatched;
          }
          in_flight.outcome = StepOutcome::Exhausted;
          collect(in_flight);
          throw StepBackendError(error.what(), std::move(in_flight));
        }
      }

      for (auto& slot : pending) {
        const auto record = settle_slot(config, backend, ledger, slot.headline, slot.iteration,
                                        g, snapshot_menu, std::move(slot.response), &deviation,
                                        collect);
        if (record.outcome == StepOutcome::Exhausted) {
          ++unmatched;
          aborted = true;  // the batch still settles, then the run stops
        }
      }
    }
  }

  return finalize_report(config, std::move(records), iteration, unmatched, aborted);
}

RunReport run_ablation(const LoopConfig& config, GenerationBackend& backend,
                       const std::vector<std::string>& headlines, const RecordSink& sink) {
  config.validate();
  const std::int64_t total = config.ledger.total_target();
  if (static_cast<std::int64_t>(headlines.size()) < total) {
    throw ValidationError("headline corpus is smaller than the generation target");
  }

  // Quota tracking disabled: the full menu and the static target counts are
  // offered on every request, and nothing is ever decremented. The scratch
  // ledger holds total+1 per bin so no bin can deplete within the run.
  const auto full_menu = config.schema.labels();
  const auto target_counts = config.ledger.remaining();
  QuotaLedger open_ledger(
      config.schema, std::vector<std::int64_t>(config.schema.size(), total + 1));
  DeviationTracker deviation(config.schema, target_counts);

  std::vector<GenerationRecord> records;
  int iteration = 0;
  int unmatched = 0;
  std::size_t headline_cursor = 0;
  bool aborted = false;

  const RecordSink collect = [&](const GenerationRecord& record) {
    records.push_back(record);
    emit(sink, record);
  };

  while (iteration < total && !aborted) {
    const std::int64_t slots = std::min<std::int64_t>(config.batch_size, total - iteration);
    struct PendingSlot {
      int iteration;
      std::string headline;
      GenerationResponse response;
    };
    std::vector<PendingSlot> pending;
    pending.reserve(static_cast<std::size_t>(slots));
    for (std::int64_t s = 0; s < slots; ++s) {
      const std::string& headline = headlines[headline_cursor % headlines.size()];
      ++headline_cursor;
      ++iteration;
      GenerationRecord in_flight;
      in_flight.iteration = iteration;
      in_flight.headline = headline;
      in_flight.menu = full_menu;
      try {
        auto response =
            backend.generate(make_request(config, headline, full_menu, target_counts));
        pending.push_back({iteration, headline, std::move(response)});
      } catch (const BackendError& error) {
        for (auto& slot : pending) {
          const auto record =
              settle_slot(config, backend, open_ledger, slot.headline, slot.iteration, 0,
                          full_menu, std::move(slot.response), &deviation, collect);
          if (record.outcome == StepOutcome::Exhausted) ++unmatched;
        }
        in_flight.outcome = StepOutcome::Exhausted;
        collect(in_flight);
        throw StepBackendError(error.what(), std::move(in_flight));
      }
    }
    for (auto& slot : pending) {
      const auto record = settle_slot(config, backend, open_ledger, slot.headline,
                                      slot.iteration, 0, full_menu, std::move(slot.response),
                                      &deviation, collect);
      if (record.outcome == StepOutcome::Exhausted) {
        ++unmatched;
        aborted = true;
      }
    }
  }

  return finalize_report(config, std::move(records), iteration, unmatched, aborted);
}

std::vector<QuotaLedger> split_into_subgroups(const QuotaLedger& ledger, int groups) {
  if (groups < 1) throw ValidationError("subgroup count must be at least 1");
  if (groups == 1) return {ledger};

  const std::size_t k = ledger.schema().size();
  std::vector<std::vector<std::int64_t>> counts(
      static_cast<std::size_t>(groups), std::vector<std::int64_t>(k, 0));
  for (std::size_t label = 0; label < k; ++label) {
    const auto parts = split_evenly(ledger.remaining()[label], groups);
    for (int g = 0; g < groups; ++g) {
      counts[static_cast<std::size_t>(g)][label] = parts[static_cast<std::size_t>(g)];
    }
  }

  std::vector<QuotaLedger> out;
  out.reserve(static_cast<std::size_t>(groups));
  for (auto& c : counts) out.emplace_back(ledger.schema(), std::move(c));
  return out;
}

Histogram histogram_of(std::span<const GenerationRecord> records, BeliefField which,
                       const AttributeSchema& schema) {
  Histogram histogram = Histogram::zeros(schema);
  for (const auto& record : records) {
    if (record.outcome != StepOutcome::Accepted) continue;
    const auto& label = which == BeliefField::Claimed ? record.claimed : record.believed;
    if (!label) throw ValidationError("accepted record is missing its label");
    const auto index = schema.index_of(*label);
    if (!index) {
      throw ValidationError("record label '" + *label + "' belongs to a different schema");
    }
    histogram.add(*index);
  }
  return histogram;
}

}  // namespace debiaspi
