#include "debiaspi/attribute_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace debiaspi {

std::string_view to_string(SchemaKind kind) {
  return kind == SchemaKind::Nominal ? "nominal" : "ordinal";
}

SchemaKind schema_kind_from_string(std::string_view text) {
  if (text == "nominal") return SchemaKind::Nominal;
  if (text == "ordinal") return SchemaKind::Ordinal;
  throw ConfigError("unknown schema kind: " + std::string(text));
}

AttributeSchema::AttributeSchema(std::string name, SchemaKind kind,
                                 std::vector<std::string> labels)
    : name_(std::move(name)), kind_(kind), labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw ValidationError("schema '" + name_ + "' needs at least two labels");
  }
  std::set<std::string_view> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw ValidationError("schema '" + name_ + "' has an empty label");
    if (!seen.insert(label).second) {
      throw ValidationError("schema '" + name_ + "' repeats label '" + label + "'");
    }
  }
}

std::optional<std::size_t> AttributeSchema::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

TargetSpec TargetSpec::from_weights(AttributeSchema schema, std::vector<double> weights) {
  TargetSpec spec{std::move(schema), std::move(weights)};
  spec.validate();
  return spec;
}

TargetSpec TargetSpec::from_counts(AttributeSchema schema, std::vector<std::int64_t> counts) {
  TargetSpec spec{std::move(schema), std::move(counts)};
  spec.validate();
  return spec;
}

void TargetSpec::validate() const {
  if (is_counts()) {
    const auto& c = counts();
    if (c.size() != schema.size()) {
      throw ValidationError("target counts do not cover every label of '" + schema.name() + "'");
    }
    for (std::int64_t v : c) {
      if (v < 0) throw ValidationError("target counts must be non-negative");
    }
    return;
  }
  const auto& w = weights();
  if (w.size() != schema.size()) {
    throw ValidationError("target weights do not cover every label of '" + schema.name() + "'");
  }
  double total = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("target weights must be finite and non-negative");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "target weights sum to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
}

QuotaLedger::QuotaLedger(AttributeSchema schema, std::vector<std::int64_t> counts)
    : schema_(std::move(schema)), remaining_(std::move(counts)) {
  if (remaining_.size() != schema_.size()) {
    throw ValidationError("ledger counts do not cover every label of '" + schema_.name() + "'");
  }
  for (std::int64_t c : remaining_) {
    if (c < 0) throw ValidationError("ledger counts must be non-negative");
    total_target_ += c;
  }
}

std::int64_t QuotaLedger::remaining_of(std::size_t label_index) const {
  if (label_index >= remaining_.size()) throw ValidationError("label index out of range");
  return remaining_[label_index];
}

std::int64_t QuotaLedger::total_remaining() const {
  return std::accumulate(remaining_.begin(), remaining_.end(), std::int64_t{0});
}

bool QuotaLedger::converged() const {
  return std::all_of(remaining_.begin(), remaining_.end(),
                     [](std::int64_t c) { return c == 0; });
}

void QuotaLedger::decrement(std::size_t label_index) {
  if (label_index >= remaining_.size()) throw ValidationError("label index out of range");
  if (remaining_[label_index] <= 0) {
    throw ValidationError("decrement on depleted bin '" + schema_.labels()[label_index] + "'");
  }
  --remaining_[label_index];
  ++accepted_;
}

Histogram Histogram::zeros(AttributeSchema schema) {
  std::vector<std::int64_t> counts(schema.size(), 0);
  return Histogram{std::move(schema), std::move(counts)};
}

void Histogram::add(std::size_t label_index, std::int64_t by) {
  if (label_index >= counts.size()) throw ValidationError("label index out of range");
  counts[label_index] += by;
}

std::int64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::vector<std::int64_t> largest_remainder_apportion(std::span<const double> weights,
                                                      std::int64_t n) {
  if (n <= 0) throw ValidationError("apportionment size must be positive");
  if (weights.empty()) throw ValidationError("apportionment over an empty weight list");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("apportionment weights must be finite and non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("apportionment weights must sum to 1");
  }

  const std::size_t k = weights.size();
  std::vector<std::int64_t> counts(k, 0);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double quota = static_cast<double>(n) * weights[i];
    const double base = std::floor(quota);
    counts[i] = static_cast<std::int64_t>(base);
    assigned += counts[i];
    remainders[i] = {quota - base, i};
  }

  std::int64_t leftover = n - assigned;
  // sum(floor(quota)) <= n, and each leftover unit lands on a bin with a
  // positive remainder, which keeps every |count_i - n*w_i| under 1.
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t j = 0; leftover > 0 && j < k; ++j, --leftover) {
    ++counts[remainders[j].second];
  }
  if (leftover != 0) throw ValidationError("apportionment could not place every unit");
  return counts;
}

std::vector<std::int64_t> split_evenly(std::int64_t c, int groups) {
  if (c < 0 || groups <= 0) throw ValidationError("invalid even split");
  std::vector<std::int64_t> parts(static_cast<std::size_t>(groups));
  const std::int64_t base = c / groups;
  const std::int64_t extra = c % groups;
  for (int g = 0; g < groups; ++g) {
    parts[static_cast<std::size_t>(g)] = base + (g < extra ? 1 : 0);
  }
  return parts;
}

QuotaLedger quantize_target(const TargetSpec& spec, std::int64_t n) {
  if (n <= 0) throw ValidationError("generation target must be positive");
  spec.validate();
  if (spec.is_counts()) {
    const auto& c = spec.counts();
    const std::int64_t sum = std::accumulate(c.begin(), c.end(), std::int64_t{0});
    if (sum != n) {
      std::ostringstream msg;
      msg << "explicit target counts sum to " << sum << ", expected " << n;
      throw ValidationError(msg.str());
    }
    return QuotaLedger(spec.schema, c);
  }
  return QuotaLedger(spec.schema, largest_remainder_apportion(spec.weights(), n));
}

namespace schemas {

AttributeSchema gender_pair() {
  return AttributeSchema("gender", SchemaKind::Nominal, {"male", "female"});
}

AttributeSchema race9() {
  return AttributeSchema("race", SchemaKind::Nominal,
                         {"Black", "East Asian", "Hispanic or Latino", "Indigenous",
                          "Middle Eastern or North African",
                          "Native Hawaiian and Other Pacific Islander", "South Asian",
                          "Southeast Asian", "White"});
}

AttributeSchema codebook_gender3() {
  return AttributeSchema("gender3", SchemaKind::Nominal,
                         {"Male", "Female", "Unable to distinguish"});
}

AttributeSchema age_groups4() {
  return AttributeSchema("age", SchemaKind::Ordinal, {"1-18", "19-35", "36-64", "Seniors"});
}

AttributeSchema body_types3() {
  return AttributeSchema("body_type", SchemaKind::Nominal,
                         {"ectomorph", "mesomorph", "endomorph"});
}

AttributeSchema monk_groups3() {
  return AttributeSchema("monk_group", SchemaKind::Ordinal, {"Light", "Medium", "Dark"});
}

}  // namespace schemas

}  // namespace debiaspi
