#pragma once

// Attribute schemas, target distributions, and the quota ledger that the
// control loop decrements toward convergence.
//
// Schemas and target specs are immutable values and freely shareable.
// QuotaLedger mutation must be serialized by the caller; the type provides
// no internal locking.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "debiaspi/errors.hpp"

namespace debiaspi {

enum class SchemaKind { Nominal, Ordinal };

std::string_view to_string(SchemaKind kind);
SchemaKind schema_kind_from_string(std::string_view text);

// A demographic attribute: a named, ordered list of category labels.
// Ordinal schemas treat the label index as the ground-distance coordinate.
class AttributeSchema {
 public:
  AttributeSchema(std::string name, SchemaKind kind, std::vector<std::string> labels);

  const std::string& name() const { return name_; }
  SchemaKind kind() const { return kind_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  std::optional<std::size_t> index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label).has_value(); }

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

 private:
  std::string name_;
  SchemaKind kind_;
  std::vector<std::string> labels_;
};

// Desired distribution over a schema: fractional weights summing to 1, or
// explicit per-label integer counts.
struct TargetSpec {
  AttributeSchema schema;
  std::variant<std::vector<double>, std::vector<std::int64_t>> shape;

  static TargetSpec from_weights(AttributeSchema schema, std::vector<double> weights);
  static TargetSpec from_counts(AttributeSchema schema, std::vector<std::int64_t> counts);

  bool is_counts() const { return std::holds_alternative<std::vector<std::int64_t>>(shape); }
  const std::vector<double>& weights() const { return std::get<std::vector<double>>(shape); }
  const std::vector<std::int64_t>& counts() const {
    return std::get<std::vector<std::int64_t>>(shape);
  }

  void validate() const;
};

// Per-label remaining quota. Invariant at every step:
//   sum(remaining) + accepted == total_target, and no bin is negative.
// Converged means every remaining count is zero.
class QuotaLedger {
 public:
  QuotaLedger(AttributeSchema schema, std::vector<std::int64_t> counts);

  const AttributeSchema& schema() const { return schema_; }
  const std::vector<std::int64_t>& remaining() const { return remaining_; }
  std::int64_t remaining_of(std::size_t label_index) const;
  std::int64_t total_target() const { return total_target_; }
  std::int64_t accepted() const { return accepted_; }
  std::int64_t total_remaining() const;
  bool converged() const;

  // Consumes one unit of the bin. Throws ValidationError on an empty bin.
  void decrement(std::size_t label_index);

 private:
  AttributeSchema schema_;
  std::vector<std::int64_t> remaining_;
  std::int64_t total_target_ = 0;
  std::int64_t accepted_ = 0;
};

// Per-label counts of a realized distribution.
struct Histogram {
  AttributeSchema schema;
  std::vector<std::int64_t> counts;

  static Histogram zeros(AttributeSchema schema);
  void add(std::size_t label_index, std::int64_t by = 1);
  std::int64_t total() const;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

// Largest-remainder split of n whole units proportional to weights: floor
// each share, then hand leftover units to the largest fractional remainders,
// breaking ties toward the lower index. Guarantees sum(counts) == n and
// |count_i - n*w_i| < 1.
std::vector<std::int64_t> largest_remainder_apportion(std::span<const double> weights,
                                                      std::int64_t n);

// c whole units over `groups` equal parts; the first c % groups parts get the
// extra unit. Equals largest-remainder apportionment with uniform weights.
std::vector<std::int64_t> split_evenly(std::int64_t c, int groups);

// Integer quota for n generations. Explicit counts pass through (their sum
// must equal n); fractional weights go through largest-remainder rounding.
QuotaLedger quantize_target(const TargetSpec& spec, std::int64_t n);

namespace schemas {

// Two-option gender attribute used by generation experiments.
AttributeSchema gender_pair();
// The nine-race categorization used throughout.
AttributeSchema race9();
// Codebook attributes for human annotation.
AttributeSchema codebook_gender3();
AttributeSchema age_groups4();
AttributeSchema body_types3();
AttributeSchema monk_groups3();

}  // namespace schemas

}  // namespace debiaspi
