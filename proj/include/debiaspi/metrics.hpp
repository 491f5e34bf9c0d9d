#pragma once

// Distribution-comparison metrics and batch-coverage analysis.
//
// All operations are pure and safe for unrestricted concurrent use; the
// Monte-Carlo simulation takes an explicit seed and is sequential per call.

#include <cstdint>
#include <span>
#include <vector>

#include "debiaspi/attribute_model.hpp"

namespace debiaspi {

// Normalized distribution over a schema's labels; probabilities sum to 1
// within 1e-9.
struct ProbDist {
  AttributeSchema schema;
  std::vector<double> probs;

  static ProbDist from_weights(AttributeSchema schema, std::vector<double> weights);
  // Errors on an empty histogram.
  static ProbDist from_histogram(const Histogram& histogram);
};

enum class GroundDistanceKind { Unit, Linear, Custom };

// Pairwise bin distance for the earth mover's distance. Unit (0/1) suits
// nominal attributes; Linear (|i-j|) suits ordinal ones. Custom matrices must
// be symmetric with a zero diagonal and non-negative entries.
class GroundDistance {
 public:
  static GroundDistance unit(std::size_t bins);
  static GroundDistance linear(std::size_t bins);
  static GroundDistance custom(std::vector<std::vector<double>> matrix);

  GroundDistanceKind kind() const { return kind_; }
  std::size_t bins() const { return bins_; }
  double operator()(std::size_t i, std::size_t j) const;

 private:
  GroundDistance(GroundDistanceKind kind, std::size_t bins,
                 std::vector<std::vector<double>> matrix)
      : kind_(kind), bins_(bins), matrix_(std::move(matrix)) {}

  GroundDistanceKind kind_;
  std::size_t bins_;
  std::vector<std::vector<double>> matrix_;  // empty for presets
};

// Preset matching a schema: Unit for nominal, Linear for ordinal.
GroundDistance default_ground_distance(const AttributeSchema& schema);

// Jensen-Shannon divergence, base-2 logarithm, bounded to [0, 1].
// 0 * log(0/x) counts as 0.
double js_divergence(const ProbDist& p, const ProbDist& q);

double total_variation(const ProbDist& p, const ProbDist& q);

// Minimum transport cost between p and q under d, normalized by total flow.
// Linear preset distances use the 1-D closed form; everything else goes
// through the exact transportation solve.
double emd(const ProbDist& p, const ProbDist& q, const GroundDistance& d);

// CDF-difference closed form for unit-spaced 1-D bins.
double emd_linear_1d(const ProbDist& p, const ProbDist& q);

// Exact minimum-cost transportation solve for an arbitrary ground distance.
double emd_exact(const ProbDist& p, const ProbDist& q, const GroundDistance& d);

// Transportation simplex over raw marginals (sums must match within 1e-9);
// returns cost / total flow.
double solve_transportation(std::span<const double> supply, std::span<const double> demand,
                            const GroundDistance& d);

// Per-category coverage odds when each trial draws `batch` distinct
// categories uniformly from `categories`.
struct CoverageAnalysis {
  int categories = 0;
  int batch = 0;
  int trials = 0;
  std::uint64_t p_num = 0;  // exact rational coverage probability
  std::uint64_t p_den = 1;
  double p = 0.0;
  double expected = 0.0;  // trials * p
  double sigma = 0.0;     // sqrt(trials * p * (1 - p))
};

CoverageAnalysis coverage_analysis(int categories, int batch, int trials);

struct CategoryShare {
  double mean_pct = 0.0;
  double min_pct = 0.0;
  double max_pct = 0.0;
  double mean_count = 0.0;
};

struct CoverageSimulation {
  int categories = 0;
  int batch = 0;
  int trials = 0;
  std::int64_t runs = 0;
  std::vector<CategoryShare> per_category;
};

// Monte Carlo over `runs` replications of `trials` batches, each batch
// drawing min(batch, categories) distinct categories uniformly.
CoverageSimulation coverage_simulation(int categories, int batch, int trials, std::int64_t runs,
                                       std::uint64_t seed);

}  // namespace debiaspi
