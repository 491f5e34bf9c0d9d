#include "debiaspi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "debiaspi/rng.hpp"

namespace debiaspi {

namespace {

void require_same_schema(const ProbDist& p, const ProbDist& q) {
  if (p.schema != q.schema) {
    throw ValidationError("distributions compare different schemas: '" + p.schema.name() +
                          "' vs '" + q.schema.name() + "'");
  }
}

void require_matching_distance(const ProbDist& p, const GroundDistance& d) {
  if (d.bins() != p.schema.size()) {
    throw ValidationError("ground distance covers " + std::to_string(d.bins()) +
                          " bins, schema has " + std::to_string(p.schema.size()));
  }
}

}  // namespace

ProbDist ProbDist::from_weights(AttributeSchema schema, std::vector<double> weights) {
  if (weights.size() != schema.size()) {
    throw ValidationError("probability vector does not cover every label");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("probabilities must be finite and non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "probabilities sum to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
  return ProbDist{std::move(schema), std::move(weights)};
}

ProbDist ProbDist::from_histogram(const Histogram& histogram) {
  const std::int64_t total = histogram.total();
  if (total <= 0) throw ValidationError("cannot normalize an empty histogram");
  std::vector<double> probs(histogram.counts.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = static_cast<double>(histogram.counts[i]) / static_cast<double>(total);
  }
  return ProbDist{histogram.schema, std::move(probs)};
}

GroundDistance GroundDistance::unit(std::size_t bins) {
  return GroundDistance(GroundDistanceKind::Unit, bins, {});
}

GroundDistance GroundDistance::linear(std::size_t bins) {
  return GroundDistance(GroundDistanceKind::Linear, bins, {});
}

GroundDistance GroundDistance::custom(std::vector<std::vector<double>> matrix) {
  const std::size_t k = matrix.size();
  if (k == 0) throw ValidationError("empty ground-distance matrix");
  for (std::size_t i = 0; i < k; ++i) {
    if (matrix[i].size() != k) throw ValidationError("ground-distance matrix must be square");
    if (matrix[i][i] != 0.0) throw ValidationError("ground distance must have a zero diagonal");
    for (std::size_t j = 0; j < k; ++j) {
      if (!std::isfinite(matrix[i][j]) || matrix[i][j] < 0.0) {
        throw ValidationError("ground distance must be finite and non-negative");
      }
      if (matrix[i][j] != matrix[j][i]) {
        throw ValidationError("ground distance must be symmetric");
      }
    }
  }
  return GroundDistance(GroundDistanceKind::Custom, k, std::move(matrix));
}

double GroundDistance::operator()(std::size_t i, std::size_t j) const {
  switch (kind_) {
    case GroundDistanceKind::Unit:
      return i == j ? 0.0 : 1.0;
    case GroundDistanceKind::Linear:
      return i > j ? static_cast<double>(i - j) : static_cast<double>(j - i);
    case GroundDistanceKind::Custom:
      return matrix_[i][j];
  }
  return 0.0;
}

GroundDistance default_ground_distance(const AttributeSchema& schema) {
  return schema.kind() == SchemaKind::Ordinal ? GroundDistance::linear(schema.size())
                                              : GroundDistance::unit(schema.size());
}

double js_divergence(const ProbDist& p, const ProbDist& q) {
  require_same_schema(p, q);
  double js = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    const double pi = p.probs[i];
    const double qi = q.probs[i];
    const double mi = 0.5 * (pi + qi);
    if (pi > 0.0) js += 0.5 * pi * std::log2(pi / mi);
    if (qi > 0.0) js += 0.5 * qi * std::log2(qi / mi);
  }
  return std::max(js, 0.0);
}

double total_variation(const ProbDist& p, const ProbDist& q) {
  require_same_schema(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    sum += std::abs(p.probs[i] - q.probs[i]);
  }
  return 0.5 * sum;
}

double emd(const ProbDist& p, const ProbDist& q, const GroundDistance& d) {
  require_same_schema(p, q);
  require_matching_distance(p, d);
  if (d.kind() == GroundDistanceKind::Linear) return emd_linear_1d(p, q);
  return emd_exact(p, q, d);
}

double emd_linear_1d(const ProbDist& p, const ProbDist& q) {
  require_same_schema(p, q);
  double cum = 0.0;
  double cost = 0.0;
  for (std::size_t i = 0; i + 1 < p.probs.size(); ++i) {
    cum += p.probs[i] - q.probs[i];
    cost += std::abs(cum);
  }
  return cost;
}

double emd_exact(const ProbDist& p, const ProbDist& q, const GroundDistance& d) {
  require_same_schema(p, q);
  require_matching_distance(p, d);
  return solve_transportation(p.probs, q.probs, d);
}

namespace {

// Transportation simplex. Bland's pivoting rule (first negative reduced cost
// entering, lexicographically smallest leaving) makes the walk finite even on
// degenerate bases; duals are recomputed from scratch each pivot so rounding
// never accumulates.
class TransportationSimplex {
 public:
  TransportationSimplex(std::vector<double> supply, std::vector<double> demand,
                        std::vector<std::vector<double>> cost)
      : supply_(std::move(supply)),
        demand_(std::move(demand)),
        cost_(std::move(cost)),
        m_(supply_.size()),
        n_(demand_.size()),
        flow_(m_, std::vector<double>(n_, 0.0)),
        basic_(m_, std::vector<char>(n_, 0)) {}

  double solve() {
    northwest_corner();
    double max_cost = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) max_cost = std::max(max_cost, cost_[i][j]);
    }
    const double eps = 1e-11 * std::max(1.0, max_cost);

    const int pivot_limit = 100000;
    for (int pivots = 0; pivots <= pivot_limit; ++pivots) {
      compute_duals();
      std::size_t ei = 0, ej = 0;
      if (!find_entering(eps, ei, ej)) return objective();
      pivot(ei, ej);
    }
    throw std::logic_error("transportation solve exceeded its pivot budget");
  }

 private:
  void northwest_corner() {
    std::vector<double> sr = supply_;
    std::vector<double> dr = demand_;
    std::size_t i = 0, j = 0;
    for (;;) {
      const double x = std::min(sr[i], dr[j]);
      flow_[i][j] = x;
      basic_[i][j] = 1;
      sr[i] -= x;
      dr[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (sr[i] == 0.0 && i < m_ - 1) {
        ++i;
      } else if (j < n_ - 1) {
        ++j;
      } else {
        ++i;  // rounding residue in the last column
      }
    }
  }

  void compute_duals() {
    u_.assign(m_, std::numeric_limits<double>::quiet_NaN());
    v_.assign(n_, std::numeric_limits<double>::quiet_NaN());
    row_partners_.assign(m_, {});
    col_partners_.assign(n_, {});
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (basic_[i][j]) {
          row_partners_[i].push_back(j);
          col_partners_[j].push_back(i);
        }
      }
    }
    u_[0] = 0.0;
    std::vector<std::size_t> stack = {0};  // node id: rows [0, m), cols [m, m+n)
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      if (node < m_) {
        for (std::size_t j : row_partners_[node]) {
          if (std::isnan(v_[j])) {
            v_[j] = cost_[node][j] - u_[node];
            stack.push_back(m_ + j);
          }
        }
      } else {
        const std::size_t j = node - m_;
        for (std::size_t i : col_partners_[j]) {
          if (std::isnan(u_[i])) {
            u_[i] = cost_[i][j] - v_[j];
            stack.push_back(i);
          }
        }
      }
    }
  }

  bool find_entering(double eps, std::size_t& ei, std::size_t& ej) const {
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (!basic_[i][j] && cost_[i][j] - u_[i] - v_[j] < -eps) {
          ei = i;
          ej = j;
          return true;
        }
      }
    }
    return false;
  }

  void pivot(std::size_t ei, std::size_t ej) {
    // Unique basis-tree path from row ei to column ej.
    const std::size_t nodes = m_ + n_;
    std::vector<std::size_t> parent(nodes, nodes);
    std::vector<char> seen(nodes, 0);
    std::vector<std::size_t> stack = {ei};
    seen[ei] = 1;
    const std::size_t target = m_ + ej;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      if (node == target) break;
      if (node < m_) {
        for (std::size_t j : row_partners_[node]) {
          if (!seen[m_ + j]) {
            seen[m_ + j] = 1;
            parent[m_ + j] = node;
            stack.push_back(m_ + j);
          }
        }
      } else {
        for (std::size_t i : col_partners_[node - m_]) {
          if (!seen[i]) {
            seen[i] = 1;
            parent[i] = node;
            stack.push_back(i);
          }
        }
      }
    }
    if (!seen[target]) throw std::logic_error("transportation basis lost connectivity");

    // Cycle cells: the entering cell, then the path edges walked back from
    // the column end, with alternating signs.
    struct CycleCell {
      std::size_t i, j;
      int sign;
    };
    std::vector<CycleCell> cycle = {{ei, ej, +1}};
    int sign = -1;
    for (std::size_t node = target; parent[node] < nodes; node = parent[node]) {
      const std::size_t a = node;
      const std::size_t b = parent[node];
      const std::size_t row = a < m_ ? a : b;
      const std::size_t col = a < m_ ? b - m_ : a - m_;
      cycle.push_back({row, col, sign});
      sign = -sign;
    }

    double theta = std::numeric_limits<double>::infinity();
    std::size_t li = 0, lj = 0;
    bool have_leaving = false;
    for (const auto& cell : cycle) {
      if (cell.sign > 0) continue;
      const double f = flow_[cell.i][cell.j];
      const bool better =
          !have_leaving || f < theta ||
          (f == theta && (cell.i < li || (cell.i == li && cell.j < lj)));
      if (better) {
        theta = f;
        li = cell.i;
        lj = cell.j;
        have_leaving = true;
      }
    }
    if (!have_leaving) throw std::logic_error("transportation pivot found no leaving cell");

    for (const auto& cell : cycle) {
      flow_[cell.i][cell.j] += cell.sign * theta;
      if (flow_[cell.i][cell.j] < 0.0) flow_[cell.i][cell.j] = 0.0;
    }
    basic_[li][lj] = 0;
    flow_[li][lj] = 0.0;
    basic_[ei][ej] = 1;
  }

  double objective() const {
    double total = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (flow_[i][j] > 0.0) total += flow_[i][j] * cost_[i][j];
      }
    }
    return total;
  }

  std::vector<double> supply_;
  std::vector<double> demand_;
  std::vector<std::vector<double>> cost_;
  std::size_t m_;
  std::size_t n_;
  std::vector<std::vector<double>> flow_;
  std::vector<std::vector<char>> basic_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<std::vector<std::size_t>> row_partners_;
  std::vector<std::vector<std::size_t>> col_partners_;
};

}  // namespace

double solve_transportation(std::span<const double> supply, std::span<const double> demand,
                            const GroundDistance& d) {
  double total_supply = 0.0;
  double total_demand = 0.0;
  for (double s : supply) {
    if (!std::isfinite(s) || s < 0.0) throw ValidationError("supplies must be non-negative");
    total_supply += s;
  }
  for (double t : demand) {
    if (!std::isfinite(t) || t < 0.0) throw ValidationError("demands must be non-negative");
    total_demand += t;
  }
  if (std::abs(total_supply - total_demand) > 1e-9) {
    throw ValidationError("transportation problem is unbalanced");
  }
  if (total_supply <= 0.0) return 0.0;

  // Zero-mass bins carry no flow; solving without them avoids needless
  // degeneracy.
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < supply.size(); ++i) {
    if (supply[i] > 0.0) rows.push_back(i);
  }
  for (std::size_t j = 0; j < demand.size(); ++j) {
    if (demand[j] > 0.0) cols.push_back(j);
  }

  std::vector<double> s(rows.size());
  std::vector<double> t(cols.size());
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) s[i] = supply[rows[i]];
  for (std::size_t j = 0; j < cols.size(); ++j) t[j] = demand[cols[j]];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) cost[i][j] = d(rows[i], cols[j]);
  }

  TransportationSimplex simplex(std::move(s), std::move(t), std::move(cost));
  return simplex.solve() / total_supply;
}

namespace {

// C(n, r) via the multiplicative formula; every prefix is itself a binomial
// so the division stays exact. Returns nullopt on uint64 overflow.
std::optional<std::uint64_t> binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace

CoverageAnalysis coverage_analysis(int categories, int batch, int trials) {
  if (categories < 1 || batch < 1 || trials < 1) {
    throw ValidationError("coverage analysis needs categories, batch, and trials >= 1");
  }
  CoverageAnalysis out;
  out.categories = categories;
  out.batch = batch;
  out.trials = trials;
  if (batch >= categories) {
    out.p_num = 1;
    out.p_den = 1;
  } else {
    const auto all = binomial(static_cast<std::uint64_t>(categories),
                              static_cast<std::uint64_t>(batch));
    const auto missing = binomial(static_cast<std::uint64_t>(categories - 1),
                                  static_cast<std::uint64_t>(batch));
    if (all && missing) {
      out.p_den = *all;
      out.p_num = *all - *missing;
    } else {
      // (C(k,b) - C(k-1,b)) / C(k,b) reduces to b / k.
      const auto g = std::gcd(static_cast<std::uint64_t>(batch),
                              static_cast<std::uint64_t>(categories));
      out.p_num = static_cast<std::uint64_t>(batch) / g;
      out.p_den = static_cast<std::uint64_t>(categories) / g;
    }
  }
  out.p = static_cast<double>(out.p_num) / static_cast<double>(out.p_den);
  out.expected = static_cast<double>(trials) * out.p;
  out.sigma = std::sqrt(static_cast<double>(trials) * out.p * (1.0 - out.p));
  return out;
}

CoverageSimulation coverage_simulation(int categories, int batch, int trials, std::int64_t runs,
                                       std::uint64_t seed) {
  if (categories < 1 || batch < 1 || trials < 1 || runs < 1) {
    throw ValidationError("coverage simulation needs positive parameters");
  }
  const std::size_t k = static_cast<std::size_t>(categories);
  const std::size_t b = std::min(static_cast<std::size_t>(batch), k);
  const double per_run_total = static_cast<double>(trials) * static_cast<double>(b);

  RandomStream rng(stream_seed(seed, "simulation"));
  std::vector<std::size_t> pool(k);
  for (std::size_t i = 0; i < k; ++i) pool[i] = i;

  std::vector<double> mean_pct(k, 0.0);
  std::vector<double> min_pct(k, std::numeric_limits<double>::infinity());
  std::vector<double> max_pct(k, 0.0);
  std::vector<double> mean_count(k, 0.0);
  std::vector<std::int64_t> counts(k);

  for (std::int64_t run = 0; run < runs; ++run) {
    std::fill(counts.begin(), counts.end(), std::int64_t{0});
    for (int t = 0; t < trials; ++t) {
      for (std::size_t d = 0; d < b; ++d) {
        const std::size_t r = d + static_cast<std::size_t>(rng.below(k - d));
        std::swap(pool[d], pool[r]);
        ++counts[pool[d]];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double pct = 100.0 * static_cast<double>(counts[c]) / per_run_total;
      mean_pct[c] += pct;
      min_pct[c] = std::min(min_pct[c], pct);
      max_pct[c] = std::max(max_pct[c], pct);
      mean_count[c] += static_cast<double>(counts[c]);
    }
  }

  CoverageSimulation out;
  out.categories = categories;
  out.batch = batch;
  out.trials = trials;
  out.runs = runs;
  out.per_category.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    out.per_category[c].mean_pct = mean_pct[c] / static_cast<double>(runs);
    out.per_category[c].min_pct = min_pct[c];
    out.per_category[c].max_pct = max_pct[c];
    out.per_category[c].mean_count = mean_count[c] / static_cast<double>(runs);
  }
  return out;
}

}  // namespace debiaspi
