#include "debiaspi/annotation.hpp"

#include <cmath>

namespace debiaspi {

void AnnotationSet::insert(const std::string& item_id, const std::string& label) {
  if (!schema.contains(label)) {
    throw ValidationError("label '" + label + "' is not a '" + schema.name() + "' label");
  }
  const auto [it, inserted] = labels_by_item.emplace(item_id, label);
  if (!inserted && it->second != label) {
    throw ConfigError("coder '" + coder_id + "' labels item '" + item_id + "' twice");
  }
}

namespace {

struct PairTally {
  std::size_t items = 0;
  std::size_t agreements = 0;
  std::vector<std::size_t> marginal_a;
  std::vector<std::size_t> marginal_b;
};

PairTally tally_pair(const AnnotationSet& a, const AnnotationSet& b) {
  if (a.schema != b.schema) {
    throw ValidationError("annotation sets use different schemas: '" + a.schema.name() +
                          "' vs '" + b.schema.name() + "'");
  }
  PairTally tally;
  tally.marginal_a.assign(a.schema.size(), 0);
  tally.marginal_b.assign(a.schema.size(), 0);
  for (const auto& [item, label_a] : a.labels_by_item) {
    const auto it = b.labels_by_item.find(item);
    if (it == b.labels_by_item.end()) continue;
    ++tally.items;
    if (label_a == it->second) ++tally.agreements;
    ++tally.marginal_a[*a.schema.index_of(label_a)];
    ++tally.marginal_b[*a.schema.index_of(it->second)];
  }
  if (tally.items == 0) {
    throw ValidationError("coders '" + a.coder_id + "' and '" + b.coder_id +
                          "' share no annotated items");
  }
  return tally;
}

}  // namespace

double cohen_kappa(const AnnotationSet& a, const AnnotationSet& b) {
  const auto tally = tally_pair(a, b);
  const double n = static_cast<double>(tally.items);
  const double p_o = static_cast<double>(tally.agreements) / n;
  double p_e = 0.0;
  for (std::size_t l = 0; l < tally.marginal_a.size(); ++l) {
    p_e += (static_cast<double>(tally.marginal_a[l]) / n) *
           (static_cast<double>(tally.marginal_b[l]) / n);
  }
  if (1.0 - p_e < 1e-15) return 1.0;  // both coders used one identical label throughout
  return (p_o - p_e) / (1.0 - p_e);
}

double percent_agreement(const AnnotationSet& a, const AnnotationSet& b) {
  const auto tally = tally_pair(a, b);
  return static_cast<double>(tally.agreements) / static_cast<double>(tally.items);
}

AgreementScore score_pair(const AnnotationSet& a, const AnnotationSet& b) {
  const auto tally = tally_pair(a, b);
  AgreementScore score;
  score.items = tally.items;
  score.kappa = cohen_kappa(a, b);
  score.agreement = percent_agreement(a, b);
  score.robust = score.kappa > 0.8;
  return score;
}

const std::vector<AttributeSchema>& codebook_schemas() {
  static const std::vector<AttributeSchema> book = {
      schemas::race9(), schemas::codebook_gender3(), schemas::age_groups4(),
      schemas::body_types3(), schemas::monk_groups3()};
  return book;
}

AttributeSchema codebook_schema(std::string_view name) {
  for (const auto& schema : codebook_schemas()) {
    if (schema.name() == name) return schema;
  }
  throw ConfigError("unknown codebook schema: " + std::string(name));
}

}  // namespace debiaspi
