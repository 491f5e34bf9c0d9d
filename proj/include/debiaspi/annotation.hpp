#pragma once

// Codebook-driven annotation sets and intercoder-reliability scoring. Pairs
// of coders are scored over the items both annotated; items seen by only one
// coder are excluded.

#include <map>
#include <string>
#include <vector>

#include "debiaspi/attribute_model.hpp"

namespace debiaspi {

struct AnnotationSet {
  std::string coder_id;
  AttributeSchema schema;
  std::map<std::string, std::string> labels_by_item;

  // One label per item per coder; conflicting re-insertion is an error.
  void insert(const std::string& item_id, const std::string& label);
};

// Cohen's kappa over the item intersection: (p_o - p_e) / (1 - p_e), with
// chance agreement p_e taken from each coder's marginal label frequencies.
// Returns 1 in the degenerate single-label case (p_e = 1, p_o = 1).
double cohen_kappa(const AnnotationSet& a, const AnnotationSet& b);

// Fraction of intersection items with equal labels.
double percent_agreement(const AnnotationSet& a, const AnnotationSet& b);

struct AgreementScore {
  double kappa = 0.0;
  double agreement = 0.0;
  std::size_t items = 0;
  bool robust = false;  // kappa above the 0.8 reliability bar
};

AgreementScore score_pair(const AnnotationSet& a, const AnnotationSet& b);

// The five codebook attribute schemas shipped as configuration data: race,
// gender, age group, body type, and Monk skin-tone group.
const std::vector<AttributeSchema>& codebook_schemas();
AttributeSchema codebook_schema(std::string_view name);

}  // namespace debiaspi
