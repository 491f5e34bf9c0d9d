#include "debiaspi/belief.hpp"

#include <cmath>

namespace debiaspi {

std::string TokenClassifier::classify(const std::string& image_ref, const AttributeSchema&) {
  const auto first = image_ref.find(':');
  const auto second = first == std::string::npos ? std::string::npos
                                                 : image_ref.find(':', first + 1);
  if (second == std::string::npos || second + 1 >= image_ref.size()) {
    throw ClassifierError("artifact handle carries no label token: " + image_ref);
  }
  return image_ref.substr(second + 1);
}

BeliefSource BeliefSource::internal() { return BeliefSource{BeliefMode::Internal, nullptr}; }

BeliefSource BeliefSource::external(std::shared_ptr<ExternalClassifier> classifier) {
  BeliefSource source{BeliefMode::External, std::move(classifier)};
  source.validate();
  return source;
}

void BeliefSource::validate() const {
  if (mode == BeliefMode::External && !classifier) {
    throw ValidationError("external belief requires a classifier");
  }
}

std::string resolve_attribute(const BeliefSource& source, const GenerationResponse& response,
                              const AttributeSchema& schema) {
  source.validate();
  if (source.mode == BeliefMode::Internal) {
    if (!response.claimed_label) {
      throw ValidationError("internal belief requested but the response claims no attribute");
    }
    return *response.claimed_label;
  }
  const std::string label = source.classifier->classify(response.image_ref, schema);
  if (!schema.contains(label)) {
    throw ClassifierError("classifier '" + source.classifier->name() + "' returned '" + label +
                          "', which is not a '" + schema.name() + "' label");
  }
  return label;
}

double srgb_euclidean(const Rgb& a, const Rgb& b) {
  const double dr = a.r - b.r;
  const double dg = a.g - b.g;
  const double db = a.b - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

MonkScale MonkScale::reference() {
  return MonkScale({{{246, 237, 228},
                     {243, 231, 219},
                     {247, 234, 208},
                     {234, 218, 186},
                     {215, 189, 150},
                     {160, 126, 86},
                     {130, 92, 67},
                     {96, 65, 52},
                     {58, 49, 42},
                     {41, 36, 32}}});
}

const Rgb& MonkScale::swatch(int index) const {
  if (index < 1 || index > static_cast<int>(kSwatches)) {
    throw ValidationError("Monk swatch index must lie in 1..10");
  }
  return swatches_[static_cast<std::size_t>(index - 1)];
}

int quantize_skin_tone(const MonkScale& scale, const Rgb& mean_color, const ColorMetric& metric) {
  for (double channel : {mean_color.r, mean_color.g, mean_color.b}) {
    if (!(channel >= 0.0 && channel <= 255.0)) {
      throw ValidationError("color channels must lie in [0, 255]");
    }
  }
  int best = 1;
  double best_distance = metric(mean_color, scale.swatches()[0]);
  for (std::size_t i = 1; i < MonkScale::kSwatches; ++i) {
    const double d = metric(mean_color, scale.swatches()[i]);
    if (d < best_distance) {
      best_distance = d;
      best = static_cast<int>(i) + 1;
    }
  }
  return best;
}

std::string_view to_string(MonkGroup group) {
  switch (group) {
    case MonkGroup::Light:
      return "Light";
    case MonkGroup::Medium:
      return "Medium";
    case MonkGroup::Dark:
      return "Dark";
  }
  return "Light";
}

MonkGroup monk_group(int index) {
  if (index < 1 || index > 10) throw ValidationError("Monk index must lie in 1..10");
  if (index <= 3) return MonkGroup::Light;
  if (index <= 6) return MonkGroup::Medium;
  return MonkGroup::Dark;
}

}  // namespace debiaspi
