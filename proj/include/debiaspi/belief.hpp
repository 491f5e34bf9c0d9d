#pragma once

// Resolves the attribute of a generated artifact, either from the backend's
// own claim (internal belief) or through an attribute-classifier adapter
// (external belief), and quantizes averaged face colors onto the Monk scale.

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "debiaspi/attribute_model.hpp"
#include "debiaspi/generator.hpp"

namespace debiaspi {

// Adapter over an attribute classifier applied to image handles. Adapters
// declare their own reentrancy.
class ExternalClassifier {
 public:
  virtual ~ExternalClassifier() = default;

  virtual std::string classify(const std::string& image_ref, const AttributeSchema& schema) = 0;
  virtual bool reentrant() const { return true; }
  virtual std::string name() const { return "classifier"; }
};

// Wraps a plain callback, for tests and fixtures.
class StubClassifier : public ExternalClassifier {
 public:
  explicit StubClassifier(std::function<std::string(const std::string&)> fn)
      : fn_(std::move(fn)) {}

  std::string classify(const std::string& image_ref, const AttributeSchema&) override {
    return fn_(image_ref);
  }
  std::string name() const override { return "stub"; }

 private:
  std::function<std::string(const std::string&)> fn_;
};

// Reads the label embedded in mock artifact handles ("mock:<seq>:<label>").
class TokenClassifier : public ExternalClassifier {
 public:
  std::string classify(const std::string& image_ref, const AttributeSchema& schema) override;
  std::string name() const override { return "token"; }
};

enum class BeliefMode { Internal, External };

struct BeliefSource {
  BeliefMode mode = BeliefMode::Internal;
  std::shared_ptr<ExternalClassifier> classifier;  // required for External

  static BeliefSource internal();
  static BeliefSource external(std::shared_ptr<ExternalClassifier> classifier);

  void validate() const;
};

// Internal mode returns the claimed label verbatim (error when absent).
// External mode runs the classifier on the image handle and errors when the
// result falls outside the schema.
std::string resolve_attribute(const BeliefSource& source, const GenerationResponse& response,
                              const AttributeSchema& schema);

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

using ColorMetric = std::function<double(const Rgb&, const Rgb&)>;

double srgb_euclidean(const Rgb& a, const Rgb& b);

// The 10-point Monk skin-tone palette, grouped Light (1-3), Medium (4-6),
// Dark (7-10). Swatch values are reference data loadable from a config file;
// reference() ships the published palette.
class MonkScale {
 public:
  static constexpr std::size_t kSwatches = 10;

  explicit MonkScale(std::array<Rgb, kSwatches> swatches) : swatches_(swatches) {}
  static MonkScale reference();

  const std::array<Rgb, kSwatches>& swatches() const { return swatches_; }
  const Rgb& swatch(int index) const;  // index in 1..10

 private:
  std::array<Rgb, kSwatches> swatches_;
};

// Nearest swatch under the metric (sRGB Euclidean by default; the metric is
// injectable so a perceptual space can be substituted). Ties break toward the
// lower index. Channels must lie in [0, 255].
int quantize_skin_tone(const MonkScale& scale, const Rgb& mean_color,
                       const ColorMetric& metric = srgb_euclidean);

enum class MonkGroup { Light, Medium, Dark };

std::string_view to_string(MonkGroup group);

// {1..3 -> Light, 4..6 -> Medium, 7..10 -> Dark}.
MonkGroup monk_group(int index);

}  // namespace debiaspi
