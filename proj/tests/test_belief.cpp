#include <doctest.h>

#include <cmath>

#include "debiaspi/belief.hpp"
#include "debiaspi/rng.hpp"
#include "testing_support.hpp"

using namespace debiaspi;

TEST_CASE("resolve_attribute: internal belief returns the claim verbatim") {
  const auto schema = schemas::gender_pair();
  CHECK(resolve_attribute(BeliefSource::internal(), {"female", "img"}, schema) == "female");
  CHECK_THROWS_AS(resolve_attribute(BeliefSource::internal(), {std::nullopt, "img"}, schema),
                  ValidationError);
}

TEST_CASE("resolve_attribute: external belief validates the classifier output") {
  const auto schema = schemas::race9();
  const auto stub = [](std::string label) {
    return BeliefSource::external(
        std::make_shared<StubClassifier>([label](const std::string&) { return label; }));
  };
  CHECK(resolve_attribute(stub("Black"), {std::nullopt, "img"}, schema) == "Black");
  CHECK_THROWS_AS(resolve_attribute(stub("unknown"), {std::nullopt, "img"}, schema),
                  ClassifierError);
  CHECK_THROWS_AS(BeliefSource::external(nullptr), ValidationError);
}

TEST_CASE("token classifier reads mock artifact handles") {
  TokenClassifier token;
  const auto schema = schemas::gender_pair();
  CHECK(token.classify("mock:000017:female", schema) == "female");
  CHECK_THROWS_AS(token.classify("opaque-handle", schema), ClassifierError);
}

TEST_CASE("monk quantization is idempotent on the swatches") {
  const auto scale = MonkScale::reference();
  for (int i = 1; i <= 10; ++i) {
    CHECK(quantize_skin_tone(scale, scale.swatch(i)) == i);
  }
}

TEST_CASE("monk quantization breaks ties toward the lower index") {
  // A palette with two identical swatches makes every query a tie.
  auto swatches = MonkScale::reference().swatches();
  swatches[4] = swatches[7];
  const MonkScale rigged(swatches);
  CHECK(quantize_skin_tone(rigged, swatches[7]) == 5);
}

TEST_CASE("monk quantization matches a brute-force nearest-swatch scan") {
  const auto scale = MonkScale::reference();
  RandomStream rng(31415);
  for (int trial = 0; trial < 10000; ++trial) {
    const Rgb color{rng.uniform01() * 255.0, rng.uniform01() * 255.0, rng.uniform01() * 255.0};
    int expected = 0;
    double best = 1e18;
    for (int i = 1; i <= 10; ++i) {
      const Rgb& s = scale.swatch(i);
      const double d2 = (color.r - s.r) * (color.r - s.r) +
                        (color.g - s.g) * (color.g - s.g) +
                        (color.b - s.b) * (color.b - s.b);
      if (d2 < best) {
        best = d2;
        expected = i;
      }
    }
    CHECK(quantize_skin_tone(scale, color) == expected);
  }
}

TEST_CASE("small perturbations never flip the nearest swatch") {
  const auto scale = MonkScale::reference();
  RandomStream rng(2718);
  for (int trial = 0; trial < 2000; ++trial) {
    const Rgb color{rng.uniform01() * 255.0, rng.uniform01() * 255.0, rng.uniform01() * 255.0};
    const int nearest = quantize_skin_tone(scale, color);

    double d1 = 1e18, d2 = 1e18;
    for (int i = 1; i <= 10; ++i) {
      const double d = srgb_euclidean(color, scale.swatch(i));
      if (d < d1) {
        d2 = d1;
        d1 = d;
      } else if (d < d2) {
        d2 = d;
      }
    }
    const double margin = 0.49 * (d2 - d1);
    if (margin <= 0.0) continue;
    const double step = margin / std::sqrt(3.0);
    const Rgb nudged{std::clamp(color.r + (rng.uniform01() * 2 - 1) * step, 0.0, 255.0),
                     std::clamp(color.g + (rng.uniform01() * 2 - 1) * step, 0.0, 255.0),
                     std::clamp(color.b + (rng.uniform01() * 2 - 1) * step, 0.0, 255.0)};
    CHECK(quantize_skin_tone(scale, nudged) == nearest);
  }
}

TEST_CASE("a grey sweep covers all three monk groups") {
  const auto scale = MonkScale::reference();
  bool saw_light = false, saw_medium = false, saw_dark = false;
  for (int v = 255; v >= 0; --v) {
    const auto group = monk_group(
        quantize_skin_tone(scale, {static_cast<double>(v), static_cast<double>(v),
                                   static_cast<double>(v)}));
    saw_light = saw_light || group == MonkGroup::Light;
    saw_medium = saw_medium || group == MonkGroup::Medium;
    saw_dark = saw_dark || group == MonkGroup::Dark;
  }
  CHECK(saw_light);
  CHECK(saw_medium);
  CHECK(saw_dark);
}

TEST_CASE("monk group boundaries") {
  CHECK(monk_group(1) == MonkGroup::Light);
  CHECK(monk_group(3) == MonkGroup::Light);
  CHECK(monk_group(4) == MonkGroup::Medium);
  CHECK(monk_group(5) == MonkGroup::Medium);
  CHECK(monk_group(6) == MonkGroup::Medium);
  CHECK(monk_group(7) == MonkGroup::Dark);
  CHECK(monk_group(10) == MonkGroup::Dark);
  CHECK_THROWS_AS(monk_group(0), ValidationError);
  CHECK_THROWS_AS(monk_group(11), ValidationError);
}

TEST_CASE("channel range is enforced") {
  const auto scale = MonkScale::reference();
  CHECK_THROWS_AS(quantize_skin_tone(scale, {-1.0, 0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(quantize_skin_tone(scale, {0.0, 256.0, 0.0}), ValidationError);
}

TEST_CASE("a pluggable metric changes the result") {
  const auto scale = MonkScale::reference();
  // A metric that only looks at the red channel.
  const auto red_only = [](const Rgb& a, const Rgb& b) { return std::abs(a.r - b.r); };
  const Rgb color{215.0, 0.0, 0.0};
  CHECK(quantize_skin_tone(scale, color, red_only) == 5);  // swatch 5 has r = 215
}
