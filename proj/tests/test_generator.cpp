#include <doctest.h>

#include <cmath>

#include "debiaspi/generator.hpp"
#include "testing_support.hpp"

using namespace debiaspi;
namespace ts = testing_support;

namespace {

GenerationRequest list_request(std::vector<std::string> menu) {
  GenerationRequest request;
  request.tier = PromptTier::AttributeList;
  request.prompt_text = "test prompt";
  request.menu = std::move(menu);
  return request;
}

}  // namespace

TEST_CASE("mock config validation") {
  CHECK_THROWS_AS(MockGenerator({schemas::gender_pair(), {0.9, 0.2}, 1.0, 1}),
                  ValidationError);
  CHECK_THROWS_AS(MockGenerator({schemas::gender_pair(), {0.9, 0.1}, 1.5, 1}),
                  ValidationError);
  CHECK_THROWS_AS(mock_preset("no-such-preset", 1), ConfigError);
}

TEST_CASE("baseline requests claim nothing") {
  MockGenerator mock(mock_preset("gender-biased", 5));
  GenerationRequest request;
  request.tier = PromptTier::Baseline;
  const auto response = mock.generate(request);
  CHECK(!response.claimed_label.has_value());
  CHECK(!response.image_ref.empty());
}

TEST_CASE("singleton menu forces the choice under full compliance") {
  MockGenerator mock(mock_preset("gender-biased", 5));
  for (int i = 0; i < 50; ++i) {
    const auto response = mock.generate(list_request({"female"}));
    CHECK(response.claimed_label == "female");
  }
}

TEST_CASE("menu labels outside the schema are rejected") {
  MockGenerator mock(mock_preset("gender-biased", 5));
  CHECK_THROWS_AS(mock.generate(list_request({"male", "dragon"})), ValidationError);
  CHECK_THROWS_AS(mock.generate(list_request({})), ValidationError);
}

TEST_CASE("baseline sampling reproduces the configured bias") {
  // Full-menu draws stand in for baseline behaviour: ~98.5% male.
  MockGenerator mock(mock_preset("gender-biased", 11));
  std::int64_t male = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto response = mock.generate(list_request({"male", "female"}));
    if (response.claimed_label == "male") ++male;
  }
  const double share = static_cast<double>(male) / n;
  const double sigma = std::sqrt(0.985 * 0.015 / n);
  CHECK(std::abs(share - 0.985) < 3.0 * sigma);
}

TEST_CASE("restricted menus renormalize the internal weights") {
  const auto schema = ts::numbered_schema("s", 4);
  MockGenerator mock({schema, {0.5, 0.25, 0.15, 0.1}, 1.0, 31337});

  // Menu keeps bins 1 and 3; renormalized weights are 0.25/0.35 and 0.10/0.35.
  const std::vector<std::string> menu{schema.labels()[1], schema.labels()[3]};
  std::vector<std::int64_t> observed(2, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto response = mock.generate(list_request(menu));
    REQUIRE(response.claimed_label.has_value());
    if (*response.claimed_label == menu[0]) {
      ++observed[0];
    } else {
      REQUIRE(*response.claimed_label == menu[1]);
      ++observed[1];
    }
  }
  const std::vector<double> expected{n * 0.25 / 0.35, n * 0.10 / 0.35};
  const double stat = ts::chi2_statistic(observed, expected);
  CHECK(stat < ts::chi2_critical_p001(1));
}

TEST_CASE("zero compliance ignores the menu at the configured rate") {
  MockGenerator mock({schemas::gender_pair(), {0.985, 0.015}, 0.0, 99});
  std::int64_t violations = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto response = mock.generate(list_request({"female"}));
    if (response.claimed_label != "female") ++violations;
  }
  const double share = static_cast<double>(violations) / n;
  const double sigma = std::sqrt(0.985 * 0.015 / n);
  CHECK(std::abs(share - 0.985) < 3.0 * sigma);
}

TEST_CASE("menus with zero internal mass fall back to a uniform pick") {
  const auto schema = ts::numbered_schema("s", 3);
  MockGenerator mock({schema, {1.0, 0.0, 0.0}, 1.0, 7});
  std::int64_t second = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto response =
        mock.generate(list_request({schema.labels()[1], schema.labels()[2]}));
    REQUIRE(response.claimed_label.has_value());
    CHECK(*response.claimed_label != schema.labels()[0]);
    if (*response.claimed_label == schema.labels()[1]) ++second;
  }
  const double share = static_cast<double>(second) / n;
  CHECK(std::abs(share - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("mock determinism: identical config and request sequence") {
  const auto run_once = [] {
    MockGenerator mock({schemas::race9(), mock_preset("race-white-heavy", 0).internal_weights,
                        0.7, 424242});
    std::vector<std::string> refs;
    for (int i = 0; i < 200; ++i) {
      const auto menu = i % 2 == 0 ? std::vector<std::string>{"White", "Black"}
                                   : std::vector<std::string>{"South Asian"};
      refs.push_back(mock.generate(list_request(menu)).image_ref);
    }
    return refs;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("mock never emits a label outside the schema") {
  RandomStream rng(5150);
  const auto schema = ts::numbered_schema("s", 5);
  MockGenerator mock({schema, ts::random_weights(rng, 5), 0.5, 8});
  for (int i = 0; i < 2000; ++i) {
    const auto size = 1 + rng.below(5);
    std::vector<std::string> menu;
    for (auto idx : rng.distinct(5, size)) menu.push_back(schema.labels()[idx]);
    const auto response = mock.generate(list_request(menu));
    REQUIRE(response.claimed_label.has_value());
    CHECK(schema.contains(*response.claimed_label));
  }
}

TEST_CASE("replay backend returns the transcript in order and then errors") {
  std::vector<GenerationResponse> transcript{{"male", "img-1"}, {"female", "img-2"}};
  ReplayBackend replay(transcript);
  CHECK(replay.remaining() == 2);
  CHECK(replay.generate(list_request({"male"})).image_ref == "img-1");
  CHECK(replay.generate(list_request({"female"})).image_ref == "img-2");
  CHECK(replay.remaining() == 0);
  CHECK_THROWS_AS(replay.generate(list_request({"male"})), FixtureExhausted);
  // Requests are logged for audit, including the failing one.
  CHECK(replay.request_log().size() == 3);
  CHECK(replay.request_log()[0].menu == std::vector<std::string>{"male"});
}
