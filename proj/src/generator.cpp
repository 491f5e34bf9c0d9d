#include "debiaspi/generator.hpp"

#include <cmath>
#include <cstdio>

namespace debiaspi {

std::string_view to_string(PromptTier tier) {
  switch (tier) {
    case PromptTier::Baseline:
      return "baseline";
    case PromptTier::AttributeList:
      return "list";
    case PromptTier::AttributeDistribution:
      return "distribution";
  }
  return "baseline";
}

PromptTier prompt_tier_from_string(std::string_view text) {
  if (text == "baseline") return PromptTier::Baseline;
  if (text == "list") return PromptTier::AttributeList;
  if (text == "distribution") return PromptTier::AttributeDistribution;
  throw ConfigError("unknown prompt tier: " + std::string(text));
}

void MockBiasConfig::validate() const {
  if (internal_weights.size() != schema.size()) {
    throw ValidationError("mock weights do not cover every label of '" + schema.name() + "'");
  }
  double total = 0.0;
  for (double w : internal_weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("mock weights must be finite and non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("mock weights must sum to 1");
  if (!(compliance >= 0.0 && compliance <= 1.0)) {
    throw ValidationError("mock compliance must lie in [0, 1]");
  }
}

MockGenerator::MockGenerator(MockBiasConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
}

std::string MockGenerator::make_ref(std::size_t label_index) {
  char head[32];
  std::snprintf(head, sizeof head, "mock:%06llu:",
                static_cast<unsigned long long>(sequence_));
  return std::string(head) + config_.schema.labels()[label_index];
}

GenerationResponse MockGenerator::generate(const GenerationRequest& request) {
  ++sequence_;
  if (request.tier == PromptTier::Baseline) {
    const std::size_t idx = rng_.categorical(config_.internal_weights);
    return GenerationResponse{std::nullopt, make_ref(idx)};
  }

  if (request.menu.empty()) {
    throw ValidationError("attribute-aware request carries an empty menu");
  }
  std::vector<std::size_t> menu_indices;
  menu_indices.reserve(request.menu.size());
  for (const auto& label : request.menu) {
    const auto idx = config_.schema.index_of(label);
    if (!idx) throw ValidationError("menu label '" + label + "' is outside the schema");
    menu_indices.push_back(*idx);
  }

  const double u = rng_.uniform01();
  std::size_t chosen;
  if (u < config_.compliance) {
    std::vector<double> restricted(config_.schema.size(), 0.0);
    double mass = 0.0;
    for (std::size_t idx : menu_indices) {
      restricted[idx] = config_.internal_weights[idx];
      mass += restricted[idx];
    }
    // A menu the model assigns no probability at all falls back to a uniform
    // pick over the menu.
    chosen = mass > 0.0 ? rng_.categorical(restricted)
                        : menu_indices[rng_.below(menu_indices.size())];
  } else {
    chosen = rng_.categorical(config_.internal_weights);
  }
  return GenerationResponse{config_.schema.labels()[chosen], make_ref(chosen)};
}

MockBiasConfig mock_preset(std::string_view name, std::uint64_t seed) {
  if (name == "gender-biased") {
    return MockBiasConfig{schemas::gender_pair(), {0.985, 0.015}, 1.0, seed};
  }
  if (name == "gender-uniform") {
    return MockBiasConfig{schemas::gender_pair(), {0.5, 0.5}, 1.0, seed};
  }
  if (name == "race-white-heavy") {
    auto schema = schemas::race9();
    std::vector<double> weights(schema.size(), 0.1 / 8.0);
    weights[*schema.index_of("White")] = 0.9;
    return MockBiasConfig{std::move(schema), std::move(weights), 1.0, seed};
  }
  if (name == "race-uniform") {
    auto schema = schemas::race9();
    std::vector<double> weights(schema.size(), 1.0 / 9.0);
    return MockBiasConfig{std::move(schema), std::move(weights), 1.0, seed};
  }
  throw ConfigError("unknown mock preset: " + std::string(name));
}

ReplayBackend::ReplayBackend(std::vector<GenerationResponse> transcript)
    : transcript_(std::move(transcript)) {}

GenerationResponse ReplayBackend::generate(const GenerationRequest& request) {
  request_log_.push_back(request);
  if (cursor_ >= transcript_.size()) {
    throw FixtureExhausted("fixture exhausted after " + std::to_string(transcript_.size()) +
                           " responses");
  }
  return transcript_[cursor_++];
}

}  // namespace debiaspi
