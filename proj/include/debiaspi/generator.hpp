#pragma once

// Generation backend abstraction plus a deterministic mock biased generator
// and a record/replay fixture client. No pixels are produced anywhere; a
// response carries an opaque artifact handle and, for attribute-aware
// prompts, the backend's self-declared attribute.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "debiaspi/attribute_model.hpp"
#include "debiaspi/rng.hpp"

namespace debiaspi {

enum class PromptTier { Baseline, AttributeList, AttributeDistribution };

std::string_view to_string(PromptTier tier);
PromptTier prompt_tier_from_string(std::string_view text);

struct GenerationRequest {
  std::string prompt_text;
  PromptTier tier = PromptTier::Baseline;
  std::vector<std::string> menu;  // allowed labels; empty for Baseline
  int batch_hint = 5;
};

struct GenerationResponse {
  // The backend's internal belief about the attribute it generated. Absent on
  // Baseline responses; backends may also violate the menu, so callers must
  // validate before trusting it.
  std::optional<std::string> claimed_label;
  std::string image_ref;
};

class FixtureExhausted : public BackendError {
 public:
  using BackendError::BackendError;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  virtual GenerationResponse generate(const GenerationRequest& request) = 0;

  // Whether generate() may be called from several threads at once.
  virtual bool supports_concurrent_generate() const { return false; }
};

struct MockBiasConfig {
  AttributeSchema schema;
  std::vector<double> internal_weights;  // sums to 1 within 1e-9
  double compliance = 1.0;               // probability the menu is respected
  std::uint64_t seed = 0;

  void validate() const;
};

// Simulated backend with a configurable internal bias. With probability
// `compliance` it samples from its weights restricted and renormalized to the
// menu; otherwise it samples from the unrestricted weights, modeling a
// backend that ignores the instruction. Responses are deterministic given
// (config, call sequence); callers must serialize calls to one instance
// because the RNG stream is part of that contract.
class MockGenerator : public GenerationBackend {
 public:
  explicit MockGenerator(MockBiasConfig config);

  GenerationResponse generate(const GenerationRequest& request) override;

  const MockBiasConfig& config() const { return config_; }

 private:
  std::string make_ref(std::size_t label_index);

  MockBiasConfig config_;
  RandomStream rng_;
  std::uint64_t sequence_ = 0;
};

// Named bias presets:
//   "gender-biased"    male 0.985 / female 0.015
//   "gender-uniform"   male 0.5 / female 0.5
//   "race-white-heavy" White 0.90, the rest split evenly
//   "race-uniform"     1/9 each
MockBiasConfig mock_preset(std::string_view name, std::uint64_t seed);

// Replays a recorded transcript of responses in order; requests are kept for
// audit. Throws FixtureExhausted once the transcript is drained.
class ReplayBackend : public GenerationBackend {
 public:
  explicit ReplayBackend(std::vector<GenerationResponse> transcript);

  GenerationResponse generate(const GenerationRequest& request) override;

  const std::vector<GenerationRequest>& request_log() const { return request_log_; }
  std::size_t remaining() const { return transcript_.size() - cursor_; }

 private:
  std::vector<GenerationResponse> transcript_;
  std::vector<GenerationRequest> request_log_;
  std::size_t cursor_ = 0;
};

}  // namespace debiaspi
