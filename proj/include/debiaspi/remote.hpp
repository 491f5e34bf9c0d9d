#pragma once

// HTTP transport for the message-level protocols: JSON request/response for
// generation, and the mirrored classify messages for external classifiers.
// If DEBIASPI_API_KEY is set in the environment it is forwarded as a bearer
// token; no other credential handling exists.

#include <string>

#include "debiaspi/belief.hpp"
#include "debiaspi/generator.hpp"

namespace debiaspi {

class RemoteBackend : public GenerationBackend {
 public:
  explicit RemoteBackend(std::string base_url, std::string generate_path = "/generate");

  GenerationResponse generate(const GenerationRequest& request) override;
  bool supports_concurrent_generate() const override { return true; }

 private:
  std::string base_url_;
  std::string generate_path_;
};

class RemoteClassifier : public ExternalClassifier {
 public:
  explicit RemoteClassifier(std::string base_url, std::string classify_path = "/classify");

  std::string classify(const std::string& image_ref, const AttributeSchema& schema) override;
  std::string name() const override { return "remote"; }

 private:
  std::string base_url_;
  std::string classify_path_;
};

}  // namespace debiaspi
