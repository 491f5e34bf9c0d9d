#include "debiaspi/remote.hpp"

#include <cstdlib>

#include <httplib.h>

#include "debiaspi/serialization.hpp"

namespace debiaspi {

namespace {

httplib::Headers auth_headers() {
  httplib::Headers headers;
  if (const char* key = std::getenv("DEBIASPI_API_KEY")) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  return headers;
}

Json post_json(const std::string& base_url, const std::string& path, const Json& body,
               const char* what) {
  httplib::Client client(base_url);
  client.set_read_timeout(60, 0);
  const auto result = client.Post(path, auth_headers(), body.dump(), "application/json");
  if (!result) {
    throw BackendError(std::string(what) + " endpoint unreachable: " + base_url +
                       " (" + httplib::to_string(result.error()) + ")");
  }
  if (result->status != 200) {
    throw BackendError(std::string(what) + " endpoint returned status " +
                       std::to_string(result->status));
  }
  Json j = Json::parse(result->body, nullptr, false);
  if (j.is_discarded()) {
    throw BackendError(std::string(what) + " endpoint returned malformed JSON");
  }
  return j;
}

}  // namespace

RemoteBackend::RemoteBackend(std::string base_url, std::string generate_path)
    : base_url_(std::move(base_url)), generate_path_(std::move(generate_path)) {}

GenerationResponse RemoteBackend::generate(const GenerationRequest& request) {
  return response_from_json(
      post_json(base_url_, generate_path_, request_to_json(request), "generation"));
}

RemoteClassifier::RemoteClassifier(std::string base_url, std::string classify_path)
    : base_url_(std::move(base_url)), classify_path_(std::move(classify_path)) {}

std::string RemoteClassifier::classify(const std::string& image_ref,
                                       const AttributeSchema& schema) {
  try {
    return classify_response_from_json(
        post_json(base_url_, classify_path_, classify_request_to_json(image_ref, schema),
                  "classifier"));
  } catch (const BackendError& error) {
    throw ClassifierError(error.what());
  }
}

}  // namespace debiaspi
