// Loopback server exercising the HTTP transport for the generation and
// classifier protocols.

#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "debiaspi/remote.hpp"
#include "debiaspi/serialization.hpp"
#include "testing_support.hpp"

using namespace debiaspi;

namespace {

class LoopbackServer {
 public:
  LoopbackServer() {
    server_.Post("/generate", [](const httplib::Request& req, httplib::Response& res) {
      const auto request = request_from_json(Json::parse(req.body));
      GenerationResponse response;
      response.image_ref = "remote-img";
      if (request.tier != PromptTier::Baseline && !request.menu.empty()) {
        response.claimed_label = request.menu.front();  // a compliant picker
      }
      res.set_content(response_to_json(response).dump(), "application/json");
    });
    server_.Post("/classify", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = Json::parse(req.body);
      const auto labels = body["labels"].get<std::vector<std::string>>();
      res.set_content(classify_response_to_json(labels.back()).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LoopbackServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("remote backend speaks the generation protocol") {
  LoopbackServer server;
  RemoteBackend backend(server.url());

  GenerationRequest request;
  request.tier = PromptTier::AttributeList;
  request.prompt_text = "p";
  request.menu = {"female", "male"};
  const auto response = backend.generate(request);
  CHECK(response.claimed_label == "female");
  CHECK(response.image_ref == "remote-img");

  GenerationRequest baseline;
  baseline.tier = PromptTier::Baseline;
  const auto quiet = backend.generate(baseline);
  CHECK(!quiet.claimed_label.has_value());
}

TEST_CASE("remote classifier speaks the classify protocol") {
  LoopbackServer server;
  RemoteClassifier classifier(server.url());
  CHECK(classifier.classify("img-1", schemas::gender_pair()) == "female");
}

TEST_CASE("unreachable endpoints surface as backend errors") {
  RemoteBackend backend("http://127.0.0.1:9");  // discard port, nothing listens
  GenerationRequest request;
  request.tier = PromptTier::AttributeList;
  request.menu = {"male"};
  CHECK_THROWS_AS(backend.generate(request), BackendError);

  RemoteClassifier classifier("http://127.0.0.1:9");
  CHECK_THROWS_AS(classifier.classify("img", schemas::gender_pair()), ClassifierError);
}

TEST_CASE("non-200 replies surface as backend errors") {
  httplib::Server server;
  server.Post("/generate", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteBackend backend("http://127.0.0.1:" + std::to_string(port));
  GenerationRequest request;
  request.tier = PromptTier::AttributeList;
  request.menu = {"male"};
  CHECK_THROWS_AS(backend.generate(request), BackendError);

  server.stop();
  thread.join();
}
