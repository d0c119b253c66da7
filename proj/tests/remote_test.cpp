#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "memrank/remote.hpp"
#include "memrank/util.hpp"

using namespace memrank;
using nlohmann::json;

namespace {

// in-process stub server for the two remote interfaces
class StubServer {
 public:
  StubServer() {
    server_.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      json vectors = json::array();
      for (const auto& text : body.at("texts")) {
        // a fixed direction per first character, deliberately un-normalized
        double lead = text.get<std::string>().empty() ? 0.0 : double(text.get<std::string>()[0]);
        vectors.push_back({lead, 2.0, 0.0, 0.0});
      }
      res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
    });
    server_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      last_request = body;
      res.set_content(json{{"text", "<answer> \"Golden Meridian\" </answer>"},
                           {"token_logprobs", {-0.5, -0.25, -0.25}}}
                          .dump(),
                      "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("nope", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this]() { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  json last_request;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("remote embedder normalizes received vectors") {
  StubServer server;
  RemoteEmbedder emb(server.url(), 4);
  auto batch = emb.embed_batch({"alpha", "beta"});
  REQUIRE(batch.size() == 2);
  for (const auto& v : batch) {
    CHECK(v.dim() == 4);
    CHECK(detail::norm(v.values.data(), 4) == doctest::Approx(1.0).epsilon(1e-6));
  }
  Vector single = emb.embed("alpha");
  CHECK(single.values == batch[0].values);
}

TEST_CASE("remote embedder rejects wrong dimensions") {
  StubServer server;
  RemoteEmbedder emb(server.url(), 7);
  CHECK_THROWS_WITH_AS(emb.embed("alpha"), doctest::Contains("dimension"), std::runtime_error);
}

TEST_CASE("remote policy passes stop sequences and yields parseable emissions") {
  StubServer server;
  RemotePolicy policy(server.url(), 0.7);
  Emission e = policy.generate("some context", 128);
  CHECK(e.text == "<answer> \"Golden Meridian\" </answer>");
  CHECK(e.token_logprobs.size() == token_count(e.text));

  REQUIRE(server.last_request.contains("stop"));
  std::vector<std::string> stops = server.last_request.at("stop").get<std::vector<std::string>>();
  REQUIRE(stops.size() == 2);
  CHECK(stops[0] == "</tool_call>");
  CHECK(stops[1] == "</answer>");
  CHECK(server.last_request.at("temperature").get<double>() == doctest::Approx(0.7));
  CHECK(server.last_request.at("max_tokens").get<size_t>() == 128);
}

TEST_CASE("remote policy drives a full episode") {
  StubServer server;
  HashEmbedder emb(64);
  std::vector<MemoryDocument> docs{{0, MemoryKind::Meta, "i1", "Item Name: Golden Meridian"}};
  auto index = FlatIndex::build(docs, emb);
  RemotePolicy policy(server.url(), 1.0);
  auto traj = run_episode(policy, index, "prompt", {5, 512});
  CHECK(traj.parse_ok);
  CHECK(*traj.answer_text == "Golden Meridian");
}

TEST_CASE("http failures surface as errors") {
  StubServer server;
  RemotePolicy unreachable("http://127.0.0.1:1", 1.0);
  CHECK_THROWS(unreachable.generate("ctx", 10));
}
