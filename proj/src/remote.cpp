#include "memrank/remote.hpp"

#include <cmath>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"
#include "memrank/util.hpp"

namespace memrank {

using nlohmann::json;

namespace {

json post_json(const std::string& base_url, const std::string& path, const json& body) {
  httplib::Client client(base_url);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res)
    throw std::runtime_error("remote: no response from " + base_url + path + " (" +
                             httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw std::runtime_error("remote: " + base_url + path + " returned status " +
                             std::to_string(res->status));
  return json::parse(res->body);
}

}  // namespace

RemoteEmbedder::RemoteEmbedder(std::string base_url, size_t dim)
    : base_url_(std::move(base_url)), dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("RemoteEmbedder: dim must be positive");
}

std::vector<Vector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  json res = post_json(base_url_, "/embed", json{{"texts", texts}});
  const auto& vectors = res.at("vectors");
  if (vectors.size() != texts.size())
    throw std::runtime_error("remote embedder: got " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(texts.size()) + " texts");
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (size_t i = 0; i < texts.size(); ++i) {
    std::vector<float> values;
    values.reserve(vectors[i].size());
    for (const auto& x : vectors[i]) {
      double v = x.get<double>();
      if (!std::isfinite(v)) throw std::runtime_error("remote embedder: non-finite entry");
      values.push_back(static_cast<float>(v));
    }
    if (values.size() != dim_)
      throw std::runtime_error("remote embedder: dimension " + std::to_string(values.size()) +
                               " != " + std::to_string(dim_));
    normalize_l2(values);
    Vector v;
    v.values = std::move(values);
    v.empty_input = texts[i].empty();
    out.push_back(std::move(v));
  }
  return out;
}

Vector RemoteEmbedder::embed(const std::string& text) const { return embed_batch({text})[0]; }

RemotePolicy::RemotePolicy(std::string base_url, double temperature)
    : base_url_(std::move(base_url)), temperature_(temperature) {}

Emission RemotePolicy::generate(const std::string& context, size_t max_tokens) {
  json res = post_json(base_url_, "/generate",
                       json{{"context", context},
                            {"stop", {"</tool_call>", "</answer>"}},
                            {"temperature", temperature_},
                            {"max_tokens", max_tokens}});
  Emission e;
  e.text = res.at("text").get<std::string>();
  const size_t n = token_count(e.text);
  if (res.contains("token_logprobs") && res.at("token_logprobs").is_array()) {
    for (const auto& lp : res.at("token_logprobs")) e.token_logprobs.push_back(lp.get<double>());
  }
  e.token_logprobs.resize(n, 0.0);
  return e;
}

}  // namespace memrank
