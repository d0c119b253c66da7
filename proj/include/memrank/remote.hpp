#pragma once

#include <string>
#include <vector>

#include "memrank/embedding.hpp"
#include "memrank/episode.hpp"

namespace memrank {

inline constexpr const char* kPolicyEndpointEnv = "MEMRANK_POLICY_ENDPOINT";
inline constexpr const char* kEmbedEndpointEnv = "MEMRANK_EMBED_ENDPOINT";

// Client for an external embedding service.
// POST /embed  {"texts": [...]}  ->  {"vectors": [[...], ...]}
// Vectors are normalized on receipt; non-finite entries are format errors.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::string base_url, size_t dim);

  Vector embed(const std::string& text) const override;
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const;
  size_t dim() const override { return dim_; }

 private:
  std::string base_url_;
  size_t dim_;
};

// Client for an external text-generation service.
// POST /generate {"context": ..., "stop": ["</tool_call>", "</answer>"],
//                 "temperature": t, "max_tokens": n}
//   -> {"text": ..., "token_logprobs": [...]}   (log-probs optional)
// When the service reports no log-probs, each whitespace token is recorded
// with log-prob 0.
class RemotePolicy final : public Policy {
 public:
  RemotePolicy(std::string base_url, double temperature);
  Emission generate(const std::string& context, size_t max_tokens) override;

 private:
  std::string base_url_;
  double temperature_;
};

}  // namespace memrank
