#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memrank/index.hpp"
#include "memrank/profile.hpp"

namespace memrank {

// protocol tags: <think> <tool_call> <tool_response> <answer>
enum class SegmentKind { Think, ToolCall, ToolResponse, Answer, Malformed };

std::string segment_kind_name(SegmentKind kind);

struct TaggedSegment {
  SegmentKind kind = SegmentKind::Malformed;
  std::string body;  // trimmed text between the tags; raw remainder for Malformed
  // whitespace-token span covering the tagged region, [begin, end)
  size_t token_begin = 0;
  size_t token_end = 0;
};

// Longest-match scan for the four tag pairs in order of appearance. An
// unclosed tag produces a Malformed segment covering the remainder; text
// outside tags belongs to no segment. Never throws.
std::vector<TaggedSegment> parse_segments(const std::string& text);

struct AnswerExtraction {
  std::optional<std::string> title;
  bool parse_ok = false;
};

// parse_ok requires exactly one Answer segment with a non-empty
// double-quoted span; the title is the first quoted span, trimmed
AnswerExtraction extract_answer(const std::vector<TaggedSegment>& segments);

// Instruction prompt instantiated from the dataset profile. Ablations:
// without_re drops the think-tag instruction (retrieval wording stays),
// without_cf / without_meta drop the corresponding search capability.
std::string render_prompt(const std::vector<std::string>& history_titles,
                          const DatasetProfile& profile, const AblationFlags& ablation);

// one sampled action inside an emission, for trainers that re-score tokens
struct Decision {
  size_t token_index = 0;  // whitespace-token offset; local in Emission, global in Trajectory
  uint64_t state_key = 0;
  uint32_t action_id = 0;
  double logprob = 0.0;  // under the acting policy at rollout time
};

struct Emission {
  std::string text;
  std::vector<double> token_logprobs;  // one per whitespace token of text
  std::vector<Decision> decisions;
};

// Generates one continuation of the context, halting at </tool_call>,
// </answer>, or the token allowance. Implementations report a log-prob per
// generated whitespace token.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Emission generate(const std::string& context, size_t max_tokens) = 0;
};

struct Trajectory {
  std::string prompt;
  std::string generated_text;  // everything after the prompt, policy and environment text
  std::vector<TaggedSegment> segments;
  std::vector<double> token_logprobs;  // policy tokens only, in stream order
  std::vector<uint8_t> token_is_env;   // one flag per stream token
  std::vector<Decision> decisions;     // token_index refers to the stream
  std::optional<std::string> answer_text;
  bool parse_ok = false;
  size_t generated_tokens = 0;  // policy tokens; environment insertions carry no log-probs
  size_t retrieval_calls = 0;
  bool hit_limit = false;  // turn cap or token budget ended the episode
};

struct EpisodeLimits {
  size_t max_turns = 5;
  size_t token_budget = 4096;
};

class EpisodeError : public std::runtime_error {
 public:
  EpisodeError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_trajectory(std::move(partial)) {}
  Trajectory partial_trajectory;
};

// Multi-turn loop: the policy generates until a stop tag; a closed tool call
// triggers retrieve() and the passage is appended between tool-response tags
// (the blank placeholder included verbatim); an answer terminates. A policy
// emission containing a tool-response tag ends the episode as a protocol
// violation. Throws EpisodeError with the partial trajectory if the policy
// itself fails.
Trajectory run_episode(Policy& policy, const FlatIndex& index, const std::string& prompt,
                       const EpisodeLimits& limits = {});

// replays a fixed list of emissions, then empty text; handy for tests and
// smoke runs
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> emissions)
      : emissions_(std::move(emissions)) {}
  Emission generate(const std::string& context, size_t max_tokens) override;

 private:
  std::vector<std::string> emissions_;
  size_t next_ = 0;
};

}  // namespace memrank
