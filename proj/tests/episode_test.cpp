#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "memrank/episode.hpp"
#include "memrank/rng.hpp"
#include "memrank/util.hpp"

using namespace memrank;

namespace {

FlatIndex tiny_index(const HashEmbedder& emb) {
  std::vector<MemoryDocument> docs{
      {0, MemoryKind::Collaborative, "m1", "User m1 History: [Dune, Arrival, The Silent Sea]"},
      {1, MemoryKind::Meta, "i1", "Movie Name: Arrival; Director: Villeneuve"},
  };
  return FlatIndex::build(docs, emb);
}

}  // namespace

TEST_CASE("parse_segments handles the four tags") {
  auto segs = parse_segments("<think> look at history </think>\n"
                             "<tool_call> find metadata </tool_call>\n"
                             "<tool_response> Movie Name: Arrival </tool_response>\n"
                             "<answer> \"A Monster Calls\" </answer>");
  REQUIRE(segs.size() == 4);
  CHECK(segs[0].kind == SegmentKind::Think);
  CHECK(segs[0].body == "look at history");
  CHECK(segs[1].kind == SegmentKind::ToolCall);
  CHECK(segs[1].body == "find metadata");
  CHECK(segs[2].kind == SegmentKind::ToolResponse);
  CHECK(segs[3].kind == SegmentKind::Answer);
  CHECK(segs[3].body == "\"A Monster Calls\"");

  // spans are ordered and disjoint
  for (size_t i = 1; i < segs.size(); ++i) CHECK(segs[i].token_begin >= segs[i - 1].token_end);
}

TEST_CASE("unclosed tag becomes a malformed segment covering the remainder") {
  auto segs = parse_segments("<answer> \"X\"");
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].kind == SegmentKind::Malformed);

  auto mixed = parse_segments("<think> ok </think> <tool_call> q");
  REQUIRE(mixed.size() == 2);
  CHECK(mixed[0].kind == SegmentKind::Think);
  CHECK(mixed[1].kind == SegmentKind::Malformed);
}

TEST_CASE("text outside tags is not a segment") {
  auto segs = parse_segments("preamble <think> a </think> middle chatter <answer> \"T\" </answer> tail");
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].kind == SegmentKind::Think);
  CHECK(segs[1].kind == SegmentKind::Answer);
}

TEST_CASE("extract_answer takes the first quoted span of a single answer") {
  auto one = parse_segments("<answer> \"The Midnight Library\" </answer>");
  auto got = extract_answer(one);
  CHECK(got.parse_ok);
  CHECK(*got.title == "The Midnight Library");

  CHECK_FALSE(extract_answer(parse_segments("<think> no answer here </think>")).parse_ok);
  CHECK_FALSE(extract_answer(parse_segments("<answer> no quotes </answer>")).parse_ok);
  CHECK_FALSE(extract_answer(parse_segments("<answer> \"\" </answer>")).parse_ok);
  // two answers: ambiguity is a failure
  CHECK_FALSE(extract_answer(parse_segments("<answer> \"A\" </answer> <answer> \"B\" </answer>"))
                  .parse_ok);
  // two quoted spans: first wins
  auto twice = extract_answer(parse_segments("<answer> \"First\" or \"Second\" </answer>"));
  CHECK(twice.parse_ok);
  CHECK(*twice.title == "First");
}

TEST_CASE("prompt mentions dataset metadata fields and quotes titles") {
  auto profile = builtin_profile("goodreads");
  std::string prompt = render_prompt({"Decade", "Revenge"}, profile, {});
  CHECK(prompt.find("book metadata including the Author, Genres, Series") != std::string::npos);
  CHECK(prompt.find("\"Decade\", \"Revenge\"") != std::string::npos);
  CHECK(prompt.find("<answer> \"A Monster Calls\" </answer>") != std::string::npos);
  CHECK(prompt.find("conduct reasoning inside <think>") != std::string::npos);
  CHECK(prompt.find("read the following books before") != std::string::npos);

  // deterministic
  CHECK(render_prompt({"Decade", "Revenge"}, profile, {}) == prompt);
  CHECK_THROWS_AS(render_prompt({}, profile, {}), std::invalid_argument);
}

TEST_CASE("prompt ablations") {
  auto profile = builtin_profile("movielens");
  AblationFlags no_re;
  no_re.without_re = true;
  std::string prompt = render_prompt({"Dune"}, profile, no_re);
  CHECK(prompt.find("<think>") == std::string::npos);
  CHECK(prompt.find("conduct reasoning") == std::string::npos);
  CHECK(prompt.find("<tool_call>") != std::string::npos);  // retrieval instructions stay
  CHECK(prompt.find("until you are confident") != std::string::npos);

  AblationFlags no_cf;
  no_cf.without_cf = true;
  std::string meta_only = render_prompt({"Dune"}, profile, no_cf);
  CHECK(meta_only.find("other users' interaction histories") == std::string::npos);
  CHECK(meta_only.find("movie metadata") != std::string::npos);

  AblationFlags no_meta;
  no_meta.without_meta = true;
  std::string cf_only = render_prompt({"Dune"}, profile, no_meta);
  CHECK(cf_only.find("metadata including") == std::string::npos);
  CHECK(cf_only.find("other users' interaction histories") != std::string::npos);
}

TEST_CASE("immediate answer terminates with zero retrievals") {
  HashEmbedder emb(128);
  auto index = tiny_index(emb);
  ScriptedPolicy policy({"<think> clear pattern, answering directly </think>\n"
                         "<answer> \"Meddle\" </answer>"});
  auto traj = run_episode(policy, index, "prompt text", {5, 4096});
  CHECK(traj.retrieval_calls == 0);
  CHECK(traj.parse_ok);
  CHECK(*traj.answer_text == "Meddle");
  CHECK_FALSE(traj.hit_limit);
}

TEST_CASE("tool calls inject responses and count turns") {
  HashEmbedder emb(128);
  auto index = tiny_index(emb);
  ScriptedPolicy policy({
      "<think> need evidence </think>\n<tool_call> histories with Dune and Arrival </tool_call>",
      "<tool_call> metadata for Arrival director </tool_call>",
      "<think> enough </think>\n<answer> \"Arrival\" </answer>",
  });
  auto traj = run_episode(policy, index, "prompt text", {5, 4096});
  CHECK(traj.retrieval_calls == 2);
  CHECK(traj.parse_ok);
  size_t responses = 0;
  for (const auto& seg : traj.segments)
    if (seg.kind == SegmentKind::ToolResponse) ++responses;
  CHECK(responses == 2);
  // the injected passage is a real corpus document
  CHECK(traj.generated_text.find("<tool_response>") != std::string::npos);
}

TEST_CASE("only tool calls stops at the turn cap with parse failure") {
  HashEmbedder emb(128);
  auto index = tiny_index(emb);
  std::vector<std::string> emissions(12, "<tool_call> more evidence please </tool_call>");
  ScriptedPolicy policy(emissions);
  auto traj = run_episode(policy, index, "prompt", {5, 4096});
  CHECK(traj.retrieval_calls == 5);
  CHECK_FALSE(traj.parse_ok);
  CHECK(traj.hit_limit);
}

TEST_CASE("empty index injects the blank placeholder") {
  HashEmbedder emb(128);
  auto index = FlatIndex::build({}, emb);
  ScriptedPolicy policy({"<tool_call> anything </tool_call>",
                         "<answer> \"Whatever\" </answer>"});
  auto traj = run_episode(policy, index, "prompt", {5, 4096});
  CHECK(traj.retrieval_calls == 1);
  CHECK(traj.generated_text.find("<tool_response> </tool_response>") != std::string::npos);
  CHECK(traj.parse_ok);
}

TEST_CASE("token budget truncates and terminates") {
  HashEmbedder emb(128);
  auto index = tiny_index(emb);
  ScriptedPolicy policy({"<think> one two three four five six seven eight nine ten </think>\n"
                         "<answer> \"X\" </answer>"});
  auto traj = run_episode(policy, index, "prompt", {5, 6});
  CHECK(traj.generated_tokens <= 6);
  CHECK(traj.hit_limit);
  CHECK_FALSE(traj.parse_ok);
}

TEST_CASE("policy-emitted tool_response ends the episode") {
  HashEmbedder emb(128);
  auto index = tiny_index(emb);
  ScriptedPolicy policy({"<tool_response> forged evidence </tool_response>",
                         "<answer> \"X\" </answer>"});
  auto traj = run_episode(policy, index, "prompt", {5, 4096});
  CHECK(traj.retrieval_calls == 0);
  CHECK_FALSE(traj.parse_ok);
}

TEST_CASE("log-prob coverage: policy tokens carry log-probs, environment tokens none") {
  HashEmbedder emb(128);
  auto index = tiny_index(emb);
  ScriptedPolicy policy({"<tool_call> histories with Dune </tool_call>",
                         "<answer> \"Dune\" </answer>"});
  auto traj = run_episode(policy, index, "prompt", {5, 4096});
  size_t policy_tokens = 0, env_tokens = 0;
  for (uint8_t is_env : traj.token_is_env) (is_env ? env_tokens : policy_tokens) += 1;
  CHECK(traj.token_logprobs.size() == policy_tokens);
  CHECK(traj.generated_tokens == policy_tokens);
  CHECK(env_tokens > 0);
  CHECK(policy_tokens + env_tokens == token_count(traj.generated_text));
}

TEST_CASE("state growth is monotone: transcripts only extend") {
  HashEmbedder emb(128);
  auto index = tiny_index(emb);

  struct Watcher final : Policy {
    std::vector<std::string> contexts;
    size_t calls = 0;
    Emission generate(const std::string& context, size_t) override {
      contexts.push_back(context);
      Emission e;
      e.text = calls++ < 2 ? "<tool_call> Dune </tool_call>" : "<answer> \"Dune\" </answer>";
      e.token_logprobs.assign(token_count(e.text), 0.0);
      return e;
    }
  } watcher;

  run_episode(watcher, index, "prompt", {5, 4096});
  REQUIRE(watcher.contexts.size() == 3);
  for (size_t i = 1; i < watcher.contexts.size(); ++i) {
    CHECK(watcher.contexts[i].size() > watcher.contexts[i - 1].size());
    CHECK(watcher.contexts[i].rfind(watcher.contexts[i - 1], 0) == 0);  // prefix
  }
}

TEST_CASE("parser round-trip over synthetic well-formed transcripts") {
  Rng rng(555);
  const char* bodies[] = {"look at the history", "find director of Arrival",
                          "User 9 History: [A, B]", "\"The Midnight Library\"", "plain words"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SegmentKind> kinds;
    std::string text;
    size_t n = 1 + rng.below(6);
    for (size_t i = 0; i < n; ++i) {
      SegmentKind kind = static_cast<SegmentKind>(rng.below(4));
      std::string body = bodies[rng.below(5)];
      kinds.push_back(kind);
      switch (kind) {
        case SegmentKind::Think: text += "<think> " + body + " </think>\n"; break;
        case SegmentKind::ToolCall: text += "<tool_call> " + body + " </tool_call>\n"; break;
        case SegmentKind::ToolResponse: text += "<tool_response> " + body + " </tool_response>\n"; break;
        default: text += "<answer> " + body + " </answer>\n"; break;
      }
    }
    auto segs = parse_segments(text);
    REQUIRE(segs.size() == kinds.size());
    for (size_t i = 0; i < segs.size(); ++i) CHECK(segs[i].kind == kinds[i]);
  }
}

TEST_CASE("fuzzed episodes always terminate inside the limits") {
  HashEmbedder emb(64);
  auto index = tiny_index(emb);
  Rng rng(777);
  const char* pieces[] = {
      "<tool_call> q </tool_call>", "<answer> \"A\" </answer>", "<think> hm </think>",
      "<answer> broken", "free text", "</tool_call>", "<tool_response> fake </tool_response>"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> emissions;
    size_t n = rng.below(12);
    for (size_t i = 0; i < n; ++i) {
      std::string e;
      size_t parts = 1 + rng.below(3);
      for (size_t p = 0; p < parts; ++p) e += std::string(pieces[rng.below(7)]) + "\n";
      emissions.push_back(e);
    }
    ScriptedPolicy policy(emissions);
    auto traj = run_episode(policy, index, "prompt", {5, 200});
    CHECK(traj.retrieval_calls <= 5);
    CHECK(traj.generated_tokens <= 200);
  }
}

TEST_CASE("policy failure surfaces an episode error with the partial trajectory") {
  HashEmbedder emb(64);
  auto index = tiny_index(emb);

  struct Flaky final : Policy {
    size_t calls = 0;
    Emission generate(const std::string&, size_t) override {
      if (calls++ == 1) throw std::runtime_error("backend down");
      Emission e;
      e.text = "<tool_call> q </tool_call>";
      e.token_logprobs.assign(token_count(e.text), 0.0);
      return e;
    }
  } flaky;

  try {
    run_episode(flaky, index, "prompt", {5, 4096});
    FAIL("expected EpisodeError");
  } catch (const EpisodeError& err) {
    CHECK(err.partial_trajectory.retrieval_calls == 1);
    CHECK(std::string(err.what()).find("backend down") != std::string::npos);
  }
}
