#include "memrank/episode.hpp"

#include <algorithm>

#include "memrank/util.hpp"

namespace memrank {

std::string segment_kind_name(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Think: return "think";
    case SegmentKind::ToolCall: return "tool_call";
    case SegmentKind::ToolResponse: return "tool_response";
    case SegmentKind::Answer: return "answer";
    case SegmentKind::Malformed: return "malformed";
  }
  return "malformed";
}

namespace {

struct TagDef {
  SegmentKind kind;
  std::string_view open;
  std::string_view close;
};

constexpr TagDef kTags[] = {
    {SegmentKind::Think, "<think>", "</think>"},
    {SegmentKind::ToolCall, "<tool_call>", "</tool_call>"},
    {SegmentKind::ToolResponse, "<tool_response>", "</tool_response>"},
    {SegmentKind::Answer, "<answer>", "</answer>"},
};

struct CharSegment {
  SegmentKind kind;
  std::string body;
  size_t char_begin;
  size_t char_end;
};

std::vector<CharSegment> scan_segments(const std::string& text) {
  std::vector<CharSegment> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t best_pos = std::string::npos;
    const TagDef* best = nullptr;
    for (const auto& tag : kTags) {
      size_t p = text.find(tag.open, pos);
      if (p != std::string::npos && (best_pos == std::string::npos || p < best_pos)) {
        best_pos = p;
        best = &tag;
      }
    }
    if (!best) break;
    size_t body_begin = best_pos + best->open.size();
    size_t close_pos = text.find(best->close, body_begin);
    if (close_pos == std::string::npos) {
      out.push_back({SegmentKind::Malformed, trim(std::string_view(text).substr(best_pos)),
                     best_pos, text.size()});
      break;
    }
    out.push_back({best->kind, trim(std::string_view(text).substr(body_begin, close_pos - body_begin)),
                   best_pos, close_pos + best->close.size()});
    pos = close_pos + best->close.size();
  }
  return out;
}

// maps character spans onto whitespace-token indices; a token straddling a
// boundary goes to the earlier segment so spans stay disjoint
std::vector<TaggedSegment> map_to_tokens(const std::string& text,
                                         const std::vector<CharSegment>& chars) {
  auto tokens = token_spans(text);
  std::vector<TaggedSegment> out;
  out.reserve(chars.size());
  size_t floor_token = 0;
  for (const auto& seg : chars) {
    size_t begin = tokens.size(), end = tokens.size();
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].end > seg.char_begin) {
        begin = t;
        break;
      }
    }
    for (size_t t = begin; t < tokens.size(); ++t) {
      if (tokens[t].begin >= seg.char_end) {
        end = t;
        break;
      }
    }
    begin = std::max(begin, floor_token);
    end = std::max(end, begin);
    floor_token = end;
    out.push_back({seg.kind, seg.body, begin, end});
  }
  return out;
}

}  // namespace

std::vector<TaggedSegment> parse_segments(const std::string& text) {
  return map_to_tokens(text, scan_segments(text));
}

AnswerExtraction extract_answer(const std::vector<TaggedSegment>& segments) {
  const TaggedSegment* answer = nullptr;
  for (const auto& seg : segments) {
    if (seg.kind != SegmentKind::Answer) continue;
    if (answer) return {};  // several answers: ambiguity is a parse failure
    answer = &seg;
  }
  if (!answer) return {};

  size_t open = answer->body.find('"');
  if (open == std::string::npos) return {};
  size_t close = answer->body.find('"', open + 1);
  if (close == std::string::npos) return {};
  std::string title = trim(std::string_view(answer->body).substr(open + 1, close - open - 1));
  if (title.empty()) return {};
  return {title, true};
}

std::string render_prompt(const std::vector<std::string>& history_titles,
                          const DatasetProfile& p, const AblationFlags& ab) {
  if (history_titles.empty()) throw std::invalid_argument("render_prompt: empty history");
  const bool cf = !ab.without_cf;
  const bool meta = !ab.without_meta;
  const bool retrieval = cf || meta;

  std::string titles;
  for (size_t i = 0; i < history_titles.size(); ++i) {
    if (i) titles += ", ";
    titles += '"' + history_titles[i] + '"';
  }

  std::string out;
  out += "You are a recommendation assistant. Given a list of " + p.item_noun_plural +
         " the user recently enjoys, please recommend a new " + p.item_noun +
         " that the user may like. The user has " + p.consume_verb_past + " the following " +
         p.item_noun_plural + " before: " + titles + ".\n\n";

  out += "Begin by briefly analyzing the current user's " + p.history_label +
         " history to infer his preference.";
  if (retrieval) {
    out +=
        " If necessary, you can then generate a query and call an existing search engine by "
        "specifying \"<tool_call> query </tool_call>\". The query can search: ";
    const std::string meta_clause =
        p.item_noun + " metadata including the " + join(p.prompt_meta_labels, ", ");
    if (cf && meta)
      out += "(1) other users' interaction histories and (2) " + meta_clause + ".";
    else if (cf)
      out += "other users' interaction histories.";
    else
      out += meta_clause + ".";
    if (cf) {
      out += " For example, you may query to identify users who engaged with " + p.item_noun_plural +
             " similar to those viewed by the current user, retrieve their interaction patterns, and"
             " use these insights to predict additional " +
             p.item_noun_plural + " the current user may appreciate.";
    }
    out += " Only query the search engine when necessary, and keep all reasoning concise.";
  }

  out += "\n\nResolve the given task.";
  if (!ab.without_re) {
    out +=
        " You must conduct reasoning inside <think> and </think> first every time you get new "
        "information.";
    if (retrieval) {
      out +=
          " After reasoning, if you find you lack some knowledge, you can call a search engine by "
          "<tool_call> query </tool_call> and it will return the top searched results between "
          "<tool_response> and </tool_response>. You can continue this reasoning and search process.";
    }
  } else if (retrieval) {
    out +=
        " You can call a search engine by <tool_call> query </tool_call> and it will return the top "
        "searched results between <tool_response> and </tool_response>. Iteratively retrieve "
        "information until you are confident, and then directly make the recommendation.";
  }
  out += " Remember to provide the name of the user's most preferred " + p.item_noun +
         " (a single item) enclosed within <answer> and </answer> at last, using two double quotes."
         " For example: <answer> \"A Monster Calls\" </answer>.";
  return out;
}

namespace {

// appends `piece` to the transcript, inserting a newline when neither side
// supplies whitespace so token boundaries survive concatenation
void append_piece(std::string& transcript, const std::string& piece) {
  if (piece.empty()) return;
  if (!transcript.empty() && !ends_with_ws(transcript) && !starts_with_ws(piece)) transcript += '\n';
  transcript += piece;
}

struct EmissionAction {
  enum Kind { None, Answered, ToolCall, ResponseSpoofed } kind = None;
  std::string query;
};

EmissionAction classify_emission(const std::string& text) {
  auto segments = scan_segments(text);
  EmissionAction action;
  for (const auto& seg : segments) {
    if (seg.kind == SegmentKind::Answer) return {EmissionAction::Answered, {}};
    if (seg.kind == SegmentKind::ToolResponse) return {EmissionAction::ResponseSpoofed, {}};
  }
  if (!segments.empty() && segments.back().kind == SegmentKind::ToolCall) {
    action.kind = EmissionAction::ToolCall;
    action.query = segments.back().body;
  }
  return action;
}

}  // namespace

Trajectory run_episode(Policy& policy, const FlatIndex& index, const std::string& prompt,
                       const EpisodeLimits& limits) {
  Trajectory traj;
  traj.prompt = prompt;

  size_t remaining = limits.token_budget;

  auto finalize = [&]() {
    traj.segments = parse_segments(traj.generated_text);
    auto extraction = extract_answer(traj.segments);
    traj.answer_text = extraction.title;
    traj.parse_ok = extraction.parse_ok;
    return traj;
  };

  auto append_policy_emission = [&](Emission&& e) {
    auto spans = token_spans(e.text);
    if (spans.size() > remaining) {
      // cut the emission at the budget; dangling tags parse as malformed
      size_t keep = remaining;
      e.text.resize(keep == 0 ? 0 : spans[keep - 1].end);
      spans.resize(keep);
      std::erase_if(e.decisions, [&](const Decision& d) { return d.token_index >= keep; });
      traj.hit_limit = true;
    }
    e.token_logprobs.resize(spans.size(), 0.0);

    const size_t base = traj.token_is_env.size();
    append_piece(traj.generated_text, e.text);
    for (size_t i = 0; i < spans.size(); ++i) {
      traj.token_is_env.push_back(0);
      traj.token_logprobs.push_back(e.token_logprobs[i]);
    }
    for (Decision d : e.decisions) {
      d.token_index += base;
      traj.decisions.push_back(d);
    }
    traj.generated_tokens += spans.size();
    remaining -= std::min(remaining, spans.size());
    return e.text;
  };

  auto append_env_text = [&](const std::string& text) {
    append_piece(traj.generated_text, text);
    size_t n = token_count(text);
    for (size_t i = 0; i < n; ++i) traj.token_is_env.push_back(1);
  };

  while (true) {
    if (remaining == 0) {
      traj.hit_limit = true;
      break;
    }
    Emission emission;
    try {
      emission = policy.generate(prompt + (traj.generated_text.empty() ? "" : "\n") + traj.generated_text,
                                 remaining);
    } catch (const std::exception& e) {
      throw EpisodeError(std::string("policy generation failed: ") + e.what(), finalize());
    }
    if (token_count(emission.text) == 0) break;  // nothing generated, nothing to act on

    const std::string kept = append_policy_emission(std::move(emission));
    EmissionAction action = classify_emission(kept);
    if (action.kind == EmissionAction::Answered) break;
    if (action.kind == EmissionAction::ResponseSpoofed) break;
    if (action.kind == EmissionAction::ToolCall) {
      if (traj.retrieval_calls >= limits.max_turns) {
        traj.hit_limit = true;
        break;
      }
      std::string passage = index.retrieve(action.query);
      append_env_text("<tool_response> " + passage + (passage.empty() ? "" : " ") + "</tool_response>");
      ++traj.retrieval_calls;
      continue;
    }
    break;  // malformed or non-actionable emission
  }

  return finalize();
}

Emission ScriptedPolicy::generate(const std::string&, size_t) {
  Emission e;
  if (next_ >= emissions_.size()) return e;
  e.text = emissions_[next_++];
  e.token_logprobs.assign(token_count(e.text), 0.0);
  return e;
}

}  // namespace memrank
