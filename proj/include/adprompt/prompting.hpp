#pragma once

// Prompt templates, the class-to-label-word verbalizer, and assembly of
// prompted inputs. Templates are literal strings with <MASK> slots; an
// optional annotation binds a slot to a task, e.g.
// "Speech is <MASK task=fluency>. Diagnosis is <MASK task=diagnosis>."
// Unannotated templates default to: one slot -> diagnosis; two slots ->
// fluency then diagnosis.

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "adprompt/detail/strings.hpp"
#include "adprompt/tokenizer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

inline constexpr std::string_view kDefaultSingleTaskTemplate =
    "The diagnosis is <MASK>.";
inline constexpr std::string_view kDefaultMultiTaskTemplate =
    "Speech is <MASK>. Diagnosis is <MASK>.";

struct TemplateSegment {
  enum class Kind { Literal, MaskSlot };
  Kind kind = Kind::Literal;
  std::string text;               // literal text; empty for mask slots
  Task task = Task::Diagnosis;    // mask slots only
  bool active = true;             // inactive slots keep their mask token
                                  // in the sequence but drive no task

  bool operator==(const TemplateSegment&) const = default;
};

struct PromptTemplate {
  std::vector<TemplateSegment> segments;
  PromptPosition position = PromptPosition::Back;

  std::vector<Task> active_tasks() const {
    std::vector<Task> out;
    for (const TemplateSegment& s : segments)
      if (s.kind == TemplateSegment::Kind::MaskSlot && s.active)
        out.push_back(s.task);
    return out;
  }

  bool has_task(Task t) const {
    for (Task a : active_tasks())
      if (a == t) return true;
    return false;
  }
};

// Deactivates every mask slot except `keep`. The token layout of
// assembled inputs is unchanged; only the task bindings shrink.
inline PromptTemplate restrict_template(PromptTemplate tmpl, Task keep) {
  bool found = false;
  for (TemplateSegment& s : tmpl.segments) {
    if (s.kind != TemplateSegment::Kind::MaskSlot) continue;
    s.active = s.active && s.task == keep;
    found = found || s.active;
  }
  if (!found)
    throw Error("restrict_template: template has no '" + to_string(keep) +
                "' slot");
  return tmpl;
}

inline PromptTemplate parse_template(std::string_view text,
                                     PromptPosition position) {
  static constexpr std::string_view kOpen = "<MASK";
  PromptTemplate tmpl;
  tmpl.position = position;

  std::vector<std::size_t> unannotated;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find(kOpen, pos);
    if (open == std::string_view::npos) {
      tmpl.segments.push_back(
          {TemplateSegment::Kind::Literal, std::string(text.substr(pos))});
      break;
    }
    if (open > pos)
      tmpl.segments.push_back({TemplateSegment::Kind::Literal,
                               std::string(text.substr(pos, open - pos))});
    std::size_t close = text.find('>', open);
    if (close == std::string_view::npos)
      throw Error("template: unterminated <MASK...> placeholder");
    std::string_view inner = text.substr(open + kOpen.size(),
                                         close - open - kOpen.size());
    TemplateSegment slot;
    slot.kind = TemplateSegment::Kind::MaskSlot;
    std::string_view attrs = detail::trim(inner);
    if (attrs.empty()) {
      unannotated.push_back(tmpl.segments.size());
    } else if (attrs.rfind("task=", 0) == 0) {
      slot.task = parse_task(attrs.substr(5));
    } else {
      throw Error("template: unknown placeholder annotation '" +
                  std::string(attrs) + "'");
    }
    tmpl.segments.push_back(slot);
    pos = close + 1;
  }

  std::size_t slots = 0;
  for (const TemplateSegment& s : tmpl.segments)
    if (s.kind == TemplateSegment::Kind::MaskSlot) ++slots;
  if (slots == 0) throw Error("template: at least one <MASK> slot required");
  if (!unannotated.empty() && unannotated.size() != slots)
    throw Error("template: either annotate every <MASK> slot or none");
  if (unannotated.size() == 1) {
    tmpl.segments[unannotated[0]].task = Task::Diagnosis;
  } else if (unannotated.size() == 2) {
    tmpl.segments[unannotated[0]].task = Task::Fluency;
    tmpl.segments[unannotated[1]].task = Task::Diagnosis;
  } else if (unannotated.size() > 2) {
    throw Error("template: more than two slots need task= annotations");
  }

  std::map<Task, int> per_task;
  for (const TemplateSegment& s : tmpl.segments)
    if (s.kind == TemplateSegment::Kind::MaskSlot && ++per_task[s.task] > 1)
      throw Error("template: duplicate slot for task '" + to_string(s.task) +
                  "'");
  return tmpl;
}

// Class -> label word for one task; index 0 is the positive class
// (AD / Stumbling), index 1 the other. Ids resolve per backend vocab.
struct TaskVerbalizer {
  std::array<std::string, 2> words;
  std::array<int, 2> ids{-1, -1};

  bool resolved() const { return ids[0] >= 0 && ids[1] >= 0; }
};

struct Verbalizer {
  std::map<Task, TaskVerbalizer> tasks;

  static Verbalizer defaults() {
    Verbalizer v;
    v.tasks[Task::Diagnosis] = {{"dementia", "healthy"}, {-1, -1}};
    v.tasks[Task::Fluency] = {{"stumbling", "fluent"}, {-1, -1}};
    return v;
  }

  const TaskVerbalizer& for_task(Task t) const {
    auto it = tasks.find(t);
    if (it == tasks.end())
      throw Error("verbalizer: no entry for task '" + to_string(t) + "'");
    return it->second;
  }
};

// Resolves every label word to exactly one vocabulary token of the
// given tokenizer; multi-token or unknown words are errors.
inline Verbalizer validate_verbalizer(Verbalizer verbalizer,
                                      const Tokenizer& tokenizer) {
  for (auto& [task, tv] : verbalizer.tasks) {
    for (std::size_t i = 0; i < tv.words.size(); ++i) {
      std::vector<int> pieces = tokenizer.encode_word(tv.words[i]);
      if (pieces.empty())
        throw Error("verbalizer: label word '" + tv.words[i] +
                    "' is not in the vocabulary");
      if (pieces.size() != 1)
        throw Error("verbalizer: label word '" + tv.words[i] +
                    "' resolves to " + std::to_string(pieces.size()) +
                    " tokens; exactly one required");
      tv.ids[i] = pieces[0];
    }
  }
  return verbalizer;
}

// A token sequence ready for a masked-LM forward pass.
struct PromptedInput {
  std::vector<int> token_ids;
  std::vector<std::size_t> mask_positions;      // positions needing logits
  std::map<Task, std::size_t> task_masks;       // active task -> position
  std::size_t transcript_offset = 0;            // span of transcript tokens
  std::size_t transcript_length = 0;

  bool operator==(const PromptedInput&) const = default;
};

// Lays out [begin] prompt transcript [end] (Front) or
// [begin] transcript prompt [end] (Back). When the sequence exceeds
// max_len, transcript tokens are dropped from the transcript's end;
// prompt tokens and sequence markers are never touched.
inline PromptedInput assemble(const PromptTemplate& tmpl,
                              std::string_view transcript_text,
                              const Tokenizer& tokenizer, int max_len) {
  if (tokenizer.mask_id() < 0 ||
      tokenizer.mask_id() >= tokenizer.vocab_size())
    throw Error("assemble: tokenizer has no usable mask token");
  if (tmpl.position == PromptPosition::None)
    throw Error("assemble: template position must be front or back");

  struct SlotRef {
    std::size_t index_in_prompt;
    Task task;
    bool active;
  };
  std::vector<int> prompt_ids;
  std::vector<SlotRef> slots;
  for (const TemplateSegment& seg : tmpl.segments) {
    if (seg.kind == TemplateSegment::Kind::Literal) {
      std::vector<int> ids = tokenizer.encode(seg.text);
      prompt_ids.insert(prompt_ids.end(), ids.begin(), ids.end());
    } else {
      slots.push_back({prompt_ids.size(), seg.task, seg.active});
      prompt_ids.push_back(tokenizer.mask_id());
    }
  }

  const std::size_t overhead = prompt_ids.size() + 2;  // markers
  if (static_cast<int>(overhead) > max_len)
    throw Error("assemble: prompt plus markers (" + std::to_string(overhead) +
                " tokens) exceeds max_len " + std::to_string(max_len));

  std::vector<int> transcript_ids = tokenizer.encode(transcript_text);
  std::size_t budget = static_cast<std::size_t>(max_len) - overhead;
  if (transcript_ids.size() > budget) transcript_ids.resize(budget);

  PromptedInput input;
  input.token_ids.reserve(overhead + transcript_ids.size());
  input.token_ids.push_back(tokenizer.begin_id());
  std::size_t prompt_offset;
  if (tmpl.position == PromptPosition::Front) {
    prompt_offset = 1;
    input.token_ids.insert(input.token_ids.end(), prompt_ids.begin(),
                           prompt_ids.end());
    input.transcript_offset = input.token_ids.size();
    input.token_ids.insert(input.token_ids.end(), transcript_ids.begin(),
                           transcript_ids.end());
  } else {
    input.transcript_offset = 1;
    input.token_ids.insert(input.token_ids.end(), transcript_ids.begin(),
                           transcript_ids.end());
    prompt_offset = input.token_ids.size();
    input.token_ids.insert(input.token_ids.end(), prompt_ids.begin(),
                           prompt_ids.end());
  }
  input.transcript_length = transcript_ids.size();
  input.token_ids.push_back(tokenizer.end_id());

  for (const SlotRef& slot : slots) {
    if (!slot.active) continue;
    std::size_t position = prompt_offset + slot.index_in_prompt;
    input.mask_positions.push_back(position);
    input.task_masks[slot.task] = position;
  }
  return input;
}

// Plain sequence without a prompt: [begin] text [end], truncated from
// the text's end. Used by the masked-LM fine-tuning and embedding paths.
inline PromptedInput assemble_plain(std::string_view text,
                                    const Tokenizer& tokenizer, int max_len) {
  if (max_len < 2) throw Error("assemble_plain: max_len must be >= 2");
  std::vector<int> ids = tokenizer.encode(text);
  std::size_t budget = static_cast<std::size_t>(max_len) - 2;
  if (ids.size() > budget) ids.resize(budget);
  PromptedInput input;
  input.token_ids.push_back(tokenizer.begin_id());
  input.transcript_offset = 1;
  input.transcript_length = ids.size();
  input.token_ids.insert(input.token_ids.end(), ids.begin(), ids.end());
  input.token_ids.push_back(tokenizer.end_id());
  return input;
}

}  // namespace adprompt
