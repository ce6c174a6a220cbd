#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace adprompt {

// Library-wide error type. Every precondition violation and malformed
// input surfaces as one of these with a message naming the offender.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class Split { Train, Test };
enum class AdLabel { AD, NonAD };
enum class Source { Manual, Asr };
enum class FluencyLabel { Stumbling, Fluent };
enum class Task { Diagnosis, Fluency };
enum class Paradigm { Prompt, Mlm };
enum class PromptPosition { Front, Back, None };

inline std::string to_string(Split s) {
  return s == Split::Train ? "train" : "test";
}

inline std::string to_string(AdLabel l) {
  return l == AdLabel::AD ? "AD" : "NonAD";
}

inline std::string to_string(Source s) {
  return s == Source::Manual ? "manual" : "asr";
}

inline std::string to_string(FluencyLabel l) {
  return l == FluencyLabel::Stumbling ? "Stumbling" : "Fluent";
}

inline std::string to_string(Task t) {
  return t == Task::Diagnosis ? "diagnosis" : "fluency";
}

inline std::string to_string(Paradigm p) {
  return p == Paradigm::Prompt ? "prompt" : "mlm";
}

inline std::string to_string(PromptPosition p) {
  switch (p) {
    case PromptPosition::Front: return "front";
    case PromptPosition::Back: return "back";
    default: return "na";
  }
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw Error("unknown split: '" + std::string(s) + "'");
}

inline AdLabel parse_ad_label(std::string_view s) {
  if (s == "AD") return AdLabel::AD;
  if (s == "NonAD") return AdLabel::NonAD;
  throw Error("unknown AD label: '" + std::string(s) + "'");
}

inline Source parse_source(std::string_view s) {
  if (s == "manual") return Source::Manual;
  if (s == "asr") return Source::Asr;
  throw Error("unknown transcript source: '" + std::string(s) + "'");
}

inline FluencyLabel parse_fluency_label(std::string_view s) {
  if (s == "Stumbling") return FluencyLabel::Stumbling;
  if (s == "Fluent") return FluencyLabel::Fluent;
  throw Error("unknown fluency label: '" + std::string(s) + "'");
}

inline Task parse_task(std::string_view s) {
  if (s == "diagnosis") return Task::Diagnosis;
  if (s == "fluency") return Task::Fluency;
  throw Error("unknown task: '" + std::string(s) + "'");
}

inline Paradigm parse_paradigm(std::string_view s) {
  if (s == "prompt") return Paradigm::Prompt;
  if (s == "mlm") return Paradigm::Mlm;
  throw Error("unknown paradigm: '" + std::string(s) + "'");
}

inline PromptPosition parse_prompt_position(std::string_view s) {
  if (s == "front") return PromptPosition::Front;
  if (s == "back") return PromptPosition::Back;
  if (s == "na" || s == "none") return PromptPosition::None;
  throw Error("unknown prompt position: '" + std::string(s) + "'");
}

// Canonical binary class index per task: index 0 is the "positive"
// class (AD, Stumbling), index 1 the other.
inline int class_index(AdLabel l) { return l == AdLabel::AD ? 0 : 1; }
inline int class_index(FluencyLabel l) {
  return l == FluencyLabel::Stumbling ? 0 : 1;
}

// Deterministic seed mixing for derived RNG streams (per-epoch shuffles
// and similar). splitmix64 finalizer; stable across platforms.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace adprompt
