#pragma once

#include <set>
#include <string>

#include "adprompt/types.hpp"

namespace adprompt {

enum class DisfluencyCategory { Interjection, Pause, Action };

inline std::string to_string(DisfluencyCategory c) {
  switch (c) {
    case DisfluencyCategory::Interjection: return "interjection";
    case DisfluencyCategory::Pause: return "pause";
    default: return "action";
  }
}

// One disfluency event as encountered in an utterance, in reading order.
struct DisfluencyEvent {
  DisfluencyCategory category;
  std::string surface;  // "uh", "(..)", "laughs", ...

  bool operator==(const DisfluencyEvent&) const = default;
};

// The token classes that count as disfluent. Explicit configuration:
// every pipeline stage that matches disfluencies takes one of these.
struct DisfluencyLexicon {
  std::set<std::string> interjections{"uh", "um", "hm", "er", "ah", "eh",
                                      "mhm"};
  std::set<std::string> pause_markers{"(.)", "(..)", "(...)"};
  std::string action_prefix{"&="};

  bool is_interjection(const std::string& word) const {
    return interjections.count(word) != 0;
  }
  bool is_pause_marker(const std::string& token) const {
    return pause_markers.count(token) != 0;
  }
  bool is_action_code(const std::string& token) const {
    return !action_prefix.empty() && token.size() > action_prefix.size() &&
           token.compare(0, action_prefix.size(), action_prefix) == 0;
  }

  // "uh" and "hm" are mandatory members; the rest is configurable.
  void validate() const {
    if (interjections.empty() || pause_markers.empty())
      throw Error("disfluency lexicon: empty category set");
    if (!interjections.count("uh") || !interjections.count("hm"))
      throw Error(
          "disfluency lexicon: interjections must include 'uh' and 'hm'");
  }
};

inline const DisfluencyLexicon& default_lexicon() {
  static const DisfluencyLexicon lex{};
  return lex;
}

}  // namespace adprompt
