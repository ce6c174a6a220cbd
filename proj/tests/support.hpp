#pragma once

// Shared helpers for the test suite: fixture paths, scratch directories,
// and a generator for synthetic picture-description corpora with planted
// lexical cues (so desk-scale models have something learnable).

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "adprompt/corpus.hpp"
#include "adprompt/disfluency.hpp"
#include "adprompt/types.hpp"

namespace support {

inline std::filesystem::path fixture_dir() {
  return std::filesystem::path(ADPROMPT_FIXTURE_DIR);
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("adprompt_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Class-specific marker words planted into synthetic transcripts. A
// linear reader of token identity separates the classes perfectly, so
// small models can reach high accuracy from little data.
inline const std::vector<std::string>& ad_markers() {
  static const std::vector<std::string> words{"plaque", "tangle"};
  return words;
}
inline const std::vector<std::string>& nonad_markers() {
  static const std::vector<std::string> words{"garden", "sunny"};
  return words;
}
inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words{
      "the",    "boy",  "is",  "on",     "a",      "stool",
      "water",  "sink", "and", "mother", "dishes", "window",
      "cookie", "jar",  "she", "falling"};
  return words;
}

// One synthetic transcript: `len` tokens, roughly 35% class markers.
// AD subjects additionally stumble (interjections), giving the fluency
// task its own signal.
inline std::string planted_text(adprompt::AdLabel label, std::uint64_t seed,
                                int len = 24) {
  std::mt19937_64 rng(seed);
  const auto& markers =
      label == adprompt::AdLabel::AD ? ad_markers() : nonad_markers();
  const auto& fillers = filler_words();
  std::string text;
  for (int i = 0; i < len; ++i) {
    std::string word;
    std::uint64_t roll = rng() % 100;
    if (roll < 35) {
      word = markers[rng() % markers.size()];
    } else if (roll < 50 && label == adprompt::AdLabel::AD) {
      word = (rng() % 2 == 0) ? "uh" : "um";
    } else {
      word = fillers[rng() % fillers.size()];
    }
    if (!text.empty()) text += ' ';
    text += word;
  }
  return text;
}

inline adprompt::SubjectRecord planted_record(const std::string& id,
                                              adprompt::AdLabel label,
                                              adprompt::Split split,
                                              std::uint64_t seed,
                                              int len = 24) {
  adprompt::Utterance u;
  u.tier = std::string(adprompt::kParticipantTier);
  u.raw = planted_text(label, seed, len);
  for (const std::string& w : adprompt::detail::split_ws(u.raw)) {
    if (adprompt::default_lexicon().is_interjection(w))
      u.events.push_back({adprompt::DisfluencyCategory::Interjection, w});
    u.tokens.push_back(w);
  }
  adprompt::SubjectRecord rec;
  rec.subject_id = id;
  rec.split = split;
  rec.ad_label = label;
  rec.source = adprompt::Source::Manual;
  rec.utterances.push_back(std::move(u));
  rec.merged_text = adprompt::merge_participant_text(rec.utterances);
  return rec;
}

// Balanced synthetic cohort: ids ad-000.., nn-000.. with per-record
// seeds derived from `seed`.
inline std::vector<adprompt::SubjectRecord> planted_cohort(
    int n_ad, int n_nonad, adprompt::Split split, std::uint64_t seed,
    int len = 24) {
  std::vector<adprompt::SubjectRecord> out;
  char buf[16];
  for (int i = 0; i < n_ad; ++i) {
    std::snprintf(buf, sizeof buf, "ad-%03d", i);
    out.push_back(planted_record(buf, adprompt::AdLabel::AD, split,
                                 adprompt::mix_seed(seed, i), len));
  }
  for (int i = 0; i < n_nonad; ++i) {
    std::snprintf(buf, sizeof buf, "nn-%03d", i);
    out.push_back(planted_record(buf, adprompt::AdLabel::NonAD, split,
                                 adprompt::mix_seed(seed, 1000 + i), len));
  }
  return out;
}

// Every distinct word of the cohort's merged texts.
inline std::vector<std::string> cohort_texts(
    const std::vector<adprompt::SubjectRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) out.push_back(r.merged_text);
  return out;
}

struct ThresholdFixture {
  std::vector<adprompt::DisfluencyProfile> profiles;
  std::map<std::string, adprompt::AdLabel> ad_labels;
};

// 108-subject disfluency population (54 AD / 54 NonAD) constructed so
// that the best phi-correlated threshold is exactly 11, labeling 22
// subjects Stumbling and 86 Fluent. AD totals: one each of 11..30 plus
// 34 low totals; NonAD: two high outliers (25, 30), two at 10, and
// fifty spread over 0..9.
inline ThresholdFixture threshold_fixture() {
  std::vector<int> ad_totals, nonad_totals;
  for (int t = 11; t <= 30; ++t) ad_totals.push_back(t);
  for (int rep = 0; rep < 3; ++rep)
    for (int t = 0; t <= 9; ++t) ad_totals.push_back(t);
  for (int t : {2, 4, 6, 8}) ad_totals.push_back(t);

  nonad_totals = {25, 30, 10, 10};
  for (int rep = 0; rep < 5; ++rep)
    for (int t = 0; t <= 9; ++t) nonad_totals.push_back(t);

  ThresholdFixture fx;
  auto add = [&fx](const std::string& prefix, int i, int total,
                   adprompt::AdLabel label) {
    adprompt::DisfluencyProfile p;
    p.subject_id = prefix + std::to_string(i);
    p.count_interjection = total - total / 3;
    p.count_pause = total / 3;
    p.count_action = 0;
    p.total = total;
    fx.profiles.push_back(p);
    fx.ad_labels[p.subject_id] = label;
  };
  for (std::size_t i = 0; i < ad_totals.size(); ++i)
    add("ad", static_cast<int>(i), ad_totals[i], adprompt::AdLabel::AD);
  for (std::size_t i = 0; i < nonad_totals.size(); ++i)
    add("nn", static_cast<int>(i), nonad_totals[i], adprompt::AdLabel::NonAD);
  return fx;
}

}  // namespace support
