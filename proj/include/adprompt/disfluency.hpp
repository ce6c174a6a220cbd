#pragma once

// Per-subject disfluency profiles and the Stumbling/Fluent labeling used
// as the auxiliary task of the multi-task prompt. Two threshold
// selectors are provided: phi-coefficient maximization against the
// diagnosis labels, and proportion matching against a reference
// labeling from another transcript source.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "adprompt/corpus.hpp"
#include "adprompt/lexicon.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

struct DisfluencyProfile {
  std::string subject_id;
  int count_interjection = 0;
  int count_pause = 0;
  int count_action = 0;
  int total = 0;

  bool operator==(const DisfluencyProfile&) const = default;
};

struct FluencyLabeling {
  int threshold = 0;
  std::map<std::string, FluencyLabel> labels;
  int stumbling_count = 0;
  int fluent_count = 0;

  double stumbling_proportion() const {
    int n = stumbling_count + fluent_count;
    return n == 0 ? 0.0 : static_cast<double>(stumbling_count) / n;
  }
};

// Tallies disfluency events over the participant utterances of one
// record. Interjections are matched against the given lexicon's word
// set so a lexicon swap does not require re-parsing; pause and action
// events are structural and come from the parse.
inline DisfluencyProfile profile(const SubjectRecord& record,
                                 const DisfluencyLexicon& lexicon = default_lexicon(),
                                 std::string_view participant_tier = kParticipantTier) {
  DisfluencyProfile p;
  p.subject_id = record.subject_id;
  for (const Utterance& u : record.utterances) {
    if (u.tier != participant_tier) continue;
    for (const DisfluencyEvent& e : u.events) {
      if (e.category == DisfluencyCategory::Pause) ++p.count_pause;
      if (e.category == DisfluencyCategory::Action) ++p.count_action;
    }
    for (const std::string& tok : u.tokens) {
      if (lexicon.is_interjection(tok)) ++p.count_interjection;
    }
  }
  p.total = p.count_interjection + p.count_pause + p.count_action;
  return p;
}

inline std::vector<DisfluencyProfile> profile_all(
    const std::vector<SubjectRecord>& records,
    const DisfluencyLexicon& lexicon = default_lexicon()) {
  std::vector<DisfluencyProfile> out;
  out.reserve(records.size());
  for (const SubjectRecord& r : records) out.push_back(profile(r, lexicon));
  return out;
}

// Stumbling iff total >= threshold.
inline FluencyLabeling label_with_threshold(
    const std::vector<DisfluencyProfile>& profiles, int threshold) {
  FluencyLabeling out;
  out.threshold = threshold;
  for (const DisfluencyProfile& p : profiles) {
    FluencyLabel label = p.total >= threshold ? FluencyLabel::Stumbling
                                              : FluencyLabel::Fluent;
    out.labels[p.subject_id] = label;
    (label == FluencyLabel::Stumbling ? out.stumbling_count
                                      : out.fluent_count)++;
  }
  return out;
}

// Phi coefficient of the 2x2 table {total >= t} x {label == AD}.
// Any zero marginal makes the table degenerate; that scores 0.
inline double phi_at_threshold(const std::vector<DisfluencyProfile>& profiles,
                               const std::map<std::string, AdLabel>& ad_labels,
                               int threshold) {
  std::int64_t n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (const DisfluencyProfile& p : profiles) {
    auto it = ad_labels.find(p.subject_id);
    if (it == ad_labels.end())
      throw Error("phi: no AD label for subject '" + p.subject_id + "'");
    bool stumbling = p.total >= threshold;
    bool ad = it->second == AdLabel::AD;
    if (stumbling && ad) ++n11;
    if (stumbling && !ad) ++n10;
    if (!stumbling && ad) ++n01;
    if (!stumbling && !ad) ++n00;
  }
  std::int64_t r1 = n11 + n10, r0 = n01 + n00;
  std::int64_t c1 = n11 + n01, c0 = n10 + n00;
  if (r1 == 0 || r0 == 0 || c1 == 0 || c0 == 0) return 0.0;
  double denom = std::sqrt(static_cast<double>(r1) * static_cast<double>(r0) *
                           static_cast<double>(c1) * static_cast<double>(c0));
  return (static_cast<double>(n11) * n00 - static_cast<double>(n10) * n01) /
         denom;
}

// Scans every integer threshold in [0, max_total + 1] and returns the
// labeling whose Stumbling/Fluent split correlates best with the AD
// labels. Ties break toward the smallest threshold.
inline FluencyLabeling select_threshold_by_correlation(
    const std::vector<DisfluencyProfile>& profiles,
    const std::map<std::string, AdLabel>& ad_labels) {
  if (profiles.empty())
    throw Error("select_threshold_by_correlation: no profiles");
  if (profiles.size() != ad_labels.size())
    throw Error(
        "select_threshold_by_correlation: profiles and labels cover "
        "different subject sets");
  int n_ad = 0;
  for (const DisfluencyProfile& p : profiles) {
    auto it = ad_labels.find(p.subject_id);
    if (it == ad_labels.end())
      throw Error("select_threshold_by_correlation: no AD label for '" +
                  p.subject_id + "'");
    if (it->second == AdLabel::AD) ++n_ad;
  }
  if (n_ad == 0 || n_ad == static_cast<int>(profiles.size()))
    throw Error(
        "select_threshold_by_correlation: AD labels are single-class; "
        "correlation is undefined");

  int max_total = 0;
  for (const DisfluencyProfile& p : profiles)
    max_total = std::max(max_total, p.total);

  int best_t = 0;
  double best_phi = -2.0;
  for (int t = 0; t <= max_total + 1; ++t) {
    double phi = phi_at_threshold(profiles, ad_labels, t);
    if (phi > best_phi) {
      best_phi = phi;
      best_t = t;
    }
  }
  return label_with_threshold(profiles, best_t);
}

// Picks the threshold whose Stumbling proportion is closest to the
// reference labeling's. Used when the profile population (e.g. ASR
// transcripts) differs from the population the reference was fit on.
inline FluencyLabeling select_threshold_by_split_match(
    const std::vector<DisfluencyProfile>& profiles,
    const FluencyLabeling& reference) {
  if (profiles.empty())
    throw Error("select_threshold_by_split_match: no profiles");
  if (reference.labels.empty())
    throw Error("select_threshold_by_split_match: empty reference labeling");
  double target = reference.stumbling_proportion();

  int max_total = 0;
  for (const DisfluencyProfile& p : profiles)
    max_total = std::max(max_total, p.total);

  int best_t = 0;
  double best_dist = 2.0;
  int n = static_cast<int>(profiles.size());
  for (int t = 0; t <= max_total + 1; ++t) {
    int stumbling = 0;
    for (const DisfluencyProfile& p : profiles)
      if (p.total >= t) ++stumbling;
    double dist = std::abs(static_cast<double>(stumbling) / n - target);
    if (dist < best_dist) {
      best_dist = dist;
      best_t = t;
    }
  }
  return label_with_threshold(profiles, best_t);
}

inline constexpr std::string_view kDisfluencyHeader = "#disfluency v1";

inline void save_profiles(const std::vector<DisfluencyProfile>& profiles,
                          const FluencyLabeling& labeling, std::ostream& os) {
  os << kDisfluencyHeader << "\tthreshold=" << labeling.threshold << '\n';
  for (const DisfluencyProfile& p : profiles) {
    auto it = labeling.labels.find(p.subject_id);
    os << p.subject_id << '\t' << p.count_interjection << '\t'
       << p.count_pause << '\t' << p.count_action << '\t' << p.total << '\t'
       << (it == labeling.labels.end() ? std::string("-")
                                       : to_string(it->second))
       << '\n';
  }
}

struct StoredDisfluency {
  std::vector<DisfluencyProfile> profiles;
  FluencyLabeling labeling;
};

inline StoredDisfluency load_profiles(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      line.rfind(kDisfluencyHeader, 0) != 0)
    throw Error("disfluency file: missing '#disfluency v1' header");
  StoredDisfluency out;
  auto eq = line.find("threshold=");
  if (eq == std::string::npos)
    throw Error("disfluency file: header lacks threshold");
  out.labeling.threshold = std::stoi(line.substr(eq + 10));
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (adprompt::detail::trim(line).empty()) continue;
    auto fields = adprompt::detail::split(adprompt::detail::trim(line), '\t');
    if (fields.size() != 6)
      throw Error("disfluency file line " + std::to_string(line_no) +
                  ": expected 6 fields");
    DisfluencyProfile p;
    p.subject_id = fields[0];
    p.count_interjection = std::stoi(fields[1]);
    p.count_pause = std::stoi(fields[2]);
    p.count_action = std::stoi(fields[3]);
    p.total = std::stoi(fields[4]);
    if (fields[5] != "-") {
      FluencyLabel label = parse_fluency_label(fields[5]);
      out.labeling.labels[p.subject_id] = label;
      (label == FluencyLabel::Stumbling ? out.labeling.stumbling_count
                                        : out.labeling.fluent_count)++;
    }
    out.profiles.push_back(std::move(p));
  }
  return out;
}

}  // namespace adprompt
