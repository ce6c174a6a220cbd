#pragma once

// Majority-voting fusion across epochs, prompt positions, paradigms,
// and model families. Presets mirror the studied combinations; seed
// pairing is SameSeed within a model family and a cartesian product
// across families.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adprompt/trainer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

enum class TiePolicy { PreferAD, PreferNonAD, PoolSubDecisions };

inline std::string to_string(TiePolicy p) {
  switch (p) {
    case TiePolicy::PreferAD: return "prefer-ad";
    case TiePolicy::PreferNonAD: return "prefer-nonad";
    default: return "pool";
  }
}

inline TiePolicy parse_tie_policy(std::string_view s) {
  if (s == "prefer-ad") return TiePolicy::PreferAD;
  if (s == "prefer-nonad") return TiePolicy::PreferNonAD;
  if (s == "pool") return TiePolicy::PoolSubDecisions;
  throw Error("unknown tie policy: '" + std::string(s) + "'");
}

// Strict majority; ties fall to the policy. PoolSubDecisions is a
// combination-level strategy whose pooling happens in combine_runs; as
// a residual tie-break it prefers AD.
inline AdLabel majority_vote(const std::vector<AdLabel>& votes,
                             TiePolicy policy) {
  if (votes.empty()) throw Error("majority_vote: empty vote list");
  std::size_t ad = 0;
  for (AdLabel v : votes)
    if (v == AdLabel::AD) ++ad;
  std::size_t non_ad = votes.size() - ad;
  if (ad > non_ad) return AdLabel::AD;
  if (non_ad > ad) return AdLabel::NonAD;
  return policy == TiePolicy::PreferNonAD ? AdLabel::NonAD : AdLabel::AD;
}

struct DecisionProvenance {
  std::string system_id;
  std::vector<std::uint64_t> seeds;  // one per member group
  std::string epoch;                 // epoch number or "voted"
};

struct DecisionVector {
  DecisionMap decisions;
  DecisionProvenance provenance;
};

// Fraction of matching decisions; the subject sets must be identical.
inline double accuracy(const DecisionMap& decisions,
                       const std::map<std::string, AdLabel>& gold) {
  if (decisions.size() != gold.size())
    throw Error("accuracy: decision and gold subject sets differ in size");
  int correct = 0;
  for (const auto& [subject, decision] : decisions) {
    auto it = gold.find(subject);
    if (it == gold.end())
      throw Error("accuracy: no gold label for subject '" + subject + "'");
    if (decision == it->second) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

// Votes one run's captured epochs down to a single decision map.
inline DecisionVector vote_run(const SystemRun& run,
                               TiePolicy policy = TiePolicy::PoolSubDecisions) {
  if (run.epochs.empty()) throw Error("vote_run: run has no captured epochs");
  DecisionVector out;
  out.provenance = {system_id(run.config), {run.config.seed}, "voted"};
  for (const auto& [subject, first] : run.epochs.front().decisions) {
    std::vector<AdLabel> votes;
    votes.reserve(run.epochs.size());
    for (const EpochDecisions& e : run.epochs) {
      auto it = e.decisions.find(subject);
      if (it == e.decisions.end())
        throw Error("vote_run: subject '" + subject +
                    "' missing from epoch " + std::to_string(e.epoch));
      votes.push_back(it->second);
    }
    out.decisions[subject] = majority_vote(votes, policy);
  }
  return out;
}

struct CombinationPreset {
  enum class Pairing { SameSeed, FullCartesian };

  std::string name;
  // Each inner list is one member group (systems of one model family);
  // members of a group always share a seed. FullCartesian pairs seeds
  // across groups; SameSeed requires a single common seed everywhere.
  std::vector<std::vector<std::string>> groups;
  Pairing pairing = Pairing::SameSeed;
};

// Registry of the studied combinations. `plms` supplies the backend
// descriptor names: one for the within-family presets, two for the
// cross-family ones. `multi_task` selects the multi-task prompt systems.
inline CombinationPreset make_preset(std::string_view name,
                                     const std::vector<std::string>& plms,
                                     bool multi_task = false) {
  auto prompt_id = [&](const std::string& plm, std::string_view pos) {
    std::string id = plm + ":prompt:" + std::string(pos);
    if (multi_task) id += ":multi";
    return id;
  };
  auto mlm_id = [](const std::string& plm) { return plm + ":mlm"; };
  auto need = [&](std::size_t n) {
    if (plms.size() != n)
      throw Error("preset '" + std::string(name) + "' needs " +
                  std::to_string(n) + " model name(s), got " +
                  std::to_string(plms.size()));
  };

  CombinationPreset preset;
  preset.name = std::string(name);
  if (name == "front+back") {
    need(1);
    preset.groups = {{prompt_id(plms[0], "front"), prompt_id(plms[0], "back")}};
    preset.pairing = CombinationPreset::Pairing::SameSeed;
  } else if (name == "mlm+front+back") {
    need(1);
    preset.groups = {{mlm_id(plms[0]), prompt_id(plms[0], "front"),
                      prompt_id(plms[0], "back")}};
    preset.pairing = CombinationPreset::Pairing::SameSeed;
  } else if (name == "bert+roberta:mlm") {
    need(2);
    preset.groups = {{mlm_id(plms[0])}, {mlm_id(plms[1])}};
    preset.pairing = CombinationPreset::Pairing::FullCartesian;
  } else if (name == "bert+roberta:prompt") {
    need(2);
    preset.groups = {{prompt_id(plms[0], "front"), prompt_id(plms[0], "back")},
                     {prompt_id(plms[1], "front"), prompt_id(plms[1], "back")}};
    preset.pairing = CombinationPreset::Pairing::FullCartesian;
  } else if (name == "bert+roberta:all") {
    need(2);
    preset.groups = {{mlm_id(plms[0]), prompt_id(plms[0], "front"),
                      prompt_id(plms[0], "back")},
                     {mlm_id(plms[1]), prompt_id(plms[1], "front"),
                      prompt_id(plms[1], "back")}};
    preset.pairing = CombinationPreset::Pairing::FullCartesian;
  } else {
    throw Error("unknown combination preset: '" + std::string(name) + "'");
  }
  return preset;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "front+back", "mlm+front+back", "bert+roberta:mlm",
      "bert+roberta:prompt", "bert+roberta:all"};
  return names;
}

namespace detail {

inline std::set<std::string> subject_set(const SystemRun& run) {
  std::set<std::string> subjects;
  for (const auto& [subject, decision] : run.epochs.front().decisions)
    subjects.insert(subject);
  return subjects;
}

}  // namespace detail

// Fuses runs under a preset. Output: one DecisionVector per seed (or
// per cross-group seed tuple). With PoolSubDecisions every member's
// every captured epoch contributes one vote per subject; with the
// prefer-* policies members are voted down to one decision each first.
inline std::vector<DecisionVector> combine_runs(
    const std::vector<SystemRun>& runs, const CombinationPreset& preset,
    TiePolicy policy = TiePolicy::PoolSubDecisions) {
  if (runs.empty()) throw Error("combine_runs: no runs");
  for (const auto& group : preset.groups)
    if (group.empty()) throw Error("combine_runs: preset has an empty group");

  // Index runs and check the shared evaluation subject set.
  std::map<std::string, std::map<std::uint64_t, const SystemRun*>> by_system;
  std::set<std::string> subjects = detail::subject_set(runs.front());
  for (const SystemRun& run : runs) {
    if (run.epochs.empty())
      throw Error("combine_runs: run without captured epochs");
    for (const EpochDecisions& e : run.epochs) {
      std::set<std::string> here;
      for (const auto& [subject, decision] : e.decisions)
        here.insert(subject);
      if (here != subjects)
        throw Error(
            "combine_runs: runs cover mismatched evaluation subject sets");
    }
    by_system[system_id(run.config)][run.config.seed] = &run;
  }

  // Seeds available to a group = intersection over its members.
  auto group_seeds = [&](const std::vector<std::string>& group) {
    std::vector<std::uint64_t> seeds;
    bool first = true;
    for (const std::string& member : group) {
      auto it = by_system.find(member);
      if (it == by_system.end())
        throw Error("combine_runs: no runs for member system '" + member +
                    "'");
      std::vector<std::uint64_t> here;
      for (const auto& [seed, run] : it->second) here.push_back(seed);
      if (first) {
        seeds = here;
        first = false;
      } else {
        std::vector<std::uint64_t> kept;
        std::set_intersection(seeds.begin(), seeds.end(), here.begin(),
                              here.end(), std::back_inserter(kept));
        seeds = kept;
      }
    }
    if (seeds.empty())
      throw Error("combine_runs: no common seeds within a member group");
    return seeds;
  };

  std::vector<std::vector<std::uint64_t>> per_group_seeds;
  if (preset.pairing == CombinationPreset::Pairing::SameSeed) {
    // One seed dimension across every member of every group.
    std::vector<std::string> all_members;
    for (const auto& group : preset.groups)
      all_members.insert(all_members.end(), group.begin(), group.end());
    per_group_seeds.push_back(group_seeds(all_members));
  } else {
    for (const auto& group : preset.groups)
      per_group_seeds.push_back(group_seeds(group));
  }

  // Enumerate seed tuples in lexicographic order.
  std::vector<DecisionVector> out;
  std::vector<std::size_t> cursor(per_group_seeds.size(), 0);
  while (true) {
    std::vector<std::uint64_t> tuple;
    for (std::size_t g = 0; g < per_group_seeds.size(); ++g)
      tuple.push_back(per_group_seeds[g][cursor[g]]);

    std::vector<const SystemRun*> members;
    if (preset.pairing == CombinationPreset::Pairing::SameSeed) {
      for (const auto& group : preset.groups)
        for (const std::string& member : group)
          members.push_back(by_system.at(member).at(tuple[0]));
    } else {
      for (std::size_t g = 0; g < preset.groups.size(); ++g)
        for (const std::string& member : preset.groups[g])
          members.push_back(by_system.at(member).at(tuple[g]));
    }

    DecisionVector combined;
    combined.provenance = {preset.name, tuple, "voted"};
    for (const std::string& subject : subjects) {
      std::vector<AdLabel> votes;
      if (policy == TiePolicy::PoolSubDecisions) {
        for (const SystemRun* run : members)
          for (const EpochDecisions& e : run->epochs)
            votes.push_back(e.decisions.at(subject));
      } else {
        for (const SystemRun* run : members) {
          std::vector<AdLabel> epoch_votes;
          for (const EpochDecisions& e : run->epochs)
            epoch_votes.push_back(e.decisions.at(subject));
          votes.push_back(majority_vote(epoch_votes, policy));
        }
      }
      combined.decisions[subject] = majority_vote(votes, policy);
    }
    out.push_back(std::move(combined));

    // Odometer increment; finished when the leading digit wraps.
    std::size_t g = per_group_seeds.size();
    while (g > 0 && ++cursor[g - 1] == per_group_seeds[g - 1].size()) {
      cursor[g - 1] = 0;
      --g;
    }
    if (g == 0) return out;
  }
}

}  // namespace adprompt
