#pragma once

// On-disk form of captured decisions. One file per (system, seed); each
// line carries full provenance so files concatenate safely:
//   system_id plm paradigm position multi_task seed epoch subject decision
// Combined (voted) decisions use the same shape with epoch = "voted".

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "adprompt/detail/strings.hpp"
#include "adprompt/ensemble.hpp"
#include "adprompt/trainer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

inline constexpr std::string_view kDecisionsHeader = "#decisions v1";

inline void save_run(const SystemRun& run, std::ostream& os) {
  const std::string id = system_id(run.config);
  os << kDecisionsHeader << '\n';
  for (const EpochDecisions& epoch : run.epochs) {
    for (const auto& [subject, decision] : epoch.decisions) {
      os << id << '\t' << run.config.plm << '\t'
         << to_string(run.config.paradigm) << '\t'
         << to_string(run.config.prompt_position) << '\t'
         << (run.config.multi_task ? 1 : 0) << '\t' << run.config.seed
         << '\t' << epoch.epoch << '\t' << subject << '\t'
         << to_string(decision) << '\n';
    }
  }
}

inline SystemRun load_run(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      adprompt::detail::trim(line) != kDecisionsHeader)
    throw Error("decision file: missing '#decisions v1' header");

  SystemRun run;
  bool have_config = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (adprompt::detail::trim(line).empty()) continue;
    auto f = adprompt::detail::split(line, '\t');
    if (f.size() != 9)
      throw Error("decision file line " + std::to_string(line_no) +
                  ": expected 9 fields, got " + std::to_string(f.size()));
    if (!have_config) {
      run.config.plm = f[1];
      run.config.paradigm = parse_paradigm(f[2]);
      run.config.prompt_position = parse_prompt_position(f[3]);
      run.config.multi_task = f[4] == "1";
      run.config.seed = std::stoull(f[5]);
      have_config = true;
    } else if (f[5] != std::to_string(run.config.seed) ||
               f[0] != system_id(run.config)) {
      throw Error("decision file line " + std::to_string(line_no) +
                  ": mixed systems or seeds in one run file");
    }
    int epoch = std::stoi(f[6]);
    EpochDecisions* slot = nullptr;
    for (EpochDecisions& e : run.epochs)
      if (e.epoch == epoch) slot = &e;
    if (!slot) {
      run.epochs.push_back({epoch, {}, 0.0});
      slot = &run.epochs.back();
    }
    slot->decisions[f[7]] = parse_ad_label(f[8]);
  }
  if (!have_config) throw Error("decision file: no decision rows");
  return run;
}

inline std::filesystem::path run_path(const std::filesystem::path& out_dir,
                                      const std::string& sys_id,
                                      std::uint64_t seed) {
  std::string name = sys_id;
  for (char& c : name)
    if (c == ':' || c == '/') c = '_';
  return out_dir / "runs" / (name + "_seed" + std::to_string(seed) + ".tsv");
}

inline void save_run_file(const SystemRun& run,
                          const std::filesystem::path& out_dir) {
  std::filesystem::path path =
      run_path(out_dir, system_id(run.config), run.config.seed);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write decision file: " + path.string());
  save_run(run, os);
}

inline SystemRun load_run_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read decision file: " + path.string());
  return load_run(is);
}

// Combined (voted) decision vectors keep their seed tuples; the tuple
// index preserves enumeration order.
inline constexpr std::string_view kCombinedHeader = "#combined v1";

inline void save_combined(const std::vector<DecisionVector>& combined,
                          TiePolicy policy, std::ostream& os) {
  os << kCombinedHeader << '\n';
  for (std::size_t i = 0; i < combined.size(); ++i) {
    std::string seeds;
    for (std::uint64_t s : combined[i].provenance.seeds) {
      if (!seeds.empty()) seeds += '+';
      seeds += std::to_string(s);
    }
    for (const auto& [subject, decision] : combined[i].decisions)
      os << combined[i].provenance.system_id << '\t' << to_string(policy)
         << '\t' << i << '\t' << seeds << '\t' << subject << '\t'
         << to_string(decision) << '\n';
  }
}

inline std::vector<DecisionVector> load_combined(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      adprompt::detail::trim(line) != kCombinedHeader)
    throw Error("combined file: missing '#combined v1' header");

  std::vector<DecisionVector> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (adprompt::detail::trim(line).empty()) continue;
    auto f = adprompt::detail::split(line, '\t');
    if (f.size() != 6)
      throw Error("combined file line " + std::to_string(line_no) +
                  ": expected 6 fields, got " + std::to_string(f.size()));
    std::size_t index = std::stoull(f[2]);
    if (index > out.size())
      throw Error("combined file line " + std::to_string(line_no) +
                  ": tuple indices out of order");
    if (index == out.size()) {
      DecisionVector v;
      v.provenance.system_id = f[0];
      v.provenance.epoch = "voted";
      for (const std::string& s : adprompt::detail::split(f[3], '+'))
        v.provenance.seeds.push_back(std::stoull(s));
      out.push_back(std::move(v));
    }
    out[index].decisions[f[4]] = parse_ad_label(f[5]);
  }
  if (out.empty()) throw Error("combined file: no decision rows");
  return out;
}

// Cross-validation decisions: one pooled map per (system, seed).
inline constexpr std::string_view kCvHeader = "#cv v1";

struct CvRun {
  std::string system;
  std::uint64_t seed = 0;
  DecisionMap decisions;
};

inline void save_cv(const CvRun& run, std::ostream& os) {
  os << kCvHeader << '\n';
  for (const auto& [subject, decision] : run.decisions)
    os << run.system << '\t' << run.seed << '\t' << subject << '\t'
       << to_string(decision) << '\n';
}

inline CvRun load_cv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || adprompt::detail::trim(line) != kCvHeader)
    throw Error("cv file: missing '#cv v1' header");
  CvRun run;
  bool have_header_row = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (adprompt::detail::trim(line).empty()) continue;
    auto f = adprompt::detail::split(line, '\t');
    if (f.size() != 4)
      throw Error("cv file line " + std::to_string(line_no) +
                  ": expected 4 fields, got " + std::to_string(f.size()));
    if (!have_header_row) {
      run.system = f[0];
      run.seed = std::stoull(f[1]);
      have_header_row = true;
    } else if (f[0] != run.system || f[1] != std::to_string(run.seed)) {
      throw Error("cv file line " + std::to_string(line_no) +
                  ": mixed systems or seeds in one cv file");
    }
    run.decisions[f[2]] = parse_ad_label(f[3]);
  }
  if (!have_header_row) throw Error("cv file: no decision rows");
  return run;
}

inline std::string sanitize_file_stem(std::string name) {
  for (char& c : name)
    if (c == ':' || c == '/') c = '_';
  return name;
}

inline std::filesystem::path cv_path(const std::filesystem::path& out_dir,
                                     const std::string& sys_id,
                                     std::uint64_t seed) {
  return out_dir / "cv" /
         (sanitize_file_stem(sys_id) + "_seed" + std::to_string(seed) +
          ".tsv");
}

inline std::filesystem::path combined_path(
    const std::filesystem::path& out_dir, const std::string& preset) {
  return out_dir / "combined" / (sanitize_file_stem(preset) + ".tsv");
}

}  // namespace adprompt
