#pragma once

// Transcript ingestion: a subset CHAT parser for manually coded
// transcripts, a plain-text path for ASR output, and the dataset
// manifest with stratified cross-validation folds.
//
// Subset grammar for .cha content:
//   @...        header line, discarded
//   *XXX:\t...  speaker tier; continuation lines start with whitespace
//   %xxx:\t...  dependent tier, discarded
//
// Tier text normalization keeps spoken words (lowercased, punctuation
// stripped at the edges) and drops all bracketed codes. Pause symbols
// and &=action codes leave the token stream but are recorded as events;
// interjection words are recorded as events and kept as tokens.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adprompt/detail/strings.hpp"
#include "adprompt/lexicon.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

inline constexpr std::string_view kParticipantTier = "PAR";

struct Utterance {
  std::string tier;                    // speaker code, e.g. "PAR", "INV"
  std::string raw;                     // verbatim tier line(s)
  std::vector<std::string> tokens;     // normalized word tokens
  std::vector<DisfluencyEvent> events; // in reading order

  bool operator==(const Utterance&) const = default;
};

struct SubjectRecord {
  std::string subject_id;
  Split split = Split::Train;
  AdLabel ad_label = AdLabel::NonAD;
  Source source = Source::Manual;
  std::string transcript_path;  // relative to the data root; may be empty
  std::vector<Utterance> utterances;
  std::string merged_text;  // participant tokens joined by single spaces
};

struct DatasetManifest {
  std::vector<SubjectRecord> records;
  int train_count = 0;
  int test_count = 0;
  std::map<std::string, int> fold_of;  // train subjects only
  int fold_count = 0;
};

namespace detail {

// Strips media time spans (\x15...\x15) that CHAT embeds after tiers.
inline std::string strip_media_spans(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_span = false;
  for (char c : s) {
    if (c == '\x15') {
      in_span = !in_span;
      continue;
    }
    if (!in_span) out.push_back(c);
  }
  return out;
}

inline bool is_edge_strippable(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  if (u >= 0x80) return false;  // leave multi-byte sequences alone
  return !std::isalnum(u);
}

// Lowercase and trim edge punctuation. Internal characters (apostrophes,
// hyphens, colons in action codes) survive.
inline std::string normalize_word(std::string_view raw) {
  std::string w = adprompt::detail::to_lower(raw);
  std::size_t b = 0, e = w.size();
  while (b < e && is_edge_strippable(w[b])) ++b;
  while (e > b && is_edge_strippable(w[e - 1])) --e;
  return w.substr(b, e - b);
}

// Splits tier text into raw whitespace tokens with bracketed codes
// removed and retrace angle markers unwrapped.
inline std::vector<std::string> raw_tier_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  int bracket_depth = 0;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(current);
      current.clear();
    }
  };
  for (char c : text) {
    if (c == '[') {
      flush();
      ++bracket_depth;
      continue;
    }
    if (c == ']') {
      if (bracket_depth > 0) --bracket_depth;
      continue;
    }
    if (bracket_depth > 0) continue;
    if (c == '<' || c == '>') continue;  // retrace markers; keep the words
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      flush();
      continue;
    }
    current.push_back(c);
  }
  flush();
  return out;
}

}  // namespace detail

// Normalizes the text of one speaker tier into tokens and events.
inline void normalize_tier_text(std::string_view text,
                                const DisfluencyLexicon& lexicon,
                                std::vector<std::string>& tokens,
                                std::vector<DisfluencyEvent>& events) {
  const std::string clean = detail::strip_media_spans(text);
  for (const std::string& raw : detail::raw_tier_tokens(clean)) {
    if (lexicon.is_pause_marker(raw)) {
      events.push_back({DisfluencyCategory::Pause, raw});
      continue;
    }
    if (lexicon.is_action_code(raw)) {
      std::string surface = detail::normalize_word(
          std::string_view(raw).substr(lexicon.action_prefix.size()));
      events.push_back({DisfluencyCategory::Action, surface});
      continue;
    }
    if (raw[0] == '+') continue;  // terminator / linking codes
    std::string body = raw;
    if (body.rfind("&-", 0) == 0 || body.rfind("&+", 0) == 0) {
      body = body.substr(2);  // filled-pause / fragment prefixes
    } else if (body[0] == '&') {
      body = body.substr(1);
    }
    // Omission completions like "(be)cause" keep their letters.
    std::erase(body, '(');
    std::erase(body, ')');
    std::string word = detail::normalize_word(body);
    if (word.empty()) continue;
    if (lexicon.is_interjection(word))
      events.push_back({DisfluencyCategory::Interjection, word});
    tokens.push_back(std::move(word));
  }
}

// Parses subset-CHAT content into one Utterance per speaker tier.
// Dependent tiers and headers are discarded. Empty input parses to an
// empty list; a speaker line without a colon is a parse error.
inline std::vector<Utterance> parse_chat(
    std::string_view content, const DisfluencyLexicon& lexicon = default_lexicon()) {
  std::vector<Utterance> utterances;

  enum class Context { None, Speaker, Dependent, Header };
  Context context = Context::None;
  std::string tier_code;
  std::string tier_text;
  std::string tier_raw;

  auto flush = [&] {
    if (context == Context::Speaker) {
      Utterance u;
      u.tier = tier_code;
      u.raw = tier_raw;
      normalize_tier_text(tier_text, lexicon, u.tokens, u.events);
      utterances.push_back(std::move(u));
    }
    context = Context::None;
    tier_code.clear();
    tier_text.clear();
    tier_raw.clear();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF")
      line.remove_prefix(3);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (adprompt::detail::trim(line).empty()) {
      flush();
      continue;
    }
    char first = line.front();
    if (first == '@') {
      flush();
      context = Context::Header;
      continue;
    }
    if (first == '%') {
      flush();
      context = Context::Dependent;
      continue;
    }
    if (first == '*') {
      flush();
      std::size_t colon = line.find(':');
      if (colon == std::string_view::npos)
        throw Error("parse error at line " + std::to_string(line_no) +
                    ": speaker tier without ':' separator");
      context = Context::Speaker;
      tier_code = std::string(line.substr(1, colon - 1));
      tier_text = std::string(line.substr(colon + 1));
      tier_raw = std::string(line);
      continue;
    }
    if (first == ' ' || first == '\t') {
      // Continuation of the current tier.
      if (context == Context::Speaker) {
        tier_text += ' ';
        tier_text += adprompt::detail::trim(line);
        tier_raw += '\n';
        tier_raw += line;
      }
      continue;
    }
    throw Error("parse error at line " + std::to_string(line_no) +
                ": unrecognized line '" + std::string(line.substr(0, 32)) +
                "'");
  }
  flush();
  return utterances;
}

// Joins participant-tier tokens into the training text for one record.
inline std::string merge_participant_text(
    const std::vector<Utterance>& utterances,
    std::string_view participant_tier = kParticipantTier) {
  std::string merged;
  for (const Utterance& u : utterances) {
    if (u.tier != participant_tier) continue;
    for (const std::string& tok : u.tokens) {
      if (!merged.empty()) merged += ' ';
      merged += tok;
    }
  }
  return merged;
}

// Builds a record from parsed CHAT utterances.
inline SubjectRecord make_manual_record(
    std::string subject_id, std::vector<Utterance> utterances,
    Split split = Split::Train, AdLabel label = AdLabel::NonAD,
    std::string transcript_path = {},
    std::string_view participant_tier = kParticipantTier) {
  SubjectRecord rec;
  rec.subject_id = std::move(subject_id);
  rec.split = split;
  rec.ad_label = label;
  rec.source = Source::Manual;
  rec.transcript_path = std::move(transcript_path);
  rec.utterances = std::move(utterances);
  rec.merged_text = merge_participant_text(rec.utterances, participant_tier);
  return rec;
}

// ASR transcripts are flat word sequences: no pause symbols or action
// codes can occur, so those counts are zero by construction. Tokens are
// kept verbatim apart from lowercasing; anything that looks like a CHAT
// code is just a literal token here.
inline SubjectRecord ingest_asr(std::string subject_id,
                                std::string_view plain_text,
                                const DisfluencyLexicon& lexicon = default_lexicon(),
                                Split split = Split::Train,
                                AdLabel label = AdLabel::NonAD,
                                std::string transcript_path = {}) {
  Utterance u;
  u.tier = std::string(kParticipantTier);
  u.raw = std::string(plain_text);
  for (const std::string& w : adprompt::detail::split_ws(plain_text)) {
    std::string word = adprompt::detail::to_lower(w);
    if (lexicon.is_interjection(word))
      u.events.push_back({DisfluencyCategory::Interjection, word});
    u.tokens.push_back(std::move(word));
  }
  if (u.tokens.empty())
    throw Error("subject '" + subject_id + "': empty ASR transcript rejected");

  SubjectRecord rec;
  rec.subject_id = std::move(subject_id);
  rec.split = split;
  rec.ad_label = label;
  rec.source = Source::Asr;
  rec.transcript_path = std::move(transcript_path);
  rec.utterances.push_back(std::move(u));
  rec.merged_text = merge_participant_text(rec.utterances);
  return rec;
}

// Assigns train records to stratified folds: shuffle each label group
// with the seeded engine, concatenate, and deal round-robin. Fold sizes
// differ by at most one overall and within each label group.
inline DatasetManifest build_manifest(std::vector<SubjectRecord> records,
                                      int fold_count = 10,
                                      std::uint64_t seed = 0) {
  if (fold_count < 2)
    throw Error("build_manifest: fold_count must be >= 2, got " +
                std::to_string(fold_count));
  DatasetManifest manifest;
  std::map<std::string, int> seen;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (++seen[records[i].subject_id] > 1)
      throw Error("build_manifest: duplicate subject_id '" +
                  records[i].subject_id + "'");
    if (records[i].split == Split::Train) {
      ++manifest.train_count;
      train_idx.push_back(i);
    } else {
      ++manifest.test_count;
    }
  }
  if (static_cast<int>(train_idx.size()) < fold_count)
    throw Error("build_manifest: " + std::to_string(train_idx.size()) +
                " train records cannot fill " + std::to_string(fold_count) +
                " folds");

  std::vector<std::size_t> ad_group, non_ad_group;
  for (std::size_t i : train_idx) {
    (records[i].ad_label == AdLabel::AD ? ad_group : non_ad_group).push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ad_group.begin(), ad_group.end(), rng);
  std::shuffle(non_ad_group.begin(), non_ad_group.end(), rng);

  int next = 0;
  for (const auto* group : {&ad_group, &non_ad_group}) {
    for (std::size_t i : *group) {
      manifest.fold_of[records[i].subject_id] = next % fold_count;
      ++next;
    }
  }
  manifest.fold_count = fold_count;
  manifest.records = std::move(records);
  return manifest;
}

inline constexpr std::string_view kManifestHeader = "#manifest v1";

inline void save_manifest(const DatasetManifest& manifest, std::ostream& os) {
  os << kManifestHeader << '\n';
  for (const SubjectRecord& rec : manifest.records) {
    auto fold = manifest.fold_of.find(rec.subject_id);
    os << rec.subject_id << '\t' << to_string(rec.split) << '\t'
       << to_string(rec.ad_label) << '\t' << to_string(rec.source) << '\t'
       << (fold == manifest.fold_of.end() ? std::string("-")
                                          : std::to_string(fold->second))
       << '\t' << rec.transcript_path << '\n';
  }
}

inline DatasetManifest load_manifest(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      adprompt::detail::trim(line) != kManifestHeader)
    throw Error("manifest: missing '#manifest v1' header");
  std::vector<SubjectRecord> records;
  std::map<std::string, int> fold_of;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (adprompt::detail::trim(line).empty()) continue;
    // No trim here: the trailing transcript_path field may be empty.
    auto fields = adprompt::detail::split(line, '\t');
    if (fields.size() != 6)
      throw Error("manifest line " + std::to_string(line_no) + ": expected 6 "
                  "tab-separated fields, got " + std::to_string(fields.size()));
    SubjectRecord rec;
    rec.subject_id = fields[0];
    rec.split = parse_split(fields[1]);
    rec.ad_label = parse_ad_label(fields[2]);
    rec.source = parse_source(fields[3]);
    rec.transcript_path = fields[5];
    if (fields[4] != "-") fold_of[rec.subject_id] = std::stoi(fields[4]);
    records.push_back(std::move(rec));
  }
  DatasetManifest manifest;
  int fold_count = 0;
  for (const auto& [id, f] : fold_of) fold_count = std::max(fold_count, f + 1);
  for (const SubjectRecord& rec : records) {
    if (rec.split == Split::Train)
      ++manifest.train_count;
    else
      ++manifest.test_count;
  }
  manifest.records = std::move(records);
  manifest.fold_of = std::move(fold_of);
  manifest.fold_count = fold_count;
  return manifest;
}

inline void save_manifest_file(const DatasetManifest& manifest,
                               const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write manifest file: " + path.string());
  save_manifest(manifest, os);
}

inline DatasetManifest load_manifest_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read manifest file: " + path.string());
  return load_manifest(is);
}

// Reads and parses every transcript referenced by the manifest.
inline void materialize_records(DatasetManifest& manifest,
                                const std::filesystem::path& data_root,
                                const DisfluencyLexicon& lexicon = default_lexicon()) {
  for (SubjectRecord& rec : manifest.records) {
    std::filesystem::path file = data_root / rec.transcript_path;
    std::ifstream is(file);
    if (!is)
      throw Error("subject '" + rec.subject_id + "': cannot read transcript " +
                  file.string());
    std::stringstream buf;
    buf << is.rdbuf();
    if (rec.source == Source::Manual) {
      rec.utterances = parse_chat(buf.str(), lexicon);
      rec.merged_text = merge_participant_text(rec.utterances);
    } else {
      SubjectRecord parsed = ingest_asr(rec.subject_id, buf.str(), lexicon,
                                        rec.split, rec.ad_label,
                                        rec.transcript_path);
      rec.utterances = std::move(parsed.utterances);
      rec.merged_text = std::move(parsed.merged_text);
    }
  }
}

// Records with empty merged participant text cannot enter training or
// evaluation; callers check before handing records to the trainer.
inline void require_nonempty_text(const std::vector<SubjectRecord>& records) {
  for (const SubjectRecord& rec : records) {
    if (rec.merged_text.empty())
      throw Error("subject '" + rec.subject_id +
                  "': empty participant text cannot be admitted");
  }
}

}  // namespace adprompt
