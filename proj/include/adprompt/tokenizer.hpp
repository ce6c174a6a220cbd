#pragma once

// Tokenizer boundary between templates/transcripts and a backend's
// vocabulary. Mask-token naming differences across model families stay
// behind this interface; templates only ever say <MASK>.

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "adprompt/detail/strings.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  // Whitespace-separated text to ids, without sequence markers.
  virtual std::vector<int> encode(std::string_view text) const = 0;

  // Exact pieces for a single word; empty when the word is not
  // representable. Used to validate verbalizer label words.
  virtual std::vector<int> encode_word(std::string_view word) const = 0;

  virtual std::string decode(int id) const = 0;
  virtual int vocab_size() const = 0;
  virtual int begin_id() const = 0;
  virtual int end_id() const = 0;
  virtual int mask_id() const = 0;
  virtual int unk_id() const = 0;
};

// Lowercasing whitespace tokenizer over an explicit word list. Words may
// optionally be declared as multi-piece to exercise subword failure
// paths. Ids: 0=<s> 1=</s> 2=<mask> 3=<unk>, then words in given order.
class ToyTokenizer final : public Tokenizer {
 public:
  static constexpr int kBegin = 0;
  static constexpr int kEnd = 1;
  static constexpr int kMask = 2;
  static constexpr int kUnk = 3;

  explicit ToyTokenizer(const std::vector<std::string>& words,
                        std::map<std::string, std::vector<std::string>>
                            multi_piece = {}) {
    id_to_word_ = {"<s>", "</s>", "<mask>", "<unk>"};
    for (const std::string& w : words) add_word(detail::to_lower(w));
    for (auto& [word, pieces] : multi_piece) {
      std::vector<int> ids;
      for (const std::string& p : pieces) ids.push_back(add_word(p));
      multi_piece_[detail::to_lower(word)] = std::move(ids);
    }
  }

  std::vector<int> encode(std::string_view text) const override {
    std::vector<int> out;
    for (const std::string& w : detail::split_ws(text)) {
      std::string word = detail::to_lower(w);
      if (auto it = multi_piece_.find(word); it != multi_piece_.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
        continue;
      }
      auto it = word_to_id_.find(word);
      out.push_back(it == word_to_id_.end() ? kUnk : it->second);
    }
    return out;
  }

  std::vector<int> encode_word(std::string_view word) const override {
    std::string w = detail::to_lower(word);
    if (auto it = multi_piece_.find(w); it != multi_piece_.end())
      return it->second;
    auto it = word_to_id_.find(w);
    if (it == word_to_id_.end()) return {};
    return {it->second};
  }

  std::string decode(int id) const override {
    if (id < 0 || id >= vocab_size())
      throw Error("tokenizer: id " + std::to_string(id) + " out of range");
    return id_to_word_[static_cast<std::size_t>(id)];
  }

  int vocab_size() const override {
    return static_cast<int>(id_to_word_.size());
  }
  int begin_id() const override { return kBegin; }
  int end_id() const override { return kEnd; }
  int mask_id() const override { return kMask; }
  int unk_id() const override { return kUnk; }

 private:
  int add_word(const std::string& w) {
    auto it = word_to_id_.find(w);
    if (it != word_to_id_.end()) return it->second;
    int id = vocab_size();
    word_to_id_[w] = id;
    id_to_word_.push_back(w);
    return id;
  }

  std::vector<std::string> id_to_word_;
  std::map<std::string, int> word_to_id_;
  std::map<std::string, std::vector<int>> multi_piece_;
};

// Deterministic vocabulary for desk-scale runs: label words and template
// literals first (they must resolve), then corpus words by descending
// frequency with lexicographic tie-break, capped at `limit` total ids.
inline ToyTokenizer build_toy_tokenizer(
    const std::vector<std::string>& reserved_words,
    const std::vector<std::string>& corpus_texts, int limit = 64) {
  std::vector<std::string> words;
  std::map<std::string, int> have;
  auto add = [&](const std::string& w) {
    if (w.empty() || have.count(w)) return;
    have[w] = 1;
    words.push_back(w);
  };
  for (const std::string& w : reserved_words) add(detail::to_lower(w));

  std::map<std::string, int> freq;
  for (const std::string& text : corpus_texts)
    for (const std::string& w : detail::split_ws(text))
      ++freq[detail::to_lower(w)];
  std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [w, n] : ranked) {
    if (static_cast<int>(words.size()) + 4 >= limit) break;
    add(w);
  }
  if (static_cast<int>(words.size()) + 4 > limit)
    throw Error("toy tokenizer: reserved words alone exceed vocab limit " +
                std::to_string(limit));
  return ToyTokenizer(words);
}

}  // namespace adprompt
