#pragma once

// Training objectives over per-mask vocabulary logits. Both losses are
// declarative (position-indexed specs) so they can cross a process
// boundary to an external model runtime unchanged.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <variant>
#include <vector>

#include "adprompt/types.hpp"

namespace adprompt {

// Logit vectors for the mask positions of one input, in the order the
// input listed them.
struct MaskLogits {
  std::vector<std::size_t> positions;
  std::vector<std::vector<double>> logits;

  const std::vector<double>& at(std::size_t position) const {
    for (std::size_t i = 0; i < positions.size(); ++i)
      if (positions[i] == position) return logits[i];
    throw Error("mask logits: no entry for position " +
                std::to_string(position));
  }
};

// One binary cloze task: softmax over the two label-word logits at one
// mask, negative log-probability of the true class, scaled by weight.
struct PromptTaskTarget {
  std::size_t position = 0;
  int true_class = 0;                // 0 = positive class (AD / Stumbling)
  std::array<int, 2> label_ids{};    // vocabulary ids of the label words
  double weight = 1.0;
};

struct PromptLossSpec {
  std::vector<PromptTaskTarget> tasks;
};

// Masked-token prediction: full-vocabulary cross entropy averaged over
// the masked positions. Empty target set defines a zero loss.
struct MlmTarget {
  std::size_t position = 0;
  int target_id = 0;
};

struct MlmLossSpec {
  std::vector<MlmTarget> targets;
};

using LossSpec = std::variant<PromptLossSpec, MlmLossSpec>;

// dLoss/dlogits, sparse over mask positions.
using LogitGradients = std::map<std::size_t, std::vector<double>>;

inline double prompt_loss(const MaskLogits& logits,
                          const PromptLossSpec& spec,
                          LogitGradients* grads = nullptr) {
  double total = 0.0;
  for (const PromptTaskTarget& t : spec.tasks) {
    const std::vector<double>& vec = logits.at(t.position);
    for (int id : t.label_ids)
      if (id < 0 || id >= static_cast<int>(vec.size()))
        throw Error("prompt_loss: label id " + std::to_string(id) +
                    " outside vocabulary");
    if (t.true_class != 0 && t.true_class != 1)
      throw Error("prompt_loss: true_class must be 0 or 1");
    double s0 = vec[static_cast<std::size_t>(t.label_ids[0])];
    double s1 = vec[static_cast<std::size_t>(t.label_ids[1])];
    double m = std::max(s0, s1);
    double e0 = std::exp(s0 - m), e1 = std::exp(s1 - m);
    double z = e0 + e1;
    double p_true = (t.true_class == 0 ? e0 : e1) / z;
    total += t.weight * -std::log(p_true);
    if (grads && t.weight != 0.0) {
      std::vector<double>& g =
          (*grads)
              .try_emplace(t.position, std::vector<double>(vec.size(), 0.0))
              .first->second;
      double p0 = e0 / z, p1 = e1 / z;
      g[static_cast<std::size_t>(t.label_ids[0])] +=
          t.weight * (p0 - (t.true_class == 0 ? 1.0 : 0.0));
      g[static_cast<std::size_t>(t.label_ids[1])] +=
          t.weight * (p1 - (t.true_class == 1 ? 1.0 : 0.0));
    }
  }
  return total;
}

inline double mlm_loss(const MaskLogits& logits, const MlmLossSpec& spec,
                       LogitGradients* grads = nullptr) {
  if (spec.targets.empty()) return 0.0;
  double total = 0.0;
  double inv_n = 1.0 / static_cast<double>(spec.targets.size());
  for (const MlmTarget& t : spec.targets) {
    const std::vector<double>& vec = logits.at(t.position);
    if (t.target_id < 0 || t.target_id >= static_cast<int>(vec.size()))
      throw Error("mlm_loss: target id " + std::to_string(t.target_id) +
                  " outside vocabulary");
    double m = vec[0];
    for (double v : vec) m = std::max(m, v);
    double z = 0.0;
    for (double v : vec) z += std::exp(v - m);
    double log_p =
        vec[static_cast<std::size_t>(t.target_id)] - m - std::log(z);
    total += -log_p * inv_n;
    if (grads) {
      std::vector<double>& g =
          (*grads)
              .try_emplace(t.position, std::vector<double>(vec.size(), 0.0))
              .first->second;
      for (std::size_t v = 0; v < vec.size(); ++v)
        g[v] += inv_n * std::exp(vec[v] - m) / z;
      g[static_cast<std::size_t>(t.target_id)] -= inv_n;
    }
  }
  return total;
}

inline double loss_value(const MaskLogits& logits, const LossSpec& spec,
                         LogitGradients* grads = nullptr) {
  if (const auto* p = std::get_if<PromptLossSpec>(&spec))
    return prompt_loss(logits, *p, grads);
  return mlm_loss(logits, std::get<MlmLossSpec>(spec), grads);
}

}  // namespace adprompt
