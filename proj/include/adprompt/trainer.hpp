#pragma once

// One fine-tuning experiment for one seed under either paradigm:
//   Prompt: per-record optimizer steps on the cloze loss; the last k
//           epochs each contribute a full evaluation decision map.
//   MLM:    masked-token fine-tuning; the last k epoch checkpoints feed
//           an embedding + linear-classifier baseline.
// Everything downstream (voting, sweeps, reports) consumes SystemRun.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "adprompt/backend.hpp"
#include "adprompt/corpus.hpp"
#include "adprompt/loss.hpp"
#include "adprompt/prompting.hpp"
#include "adprompt/svm.hpp"
#include "adprompt/tokenizer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

struct TrainConfig {
  Paradigm paradigm = Paradigm::Prompt;
  std::string plm = "toy";
  PromptPosition prompt_position = PromptPosition::Back;
  bool multi_task = false;
  // Index 0 weighs Diagnosis, index 1 Fluency. Interpreted as an
  // interpolation (normalized to sum 1) unless interpolate_weights is
  // cleared, in which case raw sums are used.
  std::array<double, 2> task_weights{0.5, 0.5};
  bool interpolate_weights = true;
  double lr = 1e-5;
  int batch_size = 1;
  int epochs = 0;  // 0 = paradigm default: 10 prompt, 30 mlm
  int capture_last_k = 3;
  double mlm_rate = 0.15;
  std::uint64_t seed = 0;

  int effective_epochs() const {
    if (epochs > 0) return epochs;
    return paradigm == Paradigm::Prompt ? 10 : 30;
  }

  std::array<double, 2> effective_weights() const {
    if (!multi_task) return {1.0, 0.0};
    if (!interpolate_weights) return task_weights;
    double sum = task_weights[0] + task_weights[1];
    return {task_weights[0] / sum, task_weights[1] / sum};
  }

  double weight_for(Task t) const {
    return effective_weights()[t == Task::Diagnosis ? 0 : 1];
  }

  void validate() const {
    if (capture_last_k < 1 || capture_last_k > effective_epochs())
      throw Error("train config: capture_last_k must be in [1, epochs], got " +
                  std::to_string(capture_last_k) + " with " +
                  std::to_string(effective_epochs()) + " epochs");
    bool position_na = prompt_position == PromptPosition::None;
    if ((paradigm == Paradigm::Mlm) != position_na)
      throw Error(
          "train config: prompt_position must be 'na' exactly when the "
          "paradigm is mlm");
    if (task_weights[0] < 0 || task_weights[1] < 0)
      throw Error("train config: task weights must be non-negative");
    if (interpolate_weights && task_weights[0] + task_weights[1] <= 0)
      throw Error("train config: task weights sum to zero");
    if (batch_size < 1)
      throw Error("train config: batch_size must be >= 1");
    if (mlm_rate < 0.0 || mlm_rate > 1.0)
      throw Error("train config: mlm_rate must be in [0, 1]");
    if (plm.empty()) throw Error("train config: plm name is empty");
  }
};

// Stable identifier for one experimental system; decision files and
// combination presets refer to systems by this string.
inline std::string system_id(const TrainConfig& config) {
  if (config.paradigm == Paradigm::Mlm) return config.plm + ":mlm";
  std::string id =
      config.plm + ":prompt:" + to_string(config.prompt_position);
  if (config.multi_task) id += ":multi";
  return id;
}

using DecisionMap = std::map<std::string, AdLabel>;

struct EpochDecisions {
  int epoch = 0;  // 1-based training epoch
  DecisionMap decisions;
  double accuracy = 0.0;
};

struct SystemRun {
  TrainConfig config;
  std::vector<EpochDecisions> epochs;
};

namespace detail {

inline std::vector<std::size_t> epoch_order(std::size_t n,
                                            std::uint64_t seed,
                                            int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) / 9007199254740992.0;
}

}  // namespace detail

// Inputs shared by every record of one prompt-paradigm run.
struct PromptTrainInputs {
  PromptTemplate tmpl;
  Verbalizer verbalizer;              // resolved against the tokenizer
  const Tokenizer* tokenizer = nullptr;
  std::map<std::string, FluencyLabel> fluency;  // required iff multi_task
};

inline SystemRun run_prompt_training(Backend& backend,
                                     const TrainConfig& config,
                                     const std::vector<SubjectRecord>& train,
                                     const std::vector<SubjectRecord>& eval,
                                     const PromptTrainInputs& inputs) {
  config.validate();
  if (config.paradigm != Paradigm::Prompt)
    throw Error("run_prompt_training: config paradigm is not prompt");
  if (!inputs.tokenizer) throw Error("run_prompt_training: no tokenizer");
  if (train.empty()) throw Error("run_prompt_training: no training records");
  if (eval.empty()) throw Error("run_prompt_training: no evaluation records");
  if (inputs.tmpl.position != config.prompt_position)
    throw Error("run_prompt_training: template position '" +
                to_string(inputs.tmpl.position) +
                "' does not match configured position '" +
                to_string(config.prompt_position) + "'");
  if (!inputs.tmpl.has_task(Task::Diagnosis))
    throw Error("run_prompt_training: template has no active diagnosis slot");
  if (config.multi_task && !inputs.tmpl.has_task(Task::Fluency))
    throw Error(
        "run_prompt_training: multi_task is set but the template has no "
        "active fluency slot");

  const int max_len = backend.descriptor().max_len;
  const TaskVerbalizer& diag = inputs.verbalizer.for_task(Task::Diagnosis);
  if (!diag.resolved())
    throw Error("run_prompt_training: verbalizer is not resolved");

  struct Example {
    PromptedInput input;
    LossSpec loss{PromptLossSpec{}};
    const SubjectRecord* record;
  };
  std::vector<Example> examples;
  examples.reserve(train.size());
  for (const SubjectRecord& rec : train) {
    Example ex;
    ex.record = &rec;
    ex.input = assemble(inputs.tmpl, rec.merged_text, *inputs.tokenizer,
                        max_len);
    PromptLossSpec spec;
    spec.tasks.push_back({ex.input.task_masks.at(Task::Diagnosis),
                          class_index(rec.ad_label), diag.ids,
                          config.weight_for(Task::Diagnosis)});
    if (config.multi_task) {
      auto it = inputs.fluency.find(rec.subject_id);
      if (it == inputs.fluency.end())
        throw Error("run_prompt_training: no fluency label for subject '" +
                    rec.subject_id + "'");
      const TaskVerbalizer& flu = inputs.verbalizer.for_task(Task::Fluency);
      if (!flu.resolved())
        throw Error("run_prompt_training: verbalizer is not resolved");
      spec.tasks.push_back({ex.input.task_masks.at(Task::Fluency),
                            class_index(it->second), flu.ids,
                            config.weight_for(Task::Fluency)});
    }
    ex.loss = spec;
    examples.push_back(std::move(ex));
  }

  std::vector<PromptedInput> eval_inputs;
  eval_inputs.reserve(eval.size());
  for (const SubjectRecord& rec : eval)
    eval_inputs.push_back(
        assemble(inputs.tmpl, rec.merged_text, *inputs.tokenizer, max_len));

  SystemRun run;
  run.config = config;
  const int total_epochs = config.effective_epochs();
  const int first_captured = total_epochs - config.capture_last_k + 1;

  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    auto order = detail::epoch_order(examples.size(), config.seed, epoch);
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(
          order.size(), at + static_cast<std::size_t>(config.batch_size));
      std::vector<TrainExample> batch;
      for (std::size_t i = at; i < end; ++i)
        batch.push_back(
            {&examples[order[i]].input, &examples[order[i]].loss});
      try {
        backend.train_step(batch);
      } catch (const Error& e) {
        throw Error("epoch " + std::to_string(epoch) + ", subject '" +
                    examples[order[at]].record->subject_id +
                    "': " + e.what());
      }
    }

    if (epoch < first_captured) continue;
    EpochDecisions captured;
    captured.epoch = epoch;
    int correct = 0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
      MaskLogits logits = backend.forward(eval_inputs[i]);
      const std::vector<double>& vec =
          logits.at(eval_inputs[i].task_masks.at(Task::Diagnosis));
      // Argmax over the two label words; exact ties go to AD.
      AdLabel decision =
          vec[static_cast<std::size_t>(diag.ids[0])] >=
                  vec[static_cast<std::size_t>(diag.ids[1])]
              ? AdLabel::AD
              : AdLabel::NonAD;
      captured.decisions[eval[i].subject_id] = decision;
      if (decision == eval[i].ad_label) ++correct;
    }
    captured.accuracy = static_cast<double>(correct) /
                        static_cast<double>(eval.size());
    run.epochs.push_back(std::move(captured));
  }
  return run;
}

struct MlmCheckpoint {
  int epoch = 0;
  std::unique_ptr<Backend> backend;
};

struct MlmTrainResult {
  std::vector<MlmCheckpoint> checkpoints;
  std::vector<double> epoch_losses;  // mean per-record loss, every epoch
};

inline MlmTrainResult run_mlm_training(Backend& backend,
                                       const TrainConfig& config,
                                       const std::vector<SubjectRecord>& train,
                                       const Tokenizer& tokenizer) {
  config.validate();
  if (config.paradigm != Paradigm::Mlm)
    throw Error("run_mlm_training: config paradigm is not mlm");
  if (train.empty()) throw Error("run_mlm_training: no training records");

  const int max_len = backend.descriptor().max_len;
  const int mask_id = backend.descriptor().mask_token_id;

  std::vector<PromptedInput> plain;
  plain.reserve(train.size());
  for (const SubjectRecord& rec : train)
    plain.push_back(assemble_plain(rec.merged_text, tokenizer, max_len));

  MlmTrainResult result;
  const int total_epochs = config.effective_epochs();
  const int first_kept = total_epochs - config.capture_last_k + 1;

  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    auto order = detail::epoch_order(plain.size(), config.seed, epoch);
    double epoch_loss = 0.0;
    for (std::size_t i : order) {
      // Masking is tied to (seed, epoch, record), not shuffle position.
      std::mt19937_64 rng(mix_seed(
          mix_seed(config.seed, static_cast<std::uint64_t>(epoch)),
          0x4D4C4Du ^ static_cast<std::uint64_t>(i)));
      PromptedInput masked = plain[i];
      MlmLossSpec spec;
      for (std::size_t pos = 1; pos + 1 < masked.token_ids.size(); ++pos) {
        if (detail::unit_double(rng) >= config.mlm_rate) continue;
        spec.targets.push_back({pos, masked.token_ids[pos]});
        masked.token_ids[pos] = mask_id;
        masked.mask_positions.push_back(pos);
      }
      try {
        epoch_loss += backend.train_step(masked, LossSpec{spec});
      } catch (const Error& e) {
        throw Error("epoch " + std::to_string(epoch) + ", subject '" +
                    train[i].subject_id + "': " + e.what());
      }
    }
    result.epoch_losses.push_back(epoch_loss /
                                  static_cast<double>(plain.size()));
    if (epoch >= first_kept)
      result.checkpoints.push_back({epoch, backend.snapshot()});
  }
  return result;
}

// Baseline decisions: per checkpoint, embed -> fit linear classifier on
// the training labels -> predict evaluation subjects. One decision map
// per checkpoint; voting over them happens downstream like any other
// captured-epoch set.
inline SystemRun run_baseline_classification(
    const MlmTrainResult& trained, const TrainConfig& config,
    const std::vector<SubjectRecord>& train,
    const std::vector<SubjectRecord>& eval, const Tokenizer& tokenizer,
    LinearSvmConfig svm_config = {}) {
  config.validate();
  if (trained.checkpoints.empty())
    throw Error("run_baseline_classification: no checkpoints");
  if (train.empty() || eval.empty())
    throw Error("run_baseline_classification: empty record set");

  SystemRun run;
  run.config = config;
  for (const MlmCheckpoint& ckpt : trained.checkpoints) {
    const int max_len = ckpt.backend->descriptor().max_len;
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (const SubjectRecord& rec : train) {
      x.push_back(
          ckpt.backend->embed(assemble_plain(rec.merged_text, tokenizer,
                                             max_len))
              .values);
      y.push_back(class_index(rec.ad_label));
    }
    LinearSvm svm(svm_config);
    svm.fit(x, y);

    EpochDecisions captured;
    captured.epoch = ckpt.epoch;
    int correct = 0;
    for (const SubjectRecord& rec : eval) {
      EmbeddingVector e =
          ckpt.backend->embed(assemble_plain(rec.merged_text, tokenizer,
                                             max_len));
      AdLabel decision =
          svm.predict(e.values) == 0 ? AdLabel::AD : AdLabel::NonAD;
      captured.decisions[rec.subject_id] = decision;
      if (decision == rec.ad_label) ++correct;
    }
    captured.accuracy =
        static_cast<double>(correct) / static_cast<double>(eval.size());
    run.epochs.push_back(std::move(captured));
  }
  return run;
}

inline std::map<std::string, AdLabel> gold_labels(
    const std::vector<SubjectRecord>& records) {
  std::map<std::string, AdLabel> out;
  for (const SubjectRecord& rec : records) out[rec.subject_id] = rec.ad_label;
  return out;
}

}  // namespace adprompt
