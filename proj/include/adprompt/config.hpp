#pragma once

// Declarative experiment configuration. One JSON file describes a full
// run; command-line flags may override individual values afterwards.
// Parsing is strict: unknown keys are rejected, and the error names all
// of them at once.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adprompt/ensemble.hpp"
#include "adprompt/lexicon.hpp"
#include "adprompt/prompting.hpp"
#include "adprompt/trainer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

// Construction parameters for the self-contained backend.
struct ToyParams {
  int embed_dim = 16;
  int hidden_dim = 32;
  int max_len = 128;
  double init_scale = 0.2;
  Pooling pooling = Pooling::Begin;
  double weight_decay = 0.01;
  std::uint64_t backend_seed = 0;
};

struct RunConfig {
  std::filesystem::path data_root;
  std::filesystem::path out_dir = "out";
  Source source = Source::Manual;
  // Single-task default; multi-task runs configure a template with a
  // fluency slot as well.
  std::string template_text = "the diagnosis is <MASK> .";
  Verbalizer verbalizer = Verbalizer::defaults();
  DisfluencyLexicon lexicon = default_lexicon();
  bool threshold_auto = true;
  int threshold_fixed = 0;
  TrainConfig train;  // seed field is filled per run from `seeds`
  std::vector<std::uint64_t> seeds{0};
  bool cv = true;
  int fold_count = 10;
  std::uint64_t fold_seed = 0;
  std::string preset = "front+back";
  std::vector<std::string> preset_plms;  // defaults to {train.plm}
  TiePolicy tie_policy = TiePolicy::PoolSubDecisions;
  int workers = 1;
  ToyParams toy;
  std::string backend_url;  // empty selects the built-in toy backend

  std::vector<std::string> resolved_preset_plms() const {
    return preset_plms.empty() ? std::vector<std::string>{train.plm}
                               : preset_plms;
  }

  void validate() const {
    train.validate();
    if (seeds.empty()) throw Error("config: seed list is empty");
    std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
    if (distinct.size() != seeds.size())
      throw Error("config: duplicate seed in seed list");
    if (workers < 1) throw Error("config: workers must be >= 1");
    if (fold_count < 2) throw Error("config: folds must be >= 2");
    if (threshold_fixed < 0)
      throw Error("config: threshold must be >= 0");
    const auto& names = preset_names();
    if (std::find(names.begin(), names.end(), preset) == names.end())
      throw Error("config: unknown combination preset: '" + preset + "'");
    make_preset(preset, resolved_preset_plms(), train.multi_task);
    lexicon.validate();
    if (train.paradigm == Paradigm::Prompt) {
      PromptTemplate tmpl =
          parse_template(template_text, train.prompt_position);
      if (!tmpl.has_task(Task::Diagnosis))
        throw Error("config: template has no diagnosis slot");
      if (train.multi_task && !tmpl.has_task(Task::Fluency))
        throw Error("config: multi_task needs a fluency slot in the template");
    }
    for (const auto& [task, tv] : verbalizer.tasks)
      if (tv.words[0].empty() || tv.words[1].empty())
        throw Error("config: verbalizer words must be non-empty");
  }
};

namespace detail {

// Pulls `key` from `j` into `field`, naming the key on type errors.
template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& field) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    field = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("config: field '" + std::string(key) + "': " + e.what());
  }
}

template <typename Parse>
void read_enum_field(const nlohmann::json& j, const char* key, Parse parse) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_string())
    throw Error("config: field '" + std::string(key) + "' must be a string");
  parse(it->get<std::string>());
}

inline void collect_unknown_keys(const nlohmann::json& object,
                                 const std::set<std::string>& known,
                                 const std::string& prefix,
                                 std::vector<std::string>& unknown) {
  for (const auto& [key, value] : object.items())
    if (!known.count(key)) unknown.push_back(prefix + key);
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("config: top level must be a JSON object");

  static const std::set<std::string> kTopKeys = {
      "data_root",   "out_dir",        "source",       "template",
      "verbalizer",  "interjections",  "threshold",    "plm",
      "paradigm",    "position",       "multi_task",   "task_weights",
      "interpolate_weights",           "lr",           "batch_size",
      "epochs",      "capture_last_k", "mlm_rate",     "seeds",
      "cv",          "folds",          "fold_seed",    "preset",
      "preset_plms", "tie_policy",     "workers",      "toy",
      "backend_url"};
  static const std::set<std::string> kToyKeys = {
      "embed_dim",  "hidden_dim",   "max_len",     "init_scale",
      "pooling",    "weight_decay", "backend_seed"};
  static const std::set<std::string> kVerbalizerKeys = {"diagnosis",
                                                        "fluency"};

  std::vector<std::string> unknown;
  detail::collect_unknown_keys(j, kTopKeys, "", unknown);
  if (j.contains("toy") && j["toy"].is_object())
    detail::collect_unknown_keys(j["toy"], kToyKeys, "toy.", unknown);
  if (j.contains("verbalizer") && j["verbalizer"].is_object())
    detail::collect_unknown_keys(j["verbalizer"], kVerbalizerKeys,
                                 "verbalizer.", unknown);
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    throw Error("config: unknown keys: " + detail::join(unknown, ", "));
  }

  RunConfig cfg;
  std::string path_buf;
  if (j.contains("data_root")) {
    detail::read_field(j, "data_root", path_buf);
    cfg.data_root = path_buf;
  }
  if (j.contains("out_dir")) {
    detail::read_field(j, "out_dir", path_buf);
    cfg.out_dir = path_buf;
  }
  detail::read_enum_field(j, "source", [&](const std::string& s) {
    cfg.source = parse_source(s);
  });
  detail::read_field(j, "template", cfg.template_text);

  if (j.contains("verbalizer")) {
    const nlohmann::json& v = j["verbalizer"];
    if (!v.is_object())
      throw Error("config: field 'verbalizer' must be an object");
    auto read_words = [&](const char* key, Task task) {
      if (!v.contains(key)) return;
      std::vector<std::string> words;
      detail::read_field(v, key, words);
      if (words.size() != 2)
        throw Error("config: verbalizer." + std::string(key) +
                    " needs exactly 2 label words");
      cfg.verbalizer.tasks[task] = {{words[0], words[1]}, {-1, -1}};
    };
    read_words("diagnosis", Task::Diagnosis);
    read_words("fluency", Task::Fluency);
  }

  if (j.contains("interjections")) {
    std::vector<std::string> words;
    detail::read_field(j, "interjections", words);
    cfg.lexicon.interjections =
        std::set<std::string>(words.begin(), words.end());
  }

  if (j.contains("threshold")) {
    const nlohmann::json& t = j["threshold"];
    if (t.is_string() && t.get<std::string>() == "auto") {
      cfg.threshold_auto = true;
    } else if (t.is_number_integer()) {
      cfg.threshold_auto = false;
      cfg.threshold_fixed = t.get<int>();
    } else {
      throw Error("config: threshold must be \"auto\" or an integer");
    }
  }

  detail::read_field(j, "plm", cfg.train.plm);
  detail::read_enum_field(j, "paradigm", [&](const std::string& s) {
    cfg.train.paradigm = parse_paradigm(s);
  });
  detail::read_enum_field(j, "position", [&](const std::string& s) {
    cfg.train.prompt_position = parse_prompt_position(s);
  });
  detail::read_field(j, "multi_task", cfg.train.multi_task);
  if (j.contains("task_weights")) {
    std::vector<double> w;
    detail::read_field(j, "task_weights", w);
    if (w.size() != 2)
      throw Error(
          "config: task_weights needs exactly 2 entries (diagnosis, fluency)");
    cfg.train.task_weights = {w[0], w[1]};
  }
  detail::read_field(j, "interpolate_weights", cfg.train.interpolate_weights);
  detail::read_field(j, "lr", cfg.train.lr);
  detail::read_field(j, "batch_size", cfg.train.batch_size);
  detail::read_field(j, "epochs", cfg.train.epochs);
  detail::read_field(j, "capture_last_k", cfg.train.capture_last_k);
  detail::read_field(j, "mlm_rate", cfg.train.mlm_rate);

  detail::read_field(j, "seeds", cfg.seeds);
  detail::read_field(j, "cv", cfg.cv);
  detail::read_field(j, "folds", cfg.fold_count);
  detail::read_field(j, "fold_seed", cfg.fold_seed);
  detail::read_field(j, "preset", cfg.preset);
  detail::read_field(j, "preset_plms", cfg.preset_plms);
  detail::read_enum_field(j, "tie_policy", [&](const std::string& s) {
    cfg.tie_policy = parse_tie_policy(s);
  });
  detail::read_field(j, "workers", cfg.workers);
  detail::read_field(j, "backend_url", cfg.backend_url);

  if (j.contains("toy")) {
    const nlohmann::json& t = j["toy"];
    if (!t.is_object()) throw Error("config: field 'toy' must be an object");
    detail::read_field(t, "embed_dim", cfg.toy.embed_dim);
    detail::read_field(t, "hidden_dim", cfg.toy.hidden_dim);
    detail::read_field(t, "max_len", cfg.toy.max_len);
    detail::read_field(t, "init_scale", cfg.toy.init_scale);
    detail::read_enum_field(t, "pooling", [&](const std::string& s) {
      cfg.toy.pooling = parse_pooling(s);
    });
    detail::read_field(t, "weight_decay", cfg.toy.weight_decay);
    detail::read_field(t, "backend_seed", cfg.toy.backend_seed);
  }

  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read config file: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config: " + path.string() + " is not valid JSON: " +
                e.what());
  }
  return parse_run_config(j);
}

}  // namespace adprompt
