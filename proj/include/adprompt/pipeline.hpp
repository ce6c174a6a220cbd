#pragma once

// Library form of the command-line workflow. Each cmd_* function does
// one subcommand's work against the output directory and throws Error
// on failure; the CLI translates that into exit codes. Keeping these as
// functions lets tests drive the full pipeline in-process.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "adprompt/backend.hpp"
#include "adprompt/config.hpp"
#include "adprompt/corpus.hpp"
#include "adprompt/disfluency.hpp"
#include "adprompt/ensemble.hpp"
#include "adprompt/evaluation.hpp"
#include "adprompt/http_backend.hpp"
#include "adprompt/prompting.hpp"
#include "adprompt/runstore.hpp"
#include "adprompt/tokenizer.hpp"
#include "adprompt/trainer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

struct PipelinePaths {
  std::filesystem::path out;

  std::filesystem::path manifest() const { return out / "manifest.tsv"; }
  std::filesystem::path profiles() const { return out / "profiles.tsv"; }
  std::filesystem::path runs_dir() const { return out / "runs"; }
  std::filesystem::path cv_dir() const { return out / "cv"; }
  std::filesystem::path combined_dir() const { return out / "combined"; }
  std::filesystem::path stats_dir() const { return out / "stats"; }
  std::filesystem::path report_text() const { return out / "report.txt"; }
  std::filesystem::path report_tsv() const { return out / "report.tsv"; }
};

namespace detail {

inline std::vector<std::filesystem::path> sorted_files(
    const std::filesystem::path& dir, std::string_view extension) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) return files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == extension)
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Words a prompt run must be able to tokenize exactly.
inline std::vector<std::string> reserved_words(const RunConfig& cfg) {
  std::vector<std::string> reserved;
  std::set<std::string> seen;
  auto add = [&](const std::string& word) {
    std::string w = to_lower(word);
    if (seen.insert(w).second) reserved.push_back(w);
  };
  if (cfg.train.paradigm == Paradigm::Prompt) {
    PromptTemplate tmpl =
        parse_template(cfg.template_text, cfg.train.prompt_position);
    for (const TemplateSegment& s : tmpl.segments)
      if (s.kind == TemplateSegment::Kind::Literal)
        for (const std::string& w : split_ws(s.text)) add(w);
    for (const auto& [task, tv] : cfg.verbalizer.tasks)
      for (const std::string& w : tv.words) add(w);
  }
  return reserved;
}

struct LoadedData {
  DatasetManifest manifest;
  std::vector<SubjectRecord> train;
  std::vector<SubjectRecord> test;
};

inline LoadedData load_data(const RunConfig& cfg, const PipelinePaths& paths) {
  if (!std::filesystem::exists(paths.manifest()))
    throw Error("no manifest at " + paths.manifest().string() +
                "; run ingest first");
  LoadedData data;
  data.manifest = load_manifest_file(paths.manifest());
  materialize_records(data.manifest, cfg.data_root, cfg.lexicon);
  require_nonempty_text(data.manifest.records);
  for (const SubjectRecord& rec : data.manifest.records)
    (rec.split == Split::Train ? data.train : data.test).push_back(rec);
  return data;
}

}  // namespace detail

inline void cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  if (cfg.data_root.empty())
    throw Error("no data root configured (flag, environment, or config)");
  std::filesystem::path listing = cfg.data_root / "subjects.tsv";
  std::ifstream is(listing);
  if (!is) throw Error("no subject listing at " + listing.string());

  std::vector<SubjectRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = detail::split(line, '\t');
    if (f.size() != 5)
      throw Error("subject listing line " + std::to_string(line_no) +
                  ": expected 5 fields (id, split, label, source, path), "
                  "got " + std::to_string(f.size()));
    SubjectRecord rec;
    rec.subject_id = f[0];
    rec.split = parse_split(f[1]);
    rec.ad_label = parse_ad_label(f[2]);
    rec.source = parse_source(f[3]);
    rec.transcript_path = f[4];
    if (rec.source == cfg.source) records.push_back(std::move(rec));
  }
  if (records.empty())
    throw Error("no subjects with source '" + to_string(cfg.source) +
                "' in " + listing.string());

  DatasetManifest manifest =
      build_manifest(std::move(records), cfg.fold_count, cfg.fold_seed);
  materialize_records(manifest, cfg.data_root, cfg.lexicon);
  require_nonempty_text(manifest.records);

  PipelinePaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.out);
  save_manifest_file(manifest, paths.manifest());
  out << "ingested " << manifest.records.size() << " subjects ("
      << manifest.train_count << " train / " << manifest.test_count
      << " test) -> " << paths.manifest().string() << "\n";
}

inline void cmd_disfluency(const RunConfig& cfg, std::ostream& out) {
  PipelinePaths paths{cfg.out_dir};
  detail::LoadedData data = detail::load_data(cfg, paths);

  std::vector<DisfluencyProfile> train_profiles, all_profiles;
  for (const SubjectRecord& rec : data.manifest.records) {
    DisfluencyProfile p = profile(rec, cfg.lexicon);
    if (rec.split == Split::Train) train_profiles.push_back(p);
    all_profiles.push_back(std::move(p));
  }

  int threshold = cfg.threshold_fixed;
  if (cfg.threshold_auto) {
    FluencyLabeling train_labeling = select_threshold_by_correlation(
        train_profiles, gold_labels(data.train));
    threshold = train_labeling.threshold;
  }
  FluencyLabeling labeling = label_with_threshold(all_profiles, threshold);

  std::ofstream os(paths.profiles());
  if (!os)
    throw Error("cannot write profiles file: " + paths.profiles().string());
  save_profiles(all_profiles, labeling, os);
  out << "threshold " << threshold << " ("
      << (cfg.threshold_auto ? "auto" : "fixed") << "): "
      << labeling.stumbling_count << " stumbling / " << labeling.fluent_count
      << " fluent -> " << paths.profiles().string() << "\n";
}

namespace detail {

// Everything one training seed needs; shared across worker threads.
struct TrainContext {
  const RunConfig* cfg = nullptr;
  PipelinePaths paths;
  const LoadedData* data = nullptr;
  const Tokenizer* tokenizer = nullptr;
  PromptTrainInputs prompt_inputs;  // prompt paradigm only
  HttpBackend* http = nullptr;      // non-null for a remote backend
};

inline std::unique_ptr<ToyBackend> make_toy_backend(const RunConfig& cfg,
                                                    const Tokenizer& tok,
                                                    std::uint64_t seed) {
  ToyBackendConfig toy;
  toy.name = cfg.train.plm;
  toy.embed_dim = cfg.toy.embed_dim;
  toy.hidden_dim = cfg.toy.hidden_dim;
  toy.max_len = cfg.toy.max_len;
  toy.init_scale = cfg.toy.init_scale;
  toy.pooling = cfg.toy.pooling;
  toy.optimizer.lr = cfg.train.lr;
  toy.optimizer.weight_decay = cfg.toy.weight_decay;
  toy.seed = mix_seed(cfg.toy.backend_seed, seed);
  return std::make_unique<ToyBackend>(std::move(toy), tok.vocab_size(),
                                      tok.mask_id());
}

// Trains on `train`, decides `eval` by voting the captured epochs.
inline SystemRun train_once(const TrainContext& ctx, std::uint64_t seed,
                            const std::vector<SubjectRecord>& train,
                            const std::vector<SubjectRecord>& eval) {
  const RunConfig& cfg = *ctx.cfg;
  TrainConfig tc = cfg.train;
  tc.seed = seed;

  Backend* backend = nullptr;
  std::unique_ptr<ToyBackend> toy;
  if (ctx.http) {
    ctx.http->reset(seed);
    backend = ctx.http;
  } else {
    toy = make_toy_backend(cfg, *ctx.tokenizer, seed);
    backend = toy.get();
  }

  if (tc.paradigm == Paradigm::Prompt)
    return run_prompt_training(*backend, tc, train, eval, ctx.prompt_inputs);
  MlmTrainResult trained = run_mlm_training(*backend, tc, train,
                                            *ctx.tokenizer);
  return run_baseline_classification(trained, tc, train, eval,
                                     *ctx.tokenizer);
}

inline void train_seed(const TrainContext& ctx, std::uint64_t seed) {
  const RunConfig& cfg = *ctx.cfg;
  const std::string sys_id = [&] {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    return system_id(tc);
  }();

  if (!std::filesystem::exists(run_path(ctx.paths.out, sys_id, seed))) {
    SystemRun run = train_once(ctx, seed, ctx.data->train, ctx.data->test);
    save_run_file(run, ctx.paths.out);
  }

  if (cfg.cv && !std::filesystem::exists(
                    cv_path(ctx.paths.out, sys_id, seed))) {
    CvResult result = run_cv(
        ctx.data->train, ctx.data->manifest.fold_of, ctx.data->manifest.fold_count,
        [&](const std::vector<SubjectRecord>& fold_train,
            const std::vector<SubjectRecord>& fold_eval) {
          SystemRun fold_run = train_once(ctx, seed, fold_train, fold_eval);
          return vote_run(fold_run, cfg.tie_policy).decisions;
        });
    CvRun cv{sys_id, seed, result.decisions};
    std::filesystem::path path = cv_path(ctx.paths.out, sys_id, seed);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write cv file: " + path.string());
    save_cv(cv, os);
  }
}

}  // namespace detail

inline void cmd_train(const RunConfig& cfg, std::ostream& out) {
  PipelinePaths paths{cfg.out_dir};
  detail::LoadedData data = detail::load_data(cfg, paths);
  if (data.train.empty()) throw Error("manifest has no training subjects");
  if (data.test.empty()) throw Error("manifest has no test subjects");

  detail::TrainContext ctx;
  ctx.cfg = &cfg;
  ctx.paths = paths;
  ctx.data = &data;

  std::unique_ptr<HttpBackend> http;
  std::unique_ptr<HttpTokenizer> http_tokenizer;
  std::unique_ptr<ToyTokenizer> toy_tokenizer;
  if (!cfg.backend_url.empty()) {
    if (cfg.workers != 1)
      throw Error("config: workers must be 1 with an http backend");
    http = std::make_unique<HttpBackend>(cfg.backend_url);
    http_tokenizer = std::make_unique<HttpTokenizer>(cfg.backend_url);
    ctx.http = http.get();
    ctx.tokenizer = http_tokenizer.get();
  } else {
    std::vector<std::string> texts;
    for (const SubjectRecord& rec : data.manifest.records)
      texts.push_back(rec.merged_text);
    toy_tokenizer = std::make_unique<ToyTokenizer>(
        build_toy_tokenizer(detail::reserved_words(cfg), texts));
    ctx.tokenizer = toy_tokenizer.get();
  }

  if (cfg.train.paradigm == Paradigm::Prompt) {
    PromptTemplate tmpl =
        parse_template(cfg.template_text, cfg.train.prompt_position);
    if (!cfg.train.multi_task && tmpl.has_task(Task::Fluency))
      tmpl = restrict_template(tmpl, Task::Diagnosis);
    ctx.prompt_inputs.tmpl = std::move(tmpl);
    ctx.prompt_inputs.verbalizer =
        validate_verbalizer(cfg.verbalizer, *ctx.tokenizer);
    ctx.prompt_inputs.tokenizer = ctx.tokenizer;
    if (cfg.train.multi_task) {
      if (!std::filesystem::exists(paths.profiles()))
        throw Error("no disfluency profiles at " + paths.profiles().string() +
                    "; run disfluency first");
      std::ifstream is(paths.profiles());
      StoredDisfluency stored = load_profiles(is);
      ctx.prompt_inputs.fluency = stored.labeling.labels;
    }
  }

  std::vector<std::uint64_t> pending;
  std::size_t skipped = 0;
  for (std::uint64_t seed : cfg.seeds) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    bool need_run =
        !std::filesystem::exists(run_path(paths.out, system_id(tc), seed));
    bool need_cv =
        cfg.cv &&
        !std::filesystem::exists(cv_path(paths.out, system_id(tc), seed));
    if (need_run || need_cv)
      pending.push_back(seed);
    else
      ++skipped;
  }

  if (cfg.workers == 1 || pending.size() <= 1) {
    for (std::uint64_t seed : pending) detail::train_seed(ctx, seed);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= pending.size()) return;
        try {
          detail::train_seed(ctx, pending[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    std::size_t n_workers = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.workers), pending.size());
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seeds.front();
  out << "system " << system_id(tc) << ": trained " << pending.size()
      << " seed(s), skipped " << skipped << " already stored -> "
      << paths.runs_dir().string() << "\n";
}

inline void cmd_combine(const RunConfig& cfg, std::ostream& out) {
  PipelinePaths paths{cfg.out_dir};
  detail::LoadedData data = detail::load_data(cfg, paths);

  auto files = detail::sorted_files(paths.runs_dir(), ".tsv");
  if (files.empty())
    throw Error("no stored runs in " + paths.runs_dir().string() +
                "; run train first");
  std::vector<SystemRun> runs;
  for (const auto& file : files) runs.push_back(load_run_file(file));

  CombinationPreset preset =
      make_preset(cfg.preset, cfg.resolved_preset_plms(), cfg.train.multi_task);
  std::vector<DecisionVector> combined =
      combine_runs(runs, preset, cfg.tie_policy);

  std::filesystem::path path = combined_path(paths.out, preset.name);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write combined file: " + path.string());
  save_combined(combined, cfg.tie_policy, os);

  auto test_gold = gold_labels(data.test);
  std::vector<double> accuracies;
  for (const DecisionVector& v : combined)
    accuracies.push_back(accuracy(v.decisions, test_gold));
  AccuracyStats stats = compute_stats(accuracies);

  std::filesystem::create_directories(paths.stats_dir());
  std::filesystem::path stats_path =
      paths.stats_dir() / (sanitize_file_stem(preset.name) + "_test.tsv");
  std::ofstream stats_os(stats_path);
  if (!stats_os)
    throw Error("cannot write stats file: " + stats_path.string());
  stats_os << render_report_tsv({{preset.name, "test", stats}});

  out << "combined " << combined.size() << " decision vector(s) under '"
      << preset.name << "' -> " << path.string() << "\n";
}

inline void cmd_report(const RunConfig& cfg, std::ostream& out) {
  PipelinePaths paths{cfg.out_dir};
  detail::LoadedData data = detail::load_data(cfg, paths);
  auto train_gold = gold_labels(data.train);
  auto test_gold = gold_labels(data.test);

  std::map<std::string, std::vector<SystemRun>> by_system;
  for (const auto& file : detail::sorted_files(paths.runs_dir(), ".tsv")) {
    SystemRun run = load_run_file(file);
    by_system[system_id(run.config)].push_back(std::move(run));
  }
  std::map<std::string, std::vector<CvRun>> cv_by_system;
  for (const auto& file : detail::sorted_files(paths.cv_dir(), ".tsv")) {
    std::ifstream is(file);
    if (!is) throw Error("cannot read cv file: " + file.string());
    CvRun run = load_cv(is);
    cv_by_system[run.system].push_back(std::move(run));
  }

  std::vector<ReportRow> rows;
  for (auto& [system, runs] : by_system) {
    std::sort(runs.begin(), runs.end(),
              [](const SystemRun& a, const SystemRun& b) {
                return a.config.seed < b.config.seed;
              });
    if (auto it = cv_by_system.find(system); it != cv_by_system.end()) {
      std::sort(it->second.begin(), it->second.end(),
                [](const CvRun& a, const CvRun& b) { return a.seed < b.seed; });
      std::vector<double> accs;
      for (const CvRun& cv : it->second)
        accs.push_back(accuracy(cv.decisions, train_gold));
      rows.push_back({system, "cv", compute_stats(accs)});
    }
    std::vector<double> accs;
    for (const SystemRun& run : runs)
      accs.push_back(
          accuracy(vote_run(run, cfg.tie_policy).decisions, test_gold));
    rows.push_back({system, "test", compute_stats(accs)});
  }

  // Combined rows follow the preset registry order.
  for (const std::string& preset : preset_names()) {
    std::filesystem::path path = combined_path(paths.out, preset);
    if (!std::filesystem::exists(path)) continue;
    std::ifstream is(path);
    if (!is) throw Error("cannot read combined file: " + path.string());
    std::vector<DecisionVector> combined = load_combined(is);
    std::vector<double> accs;
    for (const DecisionVector& v : combined)
      accs.push_back(accuracy(v.decisions, test_gold));
    rows.push_back({preset, "test", compute_stats(accs)});
  }

  if (rows.empty())
    throw Error("report: no stored runs in " + paths.out.string());

  std::string text = render_report_text(rows);
  std::string tsv = render_report_tsv(rows);
  std::ofstream text_os(paths.report_text());
  if (!text_os)
    throw Error("cannot write report: " + paths.report_text().string());
  text_os << text;
  std::ofstream tsv_os(paths.report_tsv());
  if (!tsv_os)
    throw Error("cannot write report: " + paths.report_tsv().string());
  tsv_os << tsv;

  std::filesystem::create_directories(paths.stats_dir());
  for (const ReportRow& row : rows) {
    std::filesystem::path stats_path =
        paths.stats_dir() /
        (sanitize_file_stem(row.system) + "_" + row.condition + ".tsv");
    std::ofstream os(stats_path);
    if (!os) throw Error("cannot write stats file: " + stats_path.string());
    os << render_report_tsv({row});
  }

  out << text;
}

}  // namespace adprompt
