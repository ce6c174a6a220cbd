#pragma once

// Accuracy aggregation and reporting. Cross-validation pools decisions
// over subjects before scoring, so fold sizes never skew the mean.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adprompt/corpus.hpp"
#include "adprompt/trainer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

struct AccuracyStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double best = 0.0;
  std::size_t n_runs = 0;
};

// Population standard deviation by default; pass population=false for
// the sample estimator (n==1 then degenerates to 0).
inline AccuracyStats compute_stats(const std::vector<double>& accuracies,
                                   bool population = true) {
  if (accuracies.empty()) throw Error("compute_stats: no accuracies");
  AccuracyStats s;
  s.n_runs = accuracies.size();
  double n = static_cast<double>(s.n_runs);
  s.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
  s.best = accuracies.front();
  double ss = 0.0;
  for (double a : accuracies) {
    if (a > s.best) s.best = a;
    ss += (a - s.mean) * (a - s.mean);
  }
  if (population)
    s.std_dev = std::sqrt(ss / n);
  else
    s.std_dev = s.n_runs > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return s;
}

struct CvResult {
  double accuracy = 0.0;
  int correct = 0;
  int total = 0;
  DecisionMap decisions;               // pooled across folds
  std::map<int, double> fold_accuracy; // per fold, informational
};

using FoldExperiment =
    std::function<DecisionMap(const std::vector<SubjectRecord>& train,
                              const std::vector<SubjectRecord>& eval)>;

// Leave-one-fold-out over the training split. Every record needs a
// fold assignment; decisions from each fold must cover exactly the
// held-out subjects.
inline CvResult run_cv(const std::vector<SubjectRecord>& records,
                       const std::map<std::string, int>& fold_of,
                       int fold_count, const FoldExperiment& experiment) {
  if (records.empty()) throw Error("run_cv: no records");
  if (fold_count < 2) throw Error("run_cv: fold_count must be >= 2");
  for (const SubjectRecord& r : records)
    if (!fold_of.count(r.subject_id))
      throw Error("run_cv: missing fold assignment for subject '" +
                  r.subject_id + "'");

  CvResult result;
  for (int fold = 0; fold < fold_count; ++fold) {
    std::vector<SubjectRecord> train_part, eval_part;
    for (const SubjectRecord& r : records) {
      if (fold_of.at(r.subject_id) == fold)
        eval_part.push_back(r);
      else
        train_part.push_back(r);
    }
    if (eval_part.empty()) continue;
    DecisionMap decisions = experiment(train_part, eval_part);

    int fold_correct = 0;
    for (const SubjectRecord& r : eval_part) {
      auto it = decisions.find(r.subject_id);
      if (it == decisions.end())
        throw Error("run_cv: fold " + std::to_string(fold) +
                    " returned no decision for subject '" + r.subject_id +
                    "'");
      result.decisions[r.subject_id] = it->second;
      if (it->second == r.ad_label) {
        ++result.correct;
        ++fold_correct;
      }
      ++result.total;
    }
    result.fold_accuracy[fold] = static_cast<double>(fold_correct) /
                                 static_cast<double>(eval_part.size());
  }
  if (result.total == 0) throw Error("run_cv: all folds were empty");
  result.accuracy =
      static_cast<double>(result.correct) / static_cast<double>(result.total);
  return result;
}

// Runs one experiment per seed; a failure aborts the sweep and names
// the offending seed.
inline std::vector<double> sweep_seeds(
    const std::vector<std::uint64_t>& seeds,
    const std::function<double(std::uint64_t)>& experiment) {
  if (seeds.empty()) throw Error("sweep_seeds: empty seed list");
  std::vector<double> accuracies;
  accuracies.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    try {
      accuracies.push_back(experiment(seed));
    } catch (const std::exception& e) {
      throw Error("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  return accuracies;
}

struct ReportRow {
  std::string system;     // system id or combination preset name
  std::string condition;  // evaluation regime, e.g. "cv" or "test"
  AccuracyStats stats;
};

namespace detail {

inline std::string format_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace detail

// Fixed-width text table; rows render in input order.
inline std::string render_report_text(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw Error("render_report: no rows");
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"system", "condition", "mean%", "std%", "best%", "runs"});
  for (const ReportRow& r : rows)
    cells.push_back({r.system, r.condition, detail::format_pct(r.stats.mean),
                     detail::format_pct(r.stats.std_dev),
                     detail::format_pct(r.stats.best),
                     std::to_string(r.stats.n_runs)});

  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << row[c];
      if (c + 1 < row.size())
        out << std::string(width[c] - row[c].size(), ' ');
    }
    out << '\n';
  }
  return out.str();
}

inline std::string render_report_tsv(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw Error("render_report: no rows");
  std::ostringstream out;
  out << "system\tcondition\tmean\tstd\tbest\truns\n";
  for (const ReportRow& r : rows)
    out << r.system << '\t' << r.condition << '\t'
        << detail::format_pct(r.stats.mean) << '\t'
        << detail::format_pct(r.stats.std_dev) << '\t'
        << detail::format_pct(r.stats.best) << '\t' << r.stats.n_runs << '\n';
  return out.str();
}

}  // namespace adprompt
