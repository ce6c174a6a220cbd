// Acceptance gate: every release-blocking behavior is verified here,
// one line of output per criterion. Criterion 10 needs a live model
// server and real transcripts, so it is skipped unless the environment
// provides them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adprompt/pipeline.hpp"
#include "support.hpp"

using namespace adprompt;

namespace {

struct Outcome {
  enum class Kind { Pass, Fail, Skip };
  Kind kind = Kind::Pass;
  std::string detail;
};

Outcome pass(std::string detail) {
  return {Outcome::Kind::Pass, std::move(detail)};
}
Outcome fail(std::string detail) {
  return {Outcome::Kind::Fail, std::move(detail)};
}
Outcome skip(std::string detail) {
  return {Outcome::Kind::Skip, std::move(detail)};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string pct(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", value * 100.0);
  return buf;
}

// --- criterion 1 -----------------------------------------------------

Outcome check_voting_oracle() {
  auto start = std::chrono::steady_clock::now();
  const TiePolicy policies[] = {TiePolicy::PreferAD, TiePolicy::PreferNonAD,
                                TiePolicy::PoolSubDecisions};
  std::size_t checked = 0;
  for (int n = 1; n <= 7; ++n) {
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
      std::vector<AdLabel> votes;
      int ad = 0;
      for (int i = 0; i < n; ++i) {
        bool is_ad = (bits >> i) & 1u;
        votes.push_back(is_ad ? AdLabel::AD : AdLabel::NonAD);
        ad += is_ad ? 1 : 0;
      }
      int non = n - ad;
      for (TiePolicy policy : policies) {
        AdLabel want;
        if (ad > non)
          want = AdLabel::AD;
        else if (non > ad)
          want = AdLabel::NonAD;
        else
          want = policy == TiePolicy::PreferNonAD ? AdLabel::NonAD
                                                  : AdLabel::AD;
        if (majority_vote(votes, policy) != want)
          return fail("mismatch at n=" + std::to_string(n) + " bits=" +
                      std::to_string(bits) + " policy=" + to_string(policy));
        ++checked;
      }
    }
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 1.0)
    return fail("took " + std::to_string(elapsed) + "s (budget 1s)");
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "%zu vote patterns match brute force in %.0f ms", checked,
                elapsed * 1000.0);
  return pass(buf);
}

// --- criterion 2 -----------------------------------------------------

Outcome check_cartesian_count_and_stats() {
  std::mt19937_64 rng(0xC2);
  std::vector<std::string> subjects;
  DecisionMap gold;
  for (int i = 0; i < 40; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "s%02d", i);
    subjects.push_back(id);
    gold[id] = (rng() & 1) ? AdLabel::AD : AdLabel::NonAD;
  }

  std::vector<SystemRun> runs;
  for (const std::string& plm : {std::string("sysa"), std::string("sysb")}) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      SystemRun run;
      run.config.plm = plm;
      run.config.paradigm = Paradigm::Mlm;
      run.config.prompt_position = PromptPosition::None;
      run.config.seed = seed;
      for (int epoch = 28; epoch <= 30; ++epoch) {
        EpochDecisions ed;
        ed.epoch = epoch;
        for (const std::string& id : subjects)
          ed.decisions[id] = (rng() & 1) ? AdLabel::AD : AdLabel::NonAD;
        run.epochs.push_back(std::move(ed));
      }
      runs.push_back(std::move(run));
    }
  }

  CombinationPreset preset =
      make_preset("bert+roberta:mlm", {"sysa", "sysb"}, false);
  std::vector<DecisionVector> combined =
      combine_runs(runs, preset, TiePolicy::PoolSubDecisions);
  if (combined.size() != 225)
    return fail("expected 15*15 = 225 combinations, got " +
                std::to_string(combined.size()));

  std::vector<double> accuracies;
  for (const DecisionVector& v : combined)
    accuracies.push_back(accuracy(v.decisions, gold));
  AccuracyStats stats = compute_stats(accuracies);

  long double sum = 0.0L;
  double best = accuracies.front();
  for (double a : accuracies) {
    sum += a;
    best = std::max(best, a);
  }
  long double mean = sum / static_cast<long double>(accuracies.size());
  long double var = 0.0L;
  for (double a : accuracies) var += (a - mean) * (a - mean);
  var /= static_cast<long double>(accuracies.size());
  long double std_dev = std::sqrt(static_cast<double>(var));

  if (std::fabs(stats.mean - static_cast<double>(mean)) > 1e-12)
    return fail("mean drifted from independent recomputation");
  if (std::fabs(stats.std_dev - static_cast<double>(std_dev)) > 1e-12)
    return fail("std drifted from independent recomputation");
  if (stats.best != best || stats.n_runs != 225)
    return fail("best/count drifted from independent recomputation");
  return pass("two 15-seed systems combine into exactly 15*15 = 225 "
              "decision vectors (not 255); stats agree within 1e-12");
}

// --- criterion 3 -----------------------------------------------------

bool grad_close(double analytic, double fd) {
  return std::fabs(analytic - fd) <=
         1e-7 + 1e-4 * std::max(std::fabs(analytic), std::fabs(fd));
}

Outcome check_gradients() {
  std::mt19937_64 rng(0xC3);
  std::uniform_real_distribution<double> logit_dist(-2.0, 2.0);
  const double h = 1e-5;
  std::size_t logit_checks = 0;

  for (int draw = 0; draw < 100; ++draw) {
    int vocab = 8 + static_cast<int>(rng() % 6);
    MaskLogits logits;
    logits.positions = {2, 5};
    for (std::size_t row = 0; row < 2; ++row) {
      std::vector<double> values(vocab);
      for (double& v : values) v = logit_dist(rng);
      logits.logits.push_back(std::move(values));
    }

    auto pick_pair = [&](std::array<int, 2>& ids) {
      ids[0] = static_cast<int>(rng() % vocab);
      do {
        ids[1] = static_cast<int>(rng() % vocab);
      } while (ids[1] == ids[0]);
    };

    LossSpec spec;
    if (draw % 2 == 0) {
      PromptLossSpec prompt;
      PromptTaskTarget first;
      first.position = 2;
      first.true_class = static_cast<int>(rng() & 1);
      pick_pair(first.label_ids);
      first.weight = 1.0;
      prompt.tasks.push_back(first);
      if (draw % 4 == 0) {
        PromptTaskTarget second;
        second.position = 5;
        second.true_class = static_cast<int>(rng() & 1);
        pick_pair(second.label_ids);
        second.weight = (draw % 8 == 0) ? 0.0 : 0.5;
        prompt.tasks.push_back(second);
      }
      spec = prompt;
    } else {
      MlmLossSpec mlm;
      mlm.targets.push_back({2, static_cast<int>(rng() % vocab)});
      mlm.targets.push_back({5, static_cast<int>(rng() % vocab)});
      spec = mlm;
    }

    LogitGradients grads;
    loss_value(logits, spec, &grads);
    for (std::size_t row = 0; row < 2; ++row) {
      std::size_t position = logits.positions[row];
      const std::vector<double>* grad_row = nullptr;
      if (auto it = grads.find(position); it != grads.end())
        grad_row = &it->second;
      for (int v = 0; v < vocab; ++v) {
        MaskLogits up = logits, down = logits;
        up.logits[row][v] += h;
        down.logits[row][v] -= h;
        double fd = (loss_value(up, spec) - loss_value(down, spec)) / (2 * h);
        double analytic = grad_row ? (*grad_row)[v] : 0.0;
        if (!grad_close(analytic, fd))
          return fail("logit gradient off at draw " + std::to_string(draw) +
                      " position " + std::to_string(position));
        ++logit_checks;
      }
    }
  }

  std::size_t param_checks = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const int vocab = 12;
    ToyBackendConfig cfg;
    cfg.name = "grad-check";
    cfg.embed_dim = 5;
    cfg.hidden_dim = 6;
    cfg.max_len = 24;
    cfg.seed = 100 + draw;
    ToyBackend backend(cfg, vocab, 2);

    PromptedInput input;
    input.token_ids = {0};
    int len = 5 + static_cast<int>(rng() % 4);
    for (int i = 0; i < len; ++i)
      input.token_ids.push_back(4 + static_cast<int>(rng() % (vocab - 4)));
    input.token_ids.push_back(1);
    std::size_t p1 = 1 + rng() % (len - 1);
    std::size_t p2 = p1 + 1;
    input.token_ids[p1] = 2;
    input.token_ids[p2] = 2;
    input.mask_positions = {p1, p2};

    LossSpec spec;
    if (draw % 2 == 0) {
      PromptLossSpec prompt;
      PromptTaskTarget first;
      first.position = p1;
      first.true_class = static_cast<int>(rng() & 1);
      first.label_ids = {4, 5};
      first.weight = 1.0;
      prompt.tasks.push_back(first);
      PromptTaskTarget second;
      second.position = p2;
      second.true_class = static_cast<int>(rng() & 1);
      second.label_ids = {6, 7};
      second.weight = 0.5;
      prompt.tasks.push_back(second);
      spec = prompt;
    } else {
      MlmLossSpec mlm;
      mlm.targets.push_back({p1, 4 + static_cast<int>(rng() % (vocab - 4))});
      mlm.targets.push_back({p2, 4 + static_cast<int>(rng() % (vocab - 4))});
      spec = mlm;
    }

    auto [value, grads] = backend.compute_gradients(input, spec);
    (void)value;
    for (auto& [name, param] : backend.named_parameters()) {
      const std::vector<double>& grad = grads.at(name);
      for (std::size_t i = 0; i < param->size(); ++i) {
        double saved = (*param)[i];
        (*param)[i] = saved + h;
        double up = backend.compute_gradients(input, spec).first;
        (*param)[i] = saved - h;
        double down = backend.compute_gradients(input, spec).first;
        (*param)[i] = saved;
        double fd = (up - down) / (2 * h);
        if (!grad_close(grad[i], fd))
          return fail("parameter gradient off at draw " +
                      std::to_string(draw) + " tensor '" + name + "' [" +
                      std::to_string(i) + "]");
        ++param_checks;
      }
    }
  }

  return pass(std::to_string(logit_checks) + " logit and " +
              std::to_string(param_checks) +
              " parameter derivatives within 1e-4 of central differences");
}

// --- criterion 4 -----------------------------------------------------

Outcome check_threshold_selector() {
  support::ThresholdFixture fx = support::threshold_fixture();
  FluencyLabeling fixture =
      select_threshold_by_correlation(fx.profiles, fx.ad_labels);
  if (fixture.threshold != 11 || fixture.stumbling_count != 22 ||
      fixture.fluent_count != 86)
    return fail("fixture selected t=" + std::to_string(fixture.threshold) +
                " with " + std::to_string(fixture.stumbling_count) + "/" +
                std::to_string(fixture.fluent_count));

  std::mt19937_64 rng(0xC4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DisfluencyProfile> profiles;
    std::map<std::string, AdLabel> labels;
    int max_total = 0;
    for (int i = 0; i < 108; ++i) {
      DisfluencyProfile p;
      p.subject_id = "r" + std::to_string(i);
      p.total = static_cast<int>(rng() % 31);
      p.count_interjection = p.total;
      profiles.push_back(p);
      // Pin one subject per class so correlation stays defined.
      AdLabel label = i == 0   ? AdLabel::AD
                      : i == 1 ? AdLabel::NonAD
                      : (rng() & 1) ? AdLabel::AD
                                    : AdLabel::NonAD;
      labels[p.subject_id] = label;
      max_total = std::max(max_total, p.total);
    }

    int oracle_t = 0;
    long double oracle_phi = -2.0L;
    for (int t = 0; t <= max_total + 1; ++t) {
      long double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
      for (const DisfluencyProfile& p : profiles) {
        bool stumbling = p.total >= t;
        bool ad = labels.at(p.subject_id) == AdLabel::AD;
        if (stumbling && ad) ++n11;
        if (stumbling && !ad) ++n10;
        if (!stumbling && ad) ++n01;
        if (!stumbling && !ad) ++n00;
      }
      long double phi = 0.0L;
      long double r1 = n11 + n10, r0 = n01 + n00;
      long double c1 = n11 + n01, c0 = n10 + n00;
      if (r1 > 0 && r0 > 0 && c1 > 0 && c0 > 0)
        phi = (n11 * n00 - n10 * n01) / std::sqrt(r1 * r0 * c1 * c0);
      if (phi > oracle_phi) {
        oracle_phi = phi;
        oracle_t = t;
      }
    }

    FluencyLabeling got = select_threshold_by_correlation(profiles, labels);
    if (got.threshold != oracle_t)
      return fail("trial " + std::to_string(trial) + ": selector chose t=" +
                  std::to_string(got.threshold) + ", oracle t=" +
                  std::to_string(oracle_t));
  }
  return pass("fixture t=11 -> 22 stumbling / 86 fluent; 50 random corpora "
              "match the exhaustive phi oracle");
}

// --- criterion 5 -----------------------------------------------------

Outcome check_assembly() {
  std::vector<std::string> reserved = {"the", "diagnosis", "is", ".",
                                       "dementia", "healthy"};
  ToyTokenizer tok = build_toy_tokenizer(
      reserved, {"alpha beta gamma delta"});
  auto id = [&](const std::string& word) {
    return tok.encode_word(word).front();
  };
  const std::vector<int> prompt_ids = {id("the"), id("diagnosis"), id("is"),
                                       tok.mask_id(), id(".")};

  PromptTemplate back =
      parse_template("the diagnosis is <MASK> .", PromptPosition::Back);
  PromptedInput got = assemble(back, "alpha beta gamma", tok, 512);
  std::vector<int> want = {tok.begin_id(), id("alpha"), id("beta"),
                           id("gamma")};
  want.insert(want.end(), prompt_ids.begin(), prompt_ids.end());
  want.push_back(tok.end_id());
  if (got.token_ids != want) return fail("back-position golden differs");
  if (got.transcript_length != 3 ||
      got.task_masks.at(Task::Diagnosis) != 7 ||
      got.mask_positions != std::vector<std::size_t>{7})
    return fail("back-position slot bookkeeping differs");

  PromptTemplate front =
      parse_template("the diagnosis is <MASK> .", PromptPosition::Front);
  PromptedInput got_front = assemble(front, "alpha beta gamma", tok, 512);
  std::vector<int> want_front = {tok.begin_id()};
  want_front.insert(want_front.end(), prompt_ids.begin(), prompt_ids.end());
  want_front.push_back(id("alpha"));
  want_front.push_back(id("beta"));
  want_front.push_back(id("gamma"));
  want_front.push_back(tok.end_id());
  if (got_front.token_ids != want_front)
    return fail("front-position golden differs");
  if (got_front.task_masks.at(Task::Diagnosis) != 4)
    return fail("front-position slot bookkeeping differs");

  // 600 transcript tokens + 5 prompt tokens + 2 markers must clamp to
  // exactly 512 with the whole prompt at the back.
  std::string long_text;
  const char* cycle[] = {"alpha", "beta", "gamma", "delta"};
  for (int i = 0; i < 600; ++i) {
    if (!long_text.empty()) long_text += ' ';
    long_text += cycle[i % 4];
  }
  PromptedInput clamped = assemble(back, long_text, tok, 512);
  if (clamped.token_ids.size() != 512)
    return fail("over-length input assembled to " +
                std::to_string(clamped.token_ids.size()) + " tokens");
  if (clamped.transcript_length != 512 - 2 - prompt_ids.size())
    return fail("transcript truncated to unexpected length");
  std::vector<int> tail(clamped.token_ids.end() - 6, clamped.token_ids.end());
  std::vector<int> want_tail = prompt_ids;
  want_tail.push_back(tok.end_id());
  if (tail != want_tail) return fail("prompt tail damaged by truncation");
  if (clamped.token_ids.front() != tok.begin_id() ||
      clamped.token_ids[1] != id("alpha") ||
      clamped.token_ids[2] != id("beta"))
    return fail("transcript head damaged by truncation");
  if (clamped.task_masks.at(Task::Diagnosis) != 512 - 3)
    return fail("mask slot landed off target after truncation");
  return pass("prompt assembly goldens exact; 605-token sequence clamps to "
              "512 with the prompt intact");
}

// --- criterion 6 -----------------------------------------------------

Outcome check_planted_learning() {
  auto start = std::chrono::steady_clock::now();
  auto train = support::planted_cohort(50, 50, Split::Train, 7);
  auto test = support::planted_cohort(20, 20, Split::Test, 8);
  std::vector<std::string> texts = support::cohort_texts(train);
  for (const std::string& t : support::cohort_texts(test))
    texts.push_back(t);
  std::vector<std::string> reserved = {"the",      "diagnosis", "is",
                                       ".",        "dementia",  "healthy",
                                       "stumbling", "fluent"};
  ToyTokenizer tok = build_toy_tokenizer(reserved, texts);
  DecisionMap gold = gold_labels(test);

  PromptTrainInputs inputs;
  inputs.tmpl = parse_template("the diagnosis is <MASK> .",
                               PromptPosition::Back);
  inputs.verbalizer = validate_verbalizer(Verbalizer::defaults(), tok);
  inputs.tokenizer = &tok;

  TrainConfig tc;
  tc.plm = "toy";
  tc.paradigm = Paradigm::Prompt;
  tc.prompt_position = PromptPosition::Back;
  tc.epochs = 10;
  tc.capture_last_k = 3;
  tc.lr = 0.02;
  tc.batch_size = 4;
  tc.seed = 5;

  ToyBackendConfig bc;
  bc.name = "toy";
  bc.embed_dim = 16;
  bc.hidden_dim = 24;
  bc.max_len = 128;
  bc.optimizer.lr = tc.lr;
  bc.seed = 99;
  ToyBackend backend(bc, tok.vocab_size(), tok.mask_id());

  SystemRun run = run_prompt_training(backend, tc, train, test, inputs);
  double prompt_acc =
      accuracy(vote_run(run, TiePolicy::PoolSubDecisions).decisions, gold);
  if (prompt_acc < 0.95)
    return fail("prompt accuracy " + pct(prompt_acc) +
                " under the 95% bar after 10 epochs");

  TrainConfig mc;
  mc.plm = "toy";
  mc.paradigm = Paradigm::Mlm;
  mc.prompt_position = PromptPosition::None;
  mc.epochs = 12;
  mc.capture_last_k = 3;
  mc.lr = 0.02;
  mc.mlm_rate = 0.3;
  mc.batch_size = 4;
  mc.seed = 5;

  ToyBackendConfig mbc = bc;
  mbc.optimizer.lr = mc.lr;
  mbc.seed = 77;
  ToyBackend mlm_backend(mbc, tok.vocab_size(), tok.mask_id());
  MlmTrainResult trained = run_mlm_training(mlm_backend, mc, train, tok);
  SystemRun mlm_run =
      run_baseline_classification(trained, mc, train, test, tok);
  double mlm_acc =
      accuracy(vote_run(mlm_run, TiePolicy::PoolSubDecisions).decisions,
               gold);
  if (mlm_acc < 0.90)
    return fail("mlm baseline accuracy " + pct(mlm_acc) +
                " under the 90% bar");

  double elapsed = seconds_since(start);
  if (elapsed >= 60.0)
    return fail("took " + std::to_string(elapsed) + "s (budget 60s)");
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "planted 100/40 corpus: prompt %s, mlm baseline %s in %.1fs",
                pct(prompt_acc).c_str(), pct(mlm_acc).c_str(), elapsed);
  return pass(buf);
}

// --- criterion 7 -----------------------------------------------------

Outcome check_zero_weight_equivalence() {
  auto train = support::planted_cohort(12, 12, Split::Train, 21);
  auto test = support::planted_cohort(5, 5, Split::Test, 22);
  std::vector<std::string> texts = support::cohort_texts(train);
  for (const std::string& t : support::cohort_texts(test))
    texts.push_back(t);
  std::vector<std::string> reserved = {"speech",   "is",      ".",
                                       "the",      "diagnosis", "dementia",
                                       "healthy",  "stumbling", "fluent"};
  ToyTokenizer tok = build_toy_tokenizer(reserved, texts);

  PromptTemplate full = parse_template(
      "speech is <MASK> . the diagnosis is <MASK> .", PromptPosition::Back);
  Verbalizer verbalizer = validate_verbalizer(Verbalizer::defaults(), tok);

  std::map<std::string, FluencyLabel> fluency;
  for (const auto& rec : train)
    fluency[rec.subject_id] = rec.ad_label == AdLabel::AD
                                  ? FluencyLabel::Stumbling
                                  : FluencyLabel::Fluent;
  for (const auto& rec : test)
    fluency[rec.subject_id] = FluencyLabel::Fluent;

  for (std::uint64_t seed : {std::uint64_t{3}, std::uint64_t{11}}) {
    TrainConfig multi;
    multi.plm = "toy";
    multi.paradigm = Paradigm::Prompt;
    multi.prompt_position = PromptPosition::Back;
    multi.multi_task = true;
    multi.task_weights = {1.0, 0.0};
    multi.epochs = 5;
    multi.capture_last_k = 3;
    multi.lr = 0.02;
    multi.batch_size = 3;
    multi.seed = seed;

    TrainConfig single = multi;
    single.multi_task = false;
    single.task_weights = {0.5, 0.5};

    PromptTrainInputs multi_inputs;
    multi_inputs.tmpl = full;
    multi_inputs.verbalizer = verbalizer;
    multi_inputs.tokenizer = &tok;
    multi_inputs.fluency = fluency;

    PromptTrainInputs single_inputs = multi_inputs;
    single_inputs.tmpl = restrict_template(full, Task::Diagnosis);
    single_inputs.fluency.clear();

    ToyBackendConfig bc;
    bc.name = "toy";
    bc.embed_dim = 12;
    bc.hidden_dim = 14;
    bc.max_len = 96;
    bc.optimizer.lr = multi.lr;
    bc.seed = mix_seed(31, seed);

    ToyBackend backend_a(bc, tok.vocab_size(), tok.mask_id());
    ToyBackend backend_b(bc, tok.vocab_size(), tok.mask_id());
    SystemRun run_multi =
        run_prompt_training(backend_a, multi, train, test, multi_inputs);
    SystemRun run_single =
        run_prompt_training(backend_b, single, train, test, single_inputs);

    if (run_multi.epochs.size() != run_single.epochs.size())
      return fail("seed " + std::to_string(seed) +
                  ": captured epoch counts differ");
    for (std::size_t i = 0; i < run_multi.epochs.size(); ++i) {
      if (run_multi.epochs[i].epoch != run_single.epochs[i].epoch ||
          run_multi.epochs[i].decisions != run_single.epochs[i].decisions)
        return fail("seed " + std::to_string(seed) + ": epoch " +
                    std::to_string(run_multi.epochs[i].epoch) +
                    " decisions diverge");
    }
  }
  return pass("zero-weight auxiliary task reproduces single-task decisions "
              "exactly (2 seeds, every captured epoch)");
}

// --- criterion 8 -----------------------------------------------------

Outcome check_chat_goldens() {
  struct Golden {
    const char* doc;
    const char* merged;
    int interjections;
    int pauses;
    int actions;
  };
  const std::vector<Golden> goldens = {
      {"@Begin\n*PAR:\tthe boy (.) is on the stool .\n@End\n",
       "the boy is on the stool", 0, 1, 0},
      {"@Begin\n*PAR:\t&-uh the water (..) overflowed .\n@End\n",
       "uh the water overflowed", 1, 1, 0},
      {"@Begin\n*INV:\twhat else ?\n*PAR:\t<the mother> [//] the mother "
       "&=laughs dries dishes .\n@End\n",
       "the mother the mother dries dishes", 0, 0, 1},
      {"@Begin\n*PAR:\tum (be)cause the window was open .\n@End\n",
       "um because the window was open", 1, 0, 0},
      {"@Begin\n*PAR:\tthe SINK [x 2] overflowed !\n%mor:\tn|sink .\n@End\n",
       "the sink overflowed", 0, 0, 0},
      {"@Begin\n*PAR:\tI dunno [: do not know] [* 1] what happened .\n@End\n",
       "i dunno what happened", 0, 0, 0},
      {"@Begin\n*PAR:\tthat's all I see \x15" "100_2000\x15 .\n@End\n",
       "that's all i see", 0, 0, 0},
      {"@Begin\n*PAR:\t&=coughs it (...) tipped\n\tover .\n@End\n",
       "it tipped over", 0, 1, 1},
      {"@Begin\n*PAR:\thm yes [+ exc] er no .\n*INV:\tokay .\n"
       "*PAR:\t+\" she said +... wait &uh no .\n@End\n",
       "hm yes er no she said wait uh no", 3, 0, 0},
      {"@Begin\n*PAR:\t<going to> [//] gonna fall &+fa .\n@End\n",
       "going to gonna fall fa", 0, 0, 0},
      {"@Begin\n*PAR:\tthe boy [% comment [: nested] here] fell .\n@End\n",
       "the boy fell", 0, 0, 0},
      {"@UTF8\n@Begin\n@Participants:\tPAR Participant\n"
       "*PAR:\tMhm , the cookie jar .\n@End\n",
       "mhm the cookie jar", 1, 0, 0},
  };

  for (std::size_t i = 0; i < goldens.size(); ++i) {
    SubjectRecord rec = make_manual_record("g" + std::to_string(i),
                                           parse_chat(goldens[i].doc));
    if (rec.merged_text != goldens[i].merged)
      return fail("snippet " + std::to_string(i) + " merged to '" +
                  rec.merged_text + "'");
    DisfluencyProfile p = profile(rec);
    if (p.count_interjection != goldens[i].interjections ||
        p.count_pause != goldens[i].pauses ||
        p.count_action != goldens[i].actions ||
        p.total != goldens[i].interjections + goldens[i].pauses +
                       goldens[i].actions)
      return fail("snippet " + std::to_string(i) + " counted " +
                  std::to_string(p.count_interjection) + "/" +
                  std::to_string(p.count_pause) + "/" +
                  std::to_string(p.count_action) + " events");
  }
  return pass(std::to_string(goldens.size()) +
              " transcript snippets: merged text and event counts exact");
}

// --- criterion 9 -----------------------------------------------------

RunConfig fixture_pipeline_config(const std::filesystem::path& out_dir) {
  RunConfig cfg;
  cfg.data_root = support::fixture_dir() / "corpus";
  cfg.out_dir = out_dir;
  cfg.fold_count = 4;
  cfg.seeds = {1, 2};
  cfg.train.epochs = 4;
  cfg.train.capture_last_k = 2;
  cfg.train.lr = 0.02;
  cfg.train.batch_size = 4;
  cfg.toy.embed_dim = 10;
  cfg.toy.hidden_dim = 12;
  cfg.toy.max_len = 96;
  return cfg;
}

void drive_pipeline(const std::filesystem::path& out_dir) {
  std::ostringstream sink;
  RunConfig back = fixture_pipeline_config(out_dir);
  cmd_ingest(back, sink);
  cmd_disfluency(back, sink);
  cmd_train(back, sink);
  RunConfig front = back;
  front.train.prompt_position = PromptPosition::Front;
  cmd_train(front, sink);
  cmd_combine(back, sink);
  cmd_report(back, sink);
}

Outcome check_pipeline_determinism() {
  support::TempDir tmp("accept9");
  std::filesystem::path out_a = tmp.path() / "a";
  std::filesystem::path out_b = tmp.path() / "b";
  drive_pipeline(out_a);
  drive_pipeline(out_b);

  auto read_bytes = [](const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  };

  std::size_t files = 0;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(out_a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    std::filesystem::path rel =
        std::filesystem::relative(entry.path(), out_a);
    std::filesystem::path twin = out_b / rel;
    if (!std::filesystem::exists(twin))
      return fail("repeat run missing artifact " + rel.string());
    if (read_bytes(entry.path()) != read_bytes(twin))
      return fail("artifact differs between runs: " + rel.string());
  }
  std::size_t files_b = 0;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(out_b))
    if (entry.is_regular_file()) ++files_b;
  if (files != files_b || files == 0)
    return fail("artifact counts differ: " + std::to_string(files) + " vs " +
                std::to_string(files_b));
  return pass("pipeline repeated from scratch: " + std::to_string(files) +
              " artifacts byte-identical (decisions, cv, combined, stats, "
              "reports)");
}

// --- criterion 10 ----------------------------------------------------

Outcome check_published_accuracy() {
  const char* url = std::getenv("ADPROMPT_BACKEND_URL");
  const char* root = std::getenv("ADPROMPT_DATA_ROOT");
  if (!url || !root)
    return skip("needs ADPROMPT_BACKEND_URL and ADPROMPT_DATA_ROOT pointing "
                "at a model server and real transcripts");

  support::TempDir tmp("accept10");
  RunConfig cfg;
  cfg.data_root = root;
  cfg.out_dir = tmp.path() / "out";
  cfg.backend_url = url;
  const char* plm = std::getenv("ADPROMPT_BACKEND_PLM");
  cfg.train.plm = plm ? plm : "bert";
  cfg.train.prompt_position = PromptPosition::Back;
  cfg.seeds = {0, 1, 2};
  cfg.cv = false;

  std::ostringstream sink;
  cmd_ingest(cfg, sink);
  cmd_train(cfg, sink);

  PipelinePaths paths{cfg.out_dir};
  detail::LoadedData data = detail::load_data(cfg, paths);
  DecisionMap gold = gold_labels(data.test);
  std::vector<double> accuracies;
  for (const auto& file : detail::sorted_files(paths.runs_dir(), ".tsv")) {
    SystemRun run = load_run_file(file);
    accuracies.push_back(accuracy(
        vote_run(run, TiePolicy::PoolSubDecisions).decisions, gold));
  }
  AccuracyStats stats = compute_stats(accuracies);
  if (std::fabs(stats.mean - 0.8125) > 0.03)
    return fail("back-position mean accuracy " + pct(stats.mean) +
                " outside 81.25% +/- 3 points");
  return pass("back-position mean accuracy " + pct(stats.mean) +
              " within 81.25% +/- 3 points");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* summary;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "majority voting matches an exhaustive oracle", check_voting_oracle},
      {2, "cross-model combination count and statistics",
       check_cartesian_count_and_stats},
      {3, "analytic gradients match central finite differences",
       check_gradients},
      {4, "threshold selection matches an exhaustive phi oracle",
       check_threshold_selector},
      {5, "prompt assembly goldens and length clamping", check_assembly},
      {6, "planted corpus train/test accuracy bars", check_planted_learning},
      {7, "zero-weight multi-task equals single-task decisions",
       check_zero_weight_equivalence},
      {8, "transcript normalization goldens", check_chat_goldens},
      {9, "repeated pipeline runs are byte-identical",
       check_pipeline_determinism},
      {10, "published back-position accuracy on a live backend",
       check_published_accuracy},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = fail(std::string("unexpected error: ") + e.what());
    }
    const char* tag = outcome.kind == Outcome::Kind::Pass   ? "PASS"
                      : outcome.kind == Outcome::Kind::Skip ? "SKIP"
                                                            : "FAIL";
    if (outcome.kind == Outcome::Kind::Fail) ++failed;
    std::cout << tag << " criterion " << c.id << ": " << c.summary;
    if (!outcome.detail.empty()) std::cout << " (" << outcome.detail << ")";
    std::cout << "\n";
  }
  if (failed) {
    std::cout << failed << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all required criteria passed\n";
  return 0;
}
