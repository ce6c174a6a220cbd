// Command-line front end. All real work lives in the header-only
// library; this file only maps flags and subcommands onto a RunConfig
// and the cmd_* pipeline functions.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adprompt/config.hpp"
#include "adprompt/pipeline.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : adprompt::detail::split(text, ',')) {
    std::string entry(adprompt::detail::trim(part));
    if (entry.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(entry, &used));
      if (used != entry.size()) throw std::invalid_argument(entry);
    } catch (const std::exception&) {
      throw adprompt::Error("bad --seed-list entry '" + entry + "'");
    }
  }
  if (seeds.empty()) throw adprompt::Error("--seed-list is empty");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prompt-based dementia screening experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_root;
  std::string out_dir;
  std::string seed_list;
  int workers = 0;
  bool toy_backend = false;

  app.add_option("--config", config_path, "JSON experiment config file");
  app.add_option("--data-root", data_root,
                 "corpus root (overrides ADPROMPT_DATA_ROOT and the config)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed-list", seed_list,
                 "comma-separated training seeds, e.g. 1,2,3");
  app.add_option("--workers", workers, "parallel seed workers")
      ->check(CLI::PositiveNumber);
  app.add_flag("--toy-backend", toy_backend,
               "force the built-in toy backend, ignoring any backend_url");

  CLI::App* ingest = app.add_subcommand(
      "ingest", "read the subject listing and write the fold manifest");
  CLI::App* disfluency = app.add_subcommand(
      "disfluency", "profile disfluencies and assign fluency labels");
  CLI::App* train = app.add_subcommand(
      "train", "fine-tune one system per seed and store decisions");
  CLI::App* combine = app.add_subcommand(
      "combine", "vote stored runs under the configured preset");
  CLI::App* report = app.add_subcommand(
      "report", "render accuracy tables from stored decisions");

  CLI11_PARSE(app, argc, argv);

  try {
    adprompt::RunConfig cfg = config_path.empty()
                                  ? adprompt::RunConfig{}
                                  : adprompt::load_run_config(config_path);
    // Precedence for the data root: flag, then environment, then config.
    if (const char* env = std::getenv("ADPROMPT_DATA_ROOT"); env && *env)
      cfg.data_root = env;
    if (!data_root.empty()) cfg.data_root = data_root;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!seed_list.empty()) cfg.seeds = parse_seed_list(seed_list);
    if (workers > 0) cfg.workers = workers;
    if (toy_backend) cfg.backend_url.clear();
    cfg.validate();

    if (ingest->parsed()) adprompt::cmd_ingest(cfg, std::cout);
    if (disfluency->parsed()) adprompt::cmd_disfluency(cfg, std::cout);
    if (train->parsed()) adprompt::cmd_train(cfg, std::cout);
    if (combine->parsed()) adprompt::cmd_combine(cfg, std::cout);
    if (report->parsed()) adprompt::cmd_report(cfg, std::cout);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
