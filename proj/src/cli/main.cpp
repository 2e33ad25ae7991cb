// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <iostream>

#include "mosae/cli.hpp"

namespace mosae::cli {

int run(int argc, char** argv) {
  CLI::App app{"Multi-objective stacked autoencoder toolkit", "mosae"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir, mode, model, payload, csv, x_col, y_col;
  std::uint64_t seed = 0;
  std::uint32_t density = 0;
  app.add_option("--config", config_path, "TOML run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for training, search and sampling");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--mode", mode, "Search mode: clip, exit or joint");
  auto* density_opt = app.add_option("--density", density, "Bin density for pack");
  app.add_option("--model", model, "Checkpoint path (default <out>/model.mosm)");
  app.add_option("--payload", payload, "Payload path (default <out>/update.mosu)");

  const std::vector<std::pair<const char*, const char*>> commands{
      {"train", "Train the autoencoder on the normal training rows"},
      {"cliptest", "Progressive clipping test with correlation report"},
      {"optimize", "Genetic search over clip masks and exit quantiles"},
      {"rret", "Evaluate random exit-threshold policies"},
      {"evaluate", "Score a checkpoint with and without early exits"},
      {"pack", "Bin and serialize the checkpoint parameters"},
      {"unpack", "Rebuild a checkpoint from a payload"},
      {"sweep-bins", "F1 and runtime across bin densities"},
      {"verify-bound", "Check the binning relative-error bound on random systems"},
      {"correlate", "Pearson and Spearman of two CSV columns"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (std::string(name) == "correlate") {
      sub->add_option("--csv", csv, "Input CSV")->required()->check(CLI::ExistingFile);
      sub->add_option("--x", x_col, "X column")->required();
      sub->add_option("--y", y_col, "Y column")->required();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (*seed_opt) override_seed(cfg, seed);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!mode.empty()) cfg.mode = moga::parse_mode(mode);
    if (*density_opt) cfg.density = density;
    if (!model.empty()) cfg.model = model;
    if (!payload.empty()) cfg.payload = payload;
    cfg.validate();

    const std::string cmd = app.get_subcommands().front()->get_name();
    Written files;
    if (cmd == "train") files = cmd_train(cfg);
    else if (cmd == "cliptest") files = cmd_cliptest(cfg);
    else if (cmd == "optimize") files = cmd_optimize(cfg);
    else if (cmd == "rret") files = cmd_rret(cfg);
    else if (cmd == "evaluate") files = cmd_evaluate(cfg);
    else if (cmd == "pack") files = cmd_pack(cfg);
    else if (cmd == "unpack") files = cmd_unpack(cfg);
    else if (cmd == "sweep-bins") files = cmd_sweep_bins(cfg);
    else if (cmd == "verify-bound") files = cmd_verify_bound(cfg);
    else files = cmd_correlate(cfg, csv, x_col, y_col);
    for (const auto& f : files) std::cout << f.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mosae: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mosae::cli
