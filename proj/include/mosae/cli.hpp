// SPDX-License-Identifier: Apache-2.0
//
// Command layer behind the `mosae` tool. Every command reads a RunConfig,
// writes its reports into the output directory and removes whatever it wrote
// if it fails part-way.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mosae/data.hpp"
#include "mosae/moga.hpp"
#include "mosae/sae.hpp"

namespace mosae::cli {

enum class DataSource { synthetic, csv, smd };

struct DataConfig {
  DataSource source = DataSource::synthetic;
  std::filesystem::path path;          // csv file or smd directory
  std::string label_column = "Class";  // name, or "#<index>" for a column index
  std::string smd_name;
  std::size_t dims = 20;
  std::size_t samples = 50000;
  double anomaly_rate = 0.02;
  std::uint64_t seed = 7;
  std::uint64_t split_seed = 1;
  bool standardize = true;
};

struct RunConfig {
  DataConfig data;
  sae::SaeConfig sae;  // input_dim is filled in from the data
  moga::GaConfig ga;
  moga::Mode mode = moga::Mode::joint;
  std::filesystem::path out = "out";
  std::optional<std::filesystem::path> model;    // default: <out>/model.mosm
  std::optional<std::filesystem::path> payload;  // default: <out>/update.mosu
  std::uint64_t seed = 1;                        // clip, rret and verify-bound draws
  std::uint32_t density = 100;
  std::vector<std::uint32_t> sweep{2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::size_t timing_reps = 3;
  double final_quantile = 0.95;
  double clip_step = 0.05;
  std::size_t rret_policies = 200;
  std::size_t verify_instances = 1000;
  std::vector<std::uint32_t> verify_densities{2, 16, 100, 1024};

  std::filesystem::path model_path() const;
  std::filesystem::path payload_path() const;
  /// Throws ContractError on out-of-range values.
  void validate() const;
};

RunConfig default_config();
/// Missing keys keep their defaults; unknown keys are an error.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& toml_text, const std::string& source = "<string>");
/// Replaces every run seed (training, search, sampling) but not the data seeds.
void override_seed(RunConfig& cfg, std::uint64_t seed);

/// train / calibration / test partitions of the configured dataset, after
/// standardization fitted on the training normals.
struct Prepared {
  data::Dataset train;   // normals only
  data::Dataset calib;   // normals only
  data::Dataset test;
};
Prepared prepare_data(const RunConfig& cfg);

// Commands. Each returns the files it wrote.
using Written = std::vector<std::filesystem::path>;
Written cmd_train(const RunConfig& cfg);
Written cmd_cliptest(const RunConfig& cfg);
Written cmd_optimize(const RunConfig& cfg);
Written cmd_rret(const RunConfig& cfg);
Written cmd_evaluate(const RunConfig& cfg);
Written cmd_pack(const RunConfig& cfg);
Written cmd_unpack(const RunConfig& cfg);
Written cmd_sweep_bins(const RunConfig& cfg);
Written cmd_verify_bound(const RunConfig& cfg);
Written cmd_correlate(const RunConfig& cfg, const std::filesystem::path& csv, const std::string& x,
                      const std::string& y);

/// Full command line, returns the process exit code.
int run(int argc, char** argv);

}  // namespace mosae::cli
