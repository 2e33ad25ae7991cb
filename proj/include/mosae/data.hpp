// SPDX-License-Identifier: Apache-2.0
//
// Labeled tabular anomaly datasets: CSV and SMD-directory loaders, a seeded
// synthetic generator, standardization and shuffled splits.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mosae/linalg.hpp"

namespace mosae::data {

struct Dataset {
  Matrix features;               // samples x dims
  std::vector<std::uint8_t> labels;  // 0 = normal, 1 = anomaly
  std::string name;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const noexcept { return features.cols(); }
  std::size_t anomaly_count() const noexcept;
};

struct StandardizationParams {
  std::vector<double> mean;
  std::vector<double> scale;  // > 0; constant features get 1
};

using LabelColumn = std::variant<std::string, std::size_t>;

/// Header row required. Label cells must be 0 or 1 (optionally double-quoted).
Dataset load_labeled_csv(const std::filesystem::path& path,
                         const LabelColumn& label_column = std::string("Class"));

/// Writes header `f0,...,f{d-1},<label_name>` with shortest round-trip decimals.
void write_labeled_csv(const Dataset& d, const std::filesystem::path& path,
                       const std::string& label_name = "Class");

/// `<dir>/<name>.txt` holds comma-separated feature rows, `<dir>/<name>_label.txt` one 0/1 per line.
Dataset load_smd(const std::filesystem::path& dir, const std::string& name);

/// Normals ~ N(0, I); anomalies ~ N(4 u, 4 I) for one seeded unit direction u.
/// The anomaly count is round(anomaly_rate * n), at least 1.
Dataset generate_synthetic(std::size_t dims, std::size_t n, double anomaly_rate,
                           std::uint64_t seed);

StandardizationParams fit_standardization(const Dataset& d);
Dataset apply_standardization(const Dataset& d, const StandardizationParams& p);
std::pair<Dataset, StandardizationParams> standardize(const Dataset& d);

/// Seeded shuffle, then the first round(train_frac * n) rows go to the first output.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_frac, std::uint64_t seed);

/// Rows with the given label, in original order.
Dataset filter_label(const Dataset& d, std::uint8_t label);

/// Rows at the given indices, in index order.
Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& rows);

}  // namespace mosae::data
