// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

namespace mosae::cli {

/// Tracks the files a command writes; unless commit() is reached they are
/// deleted again when the set goes out of scope.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  ~OutputSet();
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  /// Registers `p` for cleanup and returns it; parent directories are created.
  std::filesystem::path claim(const std::filesystem::path& p);
  void text(const std::string& name, const std::string& content);
  void json(const std::string& name, const nlohmann::ordered_json& j);
  void bytes(const std::filesystem::path& p, std::span<const std::uint8_t> data);
  std::vector<std::filesystem::path> commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool committed_ = false;
};

/// Shortest decimal that reads back to the same double.
std::string num(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Numeric columns of a headered CSV, looked up by name.
struct NumericCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
};
NumericCsv read_numeric_csv(const std::filesystem::path& p);

/// Static scatter plot: axes, min/max tick labels, one circle per point.
std::string svg_scatter(const std::string& title, const std::string& x_label, const std::string& y_label,
                        std::span<const double> x, std::span<const double> y);

/// Pearson and Spearman of two series; null where undefined (constant input).
nlohmann::ordered_json correlation_json(std::span<const double> x, std::span<const double> y);

}  // namespace mosae::cli
