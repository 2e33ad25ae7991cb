// SPDX-License-Identifier: Apache-2.0
#include "mosae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string_view>

#include "mosae/error.hpp"

namespace mosae::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  s = unquote(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_label(std::string_view s, std::uint8_t& out) {
  double v = 0.0;
  if (!parse_double(s, v)) return false;
  if (v == 0.0 || v == 1.0) {
    out = static_cast<std::uint8_t>(v);
    return true;
  }
  return false;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void check_labels(const Dataset& d) {
  const std::size_t a = d.anomaly_count();
  if (a == 0 || a == d.size()) {
    throw ContractError(d.name + ": anomaly rate must lie strictly between 0 and 1");
  }
}

}  // namespace

std::size_t Dataset::anomaly_count() const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

Dataset load_labeled_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
  auto in = open_or_throw(path);
  const std::string src = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src, 1, "missing header row");

  const auto header = split_fields(line);
  std::size_t label_idx = header.size();
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (unquote(header[i]) == *name) label_idx = i;
    }
    if (label_idx == header.size()) throw ParseError(src, 1, "label column '" + *name + "' not found");
  } else {
    label_idx = std::get<std::size_t>(label_column);
    if (label_idx >= header.size()) throw ParseError(src, 1, "label column index out of range");
  }
  const std::size_t ncols = header.size();
  if (ncols < 2) throw ParseError(src, 1, "zero feature columns");

  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != ncols) {
      throw ParseError(src, lineno, "expected " + std::to_string(ncols) + " fields, got " +
                                        std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < ncols; ++i) {
      if (i == label_idx) {
        std::uint8_t lab = 0;
        if (!parse_label(fields[i], lab)) {
          throw ParseError(src, lineno, "unknown label value '" + std::string(trim(fields[i])) + "'");
        }
        labels.push_back(lab);
      } else {
        double v = 0.0;
        if (!parse_double(fields[i], v)) {
          throw ParseError(src, lineno, "non-numeric cell '" + std::string(trim(fields[i])) + "'");
        }
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw ParseError(src, lineno, "no data rows");
  Dataset d{Matrix(labels.size(), ncols - 1, std::move(values)), std::move(labels),
            path.stem().string()};
  check_labels(d);
  return d;
}

void write_labeled_csv(const Dataset& d, const std::filesystem::path& path,
                       const std::string& label_name) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t c = 0; c < d.dims(); ++c) out << 'f' << c << ',';
  out << label_name << '\n';
  char buf[64];
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t c = 0; c < d.dims(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, d.features(r, c));
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << static_cast<int>(d.labels[r]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset load_smd(const std::filesystem::path& dir, const std::string& name) {
  const auto value_path = dir / (name + ".txt");
  const auto label_path = dir / (name + "_label.txt");
  auto vin = open_or_throw(value_path);
  auto lin = open_or_throw(label_path);

  std::vector<double> values;
  std::size_t dims = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(vin, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (dims == 0) dims = fields.size();
    if (fields.size() != dims) {
      throw ParseError(value_path.string(), lineno, "expected " + std::to_string(dims) + " fields");
    }
    for (auto f : fields) {
      double v = 0.0;
      if (!parse_double(f, v)) throw ParseError(value_path.string(), lineno, "non-numeric cell");
      values.push_back(v);
    }
    ++rows;
  }
  std::vector<std::uint8_t> labels;
  lineno = 0;
  while (std::getline(lin, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::uint8_t lab = 0;
    if (!parse_label(line, lab)) throw ParseError(label_path.string(), lineno, "unknown label value");
    labels.push_back(lab);
  }
  if (rows == 0) throw ParseError(value_path.string(), 0, "no data rows");
  if (labels.size() != rows) {
    throw ParseError(label_path.string(), 0, "label count " + std::to_string(labels.size()) +
                                                 " != row count " + std::to_string(rows));
  }
  Dataset d{Matrix(rows, dims, std::move(values)), std::move(labels), name};
  check_labels(d);
  return d;
}

Dataset generate_synthetic(std::size_t dims, std::size_t n, double anomaly_rate,
                           std::uint64_t seed) {
  if (dims < 2) throw ContractError("generate_synthetic: dims must be >= 2");
  if (n < 10) throw ContractError("generate_synthetic: n must be >= 10");
  if (!(anomaly_rate > 0.0 && anomaly_rate < 0.5)) {
    throw ContractError("generate_synthetic: anomaly_rate must lie in (0, 0.5)");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> direction(dims);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : direction) {
      v = gauss(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : direction) v /= norm;

  const auto n_anom = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(anomaly_rate * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t i = 0; i < n_anom; ++i) labels[order[i]] = 1;

  constexpr double kShift = 4.0;
  constexpr double kAnomalyScale = 2.0;
  Matrix x(n, dims);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < dims; ++c) {
      const double z = gauss(rng);
      row[c] = labels[r] ? kShift * direction[c] + kAnomalyScale * z : z;
    }
  }
  return Dataset{std::move(x), std::move(labels), "synthetic"};
}

StandardizationParams fit_standardization(const Dataset& d) {
  const std::size_t n = d.size();
  const std::size_t dims = d.dims();
  StandardizationParams p{std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
  for (std::size_t c = 0; c < dims; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += d.features(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double e = d.features(r, c) - mean;
      var += e * e;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    p.mean[c] = mean;
    p.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return p;
}

Dataset apply_standardization(const Dataset& d, const StandardizationParams& p) {
  if (p.mean.size() != d.dims() || p.scale.size() != d.dims()) {
    throw ContractError("standardize: parameter dimension does not match dataset");
  }
  Dataset out = d;
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto row = out.features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - p.mean[c]) / p.scale[c];
  }
  return out;
}

std::pair<Dataset, StandardizationParams> standardize(const Dataset& d) {
  auto p = fit_standardization(d);
  return {apply_standardization(d, p), std::move(p)};
}

Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw ContractError("select_rows: empty selection");
  std::vector<double> values;
  values.reserve(rows.size() * d.dims());
  std::vector<std::uint8_t> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= d.size()) throw ContractError("select_rows: row index out of range");
    const auto src = d.features.row(r);
    values.insert(values.end(), src.begin(), src.end());
    labels.push_back(d.labels[r]);
  }
  return Dataset{Matrix(rows.size(), d.dims(), std::move(values)), std::move(labels), d.name};
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ContractError("split: train_frac must lie in (0,1)");
  const std::size_t n = d.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw ContractError("split: one side would be empty");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {select_rows(d, a), select_rows(d, b)};
}

Dataset filter_label(const Dataset& d, std::uint8_t label) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (d.labels[r] == label) rows.push_back(r);
  }
  if (rows.empty()) throw ContractError("filter_label: no rows carry the requested label");
  return select_rows(d, rows);
}

}  // namespace mosae::data
