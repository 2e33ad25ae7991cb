// SPDX-License-Identifier: Apache-2.0
#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mosae/error.hpp"
#include "mosae/objectives.hpp"

namespace mosae::cli {

namespace fs = std::filesystem;

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& f : files_) fs::remove(f, ec);
}

fs::path OutputSet::claim(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  if (std::find(files_.begin(), files_.end(), p) == files_.end()) files_.push_back(p);
  return p;
}

void OutputSet::text(const std::string& name, const std::string& content) {
  const auto p = claim(dir_ / name);
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw IoError("cannot write " + p.string());
}

void OutputSet::json(const std::string& name, const nlohmann::ordered_json& j) { text(name, j.dump(2) + "\n"); }

void OutputSet::bytes(const fs::path& p, std::span<const std::uint8_t> data) {
  claim(p);
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("cannot write " + p.string());
}

std::vector<fs::path> OutputSet::commit() {
  committed_ = true;
  return files_;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw ContractError("CsvTable: row width does not match the header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string s;
  auto line = [&s](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return s;
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    else if (ch == ',' && !quoted) out.push_back(std::exchange(cell, {}));
    else if (ch != '\r') cell += ch;
  }
  out.push_back(cell);
  return out;
}

}  // namespace

const std::vector<double>& NumericCsv::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ContractError("no column named '" + name + "'");
  const auto& c = columns[static_cast<std::size_t>(it - header.begin())];
  for (double v : c) {
    if (std::isnan(v)) throw ContractError("column '" + name + "' is not numeric");
  }
  return c;
}

NumericCsv read_numeric_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  NumericCsv t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(p.string(), 1, "missing header");
  t.header = split_cells(line);
  t.columns.resize(t.header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_cells(line);
    if (cells.size() != t.header.size()) throw ParseError(p.string(), line_no, "row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = std::numeric_limits<double>::quiet_NaN();
      const char* b = cells[i].data();
      const char* e = b + cells[i].size();
      double parsed = 0;
      if (auto r = std::from_chars(b, e, parsed); r.ec == std::errc() && r.ptr == e) v = parsed;
      t.columns[i].push_back(v);
    }
  }
  return t;
}

namespace {

std::string fixed(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

}  // namespace

std::string svg_scatter(const std::string& title, const std::string& x_label, const std::string& y_label,
                        std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("svg_scatter: series lengths differ");
  constexpr double W = 480, H = 360, L = 64, R = 16, T = 32, B = 48;
  auto range = [](std::span<const double> v) {
    double lo = 0, hi = 1;
    if (!v.empty()) {
      const auto [a, b] = std::minmax_element(v.begin(), v.end());
      lo = *a;
      hi = *b;
    }
    if (hi - lo <= 0) {
      const double pad = lo == 0 ? 0.5 : std::abs(lo) * 0.05;
      lo -= pad;
      hi += pad;
    }
    return std::pair{lo, hi};
  };
  const auto [x0, x1] = range(x);
  const auto [y0, y1] = range(y);
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
    << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << L << "\" y=\"" << H - B + 14 << "\" text-anchor=\"start\">" << label(x0) << "</text>\n"
    << "<text x=\"" << W - R << "\" y=\"" << H - B + 14 << "\" text-anchor=\"end\">" << label(x1) << "</text>\n"
    << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << label(y0) << "</text>\n"
    << "<text x=\"" << L - 4 << "\" y=\"" << T + 8 << "\" text-anchor=\"end\">" << label(y1) << "</text>\n"
    << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
    << "</text>\n"
    << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    s << "<circle cx=\"" << fixed(px(x[i])) << "\" cy=\"" << fixed(py(y[i]))
      << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

nlohmann::ordered_json correlation_json(std::span<const double> x, std::span<const double> y) {
  nlohmann::ordered_json j;
  for (auto [name, m] : {std::pair{"pearson", objectives::CorrelationMethod::pearson},
                         std::pair{"spearman", objectives::CorrelationMethod::spearman}}) {
    try {
      j[name] = objectives::correlation(x, y, m);
    } catch (const ContractError&) {
      j[name] = nullptr;
    }
  }
  return j;
}

}  // namespace mosae::cli
