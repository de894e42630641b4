#pragma once

// Dataset files, UCI ingestion, normalisation and result tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rcc/core_model.hpp"

namespace rcc {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& tok, std::size_t line_no, const std::string& path) {
  const std::string t = trim(tok);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (t.empty() || pos != t.size() || !std::isfinite(v))
    fail(ErrorKind::Data, path + ":" + std::to_string(line_no) + ": malformed value '" + t + "'");
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  return in;
}

}  // namespace detail

//------------------------------------------------------------------------------
// Plain dataset CSV: header "name_1,...,name_d,label", one sample per row.
//------------------------------------------------------------------------------

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  for (std::size_t j = 0; j < ds.dims(); ++j) {
    out << (j < ds.feature_names.size() ? ds.feature_names[j] : "f" + std::to_string(j + 1)) << ',';
  }
  out << "label\n";
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out << detail::format_double(ds.features(i, j)) << ',';
    out << detail::format_double(ds.labels[i]) << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

inline Dataset read_dataset_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Data, path + ": empty file");
  auto header = detail::split(detail::trim(line), ',');
  require(header.size() >= 2, ErrorKind::Data, path + ": header needs at least one feature and a label");
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto tok = detail::split(detail::trim(line), ',');
    if (tok.size() != d + 1)
      fail(ErrorKind::Data, path + ":" + std::to_string(line_no) + ": expected " + std::to_string(d + 1) + " fields");
    for (const auto& t : tok) values.push_back(detail::parse_number(t, line_no, path));
    ++rows;
  }
  require(rows > 0, ErrorKind::Data, path + ": no data rows");
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * (d + 1) + j];
    ds.labels[static_cast<Eigen::Index>(i)] = values[i * (d + 1) + d];
  }
  header.pop_back();
  for (auto& h : header) h = detail::trim(h);
  ds.feature_names = std::move(header);
  return ds;
}

//------------------------------------------------------------------------------
// UCI files
//------------------------------------------------------------------------------

enum class UciKind { Skin, Breast };

inline UciKind parse_uci_kind(const std::string& s) {
  if (s == "skin") return UciKind::Skin;
  if (s == "breast") return UciKind::Breast;
  fail(ErrorKind::Config, "unknown dataset kind '" + s + "' (expected skin or breast)");
}

/// Skin segmentation: "B<TAB>G<TAB>R<TAB>label", label 1 (skin) -> +1 and
/// 2 -> -1. Breast cancer (Wisconsin original): "id,f1..f9,class", class
/// 2 (benign) -> -1 and 4 (malignant) -> +1; rows with '?' are dropped.
/// Features are returned raw; see AffineNormalizer.
inline Dataset ingest_uci(const std::string& path, UciKind kind) {
  auto in = detail::open_input(path);
  std::vector<double> values;
  std::vector<double> labels;
  const std::size_t d = kind == UciKind::Skin ? 3 : 9;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (kind == UciKind::Skin) {
      std::istringstream ls(t);
      std::vector<std::string> tok;
      std::string s;
      while (ls >> s) tok.push_back(s);
      if (tok.size() != 4) fail(ErrorKind::Data, path + ":" + std::to_string(line_no) + ": expected 4 fields");
      for (std::size_t j = 0; j < 3; ++j) values.push_back(detail::parse_number(tok[j], line_no, path));
      const double c = detail::parse_number(tok[3], line_no, path);
      if (c != 1.0 && c != 2.0) fail(ErrorKind::Data, path + ":" + std::to_string(line_no) + ": label must be 1 or 2");
      labels.push_back(c == 1.0 ? 1.0 : -1.0);
    } else {
      auto tok = detail::split(t, ',');
      if (tok.size() != 11) fail(ErrorKind::Data, path + ":" + std::to_string(line_no) + ": expected 11 fields");
      if (std::any_of(tok.begin(), tok.end(), [](const std::string& s) { return detail::trim(s) == "?"; })) continue;
      for (std::size_t j = 1; j <= 9; ++j) values.push_back(detail::parse_number(tok[j], line_no, path));
      const double c = detail::parse_number(tok[10], line_no, path);
      if (c != 2.0 && c != 4.0) fail(ErrorKind::Data, path + ":" + std::to_string(line_no) + ": class must be 2 or 4");
      labels.push_back(c == 4.0 ? 1.0 : -1.0);
    }
  }
  require(!labels.empty(), ErrorKind::Data, path + ": no usable rows");
  Dataset ds;
  const auto m = static_cast<Eigen::Index>(labels.size());
  ds.features.resize(m, static_cast<Eigen::Index>(d));
  ds.labels.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      ds.features(i, static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(i) * d + j];
    ds.labels[i] = labels[static_cast<std::size_t>(i)];
  }
  if (kind == UciKind::Skin) {
    ds.feature_names = {"B", "G", "R"};
  } else {
    ds.feature_names = {"clump_thickness", "cell_size",       "cell_shape",  "adhesion", "epithelial_size",
                        "bare_nuclei",     "bland_chromatin", "nucleoli",    "mitoses"};
  }
  return ds;
}

/// Zero-mean, unit-variance map fitted on one split and applied to others.
/// Constant columns keep unit scale.
struct AffineNormalizer {
  Vector mean;
  Vector sd;

  static AffineNormalizer fit(const Dataset& train) {
    AffineNormalizer n;
    const double m = static_cast<double>(train.samples());
    n.mean = train.features.colwise().mean().transpose();
    n.sd.resize(n.mean.size());
    for (Eigen::Index j = 0; j < n.mean.size(); ++j) {
      const double v = (train.features.col(j).array() - n.mean[j]).square().sum() / m;
      n.sd[j] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
    return n;
  }

  Dataset apply(const Dataset& ds) const {
    Dataset out = ds;
    out.features = ((ds.features.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array()).matrix();
    return out;
  }
};

//------------------------------------------------------------------------------
// Result tables
//------------------------------------------------------------------------------

struct ResultRow {
  double budget = 0.0;
  std::string rule;
  double mean_error = 0.0;
  double sd_error = 0.0;
  int folds = 0;
  int diverged = 0;

  bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  /// Rows for one rule, in table order.
  std::vector<ResultRow> for_rule(const std::string& rule) const {
    std::vector<ResultRow> out;
    for (const auto& r : rows)
      if (r.rule == rule) out.push_back(r);
    return out;
  }
};

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_output_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  fail(ErrorKind::Config, "unknown output format '" + s + "' (expected csv or json)");
}

inline constexpr const char* kResultHeader = "R,rule,mean_error,sd_error,folds,diverged";

inline std::string results_to_csv(const ResultTable& t) {
  std::ostringstream out;
  out << kResultHeader << '\n';
  for (const auto& r : t.rows)
    out << detail::format_double(r.budget) << ',' << r.rule << ',' << detail::format_double(r.mean_error) << ','
        << detail::format_double(r.sd_error) << ',' << r.folds << ',' << r.diverged << '\n';
  return out.str();
}

inline nlohmann::ordered_json results_to_json(const ResultTable& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json o;
    o["R"] = r.budget;
    o["rule"] = r.rule;
    // NaN is not valid JSON; a fully diverged row reports null.
    if (std::isfinite(r.mean_error)) o["mean_error"] = r.mean_error; else o["mean_error"] = nullptr;
    if (std::isfinite(r.sd_error)) o["sd_error"] = r.sd_error; else o["sd_error"] = nullptr;
    o["folds"] = r.folds;
    o["diverged"] = r.diverged;
    rows.push_back(std::move(o));
  }
  nlohmann::ordered_json doc;
  doc["columns"] = {"R", "rule", "mean_error", "sd_error", "folds", "diverged"};
  doc["rows"] = std::move(rows);
  return doc;
}

inline void emit_results(const ResultTable& t, const std::string& path, OutputFormat fmt) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  if (fmt == OutputFormat::Csv)
    out << results_to_csv(t);
  else
    out << results_to_json(t).dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

inline ResultTable read_results_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kResultHeader)
    fail(ErrorKind::Data, path + ": missing result header");
  ResultTable t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto tok = detail::split(detail::trim(line), ',');
    if (tok.size() != 6) fail(ErrorKind::Data, path + ":" + std::to_string(line_no) + ": expected 6 fields");
    ResultRow r;
    r.budget = detail::parse_number(tok[0], line_no, path);
    r.rule = tok[1];
    r.mean_error = std::stod(tok[2]);
    r.sd_error = std::stod(tok[3]);
    r.folds = static_cast<int>(detail::parse_number(tok[4], line_no, path));
    r.diverged = static_cast<int>(detail::parse_number(tok[5], line_no, path));
    t.rows.push_back(std::move(r));
  }
  return t;
}

/// JSON schema of results_to_json output.
inline nlohmann::json results_json_schema() {
  return nlohmann::json::parse(R"({
  "type": "object",
  "required": ["columns", "rows"],
  "properties": {
    "columns": {"type": "array", "items": {"type": "string"}},
    "rows": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["R", "rule", "mean_error", "sd_error", "folds", "diverged"],
        "properties": {
          "R": {"type": "number", "exclusiveMinimum": 0},
          "rule": {"type": "string"},
          "mean_error": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
          "sd_error": {"type": ["number", "null"], "minimum": 0},
          "folds": {"type": "integer", "minimum": 0},
          "diverged": {"type": "integer", "minimum": 0}
        }
      }
    }
  }
})");
}

}  // namespace rcc
