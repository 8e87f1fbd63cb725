#include "pcuq/csv.hpp"

#include "pcuq/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pcuq::io {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  if (b == e) return std::nullopt;
  const char* first = text.data() + b;
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, text.data() + e, v);
  if (res.ec != std::errc() || res.ptr != text.data() + e) return std::nullopt;
  if (std::isnan(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw CsvError("missing column '" + name + "'");
}

bool Table::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

Eigen::VectorXd Table::column_values(const std::string& name) const {
  const std::size_t c = column(name);
  Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = rows[i][c];
  return v;
}

Table read_table(const std::string& path, bool has_header, const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw CsvError(path + ": cannot open file");
  Table t;
  std::string line;
  std::size_t lineno = 0;
  if (has_header) {
    if (!std::getline(in, line)) throw CsvError(path + ": empty file");
    ++lineno;
    t.header = split_line(line);
  } else {
    t.header = names;
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (t.header.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) t.header.push_back("c" + std::to_string(i));
    }
    if (cells.size() != t.header.size()) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected " << t.header.size() << " cells, found " << cells.size();
      throw CsvError(os.str());
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto v = parse_double(cells[i]);
      if (!v) {
        std::ostringstream os;
        os << path << ":" << lineno << ": non-numeric value '" << cells[i] << "' in column '" << t.header[i] << "'";
        throw CsvError(os.str());
      }
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(lineno);
  }
  return t;
}

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) s += ',';
    s += cells[i];
  }
  return s;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CsvError(path + ": cannot open for writing");
    out << content;
    if (!out) throw CsvError(path + ": write failed");
  }
  std::filesystem::rename(tmp, target);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError(path + ": cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_table(const std::string& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  if (values.cols() != static_cast<Eigen::Index>(header.size())) {
    throw std::invalid_argument("write_table: header and column count differ");
  }
  std::ostringstream os;
  os << join(header) << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) os << ',';
      os << format_double(values(i, j));
    }
    os << '\n';
  }
  write_text_file(path, os.str());
}

std::vector<std::string> feature_header(bool with_label, bool with_split) {
  auto h = features::feature_names();
  if (with_label) h.push_back("label");
  if (with_split) h.push_back("split");
  return h;
}

void write_feature_csv(const std::string& path, const Eigen::MatrixXd& x, const Eigen::VectorXd* labels,
                       const std::vector<int>* split) {
  if (x.cols() != features::kFeatureColumns) throw std::invalid_argument("write_feature_csv: expected 16 columns");
  if (labels != nullptr && labels->size() != x.rows()) throw std::invalid_argument("write_feature_csv: label count differs");
  if (split != nullptr && static_cast<Eigen::Index>(split->size()) != x.rows()) {
    throw std::invalid_argument("write_feature_csv: split count differs");
  }
  Eigen::MatrixXd all(x.rows(), x.cols() + (labels ? 1 : 0) + (split ? 1 : 0));
  all.leftCols(x.cols()) = x;
  Eigen::Index c = x.cols();
  if (labels != nullptr) all.col(c++) = *labels;
  if (split != nullptr) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) all(i, c) = (*split)[static_cast<std::size_t>(i)];
  }
  write_table(path, feature_header(labels != nullptr, split != nullptr), all);
}

FeatureTable read_feature_csv(const std::string& path) {
  const Table t = read_table(path);
  const auto names = features::feature_names();
  FeatureTable out;
  out.x.resize(static_cast<Eigen::Index>(t.rows.size()), features::kFeatureColumns);
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    try {
      idx.push_back(t.column(n));
    } catch (const CsvError& e) {
      throw CsvError(path + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][idx[j]];
    }
  }
  if (t.has_column("label")) out.y = t.column_values("label");
  if (t.has_column("split")) {
    const auto s = t.column_values("split");
    for (Eigen::Index i = 0; i < s.size(); ++i) out.split.push_back(static_cast<int>(s(i)));
  }
  return out;
}

void write_trajectory_csv(const std::string& path, const physics::Trajectory& trajectory) {
  const std::vector<std::string> header = {"t", "D_F", "D_W", "R", "O", "T", "C_debris", "C_eff", "D_coupled"};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(trajectory.size()), 9);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& s = trajectory.states[i];
    m.row(static_cast<Eigen::Index>(i)) << s.t, s.fatigue, s.wear, s.roughness, s.oxidation, s.temperature, s.debris,
        trajectory.c_eff[i], s.damage;
  }
  write_table(path, header, m);
}

void write_history_csv(const std::string& path, const std::vector<training::LossBreakdown>& history) {
  const std::vector<std::string> header = {"epoch", "L_data", "L_phys", "w1", "w2", "L_total"};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(history.size()), 6);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    m.row(static_cast<Eigen::Index>(i)) << static_cast<double>(i + 1), h.data, h.phys, h.w1, h.w2, h.total;
  }
  write_table(path, header, m);
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "model,config,MSE,MAE,Score,DAC\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.config << ',' << format_double(r.mse) << ',' << format_double(r.mae) << ','
       << format_double(r.score) << ',' << (r.dac ? format_double(*r.dac) : std::string("-")) << '\n';
  }
  write_text_file(path, os.str());
}

}  // namespace pcuq::io
