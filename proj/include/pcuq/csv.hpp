#pragma once

// Plain comma-separated tables with a header row. Numbers are written in the
// shortest form that reads back to the same double.

#include "pcuq/metrics.hpp"
#include "pcuq/physics.hpp"
#include "pcuq/training.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcuq::io {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double value);
/// Whole-string parse; nullopt for anything that is not a finite or infinite double.
std::optional<double> parse_double(const std::string& text);

std::vector<std::string> split_line(const std::string& line);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  /// Index of a column; throws CsvError naming the column when absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  Eigen::VectorXd column_values(const std::string& name) const;
};

/// Reads a numeric table. Errors carry the file name and line number.
Table read_table(const std::string& path, bool has_header = true, const std::vector<std::string>& names = {});

void write_table(const std::string& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values);

struct FeatureTable {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;  // empty when the file has no label column
  std::vector<int> split;  // empty when the file has no split column
};

std::vector<std::string> feature_header(bool with_label, bool with_split = false);
void write_feature_csv(const std::string& path, const Eigen::MatrixXd& x, const Eigen::VectorXd* labels = nullptr,
                       const std::vector<int>* split = nullptr);
FeatureTable read_feature_csv(const std::string& path);

void write_trajectory_csv(const std::string& path, const physics::Trajectory& trajectory);

void write_history_csv(const std::string& path, const std::vector<training::LossBreakdown>& history);

struct ReportRow {
  std::string model;
  std::string config;
  double mse = 0.0;
  double mae = 0.0;
  double score = 0.0;
  std::optional<double> dac;
};

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);

/// Writes a file atomically enough for the CLI: to a sibling temp file, then renamed.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace pcuq::io
