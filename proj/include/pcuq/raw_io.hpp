#pragma once

// Vibration records in the PRONOSTIA layout: acquisition snapshots of a
// fixed number of rows with a wall-clock time stamp and two accelerometer
// channels. Temperatures come from a separate file.

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace pcuq::io {

struct RawSchema {
  std::string hour = "hour";
  std::string minute = "minute";
  std::string second = "second";
  std::string microsecond = "microsecond";
  std::string horizontal = "horizontal_accel";
  std::string vertical = "vertical_accel";
  /// Non-empty: the vibration file itself carries this temperature column (K).
  std::string temperature;
  bool has_header = true;
  std::size_t rows_per_snapshot = 2560;
  double sampling_rate = 25600.0;

  std::vector<std::string> columns() const;
};

struct RawSnapshot {
  Eigen::VectorXd horizontal;
  Eigen::VectorXd vertical;
  double timestamp = 0.0;    // s since midnight of the first sample
  double temperature = 0.0;  // K
};

struct RawRecord {
  std::vector<RawSnapshot> snapshots;
  double load = 0.0;  // N
  double rpm = 0.0;
  /// True when no temperature source was available and T_a was used instead.
  bool temperature_substituted = false;

  void validate() const;
  std::vector<double> timestamps() const;
  std::vector<double> temperatures() const;
};

/// Rows are grouped into snapshots of rows_per_snapshot; a trailing partial
/// snapshot is an error. Temperatures default to `ambient` and are flagged.
RawRecord load_raw_csv(const std::string& path, const RawSchema& schema = {}, double ambient = 298.0);

struct TemperatureSeries {
  std::vector<double> time;  // s
  std::vector<double> kelvin;
};

/// Columns hour, minute, second, microsecond, temperature; `celsius` converts to K.
TemperatureSeries load_temperature_csv(const std::string& path, bool celsius = true);

/// Nearest-neighbour join on time; clears the substitution flag.
void join_temperatures(RawRecord& record, const TemperatureSeries& series);

void write_raw_csv(const std::string& path, const RawRecord& record, const RawSchema& schema = {});

}  // namespace pcuq::io
