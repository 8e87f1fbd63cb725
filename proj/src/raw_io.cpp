#include "pcuq/raw_io.hpp"

#include "pcuq/csv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pcuq::io {

std::vector<std::string> RawSchema::columns() const {
  std::vector<std::string> c = {hour, minute, second, microsecond, horizontal, vertical};
  if (!temperature.empty()) c.push_back(temperature);
  return c;
}

void RawRecord::validate() const {
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& s = snapshots[i];
    if (s.horizontal.size() != s.vertical.size()) {
      throw CsvError("raw record: snapshot " + std::to_string(i) + " has unequal channel lengths");
    }
    if (i > 0 && !(s.timestamp > snapshots[i - 1].timestamp)) {
      std::ostringstream os;
      os << "raw record: timestamps not strictly increasing at snapshot " << i << " (" << snapshots[i - 1].timestamp
         << " -> " << s.timestamp << ")";
      throw CsvError(os.str());
    }
  }
}

std::vector<double> RawRecord::timestamps() const {
  std::vector<double> t;
  for (const auto& s : snapshots) t.push_back(s.timestamp);
  return t;
}

std::vector<double> RawRecord::temperatures() const {
  std::vector<double> t;
  for (const auto& s : snapshots) t.push_back(s.temperature);
  return t;
}

namespace {

double clock_seconds(double h, double m, double s, double us) { return h * 3600.0 + m * 60.0 + s + us * 1e-6; }

Table load_with_schema(const std::string& path, const std::vector<std::string>& columns, bool has_header) {
  Table t = read_table(path, has_header, has_header ? std::vector<std::string>{} : columns);
  for (const auto& c : columns) {
    if (!t.has_column(c)) throw CsvError(path + ": missing column '" + c + "'");
  }
  return t;
}

}  // namespace

RawRecord load_raw_csv(const std::string& path, const RawSchema& schema, double ambient) {
  if (schema.rows_per_snapshot == 0) throw std::invalid_argument("RawSchema: rows_per_snapshot must be >= 1");
  const auto columns = schema.columns();
  const Table t = load_with_schema(path, columns, schema.has_header);
  if (t.rows.empty()) throw CsvError(path + ": no data rows");
  if (t.rows.size() % schema.rows_per_snapshot != 0) {
    std::ostringstream os;
    os << path << ":" << t.line_numbers[(t.rows.size() / schema.rows_per_snapshot) * schema.rows_per_snapshot]
       << ": incomplete snapshot (" << t.rows.size() << " rows is not a multiple of " << schema.rows_per_snapshot << ")";
    throw CsvError(os.str());
  }
  const std::size_t ch = t.column(schema.hour), cm = t.column(schema.minute), cs = t.column(schema.second),
                    cu = t.column(schema.microsecond), cx = t.column(schema.horizontal), cy = t.column(schema.vertical);
  const bool has_temp = !schema.temperature.empty();
  const std::size_t ct = has_temp ? t.column(schema.temperature) : 0;

  RawRecord rec;
  rec.temperature_substituted = !has_temp;
  const std::size_t n = schema.rows_per_snapshot;
  double prev_row_time = -1.0;
  for (std::size_t start = 0; start < t.rows.size(); start += n) {
    RawSnapshot s;
    s.horizontal.resize(static_cast<Eigen::Index>(n));
    s.vertical.resize(static_cast<Eigen::Index>(n));
    double temp_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& row = t.rows[start + k];
      const double rt = clock_seconds(row[ch], row[cm], row[cs], row[cu]);
      if (rt < prev_row_time) {
        std::ostringstream os;
        os << path << ":" << t.line_numbers[start + k] << ": time stamp goes backwards";
        throw CsvError(os.str());
      }
      prev_row_time = rt;
      s.horizontal(static_cast<Eigen::Index>(k)) = row[cx];
      s.vertical(static_cast<Eigen::Index>(k)) = row[cy];
      if (has_temp) temp_sum += row[ct];
    }
    const auto& first = t.rows[start];
    s.timestamp = clock_seconds(first[ch], first[cm], first[cs], first[cu]);
    s.temperature = has_temp ? temp_sum / static_cast<double>(n) : ambient;
    if (!rec.snapshots.empty() && !(s.timestamp > rec.snapshots.back().timestamp)) {
      std::ostringstream os;
      os << path << ":" << t.line_numbers[start] << ": snapshot time stamp not strictly increasing";
      throw CsvError(os.str());
    }
    rec.snapshots.push_back(std::move(s));
  }
  rec.validate();
  return rec;
}

TemperatureSeries load_temperature_csv(const std::string& path, bool celsius) {
  const std::vector<std::string> cols = {"hour", "minute", "second", "microsecond", "temperature"};
  const Table t = load_with_schema(path, cols, true);
  TemperatureSeries s;
  const std::size_t ch = t.column("hour"), cm = t.column("minute"), cs = t.column("second"),
                    cu = t.column("microsecond"), ct = t.column("temperature");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const double time = clock_seconds(r[ch], r[cm], r[cs], r[cu]);
    if (!s.time.empty() && time < s.time.back()) {
      throw CsvError(path + ":" + std::to_string(t.line_numbers[i]) + ": time stamp goes backwards");
    }
    const double k = celsius ? r[ct] + 273.15 : r[ct];
    if (!(k > 0.0)) throw CsvError(path + ":" + std::to_string(t.line_numbers[i]) + ": temperature must be > 0 K");
    s.time.push_back(time);
    s.kelvin.push_back(k);
  }
  if (s.time.empty()) throw CsvError(path + ": no temperature rows");
  return s;
}

void join_temperatures(RawRecord& record, const TemperatureSeries& series) {
  if (series.time.empty()) throw std::invalid_argument("join_temperatures: empty series");
  for (auto& snap : record.snapshots) {
    auto it = std::lower_bound(series.time.begin(), series.time.end(), snap.timestamp);
    std::size_t j = static_cast<std::size_t>(it - series.time.begin());
    if (j == series.time.size()) j = series.time.size() - 1;
    if (j > 0 && std::abs(series.time[j - 1] - snap.timestamp) <= std::abs(series.time[j] - snap.timestamp)) --j;
    snap.temperature = series.kelvin[j];
  }
  record.temperature_substituted = false;
}

void write_raw_csv(const std::string& path, const RawRecord& record, const RawSchema& schema) {
  record.validate();
  const double dt = 1.0 / schema.sampling_rate;
  std::ostringstream os;
  const auto cols = schema.columns();
  if (schema.has_header) {
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
  }
  for (const auto& s : record.snapshots) {
    for (Eigen::Index k = 0; k < s.horizontal.size(); ++k) {
      // Microseconds carry the within-snapshot offset; whole seconds split into h:m:s.
      const double t = s.timestamp + static_cast<double>(k) * dt;
      const double whole = std::floor(t);
      const double hour = std::floor(whole / 3600.0);
      const double minute = std::floor((whole - hour * 3600.0) / 60.0);
      const double second = whole - hour * 3600.0 - minute * 60.0;
      const double us = k == 0 ? (s.timestamp - whole) * 1e6 : (t - whole) * 1e6;
      os << format_double(hour) << ',' << format_double(minute) << ',' << format_double(second) << ','
         << format_double(us) << ',' << format_double(s.horizontal(k)) << ',' << format_double(s.vertical(k));
      if (!schema.temperature.empty()) os << ',' << format_double(s.temperature);
      os << '\n';
    }
  }
  write_text_file(path, os.str());
}

}  // namespace pcuq::io
