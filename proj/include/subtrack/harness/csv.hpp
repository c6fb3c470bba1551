#ifndef SUBTRACK_HARNESS_CSV_HPP_
#define SUBTRACK_HARNESS_CSV_HPP_

// Minimal CSV for the artifact's own files: comma separated, header row,
// no quoting (no field ever contains a comma). Doubles use %.17g so a
// write/read cycle is exact.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "subtrack/channel_sim.hpp"

namespace subtrack::harness {

/// Output file problems (maps to exit code 4).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input data problems: malformed CSV, inconsistent CIR table.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : ncols_(header.size()) { row_strings(header); }

  CsvWriter& field(const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos)
      throw std::invalid_argument("csv field contains a separator: " + s);
    sep();
    os_ << s;
    return *this;
  }
  CsvWriter& field(const char* s) { return field(std::string(s)); }
  CsvWriter& field(double x) {
    sep();
    os_ << format_double(x);
    return *this;
  }
  template <class I>
    requires std::is_integral_v<I>
  CsvWriter& field(I x) {
    sep();
    os_ << x;
    return *this;
  }
  CsvWriter& field(cplx z) { return field(z.real()).field(z.imag()); }

  void end_row() {
    if (col_ != ncols_)
      throw std::logic_error("csv row has " + std::to_string(col_) + " fields, header has " +
                             std::to_string(ncols_));
    os_ << '\n';
    col_ = 0;
  }

  std::string str() const { return os_.str(); }

private:
  void sep() {
    if (col_++) os_ << ',';
  }
  void row_strings(const std::vector<std::string>& v) {
    for (const auto& s : v) field(s);
    end_row();
  }

  std::size_t ncols_;
  std::size_t col_ = 0;
  std::ostringstream os_;
};

/// Writes `body` to `path` (binary, so bytes match what the digest sees).
inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("missing column '" + name + "'");
  }

  double number(std::size_t row, std::size_t col) const {
    const std::string& s = rows.at(row).at(col);
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
      throw DataError("row " + std::to_string(row + 2) + ", column '" + header[col] + "': not a number '" +
                      s + "'");
    return x;
  }

  long long integer(std::size_t row, std::size_t col) const {
    const std::string& s = rows.at(row).at(col);
    char* end = nullptr;
    const long long x = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size())
      throw DataError("row " + std::to_string(row + 2) + ", column '" + header[col] + "': not an integer '" +
                      s + "'");
    return x;
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw DataError("line " + std::to_string(lineno) + ": " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (first) throw DataError("empty CSV (no header row)");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw DataError(e.what());
  }
  return parse_csv(text);
}

/// Recorded channel replay. Columns n,k,h_re,h_im (any order, extra columns
/// ignored); n and k are 0-based and every (n, k) in the N x K grid must
/// appear exactly once.
inline ChannelTrajectory load_cir_csv(const std::string& path, double T_b = 1.0, double T_g = 1.0) {
  const CsvTable t = read_csv(path);
  const auto cn = t.column("n"), ck = t.column("k"), cre = t.column("h_re"), cim = t.column("h_im");
  if (t.rows.empty()) throw DataError(path + ": no CIR samples");
  long long N = 0, K = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const long long n = t.integer(i, cn), k = t.integer(i, ck);
    if (n < 0 || k < 0) throw DataError(path + ": negative index on row " + std::to_string(i + 2));
    N = std::max(N, n + 1);
    K = std::max(K, k + 1);
  }
  if (static_cast<long long>(t.rows.size()) != N * K)
    throw DataError(path + ": expected " + std::to_string(N * K) + " samples for a " + std::to_string(N) +
                    " x " + std::to_string(K) + " grid, found " + std::to_string(t.rows.size()));
  ChannelTrajectory traj;
  traj.T_b = T_b;
  traj.T_g = T_g;
  traj.h = CMatrix::Zero(N, K);
  std::vector<bool> seen(static_cast<std::size_t>(N * K), false);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const long long n = t.integer(i, cn), k = t.integer(i, ck);
    const auto idx = static_cast<std::size_t>(n * K + k);
    if (seen[idx])
      throw DataError(path + ": duplicate sample n=" + std::to_string(n) + " k=" + std::to_string(k));
    seen[idx] = true;
    const cplx h(t.number(i, cre), t.number(i, cim));
    if (!std::isfinite(h.real()) || !std::isfinite(h.imag()))
      throw DataError(path + ": non-finite tap on row " + std::to_string(i + 2));
    traj.h(n, k) = h;
  }
  return traj;
}

inline std::string cir_to_csv(const ChannelTrajectory& traj) {
  CsvWriter w({"n", "k", "h_re", "h_im"});
  for (Eigen::Index n = 0; n < traj.length(); ++n)
    for (Eigen::Index k = 0; k < traj.taps(); ++k) w.field(n).field(k).field(traj.h(n, k)).end_row();
  return w.str();
}

}  // namespace subtrack::harness

#endif  // SUBTRACK_HARNESS_CSV_HPP_
