#include "formats.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace nvkit::formats {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double number(const std::string& tok, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError(source, line, "invalid number '" + tok + "'");
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;
};

// Reads the header line (if `expect_header`) and rows of exactly `columns`
// numbers; a trailing column may be absent when `optional_last` is set.
Table read_table(const std::string& text, const std::string& source, bool expect_header,
                 std::size_t columns, bool optional_last) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Table t;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = split(line);
    if (tok.empty()) continue;
    if (tok[0][0] == '#') {
      if (!header_seen && expect_header && t.rows.empty()) {
        t.header = tok;
        header_seen = true;
      }
      continue;
    }
    if (expect_header && !header_seen) throw ParseError(source, line_no, "missing header line");
    if (tok.size() != columns && !(optional_last && tok.size() + 1 == columns))
      throw ParseError(source, line_no,
                       "expected " + std::to_string(columns) + " columns, found " +
                           std::to_string(tok.size()));
    std::vector<double> row;
    for (const auto& s : tok) row.push_back(number(s, source, line_no));
    if (row.size() < columns) row.push_back(0.0);
    t.rows.push_back(std::move(row));
    t.lines.push_back(line_no);
  }
  if (expect_header && !header_seen) throw ParseError(source, line_no == 0 ? 1 : line_no, "missing header line");
  return t;
}

void check_header(const Table& t, const std::string& source, const std::string& kind) {
  if (t.header.size() < 3 || t.header[0] != "#" || t.header[1] != kind || t.header[2] != "v1")
    throw ParseError(source, 1, "malformed header, expected '# " + kind + " v1'");
}

std::string header_value(const Table& t, const std::string& key, const std::string& source) {
  for (std::size_t i = 3; i < t.header.size(); ++i)
    if (t.header[i].rfind(key + "=", 0) == 0) return t.header[i].substr(key.size() + 1);
  throw ParseError(source, 1, "header lacks '" + key + "='");
}

// First column strictly increasing, sigma column non-negative.
void check_series(const Table& t, const std::string& source, const char* what) {
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && !(t.rows[i][0] > t.rows[i - 1][0]))
      throw ParseError(source, t.lines[i], std::string(what) + " must be strictly increasing");
    if (t.rows[i].size() > 2 && t.rows[i][2] < 0.0)
      throw ParseError(source, t.lines[i], "sigma must be non-negative");
  }
}

}  // namespace

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* curve_kind_name(dynamics::CurveKind kind) {
  switch (kind) {
    case dynamics::CurveKind::Rabi: return "rabi";
    case dynamics::CurveKind::Fid: return "fid";
    case dynamics::CurveKind::Hahn: return "hahn";
    case dynamics::CurveKind::T1: return "t1";
  }
  return "rabi";
}

bool curve_kind_from_name(const std::string& name, dynamics::CurveKind& out) {
  for (auto k : {dynamics::CurveKind::Rabi, dynamics::CurveKind::Fid, dynamics::CurveKind::Hahn,
                 dynamics::CurveKind::T1})
    if (name == curve_kind_name(k)) {
      out = k;
      return true;
    }
  return false;
}

odmr::OdmrSpectrum parse_spectrum(const std::string& text, const std::string& source) {
  const Table t = read_table(text, source, true, 3, true);
  check_header(t, source, "odmr");
  odmr::OdmrSpectrum s;
  const std::string mode = header_value(t, "mode", source);
  if (mode == "cw")
    s.mode = odmr::Mode::Cw;
  else if (mode == "pulsed")
    s.mode = odmr::Mode::Pulsed;
  else
    throw ParseError(source, 1, "mode must be cw or pulsed");
  check_series(t, source, "frequencies");
  for (const auto& r : t.rows) {
    s.freqs.push_back(r[0]);
    s.signal.push_back(r[1]);
    s.sigma.push_back(r[2]);
  }
  return s;
}

std::string format_spectrum(const odmr::OdmrSpectrum& s) {
  std::string out = std::string("# odmr v1 mode=") + (s.mode == odmr::Mode::Cw ? "cw" : "pulsed") + "\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += exact(s.freqs[i]) + " " + exact(s.signal[i]) + " " + exact(s.sigma[i]) + "\n";
  return out;
}

dynamics::DecayCurve parse_decay(const std::string& text, const std::string& source) {
  const Table t = read_table(text, source, true, 3, true);
  check_header(t, source, "decay");
  dynamics::DecayCurve c;
  if (!curve_kind_from_name(header_value(t, "kind", source), c.kind))
    throw ParseError(source, 1, "kind must be rabi, fid, hahn or t1");
  check_series(t, source, "times");
  for (const auto& r : t.rows) {
    c.times.push_back(r[0]);
    c.signal.push_back(r[1]);
    c.sigma.push_back(r[2]);
  }
  return c;
}

std::string format_decay(const dynamics::DecayCurve& c) {
  std::string out = std::string("# decay v1 kind=") + curve_kind_name(c.kind) + "\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    out += exact(c.times[i]) + " " + exact(c.signal[i]) + " " + exact(c.sigma[i]) + "\n";
  return out;
}

photon::G2Curve parse_g2(const std::string& text, const std::string& source) {
  const Table t = read_table(text, source, true, 3, true);
  check_header(t, source, "g2");
  check_series(t, source, "delays");
  photon::G2Curve c;
  for (const auto& r : t.rows) {
    c.taus.push_back(r[0]);
    c.g2.push_back(r[1]);
    c.sigma.push_back(r[2]);
  }
  return c;
}

std::string format_g2(const photon::G2Curve& c) {
  std::string out = "# g2 v1\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    out += exact(c.taus[i]) + " " + exact(c.g2[i]) + " " + exact(c.sigma[i]) + "\n";
  return out;
}

std::vector<photon::SaturationPoint> parse_saturation(const std::string& text,
                                                      const std::string& source) {
  const Table t = read_table(text, source, false, 2, false);
  std::vector<photon::SaturationPoint> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i][0] < 0.0 || t.rows[i][1] < 0.0)
      throw ParseError(source, t.lines[i], "power and rate must be non-negative");
    out.push_back({t.rows[i][0], t.rows[i][1]});
  }
  return out;
}

std::string format_saturation(const std::vector<photon::SaturationPoint>& points) {
  std::string out = "# saturation v1\n";
  for (const auto& p : points) out += exact(p.power_mw) + " " + exact(p.rate) + "\n";
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace nvkit::formats
