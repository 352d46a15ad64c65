#include "record.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace nvcli {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void Record::number(const std::string& key, double value, const std::string& unit) {
  rows_.push_back({key, fmt("%.6g", value), fmt("%.12g", value), unit});
}

void Record::integer(const std::string& key, long long value) {
  rows_.push_back({key, std::to_string(value), std::to_string(value), ""});
}

void Record::text(const std::string& key, const std::string& value) {
  rows_.push_back({key, value, value, ""});
}

void Record::note(const std::string& message) { notes_.push_back(message); }

std::string Record::render(Format format) const {
  std::string out;
  if (format == Format::Kv) {
    out += "# nvkit " + command_ + " v1\n";
    for (const auto& r : rows_) {
      out += r.key + "=" + r.kv_value + "\n";
      if (!r.unit.empty()) out += r.key + ".unit=" + r.unit + "\n";
    }
    for (const auto& n : notes_) out += "note=" + n + "\n";
    return out;
  }
  std::size_t kw = 8;
  std::size_t vw = 5;
  for (const auto& r : rows_) {
    kw = std::max(kw, r.key.size());
    vw = std::max(vw, r.table_value.size());
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  out += pad("quantity", kw) + "  " + pad("value", vw) + "  unit\n";
  out += std::string(kw, '-') + "  " + std::string(vw, '-') + "  ----\n";
  for (const auto& r : rows_) {
    std::string line = pad(r.key, kw) + "  " + pad(r.table_value, vw) + "  " + r.unit;
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  for (const auto& n : notes_) out += "note: " + n + "\n";
  return out;
}

void write_plot(const std::string& path, const std::string& x_label, const std::string& y_label,
                const std::vector<double>& x, const std::vector<double>& y) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open plot file for writing");
  out << "# " << x_label << " " << y_label << "\n";
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    out << fmt("%.12g", x[i]) << " " << fmt("%.12g", y[i]) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace nvcli
