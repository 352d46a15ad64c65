#include "confocal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "constants.hpp"
#include "error.hpp"
#include "lm.hpp"

namespace nvkit::confocal {

using constants::kPi;

std::size_t PLMap::expected_size() const {
  std::size_t n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

std::size_t PLMap::index(const std::vector<std::size_t>& at) const {
  require(at.size() == axes.size(), "index rank does not match map dimensions");
  std::size_t flat = 0;
  for (std::size_t d = 0; d < axes.size(); ++d) {
    require(at[d] < axes[d].size(), "map index out of range");
    flat = flat * axes[d].size() + at[d];
  }
  return flat;
}

void PLMap::validate() const {
  require(dims() == 2 || dims() == 3, "map must be 2D or 3D");
  require(std::isfinite(power_mw) && power_mw > 0.0, "map power must be positive");
  for (const auto& a : axes) {
    require(!a.empty(), "map axes must be non-empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
      require(std::isfinite(a[i]), "axis coordinates must be finite");
      if (i > 0) require(a[i] > a[i - 1], "axis coordinates must be strictly increasing");
    }
  }
  require(counts.size() == expected_size(), "count grid does not match axis lengths");
  for (double c : counts) require(std::isfinite(c) && c >= 0.0, "counts must be finite and >= 0");
}

namespace {

constexpr const char* kAxisNames[] = {"x", "y", "z"};

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string shortest(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PLMap parse_map(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  PLMap map;

  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file");
  ++line_no;
  {
    const auto t = tokens(line);
    if (t.size() != 5 || t[0] != "#" || t[1] != "plmap" || t[2] != "v1" ||
        t[3].substr(0, 5) != "dims=" || t[4].substr(0, 9) != "power_mW=")
      throw ParseError(source, line_no,
                       "malformed header, expected '# plmap v1 dims=<2|3> power_mW=<float>'");
    const std::string_view dims = t[3].substr(5);
    if (dims != "2" && dims != "3") throw ParseError(source, line_no, "dims must be 2 or 3");
    if (!parse_double(t[4].substr(9), map.power_mw) || !(map.power_mw > 0.0))
      throw ParseError(source, line_no, "power_mW must be a positive number");
    map.axes.resize(dims == "2" ? 2 : 3);
  }

  for (std::size_t d = 0; d < map.axes.size(); ++d) {
    if (!std::getline(in, line))
      throw ParseError(source, line_no + 1, std::string("missing axis line for ") + kAxisNames[d]);
    ++line_no;
    const auto t = tokens(line);
    const std::string label = std::string(kAxisNames[d]) + ":";
    if (t.size() < 4 || t[0] != "#" || t[1] != "axis" || t[2] != label)
      throw ParseError(source, line_no,
                       std::string("malformed axis line, expected '# axis ") + kAxisNames[d] +
                           ": <n> values...'");
    std::size_t n = 0;
    {
      const auto [ptr, ec] = std::from_chars(t[3].data(), t[3].data() + t[3].size(), n);
      if (ec != std::errc() || ptr != t[3].data() + t[3].size() || n == 0)
        throw ParseError(source, line_no, "axis length must be a positive integer");
    }
    if (t.size() != 4 + n)
      throw ParseError(source, line_no,
                       "axis declares " + std::to_string(n) + " values but lists " +
                           std::to_string(t.size() - 4));
    auto& axis = map.axes[d];
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      if (!parse_double(t[4 + i], v) || !std::isfinite(v))
        throw ParseError(source, line_no, "invalid axis value '" + std::string(t[4 + i]) + "'");
      if (!axis.empty() && !(v > axis.back()))
        throw ParseError(source, line_no,
                         std::string("axis ") + kAxisNames[d] + " is not strictly increasing");
      axis.push_back(v);
    }
  }

  // One data row per line of the last axis.
  const std::size_t row_len = map.axes.back().size();
  const std::size_t expected = map.expected_size();
  map.counts.reserve(expected);
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t.size() != row_len)
      throw ParseError(source, line_no,
                       "ragged row: expected " + std::to_string(row_len) + " values, found " +
                           std::to_string(t.size()));
    if (map.counts.size() + row_len > expected)
      throw ParseError(source, line_no, "more count rows than the axes declare");
    for (const auto tok : t) {
      double v = 0.0;
      if (!parse_double(tok, v) || !std::isfinite(v))
        throw ParseError(source, line_no, "invalid count value '" + std::string(tok) + "'");
      if (v < 0.0) throw ParseError(source, line_no, "negative count value");
      map.counts.push_back(v);
    }
  }
  if (map.counts.size() != expected)
    throw ParseError(source, line_no,
                     "expected " + std::to_string(expected) + " counts, found " +
                         std::to_string(map.counts.size()));
  return map;
}

std::string format_map(const PLMap& map) {
  map.validate();
  std::string out = "# plmap v1 dims=" + std::to_string(map.dims()) +
                    " power_mW=" + shortest(map.power_mw) + "\n";
  for (int d = 0; d < map.dims(); ++d) {
    const auto& a = map.axes[static_cast<std::size_t>(d)];
    out += std::string("# axis ") + kAxisNames[d] + ": " + std::to_string(a.size());
    for (double v : a) out += " " + shortest(v);
    out += "\n";
  }
  const std::size_t row_len = map.axes.back().size();
  for (std::size_t i = 0; i < map.counts.size(); ++i) {
    out += shortest(map.counts[i]);
    out += (i + 1) % row_len == 0 ? "\n" : " ";
  }
  return out;
}

PLMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open map file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str(), path);
}

void save_map(const PLMap& map, const std::string& path) {
  const std::string text = format_map(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path + ": write failed");
}

double gaussian_profile(double x, double amplitude, double center, double fwhm,
                        double baseline) {
  const double d = (x - center) / fwhm;
  return baseline + amplitude * std::exp(-4.0 * std::log(2.0) * d * d);
}

GaussianSliceFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y,
                              const SliceInit* init) {
  require(x.size() == y.size(), "slice coordinate and value lengths differ");
  require(x.size() >= 6, "slice needs at least 6 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(y[i]), "slice values must be finite");
    if (i > 0) require(x[i] > x[i - 1], "slice coordinates must be strictly increasing");
  }
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  if (*mx - *mn <= 1e-12 * std::max(1.0, std::fabs(*mx)))
    throw NumericError("fit_gaussian_slice: flat slice");

  const double span = x.back() - x.front();
  const double step = span / static_cast<double>(x.size() - 1);
  SliceInit s;
  if (init) {
    s = *init;
  } else {
    s.baseline = *mn;
    s.amplitude = *mx - *mn;
    s.center = x[static_cast<std::size_t>(mx - y.begin())];
    // Width from the number of samples above half height.
    std::size_t above = 0;
    for (double v : y)
      if (v - *mn >= 0.5 * s.amplitude) ++above;
    s.fwhm = std::max(static_cast<double>(above) * step, step);
  }
  const double scale = std::max(std::fabs(*mx), std::fabs(*mn));
  auto residuals = [&](std::span<const double> q, std::span<double> r) {
    for (std::size_t i = 0; i < x.size(); ++i)
      r[i] = (gaussian_profile(x[i], q[0], q[1], q[2], q[3]) - y[i]) / scale;
  };
  const std::vector<fit::Bounds> bounds{{0.0, 1e3 * (*mx - *mn)},
                                        {x.front() - span, x.back() + span},
                                        {0.1 * step, 10.0 * span},
                                        {-1e3 * scale, 1e3 * scale}};
  const fit::LmResult lm =
      fit::levenberg_marquardt(residuals, x.size(), {s.amplitude, s.center, s.fwhm, s.baseline}, bounds);
  GaussianSliceFit f;
  f.amplitude = lm.params[0];
  f.center = lm.params[1];
  f.fwhm = lm.params[2];
  f.baseline = lm.params[3];
  f.amplitude_error = lm.errors[0];
  f.center_error = lm.errors[1];
  f.fwhm_error = lm.errors[2];
  f.baseline_error = lm.errors[3];
  f.residual_norm = lm.residual_norm * scale;
  f.converged = lm.converged;
  f.iterations = lm.iterations;
  return f;
}

std::vector<double> slice_values(const PLMap& map, int axis, const std::vector<std::size_t>& at) {
  require(axis >= 0 && axis < map.dims(), "slice axis out of range");
  require(at.size() == map.axes.size(), "slice position rank does not match map");
  std::vector<std::size_t> idx = at;
  const auto& coords = map.axes[static_cast<std::size_t>(axis)];
  std::vector<double> out(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    idx[static_cast<std::size_t>(axis)] = i;
    out[i] = map.counts[map.index(idx)];
  }
  return out;
}

GaussianSliceFit fit_gaussian_slice(const PLMap& map, int axis,
                                    const std::vector<std::size_t>& at) {
  map.validate();
  const std::vector<double> values = slice_values(map, axis, at);
  return fit_gaussian(map.axes[static_cast<std::size_t>(axis)], values);
}

void PsfModel::validate() const {
  for (double w : {w_x, w_y, w_z})
    require(std::isfinite(w) && w > 0.0, "PSF widths must be positive");
}

bool PsfModel::is_default() const {
  const PsfModel d;
  return w_x == d.w_x && w_y == d.w_y && w_z == d.w_z;
}

double gaussian_integral_width(double fwhm) {
  return fwhm * std::sqrt(kPi / (4.0 * std::log(2.0)));
}

double effective_volume(const PsfModel& psf, DensityMethod method) {
  psf.validate();
  if (method == DensityMethod::Gaussian)
    return gaussian_integral_width(psf.w_x) * gaussian_integral_width(psf.w_y) *
           gaussian_integral_width(psf.w_z);
  return 4.0 * kPi / 3.0 * psf.w_x * psf.w_y * psf.w_z;
}

DensityEstimate estimate_density(double c_ensemble, double c_single, const PsfModel& psf,
                                 DensityMethod method) {
  require(std::isfinite(c_ensemble) && c_ensemble > 0.0, "ensemble rate must be positive");
  require(std::isfinite(c_single) && c_single > 0.0, "single-emitter rate must be positive");
  DensityEstimate e;
  e.method = method;
  e.effective_volume = effective_volume(psf, method);
  e.number_density = (c_ensemble / c_single) / e.effective_volume;
  e.ppb = density_to_ppb(e.number_density);
  return e;
}

double enhancement_ratio(double region_a, double region_b) {
  require(std::isfinite(region_a) && region_a >= 0.0, "region rates must be non-negative");
  require(std::isfinite(region_b) && region_b > 0.0, "reference region rate must be positive");
  return region_a / region_b;
}

// 1 µm^-3 = 1e12 cm^-3.
double density_to_ppb(double per_um3) {
  require(std::isfinite(per_um3) && per_um3 >= 0.0, "density must be non-negative");
  return per_um3 * 1e12 / constants::kCarbonDensityPerCm3 * 1e9;
}

double ppb_to_density(double ppb) {
  require(std::isfinite(ppb) && ppb >= 0.0, "ppb must be non-negative");
  return ppb * 1e-9 * constants::kCarbonDensityPerCm3 / 1e12;
}

}  // namespace nvkit::confocal
