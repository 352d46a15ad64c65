#pragma once

#include <string>
#include <vector>

#include "dynamics.hpp"
#include "odmr.hpp"
#include "photon_stats.hpp"

// Whitespace-separated text formats with a one-line versioned header.
// Blank lines and further '#' comment lines after the header are ignored.
namespace nvkit::formats {

odmr::OdmrSpectrum parse_spectrum(const std::string& text, const std::string& source);
std::string format_spectrum(const odmr::OdmrSpectrum& s);

dynamics::DecayCurve parse_decay(const std::string& text, const std::string& source);
std::string format_decay(const dynamics::DecayCurve& c);

photon::G2Curve parse_g2(const std::string& text, const std::string& source);
std::string format_g2(const photon::G2Curve& c);

// Rows `power_mW counts_per_s`; an optional leading `# saturation v1` header.
std::vector<photon::SaturationPoint> parse_saturation(const std::string& text,
                                                      const std::string& source);
std::string format_saturation(const std::vector<photon::SaturationPoint>& points);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

// %.17g, the shortest form that round-trips every double.
std::string exact(double v);

const char* curve_kind_name(dynamics::CurveKind kind);
bool curve_kind_from_name(const std::string& name, dynamics::CurveKind& out);

}  // namespace nvkit::formats
