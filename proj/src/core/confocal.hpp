#pragma once

#include <string>
#include <vector>

// Confocal PL maps, Gaussian slice fits and NV density estimates. Lengths in
// µm, rates in counts/s, power in mW.
namespace nvkit::confocal {

struct PLMap {
  std::vector<std::vector<double>> axes;  // x, y[, z]; strictly increasing
  std::vector<double> counts;             // row-major, last axis fastest
  double power_mw = 1.0;

  int dims() const { return static_cast<int>(axes.size()); }
  std::size_t expected_size() const;
  std::size_t index(const std::vector<std::size_t>& at) const;
  void validate() const;
};

PLMap load_map(const std::string& path);
void save_map(const PLMap& map, const std::string& path);

// Same grammar as the file format, for in-memory use.
PLMap parse_map(const std::string& text, const std::string& source = "<memory>");
std::string format_map(const PLMap& map);

struct GaussianSliceFit {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
  double baseline = 0.0;
  double amplitude_error = 0.0;
  double center_error = 0.0;
  double fwhm_error = 0.0;
  double baseline_error = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

// baseline + A exp(-4 ln2 (x - x0)^2 / w^2)
double gaussian_profile(double x, double amplitude, double center, double fwhm,
                        double baseline);

struct SliceInit {
  double amplitude = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
  double baseline = 0.0;
};

GaussianSliceFit fit_gaussian(const std::vector<double>& x, const std::vector<double>& y,
                              const SliceInit* init = nullptr);

// Extracts the line along `axis` through the grid indices `at` (the entry for
// `axis` itself is ignored) and fits it.
std::vector<double> slice_values(const PLMap& map, int axis, const std::vector<std::size_t>& at);
GaussianSliceFit fit_gaussian_slice(const PLMap& map, int axis,
                                    const std::vector<std::size_t>& at);

struct PsfModel {
  double w_x = 0.45;
  double w_y = 0.45;
  double w_z = 2.0;

  void validate() const;
  bool is_default() const;
};

enum class DensityMethod { Gaussian, Uniform };

struct DensityEstimate {
  double number_density = 0.0;  // NV per µm^3
  double ppb = 0.0;
  DensityMethod method = DensityMethod::Gaussian;
  double effective_volume = 0.0;  // µm^3
};

// sqrt(pi / (4 ln 2)) w: the integral of a unit-height Gaussian of FWHM w.
double gaussian_integral_width(double fwhm);
double effective_volume(const PsfModel& psf, DensityMethod method);

DensityEstimate estimate_density(double c_ensemble, double c_single, const PsfModel& psf,
                                 DensityMethod method);

double enhancement_ratio(double region_a, double region_b);

double density_to_ppb(double per_um3);
double ppb_to_density(double ppb);

}  // namespace nvkit::confocal
