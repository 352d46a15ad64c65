#include "odmr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "lm.hpp"
#include "random.hpp"

namespace nvkit::odmr {

double default_fwhm(Mode mode) {
  return mode == Mode::Cw ? kCwFwhm : kPulsedFwhm;
}

void OdmrSpectrum::validate() const {
  require(freqs.size() == signal.size() && freqs.size() == sigma.size(),
          "spectrum arrays must have equal lengths");
  require(freqs.size() >= 8, "spectrum needs at least 8 points");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    require(std::isfinite(freqs[i]) && std::isfinite(signal[i]) &&
                std::isfinite(sigma[i]) && sigma[i] >= 0.0,
            "spectrum has non-finite or negative-sigma entries");
    if (i > 0) require(freqs[i] > freqs[i - 1], "spectrum frequencies must be strictly increasing");
  }
}

double LineShapeModel::evaluate(double freq) const {
  double value = baseline;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double half = 0.5 * fwhms[k];
    const double d = freq - centers[k];
    value -= contrasts[k] * half * half / (d * d + half * half);
  }
  return value;
}

void LineShapeModel::validate() const {
  require(contrasts.size() == centers.size() && fwhms.size() == centers.size(),
          "line shape arrays must have equal lengths");
  for (std::size_t k = 0; k < centers.size(); ++k) {
    require(std::isfinite(centers[k]), "line centers must be finite");
    require(contrasts[k] >= 0.0 && contrasts[k] < 1.0, "contrasts must be in [0, 1)");
    require(fwhms[k] > 0.0, "line widths must be positive");
  }
}

namespace {

void append_orientation(LineShapeModel& model, const spin::SpinSystem& system,
                        const spin::FieldEnvironment& env,
                        const SynthesisOptions& options, double weight,
                        double fwhm) {
  const auto lines = spin::transitions(system, env);
  if (lines.empty()) return;
  double total = 0.0;
  double centroid = 0.0;
  for (const auto& t : lines) {
    total += t.strength;
    centroid += t.strength * t.frequency;
  }
  centroid /= total;
  for (const auto& t : lines) {
    double c = options.contrast * t.strength * weight;
    if (t.frequency < centroid) c *= options.lower_branch_weight;
    model.centers.push_back(t.frequency);
    model.contrasts.push_back(c);
    model.fwhms.push_back(fwhm);
  }
}

}  // namespace

LineShapeModel dip_model(const spin::SpinSystem& system,
                         const spin::FieldEnvironment& env,
                         const SynthesisOptions& options) {
  const double fwhm = options.fwhm > 0.0 ? options.fwhm : default_fwhm(options.mode);
  require(std::isfinite(fwhm), "line width must be finite");
  require(options.contrast >= 0.0 && options.contrast < 1.0, "contrast must be in [0, 1)");
  require(options.lower_branch_weight >= 0.0, "branch weight must be non-negative");

  LineShapeModel model;
  model.baseline = options.baseline;
  if (options.ensemble) {
    for (const auto& orientation : spin::NvOrientation::all()) {
      spin::SpinSystem copy = system;
      copy.orientation = orientation;
      append_orientation(model, copy, env, options, 0.25, fwhm);
    }
  } else {
    append_orientation(model, system, env, options, 1.0, fwhm);
  }
  return model;
}

void apply_noise(OdmrSpectrum& spectrum, const NoiseSpec& noise) {
  NoiseSource rng(noise.seed);
  switch (noise.kind) {
    case NoiseSpec::Kind::None:
      return;
    case NoiseSpec::Kind::Gaussian:
      require(noise.sigma >= 0.0, "noise sigma must be non-negative");
      for (std::size_t i = 0; i < spectrum.size(); ++i) {
        spectrum.signal[i] = rng.normal(spectrum.signal[i], noise.sigma);
        spectrum.sigma[i] = noise.sigma;
      }
      return;
    case NoiseSpec::Kind::Poisson:
      require(noise.counts_per_point > 0.0, "counts per point must be positive");
      for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double mean = noise.counts_per_point * std::max(spectrum.signal[i], 0.0);
        const auto k = rng.poisson(mean);
        spectrum.signal[i] = static_cast<double>(k) / noise.counts_per_point;
        spectrum.sigma[i] = std::sqrt(std::max(mean, 1.0)) / noise.counts_per_point;
      }
      return;
  }
}

OdmrSpectrum synthesize_spectrum(const spin::SpinSystem& system,
                                 const spin::FieldEnvironment& env,
                                 const SynthesisOptions& options,
                                 std::span<const double> grid) {
  require(!grid.empty(), "synthesize_spectrum: empty frequency grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i] > grid[i - 1], "synthesize_spectrum: grid must be strictly increasing");

  const LineShapeModel model = dip_model(system, env, options);
  OdmrSpectrum out;
  out.mode = options.mode;
  out.freqs.assign(grid.begin(), grid.end());
  out.signal.resize(grid.size());
  out.sigma.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) out.signal[i] = model.evaluate(grid[i]);
  apply_noise(out, options.noise);
  return out;
}

std::vector<double> seed_centers(const OdmrSpectrum& spectrum, int n_dips) {
  const std::size_t n = spectrum.size();
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(n - 1, i + 2);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += spectrum.signal[j];
    smooth[i] = sum / static_cast<double>(hi - lo + 1);
  }

  // A minimum must be the lowest point within half a preset linewidth on
  // either side, so noise ripples at the bottom of one dip do not count twice.
  const double reach = 0.5 * default_fwhm(spectrum.mode);
  std::vector<std::size_t> minima;
  for (std::size_t i = 0; i < n; ++i) {
    bool lowest = true;
    for (std::size_t j = i; j-- > 0 && spectrum.freqs[i] - spectrum.freqs[j] <= reach;)
      if (smooth[j] <= smooth[i]) lowest = false;
    for (std::size_t j = i + 1; lowest && j < n && spectrum.freqs[j] - spectrum.freqs[i] <= reach; ++j)
      if (smooth[j] < smooth[i]) lowest = false;
    if (lowest) minima.push_back(i);
  }
  auto deeper = [&](std::size_t a, std::size_t b) {
    if (smooth[a] != smooth[b]) return smooth[a] < smooth[b];
    return a < b;
  };
  std::stable_sort(minima.begin(), minima.end(), deeper);

  std::vector<std::size_t> chosen(minima.begin(),
                                  minima.begin() + std::min<std::size_t>(minima.size(), static_cast<std::size_t>(n_dips)));
  // Too few minima: fall back to the deepest remaining points away from the
  // ones already taken.
  if (chosen.size() < static_cast<std::size_t>(n_dips)) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::stable_sort(all.begin(), all.end(), deeper);
    for (std::size_t idx : all) {
      if (chosen.size() >= static_cast<std::size_t>(n_dips)) break;
      const bool near = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
        return (idx > c ? idx - c : c - idx) <= 2;
      });
      if (!near) chosen.push_back(idx);
    }
    for (std::size_t idx : all) {
      if (chosen.size() >= static_cast<std::size_t>(n_dips)) break;
      if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) chosen.push_back(idx);
    }
  }
  std::vector<double> centers;
  for (std::size_t idx : chosen) centers.push_back(spectrum.freqs[idx]);
  std::sort(centers.begin(), centers.end());
  return centers;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

LineShapeModel initial_model(const OdmrSpectrum& spectrum, int n_dips) {
  LineShapeModel init;
  init.centers = seed_centers(spectrum, n_dips);
  // Off-resonance level: upper quartile of the signal.
  std::vector<double> sorted = spectrum.signal;
  std::sort(sorted.begin(), sorted.end());
  init.baseline = sorted[(3 * sorted.size()) / 4];

  const double span = spectrum.freqs.back() - spectrum.freqs.front();
  const double step = span / static_cast<double>(spectrum.size() - 1);
  const double width = std::clamp(default_fwhm(spectrum.mode), 3.0 * step, 0.5 * span);
  for (double c : init.centers) {
    const auto it = std::lower_bound(spectrum.freqs.begin(), spectrum.freqs.end(), c);
    const std::size_t i = static_cast<std::size_t>(it - spectrum.freqs.begin());
    const std::size_t lo = i >= 2 ? i - 2 : 0;
    const std::size_t hi = std::min(spectrum.size() - 1, i + 2);
    std::vector<double> local(spectrum.signal.begin() + static_cast<long>(lo),
                              spectrum.signal.begin() + static_cast<long>(hi) + 1);
    const double depth = (init.baseline - median(local)) / std::max(init.baseline, 1e-12);
    init.contrasts.push_back(std::clamp(depth, 1e-4, 0.9));
    init.fwhms.push_back(width);
  }
  return init;
}

}  // namespace

OdmrFitResult fit_spectrum(const OdmrSpectrum& spectrum, int n_dips,
                           const std::optional<LineShapeModel>& init,
                           double d_reference) {
  require(n_dips >= 1, "fit_spectrum: n_dips must be at least 1");
  spectrum.validate();
  const auto [mn, mx] = std::minmax_element(spectrum.signal.begin(), spectrum.signal.end());
  if (*mx - *mn <= 1e-12 * std::max(1.0, std::fabs(*mx)))
    throw NumericError("fit_spectrum: degenerate (constant) spectrum");

  LineShapeModel start = init ? *init : initial_model(spectrum, n_dips);
  require(start.size() == static_cast<std::size_t>(n_dips),
          "fit_spectrum: initial model must have n_dips lines");
  start.validate();

  const bool weighted = std::all_of(spectrum.sigma.begin(), spectrum.sigma.end(),
                                    [](double s) { return s > 0.0; });
  const double f_lo = spectrum.freqs.front();
  const double f_hi = spectrum.freqs.back();
  const double span = f_hi - f_lo;
  const double step = span / static_cast<double>(spectrum.size() - 1);

  // Parameters: baseline, then (center, contrast, fwhm) per dip.
  std::vector<double> p{start.baseline};
  std::vector<fit::Bounds> bounds{{-10.0, 10.0}};
  for (std::size_t k = 0; k < start.size(); ++k) {
    p.push_back(start.centers[k]);
    p.push_back(start.contrasts[k]);
    p.push_back(start.fwhms[k]);
    bounds.push_back({f_lo, f_hi});
    bounds.push_back({0.0, 0.999});
    bounds.push_back({0.25 * step, 2.0 * span});
  }

  auto residuals = [&](std::span<const double> q, std::span<double> r) {
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      double model = q[0];
      for (std::size_t k = 0; k < static_cast<std::size_t>(n_dips); ++k) {
        const double half = 0.5 * q[3 * k + 3];
        const double d = spectrum.freqs[i] - q[3 * k + 1];
        model -= q[3 * k + 2] * half * half / (d * d + half * half);
      }
      const double w = weighted ? spectrum.sigma[i] : 1.0;
      r[i] = (model - spectrum.signal[i]) / w;
    }
  };
  const fit::LmResult lm = fit::levenberg_marquardt(residuals, spectrum.size(), p, bounds);

  std::vector<std::size_t> order(static_cast<std::size_t>(n_dips));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lm.params[3 * a + 1] < lm.params[3 * b + 1];
  });

  OdmrFitResult out;
  out.model.baseline = lm.params[0];
  out.baseline_error = lm.errors[0];
  for (std::size_t k : order) {
    out.model.centers.push_back(lm.params[3 * k + 1]);
    out.model.contrasts.push_back(lm.params[3 * k + 2]);
    out.model.fwhms.push_back(lm.params[3 * k + 3]);
    out.center_errors.push_back(lm.errors[3 * k + 1]);
    out.contrast_errors.push_back(lm.errors[3 * k + 2]);
    out.fwhm_errors.push_back(lm.errors[3 * k + 3]);
  }
  out.residual_norm = lm.residual_norm;
  out.converged = lm.converged;
  out.iterations = lm.iterations;

  // Lower and upper halves of the sorted dips (the middle dip of an odd
  // count is shared), weighted by Lorentzian area ~ contrast * fwhm.
  auto weighted_center = [&](std::size_t first, std::size_t last) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
      const double area = std::max(out.model.contrasts[k] * out.model.fwhms[k], 1e-300);
      num += area * out.model.centers[k];
      den += area;
    }
    return num / den;
  };
  const std::size_t n = out.model.size();
  out.v_minus = weighted_center(0, (n - 1) / 2);
  out.v_plus = weighted_center(n / 2, n - 1);
  const auto [xi, delta] = invert_shift_splitting(out.v_minus, out.v_plus, d_reference);
  out.d_fit = d_reference;
  out.xi_fit = xi;
  out.delta_fit = delta;
  out.delta_half_separation = 0.5 * (out.v_plus - out.v_minus);
  return out;
}

std::pair<double, double> invert_shift_splitting(double v_minus, double v_plus,
                                                 double d) {
  require(v_plus >= v_minus, "invert_shift_splitting: v_plus must be >= v_minus");
  return {0.5 * (v_plus + v_minus) - d, 0.25 * (v_plus - v_minus)};
}

}  // namespace nvkit::odmr
