#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "resnet_limits/config.hpp"
#include "resnet_limits/errors.hpp"
#include "resnet_limits/theory.hpp"

namespace resnet_limits {

/// Uniform abscissa x_min, x_min + step, ..., up to x_max (inclusive after
/// rounding to a whole number of steps).
struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;
  double step = 0.01;

  std::size_t size() const {
    return static_cast<std::size_t>(std::llround((x_max - x_min) / step)) + 1;
  }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * step; }

  void validate() const {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
      throw ValidationError("grid needs finite x_min < x_max");
    }
    if (!std::isfinite(step) || !(step > 0.0)) throw ValidationError("grid step must be positive");
    if ((x_max - x_min) / step > 5e7) throw ValidationError("grid has too many points");
  }
};

struct DensityGrid {
  double x_min = 0.0;
  double step = 0.01;
  std::vector<double> values;

  double x(std::size_t i) const { return x_min + static_cast<double>(i) * step; }
  double x_max() const { return values.empty() ? x_min : x(values.size() - 1); }
  GridSpec spec() const { return {x_min, x_max(), step}; }

  double integral() const {
    if (values.size() < 2) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return step * (s - 0.5 * (values.front() + values.back()));
  }

  // Moments of the tabulated distribution (trapezoid weights).
  double mean() const { return moment_about(0.0, 1) / integral(); }
  double variance() const { return moment_about(mean(), 2) / integral(); }

  void write_csv(std::ostream& os, int digits = 17) const {
    const auto old = os.precision(digits);
    os << "x,density\n";
    for (std::size_t i = 0; i < values.size(); ++i) os << x(i) << ',' << values[i] << '\n';
    os.precision(old);
  }

 private:
  double moment_about(double c, int p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double w = (i == 0 || i + 1 == values.size()) ? 0.5 : 1.0;
      s += w * values[i] * std::pow(x(i) - c, p);
    }
    return s * step;
  }
};

namespace detail {

inline double log_chi2_log_pdf(double k, double x) {
  return 0.5 * k * x - 0.5 * std::exp(x) - 0.5 * k * std::numbers::ln2 - std::lgamma(0.5 * k);
}

inline void require_mass(const DensityGrid& g, const char* what) {
  const double mass = g.integral();
  if (!(mass >= 0.999)) {
    throw GridTooNarrowError(std::string(what) + ": grid holds only " + std::to_string(mass) +
                             " of the probability mass");
  }
}

}  // namespace detail

/// E[ln chi^2_k] = psi(k/2) + ln 2 and Var = psi'(k/2).
inline double log_chi2_mean(std::size_t k) {
  return boost::math::digamma(0.5 * static_cast<double>(k)) + std::numbers::ln2;
}
inline double log_chi2_variance(std::size_t k) {
  return boost::math::trigamma(0.5 * static_cast<double>(k));
}

/// Density of ln chi^2_k on the grid.
inline DensityGrid log_chi2_density(std::size_t k, const GridSpec& spec) {
  if (k < 1) throw ValidationError("log_chi2_density needs k >= 1");
  spec.validate();
  DensityGrid g{spec.x_min, spec.step, std::vector<double>(spec.size())};
  const double kd = static_cast<double>(k);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = std::exp(detail::log_chi2_log_pdf(kd, g.x(i)));
  }
  detail::require_mass(g, "log_chi2_density");
  return g;
}

/// Grid centred on the predicted law of ln|z_out|^2, +-10 total standard
/// deviations, step 0.01.
inline GridSpec default_grid(const TheoryPrediction& pred, std::size_t n_out,
                             double norm_x_sq_over_nin, double step = 0.01) {
  const double mu = pred.mean_G + std::log(norm_x_sq_over_nin) + pred.prefactor_log +
                    log_chi2_mean(n_out);
  const double sd = std::sqrt(pred.var_G + log_chi2_variance(n_out));
  const double lo = std::floor((mu - 10.0 * sd) / step) * step;
  const double hi = std::ceil((mu + 10.0 * sd) / step) * step;
  return {lo, hi, step};
}

/// Law of ln|z_out|^2 under the log-Gaussian limit: Normal(mean_G +
/// ln(|x|^2/n_in) + prefactor, var_G) convolved with ln chi^2_{n_out}.
/// The Gaussian factor is discretized on the grid step (cell probabilities)
/// and summed directly against the closed-form log-chi-square density.
inline DensityGrid predicted_logout_density(const NetConfig& config, const TheoryPrediction& pred,
                                            double norm_x_sq_over_nin, const GridSpec& spec) {
  config.validate();
  spec.validate();
  if (!(pred.var_G > 0.0)) throw ValidationError("predicted density needs var_G > 0");
  if (!(norm_x_sq_over_nin > 0.0)) throw ValidationError("input norm must be positive");
  const double mu = pred.mean_G + std::log(norm_x_sq_over_nin) + pred.prefactor_log;
  const double sd = std::sqrt(pred.var_G);
  const double h = spec.step;
  const auto half = static_cast<long>(std::ceil(10.0 * sd / h)) + 1;

  std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
  const double inv = 1.0 / (sd * std::numbers::sqrt2);
  double wsum = 0.0;
  for (long j = -half; j <= half; ++j) {
    const double a = (static_cast<double>(j) - 0.5) * h * inv;
    const double b = (static_cast<double>(j) + 0.5) * h * inv;
    const double p = 0.5 * (std::erfc(a) - std::erfc(b));
    w[static_cast<std::size_t>(j + half)] = p;
    wsum += p;
  }

  const double k = static_cast<double>(config.n_out);
  DensityGrid g{spec.x_min, spec.step, std::vector<double>(spec.size(), 0.0)};
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const double y = g.x(i) - mu;
    double acc = 0.0;
    for (long j = -half; j <= half; ++j) {
      const double lp = detail::log_chi2_log_pdf(k, y - static_cast<double>(j) * h);
      if (lp > -745.0) acc += w[static_cast<std::size_t>(j + half)] * std::exp(lp);
    }
    g.values[i] = acc / wsum;
  }
  detail::require_mass(g, "predicted_logout_density");
  const double mass = g.integral();
  for (double& v : g.values) v /= mass;
  return g;
}

/// Infinite-width (Gaussian process) law of ln|z_out|^2 at unit input:
/// |z_out|^2 ~ chi^2_{n_out}/n_in.
inline DensityGrid infinite_width_logout_density(std::size_t n_in, std::size_t n_out,
                                                 const GridSpec& spec) {
  if (n_in < 1 || n_out < 1) throw ValidationError("n_in and n_out must be positive");
  spec.validate();
  const double k = static_cast<double>(n_out);
  const double shift = std::log(static_cast<double>(n_in));
  DensityGrid g{spec.x_min, spec.step, std::vector<double>(spec.size())};
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = std::exp(detail::log_chi2_log_pdf(k, g.x(i) + shift));
  }
  detail::require_mass(g, "infinite_width_logout_density");
  return g;
}

/// Bin-centred histogram on the grid points (bin width = step), normalized
/// by the total sample count.
inline DensityGrid histogram(std::span<const double> samples, const GridSpec& spec) {
  spec.validate();
  if (samples.size() < 100) throw InsufficientDataError("histogram needs at least 100 samples");
  DensityGrid g{spec.x_min, spec.step, std::vector<double>(spec.size(), 0.0)};
  for (double s : samples) {
    const double pos = std::floor((s - spec.x_min) / spec.step + 0.5);
    if (pos < 0.0 || pos >= static_cast<double>(g.values.size())) continue;
    g.values[static_cast<std::size_t>(pos)] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(samples.size()) * spec.step);
  for (double& v : g.values) v *= norm;
  return g;
}

/// Integrated absolute deviation between the empirical law of `samples`
/// and a tabulated density, on bins of width bin_steps * step starting at
/// the grid's left edge: sum over bins of |P_emp - P_density|, plus the
/// empirical mass falling outside the grid.
inline double binned_iad(std::span<const double> samples, const DensityGrid& density,
                         std::size_t bin_steps) {
  if (samples.empty()) throw InsufficientDataError("binned_iad needs samples");
  if (bin_steps < 1 || density.values.size() < 2) throw ValidationError("binned_iad: bad bins");
  const std::size_t cells = density.values.size() - 1;
  const std::size_t bins = (cells + bin_steps - 1) / bin_steps;
  std::vector<double> pred(bins, 0.0), emp(bins, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    pred[c / bin_steps] += 0.5 * (density.values[c] + density.values[c + 1]) * density.step;
  }
  const double width = density.step * static_cast<double>(bin_steps);
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double outside = 0.0;
  for (double s : samples) {
    const double pos = (s - density.x_min) / width;
    if (!(pos >= 0.0) || s > density.x_max()) {
      outside += inv_n;
      continue;
    }
    emp[std::min(bins - 1, static_cast<std::size_t>(pos))] += inv_n;
  }
  double iad = outside;
  for (std::size_t b = 0; b < bins; ++b) iad += std::abs(emp[b] - pred[b]);
  return iad;
}

/// Integrated absolute difference of two densities on the same grid.
inline double integrated_abs_difference(const DensityGrid& a, const DensityGrid& b) {
  if (a.values.size() != b.values.size() || a.step != b.step || a.x_min != b.x_min) {
    throw ValidationError("densities live on different grids");
  }
  DensityGrid diff{a.x_min, a.step, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < a.values.size(); ++i) diff.values[i] = std::abs(a.values[i] - b.values[i]);
  return diff.integral();
}

}  // namespace resnet_limits
