#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "resnet_limits/config.hpp"
#include "resnet_limits/errors.hpp"

namespace resnet_limits {

/// Closed-form infinite-depth-and-width predictions for the log-norm
/// correction G, where z_out = |x|/sqrt(n_in) * prod sqrt(a^2+l^2) *
/// exp(G/2) * Z with Z standard Gaussian and independent of G.
struct TheoryPrediction {
  double mean_G = 0.0;
  double var_G = 0.0;
  double beta = 0.0;
  double c = std::numeric_limits<double>::quiet_NaN();  // constant configs only
  double h_total = 0.0;
  double i_total = 0.0;
  double prefactor_log = 0.0;  // sum over layers of ln(alpha^2 + lambda^2)
};

struct HypoConstant {
  enum class Source { PaperDefault, Estimated };

  double value = 0.0;
  Source source = Source::Estimated;
  double std_error = 0.0;

  // The published constant for alpha = lambda = 1/sqrt(2), obtained by
  // Monte Carlo at n = d = 150.
  static HypoConstant paper_default() { return {-0.876, Source::PaperDefault, 0.0}; }

  static HypoConstant estimated(double value, double std_error) {
    return {value, Source::Estimated, std_error};
  }
};

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

inline bool is_canonical_sqrt_half(const NetConfig& config) {
  constexpr double tol = 1e-6;
  for (std::size_t i = 0; i < config.d; ++i) {
    if (std::abs(config.alphas[i] - kInvSqrt2) > tol ||
        std::abs(config.lambdas[i] - kInvSqrt2) > tol) {
      return false;
    }
  }
  return true;
}

inline bool is_fully_connected(const NetConfig& config) {
  for (double a : config.alphas) {
    if (a != 0.0) return false;
  }
  return true;
}

// Per-layer direction-cosine factor alpha/sqrt(alpha^2 + lambda^2).
inline double cos_factor(double alpha, double lambda) {
  return alpha / std::sqrt(alpha * alpha + lambda * lambda);
}

}  // namespace detail

/// Degree-2 arc-cosine kernel, normalized so that j2_bar(0) = 3.
inline double j2_bar(double theta) {
  using std::numbers::pi;
  if (!std::isfinite(theta) || theta < 0.0 || theta > pi) {
    throw std::domain_error("j2_bar: theta must lie in [0, pi]");
  }
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return 3.0 * s * c / pi + (1.0 - theta / pi) * (1.0 + 2.0 * c * c);
}

// Covariance kernel of doubled activation-norm squares at angle theta,
// scaled by n: J2(theta) - J2(pi - theta).
inline double j2_covariance_kernel(double theta) {
  return j2_bar(theta) - j2_bar(std::numbers::pi - theta);
}

/// Angle between the directions of hidden layers ell and ell_prime
/// (1 <= ell < ell_prime <= d), with cosine equal to the product of
/// alpha_i/sqrt(alpha_i^2 + lambda_i^2) over i = ell .. ell_prime - 1.
inline double lag_angle(const NetConfig& config, std::size_t ell,
                        std::size_t ell_prime) {
  if (ell < 1 || ell >= ell_prime || ell_prime > config.d) {
    throw std::out_of_range("lag_angle: need 1 <= ell < ell_prime <= d");
  }
  double cosine = 1.0;
  for (std::size_t i = ell; i < ell_prime; ++i) {
    cosine *= detail::cos_factor(config.alphas[i - 1], config.lambdas[i - 1]);
  }
  constexpr double tol = 1e-12;
  if (std::abs(cosine) > 1.0 + tol) {
    throw std::domain_error("lag_angle: cosine product exceeds 1");
  }
  return std::acos(std::clamp(cosine, -1.0, 1.0));
}

struct BetaC {
  double beta = 0.0;
  // Scalar mixing weight lambda^2/(alpha^2 + lambda^2); NaN unless the
  // network has constant coefficients and d > 0.
  double c = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> c_per_layer;
};

inline BetaC beta_and_c(const NetConfig& config) {
  config.validate();
  BetaC out;
  const double n = static_cast<double>(config.n);
  double sum = 0.0;
  out.c_per_layer.reserve(config.d);
  for (std::size_t i = 0; i < config.d; ++i) {
    const double a2 = config.alphas[i] * config.alphas[i];
    const double l2 = config.lambdas[i] * config.lambdas[i];
    const double s = a2 + l2;
    sum += (5.0 * l2 * l2 + 4.0 * a2 * l2) / (s * s);
    out.c_per_layer.push_back(l2 / s);
  }
  out.beta = 2.0 / n + sum / n;
  if (config.d > 0 && config.is_constant()) out.c = out.c_per_layer.front();
  return out;
}

namespace detail {

// Weighted interlayer sums over ordered pairs ell != ell', each term
// w_ell * w_ell' * (J2(theta) - J2(pi - theta)) / n. With unit weights this
// is I_total; with weights c_ell it is the variance correction.
inline constexpr double kLagSumCutoff = 1e-16;

// Constant coefficients: 2(d - k) ordered pairs share each lag k.
inline double interlayer_lag_sum(const NetConfig& config, double weight) {
  const std::size_t d = config.d;
  if (d < 2 || is_fully_connected(config)) return 0.0;
  const double rho = cos_factor(config.alphas[0], config.lambdas[0]);
  double cosine = 1.0;
  double total = 0.0;
  for (std::size_t k = 1; k < d; ++k) {
    cosine *= rho;
    const double term =
        2.0 * static_cast<double>(d - k) * j2_covariance_kernel(std::acos(cosine));
    total += term;
    if (term == 0.0 || std::abs(term) < kLagSumCutoff * std::abs(total)) break;
  }
  return weight * weight * total / static_cast<double>(config.n);
}

// Any coefficients: row by row, with the cosine built up as a running product.
inline double interlayer_pairwise_sum(const NetConfig& config, std::span<const double> weights) {
  const std::size_t d = config.d;
  if (d < 2 || is_fully_connected(config)) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    double cosine = 1.0;
    double row = 0.0;
    for (std::size_t j = i + 1; j < d; ++j) {
      cosine *= cos_factor(config.alphas[j - 1], config.lambdas[j - 1]);
      const double wij = weights.empty() ? 1.0 : weights[i] * weights[j];
      const double term =
          2.0 * wij * j2_covariance_kernel(std::acos(std::clamp(cosine, -1.0, 1.0)));
      row += term;
      if (term == 0.0 || std::abs(term) < kLagSumCutoff * std::abs(row)) break;
    }
    total += row;
  }
  return total / static_cast<double>(config.n);
}

inline double weighted_interlayer_sum(const NetConfig& config,
                                      std::span<const double> weights) {
  if (config.is_constant()) {
    return interlayer_lag_sum(config, weights.empty() ? 1.0 : weights[0]);
  }
  return interlayer_pairwise_sum(config, weights);
}

}  // namespace detail

/// Total interlayer covariance correction I_total (leading order in 1/n).
inline double interlayer_total(const NetConfig& config) {
  config.validate();
  return detail::weighted_interlayer_sum(config, {});
}

/// Total hypoactivation h_total = C * d / n. Identically zero for Balanced
/// networks and for fully connected (alpha = 0) networks.
inline double hypoactivation_total(const NetConfig& config, const HypoConstant& C) {
  config.validate();
  if (config.scheme == Scheme::Balanced) return 0.0;
  if (C.source == HypoConstant::Source::PaperDefault &&
      !detail::is_canonical_sqrt_half(config)) {
    throw ValidationError(
        "the published hypoactivation constant only applies to "
        "alpha = lambda = 1/sqrt2; estimate C for this configuration");
  }
  if (detail::is_fully_connected(config)) return 0.0;
  return C.value * static_cast<double>(config.d) / static_cast<double>(config.n);
}

inline double prefactor_log(const NetConfig& config) {
  double p = 0.0;
  for (std::size_t i = 0; i < config.d; ++i) {
    p += std::log(config.alphas[i] * config.alphas[i] +
                  config.lambdas[i] * config.lambdas[i]);
  }
  return p;
}

namespace detail {

inline TheoryPrediction predict_with_hypo(const NetConfig& config,
                                          std::span<const double> h_per_layer) {
  const BetaC bc = beta_and_c(config);
  TheoryPrediction p;
  p.beta = bc.beta;
  p.c = bc.c;
  p.prefactor_log = prefactor_log(config);
  p.mean_G = -bc.beta / 2.0;
  p.var_G = bc.beta;
  if (config.scheme == Scheme::Balanced) return p;

  double h_total = 0.0;
  double mean_shift = 0.0;
  for (std::size_t i = 0; i < config.d; ++i) {
    h_total += h_per_layer[i];
    mean_shift += 2.0 * bc.c_per_layer[i] * h_per_layer[i];
  }
  p.h_total = h_total;
  p.i_total = weighted_interlayer_sum(config, {});
  p.mean_G += mean_shift;
  p.var_G += weighted_interlayer_sum(config, bc.c_per_layer);
  return p;
}

}  // namespace detail

/// Log-Gaussian prediction for G. For Vanilla networks the hypoactivation
/// enters through C, spread uniformly as h_ell = C/n on every layer.
inline TheoryPrediction predict_G(const NetConfig& config, const HypoConstant& C) {
  config.validate();
  if (config.scheme == Scheme::Balanced) return detail::predict_with_hypo(config, {});
  const double h_total = hypoactivation_total(config, C);
  const std::vector<double> h(config.d, config.d ? h_total / config.d : 0.0);
  return detail::predict_with_hypo(config, h);
}

/// Prediction for G from per-layer hypoactivation estimates; h_per_layer[i]
/// belongs to the direction entering hidden layer i + 1.
inline TheoryPrediction predict_G(const NetConfig& config,
                                  std::span<const double> h_per_layer) {
  config.validate();
  if (config.scheme == Scheme::Vanilla && h_per_layer.size() != config.d) {
    throw ValidationError("predict_G: need one hypoactivation value per layer");
  }
  if (config.scheme == Scheme::Vanilla && detail::is_fully_connected(config)) {
    return detail::predict_with_hypo(config, std::vector<double>(config.d, 0.0));
  }
  return detail::predict_with_hypo(config, h_per_layer);
}

/// Moments of a squared output coordinate at |x|^2 = n_in, kept in log space.
struct OutputStats {
  double log_mean_sq = 0.0;
  double log_var_sq = 0.0;
  double corr_sq = 0.0;

  double mean_sq() const { return std::exp(log_mean_sq); }
  double var_sq() const { return std::exp(log_var_sq); }
};

/// Correlation of two squared output coordinates sharing the factor exp(G)
/// with Var(G) = sigma2.
inline double output_sq_correlation_theory(double sigma2) {
  if (!(sigma2 >= 0.0)) throw ValidationError("variance of G must be non-negative");
  if (std::isinf(sigma2)) return 1.0 / 3.0;
  const double e = std::expm1(sigma2);
  return e / (3.0 * e + 2.0);
}

inline OutputStats predict_output_stats(const NetConfig& config,
                                        const TheoryPrediction& pred,
                                        double log_bound = 700.0) {
  config.validate();
  if (std::abs(pred.prefactor_log) > log_bound) {
    throw NumericalError("output moments overflow: |sum ln(alpha^2+lambda^2)| = " +
                         std::to_string(std::abs(pred.prefactor_log)) +
                         " exceeds the bound " + std::to_string(log_bound));
  }
  if (!(pred.var_G >= 0.0)) throw ValidationError("prediction has negative var_G");
  OutputStats out;
  const double mu = pred.mean_G;
  const double s2 = pred.var_G;
  // E[exp(G)] = exp(mu + s2/2); E[Z^4] = 3.
  out.log_mean_sq = pred.prefactor_log + (mu + s2 / 2.0);
  out.log_var_sq = 2.0 * pred.prefactor_log + (2.0 * mu + s2) +
                   std::log(3.0 * std::expm1(s2) + 2.0);
  out.corr_sq = output_sq_correlation_theory(s2);
  return out;
}

/// Exact moments for a direction u uniform on the unit sphere S^{n-1}.
struct SphereMoments {
  double mean_act = 1.0;   // E[2|relu(u)|^2]
  double var_act = 0.0;    // Var[2|relu(u)|^2]
  double coord_moment = 1.0;  // E[(sqrt(n) u_i)^{2p}]
};

inline SphereMoments sphere_oracles(std::size_t n, std::size_t p) {
  if (n < 2 || p < 1) throw ValidationError("sphere_oracles: need n >= 2 and p >= 1");
  const double nd = static_cast<double>(n);
  SphereMoments m;
  m.mean_act = 1.0;
  m.var_act = 3.0 / (nd + 2.0);
  if (p <= 10) {
    double df = 1.0;
    double denom = 1.0;
    for (std::size_t j = 1; j <= p; ++j) df *= static_cast<double>(2 * j - 1);
    for (std::size_t j = 1; j < p; ++j) denom *= 1.0 + 2.0 * static_cast<double>(j) / nd;
    m.coord_moment = df / denom;
  } else {
    double log_m = 0.0;
    for (std::size_t j = 1; j <= p; ++j) log_m += std::log(static_cast<double>(2 * j - 1));
    for (std::size_t j = 1; j < p; ++j) log_m -= std::log1p(2.0 * static_cast<double>(j) / nd);
    m.coord_moment = std::exp(log_m);
  }
  return m;
}

}  // namespace resnet_limits
