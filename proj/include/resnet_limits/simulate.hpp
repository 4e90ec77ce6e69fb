#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resnet_limits/config.hpp"
#include "resnet_limits/errors.hpp"
#include "resnet_limits/parallel.hpp"
#include "resnet_limits/rng.hpp"
#include "resnet_limits/theory.hpp"

namespace resnet_limits {

/// One draw from the norm-chain simulator.
struct ChainSample {
  double g_value = 0.0;
  std::vector<double> act_trace;        // 2|phi(zhat^ell)|^2 for ell = 0..d-1
  std::vector<double> log_norm_ratios;  // ln X_ell = ln(|z^{ell+1}|^2 / |z^ell|^2)
  std::vector<double> active_fraction;  // share of units whose nonlinearity passes
};

/// Pre-activations and masks of one pass through the literal network.
struct ForwardTrace {
  std::vector<std::vector<double>> z_layers;  // z^0 .. z^d
  std::vector<double> z_out;
  std::vector<std::vector<double>> sign_masks;        // Balanced only, +1/-1
  std::vector<std::vector<char>> activation_masks;    // 1 where phi'(z) != 0
};

inline constexpr double kNormUnderflow = 1e-300;
inline constexpr std::uint32_t kMaxAttempts = 64;

namespace detail {

inline double squared_norm(std::span<const double> v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

struct ChainWorkspace {
  std::vector<double> z;
  std::vector<double> g;
  std::vector<double> signs;
};

}  // namespace detail

/// Norm-chain simulator: O(n) work per layer. Each hidden layer replaces
/// W phi(zhat) by |phi(zhat)| g with a fresh Gaussian vector g, which has
/// the same law, and tracks only the unit direction and the log ratios.
inline void forward_chain_into(const NetConfig& config, RngStream& rng,
                               ChainSample& out, detail::ChainWorkspace& ws) {
  const std::size_t n = config.n;
  const std::size_t d = config.d;
  const bool balanced = config.scheme == Scheme::Balanced;
  const double nd = static_cast<double>(n);

  ws.z.resize(n);
  ws.g.resize(n);
  ws.signs.assign(n, 1.0);
  out.act_trace.resize(d);
  out.log_norm_ratios.resize(d);
  out.active_fraction.resize(d);

  rng.fill_normal(ws.z);
  const double z0_sq = detail::squared_norm(ws.z);
  if (!(z0_sq > kNormUnderflow)) throw DegenerateNormError("chain: |z^0| underflow");
  const double inv0 = 1.0 / std::sqrt(z0_sq);
  for (double& v : ws.z) v *= inv0;

  double log_sum = std::log(z0_sq / nd);
  for (std::size_t ell = 0; ell < d; ++ell) {
    const double alpha = config.alphas[ell];
    const double lambda = config.lambdas[ell];
    if (balanced) rng.fill_signs(ws.signs);

    double act_sq = 0.0;
    std::size_t active = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = ws.signs[j] * ws.z[j];
      if (u > 0.0) {
        act_sq += u * u;
        ++active;
      }
    }
    const double scale = lambda * std::sqrt(2.0 * act_sq / nd);
    rng.fill_normal(ws.g);
    double next_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = alpha * ws.z[j] + scale * ws.g[j];
      ws.z[j] = v;
      next_sq += v * v;
    }
    if (!(next_sq > kNormUnderflow) || !std::isfinite(next_sq)) {
      throw DegenerateNormError("chain: direction norm underflow at layer " +
                                std::to_string(ell + 1));
    }
    const double inv = 1.0 / std::sqrt(next_sq);
    for (double& v : ws.z) v *= inv;

    out.act_trace[ell] = 2.0 * act_sq;
    out.active_fraction[ell] = static_cast<double>(active) / nd;
    out.log_norm_ratios[ell] = std::log(next_sq);
    log_sum += out.log_norm_ratios[ell];
  }
  out.g_value = log_sum - prefactor_log(config);
}

inline ChainSample forward_chain(const NetConfig& config, RngStream& rng) {
  config.validate();
  ChainSample out;
  detail::ChainWorkspace ws;
  forward_chain_into(config, rng, out, ws);
  return out;
}

namespace detail {

struct FullPassOptions {
  std::optional<std::size_t> tangent_coordinate;  // also propagate e_i
  bool record = false;
  bool reject_zero_preactivation = false;
};

struct FullPassResult {
  std::vector<double> z_out;
  std::vector<double> tangent_out;
  ForwardTrace trace;
};

// Literal forward pass. Weights are drawn one row at a time in a fixed order
// (W^0, then per layer: signs and W^ell, then W^out), so the weights are a
// function of the stream alone, independent of x.
inline FullPassResult full_pass(const NetConfig& config, std::span<const double> x,
                                RngStream& rng, const FullPassOptions& opt) {
  const std::size_t n = config.n;
  const std::size_t n_in = config.n_in;
  const bool balanced = config.scheme == Scheme::Balanced;
  const bool tangent = opt.tangent_coordinate.has_value();
  const bool zero_input = squared_norm(x) == 0.0;

  FullPassResult res;
  std::vector<double> z(n), z_next(n), t(tangent ? n : 0), t_next(tangent ? n : 0);
  std::vector<double> row(std::max(n, n_in));
  std::vector<double> signs(n, 1.0), phi(n), phi_t(tangent ? n : 0);

  const double in_scale = 1.0 / std::sqrt(static_cast<double>(n_in));
  for (std::size_t r = 0; r < n; ++r) {
    std::span<double> w(row.data(), n_in);
    rng.fill_normal(w);
    z[r] = in_scale * std::inner_product(w.begin(), w.end(), x.begin(), 0.0);
    if (tangent) t[r] = in_scale * w[*opt.tangent_coordinate];
  }
  if (opt.record) res.trace.z_layers.push_back(z);

  const double hidden_scale = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t ell = 0; ell < config.d; ++ell) {
    if (balanced) rng.fill_signs(signs);
    std::vector<char> mask(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (opt.reject_zero_preactivation && z[j] == 0.0) {
        throw ZeroPreactivationError("pre-activation exactly zero at layer " +
                                     std::to_string(ell) + ", unit " + std::to_string(j));
      }
      const double u = signs[j] * z[j];
      mask[j] = u > 0.0;
      phi[j] = mask[j] ? u : 0.0;
      if (tangent) phi_t[j] = mask[j] ? signs[j] * t[j] : 0.0;
    }
    const double alpha = config.alphas[ell];
    const double coef = config.lambdas[ell] * hidden_scale;
    for (std::size_t r = 0; r < n; ++r) {
      std::span<double> w(row.data(), n);
      rng.fill_normal(w);
      double acc = 0.0;
      double acc_t = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        acc += w[j] * phi[j];
        if (tangent) acc_t += w[j] * phi_t[j];
      }
      z_next[r] = alpha * z[r] + coef * acc;
      if (tangent) t_next[r] = alpha * t[r] + coef * acc_t;
    }
    z.swap(z_next);
    if (tangent) t.swap(t_next);
    if (!zero_input && !(squared_norm(z) > kNormUnderflow)) {
      throw DegenerateNormError("full pass: |z^" + std::to_string(ell + 1) +
                                "|^2 underflow");
    }
    if (opt.record) {
      res.trace.z_layers.push_back(z);
      res.trace.activation_masks.push_back(std::move(mask));
      if (balanced) res.trace.sign_masks.push_back(signs);
    }
  }

  const double out_scale = 1.0 / std::sqrt(static_cast<double>(n));
  res.z_out.resize(config.n_out);
  if (tangent) res.tangent_out.resize(config.n_out);
  for (std::size_t r = 0; r < config.n_out; ++r) {
    std::span<double> w(row.data(), n);
    rng.fill_normal(w);
    res.z_out[r] = out_scale * std::inner_product(w.begin(), w.end(), z.begin(), 0.0);
    if (tangent) {
      res.tangent_out[r] = out_scale * std::inner_product(w.begin(), w.end(), t.begin(), 0.0);
    }
  }
  if (opt.record) res.trace.z_out = res.z_out;
  return res;
}

inline void check_input(const NetConfig& config, std::span<const double> x) {
  config.validate();
  if (x.size() != config.n_in) {
    throw ValidationError("input has length " + std::to_string(x.size()) +
                          ", expected n_in = " + std::to_string(config.n_in));
  }
}

}  // namespace detail

/// Literal simulation of the network (weights iid N(0,1); first layer scaled
/// by 1/sqrt(n_in), hidden by sqrt(2/n), output by 1/sqrt(n)).
inline ForwardTrace forward_full(const NetConfig& config, std::span<const double> x,
                                 RngStream& rng) {
  detail::check_input(config, x);
  return detail::full_pass(config, x, rng, {.tangent_coordinate = std::nullopt, .record = true}).trace;
}

/// Output only, without recording the per-layer trace.
inline std::vector<double> forward_output(const NetConfig& config,
                                          std::span<const double> x, RngStream& rng) {
  detail::check_input(config, x);
  return detail::full_pass(config, x, rng, {}).z_out;
}

/// Exact input-output derivative d z_out / d x_i of a Balanced network,
/// propagated through the frozen activation pattern at x. `coordinate` is
/// 0-based.
inline std::vector<double> jacobian_column(const NetConfig& config,
                                           std::span<const double> x,
                                           std::size_t coordinate, RngStream& rng) {
  detail::check_input(config, x);
  if (config.scheme != Scheme::Balanced) {
    throw ValidationError("jacobian_column requires the balanced scheme");
  }
  if (coordinate >= config.n_in) {
    throw ValidationError("jacobian_column: coordinate out of range");
  }
  return detail::full_pass(config, x, rng,
                           {.tangent_coordinate = coordinate,
                            .reject_zero_preactivation = true})
      .tangent_out;
}

namespace detail {

// Runs f(stream) for sample i, redrawing with a fresh attempt index after a
// probability-zero degeneracy. Attempts live in their own counter word, so
// redraws never collide with other samples' streams.
template <class F>
auto with_redraw(const NetConfig& config, std::size_t i, std::atomic<std::size_t>* rejected,
                 F&& f) {
  for (std::uint32_t attempt = 0;; ++attempt) {
    RngStream rng(config.seed, i, attempt);
    try {
      return f(rng);
    } catch (const NumericalError&) {
      if (rejected) rejected->fetch_add(1);
      if (attempt + 1 >= kMaxAttempts) throw;
    }
  }
}

template <class F>
std::vector<double> sample_scalar(const NetConfig& config, std::size_t n_samples,
                                  std::size_t workers, std::atomic<std::size_t>* rejected,
                                  F&& f) {
  std::vector<double> out(n_samples);
  parallel_chunks(n_samples, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = with_redraw(config, i, rejected, f);
    }
  });
  return out;
}

}  // namespace detail

/// n_samples iid draws of G; draw i uses RngStream(seed, i), so the result
/// does not depend on the worker count.
inline std::vector<double> sample_G(const NetConfig& config, std::size_t n_samples,
                                    std::size_t workers = 1) {
  config.validate();
  return detail::sample_scalar(config, n_samples, workers, nullptr, [&](RngStream& rng) {
    ChainSample s;
    detail::ChainWorkspace ws;
    forward_chain_into(config, rng, s, ws);
    return s.g_value;
  });
}

/// ln|z_out|^2 composed from the chain: ln(|x|^2/n_in) + prefactor + G +
/// ln chi^2_{n_out}, the chi-square drawn from the same stream after G.
inline double chain_log_output_norm_sq(const NetConfig& config, double x_norm_sq_over_nin,
                                       RngStream& rng, ChainSample& scratch,
                                       detail::ChainWorkspace& ws) {
  forward_chain_into(config, rng, scratch, ws);
  double chi2 = 0.0;
  for (std::size_t k = 0; k < config.n_out; ++k) {
    const double zk = rng.normal();
    chi2 += zk * zk;
  }
  return std::log(x_norm_sq_over_nin) + prefactor_log(config) + scratch.g_value +
         std::log(chi2);
}

inline std::vector<double> sample_log_output_chain(const NetConfig& config,
                                                   double x_norm_sq_over_nin,
                                                   std::size_t n_samples,
                                                   std::size_t workers = 1) {
  config.validate();
  if (!(x_norm_sq_over_nin > 0.0)) throw ValidationError("input norm must be positive");
  return detail::sample_scalar(config, n_samples, workers, nullptr, [&](RngStream& rng) {
    ChainSample s;
    detail::ChainWorkspace ws;
    return chain_log_output_norm_sq(config, x_norm_sq_over_nin, rng, s, ws);
  });
}

/// ln|z_out|^2 from the literal network at a fixed input x.
inline std::vector<double> sample_log_output_full(const NetConfig& config,
                                                  std::span<const double> x,
                                                  std::size_t n_samples,
                                                  std::size_t workers = 1) {
  detail::check_input(config, x);
  return detail::sample_scalar(config, n_samples, workers, nullptr, [&](RngStream& rng) {
    const auto out = detail::full_pass(config, x, rng, {}).z_out;
    return std::log(detail::squared_norm(out));
  });
}

struct JacobianSamples {
  std::vector<double> sq_norms;
  std::size_t rejected = 0;
};

/// |d z_out / d x_i|^2 over independent networks; networks with an exactly
/// zero pre-activation are redrawn and counted.
inline JacobianSamples sample_jacobian_sq_norms(const NetConfig& config,
                                                std::span<const double> x,
                                                std::size_t coordinate,
                                                std::size_t n_samples,
                                                std::size_t workers = 1) {
  detail::check_input(config, x);
  std::atomic<std::size_t> rejected{0};
  JacobianSamples res;
  res.sq_norms = detail::sample_scalar(config, n_samples, workers, &rejected,
                                       [&](RngStream& rng) {
                                         return detail::squared_norm(
                                             jacobian_column(config, x, coordinate, rng));
                                       });
  res.rejected = rejected.load();
  return res;
}

}  // namespace resnet_limits
