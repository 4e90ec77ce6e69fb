#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resnet_limits/config.hpp"
#include "resnet_limits/errors.hpp"
#include "resnet_limits/parallel.hpp"
#include "resnet_limits/rng.hpp"
#include "resnet_limits/simulate.hpp"
#include "resnet_limits/theory.hpp"

namespace resnet_limits {

inline constexpr double kZ95 = 1.959963984540054;

/// Streaming moments up to fourth order (Welford/Pebay), mergeable.
struct MomentSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations
  double m3 = 0.0;
  double m4 = 0.0;

  void add(double x) { merge(MomentSummary{1, x, 0.0, 0.0, 0.0}); }

  void merge(const MomentSummary& b) {
    if (b.count == 0) return;
    if (count == 0) {
      *this = b;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(b.count);
    const double n = na + nb;
    const double delta = b.mean - mean;
    const double d2 = delta * delta;
    const double new_m4 = m4 + b.m4 +
                          d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                          6.0 * d2 * (na * na * b.m2 + nb * nb * m2) / (n * n) +
                          4.0 * delta * (na * b.m3 - nb * m3) / n;
    const double new_m3 = m3 + b.m3 + d2 * delta * na * nb * (na - nb) / (n * n) +
                          3.0 * delta * (na * b.m2 - nb * m2) / n;
    m2 += b.m2 + d2 * na * nb / n;
    m3 = new_m3;
    m4 = new_m4;
    mean += delta * nb / n;
    count += b.count;
  }

  double variance() const {
    if (count < 2) throw InsufficientDataError("variance needs at least 2 samples");
    return m2 / static_cast<double>(count - 1);
  }
  double std_error() const { return std::sqrt(variance() / static_cast<double>(count)); }
  double ci_half_width() const { return kZ95 * std_error(); }

  // Delta-method standard error of the sample variance:
  // Var(s^2) ~ (mu4 - sigma^4 (n-3)/(n-1)) / n.
  double variance_std_error() const {
    const double s2 = variance();
    const double n = static_cast<double>(count);
    const double mu4 = m4 / n;
    const double v = (mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
    return std::sqrt(std::max(v, 0.0));
  }
  double variance_ci_half_width() const { return kZ95 * variance_std_error(); }
};

inline MomentSummary summarize(std::span<const double> samples) {
  MomentSummary s;
  for (double x : samples) s.add(x);
  if (s.count < 2) throw InsufficientDataError("summarize needs at least 2 samples");
  return s;
}

/// Streaming co-moment of a pair of variables.
struct CoMoment {
  std::size_t count = 0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double m2x = 0.0;
  double m2y = 0.0;
  double cxy = 0.0;

  void add(double x, double y) {
    ++count;
    const double n = static_cast<double>(count);
    const double dx = x - mean_x;
    const double dy = y - mean_y;
    mean_x += dx / n;
    mean_y += dy / n;
    m2x += dx * (x - mean_x);
    m2y += dy * (y - mean_y);
    cxy += dx * (y - mean_y);
  }

  void merge(const CoMoment& b) {
    if (b.count == 0) return;
    if (count == 0) {
      *this = b;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(b.count);
    const double n = na + nb;
    const double dx = b.mean_x - mean_x;
    const double dy = b.mean_y - mean_y;
    m2x += b.m2x + dx * dx * na * nb / n;
    m2y += b.m2y + dy * dy * na * nb / n;
    cxy += b.cxy + dx * dy * na * nb / n;
    mean_x += dx * nb / n;
    mean_y += dy * nb / n;
    count += b.count;
  }

  double covariance() const {
    if (count < 2) throw InsufficientDataError("covariance needs at least 2 samples");
    return cxy / static_cast<double>(count - 1);
  }
  double correlation() const {
    if (count < 2) throw InsufficientDataError("correlation needs at least 2 samples");
    const double den = std::sqrt(m2x * m2y);
    return den > 0.0 ? cxy / den : 0.0;
  }
};

/// Mean and standard error of a statistic from batch means: `parts` are
/// consecutive chunk accumulators, regrouped into at most `batches` groups.
template <class Acc, class Stat>
std::pair<double, double> batch_means(const std::vector<Acc>& parts, Stat&& stat,
                                      std::size_t batches = 32) {
  if (parts.size() < 2) throw InsufficientDataError("batch means need at least 2 chunks");
  batches = std::min(batches, parts.size());
  MomentSummary over;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * parts.size() / batches;
    const std::size_t hi = (b + 1) * parts.size() / batches;
    Acc acc = parts[lo];
    for (std::size_t i = lo + 1; i < hi; ++i) acc.merge(parts[i]);
    over.add(stat(acc));
  }
  return {over.mean, over.std_error()};
}

// ---------------------------------------------------------------------------
// Chain statistics

/// First layer index (0-based, into act_trace) of the pooled deep range
/// ell > d/5.
inline std::size_t deep_pool_start(std::size_t d) {
  const std::size_t p = d / 5 + 1;
  return p < d ? p : 0;
}

/// Everything the estimators need from a stream of chain samples.
class ChainAccumulator {
 public:
  ChainAccumulator() = default;
  ChainAccumulator(const NetConfig& config, std::size_t max_lag)
      : n_(config.n), d_(config.d), max_lag_(std::min(max_lag, config.d ? config.d - 1 : 0)),
        pool_from_(deep_pool_start(config.d)), act_(config.d), lag_(max_lag_) {
    c_per_layer_ = beta_and_c(config).c_per_layer;
    for (std::size_t k = 1; k <= max_lag_; ++k) lag_[k - 1].resize(d_ - k);
  }

  void add(const ChainSample& s) {
    g_.add(s.g_value);
    double adj = s.g_value;
    double excess = 0.0;
    double deep_excess = 0.0;
    for (std::size_t l = 0; l < d_; ++l) {
      const double a = s.act_trace[l];
      act_[l].add(a);
      adj -= c_per_layer_[l] * (a - 1.0);
      excess += a - 1.0;
      if (l >= pool_from_) deep_excess += a - 1.0;
    }
    g_adjusted_.add(adj);
    if (d_ > 0) {
      const double nd = static_cast<double>(n_);
      c_full_.add(nd / static_cast<double>(d_) * excess / 2.0);
      c_eq_.add(nd * deep_excess / static_cast<double>(d_ - pool_from_) / 2.0);
    }
    for (std::size_t k = 1; k <= max_lag_; ++k) {
      auto& cells = lag_[k - 1];
      for (std::size_t l = 0; l + k < d_; ++l) cells[l].add(s.act_trace[l], s.act_trace[l + k]);
    }
  }

  void merge(const ChainAccumulator& o) {
    g_.merge(o.g_);
    g_adjusted_.merge(o.g_adjusted_);
    c_full_.merge(o.c_full_);
    c_eq_.merge(o.c_eq_);
    for (std::size_t l = 0; l < act_.size(); ++l) act_[l].merge(o.act_[l]);
    for (std::size_t k = 0; k < lag_.size(); ++k) {
      for (std::size_t l = 0; l < lag_[k].size(); ++l) lag_[k][l].merge(o.lag_[k][l]);
    }
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  std::size_t max_lag() const { return max_lag_; }
  std::size_t pool_from() const { return pool_from_; }

  const MomentSummary& g() const { return g_; }
  // G - sum_ell c_ell (A_ell - 1): its mean is the theory's -beta/2 once the
  // realized hypoactivation is removed.
  const MomentSummary& g_adjusted() const { return g_adjusted_; }
  // Per-sample (n/d) sum_ell (A_ell - 1)/2.
  const MomentSummary& c_full() const { return c_full_; }
  // Per-sample n * mean_{ell > d/5} (A_ell - 1)/2.
  const MomentSummary& c_equilibrium() const { return c_eq_; }
  const std::vector<MomentSummary>& act() const { return act_; }
  const CoMoment& lag_cell(std::size_t k, std::size_t ell) const { return lag_[k - 1][ell]; }

  double pooled_mean_act() const {
    double s = 0.0;
    for (std::size_t l = pool_from_; l < d_; ++l) s += act_[l].mean;
    return s / static_cast<double>(d_ - pool_from_);
  }
  double pooled_var_act() const {
    double s = 0.0;
    for (std::size_t l = pool_from_; l < d_; ++l) s += act_[l].variance();
    return s / static_cast<double>(d_ - pool_from_);
  }
  double pooled_lag_cov(std::size_t k) const {
    double s = 0.0;
    std::size_t m = 0;
    for (std::size_t l = pool_from_; l + k < d_; ++l, ++m) s += lag_[k - 1][l].covariance();
    if (m == 0) throw InsufficientDataError("no deep layer pairs at lag " + std::to_string(k));
    return s / static_cast<double>(m);
  }

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::size_t max_lag_ = 0;
  std::size_t pool_from_ = 0;
  std::vector<double> c_per_layer_;
  MomentSummary g_;
  MomentSummary g_adjusted_;
  MomentSummary c_full_;
  MomentSummary c_eq_;
  std::vector<MomentSummary> act_;
  std::vector<std::vector<CoMoment>> lag_;
};

struct ChainRun {
  std::vector<double> g_samples;
  std::vector<double> log_output;  // ln|z_out|^2 when requested
  ChainAccumulator total;
  std::vector<ChainAccumulator> chunks;  // consecutive blocks of kChunkSize samples
};

struct ChainRunOptions {
  std::size_t workers = 1;
  std::size_t max_lag = 0;
  // When set, also compose ln|z_out|^2 at this |x|^2/n_in exactly as
  // sample_log_output_chain does.
  std::optional<double> norm_x_sq_over_nin;
};

/// Runs the chain simulator n_samples times (sample i on stream i) and
/// accumulates G, activation traces and lag co-moments up to max_lag.
inline ChainRun run_chain(const NetConfig& config, std::size_t n_samples,
                          const ChainRunOptions& opt) {
  config.validate();
  const bool compose = opt.norm_x_sq_over_nin.has_value();
  if (compose && !(*opt.norm_x_sq_over_nin > 0.0)) {
    throw ValidationError("input norm must be positive");
  }
  ChainRun run;
  run.g_samples.resize(n_samples);
  if (compose) run.log_output.resize(n_samples);
  std::vector<ChainAccumulator> chunks;
  const std::size_t n_chunks = (n_samples + kChunkSize - 1) / kChunkSize;
  chunks.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) chunks.emplace_back(config, opt.max_lag);
  parallel_chunks(n_samples, opt.workers,
                  [&](std::size_t c, std::size_t begin, std::size_t end) {
                    ChainSample s;
                    detail::ChainWorkspace ws;
                    for (std::size_t i = begin; i < end; ++i) {
                      const double y = detail::with_redraw(config, i, nullptr, [&](RngStream& rng) {
                        if (!compose) {
                          forward_chain_into(config, rng, s, ws);
                          return 0.0;
                        }
                        return chain_log_output_norm_sq(config, *opt.norm_x_sq_over_nin, rng, s, ws);
                      });
                      run.g_samples[i] = s.g_value;
                      if (compose) run.log_output[i] = y;
                      chunks[c].add(s);
                    }
                  });
  run.total = merge_all(chunks, ChainAccumulator(config, opt.max_lag));
  run.chunks = std::move(chunks);
  return run;
}

inline ChainRun run_chain(const NetConfig& config, std::size_t n_samples, std::size_t workers,
                          std::size_t max_lag = 0) {
  return run_chain(config, n_samples, ChainRunOptions{workers, max_lag, std::nullopt});
}

// ---------------------------------------------------------------------------
// Conjecture statistics

struct LagStats {
  std::size_t lag = 0;
  double cov = 0.0;        // pooled over deep layers
  double std_error = 0.0;  // batch means
  double reference = 0.0;  // (J2(theta_k) - J2(pi - theta_k))/n, or 0 if Balanced
  std::size_t pairs = 0;   // pooled layer pairs
};

struct LayerStats {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t samples = 0;
  std::size_t pool_from = 0;
  std::vector<double> per_layer_mean_act;
  std::vector<double> per_layer_var_act;
  std::vector<std::size_t> counts;
  // lag_cells[k-1][ell] = Cov(A_ell, A_{ell+k}) for every layer pair.
  std::vector<std::vector<double>> lag_cells;

  double pooled_mean_act = 0.0;
  double pooled_mean_act_se = 0.0;
  double pooled_var_act = 0.0;
  double pooled_var_act_se = 0.0;
  double sphere_mean_act = 1.0;
  double sphere_var_act = 0.0;
  std::vector<LagStats> lags;

  // h_ell = (E[A_ell] - 1)/2 per layer.
  std::vector<double> hypoactivation() const {
    std::vector<double> h(per_layer_mean_act.size());
    for (std::size_t l = 0; l < h.size(); ++l) h[l] = (per_layer_mean_act[l] - 1.0) / 2.0;
    return h;
  }
};

inline double lag_reference(const NetConfig& config, std::size_t k) {
  if (config.scheme == Scheme::Balanced) return 0.0;
  if (!config.is_constant()) {
    throw ValidationError("pooled lag reference needs constant coefficients");
  }
  return j2_covariance_kernel(lag_angle(config, 1, 1 + k)) / static_cast<double>(config.n);
}

inline LayerStats layer_stats(const NetConfig& config, const ChainRun& run) {
  const ChainAccumulator& acc = run.total;
  if (acc.g().count < 2) throw InsufficientDataError("layer statistics need 2 samples");
  LayerStats st;
  st.n = config.n;
  st.d = config.d;
  st.samples = acc.g().count;
  st.pool_from = acc.pool_from();
  for (const auto& m : acc.act()) {
    st.per_layer_mean_act.push_back(m.mean);
    st.per_layer_var_act.push_back(m.variance());
    st.counts.push_back(m.count);
  }
  for (std::size_t k = 1; k <= acc.max_lag(); ++k) {
    std::vector<double> cells;
    for (std::size_t l = 0; l + k < config.d; ++l) cells.push_back(acc.lag_cell(k, l).covariance());
    st.lag_cells.push_back(std::move(cells));
  }
  if (config.n >= 2) st.sphere_var_act = sphere_oracles(config.n, 1).var_act;
  if (config.d == 0) return st;

  st.pooled_mean_act = acc.pooled_mean_act();
  st.pooled_var_act = acc.pooled_var_act();
  const bool batched = run.chunks.size() >= 2;
  if (batched) {
    st.pooled_mean_act_se =
        batch_means(run.chunks, [](const ChainAccumulator& a) { return a.pooled_mean_act(); })
            .second;
    st.pooled_var_act_se =
        batch_means(run.chunks, [](const ChainAccumulator& a) { return a.pooled_var_act(); })
            .second;
  }
  for (std::size_t k = 1; k <= acc.max_lag(); ++k) {
    if (acc.pool_from() + k >= config.d) break;
    LagStats ls;
    ls.lag = k;
    ls.cov = acc.pooled_lag_cov(k);
    ls.pairs = config.d - k - acc.pool_from();
    ls.reference = lag_reference(config, k);
    if (batched) {
      ls.std_error = batch_means(run.chunks, [k](const ChainAccumulator& a) {
                       return a.pooled_lag_cov(k);
                     }).second;
    }
    st.lags.push_back(ls);
  }
  return st;
}

/// Per-layer activation statistics of the chain compared with the uniform
/// sphere and the arc-cosine covariance.
inline LayerStats conjecture_stats(const NetConfig& config, std::size_t n_samples,
                                   std::size_t workers = 1, std::size_t max_lag = 2) {
  config.validate();
  if (n_samples < 1000) throw ValidationError("conjecture_stats needs at least 1000 samples");
  if (config.n < 2) throw ValidationError("conjecture_stats needs n >= 2");
  if (max_lag > 0 && !config.is_constant() && config.scheme == Scheme::Vanilla) {
    throw ValidationError("lag covariances need constant coefficients");
  }
  return layer_stats(config, run_chain(config, n_samples, workers, max_lag));
}

// ---------------------------------------------------------------------------
// Hypoactivation constant

struct CEstimate {
  HypoConstant full;         // (n/d) sum over all layers of h_ell
  HypoConstant equilibrium;  // n * mean of h_ell over ell > d/5
  std::size_t pool_from = 0;
};

inline CEstimate c_estimates(const ChainAccumulator& acc) {
  if (acc.d() == 0) throw ValidationError("estimating C needs d >= 1");
  CEstimate e;
  e.full = HypoConstant::estimated(acc.c_full().mean, acc.c_full().std_error());
  e.equilibrium =
      HypoConstant::estimated(acc.c_equilibrium().mean, acc.c_equilibrium().std_error());
  e.pool_from = acc.pool_from();
  return e;
}

inline void check_c_config(const NetConfig& config) {
  config.validate();
  if (config.scheme == Scheme::Balanced) {
    throw ValidationError("estimate-c: the hypoactivation constant of a balanced network is 0");
  }
  if (!config.is_constant()) throw ValidationError("estimate-c needs constant coefficients");
  if (config.d == 0) throw ValidationError("estimate-c needs d >= 1");
}

inline CEstimate estimate_C_detailed(const NetConfig& config, std::size_t n_samples,
                                     std::size_t workers = 1) {
  check_c_config(config);
  if (n_samples < 2) throw InsufficientDataError("estimate-c needs at least 2 samples");
  return c_estimates(run_chain(config, n_samples, workers).total);
}

/// C_{alpha,lambda} = (n/d) sum_ell h_ell from the realized layer profile.
inline HypoConstant estimate_C(const NetConfig& config, std::size_t n_samples,
                               std::size_t workers = 1) {
  return estimate_C_detailed(config, n_samples, workers).full;
}

inline HypoConstant estimate_C(double alpha, double lambda, std::size_t n, std::size_t d,
                               std::size_t n_samples, std::uint64_t seed = 0,
                               std::size_t workers = 1) {
  return estimate_C(NetConfig::constant(1, 1, n, d, alpha, lambda, Scheme::Vanilla, seed),
                    n_samples, workers);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

inline constexpr double kKsCoef05 = 1.358;
inline constexpr double kKsCoef01 = 1.628;

struct KsResult {
  double statistic = 0.0;
  double effective_n = 0.0;
  double p_value = 1.0;  // asymptotic Kolmogorov distribution
  bool pass_05 = false;
  bool pass_01 = false;

  double critical_05() const { return kKsCoef05 / std::sqrt(effective_n); }
  double critical_01() const { return kKsCoef01 / std::sqrt(effective_n); }
};

namespace detail {

inline KsResult ks_finish(double stat, double effective_n) {
  KsResult r;
  r.statistic = stat;
  r.effective_n = effective_n;
  r.pass_05 = stat <= r.critical_05();
  r.pass_01 = stat <= r.critical_01();
  // P(sqrt(N) D > t) -> Kolmogorov survival function at t.
  const double t = stat * std::sqrt(effective_n);
  if (t <= 0.0) {
    r.p_value = 1.0;
  } else {
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * t * t);
      q += (k % 2 ? 2.0 : -2.0) * term;
      if (term < 1e-18) break;
    }
    r.p_value = std::clamp(q, 0.0, 1.0);
  }
  return r;
}

}  // namespace detail

/// One-sample KS statistic of sorted samples against a continuous cdf.
inline KsResult ks_test(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.size() < 8) throw InsufficientDataError("ks_test needs at least 8 samples");
  if (!std::is_sorted(sorted.begin(), sorted.end())) {
    throw ValidationError("ks_test: samples must be sorted");
  }
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return detail::ks_finish(d, n);
}

inline KsResult ks_test_normal(std::span<const double> sorted, double mean, double variance) {
  if (!(variance > 0.0)) throw ValidationError("ks_test_normal: variance must be positive");
  const double sd = std::sqrt(variance);
  return ks_test(sorted, [=](double x) { return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0))); });
}

/// Two-sample KS; inputs need not be sorted. Critical values use the
/// effective size nm/(n+m).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 8 || b.size() < 8) {
    throw InsufficientDataError("ks_two_sample needs at least 8 samples per side");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return detail::ks_finish(d, na * nb / (na + nb));
}

// ---------------------------------------------------------------------------
// Output-squared correlation

// Attempt word reserved for auxiliary draws keyed to sample i, so they are
// independent of the chain stream of the same sample.
inline constexpr std::uint32_t kAuxAttempt = 0xFFFFFFFFu;

struct SqCorrelation {
  double value = 0.0;
  double std_error = 0.0;
  double mean_sq = 0.0;  // E[(z_out_i)^2] pooled over the two coordinates
  double mean_sq_se = 0.0;
  std::size_t count = 0;
};

/// Pearson correlation of (z_out_1)^2 and (z_out_2)^2 at |x|^2 = n_in,
/// built as exp(prefactor + G) Z_i^2 with two fresh normals per draw of G.
inline SqCorrelation output_sq_correlation(const NetConfig& config,
                                           std::span<const double> g_samples) {
  config.validate();
  if (config.n_out < 2) throw ValidationError("output_sq_correlation needs n_out >= 2");
  if (g_samples.size() < 2 * kChunkSize) {
    throw InsufficientDataError("output_sq_correlation needs at least 512 samples");
  }
  const double pre = prefactor_log(config);
  struct Acc {
    CoMoment pair;
    MomentSummary mean;
    void merge(const Acc& o) {
      pair.merge(o.pair);
      mean.merge(o.mean);
    }
  };
  std::vector<Acc> parts((g_samples.size() + kChunkSize - 1) / kChunkSize);
  for (std::size_t i = 0; i < g_samples.size(); ++i) {
    RngStream rng(config.seed, i, kAuxAttempt);
    const double scale = std::exp(pre + g_samples[i]);
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double y1 = scale * z1 * z1;
    const double y2 = scale * z2 * z2;
    parts[i / kChunkSize].pair.add(y1, y2);
    parts[i / kChunkSize].mean.add((y1 + y2) / 2.0);
  }
  const Acc total = merge_all(parts, Acc{});
  SqCorrelation r;
  r.count = g_samples.size();
  r.value = total.pair.correlation();
  r.std_error = batch_means(parts, [](const Acc& a) { return a.pair.correlation(); }).second;
  r.mean_sq = total.mean.mean;
  r.mean_sq_se = total.mean.std_error();
  return r;
}

inline SqCorrelation output_sq_correlation(const NetConfig& config, std::size_t n_samples,
                                           std::size_t workers = 1) {
  return output_sq_correlation(config, sample_G(config, n_samples, workers));
}

// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares slope of ln y against ln x.
inline SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InsufficientDataError("loglog_slope needs at least two (x, y) pairs");
  }
  CoMoment cm;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw ValidationError("loglog_slope needs positive values");
    }
    cm.add(std::log(x[i]), std::log(y[i]));
  }
  SlopeFit f;
  f.slope = cm.cxy / cm.m2x;
  f.intercept = cm.mean_y - f.slope * cm.mean_x;
  return f;
}

}  // namespace resnet_limits
