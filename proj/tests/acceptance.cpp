// Acceptance runs at the published configurations. Prints one PASS/FAIL
// line per criterion plus indented detail lines; exits nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "resnet_limits/density.hpp"
#include "resnet_limits/estimate.hpp"
#include "resnet_limits/simulate.hpp"
#include "resnet_limits/theory.hpp"

using namespace resnet_limits;

namespace {

constexpr double kS = detail::kInvSqrt2;
const std::size_t kWorkers = default_workers();

int g_failed = 0;

void detail_line(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

void verdict(const char* name, bool ok, double seconds) {
  std::printf("%s %s (%.1f s)\n", ok ? "PASS" : "FAIL", name, seconds);
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

void criterion(const char* name, const std::function<bool()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body();
  } catch (const std::exception& e) {
    detail_line("exception: %s", e.what());
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  verdict(name, ok, s);
}

NetConfig canonical(std::size_t n, std::size_t d, Scheme s, std::uint64_t seed,
                    std::size_t n_in = 1, std::size_t n_out = 1) {
  return NetConfig::constant(n_in, n_out, n, d, kS, kS, s, seed);
}

// Runs shared between criteria.
std::map<std::size_t, ChainRun> g_vanilla_sweep;  // keyed by n, d = n
std::vector<double> g_balanced_150;

}  // namespace

int main() {
  std::printf("resnet_limits acceptance, %zu worker(s)\n", kWorkers);

  criterion("balanced_G_moments", [] {
    const auto c = canonical(150, 150, Scheme::Balanced, 101);
    g_balanced_150 = sample_G(c, 100000, kWorkers);
    const auto m = summarize(g_balanced_150);
    const auto p = predict_G(c, HypoConstant{});
    const double zm = (m.mean - p.mean_G) / m.std_error();
    const double zv = (m.variance() - p.var_G) / m.variance_std_error();
    detail_line("mean %.6f +- %.6f (theory %.6f, z = %.2f)", m.mean, m.std_error(), p.mean_G, zm);
    detail_line("var  %.6f +- %.6f (theory %.6f, z = %.2f)", m.variance(),
                m.variance_std_error(), p.var_G, zv);
    return std::abs(zm) <= 4.0 && std::abs(zv) <= 4.0;
  });

  criterion("gaussianity_of_G", [] {
    const auto c = canonical(150, 150, Scheme::Balanced, 101);
    if (g_balanced_150.size() < 10000) g_balanced_150 = sample_G(c, 10000, kWorkers);
    std::vector<double> v(g_balanced_150.begin(), g_balanced_150.begin() + 10000);
    std::sort(v.begin(), v.end());
    const auto p = predict_G(c, HypoConstant{});
    const auto r = ks_test_normal(v, p.mean_G, p.var_G);
    detail_line("KS D = %.5f, 1%% critical %.5f, p = %.3f", r.statistic, r.critical_01(),
                r.p_value);
    return r.pass_01;
  });

  criterion("hypoactivation_constant", [] {
    const auto c = canonical(150, 150, Scheme::Vanilla, 202);
    g_vanilla_sweep.emplace(150, run_chain(c, 100000, kWorkers));
    const auto e = c_estimates(g_vanilla_sweep.at(150).total);
    detail_line("C full-sum %.4f +- %.4f, deep-layer %.4f +- %.4f (target -0.876 +- 0.1)",
                e.full.value, e.full.std_error, e.equilibrium.value, e.equilibrium.std_error);
    return std::abs(e.full.value + 0.876) <= 0.1;
  });

  criterion("vanilla_G_moments", [] {
    bool ok = true;
    std::vector<double> ns, errs;
    for (std::size_t n : {50, 100, 150, 200}) {
      const auto c = canonical(n, n, Scheme::Vanilla, 202);
      if (!g_vanilla_sweep.contains(n)) g_vanilla_sweep.emplace(n, run_chain(c, 100000, kWorkers));
      const auto& acc = g_vanilla_sweep.at(n).total;
      const auto C = c_estimates(acc).full;
      const auto p = predict_G(c, C);
      const double beta_half = -p.beta / 2.0;
      const auto& g = acc.g();
      const auto& adj = acc.g_adjusted();
      const bool mean_ok = std::abs(adj.mean - beta_half) <= adj.ci_half_width();
      const bool var_ok = std::abs(g.variance() - p.var_G) <= g.variance_ci_half_width();
      detail_line("n = d = %zu: C = %.4f; mean %.4f vs %.4f; C-adjusted mean %.4f +- %.4f vs %.4f [%s]",
                  n, C.value, g.mean, p.mean_G, adj.mean, adj.ci_half_width(), beta_half,
                  mean_ok ? "in" : "out");
      detail_line("            var %.4f +- %.4f vs %.4f, error %.4f [%s]", g.variance(),
                  g.variance_ci_half_width(), p.var_G, g.variance() - p.var_G,
                  var_ok ? "in" : "out");
      ok = ok && mean_ok && var_ok;
      ns.push_back(static_cast<double>(n));
      errs.push_back(std::abs(g.variance() - p.var_G));
    }
    const auto fit = loglog_slope(ns, errs);
    const bool slope_ok = std::abs(fit.slope + 1.0) <= 0.4;
    detail_line("variance error log-log slope %.3f (target -1 +- 0.4) [%s]", fit.slope,
                slope_ok ? "ok" : "off");
    return ok && slope_ok;
  });

  criterion("simulator_equivalence", [] {
    const auto c = canonical(20, 10, Scheme::Vanilla, 303, 10, 10);
    std::vector<double> x(10, 0.0);
    x[0] = 1.0;
    const auto full = sample_log_output_full(c, x, 10000, kWorkers);
    auto cc = c;
    cc.seed = 304;
    const auto chain = sample_log_output_chain(cc, 0.1, 10000, kWorkers);
    const auto r = ks_two_sample(full, chain);
    detail_line("two-sample KS D = %.5f, 1%% critical %.5f, p = %.3f", r.statistic,
                r.critical_01(), r.p_value);
    return r.pass_01;
  });

  criterion("activation_statistics", [] {
    bool ok = true;
    std::vector<double> ns, mean_err, var_err;
    for (std::size_t n : {50, 100, 200}) {
      const auto c = canonical(n, 200, Scheme::Vanilla, 404);
      const auto st = conjecture_stats(c, 20000, kWorkers, 2);
      const double me = std::abs(st.pooled_mean_act - 1.0);
      const double ve = std::abs(st.pooled_var_act - st.sphere_var_act) / st.sphere_var_act;
      detail_line("n = %zu: mean %.5f +- %.5f, var %.5f +- %.5f (sphere %.5f)", n,
                  st.pooled_mean_act, st.pooled_mean_act_se, st.pooled_var_act,
                  st.pooled_var_act_se, st.sphere_var_act);
      for (const auto& l : st.lags) {
        const double z = (l.cov - l.reference) / l.std_error;
        const bool lag_ok = std::abs(z) <= 4.0;
        detail_line("    lag %zu: cov %.6f +- %.6f vs %.6f (z = %.1f) [%s]", l.lag, l.cov,
                    l.std_error, l.reference, z, lag_ok ? "in" : "out");
        ok = ok && lag_ok;
      }
      ns.push_back(static_cast<double>(n));
      mean_err.push_back(me);
      var_err.push_back(ve);
    }
    const bool monotone = mean_err[0] > mean_err[1] && mean_err[1] > mean_err[2] &&
                          var_err[0] > var_err[1] && var_err[1] > var_err[2];
    const double sm = loglog_slope(ns, mean_err).slope;
    const double sv = loglog_slope(ns, var_err).slope;
    const bool rate_ok = std::abs(sm + 1.0) <= 0.4 && std::abs(sv + 1.0) <= 0.4;
    detail_line("relative error slopes: mean %.3f, var %.3f (target -1 +- 0.4), monotone %s",
                sm, sv, monotone ? "yes" : "no");
    return ok && monotone && rate_ok;
  });

  // Correlation runs are reused by the mean-cancellation check.
  std::map<std::pair<int, int>, SqCorrelation> corr;  // (scheme, d)
  std::map<std::pair<int, int>, TheoryPrediction> corr_pred;
  criterion("output_sq_correlation", [&] {
    bool ok = true;
    const std::size_t n = 200;
    for (Scheme s : {Scheme::Balanced, Scheme::Vanilla}) {
      for (double ratio : {0.1, 0.5, 1.0}) {
        const auto d = static_cast<std::size_t>(std::lround(ratio * n));
        const auto c = canonical(n, d, s, 505, 1, 2);
        HypoConstant C;
        std::vector<double> g;
        if (s == Scheme::Vanilla) {
          const ChainRun* run = nullptr;
          ChainRun fresh;
          if (d == n && g_vanilla_sweep.contains(n)) {
            run = &g_vanilla_sweep.at(n);
          } else {
            fresh = run_chain(c, 50000, kWorkers);
            run = &fresh;
          }
          C = c_estimates(run->total).full;
          g = run->g_samples;
        } else {
          g = sample_G(c, 50000, kWorkers);
        }
        auto cfg = c;
        if (s == Scheme::Vanilla && d == n) cfg.seed = 202;
        const auto r = output_sq_correlation(cfg, g);
        const auto p = predict_G(c, C);
        const double theory = output_sq_correlation_theory(p.var_G);
        const double z = (r.value - theory) / r.std_error;
        const bool in = std::abs(z) <= 4.0 && r.value <= 1.0 / 3.0 + 4.0 * r.std_error;
        detail_line("%s d/n = %.1f: corr %.4f +- %.4f vs %.4f (z = %.1f, %zu draws) [%s]",
                    std::string(to_string(s)).c_str(), ratio, r.value, r.std_error, theory, z,
                    r.count, in ? "in" : "out");
        ok = ok && in;
        corr[{static_cast<int>(s), static_cast<int>(d)}] = r;
        corr_pred[{static_cast<int>(s), static_cast<int>(d)}] = p;
      }
    }
    const auto& v = corr.at({static_cast<int>(Scheme::Vanilla), 200});
    const auto& b = corr.at({static_cast<int>(Scheme::Balanced), 200});
    const bool order = v.value > b.value;
    detail_line("d/n = 1: vanilla %.4f > balanced %.4f [%s]", v.value, b.value,
                order ? "ok" : "no");
    return ok && order;
  });

  criterion("output_mean_cancellation", [&] {
    bool ok = true;
    for (int d : {20, 200}) {
      const auto& b = corr.at({static_cast<int>(Scheme::Balanced), d});
      const double zb = (b.mean_sq - 1.0) / b.mean_sq_se;
      const bool bok = std::abs(zb) <= 4.0;
      detail_line("balanced d/n = %.1f: E z^2 = %.4f +- %.4f vs 1 (z = %.1f) [%s]", d / 200.0,
                  b.mean_sq, b.mean_sq_se, zb, bok ? "in" : "out");
      const auto& v = corr.at({static_cast<int>(Scheme::Vanilla), d});
      const auto& p = corr_pred.at({static_cast<int>(Scheme::Vanilla), d});
      const double target = std::exp(2.0 * p.c * p.h_total + 0.5 * p.c * p.c * p.i_total);
      const double zv = (v.mean_sq - target) / v.mean_sq_se;
      const bool vok = std::abs(zv) <= 4.0;
      detail_line("vanilla  d/n = %.1f: E z^2 = %.4f +- %.4f vs %.4f (z = %.1f) [%s]", d / 200.0,
                  v.mean_sq, v.mean_sq_se, target, zv, vok ? "in" : "out");
      ok = ok && bok && vok;
    }
    return ok;
  });

  criterion("density_pipeline", [] {
    bool ok = true;
    const std::size_t n = 100, n_in = 10, n_out = 10, N = 10000;
    const double step = 0.01, norm = 1.0 / static_cast<double>(n_in);
    const std::size_t bin_steps = 25;
    for (Scheme s : {Scheme::Vanilla, Scheme::Balanced}) {
      for (std::size_t d : {10, 50, 100}) {
        const auto c = canonical(n, d, s, 606, n_in, n_out);
        const auto run = run_chain(c, N, ChainRunOptions{kWorkers, 0, norm});
        const HypoConstant C = s == Scheme::Vanilla ? c_estimates(run.total).full : HypoConstant{};
        const auto p = predict_G(c, C);
        GridSpec grid = default_grid(p, n_out, norm, step);
        const double iw_mu = log_chi2_mean(n_out) - std::log(static_cast<double>(n_in));
        const double iw_sd = std::sqrt(log_chi2_variance(n_out));
        grid.x_min = std::min(grid.x_min, std::floor((iw_mu - 10 * iw_sd) / step) * step);
        grid.x_max = std::max(grid.x_max, std::ceil((iw_mu + 10 * iw_sd) / step) * step);
        const auto theory = predicted_logout_density(c, p, norm, grid);
        const auto iw = infinite_width_logout_density(n_in, n_out, grid);
        const double e_theory = binned_iad(run.log_output, theory, bin_steps);
        const double e_iw = binned_iad(run.log_output, iw, bin_steps);
        bool cfg_ok = e_theory < 0.08;
        if (d == n) cfg_ok = cfg_ok && e_iw >= 3.0 * e_theory;
        detail_line("%s d = %zu: IAD theory %.4f, infinite-width %.4f (ratio %.1f) [%s]",
                    std::string(to_string(s)).c_str(), d, e_theory, e_iw, e_iw / e_theory,
                    cfg_ok ? "ok" : "off");
        ok = ok && cfg_ok;
      }
    }
    return ok;
  });

  criterion("jacobian_identity", [] {
    const auto c = canonical(50, 50, Scheme::Balanced, 707, 10, 10);
    std::vector<double> e1(10, 0.0), e2(10, 0.0);
    e1[0] = 1.0;
    e2[1] = 1.0;
    const auto jac = sample_jacobian_sq_norms(c, e2, 0, 10000, kWorkers);
    auto co = c;
    co.seed = 708;
    const auto log_out = sample_log_output_full(co, e1, 10000, kWorkers);
    std::vector<double> out(log_out.size());
    std::transform(log_out.begin(), log_out.end(), out.begin(), [](double v) { return std::exp(v); });
    const auto r = ks_two_sample(jac.sq_norms, out);
    detail_line("KS D = %.5f, 1%% critical %.5f, p = %.3f, redraws %zu", r.statistic,
                r.critical_01(), r.p_value, jac.rejected);

    // Central differences on random networks, inputs and coordinates.
    RngStream pick(709, 0);
    std::size_t bad = 0;
    double worst = 0.0;
    for (std::size_t probe = 0; probe < 100; ++probe) {
      std::vector<double> x(10);
      pick.fill_normal(x);
      const auto i = static_cast<std::size_t>(pick.uniform() * 10.0);
      RngStream r0(710, probe);
      const auto col = jacobian_column(c, x, i, r0);
      const double h = 1e-6;
      std::vector<double> xp(x), xm(x);
      xp[i] += h;
      xm[i] -= h;
      RngStream r1(710, probe), r2(710, probe);
      const auto yp = forward_output(c, xp, r1);
      const auto ym = forward_output(c, xm, r2);
      double diff = 0.0, ref = 0.0;
      for (std::size_t k = 0; k < col.size(); ++k) {
        const double fd = (yp[k] - ym[k]) / (2.0 * h);
        diff += (fd - col[k]) * (fd - col[k]);
        ref += col[k] * col[k];
      }
      const double rel = std::sqrt(diff / ref);
      worst = std::max(worst, rel);
      if (rel > 1e-4) ++bad;
    }
    detail_line("finite differences: worst relative error %.2e, %zu of 100 above 1e-4", worst, bad);
    return r.pass_01 && bad == 0;
  });

  std::printf("%d criterion(s) failed\n", g_failed);
  return g_failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
