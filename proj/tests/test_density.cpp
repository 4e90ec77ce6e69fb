#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "resnet_limits/density.hpp"

using namespace resnet_limits;

namespace {

// psi(x) by upward recurrence and the asymptotic series.
double digamma_oracle(double x) {
  double r = 0;
  while (x < 20) {
    r -= 1 / x;
    x += 1;
  }
  const double i2 = 1 / (x * x);
  return r + std::log(x) - 0.5 / x - i2 * (1.0 / 12 - i2 * (1.0 / 120 - i2 / 252));
}

// psi'(x) as the partial sum of 1/(x+k)^2 plus an integral tail.
double trigamma_oracle(double x) {
  double r = 0;
  const int K = 200000;
  for (int k = 0; k < K; ++k) r += 1 / ((x + k) * (x + k));
  const double t = x + K;
  return r + 1 / t + 0.5 / (t * t);
}

TheoryPrediction gaussian(double mean, double var) {
  TheoryPrediction p;
  p.mean_G = mean;
  p.var_G = var;
  return p;
}

}  // namespace

TEST(LogChi2, NormalizedAndModeAtLn2) {
  for (std::size_t k : {1, 2, 5, 10, 40}) {
    const auto g = log_chi2_density(k, {-40.0, 10.0, 0.001});
    EXPECT_NEAR(g.integral(), 1.0, 1e-6) << "k = " << k;
  }
  const auto g = log_chi2_density(2, {-10.0, 5.0, 0.001});
  std::size_t arg = 0;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (g.values[i] > g.values[arg]) arg = i;
  }
  EXPECT_NEAR(g.x(arg), std::numbers::ln2, 1e-3);
}

TEST(LogChi2, MomentsMatchPolygamma) {
  const auto g = log_chi2_density(10, {-5.0, 6.0, 0.001});
  EXPECT_NEAR(g.mean(), digamma_oracle(5.0) + std::numbers::ln2, 1e-6);
  EXPECT_NEAR(log_chi2_mean(10), digamma_oracle(5.0) + std::numbers::ln2, 1e-12);
  EXPECT_NEAR(g.variance(), trigamma_oracle(5.0), 1e-5);
  EXPECT_NEAR(log_chi2_variance(10), trigamma_oracle(5.0), 1e-9);
  EXPECT_NEAR(log_chi2_variance(1), std::numbers::pi * std::numbers::pi / 2, 1e-12);
}

TEST(LogChi2, LgammaMatchesFactorials) {
  double f = 1;
  for (int m = 1; m < 25; ++m) {
    f *= m;
    EXPECT_NEAR(std::lgamma(m + 1.0), std::log(f), 1e-10);
  }
  EXPECT_NEAR(std::lgamma(0.5), 0.5 * std::log(std::numbers::pi), 1e-14);
}

TEST(LogChi2, ExtremeArgumentsAreFinite) {
  for (double x : {-40.0, 40.0, -700.0, 700.0}) {
    const double v = std::exp(detail::log_chi2_log_pdf(10.0, x));
    EXPECT_FALSE(std::isnan(v));
    EXPECT_GE(v, 0.0);
  }
}

TEST(LogChi2, GridTooNarrow) {
  EXPECT_THROW(log_chi2_density(10, {0.0, 1.0, 0.01}), GridTooNarrowError);
  EXPECT_THROW(log_chi2_density(0, {-5.0, 5.0, 0.01}), ValidationError);
  EXPECT_THROW(log_chi2_density(3, {1.0, 0.0, 0.01}), ValidationError);
}

TEST(PredictedDensity, NormalizedWithAdditiveMean) {
  const auto cfg = NetConfig::constant(10, 10, 100, 100, 0.7, 0.7);
  const auto pred = gaussian(-1.3, 2.0);
  const auto spec = default_grid(pred, 10, 1.0);
  const auto g = predicted_logout_density(cfg, pred, 1.0, spec);
  EXPECT_NEAR(g.integral(), 1.0, 1e-12);
  EXPECT_NEAR(g.mean(), -1.3 + log_chi2_mean(10), 1e-3);
  EXPECT_NEAR(g.variance(), 2.0 + log_chi2_variance(10), 2e-3);
  // The input norm and the prefactor shift the law.
  auto shifted = pred;
  shifted.prefactor_log = 0.4;
  const auto g2 = predicted_logout_density(cfg, shifted, std::exp(0.3),
                                           default_grid(shifted, 10, std::exp(0.3)));
  EXPECT_NEAR(g2.mean(), g.mean() + 0.7, 1e-3);
}

TEST(PredictedDensity, DiracLimit) {
  const auto cfg = NetConfig::constant(1, 10, 100, 10, 0.7, 0.7);
  const GridSpec spec{-6.0, 6.0, 0.01};
  const auto g = predicted_logout_density(cfg, gaussian(0.0, 1e-4), 1.0, spec);
  const auto ref = log_chi2_density(10, spec);
  double sup = 0;
  for (std::size_t i = 0; i < g.values.size(); ++i) sup = std::max(sup, std::abs(g.values[i] - ref.values[i]));
  EXPECT_LT(sup, 1e-2);
}

TEST(PredictedDensity, StepRefinement) {
  const auto cfg = NetConfig::constant(1, 4, 100, 10, 0.7, 0.7);
  const auto pred = gaussian(-0.5, 1.5);
  const GridSpec coarse{-12.0, 8.0, 0.02};
  const GridSpec fine{-12.0, 8.0, 0.01};
  const auto a = predicted_logout_density(cfg, pred, 1.0, coarse);
  const auto b = predicted_logout_density(cfg, pred, 1.0, fine);
  double sup = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    sup = std::max(sup, std::abs(a.values[i] - b.values[2 * i]));
  }
  EXPECT_LT(sup, 1e-3);
}

TEST(PredictedDensity, MatchesMonteCarloConvolution) {
  const auto cfg = NetConfig::constant(1, 5, 100, 10, 0.7, 0.7);
  const auto pred = gaussian(-1.0, 2.0);
  const auto spec = default_grid(pred, 5, 1.0, 0.05);
  const auto g = predicted_logout_density(cfg, pred, 1.0, spec);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(-1.0, std::sqrt(2.0));
  std::chi_squared_distribution<double> chi(5.0);
  std::vector<double> s(1000000);
  for (auto& x : s) x = nd(gen) + std::log(chi(gen));
  const auto h = histogram(s, spec);
  double sup = 0;
  for (std::size_t i = 0; i < h.values.size(); ++i) sup = std::max(sup, std::abs(h.values[i] - g.values[i]));
  EXPECT_LT(sup, 0.01);
  EXPECT_LT(binned_iad(s, g, 5), 0.01);
}

TEST(PredictedDensity, RequiresPositiveVariance) {
  const auto cfg = NetConfig::constant(1, 5, 100, 10, 0.7, 0.7);
  EXPECT_THROW(predicted_logout_density(cfg, gaussian(0, 0), 1.0, {-5, 5, 0.01}), ValidationError);
  EXPECT_THROW(predicted_logout_density(cfg, gaussian(0, 1), 1.0, {-1, 1, 0.01}),
               GridTooNarrowError);
}

TEST(InfiniteWidth, ShiftByLogNin) {
  const GridSpec spec{-15.0, 8.0, 0.01};
  const auto a = infinite_width_logout_density(10, 10, spec);
  const GridSpec shifted{-15.0 + std::log(10.0), 8.0 + std::log(10.0), 0.01};
  const auto b = log_chi2_density(10, shifted);
  ASSERT_EQ(a.values.size(), b.values.size());
  double sup = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) sup = std::max(sup, std::abs(a.values[i] - b.values[i]));
  EXPECT_LT(sup, 1e-6);
  const auto c = infinite_width_logout_density(1, 10, spec);
  const auto d = log_chi2_density(10, spec);
  for (std::size_t i = 0; i < c.values.size(); ++i) ASSERT_EQ(c.values[i], d.values[i]);
}

TEST(Histogram, ConstantSamplesFillOneBin) {
  const std::vector<double> s(500, 0.5);
  const auto h = histogram(s, {0.0, 1.0, 0.1});
  int nonzero = 0;
  for (double v : h.values) nonzero += v > 0;
  EXPECT_EQ(nonzero, 1);
  EXPECT_DOUBLE_EQ(h.values[5], 10.0);
  EXPECT_THROW(histogram(std::vector<double>(99, 0.0), {0.0, 1.0, 0.1}), InsufficientDataError);
}

TEST(Histogram, NormalSamples) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  std::vector<double> s(1000000);
  for (auto& x : s) x = nd(gen);
  const auto h = histogram(s, {-8.0, 8.0, 0.05});
  double sup = 0, sum = 0;
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    const double x = h.x(i);
    sup = std::max(sup, std::abs(h.values[i] - std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi)));
    sum += h.values[i] * 0.05;
  }
  EXPECT_LT(sup, 0.01);
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Iad, IdenticalAndDisjoint) {
  const GridSpec spec{-5, 5, 0.01};
  const auto a = log_chi2_density(10, spec);
  EXPECT_EQ(integrated_abs_difference(a, a), 0.0);
  std::vector<double> far(1000, 100.0);
  EXPECT_NEAR(binned_iad(far, a, 25), 1.0 + a.integral(), 1e-12);
  const auto b = log_chi2_density(10, {-5, 5, 0.02});
  EXPECT_THROW(integrated_abs_difference(a, b), ValidationError);
}

TEST(DensityGrid, CsvFormat) {
  DensityGrid g{0.0, 0.5, {1.0, 2.0}};
  std::ostringstream os;
  g.write_csv(os);
  EXPECT_EQ(os.str(), "x,density\n0,1\n0.5,2\n");
}
