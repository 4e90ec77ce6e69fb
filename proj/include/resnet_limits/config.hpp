#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "resnet_limits/errors.hpp"

namespace resnet_limits {

enum class Scheme { Vanilla, Balanced };

inline std::string_view to_string(Scheme s) {
  return s == Scheme::Vanilla ? "vanilla" : "balanced";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "vanilla") return Scheme::Vanilla;
  if (s == "balanced") return Scheme::Balanced;
  throw ValidationError("unknown scheme '" + std::string(s) + "'");
}

/// Hyperparameters of a fully connected ReLU ResNet at initialization.
///
/// Hidden layer ell (1-based) maps z^{ell-1} to z^ell with skip coefficient
/// alphas[ell-1] and feed-forward coefficient lambdas[ell-1].
struct NetConfig {
  std::size_t n_in = 1;
  std::size_t n_out = 1;
  std::size_t n = 1;
  std::size_t d = 0;
  std::vector<double> alphas;
  std::vector<double> lambdas;
  Scheme scheme = Scheme::Vanilla;
  std::uint64_t seed = 0;

  static NetConfig constant(std::size_t n_in, std::size_t n_out, std::size_t n,
                            std::size_t d, double alpha, double lambda,
                            Scheme scheme = Scheme::Vanilla,
                            std::uint64_t seed = 0) {
    NetConfig c;
    c.n_in = n_in;
    c.n_out = n_out;
    c.n = n;
    c.d = d;
    c.alphas.assign(d, alpha);
    c.lambdas.assign(d, lambda);
    c.scheme = scheme;
    c.seed = seed;
    return c;
  }

  bool is_constant() const {
    for (std::size_t i = 1; i < alphas.size(); ++i) {
      if (alphas[i] != alphas[0] || lambdas[i] != lambdas[0]) return false;
    }
    return true;
  }

  // Coefficients of an arbitrary layer; only meaningful when is_constant().
  double alpha() const { return alphas.empty() ? 0.0 : alphas.front(); }
  double lambda() const { return lambdas.empty() ? 1.0 : lambdas.front(); }

  void validate() const {
    if (n_in == 0 || n_out == 0 || n == 0) {
      throw ValidationError("n_in, n_out and n must be positive");
    }
    if (alphas.size() != d || lambdas.size() != d) {
      throw ValidationError("expected " + std::to_string(d) +
                            " per-layer alphas and lambdas");
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(alphas[i])) {
        throw ValidationError("alpha of layer " + std::to_string(i + 1) +
                              " is not finite");
      }
      if (!std::isfinite(lambdas[i]) || !(lambdas[i] > 0.0)) {
        throw ValidationError("lambda of layer " + std::to_string(i + 1) +
                              " must be positive");
      }
    }
  }

  bool operator==(const NetConfig&) const = default;
};

}  // namespace resnet_limits
