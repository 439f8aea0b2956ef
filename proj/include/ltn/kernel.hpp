// kernel.hpp: nonlocal kernel families, normalization constants, horizon support.
//
// Both families are radial truncated power laws
//   gamma(x,y) = c_norm * ||x-y||^(-beta) * chi_{||x-y|| < delta},
// with beta = d + 2s for the fractional family and beta = alpha for the
// integrable family.  c_norm is chosen so that the second moment
// int_{B_delta} ||z||^2 gamma(0,z) dz equals 2d, which is what makes the
// nonlocal operator consistent with the (negative) Laplacian on quadratics.
#pragma once

#include <cmath>
#include <limits>

#include "ltn/core.hpp"
#include "ltn/quadrature.hpp"

namespace ltn {

enum class KernelFamily { fractional, integrable };

struct KernelSpec {
  KernelFamily family = KernelFamily::integrable;
  int d = 1;
  double s = 0.0;      // fractional order, used when family == fractional
  double alpha = 0.0;  // singularity strength, used when family == integrable
  double delta = 1.0;
  double c_norm = 0.0;

  // Exponent of the power-law singularity: gamma = c_norm * r^(-beta) inside the horizon.
  double beta() const {
    return family == KernelFamily::fractional ? double(d) + 2.0 * s : alpha;
  }
};

// Closed-form normalization constants.
// Fractional (finite horizon): C_F = (2-2s) delta^(2s-2) * d * Gamma(d/2) / pi^(d/2).
// Integrable:                  C_I = (d+2-alpha) * d * Gamma(d/2) / (pi^(d/2) * delta^(d+2-alpha)).
inline double normalizationConstant(KernelFamily family, int d, double s_or_alpha,
                                    double delta) {
  require(d == 1 || d == 2, "normalizationConstant: spatial dimension must be 1 or 2");
  require(std::isfinite(delta) && delta > 0.0,
          "normalizationConstant: horizon delta must be finite and positive");
  const double dd = double(d);
  const double angular = dd * std::tgamma(dd / 2.0) / std::pow(M_PI, dd / 2.0);
  if (family == KernelFamily::fractional) {
    const double s = s_or_alpha;
    require(s > 0.0 && s < 1.0, "normalizationConstant: fractional order s must lie in (0,1)");
    return (2.0 - 2.0 * s) * std::pow(delta, 2.0 * s - 2.0) * angular;
  }
  const double alpha = s_or_alpha;
  // The paper's 1D jump experiment uses the inverse-distance kernel (alpha = 1)
  // in d = 1, so alpha = d is admitted; alpha > d has no supported use.
  require(alpha >= 0.0 && alpha <= double(d),
          "normalizationConstant: integrable exponent alpha must lie in [0, d]");
  return (dd + 2.0 - alpha) * angular / std::pow(delta, dd + 2.0 - alpha);
}

inline KernelSpec makeKernel(KernelFamily family, int d, double s_or_alpha, double delta) {
  KernelSpec k;
  k.family = family;
  k.d = d;
  if (family == KernelFamily::fractional)
    k.s = s_or_alpha;
  else
    k.alpha = s_or_alpha;
  k.delta = delta;
  k.c_norm = normalizationConstant(family, d, s_or_alpha, delta);
  return k;
}

inline KernelSpec makeConstantKernel(int d, double delta) {
  return makeKernel(KernelFamily::integrable, d, 0.0, delta);
}

inline KernelSpec makeInverseDistanceKernel(int d, double delta) {
  return makeKernel(KernelFamily::integrable, d, 1.0, delta);
}

// Kernel value at separation r = ||x-y||.  Zero at and beyond the horizon.
// Callers never evaluate at r = 0; quadrature rules keep nodes off the diagonal.
inline double evalKernelAtDistance(const KernelSpec& k, double r) {
  if (r >= k.delta) return 0.0;
  return k.c_norm * std::pow(r, -k.beta());
}

inline double evalKernel(const KernelSpec& k, const Vec2& x, const Vec2& y) {
  return evalKernelAtDistance(k, dist(x, y));
}

// Second moment int_{B_delta} ||z||^2 gamma(0,z) dz by 64-point Gauss-Jacobi
// radial quadrature; the singular power r^(d+1-beta) is absorbed into the
// quadrature weight, so the remaining integrand is smooth (here constant).
// Validates c_norm: the result must equal 2d for every admissible kernel.
inline double secondMoment(const KernelSpec& k) {
  const double surface = (k.d == 1) ? 2.0 : 2.0 * M_PI;
  const double mu = double(k.d) + 1.0 - k.beta();  // radial weight exponent, > -1
  const GaussRule rule = gaussJacobiUnit(64, mu);
  double integral = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    // Absorbed weight t^mu; remaining factor of the radial integrand is 1.
    integral += rule.weights[i];
  }
  return surface * k.c_norm * std::pow(k.delta, double(k.d) + 2.0 - k.beta()) * integral;
}

}  // namespace ltn
