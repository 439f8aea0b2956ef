// quadrature.hpp: Gauss rules (Legendre, Jacobi), symmetric triangle rules,
// and power-law moment helpers shared by the assembly routines.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ltn/core.hpp"

namespace ltn {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1].
GaussRule gaussLegendre(int n);

// n-point Gauss-Legendre rule mapped to [a, b].
GaussRule gaussLegendreOn(int n, double a, double b);

// n-point rule for int_0^1 t^mu f(t) dt with the weight t^mu absorbed
// (Gauss-Jacobi with exponents (0, mu) mapped to the unit interval).
// Requires mu > -1.
GaussRule gaussJacobiUnit(int n, double mu);

// Symmetric quadrature rule on a triangle, stored as barycentric coordinates
// and weights summing to 1 (scale by the element measure when integrating).
struct TriangleRule {
  // bary[i] = (l0, l1, l2) with l0 + l1 + l2 = 1.
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
};

// Rule exact for polynomials of total degree <= degree.  Small symmetric
// rules for degree <= 4, collapsed tensor rules above.
const TriangleRule& triangleRule(int degree);

// int_a^b u^p du for 0 <= a < b, handling p = -1 (log) and near -1 stably.
// a = 0 requires p > -1.
double powerMoment(double p, double a, double b);

}  // namespace ltn
