// analytic.hpp: closed-form solutions, forcings, and geometric helpers for
// the experiment suite.  Every manufactured case carries an independent
// dense-quadrature (or seeded Monte Carlo) oracle that checks the nonlocal
// operator applied to the stated solution against the stated forcing before
// the case is used.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ltn/fe.hpp"
#include "ltn/kernel.hpp"

namespace ltn {

// Area of the intersection of circles with radii R and r, centers d apart.
double circleIntersectionArea(double R, double r, double d);

struct ManufacturedCase {
  std::string name;
  int dim = 1;
  KernelSpec kernel;
  ScalarField u_exact;  // defined on the domain and all collars
  ScalarField f;        // forcing
  ScalarField g;        // boundary / volume data (trace of u_exact)
  Vec2 lo{-1.0, 0.0}, hi{1.0, 0.0};  // domain box (y ignored in 1D)

  // Oracle configuration.
  std::vector<Vec2> oracle_samples;
  double oracle_rel_tol = 1e-4;
  bool monte_carlo_oracle = false;  // indicator solutions: areas by sampling
  // Radii (from a given center) where the direction-averaged integrand of
  // the dense oracle loses smoothness; empty when the solution is smooth.
  std::function<std::vector<double>(const Vec2&)> radial_breaks;

  // Indicator-solution geometry (2D discontinuity case).
  Vec2 x_star{0.0, 0.0};
  double r_star = 0.0;
};

// Patch tests: boundary data read off the exact solution.
ManufacturedCase patchLinear1dCase();     // u = x,  f = 0,  fractional s=0.75
ManufacturedCase patchQuadratic1dCase();  // u = x², f = -2, fractional s=0.75
ManufacturedCase patchQuadratic1dLowOrderCase();  // s=0.25 (P0-admissible)
ManufacturedCase patch2dCase();  // u = 2(x-1)²-y+2, f = -4, s=0.25, δ=0.2

// 1D interior-jump solution with the inverse-distance kernel.
ManufacturedCase jump1dCase(double delta);

// 2D cylinder-indicator solution with the constant kernel.
ManufacturedCase cylinder2dCase(const Vec2& x_star, double r, double delta);

// Local-limit study data (no closed-form solution): f = |x|^{-1/4} + sin x
// with boundary values u(±1) = ±1 extended linearly into the collars.
ScalarField deltaConvergenceForcing();
ScalarField linearExtensionData();

// Exact load vector for the 1D jump forcing (closed-form element integrals,
// so no quadrature error enters near the logarithmic singularity).
Eigen::VectorXd jumpLoad1D(const FESpace& space, double delta);

// Dense-quadrature evaluation of -(L_N u)(x): symmetrized radial form (the
// principal value cancels by symmetry), singular radial weight absorbed into
// a Gauss-Jacobi rule, radial pieces split at the case's break radii.
// Quadrature nodes never fall below radius 1e-8 (guarded).
double minusLnuDense(const ManufacturedCase& c, const Vec2& x);

struct CaseCheck {
  std::string name;
  double max_rel_err = 0.0;
  int samples = 0;
  bool pass = false;
};

// Gate: -L_N u_exact must reproduce f at every oracle sample point.
CaseCheck verifyCase(const ManufacturedCase& c);

}  // namespace ltn
