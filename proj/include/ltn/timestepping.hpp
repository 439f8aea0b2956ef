// timestepping.hpp: backward-Euler integration of the coupled heat equation
//   u_t - diffusivity * L_N u = f   on (-1,1)^2, homogeneous volume data,
// with selectable strategies for where the nonlocal window sits each step.
// The full-domain operators are assembled once; each step's coupled matrix
// is a row relabeling for that step's window.
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ltn/assembly_nonlocal.hpp"
#include "ltn/region.hpp"
#include "ltn/splice.hpp"

namespace ltn {

enum class WindowStrategy {
  fully_nonlocal,              // no local region at all
  moving,                      // box of the given halfwidth around the forcing
  moving_with_boundary_layer,  // moving box plus a band along the boundary
  fixed_annulus,               // (-0.8,0.8)^2 minus [-0.2,0.2]^2, static
};

const char* windowStrategyName(WindowStrategy s);
WindowStrategy windowStrategyFromName(const std::string& name);

struct TimeConfig {
  double dt = 0.1;
  double t_end = 10.0;
  double diffusivity = 0.1;
  WindowStrategy strategy = WindowStrategy::fully_nonlocal;
  double window_halfwidth = 0.3;
  double boundary_layer_width = 0.2;  // band width along the domain boundary
  double domain_halfwidth = 1.0;      // the domain is (-a, a)^2
  bool with_forcing = true;           // false: free decay from the same start
};

// Center of the forcing ball: (cos t, sin t) / 2.
Vec2 forcingCenter(double t);
// Indicator of the radius-0.1 ball around forcingCenter(t).
ScalarField forcingBall(double t);

// Local-region descriptor of the strategy at time t (empty when the whole
// domain is nonlocal); elements cut by the window boundary snap nonlocal.
Region localRegionAt(const TimeConfig& config, double t);

// One implicit step: solves (M + diffusivity*dt*A) x = M u + dt f and
// verifies the relative residual is below 1e-10.
Eigen::VectorXd backwardEulerStep(const SpMat& M, const SpMat& A,
                                  const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& f, double dt,
                                  double diffusivity);

struct HeatTrace {
  std::shared_ptr<const Mesh> mesh;
  FESpace space;           // parent P1 space over the interior elements
  Eigen::VectorXd initial;  // nodal interpolant of the starting indicator
  std::vector<double> times;
  std::vector<Eigen::VectorXd> snapshots;  // per step, space-DOF vectors
  // Nominal nonlocal-window box per step (lo.x, lo.y, hi.x, hi.y); the
  // domain box for the non-moving strategies.
  std::vector<std::array<double, 4>> window_box;
};

// Integrates the equation on the given parent mesh (which must carry an
// exterior collar at least one horizon wide).  Solution vectors stay on the
// parent-space index space across steps; only the local/nonlocal labeling
// of rows changes with the window.
HeatTrace runHeat(std::shared_ptr<const Mesh> mesh, const KernelSpec& kernel,
                  const TimeConfig& config, const QuadConfig& quad = {});

}  // namespace ltn
