// Time integration: window strategies, the implicit step, and short coupled
// heat runs (window bookkeeping, energy decay).
#include <cmath>
#include <memory>

#include "doctest.h"
#include "ltn/experiments.hpp"
#include "ltn/timestepping.hpp"
#include "test_util.hpp"

using namespace ltn;

TEST_CASE("strategy names round-trip") {
  for (const WindowStrategy s :
       {WindowStrategy::fully_nonlocal, WindowStrategy::moving,
        WindowStrategy::moving_with_boundary_layer,
        WindowStrategy::fixed_annulus}) {
    CHECK(windowStrategyFromName(windowStrategyName(s)) == s);
  }
  CHECK(std::string(windowStrategyName(WindowStrategy::moving)) == "moving");
  CHECK_THROWS_AS(windowStrategyFromName("sideways"), Error);
}

TEST_CASE("forcing path and window regions") {
  const Vec2 c0 = forcingCenter(0.0);
  CHECK(c0.x == doctest::Approx(0.5));
  CHECK(c0.y == doctest::Approx(0.0).scale(1.0));
  const double pi = 3.14159265358979323846;
  const Vec2 cq = forcingCenter(pi / 2.0);
  CHECK(cq.x == doctest::Approx(0.0).scale(1.0));
  CHECK(cq.y == doctest::Approx(0.5));
  // The forcing ball has radius 0.1.
  const ScalarField ball = forcingBall(0.0);
  CHECK(ball(Vec2(0.55, 0.0)) == doctest::Approx(1.0));
  CHECK(ball(Vec2(0.65, 0.0)) == doctest::Approx(0.0).scale(1.0));

  TimeConfig cfg;
  cfg.window_halfwidth = 0.3;
  cfg.strategy = WindowStrategy::fully_nonlocal;
  CHECK(!localRegionAt(cfg, 0.0).contains(Vec2(0.5, 0.0)));

  cfg.strategy = WindowStrategy::moving;
  const Region moving = localRegionAt(cfg, 0.0);
  // Local region = domain minus the window box around (0.5, 0).
  CHECK(!moving.contains(Vec2(0.5, 0.0)));
  CHECK(!moving.contains(Vec2(0.75, 0.25)));
  CHECK(moving.contains(Vec2(-0.5, -0.5)));
  CHECK(moving.contains(Vec2(0.1, 0.0)));

  cfg.strategy = WindowStrategy::moving_with_boundary_layer;
  cfg.boundary_layer_width = 0.2;
  const Region layered = localRegionAt(cfg, 0.0);
  CHECK(!layered.contains(Vec2(0.5, 0.0)));
  // Points within the boundary band leave the local region.
  CHECK(!layered.contains(Vec2(-0.9, -0.9)));
  CHECK(!layered.contains(Vec2(0.0, 0.95)));
  CHECK(layered.contains(Vec2(0.0, -0.5)));

  cfg.strategy = WindowStrategy::fixed_annulus;
  const Region annulus = localRegionAt(cfg, 3.0);
  CHECK(!annulus.contains(Vec2(0.5, 0.0)));   // inside the static ring
  CHECK(annulus.contains(Vec2(0.0, 0.0)));    // central square stays local
  CHECK(annulus.contains(Vec2(0.9, 0.9)));    // outside the ring
}

TEST_CASE("backward Euler step identities") {
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, 0.25, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const SpMat M = assembleMass(space, false).mat;
  SpMat A(space.numDofs(), space.numDofs());  // zero operator
  Eigen::VectorXd u(space.numDofs());
  for (Index i = 0; i < space.numDofs(); ++i) u[i] = std::sin(double(i));
  const Eigen::VectorXd fzero = Eigen::VectorXd::Zero(space.numDofs());

  // No operator, no forcing: the state is a fixed point.
  const Eigen::VectorXd u1 = backwardEulerStep(M, A, u, fzero, 0.1, 0.1);
  CHECK((u1 - u).cwiseAbs().maxCoeff() <= 1e-12);

  // No operator with forcing: M (u+ - u) = dt f.
  Eigen::VectorXd f(space.numDofs());
  for (Index i = 0; i < space.numDofs(); ++i) f[i] = 0.25 * double(i) - 0.4;
  const double dt = 0.2;
  const Eigen::VectorXd u2 = backwardEulerStep(M, A, u, f, dt, 0.1);
  Eigen::VectorXd lhs = M * (u2 - u);
  CHECK((lhs - dt * f).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("short coupled heat run keeps its bookkeeping") {
  const auto mesh = squareMeshWithCollar(-1.0, 1.0, 0.25, 0.2);
  const KernelSpec k = makeConstantKernel(2, 0.2);
  TimeConfig cfg;
  cfg.dt = 0.5;
  cfg.t_end = 1.0;
  cfg.diffusivity = 0.1;
  cfg.strategy = WindowStrategy::moving;
  cfg.window_halfwidth = 0.4;
  QuadConfig quad;
  quad.singular_rule_order = 6;
  quad.regular_rule_order = 2;
  const HeatTrace trace = runHeat(mesh, k, cfg, quad);
  REQUIRE(trace.times.size() == 2);
  CHECK(trace.times[0] == doctest::Approx(0.5));
  CHECK(trace.times[1] == doctest::Approx(1.0));
  REQUIRE(trace.snapshots.size() == 2);
  REQUIRE(trace.window_box.size() == 2);
  CHECK(trace.initial.size() == trace.space.numDofs());
  for (const auto& snap : trace.snapshots) {
    REQUIRE(snap.size() == trace.space.numDofs());
    CHECK(snap.allFinite());
  }
  // The recorded window follows the forcing center at the step's time.
  const Vec2 c = forcingCenter(0.5);
  const auto& box = trace.window_box[0];
  CHECK(box[0] == doctest::Approx(c.x - 0.4));
  CHECK(box[2] == doctest::Approx(c.x + 0.4));
  CHECK(box[1] == doctest::Approx(c.y - 0.4));
  CHECK(box[3] == doctest::Approx(c.y + 0.4));
}

TEST_CASE("free decay is monotone in the mass norm") {
  const auto mesh = squareMeshWithCollar(-1.0, 1.0, 0.25, 0.2);
  const KernelSpec k = makeConstantKernel(2, 0.2);
  TimeConfig cfg;
  cfg.dt = 0.25;
  cfg.t_end = 1.0;
  cfg.diffusivity = 0.1;
  cfg.strategy = WindowStrategy::fully_nonlocal;
  cfg.with_forcing = false;
  QuadConfig quad;
  quad.singular_rule_order = 6;
  quad.regular_rule_order = 2;
  const HeatTrace trace = runHeat(mesh, k, cfg, quad);
  const SpMat M = assembleMass(trace.space, false).mat;
  auto energy = [&](const Eigen::VectorXd& v) { return v.dot(M * v); };
  double prev = energy(trace.initial);
  CHECK(prev > 0.0);
  for (const auto& snap : trace.snapshots) {
    const double e = energy(snap);
    CHECK(e <= prev * (1.0 + 1e-12));
    prev = e;
  }
}
