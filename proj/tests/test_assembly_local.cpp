// Local (Laplacian) assembly: hand stencils, mass identities, singular
// forcing loads against a graded-quadrature oracle, and elimination.
#include <cmath>
#include <memory>

#include "doctest.h"
#include "ltn/assembly_local.hpp"
#include "ltn/experiments.hpp"
#include "test_util.hpp"

using namespace ltn;

TEST_CASE("1D stiffness rows are the classical stencil") {
  const double h = 0.25;
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, h, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const SparseOperator A = assembleStiffness(space);
  const Eigen::MatrixXd D(A.mat);
  // Interior row (dof at x = 0.5, index 2 in coordinate order).
  CHECK(D(2, 1) == doctest::Approx(-1.0 / h));
  CHECK(D(2, 2) == doctest::Approx(2.0 / h));
  CHECK(D(2, 3) == doctest::Approx(-1.0 / h));
  // Constants are annihilated.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(D.cols());
  CHECK((D * ones).cwiseAbs().maxCoeff() <= 1e-12 * D.cwiseAbs().maxCoeff());
}

TEST_CASE("single right-triangle element matrix") {
  Mesh m;
  m.dim = 2;
  m.vertices = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  m.elems = {{0, 1, 2}};
  m.exterior = {0};
  m.finalize();
  auto mesh = std::make_shared<Mesh>(std::move(m));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, {0});
  const Eigen::MatrixXd D(assembleStiffness(space).mat);
  const double expect[3][3] = {{1.0, -0.5, -0.5},
                               {-0.5, 0.5, 0.0},
                               {-0.5, 0.0, 0.5}};
  // DOFs are ordered by vertex id = the construction order above.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(D(i, j) == doctest::Approx(expect[i][j]).epsilon(1e-13));
}

TEST_CASE("mass matrix rows and totals") {
  const double h = 0.2;
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, h, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const Eigen::MatrixXd M(assembleMass(space, false).mat);
  CHECK(M(2, 1) == doctest::Approx(h / 6.0));
  CHECK(M(2, 2) == doctest::Approx(2.0 * h / 3.0));
  CHECK(M(2, 3) == doctest::Approx(h / 6.0));
  CHECK(M.sum() == doctest::Approx(1.0));  // domain measure

  const FESpace p0 = buildSpace(mesh, SpaceKind::P0, allElems(*mesh));
  const Eigen::MatrixXd M0(assembleMass(p0, false).mat);
  for (int i = 0; i < M0.rows(); ++i) {
    CHECK(M0(i, i) == doctest::Approx(h));
    for (int j = 0; j < M0.cols(); ++j)
      if (j != i) CHECK(M0(i, j) == 0.0);
  }

  // Lumped variant keeps row sums.
  const Eigen::MatrixXd ML(assembleMass(space, true).mat);
  CHECK(ML.sum() == doctest::Approx(1.0));
  CHECK(ML(2, 1) == 0.0);
}

TEST_CASE("uniform load entries") {
  const double h = 0.25;
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, h, 0.0, 0.0));
  const FESpace p1 = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const Eigen::VectorXd f1 =
      assembleLoad(p1, [](const Vec2&) { return 1.0; });
  CHECK(f1[2] == doctest::Approx(h));       // interior hat
  CHECK(f1[0] == doctest::Approx(h / 2.0));  // boundary half-hat
  const FESpace p0 = buildSpace(mesh, SpaceKind::P0, allElems(*mesh));
  const Eigen::VectorXd f0 =
      assembleLoad(p0, [](const Vec2&) { return 1.0; });
  for (int i = 0; i < f0.size(); ++i) CHECK(f0[i] == doctest::Approx(h));
}

TEST_CASE("radial power load matches a graded-quadrature oracle") {
  // f(x) = |x|^{-1/4} assembled with the singularity-aware path.
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(-1.0, 1.0, 0.1, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const Eigen::VectorXd got = assembleRadialPowerLoad(space, 0.0, -0.25, 12);
  double max_rel = 0.0;
  for (Index d = 0; d < space.numDofs(); ++d) {
    const double xd = space.dof_coords[std::size_t(d)].x;
    const double h = 0.1;
    auto hat = [&](double x) {
      const double t = 1.0 - std::abs(x - xd) / h;
      return t > 0.0 ? t : 0.0;
    };
    const double lo = std::max(-1.0, xd - h);
    const double hi = std::min(1.0, xd + h);
    double want = 0.0;
    // Split at the singularity so the graded panels see it as an endpoint.
    if (lo < 0.0 && hi > 0.0) {
      want = test_util::gradedIntegrate(
                 [&](double x) { return std::pow(std::abs(x), -0.25) * hat(x); },
                 lo, 0.0) +
             test_util::gradedIntegrate(
                 [&](double x) { return std::pow(std::abs(x), -0.25) * hat(x); },
                 0.0, hi);
    } else {
      want = test_util::gradedIntegrate(
          [&](double x) { return std::pow(std::abs(x), -0.25) * hat(x); }, lo,
          hi);
    }
    max_rel = std::max(max_rel, std::abs(got[d] - want) /
                                    std::max(std::abs(want), 1e-300));
  }
  CHECK(max_rel <= 1e-8);
}

TEST_CASE("boundary elimination carries the stencil-weighted data") {
  // 1D h = 0.25, Omega_L = (-1, 0), g(-1) = -1, f = 0: the first interior
  // row's RHS picks up +g(-1)/h = -4.
  const auto mesh = intervalMeshWithCollar(-1.0, 1.0, 0.25, 0.1);
  const DomainPartition part =
      buildDomainPartition(mesh, Region::interval(-1.0, 0.0), 0.1, {});
  const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
  const FESpace Sl = makeLocalSpace(part, dofs);
  const SparseOperator A = assembleStiffness(Sl);
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(Sl.numDofs());
  const LocalBlocks blocks =
      eliminateLocalBc(A, f, dofs, [](const Vec2& p) { return p.x; });
  REQUIRE(dofs.I_L.size() == 3);
  CHECK(blocks.A_LL.mat.rows() == 3);
  CHECK(blocks.A_LL.mat.cols() == 3);
  CHECK(blocks.A_LGamma.mat.cols() == Eigen::Index(dofs.I_Gamma.size()));
  // I_L is coordinate-sorted, so entry 0 is the dof at x = -0.75.
  CHECK(blocks.rhs[0] == doctest::Approx(-4.0));
  CHECK(blocks.rhs[1] == doctest::Approx(0.0).scale(1.0));

  // Zero data leaves the plain load vector.
  const LocalBlocks zero =
      eliminateLocalBc(A, f, dofs, [](const Vec2&) { return 0.0; });
  CHECK(zero.rhs.cwiseAbs().maxCoeff() == doctest::Approx(0.0).scale(1.0));
}
