// Spliced system: restriction maps, row inheritance from the block systems,
// agreement of the two constructions, mesh-ordering equivariance, and patch
// residuals.
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "doctest.h"
#include "ltn/experiments.hpp"
#include "ltn/splice.hpp"
#include "test_util.hpp"

using namespace ltn;

namespace {

struct Setup {
  std::shared_ptr<const Mesh> mesh;
  DomainPartition part;
  DofPartition dofs;
  LocalBlocks loc;
  NonlocalBlocks nl;
  SpliceSystem sys;
};

Setup makeSetup1d(double h, double delta, const ScalarField& g,
                  const ScalarField& f) {
  Setup s;
  s.mesh = intervalMeshWithCollar(-1.0, 1.0, h, delta);
  s.part = buildDomainPartition(s.mesh, Region::interval(-1.0, 0.0), delta, {});
  s.dofs = classifyDofs(s.part, SpaceKind::P1);
  const FESpace Sl = makeLocalSpace(s.part, s.dofs);
  const FESpace Sn = makeNonlocalSpace(s.part, s.dofs);
  const KernelSpec k = makeKernel(KernelFamily::fractional, 1, 0.75, delta);
  s.loc = eliminateLocalBc(assembleStiffness(Sl), assembleLoad(Sl, f), s.dofs, g);
  s.nl = eliminateVolumeCondition(assembleNonlocalStiffness(Sn, k),
                                  assembleLoad(Sn, f), s.dofs, g);
  s.sys = assembleSplice(s.loc, s.nl, s.dofs);
  return s;
}

}  // namespace

TEST_CASE("restriction maps partition the global ordering") {
  const auto s = makeSetup1d(0.1, 0.1, [](const Vec2& p) { return p.x; },
                             [](const Vec2&) { return 0.0; });
  const Restrictions R = buildRestrictions(s.dofs);
  CHECK(R.R_L.size() == s.dofs.I_L.size());
  CHECK(R.R_N.size() == s.dofs.I_N.size());
  CHECK(R.R_Gamma.size() == s.dofs.I_Gamma.size());
  CHECK(R.R_NI.size() == s.dofs.I_NI.size());
  // R_L ++ R_N is exactly 0..n-1.
  std::vector<Index> all = R.R_L;
  all.insert(all.end(), R.R_N.begin(), R.R_N.end());
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == std::size_t(s.dofs.n));
  for (Index i = 0; i < s.dofs.n; ++i) CHECK(all[std::size_t(i)] == i);
  // Interface maps point into the opposite block and collocate coordinates.
  const std::vector<Vec2> coords = globalCoords(s.dofs);
  for (std::size_t i = 0; i < R.R_Gamma.size(); ++i) {
    const Index gid = R.R_Gamma[i];
    CHECK(gid >= Index(R.R_L.size()));  // a nonlocal unknown
    const Vec2 a = s.dofs.local_coords[std::size_t(s.dofs.I_Gamma[i])];
    CHECK(dist(a, coords[std::size_t(gid)]) <= 1e-12);
  }
  for (std::size_t i = 0; i < R.R_NI.size(); ++i) {
    const Index gid = R.R_NI[i];
    CHECK(gid < Index(R.R_L.size()));  // a local unknown
    const Vec2 a = s.dofs.nonlocal_coords[std::size_t(s.dofs.I_NI[i])];
    CHECK(dist(a, coords[std::size_t(gid)]) <= 1e-12);
  }
}

TEST_CASE("rows inherit exactly from the block systems") {
  const auto s = makeSetup1d(0.05, 0.1, [](const Vec2& p) { return p.x; },
                             [](const Vec2& p) { return std::sin(p.x); });
  const Restrictions R = buildRestrictions(s.dofs);
  const Eigen::MatrixXd A(s.sys.A_S.mat);
  REQUIRE(s.sys.n_L == Index(s.dofs.I_L.size()));
  REQUIRE(s.sys.n_N == Index(s.dofs.I_N.size()));

  // Local rows: A_LL on the local block, A_LGamma scattered through R_Gamma.
  const Eigen::MatrixXd A_LL(s.loc.A_LL.mat);
  const Eigen::MatrixXd A_LG(s.loc.A_LGamma.mat);
  for (Index r = 0; r < s.sys.n_L; ++r) {
    Eigen::RowVectorXd want = Eigen::RowVectorXd::Zero(s.dofs.n);
    for (Index c = 0; c < s.sys.n_L; ++c) want[c] = A_LL(r, c);
    for (std::size_t c = 0; c < R.R_Gamma.size(); ++c)
      want[R.R_Gamma[c]] += A_LG(r, Eigen::Index(c));
    for (Index c = 0; c < s.dofs.n; ++c) CHECK(A(r, c) == want[c]);
    CHECK(s.sys.h_S[r] == s.loc.rhs[r]);
  }
  // Nonlocal rows: A_NN on the nonlocal block, A_NNI through R_NI.
  const Eigen::MatrixXd A_NN(s.nl.A_NN.mat);
  const Eigen::MatrixXd A_NNI(s.nl.A_NNI.mat);
  for (Index r = 0; r < s.sys.n_N; ++r) {
    Eigen::RowVectorXd want = Eigen::RowVectorXd::Zero(s.dofs.n);
    for (Index c = 0; c < s.sys.n_N; ++c) want[s.sys.n_L + c] = A_NN(r, c);
    for (std::size_t c = 0; c < R.R_NI.size(); ++c)
      want[R.R_NI[c]] += A_NNI(r, Eigen::Index(c));
    for (Index c = 0; c < s.dofs.n; ++c) CHECK(A(s.sys.n_L + r, c) == want[c]);
    CHECK(s.sys.h_S[s.sys.n_L + r] == s.nl.rhs[r]);
  }
}

TEST_CASE("bandwidth and asymmetry") {
  const auto s = makeSetup1d(0.05, 0.1, [](const Vec2& p) { return p.x; },
                             [](const Vec2&) { return 0.0; });
  const Eigen::MatrixXd A(s.sys.A_S.mat);
  // Local rows keep the 3-point stencil; nonlocal rows reach ~2 delta/h
  // neighbors.
  int max_local_nnz = 0, max_nonlocal_nnz = 0;
  for (Index r = 0; r < s.sys.n_L; ++r) {
    int nnz = 0;
    for (Index c = 0; c < s.dofs.n; ++c)
      if (A(r, c) != 0.0) ++nnz;
    max_local_nnz = std::max(max_local_nnz, nnz);
  }
  for (Index r = 0; r < s.sys.n_N; ++r) {
    int nnz = 0;
    for (Index c = 0; c < s.dofs.n; ++c)
      if (A(s.sys.n_L + r, c) != 0.0) ++nnz;
    max_nonlocal_nnz = std::max(max_nonlocal_nnz, nnz);
  }
  CHECK(max_local_nnz <= 3);
  CHECK(max_nonlocal_nnz >= 5);   // 1 + 2*delta/h = 5 plus cut-cell fringe
  CHECK(max_nonlocal_nnz <= 9);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-8 * A.cwiseAbs().maxCoeff());
}

TEST_CASE("zero data gives the zero solution") {
  const auto s = makeSetup1d(0.1, 0.1, [](const Vec2&) { return 0.0; },
                             [](const Vec2&) { return 0.0; });
  CHECK(s.sys.h_S.cwiseAbs().maxCoeff() == doctest::Approx(0.0).scale(1.0));
  const SpliceSolution sol = solveSplice(s.sys, s.dofs, s.loc, s.nl);
  CHECK(sol.u_global.cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(sol.u_L.cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(sol.u_N.cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("alternate row-selection construction matches entrywise") {
  const double h = 0.1, delta = 0.1;
  const auto mesh = intervalMeshWithCollar(-1.0, 1.0, h, delta);
  const DomainPartition part =
      buildDomainPartition(mesh, Region::interval(-1.0, 0.0), delta, {});
  const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
  const FESpace Sl = makeLocalSpace(part, dofs);
  const FESpace Sn = makeNonlocalSpace(part, dofs);
  const KernelSpec k = makeKernel(KernelFamily::fractional, 1, 0.75, delta);
  const auto g = [](const Vec2& p) { return p.x; };
  const auto f = [](const Vec2&) { return 0.0; };
  const LocalBlocks loc =
      eliminateLocalBc(assembleStiffness(Sl), assembleLoad(Sl, f), dofs, g);
  const NonlocalBlocks nl = eliminateVolumeCondition(
      assembleNonlocalStiffness(Sn, k), assembleLoad(Sn, f), dofs, g);
  const SpliceSystem sys = assembleSplice(loc, nl, dofs);

  FullOperators full;
  full.nonlocal_space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  full.A_N = assembleNonlocalStiffness(full.nonlocal_space, k);
  full.local_space = buildSpace(mesh, SpaceKind::P1, interiorElems(*mesh));
  full.A_L = assembleStiffness(full.local_space);
  const SparseOperator alt = assembleSpliceAlternate(full, part, dofs);
  const Eigen::MatrixXd D1(sys.A_S.mat), D2(alt.mat);
  REQUIRE(D1.rows() == D2.rows());
  CHECK((D1 - D2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("solution is equivariant under mesh relabeling") {
  // Build the same coupled problem on the standard mesh and on a copy whose
  // vertices and elements are stored in reversed order; nodal values at equal
  // coordinates must agree to solver precision.
  const double h = 0.1, delta = 0.1;
  const auto g = [](const Vec2& p) { return p.x * p.x; };
  const auto f = [](const Vec2& p) { return std::cos(2.0 * p.x); };

  auto solve_on = [&](std::shared_ptr<const Mesh> mesh) {
    const DomainPartition part =
        buildDomainPartition(mesh, Region::interval(-1.0, 0.0), delta, {});
    const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
    const FESpace Sl = makeLocalSpace(part, dofs);
    const FESpace Sn = makeNonlocalSpace(part, dofs);
    const KernelSpec k = makeKernel(KernelFamily::fractional, 1, 0.75, delta);
    const LocalBlocks loc =
        eliminateLocalBc(assembleStiffness(Sl), assembleLoad(Sl, f), dofs, g);
    const NonlocalBlocks nl = eliminateVolumeCondition(
        assembleNonlocalStiffness(Sn, k), assembleLoad(Sn, f), dofs, g);
    const SpliceSystem sys = assembleSplice(loc, nl, dofs);
    const SpliceSolution sol = solveSplice(sys, dofs, loc, nl);
    std::map<double, double> by_coord;
    const std::vector<Vec2> coords = globalCoords(dofs);
    for (Index i = 0; i < dofs.n; ++i)
      by_coord[coords[std::size_t(i)].x] = sol.u_global[i];
    return by_coord;
  };

  const auto base = intervalMeshWithCollar(-1.0, 1.0, h, delta);
  Mesh rev;
  rev.dim = 1;
  const Index nv = Index(base->vertices.size());
  for (Index v = nv - 1; v >= 0; --v) rev.vertices.push_back(base->vertices[std::size_t(v)]);
  const Index ne = Index(base->elems.size());
  for (Index e = ne - 1; e >= 0; --e) {
    const auto& el = base->elems[std::size_t(e)];
    rev.elems.push_back({nv - 1 - el[0], nv - 1 - el[1], Index(-1)});
    if (base->isExterior(e)) rev.exterior.push_back(Index(rev.elems.size()) - 1);
  }
  rev.finalize();

  const auto a = solve_on(base);
  const auto b = solve_on(std::make_shared<Mesh>(std::move(rev)));
  REQUIRE(a.size() == b.size());
  for (const auto& [x, va] : a) {
    auto it = b.find(x);
    REQUIRE(it != b.end());
    CHECK(std::abs(va - it->second) <= 1e-12);
  }
}

TEST_CASE("patch residuals") {
  SUBCASE("1D linear data is reproduced to solver precision") {
    const auto s = makeSetup1d(0.05, 0.1, [](const Vec2& p) { return p.x; },
                               [](const Vec2&) { return 0.0; });
    CHECK(patchTestResidual(s.sys, s.dofs, [](const Vec2& p) { return p.x; }) <=
          1e-10);
  }
  SUBCASE("1D quadratic with matching forcing") {
    const auto s = makeSetup1d(0.05, 0.1,
                               [](const Vec2& p) { return p.x * p.x; },
                               [](const Vec2&) { return -2.0; });
    CHECK(patchTestResidual(s.sys, s.dofs,
                            [](const Vec2& p) { return p.x * p.x; }) <= 1e-8);
  }
  SUBCASE("2D quadratic with matching forcing") {
    const auto mesh = squareMeshWithCollar(-1.0, 1.0, 0.25, 0.2);
    const DomainPartition part = buildDomainPartition(
        mesh, Region::box(Vec2(-1.0, -1.0), Vec2(0.0, 1.0)), 0.2, {});
    const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
    const FESpace Sl = makeLocalSpace(part, dofs);
    const FESpace Sn = makeNonlocalSpace(part, dofs);
    const KernelSpec k = makeKernel(KernelFamily::fractional, 2, 0.25, 0.2);
    const auto u_star = [](const Vec2& p) {
      return 2.0 * (p.x - 1.0) * (p.x - 1.0) - p.y + 2.0;
    };
    const auto f = [](const Vec2&) { return -4.0; };
    QuadConfig quad;
    quad.singular_rule_order = 10;
    const LocalBlocks loc = eliminateLocalBc(assembleStiffness(Sl),
                                             assembleLoad(Sl, f), dofs, u_star);
    const NonlocalBlocks nl = eliminateVolumeCondition(
        assembleNonlocalStiffness(Sn, k, quad), assembleLoad(Sn, f), dofs,
        u_star);
    const SpliceSystem sys = assembleSplice(loc, nl, dofs);
    CHECK(patchTestResidual(sys, dofs, u_star) <= 1e-8);
  }
}
