// Nonlocal assembly: pair enumeration, symmetry/consistency identities, and
// agreement with an independent brute-force quadrature oracle.
#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "doctest.h"
#include "ltn/assembly_nonlocal.hpp"
#include "ltn/experiments.hpp"
#include "test_util.hpp"

using namespace ltn;

TEST_CASE("pair enumeration respects the horizon") {
  SUBCASE("delta smaller than h keeps only touching pairs") {
    auto mesh =
        std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, 0.25, 0.0, 0.0));
    const auto pairs = enumeratePairs(*mesh, allElems(*mesh), 0.1);
    for (const auto& pr : pairs) CHECK(std::abs(pr.elem_b - pr.elem_a) <= 1);
    // 4 self pairs + 3 adjacent pairs.
    CHECK(pairs.size() == 7);
    for (const auto& pr : pairs) {
      if (pr.elem_a == pr.elem_b)
        CHECK(pr.overlap_class == OverlapClass::identical);
      else
        CHECK(pr.overlap_class == OverlapClass::vertex_touch);
    }
  }
  SUBCASE("delta = 2h reaches two elements each side") {
    auto mesh =
        std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, 0.05, 0.0, 0.0));
    const auto pairs = enumeratePairs(*mesh, allElems(*mesh), 0.1);
    std::set<long> offsets;
    for (const auto& pr : pairs) offsets.insert(long(pr.elem_b - pr.elem_a));
    // Gap of pair (k, k+2) is exactly delta - not < delta - so offsets stop
    // at 2; 0,1,2 must all occur.
    CHECK(offsets.count(0) == 1);
    CHECK(offsets.count(1) == 1);
    CHECK(offsets.count(2) == 1);
    CHECK(*offsets.rbegin() <= 2);
    // Reflection symmetry of the count around the midpoint: pairs touching
    // element k match pairs touching element n-1-k.
    std::vector<int> per_elem(20, 0);
    for (const auto& pr : pairs) {
      per_elem[std::size_t(pr.elem_a)]++;
      if (pr.elem_b != pr.elem_a) per_elem[std::size_t(pr.elem_b)]++;
    }
    for (int k = 0; k < 20; ++k) CHECK(per_elem[std::size_t(k)] == per_elem[std::size_t(19 - k)]);
  }
  SUBCASE("2D pair classes") {
    auto mesh = std::make_shared<Mesh>(
        structuredTriangleMesh(0.0, 1.0, 0.0, 1.0, 0.5, 0.0));
    const auto pairs = enumeratePairs(*mesh, allElems(*mesh), 0.3);
    bool saw_identical = false, saw_edge = false, saw_vertex = false;
    for (const auto& pr : pairs) {
      if (pr.overlap_class == OverlapClass::identical) saw_identical = true;
      if (pr.overlap_class == OverlapClass::edge_touch) saw_edge = true;
      if (pr.overlap_class == OverlapClass::vertex_touch) saw_vertex = true;
    }
    CHECK(saw_identical);
    CHECK(saw_edge);
    CHECK(saw_vertex);
  }
}

TEST_CASE("assembled operator is symmetric and annihilates constants") {
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(-1.0, 1.0, 0.1, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const KernelSpec k = makeKernel(KernelFamily::fractional, 1, 0.75, 0.1);
  const Eigen::MatrixXd A(assembleNonlocalStiffness(space, k).mat);
  const double scale = A.cwiseAbs().maxCoeff();
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(A.cols());
  CHECK((A * ones).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("linear and quadratic consistency on interior rows") {
  // Rows whose full horizon neighborhood is inside the mesh reproduce the
  // action on polynomials: zero for linears, and for u = x^2 the ratio
  // (A u)_i / (M 1)_i equals -2 (the weak form a(u, phi) = integral of
  // f phi with f = -L u = -2).
  const double h = 0.05, delta = 0.1;
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(-1.0, 1.0, h, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const KernelSpec k = makeKernel(KernelFamily::fractional, 1, 0.75, delta);
  const Eigen::MatrixXd A(assembleNonlocalStiffness(space, k).mat);
  const Eigen::MatrixXd M(assembleMass(space, false).mat);
  Eigen::VectorXd lin(space.numDofs()), quad(space.numDofs());
  for (Index d = 0; d < space.numDofs(); ++d) {
    const double x = space.dof_coords[std::size_t(d)].x;
    lin[d] = 2.0 * x + 0.3;
    quad[d] = x * x;
  }
  const Eigen::VectorXd Alin = A * lin;
  const Eigen::VectorXd Aquad = A * quad;
  const Eigen::VectorXd Mones = M * Eigen::VectorXd::Ones(space.numDofs());
  const double scale = A.cwiseAbs().maxCoeff();
  for (Index d = 0; d < space.numDofs(); ++d) {
    const double x = space.dof_coords[std::size_t(d)].x;
    if (std::abs(x) > 1.0 - (delta + h) - 1e-12) continue;  // needs full horizon
    CHECK(std::abs(Alin[d]) <= 1e-9 * scale);
    // P1 interpolation of x^2 is not exact, but on a uniform grid the
    // interpolation error is a constant shift (h^2/... per cell pattern)
    // that the operator treats like a constant: the ratio is exact.
    CHECK(Aquad[d] / Mones[d] == doctest::Approx(-2.0).epsilon(1e-6));
  }
}

TEST_CASE("six-element P0 matrix matches the brute-force oracle") {
  // Constant kernel, delta < h: every entry against adaptive quadrature.
  const double h = 1.0 / 6.0, delta = 0.1;
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, h, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P0, allElems(*mesh));
  const KernelSpec k = makeConstantKernel(1, delta);
  const Eigen::MatrixXd A(assembleNonlocalStiffness(space, k).mat);
  const Eigen::MatrixXd O = test_util::brute1d(space, k);
  const double scale = O.cwiseAbs().maxCoeff();
  CHECK((A - O).cwiseAbs().maxCoeff() <= 1e-8 * scale);
}

TEST_CASE("P1 fractional matrix matches the brute-force oracle") {
  const double h = 0.25, delta = 0.3;
  auto mesh =
      std::make_shared<Mesh>(uniformIntervalMesh(0.0, 1.0, h, 0.0, 0.0));
  const FESpace space = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const KernelSpec k = makeKernel(KernelFamily::fractional, 1, 0.6, delta);
  const Eigen::MatrixXd A(assembleNonlocalStiffness(space, k).mat);
  const Eigen::MatrixXd O = test_util::brute1d(space, k);
  const double scale = O.cwiseAbs().maxCoeff();
  CHECK((A - O).cwiseAbs().maxCoeff() <= 1e-7 * scale);
}

TEST_CASE("volume-condition elimination") {
  const double h = 0.05, delta = 0.1;
  const auto mesh = intervalMeshWithCollar(-1.0, 1.0, h, delta);
  const DomainPartition part =
      buildDomainPartition(mesh, Region::interval(-1.0, 0.0), delta, {});
  const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
  const FESpace Sn = makeNonlocalSpace(part, dofs);
  const KernelSpec k = makeKernel(KernelFamily::fractional, 1, 0.75, delta);
  const SparseOperator A = assembleNonlocalStiffness(Sn, k);
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(Sn.numDofs());

  const NonlocalBlocks blocks =
      eliminateVolumeCondition(A, f, dofs, [](const Vec2& p) { return p.x; });
  CHECK(blocks.A_NN.mat.rows() == Eigen::Index(dofs.I_N.size()));
  CHECK(blocks.A_NN.mat.cols() == Eigen::Index(dofs.I_N.size()));
  CHECK(blocks.A_NNI.mat.cols() == Eigen::Index(dofs.I_NI.size()));
  CHECK(blocks.A_NgI.mat.cols() == Eigen::Index(dofs.I_gI.size()));
  CHECK(blocks.g.size() == Eigen::Index(dofs.I_gI.size()));
  // g(x) = x on the exterior collar right of x = 1.
  for (Eigen::Index i = 0; i < blocks.g.size(); ++i) CHECK(blocks.g[i] >= 1.0 - 1e-12);
  CHECK(blocks.rhs.size() == Eigen::Index(dofs.I_N.size()));
  // Nonzero data moves the rhs away from the raw load.
  CHECK(blocks.rhs.cwiseAbs().maxCoeff() > 0.0);

  const NonlocalBlocks zero =
      eliminateVolumeCondition(A, f, dofs, [](const Vec2&) { return 0.0; });
  CHECK(zero.rhs.cwiseAbs().maxCoeff() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("inclusion split has no given-exterior block") {
  // Omega_L surrounds the nonlocal core, so the nonlocal horizon never
  // reaches the true exterior: I_gI is empty and the A_NgI block has zero
  // columns.
  const auto mesh = squareMeshWithCollar(-1.0, 1.0, 0.25, 0.2);
  const Region hole = Region::box(Vec2(-0.25, -0.25), Vec2(0.25, 0.25));
  const DomainPartition part =
      buildDomainPartition(mesh, Region::complement(hole), 0.2, {});
  const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
  CHECK(dofs.I_gI.empty());
  CHECK(part.elems_gI.empty());
  const FESpace Sn = makeNonlocalSpace(part, dofs);
  const KernelSpec k = makeKernel(KernelFamily::fractional, 2, 0.25, 0.2);
  QuadConfig quad;
  quad.singular_rule_order = 6;
  quad.regular_rule_order = 2;
  const SparseOperator A = assembleNonlocalStiffness(Sn, k, quad);
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(Sn.numDofs());
  const NonlocalBlocks blocks =
      eliminateVolumeCondition(A, f, dofs, [](const Vec2&) { return 0.0; });
  CHECK(blocks.A_NgI.mat.cols() == 0);
}
