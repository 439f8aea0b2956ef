#include "ltn/assembly_local.hpp"

#include <cmath>

#include "ltn/quadrature.hpp"

namespace ltn {

namespace {

// Constant P1 shape gradients on element k (2D) or the 1D pair.
void shapeGradients(const Mesh& mesh, Index k, Vec2 grad[3]) {
  const auto& e = mesh.elems[static_cast<std::size_t>(k)];
  const Vec2& a = mesh.vertices[static_cast<std::size_t>(e[0])];
  const Vec2& b = mesh.vertices[static_cast<std::size_t>(e[1])];
  if (mesh.dim == 1) {
    const double h = b.x - a.x;
    grad[0] = {-1.0 / h, 0.0};
    grad[1] = {1.0 / h, 0.0};
    grad[2] = {0.0, 0.0};
    return;
  }
  const Vec2& c = mesh.vertices[static_cast<std::size_t>(e[2])];
  const double det = (b - a).cross(c - a);  // 2 * area, positive
  // lambda_i(x) is affine with gradient rot90(opposite edge)/det.
  grad[0] = {(b.y - c.y) / det, (c.x - b.x) / det};
  grad[1] = {(c.y - a.y) / det, (a.x - c.x) / det};
  grad[2] = {(a.y - b.y) / det, (b.x - a.x) / det};
}

}  // namespace

SparseOperator assembleStiffness(const FESpace& space) {
  require(space.kind == SpaceKind::P1, "assembleStiffness: P1 space required");
  const Mesh& m = *space.mesh;
  std::vector<Triplet> trips;
  Vec2 grad[3];
  for (Index k : space.elems) {
    const double meas = m.elemMeasure(k);
    shapeGradients(m, k, grad);
    const auto dofs = space.elementDofs(k);
    const int nv = m.vertsPerElem();
    for (int i = 0; i < nv; ++i) {
      for (int j = 0; j < nv; ++j) {
        trips.emplace_back(static_cast<int>(dofs[static_cast<std::size_t>(i)]),
                           static_cast<int>(dofs[static_cast<std::size_t>(j)]),
                           meas * grad[i].dot(grad[j]));
      }
    }
  }
  return operatorFromTriplets(space.numDofs(), space.numDofs(), trips,
                              "local_all", "local_all");
}

SparseOperator assembleMass(const FESpace& space, bool lumped) {
  const Mesh& m = *space.mesh;
  std::vector<Triplet> trips;
  for (Index k : space.elems) {
    const double meas = m.elemMeasure(k);
    const auto dofs = space.elementDofs(k);
    if (space.kind == SpaceKind::P0) {
      trips.emplace_back(static_cast<int>(dofs[0]), static_cast<int>(dofs[0]), meas);
      continue;
    }
    const int nv = m.vertsPerElem();
    // Consistent P1 element mass: meas/(nv*(nv+1)) * (1 + delta_ij).
    const double off = meas / (nv * (nv + 1));
    for (int i = 0; i < nv; ++i) {
      if (lumped) {
        trips.emplace_back(static_cast<int>(dofs[static_cast<std::size_t>(i)]),
                           static_cast<int>(dofs[static_cast<std::size_t>(i)]),
                           meas / nv);
        continue;
      }
      for (int j = 0; j < nv; ++j) {
        trips.emplace_back(static_cast<int>(dofs[static_cast<std::size_t>(i)]),
                           static_cast<int>(dofs[static_cast<std::size_t>(j)]),
                           off * (i == j ? 2.0 : 1.0));
      }
    }
  }
  return operatorFromTriplets(space.numDofs(), space.numDofs(), trips,
                              space.kind == SpaceKind::P0 ? "p0_all" : "p1_all",
                              space.kind == SpaceKind::P0 ? "p0_all" : "p1_all");
}

Eigen::VectorXd assembleLoad(const FESpace& space, const ScalarField& f,
                             int order) {
  require(order >= 1, "assembleLoad: order must be >= 1");
  const Mesh& m = *space.mesh;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.numDofs());
  const int n1d = (order + 2) / 2;
  for (Index k : space.elems) {
    const double meas = m.elemMeasure(k);
    const auto dofs = space.elementDofs(k);
    const auto& e = m.elems[static_cast<std::size_t>(k)];
    auto accumulate = [&](const Vec2& p, double w) {
      const double fv = f(p);
      require(std::isfinite(fv), "assembleLoad: non-finite forcing value");
      if (space.kind == SpaceKind::P0) {
        load[dofs[0]] += w * fv;
        return;
      }
      const auto lam = barycentric(m, k, p);
      for (int i = 0; i < m.vertsPerElem(); ++i) {
        load[dofs[static_cast<std::size_t>(i)]] +=
            w * fv * lam[static_cast<std::size_t>(i)];
      }
    };
    if (m.dim == 1) {
      const double a = m.vertices[static_cast<std::size_t>(e[0])].x;
      const double b = m.vertices[static_cast<std::size_t>(e[1])].x;
      const GaussRule rule = gaussLegendreOn(n1d, a, b);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        accumulate({rule.nodes[q], 0.0}, rule.weights[q]);
      }
    } else {
      const TriangleRule& rule = triangleRule(order);
      const Vec2& a = m.vertices[static_cast<std::size_t>(e[0])];
      const Vec2& b = m.vertices[static_cast<std::size_t>(e[1])];
      const Vec2& c = m.vertices[static_cast<std::size_t>(e[2])];
      for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        const auto& l = rule.bary[q];
        const Vec2 p = a * l[0] + b * l[1] + c * l[2];
        accumulate(p, meas * rule.weights[q]);
      }
    }
  }
  return load;
}

Eigen::VectorXd assembleRadialPowerLoad(const FESpace& space, double center,
                                        double power, int order) {
  const Mesh& m = *space.mesh;
  require(m.dim == 1, "assembleRadialPowerLoad: 1D only");
  require(power > -1.0, "assembleRadialPowerLoad: power must be > -1");
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.numDofs());
  const GaussRule jacobi = gaussJacobiUnit(std::max(order, 4), power);
  for (Index k : space.elems) {
    const auto& e = m.elems[static_cast<std::size_t>(k)];
    const double a = m.vertices[static_cast<std::size_t>(e[0])].x;
    const double b = m.vertices[static_cast<std::size_t>(e[1])].x;
    const auto dofs = space.elementDofs(k);
    auto accumulate = [&](double x, double w) {
      if (space.kind == SpaceKind::P0) {
        load[dofs[0]] += w;
        return;
      }
      const double t = (x - a) / (b - a);
      load[dofs[0]] += w * (1.0 - t);
      load[dofs[1]] += w * t;
    };
    if (center > a && center < b) {
      fail("assembleRadialPowerLoad: singular point inside an element "
           "interior; align the mesh so it falls on a vertex");
    }
    if (center == a || center == b) {
      // |x-center|^power becomes u^power from the touching vertex; the
      // weighted rule integrates it exactly against the linear shapes.
      const double len = b - a;
      const double sign = center == a ? 1.0 : -1.0;
      const double scale = std::pow(len, power + 1.0);
      for (std::size_t q = 0; q < jacobi.nodes.size(); ++q) {
        const double u = jacobi.nodes[q] * len;
        const double x = center + sign * u;
        accumulate(x, scale * jacobi.weights[q]);
      }
    } else {
      const int pts = std::max(6, (order + 2) / 2 + 4);
      const GaussRule rule = gaussLegendreOn(pts, a, b);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        accumulate(rule.nodes[q],
                   rule.weights[q] * std::pow(std::abs(rule.nodes[q] - center), power));
      }
    }
  }
  return load;
}

LocalBlocks eliminateLocalBc(const SparseOperator& A_full,
                             const Eigen::VectorXd& f_full,
                             const DofPartition& dofs, const ScalarField& g) {
  require(A_full.rows() == dofs.numLocalDofs() &&
              A_full.cols() == dofs.numLocalDofs(),
          "eliminateLocalBc: operator/DOF size mismatch");
  require(f_full.size() == dofs.numLocalDofs(),
          "eliminateLocalBc: load/DOF size mismatch");
  LocalBlocks out;
  out.A_LL = {extractBlock(A_full.mat, dofs.I_L, dofs.I_L), "I_L", "I_L"};
  out.A_LGamma = {extractBlock(A_full.mat, dofs.I_L, dofs.I_Gamma), "I_L",
                  "I_Gamma"};
  out.A_LGammaGiven = {extractBlock(A_full.mat, dofs.I_L, dofs.I_GammaGiven),
                       "I_L", "I_GammaGiven"};
  out.f_L.resize(static_cast<Index>(dofs.I_L.size()));
  for (std::size_t i = 0; i < dofs.I_L.size(); ++i) {
    out.f_L[static_cast<Index>(i)] = f_full[dofs.I_L[i]];
  }
  out.g.resize(static_cast<Index>(dofs.I_GammaGiven.size()));
  for (std::size_t i = 0; i < dofs.I_GammaGiven.size(); ++i) {
    const double gv = g(dofs.local_coords[static_cast<std::size_t>(dofs.I_GammaGiven[i])]);
    require(std::isfinite(gv), "eliminateLocalBc: non-finite boundary value");
    out.g[static_cast<Index>(i)] = gv;
  }
  out.rhs = out.f_L - out.A_LGammaGiven.mat * out.g;
  return out;
}

}  // namespace ltn
