// errors.cpp: norm evaluation by element-wise quadrature.
#include "ltn/errors.hpp"

#include <algorithm>
#include <cmath>

#include "ltn/quadrature.hpp"

namespace ltn {

namespace {

struct Accum {
  NormKind norm;
  double value = 0.0;
  void add(double diff, double weight) {
    const double a = std::abs(diff);
    switch (norm) {
      case NormKind::L1: value += weight * a; break;
      case NormKind::L2: value += weight * a * a; break;
      case NormKind::Linf: value = std::max(value, a); break;
    }
  }
  double finish() const {
    return norm == NormKind::L2 ? std::sqrt(value) : value;
  }
};

// Visit quadrature points of element k of the mesh: calls cb(p, w).
template <class F>
void forQuadPoints(const Mesh& m, Index k, int order, F&& cb) {
  const auto& el = m.elems[std::size_t(k)];
  if (m.dim == 1) {
    const double a = m.vertices[std::size_t(el[0])].x;
    const double b = m.vertices[std::size_t(el[1])].x;
    const GaussRule gr = gaussLegendreOn(std::max(3, (order + 1) / 2 + 1),
                                         std::min(a, b), std::max(a, b));
    for (std::size_t i = 0; i < gr.nodes.size(); ++i)
      cb(Vec2(gr.nodes[i], 0.0), gr.weights[i]);
    return;
  }
  const TriangleRule& tr = triangleRule(order);
  const Vec2& p0 = m.vertices[std::size_t(el[0])];
  const Vec2& p1 = m.vertices[std::size_t(el[1])];
  const Vec2& p2 = m.vertices[std::size_t(el[2])];
  const double meas = m.elemMeasure(k);
  for (std::size_t i = 0; i < tr.bary.size(); ++i) {
    const auto& l = tr.bary[i];
    const Vec2 p = p0 * l[0] + p1 * l[1] + p2 * l[2];
    cb(p, tr.weights[i] * meas);
  }
}

}  // namespace

double errorNorm(const FESpace& space, const Eigen::VectorXd& u,
                 const ScalarField& ref, NormKind norm, const Region& region,
                 int order, const std::vector<Index>* restrict_elems) {
  require(u.size() == space.numDofs(), "errorNorm: coefficient size mismatch");
  Accum acc{norm, 0.0};
  const Mesh& m = *space.mesh;
  for (std::size_t e = 0; e < space.elems.size(); ++e) {
    const Index k = space.elems[e];
    if (restrict_elems &&
        !std::binary_search(restrict_elems->begin(), restrict_elems->end(), k))
      continue;
    forQuadPoints(m, k, order, [&](const Vec2& p, double w) {
      if (!region.contains(p)) return;
      acc.add(evalOnElement(space, u, k, p) - ref(p), w);
    });
    if (norm == NormKind::Linf) {
      const auto dofs = space.elementDofs(k);
      for (int j = 0; j < space.dofsPerElem(); ++j) {
        const Vec2& p = space.dof_coords[std::size_t(dofs[std::size_t(j)])];
        if (region.contains(p))
          acc.add(u[dofs[std::size_t(j)]] - ref(p), 1.0);
      }
    }
  }
  return acc.finish();
}

double errorNormFE(const FESpace& space, const Eigen::VectorXd& u,
                   const FESpace& fine_space, const Eigen::VectorXd& u_fine,
                   NormKind norm, const Region& region, int order) {
  require(u.size() == space.numDofs() && u_fine.size() == fine_space.numDofs(),
          "errorNormFE: coefficient size mismatch");
  PointLocator loc(space);
  Accum acc{norm, 0.0};
  const Mesh& m = *fine_space.mesh;
  for (std::size_t e = 0; e < fine_space.elems.size(); ++e) {
    const Index k = fine_space.elems[e];
    forQuadPoints(m, k, order, [&](const Vec2& p, double w) {
      if (!region.contains(p)) return;
      const Index ke = loc.locate(p);
      require(ke >= 0, "errorNormFE: point outside the coarse space");
      acc.add(evalOnElement(fine_space, u_fine, k, p) -
                  evalOnElement(space, u, ke, p),
              w);
    });
  }
  return acc.finish();
}

double maxNodalError(const FESpace& space, const Eigen::VectorXd& u,
                     const ScalarField& ref, const Region& region) {
  require(u.size() == space.numDofs(), "maxNodalError: size mismatch");
  double m = 0.0;
  for (Index i = 0; i < space.numDofs(); ++i) {
    const Vec2& p = space.dof_coords[std::size_t(i)];
    if (region.contains(p)) m = std::max(m, std::abs(u[i] - ref(p)));
  }
  return m;
}

double combineNorms(NormKind norm, double a, double b) {
  switch (norm) {
    case NormKind::L1: return a + b;
    case NormKind::L2: return std::sqrt(a * a + b * b);
    case NormKind::Linf: return std::max(a, b);
  }
  return 0.0;
}

}  // namespace ltn
