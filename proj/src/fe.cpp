#include "ltn/fe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ltn {

std::array<Index, 3> FESpace::elementDofs(Index k) const {
  std::array<Index, 3> out{-1, -1, -1};
  if (kind == SpaceKind::P0) {
    out[0] = dof_of_entity[static_cast<std::size_t>(k)];
    require(out[0] >= 0, "elementDofs: element outside the P0 space");
    return out;
  }
  const auto& e = mesh->elems[static_cast<std::size_t>(k)];
  for (int i = 0; i < mesh->vertsPerElem(); ++i) {
    const Index v = e[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = dof_of_entity[static_cast<std::size_t>(v)];
  }
  return out;
}

namespace {

FESpace makeSpace(std::shared_ptr<const Mesh> mesh, SpaceKind kind,
                  std::vector<Index> elems, const std::vector<Vec2>& coords,
                  const std::vector<Index>& entities) {
  FESpace space;
  space.kind = kind;
  space.mesh = std::move(mesh);
  space.elems = std::move(elems);
  space.dof_coords = coords;
  space.entity_of_dof = entities;
  const std::size_t entityCount =
      kind == SpaceKind::P1 ? space.mesh->vertices.size()
                            : space.mesh->elems.size();
  space.dof_of_entity.assign(entityCount, -1);
  for (std::size_t d = 0; d < entities.size(); ++d) {
    space.dof_of_entity[static_cast<std::size_t>(entities[d])] =
        static_cast<Index>(d);
  }
  if (kind == SpaceKind::P1) {
    // Every vertex of every active element must carry a DOF.
    for (Index k : space.elems) {
      const auto& e = space.mesh->elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < space.mesh->vertsPerElem(); ++i) {
        require(space.dof_of_entity[static_cast<std::size_t>(
                    e[static_cast<std::size_t>(i)])] >= 0,
                "makeSpace: active element vertex without a DOF");
      }
    }
  }
  return space;
}

}  // namespace

FESpace makeLocalSpace(const DomainPartition& partition, const DofPartition& dofs) {
  return makeSpace(partition.local_mesh, SpaceKind::P1, partition.elems_L,
                   dofs.local_coords, dofs.local_vertex);
}

FESpace makeNonlocalSpace(const DomainPartition& partition, const DofPartition& dofs) {
  std::vector<Index> elems;
  elems.insert(elems.end(), partition.elems_N.begin(), partition.elems_N.end());
  elems.insert(elems.end(), partition.elems_NI.begin(), partition.elems_NI.end());
  elems.insert(elems.end(), partition.elems_gI.begin(), partition.elems_gI.end());
  std::sort(elems.begin(), elems.end());
  return makeSpace(partition.mesh, dofs.nonlocal_kind, std::move(elems),
                   dofs.nonlocal_coords, dofs.nonlocal_entity);
}

Eigen::VectorXd interpolate(const FESpace& space, const ScalarField& f) {
  Eigen::VectorXd out(space.numDofs());
  for (Index d = 0; d < space.numDofs(); ++d) {
    out[d] = f(space.dof_coords[static_cast<std::size_t>(d)]);
    require(std::isfinite(out[d]), "interpolate: non-finite nodal value");
  }
  return out;
}

std::array<double, 3> barycentric(const Mesh& mesh, Index k, const Vec2& p) {
  const auto& e = mesh.elems[static_cast<std::size_t>(k)];
  const Vec2& a = mesh.vertices[static_cast<std::size_t>(e[0])];
  const Vec2& b = mesh.vertices[static_cast<std::size_t>(e[1])];
  if (mesh.dim == 1) {
    const double t = (p.x - a.x) / (b.x - a.x);
    return {1.0 - t, t, 0.0};
  }
  const Vec2& c = mesh.vertices[static_cast<std::size_t>(e[2])];
  const double det = (b - a).cross(c - a);
  const double s = (p - a).cross(c - a) / det;
  const double t = (b - a).cross(p - a) / det;
  return {1.0 - s - t, s, t};
}

double evalOnElement(const FESpace& space, const Eigen::VectorXd& coeffs,
                     Index k, const Vec2& p) {
  const auto dofs = space.elementDofs(k);
  if (space.kind == SpaceKind::P0) return coeffs[dofs[0]];
  const auto lam = barycentric(*space.mesh, k, p);
  double v = 0.0;
  for (int i = 0; i < space.mesh->vertsPerElem(); ++i) {
    v += lam[static_cast<std::size_t>(i)] * coeffs[dofs[static_cast<std::size_t>(i)]];
  }
  return v;
}

PointLocator::PointLocator(const FESpace& space) : space_(space) {
  require(!space.elems.empty(), "PointLocator: empty space");
  const Mesh& m = *space.mesh;
  double maxDiam = 0.0;
  lo_ = {std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity()};
  hi_ = {-std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity()};
  for (Index k : space.elems) {
    maxDiam = std::max(maxDiam, m.elemDiameter(k));
    const auto& e = m.elems[static_cast<std::size_t>(k)];
    for (int i = 0; i < m.vertsPerElem(); ++i) {
      const Vec2& v = m.vertices[static_cast<std::size_t>(e[static_cast<std::size_t>(i)])];
      lo_.x = std::min(lo_.x, v.x);
      lo_.y = std::min(lo_.y, v.y);
      hi_.x = std::max(hi_.x, v.x);
      hi_.y = std::max(hi_.y, v.y);
    }
  }
  const double cell = std::max(maxDiam, 1e-300);
  nx_ = std::max(1, static_cast<int>((hi_.x - lo_.x) / cell));
  ny_ = m.dim == 2 ? std::max(1, static_cast<int>((hi_.y - lo_.y) / cell)) : 1;
  bins_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), {});
  auto binRange = [&](double lo, double hi, double boxLo, double boxHi, int n,
                      int& i0, int& i1) {
    const double span = std::max(boxHi - boxLo, 1e-300);
    i0 = std::clamp(static_cast<int>((lo - boxLo) / span * n), 0, n - 1);
    i1 = std::clamp(static_cast<int>((hi - boxLo) / span * n), 0, n - 1);
  };
  for (Index k : space.elems) {
    const auto& e = m.elems[static_cast<std::size_t>(k)];
    Vec2 elo = m.vertices[static_cast<std::size_t>(e[0])];
    Vec2 ehi = elo;
    for (int i = 1; i < m.vertsPerElem(); ++i) {
      const Vec2& v = m.vertices[static_cast<std::size_t>(e[static_cast<std::size_t>(i)])];
      elo.x = std::min(elo.x, v.x);
      elo.y = std::min(elo.y, v.y);
      ehi.x = std::max(ehi.x, v.x);
      ehi.y = std::max(ehi.y, v.y);
    }
    int ix0, ix1, iy0 = 0, iy1 = 0;
    binRange(elo.x, ehi.x, lo_.x, hi_.x, nx_, ix0, ix1);
    if (m.dim == 2) binRange(elo.y, ehi.y, lo_.y, hi_.y, ny_, iy0, iy1);
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        bins_[binIndex(ix, iy)].push_back(k);
      }
    }
  }
}

Index PointLocator::locate(const Vec2& p, double tol) const {
  const Mesh& m = *space_.mesh;
  const double spanx = std::max(hi_.x - lo_.x, 1e-300);
  const double spany = std::max(hi_.y - lo_.y, 1e-300);
  const int ix = std::clamp(static_cast<int>((p.x - lo_.x) / spanx * nx_), 0, nx_ - 1);
  const int iy = m.dim == 2
                     ? std::clamp(static_cast<int>((p.y - lo_.y) / spany * ny_), 0, ny_ - 1)
                     : 0;
  Index best = -1;
  for (Index k : bins_[binIndex(ix, iy)]) {
    const auto lam = barycentric(m, k, p);
    double lmin = lam[0];
    for (int i = 1; i < m.vertsPerElem(); ++i) {
      lmin = std::min(lmin, lam[static_cast<std::size_t>(i)]);
    }
    if (lmin >= -tol && (best < 0 || k < best)) best = k;
  }
  return best;
}

double evalFE(const FESpace& space, const PointLocator& locator,
              const Eigen::VectorXd& coeffs, const Vec2& p) {
  const Index k = locator.locate(p);
  require(k >= 0, "evalFE: point outside the finite-element space");
  return evalOnElement(space, coeffs, k, p);
}

}  // namespace ltn
