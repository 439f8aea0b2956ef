// fe.hpp: lightweight P1/P0 finite-element spaces over an active element
// subset, nodal interpolation, and point evaluation.
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "ltn/partition.hpp"

namespace ltn {

using ScalarField = std::function<double(const Vec2&)>;

struct FESpace {
  SpaceKind kind = SpaceKind::P1;
  std::shared_ptr<const Mesh> mesh;
  std::vector<Index> elems;             // active elements, ascending
  std::vector<Vec2> dof_coords;         // per DOF
  std::vector<Index> entity_of_dof;     // vertex id (P1) or element id (P0)
  std::vector<Index> dof_of_entity;     // inverse map, -1 where absent

  Index numDofs() const { return static_cast<Index>(dof_coords.size()); }
  int dofsPerElem() const {
    return kind == SpaceKind::P1 ? mesh->dim + 1 : 1;
  }
  // DOF ids of element k (unused slots = -1).
  std::array<Index, 3> elementDofs(Index k) const;
};

// The local P1 space over partition.elems_L on partition.local_mesh, with
// DOF ids matching the DofPartition's local numbering.
FESpace makeLocalSpace(const DomainPartition& partition, const DofPartition& dofs);

// The nonlocal space (kind = dofs.nonlocal_kind) over the collar-extended
// nonlocal element set on partition.mesh, matching the nonlocal numbering.
FESpace makeNonlocalSpace(const DomainPartition& partition, const DofPartition& dofs);

// Nodal interpolation: vertex values (P1) / centroid values (P0).
Eigen::VectorXd interpolate(const FESpace& space, const ScalarField& f);

// Barycentric coordinates of p in element k (2 entries in 1D, 3 in 2D).
std::array<double, 3> barycentric(const Mesh& mesh, Index k, const Vec2& p);

// Value of the FE function on element k at point p (p inside the element).
double evalOnElement(const FESpace& space, const Eigen::VectorXd& coeffs,
                     Index k, const Vec2& p);

// Uniform-bin point locator over the space's active elements.
class PointLocator {
 public:
  explicit PointLocator(const FESpace& space);
  // Element containing p (ties broken by lowest element index); -1 if p is
  // outside the active set (beyond tol relative slack).
  Index locate(const Vec2& p, double tol = 1e-10) const;

 private:
  const FESpace& space_;
  Vec2 lo_{0.0, 0.0}, hi_{0.0, 0.0};
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<Index>> bins_;
  std::size_t binIndex(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(ix);
  }
};

// Evaluation at an arbitrary point (errors if p is outside the space).
double evalFE(const FESpace& space, const PointLocator& locator,
              const Eigen::VectorXd& coeffs, const Vec2& p);

}  // namespace ltn
