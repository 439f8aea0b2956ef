// errors.hpp: quadrature-evaluated norms of the difference between an FE
// function and a reference field (callable or another FE function).
#pragma once

#include <vector>

#include "ltn/fe.hpp"
#include "ltn/region.hpp"

namespace ltn {

enum class NormKind { L1, L2, Linf };

// ||u_h - ref|| over the space's active elements, restricted pointwise to
// `region` (and to `restrict_elems` when given).  Element quadrature of
// order >= 5; Linf is the max over quadrature and nodal points.
double errorNorm(const FESpace& space, const Eigen::VectorXd& u,
                 const ScalarField& ref, NormKind norm,
                 const Region& region = Region::all(), int order = 6,
                 const std::vector<Index>* restrict_elems = nullptr);

// FE-vs-FE comparison.  Integration runs over the elements of `fine_space`
// (pass the more refined space there); `space` is evaluated through a point
// locator, so on nested meshes the piecewise-polynomial difference is
// integrated exactly at order >= 2.
double errorNormFE(const FESpace& space, const Eigen::VectorXd& u,
                   const FESpace& fine_space, const Eigen::VectorXd& u_fine,
                   NormKind norm, const Region& region = Region::all(),
                   int order = 6);

// max_i |u_i - ref(x_i)| over DOF coordinates inside `region`.
double maxNodalError(const FESpace& space, const Eigen::VectorXd& u,
                     const ScalarField& ref,
                     const Region& region = Region::all());

// Combine subdomain norms into a norm over the union of disjoint regions.
double combineNorms(NormKind norm, double a, double b);

}  // namespace ltn
