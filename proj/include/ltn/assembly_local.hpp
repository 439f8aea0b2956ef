// assembly_local.hpp: P1 stiffness / mass / load assembly for the local
// diffusion problem and elimination of the essential boundary condition into
// the blocked system used by the coupling.
#pragma once

#include <functional>

#include "ltn/fe.hpp"
#include "ltn/sparse.hpp"

namespace ltn {

// Full (pre-elimination) P1 stiffness over all DOFs of the space:
// entries ∫ ∇φ_i · ∇φ_j over the active elements.
SparseOperator assembleStiffness(const FESpace& space);

// Mass matrix: consistent P1 (or its lumped row-sum diagonal) / diagonal P0.
SparseOperator assembleMass(const FESpace& space, bool lumped = false);

// Load vector ∫ f φ_i with fixed-order quadrature (default order 5).
Eigen::VectorXd assembleLoad(const FESpace& space, const ScalarField& f,
                             int order = 5);

// 1D load ∫ |x - center|^power φ_i with exact (weighted-Gauss) integration
// on elements whose closure contains the singular point; power > -1.
Eigen::VectorXd assembleRadialPowerLoad(const FESpace& space, double center,
                                        double power, int order = 12);

struct LocalBlocks {
  SparseOperator A_LL;          // |I_L| x |I_L|
  SparseOperator A_LGamma;      // |I_L| x |I_Gamma|
  SparseOperator A_LGammaGiven; // |I_L| x |I_GammaGiven| (kept for reuse)
  Eigen::VectorXd f_L;          // raw load on the I_L rows
  Eigen::VectorXd g;            // boundary values on I_GammaGiven
  Eigen::VectorXd rhs;          // f_L - A_LGammaGiven * g
};

// Eliminates the given boundary DOFs: the unknown interface rows stay
// expressed through the retained A_LGamma block (the interface DOFs couple
// by identity to collocated nonlocal unknowns in the spliced system).
LocalBlocks eliminateLocalBc(const SparseOperator& A_full,
                             const Eigen::VectorXd& f_full,
                             const DofPartition& dofs, const ScalarField& g);

}  // namespace ltn
