// splice.hpp: the spliced local-to-nonlocal system.  Rows indexed by local
// interior unknowns take the local discrete equation; rows indexed by
// nonlocal unknowns take the nonlocal one; interface couplings are realized
// through collocated DOFs, boundary/volume data through RHS lifts.
#pragma once

#include "ltn/assembly_local.hpp"
#include "ltn/assembly_nonlocal.hpp"

namespace ltn {

// Row-selection maps out of the global unknown ordering (I_L block first,
// then I_N block).  Each vector lists global indices.
struct Restrictions {
  std::vector<Index> R_L;      // global ids of the local unknowns (0..|I_L|-1)
  std::vector<Index> R_N;      // global ids of the nonlocal unknowns
  std::vector<Index> R_Gamma;  // per interface DOF: global id of the
                               // collocated nonlocal unknown supplying its value
  std::vector<Index> R_NI;     // per interface-collar DOF: global id of the
                               // collocated local unknown supplying its value
};

Restrictions buildRestrictions(const DofPartition& dofs);

struct SpliceSystem {
  SparseOperator A_S;   // n x n, non-symmetric in general
  Eigen::VectorXd h_S;  // boundary/volume lifts folded in
  Index n_L = 0;        // leading block size (local unknowns)
  Index n_N = 0;
};

// Row-wise construction from the eliminated block systems.
SpliceSystem assembleSplice(const LocalBlocks& loc, const NonlocalBlocks& nl,
                            const DofPartition& dofs);

// Operators assembled over the whole domain, used by the alternate (row
// relabeling) construction and by the time stepper's window rebuilds.
struct FullOperators {
  FESpace local_space;     // P1 over all interior elements
  FESpace nonlocal_space;  // same kind as the coupling, over all elements
  SparseOperator A_L;
  SparseOperator A_N;
};

// Alternate construction: selects rows of the full-domain operators through
// the restriction maps (matrix only; entrywise equal to assembleSplice's
// matrix).  Requires a shared parent mesh (continuous-continuous coupling).
SparseOperator assembleSpliceAlternate(const FullOperators& full,
                                       const DomainPartition& partition,
                                       const DofPartition& dofs);

struct SpliceSolution {
  Eigen::VectorXd u_global;  // the n coupled unknowns
  Eigen::VectorXd u_L;       // local-space DOF vector, boundary data attached
  Eigen::VectorXd u_N;       // nonlocal-space DOF vector, volume data attached
  double residual_rel = 0;   // ||A u - h|| / ||h||
};

// Direct sparse solve with residual verification; unpacks the two
// overlapping FE functions with their interface/boundary values attached.
SpliceSolution solveSplice(const SpliceSystem& sys, const DofPartition& dofs,
                           const LocalBlocks& loc, const NonlocalBlocks& nl);

// Coordinates of the global unknowns, in global order.
std::vector<Vec2> globalCoords(const DofPartition& dofs);

// Max-norm residual ||A_S I(u*) - h_S||_inf of the nodal (or centroid)
// interpolant of a candidate shared solution.
double patchTestResidual(const SpliceSystem& sys, const DofPartition& dofs,
                         const ScalarField& u_star);

}  // namespace ltn
