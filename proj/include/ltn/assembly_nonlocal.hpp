// assembly_nonlocal.hpp: Galerkin assembly of the nonlocal diffusion form
//   a(u,v) = 1/2 ∬_{|x-y|<delta} (u(x)-u(y))(v(x)-v(y)) gamma(|x-y|) dy dx
// over P0/P1 spaces, with singularity-absorbing quadrature, exact horizon
// clipping, and elimination of the essential volume condition.
#pragma once

#include "ltn/fe.hpp"
#include "ltn/kernel.hpp"
#include "ltn/sparse.hpp"

namespace ltn {

struct QuadConfig {
  int singular_rule_order = 16;   // node budget for singular (touching) panels
  int regular_rule_order = 4;     // base outer degree for separated pairs
  int clip_subdivision_depth = 1; // extra outer subdivision on horizon-cut pairs
  int threads = 1;                // worker count (deterministic for any value)
};

enum class OverlapClass {
  identical,
  vertex_touch,
  edge_touch,
  disjoint_within_horizon,
};

const char* overlapClassName(OverlapClass c);

struct InteractionPair {
  Index elem_a = -1;
  Index elem_b = -1;  // elem_a <= elem_b
  OverlapClass overlap_class = OverlapClass::identical;
  bool clipped = false;  // horizon ball cuts the pair's product domain
};

// All unordered element pairs with closure distance < delta, classified by
// their shared sub-simplex; deterministic (sorted by element indices).
std::vector<InteractionPair> enumeratePairs(const Mesh& mesh,
                                            const std::vector<Index>& elems,
                                            double delta);
// Pairs over the partition's collar-extended nonlocal element set.
std::vector<InteractionPair> enumeratePairs(const DomainPartition& partition);

// Full (pre-elimination) nonlocal stiffness over all DOFs of the space.
// Rows of DOFs whose basis support extends past the space's element set are
// incomplete by construction and must not be used (the eliminated system
// only reads rows of interior DOFs, whose supports are covered).
SparseOperator assembleNonlocalStiffness(const FESpace& space,
                                         const KernelSpec& kernel,
                                         const QuadConfig& quad = {});

struct NonlocalBlocks {
  SparseOperator A_NN;   // |I_N| x |I_N|
  SparseOperator A_NNI;  // |I_N| x |I_NI|
  SparseOperator A_NgI;  // |I_N| x |I_gI| (kept for reuse)
  Eigen::VectorXd f_N;   // raw load on the I_N rows
  Eigen::VectorXd g;     // given values on I_gI
  Eigen::VectorXd rhs;   // f_N - A_NgI * g
};

// Eliminates the given volume-condition DOFs; the interface-collar columns
// stay as the retained A_NNI block (those DOFs couple by identity to
// collocated local unknowns in the spliced system).
NonlocalBlocks eliminateVolumeCondition(const SparseOperator& A_full,
                                        const Eigen::VectorXd& f_full,
                                        const DofPartition& dofs,
                                        const ScalarField& g);

}  // namespace ltn
