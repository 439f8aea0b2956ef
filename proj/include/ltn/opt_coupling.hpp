// opt_coupling.hpp: optimization-based coupling of the local and nonlocal
// subproblems.  Interface controls (local trace on the inner boundary,
// nonlocal trace on the interface collar) are chosen to minimize the squared
// mismatch of the two solutions on the overlap region; at the minimum the
// coupled pair coincides with the spliced solution.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "ltn/splice.hpp"

namespace ltn {

struct ControlPair {
  Eigen::VectorXd theta_L;  // values on the I_Gamma DOFs
  Eigen::VectorXd theta_N;  // values on the I_NI DOFs
};

enum class MinimizeMethod { quasi_newton, exact_quadratic };

struct MinimizeResult {
  ControlPair theta;
  Eigen::VectorXd u_L, u_N;  // full-space DOF vectors at the minimizer
  double J = 0;
  int iterations = 0;
  bool converged = false;
};

// Continuous-continuous couplings only: the overlap mismatch is evaluated on
// collocated vertex DOF pairs.
class OptCoupling {
 public:
  OptCoupling(const DomainPartition& partition, const DofPartition& dofs,
              const LocalBlocks& loc, const NonlocalBlocks& nl,
              bool lumped_overlap_mass = true);
  OptCoupling(const OptCoupling&) = delete;
  OptCoupling& operator=(const OptCoupling&) = delete;

  // Subproblem solves with the given control, data lifts attached; returned
  // vectors index the full local / nonlocal DOF sets.
  Eigen::VectorXd solveLocal(const Eigen::VectorXd& theta_L) const;
  Eigen::VectorXd solveNonlocal(const Eigen::VectorXd& theta_N) const;

  // J = 1/2 (u_N - u_L)^T M_b (u_N - u_L) over the overlap DOF pairs.
  double objective(const ControlPair& theta) const;
  // Analytic gradient (adjoint solves against the cached factorizations).
  ControlPair gradient(const ControlPair& theta) const;

  MinimizeResult minimize(MinimizeMethod method, int max_iterations = 200,
                          double grad_tol = 1e-12) const;

  // Control-dependent part (zero forcing/data) and forcing part (zero
  // control); their sum is the subproblem solution.
  struct Split {
    Eigen::VectorXd v, w;
  };
  Split harmonicForcingSplitLocal(const Eigen::VectorXd& theta_L) const;
  Split harmonicForcingSplitNonlocal(const Eigen::VectorXd& theta_N) const;

  // Controls induced by a spliced solution (traces on I_Gamma / I_NI).
  ControlPair inducedControls(const SpliceSolution& s) const;

  Index controlDim() const {
    return static_cast<Index>(nGamma_ + nNI_);
  }
  std::size_t overlapPairs() const { return ov_local_.size(); }
  // Smallest lumped overlap mass (scales the mismatch-to-solution bound).
  double lumpedMassMin() const;

  // Stacked-vector helpers (theta_L block first).
  Eigen::VectorXd pack(const ControlPair& theta) const;
  ControlPair unpack(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd mismatch(const Eigen::VectorXd& uL,
                           const Eigen::VectorXd& uN) const;
  ControlPair gradientFromMismatch(const Eigen::VectorXd& d) const;

  DofPartition dofs_;
  LocalBlocks loc_;
  NonlocalBlocks nl_;
  bool lumped_ = true;
  std::size_t nGamma_ = 0, nNI_ = 0;

  std::vector<Index> ov_local_, ov_nonlocal_;  // collocated overlap DOF pairs
  SpMat M_b_;
  Eigen::VectorXd M_lump_;

  Eigen::SimplicialLDLT<SpMat> A_LL_f_, A_NN_f_;
};

}  // namespace ltn
