// opt_coupling.cpp: optimization-based coupling.  The two subproblems are
// solved against cached Cholesky factorizations; the overlap mismatch is a
// quadratic in the interface controls, minimized either by BFGS with a
// backtracking line search or by assembling the (small, dense) normal
// equations column by column from the analytic gradient.
#include "ltn/opt_coupling.hpp"

#include <algorithm>
#include <cmath>

#include "ltn/assembly_local.hpp"

namespace ltn {

namespace {

std::vector<Index> sortedUnion(std::vector<Index> a, const std::vector<Index>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

}  // namespace

OptCoupling::OptCoupling(const DomainPartition& partition,
                         const DofPartition& dofs, const LocalBlocks& loc,
                         const NonlocalBlocks& nl, bool lumped_overlap_mass)
    : dofs_(dofs), loc_(loc), nl_(nl), lumped_(lumped_overlap_mass) {
  require(dofs.nonlocal_kind == SpaceKind::P1,
          "overlap mismatch needs collocated vertex DOF pairs "
          "(continuous-continuous coupling)");
  require(partition.local_mesh == partition.mesh,
          "overlap DOF pairing needs the shared parent mesh");
  nGamma_ = dofs_.I_Gamma.size();
  nNI_ = dofs_.I_NI.size();

  const Mesh& mesh = *partition.mesh;

  // Overlap region: elements carried by both discretizations -- the shared
  // element layer plus the interface collar (all inside the local region).
  std::vector<Index> shared;
  std::set_intersection(partition.elems_L.begin(), partition.elems_L.end(),
                        partition.elems_N.begin(), partition.elems_N.end(),
                        std::back_inserter(shared));
  const std::vector<Index> ov_elems = sortedUnion(shared, partition.elems_NI);

  // Inverse DOF maps (vertex id -> DOF id) for both spaces.
  std::vector<Index> local_dof_of_vertex(mesh.vertices.size(), -1);
  for (std::size_t d = 0; d < dofs_.local_vertex.size(); ++d)
    local_dof_of_vertex[static_cast<std::size_t>(dofs_.local_vertex[d])] =
        static_cast<Index>(d);
  std::vector<Index> nonlocal_dof_of_vertex(mesh.vertices.size(), -1);
  for (std::size_t d = 0; d < dofs_.nonlocal_entity.size(); ++d)
    nonlocal_dof_of_vertex[static_cast<std::size_t>(dofs_.nonlocal_entity[d])] =
        static_cast<Index>(d);

  std::vector<Index> verts;
  for (Index k : ov_elems)
    for (int a = 0; a < mesh.vertsPerElem(); ++a)
      verts.push_back(mesh.elems[static_cast<std::size_t>(k)][
          static_cast<std::size_t>(a)]);
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  std::sort(verts.begin(), verts.end(), [&](Index a, Index b) {
    const Vec2& pa = mesh.vertices[static_cast<std::size_t>(a)];
    const Vec2& pb = mesh.vertices[static_cast<std::size_t>(b)];
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    return a < b;
  });

  FESpace ov;
  ov.kind = SpaceKind::P1;
  ov.mesh = partition.mesh;
  ov.elems = ov_elems;
  ov.dof_of_entity.assign(mesh.vertices.size(), -1);
  for (Index v : verts) {
    Index l = local_dof_of_vertex[static_cast<std::size_t>(v)];
    Index n = nonlocal_dof_of_vertex[static_cast<std::size_t>(v)];
    require(l >= 0 && n >= 0,
            "overlap vertex must carry DOFs of both discretizations");
    ov.dof_of_entity[static_cast<std::size_t>(v)] =
        static_cast<Index>(ov_local_.size());
    ov.entity_of_dof.push_back(v);
    ov.dof_coords.push_back(mesh.vertices[static_cast<std::size_t>(v)]);
    ov_local_.push_back(l);
    ov_nonlocal_.push_back(n);
  }

  M_b_ = assembleMass(ov, false).mat;
  SpMat lumped = assembleMass(ov, true).mat;
  M_lump_ = lumped.diagonal();

  A_LL_f_.compute(loc_.A_LL.mat);
  require(A_LL_f_.info() == Eigen::Success,
          "local stiffness block factorization failed");
  A_NN_f_.compute(nl_.A_NN.mat);
  require(A_NN_f_.info() == Eigen::Success,
          "nonlocal stiffness block factorization failed");
}

Eigen::VectorXd OptCoupling::solveLocal(const Eigen::VectorXd& theta_L) const {
  require(theta_L.size() == static_cast<Eigen::Index>(nGamma_),
          "local control size mismatch");
  Eigen::VectorXd rhs = loc_.rhs - loc_.A_LGamma.mat * theta_L;
  Eigen::VectorXd x = A_LL_f_.solve(rhs);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs_.numLocalDofs());
  for (std::size_t i = 0; i < dofs_.I_L.size(); ++i)
    u[dofs_.I_L[i]] = x[static_cast<Eigen::Index>(i)];
  for (std::size_t p = 0; p < dofs_.I_Gamma.size(); ++p)
    u[dofs_.I_Gamma[p]] = theta_L[static_cast<Eigen::Index>(p)];
  for (std::size_t p = 0; p < dofs_.I_GammaGiven.size(); ++p)
    u[dofs_.I_GammaGiven[p]] = loc_.g[static_cast<Eigen::Index>(p)];
  return u;
}

Eigen::VectorXd OptCoupling::solveNonlocal(const Eigen::VectorXd& theta_N) const {
  require(theta_N.size() == static_cast<Eigen::Index>(nNI_),
          "nonlocal control size mismatch");
  Eigen::VectorXd rhs = nl_.rhs - nl_.A_NNI.mat * theta_N;
  Eigen::VectorXd x = A_NN_f_.solve(rhs);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs_.numNonlocalDofs());
  for (std::size_t i = 0; i < dofs_.I_N.size(); ++i)
    u[dofs_.I_N[i]] = x[static_cast<Eigen::Index>(i)];
  for (std::size_t p = 0; p < dofs_.I_NI.size(); ++p)
    u[dofs_.I_NI[p]] = theta_N[static_cast<Eigen::Index>(p)];
  for (std::size_t p = 0; p < dofs_.I_gI.size(); ++p)
    u[dofs_.I_gI[p]] = nl_.g[static_cast<Eigen::Index>(p)];
  return u;
}

Eigen::VectorXd OptCoupling::mismatch(const Eigen::VectorXd& uL,
                                      const Eigen::VectorXd& uN) const {
  Eigen::VectorXd d(static_cast<Eigen::Index>(ov_local_.size()));
  for (std::size_t p = 0; p < ov_local_.size(); ++p)
    d[static_cast<Eigen::Index>(p)] = uN[ov_nonlocal_[p]] - uL[ov_local_[p]];
  return d;
}

double OptCoupling::objective(const ControlPair& theta) const {
  Eigen::VectorXd d = mismatch(solveLocal(theta.theta_L),
                               solveNonlocal(theta.theta_N));
  if (lumped_) return 0.5 * d.dot(M_lump_.cwiseProduct(d));
  return 0.5 * d.dot(M_b_ * d);
}

ControlPair OptCoupling::gradientFromMismatch(const Eigen::VectorXd& d) const {
  Eigen::VectorXd y = lumped_ ? Eigen::VectorXd(M_lump_.cwiseProduct(d))
                              : Eigen::VectorXd(M_b_ * d);

  const Eigen::Index nL = static_cast<Eigen::Index>(dofs_.I_L.size());
  const Eigen::Index nN = static_cast<Eigen::Index>(dofs_.I_N.size());

  // Positions of interface DOFs inside their control vectors.
  std::vector<Index> gamma_pos(static_cast<std::size_t>(dofs_.numLocalDofs()), -1);
  for (std::size_t p = 0; p < dofs_.I_Gamma.size(); ++p)
    gamma_pos[static_cast<std::size_t>(dofs_.I_Gamma[p])] = static_cast<Index>(p);
  std::vector<Index> ni_pos(static_cast<std::size_t>(dofs_.numNonlocalDofs()), -1);
  for (std::size_t p = 0; p < dofs_.I_NI.size(); ++p)
    ni_pos[static_cast<std::size_t>(dofs_.I_NI[p])] = static_cast<Index>(p);

  Eigen::VectorXd wL = Eigen::VectorXd::Zero(nL);
  Eigen::VectorXd wN = Eigen::VectorXd::Zero(nN);
  ControlPair grad;
  grad.theta_L = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nGamma_));
  grad.theta_N = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nNI_));

  for (std::size_t p = 0; p < ov_local_.size(); ++p) {
    const double yp = y[static_cast<Eigen::Index>(p)];
    const Index l = ov_local_[p];
    const Index lg = dofs_.local_to_global[static_cast<std::size_t>(l)];
    if (lg >= 0) {
      wL[lg] += yp;  // reaches theta_L through the local solve
    } else if (gamma_pos[static_cast<std::size_t>(l)] >= 0) {
      grad.theta_L[gamma_pos[static_cast<std::size_t>(l)]] -= yp;  // u_L = theta_L here
    }
    const Index nd = ov_nonlocal_[p];
    const Index ng = dofs_.nonlocal_to_global[static_cast<std::size_t>(nd)];
    if (ng >= 0) {
      wN[ng - nL] += yp;
    } else if (ni_pos[static_cast<std::size_t>(nd)] >= 0) {
      grad.theta_N[ni_pos[static_cast<std::size_t>(nd)]] += yp;  // u_N = theta_N here
    }
  }

  if (nGamma_ > 0 && nL > 0) {
    Eigen::VectorXd qL = A_LL_f_.solve(wL);
    grad.theta_L += loc_.A_LGamma.mat.transpose() * qL;
  }
  if (nNI_ > 0 && nN > 0) {
    Eigen::VectorXd qN = A_NN_f_.solve(wN);
    grad.theta_N -= nl_.A_NNI.mat.transpose() * qN;
  }
  return grad;
}

ControlPair OptCoupling::gradient(const ControlPair& theta) const {
  Eigen::VectorXd d = mismatch(solveLocal(theta.theta_L),
                               solveNonlocal(theta.theta_N));
  return gradientFromMismatch(d);
}

Eigen::VectorXd OptCoupling::pack(const ControlPair& theta) const {
  Eigen::VectorXd x(controlDim());
  x.head(static_cast<Eigen::Index>(nGamma_)) = theta.theta_L;
  x.tail(static_cast<Eigen::Index>(nNI_)) = theta.theta_N;
  return x;
}

ControlPair OptCoupling::unpack(const Eigen::VectorXd& x) const {
  require(x.size() == controlDim(), "stacked control size mismatch");
  ControlPair theta;
  theta.theta_L = x.head(static_cast<Eigen::Index>(nGamma_));
  theta.theta_N = x.tail(static_cast<Eigen::Index>(nNI_));
  return theta;
}

double OptCoupling::lumpedMassMin() const {
  return M_lump_.size() ? M_lump_.minCoeff() : 0.0;
}

MinimizeResult OptCoupling::minimize(MinimizeMethod method, int max_iterations,
                                     double grad_tol) const {
  const Eigen::Index m = controlDim();
  MinimizeResult res;

  if (method == MinimizeMethod::exact_quadratic) {
    // The gradient is affine in the stacked control x: grad(x) = g0 + H x.
    // Assemble H column by column from gradient differences (the problem
    // data cancels), then solve the normal equations H x = -g0 directly.
    Eigen::VectorXd g0 = pack(gradient(unpack(Eigen::VectorXd::Zero(m))));
    Eigen::MatrixXd H(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
      e[k] = 1.0;
      H.col(k) = pack(gradient(unpack(e))) - g0;
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::VectorXd x = m > 0 ? Eigen::VectorXd(H.ldlt().solve(-g0))
                              : Eigen::VectorXd::Zero(0);
    require(x.allFinite(), "normal equations solve produced non-finite controls");
    res.theta = unpack(x);
    res.iterations = static_cast<int>(m) + 1;
    res.converged = true;
  } else {
    // BFGS on the stacked control, inverse-Hessian update, backtracking
    // Armijo line search with a quadratic-fit trial step.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    double J = objective(unpack(x));
    Eigen::VectorXd g = pack(gradient(unpack(x)));
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(m, m);
    int it = 0;
    while (it < max_iterations && g.lpNorm<Eigen::Infinity>() > grad_tol) {
      Eigen::VectorXd p = -(Hinv * g);
      double gp = g.dot(p);
      if (!(gp < 0)) {  // not a descent direction: reset
        Hinv.setIdentity();
        p = -g;
        gp = g.dot(p);
        if (!(gp < 0)) break;
      }
      // Exact step length for a quadratic objective, from one probe value.
      double alpha = 1.0;
      const double J_probe = objective(unpack(Eigen::VectorXd(x + p)));
      const double curv = 2.0 * (J_probe - J - gp);
      if (curv > 0) alpha = std::min(-gp / curv, 1e6);
      double J_new = 0;
      Eigen::VectorXd x_new;
      bool accepted = false;
      for (int back = 0; back < 60; ++back) {
        x_new = x + alpha * p;
        J_new = objective(unpack(x_new));
        if (J_new <= J + 1e-4 * alpha * gp + 1e-300) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      Eigen::VectorXd g_new = pack(gradient(unpack(x_new)));
      Eigen::VectorXd s = x_new - x;
      Eigen::VectorXd yv = g_new - g;
      const double sy = s.dot(yv);
      if (sy > 1e-14 * s.norm() * yv.norm()) {
        const double rho = 1.0 / sy;
        Eigen::MatrixXd V =
            Eigen::MatrixXd::Identity(m, m) - rho * s * yv.transpose();
        Hinv = (V * Hinv * V.transpose() + rho * s * s.transpose()).eval();
      }
      x = x_new;
      J = J_new;
      g = g_new;
      ++it;
    }
    res.theta = unpack(x);
    res.iterations = it;
    res.converged = g.lpNorm<Eigen::Infinity>() <= grad_tol;
  }

  res.u_L = solveLocal(res.theta.theta_L);
  res.u_N = solveNonlocal(res.theta.theta_N);
  res.J = objective(res.theta);
  return res;
}

OptCoupling::Split OptCoupling::harmonicForcingSplitLocal(
    const Eigen::VectorXd& theta_L) const {
  require(theta_L.size() == static_cast<Eigen::Index>(nGamma_),
          "local control size mismatch");
  Split sp;
  Eigen::VectorXd xv = A_LL_f_.solve(
      Eigen::VectorXd(-(loc_.A_LGamma.mat * theta_L)));
  Eigen::VectorXd xw = A_LL_f_.solve(loc_.rhs);
  sp.v = Eigen::VectorXd::Zero(dofs_.numLocalDofs());
  sp.w = Eigen::VectorXd::Zero(dofs_.numLocalDofs());
  for (std::size_t i = 0; i < dofs_.I_L.size(); ++i) {
    sp.v[dofs_.I_L[i]] = xv[static_cast<Eigen::Index>(i)];
    sp.w[dofs_.I_L[i]] = xw[static_cast<Eigen::Index>(i)];
  }
  for (std::size_t p = 0; p < dofs_.I_Gamma.size(); ++p)
    sp.v[dofs_.I_Gamma[p]] = theta_L[static_cast<Eigen::Index>(p)];
  for (std::size_t p = 0; p < dofs_.I_GammaGiven.size(); ++p)
    sp.w[dofs_.I_GammaGiven[p]] = loc_.g[static_cast<Eigen::Index>(p)];
  return sp;
}

OptCoupling::Split OptCoupling::harmonicForcingSplitNonlocal(
    const Eigen::VectorXd& theta_N) const {
  require(theta_N.size() == static_cast<Eigen::Index>(nNI_),
          "nonlocal control size mismatch");
  Split sp;
  Eigen::VectorXd xv = A_NN_f_.solve(
      Eigen::VectorXd(-(nl_.A_NNI.mat * theta_N)));
  Eigen::VectorXd xw = A_NN_f_.solve(nl_.rhs);
  sp.v = Eigen::VectorXd::Zero(dofs_.numNonlocalDofs());
  sp.w = Eigen::VectorXd::Zero(dofs_.numNonlocalDofs());
  for (std::size_t i = 0; i < dofs_.I_N.size(); ++i) {
    sp.v[dofs_.I_N[i]] = xv[static_cast<Eigen::Index>(i)];
    sp.w[dofs_.I_N[i]] = xw[static_cast<Eigen::Index>(i)];
  }
  for (std::size_t p = 0; p < dofs_.I_NI.size(); ++p)
    sp.v[dofs_.I_NI[p]] = theta_N[static_cast<Eigen::Index>(p)];
  for (std::size_t p = 0; p < dofs_.I_gI.size(); ++p)
    sp.w[dofs_.I_gI[p]] = nl_.g[static_cast<Eigen::Index>(p)];
  return sp;
}

ControlPair OptCoupling::inducedControls(const SpliceSolution& s) const {
  ControlPair theta;
  theta.theta_L = Eigen::VectorXd(static_cast<Eigen::Index>(nGamma_));
  for (std::size_t p = 0; p < dofs_.I_Gamma.size(); ++p)
    theta.theta_L[static_cast<Eigen::Index>(p)] = s.u_L[dofs_.I_Gamma[p]];
  theta.theta_N = Eigen::VectorXd(static_cast<Eigen::Index>(nNI_));
  for (std::size_t p = 0; p < dofs_.I_NI.size(); ++p)
    theta.theta_N[static_cast<Eigen::Index>(p)] = s.u_N[dofs_.I_NI[p]];
  return theta;
}

}  // namespace ltn
