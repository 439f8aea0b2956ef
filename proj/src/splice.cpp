#include "ltn/splice.hpp"

#include <Eigen/SparseLU>

namespace ltn {

Restrictions buildRestrictions(const DofPartition& dofs) {
  Restrictions R;
  const Index nL = static_cast<Index>(dofs.I_L.size());
  const Index nN = static_cast<Index>(dofs.I_N.size());
  R.R_L.resize(nL);
  for (Index i = 0; i < nL; ++i) R.R_L[i] = i;
  R.R_N.resize(nN);
  for (Index i = 0; i < nN; ++i) R.R_N[i] = nL + i;
  R.R_Gamma.reserve(dofs.I_Gamma.size());
  for (std::size_t p = 0; p < dofs.I_Gamma.size(); ++p) {
    const Index nd = dofs.gamma_to_nonlocal[p];
    const Index g = dofs.nonlocal_to_global[nd];
    require(g >= 0, "interface DOF collocated with a non-unknown nonlocal DOF");
    R.R_Gamma.push_back(g);
  }
  R.R_NI.reserve(dofs.I_NI.size());
  for (std::size_t p = 0; p < dofs.I_NI.size(); ++p) {
    const Index ld = dofs.ni_to_local[p];
    const Index g = dofs.local_to_global[ld];
    require(g >= 0, "collar DOF collocated with a non-unknown local DOF");
    R.R_NI.push_back(g);
  }
  return R;
}

SpliceSystem assembleSplice(const LocalBlocks& loc, const NonlocalBlocks& nl,
                            const DofPartition& dofs) {
  const Index nL = static_cast<Index>(dofs.I_L.size());
  const Index nN = static_cast<Index>(dofs.I_N.size());
  require(loc.A_LL.rows() == nL && loc.A_LGamma.rows() == nL,
          "local block shapes must match the DOF partition");
  require(nl.A_NN.rows() == nN && nl.A_NNI.rows() == nN,
          "nonlocal block shapes must match the DOF partition");
  require(loc.A_LGamma.cols() == static_cast<Index>(dofs.I_Gamma.size()),
          "interface block width must match I_Gamma");
  require(nl.A_NNI.cols() == static_cast<Index>(dofs.I_NI.size()),
          "collar block width must match I_NI");

  const Restrictions R = buildRestrictions(dofs);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(loc.A_LL.mat.nonZeros()) +
                loc.A_LGamma.mat.nonZeros() + nl.A_NN.mat.nonZeros() +
                nl.A_NNI.mat.nonZeros());

  for (int c = 0; c < loc.A_LL.mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(loc.A_LL.mat, c); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (int c = 0; c < loc.A_LGamma.mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(loc.A_LGamma.mat, c); it; ++it)
      trips.emplace_back(it.row(), R.R_Gamma[it.col()], it.value());
  for (int c = 0; c < nl.A_NN.mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(nl.A_NN.mat, c); it; ++it)
      trips.emplace_back(nL + it.row(), nL + it.col(), it.value());
  for (int c = 0; c < nl.A_NNI.mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(nl.A_NNI.mat, c); it; ++it)
      trips.emplace_back(nL + it.row(), R.R_NI[it.col()], it.value());

  SpliceSystem sys;
  sys.n_L = nL;
  sys.n_N = nN;
  sys.A_S = operatorFromTriplets(nL + nN, nL + nN, trips, "global", "global");
  sys.h_S.resize(nL + nN);
  sys.h_S.head(nL) = loc.rhs;
  sys.h_S.tail(nN) = nl.rhs;
  return sys;
}

SparseOperator assembleSpliceAlternate(const FullOperators& full,
                                       const DomainPartition& partition,
                                       const DofPartition& dofs) {
  require(partition.local_mesh == partition.mesh,
          "row relabeling requires the shared parent mesh");
  const Index nL = static_cast<Index>(dofs.I_L.size());
  const Index nN = static_cast<Index>(dofs.I_N.size());
  const Index n = nL + nN;

  // partition-DOF lookup by mesh entity
  std::vector<Index> localDofOfVertex(partition.local_mesh->vertices.size(), -1);
  for (std::size_t l = 0; l < dofs.local_vertex.size(); ++l)
    localDofOfVertex[dofs.local_vertex[l]] = static_cast<Index>(l);
  const std::size_t nEntities = dofs.nonlocal_kind == SpaceKind::P1
                                    ? partition.mesh->vertices.size()
                                    : partition.mesh->elems.size();
  std::vector<Index> nonlocalDofOfEntity(nEntities, -1);
  for (std::size_t d = 0; d < dofs.nonlocal_entity.size(); ++d)
    nonlocalDofOfEntity[dofs.nonlocal_entity[d]] = static_cast<Index>(d);

  // column maps: partition DOF -> global column (or -1 when eliminated)
  std::vector<Index> localCol = dofs.local_to_global;
  for (std::size_t p = 0; p < dofs.I_Gamma.size(); ++p)
    localCol[dofs.I_Gamma[p]] =
        dofs.nonlocal_to_global[dofs.gamma_to_nonlocal[p]];
  std::vector<Index> nonlocalCol = dofs.nonlocal_to_global;
  for (std::size_t p = 0; p < dofs.I_NI.size(); ++p)
    nonlocalCol[dofs.I_NI[p]] = dofs.local_to_global[dofs.ni_to_local[p]];

  Eigen::SparseMatrix<double, Eigen::RowMajor> AL = full.A_L.mat;
  Eigen::SparseMatrix<double, Eigen::RowMajor> AN = full.A_N.mat;

  std::vector<Triplet> trips;
  for (Index i = 0; i < nL; ++i) {
    const Index ld = dofs.I_L[i];
    const Index vid = dofs.local_vertex[ld];
    const Index fd = full.local_space.dof_of_entity[vid];
    require(fd >= 0, "local unknown missing from the full-domain local space");
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(AL, fd);
         it; ++it) {
      const Index vj = full.local_space.entity_of_dof[it.col()];
      const Index lj = localDofOfVertex[vj];
      require(lj >= 0,
              "full-domain local row reaches outside the local region");
      const Index col = localCol[lj];
      if (col >= 0) trips.emplace_back(i, col, it.value());
    }
  }
  for (Index k = 0; k < nN; ++k) {
    const Index nd = dofs.I_N[k];
    const Index e = dofs.nonlocal_entity[nd];
    const Index fd = full.nonlocal_space.dof_of_entity[e];
    require(fd >= 0,
            "nonlocal unknown missing from the full-domain nonlocal space");
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(AN, fd);
         it; ++it) {
      const Index ej = full.nonlocal_space.entity_of_dof[it.col()];
      const Index nj = nonlocalDofOfEntity[ej];
      require(nj >= 0,
              "full-domain nonlocal row reaches outside the collar-extended "
              "nonlocal region");
      const Index col = nonlocalCol[nj];
      if (col >= 0) trips.emplace_back(nL + k, col, it.value());
    }
  }
  return operatorFromTriplets(n, n, trips, "global", "global");
}

SpliceSolution solveSplice(const SpliceSystem& sys, const DofPartition& dofs,
                           const LocalBlocks& loc, const NonlocalBlocks& nl) {
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(sys.A_S.mat);
  lu.factorize(sys.A_S.mat);
  require(lu.info() == Eigen::Success,
          "spliced operator factorization failed (singular system)");
  SpliceSolution out;
  out.u_global = lu.solve(sys.h_S);
  const double hn = sys.h_S.norm();
  const double rn = (sys.A_S.mat * out.u_global - sys.h_S).norm();
  out.residual_rel = rn / (hn > 0 ? hn : 1.0);
  require(std::isfinite(out.residual_rel) && out.residual_rel <= 1e-8,
          "spliced solve residual out of contract");

  const Index nL = sys.n_L;
  out.u_L.setZero(dofs.numLocalDofs());
  for (std::size_t p = 0; p < dofs.I_L.size(); ++p)
    out.u_L[dofs.I_L[p]] = out.u_global[static_cast<Index>(p)];
  for (std::size_t p = 0; p < dofs.I_Gamma.size(); ++p)
    out.u_L[dofs.I_Gamma[p]] =
        out.u_global[dofs.nonlocal_to_global[dofs.gamma_to_nonlocal[p]]];
  for (std::size_t p = 0; p < dofs.I_GammaGiven.size(); ++p)
    out.u_L[dofs.I_GammaGiven[p]] = loc.g[static_cast<Eigen::Index>(p)];

  out.u_N.setZero(dofs.numNonlocalDofs());
  for (std::size_t p = 0; p < dofs.I_N.size(); ++p)
    out.u_N[dofs.I_N[p]] = out.u_global[nL + static_cast<Index>(p)];
  for (std::size_t p = 0; p < dofs.I_NI.size(); ++p)
    out.u_N[dofs.I_NI[p]] =
        out.u_global[dofs.local_to_global[dofs.ni_to_local[p]]];
  for (std::size_t p = 0; p < dofs.I_gI.size(); ++p)
    out.u_N[dofs.I_gI[p]] = nl.g[static_cast<Eigen::Index>(p)];
  return out;
}

std::vector<Vec2> globalCoords(const DofPartition& dofs) {
  std::vector<Vec2> out;
  out.reserve(dofs.n);
  for (Index l : dofs.I_L) out.push_back(dofs.local_coords[l]);
  for (Index d : dofs.I_N) out.push_back(dofs.nonlocal_coords[d]);
  return out;
}

double patchTestResidual(const SpliceSystem& sys, const DofPartition& dofs,
                         const ScalarField& u_star) {
  const std::vector<Vec2> xs = globalCoords(dofs);
  Eigen::VectorXd u(sys.A_S.rows());
  for (std::size_t i = 0; i < xs.size(); ++i)
    u[static_cast<Index>(i)] = u_star(xs[i]);
  const Eigen::VectorXd r = sys.A_S.mat * u - sys.h_S;
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace ltn
