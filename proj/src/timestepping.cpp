// timestepping.cpp: backward-Euler heat integration with window rebuilds.
#include "ltn/timestepping.hpp"

#include <cmath>

#include <Eigen/SparseLU>

#include "ltn/assembly_local.hpp"

namespace ltn {

const char* windowStrategyName(WindowStrategy s) {
  switch (s) {
    case WindowStrategy::fully_nonlocal: return "fully_nonlocal";
    case WindowStrategy::moving: return "moving";
    case WindowStrategy::moving_with_boundary_layer:
      return "moving_with_boundary_layer";
    case WindowStrategy::fixed_annulus: return "fixed_annulus";
  }
  return "?";
}

WindowStrategy windowStrategyFromName(const std::string& name) {
  for (WindowStrategy s :
       {WindowStrategy::fully_nonlocal, WindowStrategy::moving,
        WindowStrategy::moving_with_boundary_layer,
        WindowStrategy::fixed_annulus}) {
    if (name == windowStrategyName(s)) return s;
  }
  fail("unknown window strategy: " + name);
}

Vec2 forcingCenter(double t) {
  return Vec2(0.5 * std::cos(t), 0.5 * std::sin(t));
}

ScalarField forcingBall(double t) {
  const Vec2 c = forcingCenter(t);
  return [c](const Vec2& p) { return dist(p, c) < 0.1 ? 1.0 : 0.0; };
}

Region localRegionAt(const TimeConfig& cfg, double t) {
  const double a = cfg.domain_halfwidth;
  const double w = cfg.window_halfwidth;
  switch (cfg.strategy) {
    case WindowStrategy::fully_nonlocal:
      return Region::empty();
    case WindowStrategy::moving: {
      const Vec2 c = forcingCenter(t);
      return Region::complement(
          Region::box(c - Vec2(w, w), c + Vec2(w, w)));
    }
    case WindowStrategy::moving_with_boundary_layer: {
      const Vec2 c = forcingCenter(t);
      const double b = cfg.boundary_layer_width;
      const Region core =
          Region::box(Vec2(-a + b, -a + b), Vec2(a - b, a - b));
      // local = core box minus the moving window
      return Region::complement(Region::unionOf(
          {Region::complement(core),
           Region::box(c - Vec2(w, w), c + Vec2(w, w))}));
    }
    case WindowStrategy::fixed_annulus:
      return Region::unionOf(
          {Region::complement(
               Region::box(Vec2(-0.8, -0.8), Vec2(0.8, 0.8))),
           Region::box(Vec2(-0.2, -0.2), Vec2(0.2, 0.2))});
  }
  fail("localRegionAt: unhandled strategy");
}

Eigen::VectorXd backwardEulerStep(const SpMat& M, const SpMat& A,
                                  const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& f, double dt,
                                  double diffusivity) {
  require(dt > 0.0, "backwardEulerStep: dt must be positive");
  const SpMat sys = M + diffusivity * dt * A;
  const Eigen::VectorXd rhs = M * u + dt * f;
  Eigen::SparseLU<SpMat> lu;
  lu.compute(sys);
  require(lu.info() == Eigen::Success,
          "backwardEulerStep: factorization failed (singular system)");
  Eigen::VectorXd x = lu.solve(rhs);
  const double rel = (sys * x - rhs).norm() /
                     std::max(rhs.norm(), 1e-300);
  require(rel <= 1e-10, "backwardEulerStep: residual above tolerance");
  return x;
}

namespace {

// P1 space over an element list, DOFs in ascending vertex order.
FESpace vertexSpace(std::shared_ptr<const Mesh> mesh,
                    std::vector<Index> elems) {
  FESpace s;
  s.kind = SpaceKind::P1;
  s.mesh = mesh;
  s.elems = std::move(elems);
  std::vector<char> used(mesh->vertices.size(), 0);
  for (Index k : s.elems) {
    const auto& el = mesh->elems[std::size_t(k)];
    for (int i = 0; i < mesh->vertsPerElem(); ++i)
      used[std::size_t(el[std::size_t(i)])] = 1;
  }
  s.dof_of_entity.assign(mesh->vertices.size(), -1);
  for (std::size_t v = 0; v < mesh->vertices.size(); ++v) {
    if (!used[v]) continue;
    s.dof_of_entity[v] = Index(s.dof_coords.size());
    s.dof_coords.push_back(mesh->vertices[v]);
    s.entity_of_dof.push_back(Index(v));
  }
  return s;
}

}  // namespace

HeatTrace runHeat(std::shared_ptr<const Mesh> mesh, const KernelSpec& kernel,
                  const TimeConfig& cfg, const QuadConfig& quad) {
  require(mesh->dim == 2, "runHeat: 2D meshes only");
  require(cfg.dt > 0.0 && cfg.t_end >= cfg.dt, "runHeat: invalid time grid");
  const double delta = kernel.delta;

  std::vector<Index> interior, everything;
  for (Index k = 0; k < mesh->numElements(); ++k) {
    everything.push_back(k);
    if (!mesh->isExterior(k)) interior.push_back(k);
  }
  require(interior.size() < everything.size(),
          "runHeat: the parent mesh must carry an exterior collar");

  FESpace S = vertexSpace(mesh, interior);
  const Index nS = S.numDofs();

  std::vector<char> on_bdry(mesh->vertices.size(), 0);
  for (const FacetKey& f : domainBoundaryFacets(*mesh)) {
    on_bdry[std::size_t(f.first)] = 1;
    if (f.second >= 0) on_bdry[std::size_t(f.second)] = 1;
  }
  Index n_free = 0;
  for (Index i = 0; i < nS; ++i)
    if (!on_bdry[std::size_t(S.entity_of_dof[std::size_t(i)])]) ++n_free;

  const SpMat M = assembleMass(S, false).mat;

  FullOperators full;
  full.local_space = S;
  full.A_L = assembleStiffness(S);
  full.nonlocal_space = vertexSpace(mesh, everything);
  full.A_N = assembleNonlocalStiffness(full.nonlocal_space, kernel, quad);

  Eigen::VectorXd u = interpolate(S, forcingBall(0.0));
  for (Index i = 0; i < nS; ++i)
    if (on_bdry[std::size_t(S.entity_of_dof[std::size_t(i)])]) u[i] = 0.0;

  HeatTrace out;
  out.mesh = mesh;
  out.space = S;
  out.initial = u;

  const int nsteps = int(std::lround(cfg.t_end / cfg.dt));
  require(nsteps >= 1, "runHeat: no steps to take");
  const bool static_window =
      cfg.strategy == WindowStrategy::fully_nonlocal ||
      cfg.strategy == WindowStrategy::fixed_annulus;

  Eigen::SparseLU<SpMat> lu;
  bool factored = false;
  SpMat sys;
  std::vector<Index> vmap;  // unknown -> S dof

  for (int n = 1; n <= nsteps; ++n) {
    const double t = n * cfg.dt;

    if (!factored || !static_window) {
      SpMat A_step;
      if (cfg.strategy == WindowStrategy::fully_nonlocal) {
        // No coupling: keep the rows of the full nonlocal operator at the
        // free vertices; constrained columns carry zero data and drop out.
        vmap.clear();
        for (Index i = 0; i < nS; ++i) {
          if (!on_bdry[std::size_t(S.entity_of_dof[std::size_t(i)])])
            vmap.push_back(i);
        }
        std::vector<Index> pos_of_sdof(std::size_t(nS), -1);
        for (std::size_t i = 0; i < vmap.size(); ++i)
          pos_of_sdof[std::size_t(vmap[i])] = Index(i);
        const FESpace& NS = full.nonlocal_space;
        Eigen::SparseMatrix<double, Eigen::RowMajor> AN = full.A_N.mat;
        std::vector<Triplet> trips;
        for (std::size_t i = 0; i < vmap.size(); ++i) {
          const Index v = S.entity_of_dof[std::size_t(vmap[i])];
          const Index fd = NS.dof_of_entity[std::size_t(v)];
          require(fd >= 0, "runHeat: vertex missing from the full space");
          for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
                   it(AN, fd);
               it; ++it) {
            const Index vj = NS.entity_of_dof[std::size_t(it.col())];
            const Index sj = S.dof_of_entity[std::size_t(vj)];
            if (sj < 0) continue;  // collar vertex, zero data
            const Index cj = pos_of_sdof[std::size_t(sj)];
            if (cj >= 0) trips.emplace_back(int(i), int(cj), it.value());
          }
        }
        A_step.resize(Index(vmap.size()), Index(vmap.size()));
        A_step.setFromTriplets(trips.begin(), trips.end());
      } else {
        const Region omega_L = localRegionAt(cfg, t);
        PartitionOptions opts;
        opts.snap = true;
        DomainPartition part =
            buildDomainPartition(mesh, omega_L, delta, opts);
        DofPartition dofs = classifyDofs(part, SpaceKind::P1);
        const SparseOperator A_S = assembleSpliceAlternate(full, part, dofs);
        A_step = A_S.mat;

        const Index nL = Index(dofs.I_L.size());
        const Index nN = Index(dofs.I_N.size());
        vmap.assign(std::size_t(nL + nN), -1);
        for (Index i = 0; i < nL; ++i) {
          const Index v =
              dofs.local_vertex[std::size_t(dofs.I_L[std::size_t(i)])];
          vmap[std::size_t(i)] = S.dof_of_entity[std::size_t(v)];
        }
        for (Index k = 0; k < nN; ++k) {
          const Index v =
              dofs.nonlocal_entity[std::size_t(dofs.I_N[std::size_t(k)])];
          vmap[std::size_t(nL + k)] = S.dof_of_entity[std::size_t(v)];
        }
      }
      // Window rebuild contract: the unknowns cover each interior vertex of
      // the domain exactly once, so step vectors share the parent index space.
      std::vector<Index> unk_of_sdof(std::size_t(nS), -1);
      for (std::size_t i = 0; i < vmap.size(); ++i) {
        require(vmap[i] >= 0, "runHeat: unknown outside the parent space");
        require(!on_bdry[std::size_t(S.entity_of_dof[std::size_t(vmap[i])])],
                "runHeat: unknown on the domain boundary");
        require(unk_of_sdof[std::size_t(vmap[i])] < 0,
                "runHeat: vertex labeled twice");
        unk_of_sdof[std::size_t(vmap[i])] = Index(i);
      }
      require(Index(vmap.size()) == n_free,
              "runHeat: window labeling does not cover the domain");

      std::vector<Triplet> trips;
      for (int c = 0; c < M.outerSize(); ++c) {
        const Index uc = unk_of_sdof[std::size_t(c)];
        if (uc < 0) continue;
        for (SpMat::InnerIterator it(M, c); it; ++it) {
          const Index ur = unk_of_sdof[std::size_t(it.row())];
          if (ur >= 0) trips.emplace_back(int(ur), int(uc), it.value());
        }
      }
      SpMat Muu(vmap.size(), vmap.size());
      Muu.setFromTriplets(trips.begin(), trips.end());
      sys = Muu + cfg.diffusivity * cfg.dt * A_step;
      lu.compute(sys);
      require(lu.info() == Eigen::Success,
              "runHeat: coupled system factorization failed");
      factored = true;
    }

    Eigen::VectorXd rhsS = M * u;
    if (cfg.with_forcing) rhsS += cfg.dt * assembleLoad(S, forcingBall(t), 6);
    Eigen::VectorXd b(Index(vmap.size()));
    for (std::size_t i = 0; i < vmap.size(); ++i) b[Index(i)] = rhsS[vmap[i]];

    const Eigen::VectorXd x = lu.solve(b);
    const double rel = (sys * x - b).norm() / std::max(b.norm(), 1e-300);
    require(rel <= 1e-10, "runHeat: step residual above tolerance");

    u.setZero();
    for (std::size_t i = 0; i < vmap.size(); ++i) u[vmap[i]] = x[Index(i)];

    out.times.push_back(t);
    out.snapshots.push_back(u);
    if (cfg.strategy == WindowStrategy::moving ||
        cfg.strategy == WindowStrategy::moving_with_boundary_layer) {
      const Vec2 c = forcingCenter(t);
      out.window_box.push_back({c.x - cfg.window_halfwidth,
                                c.y - cfg.window_halfwidth,
                                c.x + cfg.window_halfwidth,
                                c.y + cfg.window_halfwidth});
    } else {
      out.window_box.push_back({-cfg.domain_halfwidth, -cfg.domain_halfwidth,
                                cfg.domain_halfwidth, cfg.domain_halfwidth});
    }
  }
  return out;
}

}  // namespace ltn
