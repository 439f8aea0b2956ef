// experiments.cpp: experiment drivers, reference solves, and the output
// plumbing (CSV, MatrixMarket, JSON-lines summaries, resolved configs).
#include "ltn/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "json.hpp"

namespace ltn {

namespace {

using nlohmann::json;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double stop() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string formatG(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void writeText(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open output file: " + path);
  out << content;
  out.close();
  require(out.good(), "failed writing output file: " + path);
}

std::string joinLines(const std::vector<json>& lines) {
  std::string text;
  for (const auto& l : lines) {
    text += l.dump();
    text += '\n';
  }
  return text;
}

std::vector<std::string> splitCsvNames(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

QuadConfig quadFromConfig(Config& cfg) {
  QuadConfig q;
  q.threads = cfg.getInt("threads", 1);
  return q;
}

// One CSV section of DOF values against a reference field.
void appendSolutionRows(std::string& csv, const std::string& side,
                        const FESpace& space, const Eigen::VectorXd& u,
                        const ScalarField& exact) {
  for (Index i = 0; i < space.numDofs(); ++i) {
    const Vec2& p = space.dof_coords[std::size_t(i)];
    const double want = exact(p);
    csv += side + "," + formatG(p.x) + "," + formatG(p.y) + "," +
           formatG(u[i]) + "," + formatG(want) + "," +
           formatG(std::abs(u[i] - want)) + "\n";
  }
}

void writeSolutionCsv(const std::string& path, const CoupledProblem& p,
                      const ScalarField& exact) {
  std::string csv = "side,x,y,value,exact,abs_error\n";
  appendSolutionRows(csv, "local", p.local_space, p.sol.u_L, exact);
  appendSolutionRows(csv, "nonlocal", p.nonlocal_space, p.sol.u_N, exact);
  writeText(path, csv);
}

void writeFullSolutionCsv(const std::string& path, const FullSolution& s,
                          const ScalarField& exact) {
  std::string csv = "side,x,y,value,exact,abs_error\n";
  appendSolutionRows(csv, "nonlocal", s.space, s.u, exact);
  writeText(path, csv);
}

json coupledStats(const CoupledProblem& p) {
  json j;
  j["n_local"] = p.sys.n_L;
  j["n_nonlocal"] = p.sys.n_N;
  j["rows"] = p.sys.A_S.rows();
  j["cols"] = p.sys.A_S.cols();
  j["nnz"] = p.sys.A_S.mat.nonZeros();
  j["residual_rel"] = p.sol.residual_rel;
  j["assemble_local_seconds"] = p.assemble_local_seconds;
  j["assemble_nonlocal_seconds"] = p.assemble_nonlocal_seconds;
  j["splice_seconds"] = p.splice_seconds;
  j["solve_seconds"] = p.solve_seconds;
  return j;
}

json fullStats(const FullSolution& s) {
  json j;
  j["n_dofs"] = s.space.numDofs();
  j["nnz"] = s.A.mat.nonZeros();
  j["residual_rel"] = s.residual_rel;
  j["assemble_seconds"] = s.assemble_seconds;
  j["solve_seconds"] = s.solve_seconds;
  return j;
}

json checkLine(const CaseCheck& check) {
  json j;
  j["check"] = "forcing_oracle";
  j["case"] = check.name;
  j["samples"] = check.samples;
  j["max_rel_err"] = check.max_rel_err;
  j["pass"] = check.pass;
  return j;
}

FullOperators buildFullOperators(const std::shared_ptr<const Mesh>& mesh,
                                 const FESpace& nonlocal_all,
                                 const SparseOperator& A_N) {
  FullOperators full;
  full.local_space = buildSpace(mesh, SpaceKind::P1, interiorElems(*mesh));
  full.nonlocal_space = nonlocal_all;
  full.A_L = assembleStiffness(full.local_space);
  full.A_N = A_N;
  return full;
}

ScalarField zeroField() {
  return [](const Vec2&) { return 0.0; };
}

// The patch solutions solve the equation for every admissible normalized
// kernel, so the experiment kernel (from the config) replaces the case's
// oracle-default kernel.
ManufacturedCase withKernel(ManufacturedCase c, const KernelSpec& kernel) {
  c.kernel = kernel;
  return c;
}

}  // namespace

LoadAssembler fieldLoad(const ScalarField& f, int order) {
  return [f, order](const FESpace& space) {
    return assembleLoad(space, f, order);
  };
}

FESpace buildSpace(std::shared_ptr<const Mesh> mesh, SpaceKind kind,
                   const std::vector<Index>& elems) {
  FESpace s;
  s.kind = kind;
  s.mesh = mesh;
  s.elems = elems;
  std::sort(s.elems.begin(), s.elems.end());
  s.elems.erase(std::unique(s.elems.begin(), s.elems.end()), s.elems.end());
  require(!s.elems.empty(), "buildSpace: empty element set");
  if (kind == SpaceKind::P1) {
    std::vector<char> seen(std::size_t(mesh->numVertices()), 0);
    for (Index k : s.elems) {
      for (int i = 0; i <= mesh->dim; ++i)
        seen[std::size_t(mesh->elems[std::size_t(k)][std::size_t(i)])] = 1;
    }
    s.dof_of_entity.assign(std::size_t(mesh->numVertices()), -1);
    for (Index v = 0; v < mesh->numVertices(); ++v) {
      if (!seen[std::size_t(v)]) continue;
      s.dof_of_entity[std::size_t(v)] = static_cast<Index>(s.dof_coords.size());
      s.entity_of_dof.push_back(v);
      s.dof_coords.push_back(mesh->vertices[std::size_t(v)]);
    }
  } else {
    s.dof_of_entity.assign(std::size_t(mesh->numElements()), -1);
    for (Index k : s.elems) {
      s.dof_of_entity[std::size_t(k)] = static_cast<Index>(s.dof_coords.size());
      s.entity_of_dof.push_back(k);
      s.dof_coords.push_back(mesh->elemCentroid(k));
    }
  }
  return s;
}

std::vector<Index> allElems(const Mesh& mesh) {
  std::vector<Index> out(std::size_t(mesh.numElements()));
  for (Index k = 0; k < mesh.numElements(); ++k) out[std::size_t(k)] = k;
  return out;
}

std::vector<Index> interiorElems(const Mesh& mesh) {
  std::vector<Index> out;
  for (Index k = 0; k < mesh.numElements(); ++k)
    if (!mesh.isExterior(k)) out.push_back(k);
  return out;
}

CoupledProblem solveCoupled(const DomainPartition& partition,
                            const DofPartition& dofs, const KernelSpec& kernel,
                            const ScalarField& g, const LoadAssembler& load,
                            const QuadConfig& quad) {
  CoupledProblem p;
  p.partition = partition;
  p.dofs = dofs;
  p.local_space = makeLocalSpace(partition, dofs);
  p.nonlocal_space = makeNonlocalSpace(partition, dofs);
  {
    Timer t;
    const SparseOperator A = assembleStiffness(p.local_space);
    const Eigen::VectorXd f = load(p.local_space);
    p.loc = eliminateLocalBc(A, f, dofs, g);
    p.assemble_local_seconds = t.stop();
  }
  {
    Timer t;
    const SparseOperator A = assembleNonlocalStiffness(p.nonlocal_space, kernel, quad);
    const Eigen::VectorXd f = load(p.nonlocal_space);
    p.nl = eliminateVolumeCondition(A, f, dofs, g);
    p.assemble_nonlocal_seconds = t.stop();
  }
  {
    Timer t;
    p.sys = assembleSplice(p.loc, p.nl, dofs);
    p.splice_seconds = t.stop();
  }
  {
    Timer t;
    p.sol = solveSplice(p.sys, dofs, p.loc, p.nl);
    p.solve_seconds = t.stop();
  }
  return p;
}

CoupledProblem solveCoupledP1(std::shared_ptr<const Mesh> mesh,
                              const Region& omega_L, const KernelSpec& kernel,
                              const ScalarField& g, const LoadAssembler& load,
                              const QuadConfig& quad, bool snap) {
  PartitionOptions opts;
  opts.snap = snap;
  const DomainPartition part =
      buildDomainPartition(mesh, omega_L, kernel.delta, opts);
  const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
  return solveCoupled(part, dofs, kernel, g, load, quad);
}

namespace {

// Shared elimination + solve for the single-model problems: free DOFs keep
// the equation, constrained DOFs carry the data field.
void solveConstrained(FullSolution& s, const Eigen::VectorXd& F,
                      const std::vector<char>& free_dof, const ScalarField& g,
                      const std::string& what) {
  const Index nd = s.space.numDofs();
  std::vector<Index> free_ids, cons_ids;
  for (Index i = 0; i < nd; ++i)
    (free_dof[std::size_t(i)] ? free_ids : cons_ids).push_back(i);
  require(!free_ids.empty(), what + ": no free DOFs");
  Timer t;
  const SpMat A_ff = extractBlock(s.A.mat, free_ids, free_ids);
  Eigen::VectorXd b(static_cast<Index>(free_ids.size()));
  for (std::size_t i = 0; i < free_ids.size(); ++i) b[Index(i)] = F[free_ids[i]];
  Eigen::VectorXd gc(static_cast<Index>(cons_ids.size()));
  for (std::size_t i = 0; i < cons_ids.size(); ++i)
    gc[Index(i)] = g(s.space.dof_coords[std::size_t(cons_ids[i])]);
  if (!cons_ids.empty()) {
    const SpMat A_fc = extractBlock(s.A.mat, free_ids, cons_ids);
    b -= A_fc * gc;
  }
  Eigen::SimplicialLDLT<SpMat> ldlt(A_ff);
  require(ldlt.info() == Eigen::Success, what + ": factorization failed");
  const Eigen::VectorXd x = ldlt.solve(b);
  const double bn = b.norm();
  s.residual_rel = (A_ff * x - b).norm() / (bn > 0.0 ? bn : 1.0);
  require(s.residual_rel <= 1e-10, what + ": solver residual too large");
  s.solve_seconds = t.stop();
  s.u.setZero(nd);
  for (std::size_t i = 0; i < free_ids.size(); ++i) s.u[free_ids[i]] = x[Index(i)];
  for (std::size_t i = 0; i < cons_ids.size(); ++i) s.u[cons_ids[i]] = gc[Index(i)];
}

}  // namespace

FullSolution solveFullyNonlocal(std::shared_ptr<const Mesh> mesh,
                                const KernelSpec& kernel, SpaceKind kind,
                                const ScalarField& g, const LoadAssembler& load,
                                const QuadConfig& quad) {
  FullSolution s;
  s.space = buildSpace(mesh, kind, allElems(*mesh));
  s.domain_elems = interiorElems(*mesh);
  Timer t;
  s.A = assembleNonlocalStiffness(s.space, kernel, quad);
  const Eigen::VectorXd F = load(s.space);
  s.assemble_seconds = t.stop();
  // Unknowns sit strictly inside the domain; DOFs on the boundary or in the
  // collar carry the volume condition.
  std::vector<char> free_dof(std::size_t(s.space.numDofs()), 0);
  if (kind == SpaceKind::P1) {
    std::vector<char> on_bdry(std::size_t(mesh->numVertices()), 0);
    for (const auto& [a, b] : domainBoundaryFacets(*mesh)) {
      on_bdry[std::size_t(a)] = 1;
      if (b >= 0) on_bdry[std::size_t(b)] = 1;
    }
    std::vector<char> interior_vertex(std::size_t(mesh->numVertices()), 0);
    for (Index k : s.domain_elems) {
      for (int i = 0; i <= mesh->dim; ++i)
        interior_vertex[std::size_t(mesh->elems[std::size_t(k)][std::size_t(i)])] = 1;
    }
    for (Index i = 0; i < s.space.numDofs(); ++i) {
      const Index v = s.space.entity_of_dof[std::size_t(i)];
      free_dof[std::size_t(i)] =
          (!on_bdry[std::size_t(v)] && interior_vertex[std::size_t(v)]) ? 1 : 0;
    }
  } else {
    for (Index i = 0; i < s.space.numDofs(); ++i) {
      const Index k = s.space.entity_of_dof[std::size_t(i)];
      free_dof[std::size_t(i)] = mesh->isExterior(k) ? 0 : 1;
    }
  }
  solveConstrained(s, F, free_dof, g, "solveFullyNonlocal");
  return s;
}

FullSolution solveFullyLocal(std::shared_ptr<const Mesh> mesh,
                             const ScalarField& g, const LoadAssembler& load) {
  FullSolution s;
  s.space = buildSpace(mesh, SpaceKind::P1, interiorElems(*mesh));
  s.domain_elems = s.space.elems;
  Timer t;
  s.A = assembleStiffness(s.space);
  const Eigen::VectorXd F = load(s.space);
  s.assemble_seconds = t.stop();
  std::vector<char> on_bdry(std::size_t(mesh->numVertices()), 0);
  for (const auto& [a, b] : domainBoundaryFacets(*mesh)) {
    on_bdry[std::size_t(a)] = 1;
    if (b >= 0) on_bdry[std::size_t(b)] = 1;
  }
  std::vector<char> free_dof(std::size_t(s.space.numDofs()), 0);
  for (Index i = 0; i < s.space.numDofs(); ++i) {
    const Index v = s.space.entity_of_dof[std::size_t(i)];
    free_dof[std::size_t(i)] = on_bdry[std::size_t(v)] ? 0 : 1;
  }
  solveConstrained(s, F, free_dof, g, "solveFullyLocal");
  return s;
}

double spliceErrorNorm(const CoupledProblem& p, const ScalarField& ref,
                       NormKind norm, const Region& local_region, int order) {
  const double eL =
      errorNorm(p.local_space, p.sol.u_L, ref, norm, local_region, order);
  const double eN = errorNorm(p.nonlocal_space, p.sol.u_N, ref, norm,
                              Region::all(), order, &p.partition.core_elems);
  return combineNorms(norm, eL, eN);
}

double fullErrorNorm(const FullSolution& s, const ScalarField& ref,
                     NormKind norm, int order) {
  return errorNorm(s.space, s.u, ref, norm, Region::all(), order,
                   &s.domain_elems);
}

double alternateIdentity(const CoupledProblem& p, const FullOperators& full) {
  const SparseOperator alt = assembleSpliceAlternate(full, p.partition, p.dofs);
  const SpMat diff = p.sys.A_S.mat - alt.mat;
  return maxAbsEntry(diff);
}

std::shared_ptr<const Mesh> intervalMeshWithCollar(double a, double b, double h,
                                                   double delta) {
  return std::make_shared<Mesh>(uniformIntervalMesh(a, b, h, delta, delta));
}

std::shared_ptr<const Mesh> squareMeshWithCollar(double a, double b, double h,
                                                 double delta) {
  return std::make_shared<Mesh>(structuredTriangleMesh(a, b, a, b, h, delta));
}

double logLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2,
          "logLogSlope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "logLogSlope: points must be positive");
    const double lx = std::log10(x[i]);
    const double ly = std::log10(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  const double denom = n * sxx - sx * sx;
  require(std::abs(denom) > 1e-30, "logLogSlope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------
// Experiment runners.
// ---------------------------------------------------------------------------

namespace {

ExperimentResult runPatch1d(Config& cfg, const std::string& out) {
  cfg.validate({"h", "delta", "s", "threads", "dim", "pair"});
  const double h = cfg.getDouble("h", 0.05);
  const double delta = cfg.getDouble("delta", 0.1);
  const double s = cfg.getDouble("s", 0.75);
  const QuadConfig quad = quadFromConfig(cfg);
  const KernelSpec kernel =
      makeKernel(KernelFamily::fractional, 1, s, delta);

  auto mesh = intervalMeshWithCollar(-1.0, 1.0, h, delta);
  const DomainPartition part =
      buildDomainPartition(mesh, Region::interval(-1.0, 0.0), delta, {});
  const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
  const FESpace nl_all = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const FullOperators full = buildFullOperators(
      mesh, nl_all, assembleNonlocalStiffness(nl_all, kernel, quad));

  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "patch_1d";
    j["h"] = h;
    j["delta"] = delta;
    j["s"] = s;
    j["mesh_vertices"] = mesh->numVertices();
    j["mesh_elements"] = mesh->numElements();
    lines.push_back(j);
  }
  const Region domain = Region::interval(-1.0, 1.0);
  for (const ManufacturedCase& base :
       {patchLinear1dCase(), patchQuadratic1dCase()}) {
    const ManufacturedCase c = withKernel(base, kernel);
    const CoupledProblem p =
        solveCoupled(part, dofs, c.kernel, c.g, fieldLoad(c.f), quad);
    json j = coupledStats(p);
    j["experiment"] = "patch_1d";
    j["case"] = c.name;
    j["nodal_max_local"] = maxNodalError(p.local_space, p.sol.u_L, c.u_exact);
    j["nodal_max_nonlocal"] =
        maxNodalError(p.nonlocal_space, p.sol.u_N, c.u_exact, domain);
    j["nodal_max"] = std::max(j["nodal_max_local"].get<double>(),
                              j["nodal_max_nonlocal"].get<double>());
    j["l2_error"] = spliceErrorNorm(p, c.u_exact, NormKind::L2);
    j["linf_error"] = spliceErrorNorm(p, c.u_exact, NormKind::Linf);
    j["patch_test_residual"] = patchTestResidual(p.sys, dofs, c.u_exact);
    j["alternate_identity"] = alternateIdentity(p, full);
    lines.push_back(j);
    writeSolutionCsv(out + "/" + c.name + "_solution.csv", p, c.u_exact);
    if (j["nodal_max"].get<double>() > 1e-6) res.ok = false;
  }
  res.summary_jsonl = joinLines(lines);
  return res;
}

ExperimentResult runPatch1dP0P1(Config& cfg, const std::string& out) {
  cfg.validate({"h", "delta", "s", "threads", "dim", "pair"});
  const double h = cfg.getDouble("h", 0.05);
  const double delta = cfg.getDouble("delta", 0.1);
  const double s = cfg.getDouble("s", 0.25);
  const QuadConfig quad = quadFromConfig(cfg);
  const KernelSpec kernel = makeKernel(KernelFamily::fractional, 1, s, delta);

  auto mesh = intervalMeshWithCollar(-1.0, 1.0, h, delta);
  const P0P1Coupling coupling =
      buildP0P1Coupling(mesh, Region::interval(0.0, 1.0), delta, {});
  const Region local_region = Region::interval(-1.0, 0.0);

  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "patch_1d_p0p1";
    j["h"] = h;
    j["delta"] = delta;
    j["s"] = s;
    j["local_mesh_vertices"] = coupling.partition.local_mesh->numVertices();
    j["parent_mesh_elements"] = mesh->numElements();
    lines.push_back(j);
  }
  for (const ManufacturedCase& base :
       {patchLinear1dCase(), patchQuadratic1dLowOrderCase()}) {
    const ManufacturedCase c = withKernel(base, kernel);
    const CoupledProblem p = solveCoupled(coupling.partition, coupling.dofs,
                                          c.kernel, c.g, fieldLoad(c.f), quad);
    const FullSolution fullP0 = solveFullyNonlocal(mesh, kernel, SpaceKind::P0,
                                                   c.g, fieldLoad(c.f), quad);
    json j = coupledStats(p);
    j["experiment"] = "patch_1d_p0p1";
    j["case"] = c.name;
    j["l2_error"] = spliceErrorNorm(p, c.u_exact, NormKind::L2, local_region);
    j["l2_error_fully_nonlocal"] = fullErrorNorm(fullP0, c.u_exact, NormKind::L2);
    j["l2_ratio_vs_fully_nonlocal"] =
        j["l2_error"].get<double>() /
        std::max(j["l2_error_fully_nonlocal"].get<double>(), 1e-300);
    // Row relabeling needs a shared parent mesh; the non-matching pair has none.
    j["alternate_identity"] = nullptr;
    j["fully_nonlocal"] = fullStats(fullP0);
    lines.push_back(j);
    writeSolutionCsv(out + "/" + c.name + "_p0p1_solution.csv", p, c.u_exact);
    if (j["l2_ratio_vs_fully_nonlocal"].get<double>() > 2.0) res.ok = false;
  }
  res.summary_jsonl = joinLines(lines);
  return res;
}

Region patch2dLocalRegion(const std::string& split) {
  if (split == "left_right")
    return Region::box(Vec2(-1.0, -1.0), Vec2(0.0, 1.0));
  if (split == "inclusion")
    return Region::complement(
        Region::box(Vec2(-0.25, -0.25), Vec2(0.25, 0.25)));
  fail("unknown split: " + split + " (use left_right or inclusion)");
}

ExperimentResult runPatch2d(Config& cfg, const std::string& out) {
  cfg.validate({"h", "delta", "s", "split", "pair", "threads", "dim"});
  const double h = cfg.getDouble("h", 2.0 / 24.0);
  const double delta = cfg.getDouble("delta", 0.2);
  const double s = cfg.getDouble("s", 0.25);
  const std::string split = cfg.getString("split", "both");
  const std::string pair = cfg.getString("pair", "p1p1");
  const QuadConfig quad = quadFromConfig(cfg);
  const KernelSpec kernel = makeKernel(KernelFamily::fractional, 2, s, delta);
  const ManufacturedCase c = withKernel(patch2dCase(), kernel);

  auto mesh = squareMeshWithCollar(-1.0, 1.0, h, delta);
  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "patch_2d";
    j["h"] = h;
    j["delta"] = delta;
    j["s"] = s;
    j["pair"] = pair;
    j["mesh_vertices"] = mesh->numVertices();
    j["mesh_elements"] = mesh->numElements();
    lines.push_back(j);
  }

  if (pair == "p0p1") {
    require(split == "left_right" || split == "both",
            "patch_2d: the non-matching pair supports the left_right split");
    const P0P1Coupling coupling = buildP0P1Coupling(
        mesh, Region::box(Vec2(0.0, -1.0), Vec2(1.0, 1.0)), delta, {});
    const CoupledProblem p = solveCoupled(coupling.partition, coupling.dofs,
                                          kernel, c.g, fieldLoad(c.f), quad);
    const FullSolution fullP0 = solveFullyNonlocal(mesh, kernel, SpaceKind::P0,
                                                   c.g, fieldLoad(c.f), quad);
    json j = coupledStats(p);
    j["experiment"] = "patch_2d";
    j["case"] = "left_right_p0p1";
    j["l2_error"] = spliceErrorNorm(p, c.u_exact, NormKind::L2,
                                    patch2dLocalRegion("left_right"));
    j["l2_error_fully_nonlocal"] = fullErrorNorm(fullP0, c.u_exact, NormKind::L2);
    j["l2_ratio_vs_fully_nonlocal"] =
        j["l2_error"].get<double>() /
        std::max(j["l2_error_fully_nonlocal"].get<double>(), 1e-300);
    j["alternate_identity"] = nullptr;
    j["fully_nonlocal"] = fullStats(fullP0);
    lines.push_back(j);
    writeSolutionCsv(out + "/patch_2d_left_right_p0p1_solution.csv", p, c.u_exact);
    res.summary_jsonl = joinLines(lines);
    return res;
  }

  require(pair == "p1p1", "patch_2d: pair must be p1p1 or p0p1");
  const FullSolution fs =
      solveFullyNonlocal(mesh, kernel, SpaceKind::P1, c.g, fieldLoad(c.f), quad);
  const double full_linf = fullErrorNorm(fs, c.u_exact, NormKind::Linf);
  const FullOperators full = buildFullOperators(mesh, fs.space, fs.A);
  {
    json j = fullStats(fs);
    j["experiment"] = "patch_2d";
    j["case"] = "fully_nonlocal";
    j["l2_error"] = fullErrorNorm(fs, c.u_exact, NormKind::L2);
    j["linf_error"] = full_linf;
    lines.push_back(j);
  }
  std::vector<std::string> splits;
  if (split == "both")
    splits = {"left_right", "inclusion"};
  else
    splits = {split};
  const Region domain = Region::box(Vec2(-1.0, -1.0), Vec2(1.0, 1.0));
  for (const std::string& sp : splits) {
    const CoupledProblem p = solveCoupledP1(mesh, patch2dLocalRegion(sp),
                                            kernel, c.g, fieldLoad(c.f), quad);
    json j = coupledStats(p);
    j["experiment"] = "patch_2d";
    j["case"] = sp;
    j["nodal_max_local"] = maxNodalError(p.local_space, p.sol.u_L, c.u_exact);
    j["nodal_max_nonlocal"] =
        maxNodalError(p.nonlocal_space, p.sol.u_N, c.u_exact, domain);
    j["l2_error"] = spliceErrorNorm(p, c.u_exact, NormKind::L2);
    j["linf_error"] = spliceErrorNorm(p, c.u_exact, NormKind::Linf);
    j["linf_error_fully_nonlocal"] = full_linf;
    j["linf_ratio_vs_fully_nonlocal"] =
        j["linf_error"].get<double>() / std::max(full_linf, 1e-300);
    j["patch_test_residual"] = patchTestResidual(p.sys, p.dofs, c.u_exact);
    j["alternate_identity"] = alternateIdentity(p, full);
    lines.push_back(j);
    writeSolutionCsv(out + "/patch_2d_" + sp + "_solution.csv", p, c.u_exact);
    if (j["linf_ratio_vs_fully_nonlocal"].get<double>() > 1.5) res.ok = false;
  }
  res.summary_jsonl = joinLines(lines);
  return res;
}

ExperimentResult runOptCompare(Config& cfg, const std::string& out) {
  cfg.validate({"dim", "h", "delta", "s", "split", "max_iterations", "grad_tol",
                "threads"});
  const int dim = cfg.getInt("dim", 1);
  require(dim == 1 || dim == 2, "opt_compare: dim must be 1 or 2");
  const double h = cfg.getDouble("h", dim == 1 ? 0.05 : 2.0 / 24.0);
  const double delta = cfg.getDouble("delta", dim == 1 ? 0.1 : 0.2);
  const double s = cfg.getDouble("s", dim == 1 ? 0.75 : 0.25);
  const int max_iterations = cfg.getInt("max_iterations", 200);
  const double grad_tol = cfg.getDouble("grad_tol", 1e-12);
  const QuadConfig quad = quadFromConfig(cfg);
  const KernelSpec kernel = makeKernel(KernelFamily::fractional, dim, s, delta);

  struct Entry {
    std::string label;
    ManufacturedCase c;
    DomainPartition part;
    DofPartition dofs;
  };
  std::vector<Entry> entries;
  std::shared_ptr<const Mesh> mesh;
  if (dim == 1) {
    mesh = intervalMeshWithCollar(-1.0, 1.0, h, delta);
    const DomainPartition part =
        buildDomainPartition(mesh, Region::interval(-1.0, 0.0), delta, {});
    const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
    for (const ManufacturedCase& base :
         {patchLinear1dCase(), patchQuadratic1dCase()})
      entries.push_back({base.name, withKernel(base, kernel), part, dofs});
  } else {
    mesh = squareMeshWithCollar(-1.0, 1.0, h, delta);
    const std::string split = cfg.getString("split", "both");
    std::vector<std::string> splits;
    if (split == "both")
      splits = {"left_right", "inclusion"};
    else
      splits = {split};
    for (const std::string& sp : splits) {
      const DomainPartition part =
          buildDomainPartition(mesh, patch2dLocalRegion(sp), delta, {});
      const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
      entries.push_back(
          {"patch_2d_" + sp, withKernel(patch2dCase(), kernel), part, dofs});
    }
  }
  const FESpace nl_all = buildSpace(mesh, SpaceKind::P1, allElems(*mesh));
  const FullOperators full = buildFullOperators(
      mesh, nl_all, assembleNonlocalStiffness(nl_all, kernel, quad));

  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "opt_compare";
    j["dim"] = dim;
    j["h"] = h;
    j["delta"] = delta;
    j["s"] = s;
    lines.push_back(j);
  }
  for (const Entry& e : entries) {
    const CoupledProblem p =
        solveCoupled(e.part, e.dofs, e.c.kernel, e.c.g, fieldLoad(e.c.f), quad);
    const double identity = alternateIdentity(p, full);
    OptCoupling opt(e.part, e.dofs, p.loc, p.nl, true);
    const ControlPair induced = opt.inducedControls(p.sol);
    std::string theta_csv = "set,x,y,theta,method\n";
    for (const MinimizeMethod method :
         {MinimizeMethod::exact_quadratic, MinimizeMethod::quasi_newton}) {
      Timer t;
      const MinimizeResult r = opt.minimize(method, max_iterations, grad_tol);
      const double seconds = t.stop();
      const double diff_inf =
          std::max((r.u_L - p.sol.u_L).cwiseAbs().maxCoeff(),
                   (r.u_N - p.sol.u_N).cwiseAbs().maxCoeff());
      const double theta_diff =
          (opt.pack(r.theta) - opt.pack(induced)).cwiseAbs().maxCoeff();
      const char* mname =
          method == MinimizeMethod::exact_quadratic ? "exact_quadratic"
                                                    : "quasi_newton";
      json j = coupledStats(p);
      j["experiment"] = "opt_compare";
      j["case"] = e.label;
      j["method"] = mname;
      j["J"] = r.J;
      j["iterations"] = r.iterations;
      j["converged"] = r.converged;
      j["opt_vs_splice_inf"] = diff_inf;
      j["theta_vs_induced_inf"] = theta_diff;
      j["control_dim"] = opt.controlDim();
      j["overlap_pairs"] = opt.overlapPairs();
      j["lumped_overlap_mass_min"] = opt.lumpedMassMin();
      j["alternate_identity"] = identity;
      j["minimize_seconds"] = seconds;
      lines.push_back(j);
      for (Index i = 0; i < static_cast<Index>(e.dofs.I_Gamma.size()); ++i) {
        const Vec2& pnt =
            e.dofs.local_coords[std::size_t(e.dofs.I_Gamma[std::size_t(i)])];
        theta_csv += std::string("gamma,") + formatG(pnt.x) + "," +
                     formatG(pnt.y) + "," + formatG(r.theta.theta_L[i]) + "," +
                     mname + "\n";
      }
      for (Index i = 0; i < static_cast<Index>(e.dofs.I_NI.size()); ++i) {
        const Vec2& pnt =
            e.dofs.nonlocal_coords[std::size_t(e.dofs.I_NI[std::size_t(i)])];
        theta_csv += std::string("ni,") + formatG(pnt.x) + "," + formatG(pnt.y) +
                     "," + formatG(r.theta.theta_N[i]) + "," + mname + "\n";
      }
    }
    writeText(out + "/" + e.label + "_theta.csv", theta_csv);
  }
  res.summary_jsonl = joinLines(lines);
  return res;
}

ExperimentResult runDeltaConvergence(Config& cfg, const std::string& out) {
  cfg.validate({"h", "s", "deltas", "fine_refine", "threads"});
  const double h = cfg.getDouble("h", 0.005);
  const double s = cfg.getDouble("s", 0.25);
  const std::vector<double> deltas =
      cfg.getDoubleList("deltas", {1.0, 0.5, 0.1, 0.05, 0.01});
  const int fine_refine = cfg.getInt("fine_refine", 10);
  const QuadConfig quad = quadFromConfig(cfg);
  require(!deltas.empty(), "delta_convergence: empty delta list");

  const double max_delta = *std::max_element(deltas.begin(), deltas.end());
  auto mesh = intervalMeshWithCollar(-1.0, 1.0, h, max_delta);
  auto fine_mesh = std::make_shared<Mesh>(
      uniformIntervalMesh(-1.0, 1.0, h / fine_refine, 0.0, 0.0));

  const ScalarField g = linearExtensionData();
  const LoadAssembler load = [](const FESpace& space) {
    const Eigen::VectorXd singular =
        assembleRadialPowerLoad(space, 0.0, -0.25, 12);
    const Eigen::VectorXd smooth = assembleLoad(
        space, [](const Vec2& p) { return std::sin(p.x); }, 6);
    return Eigen::VectorXd(singular + smooth);
  };
  const FullSolution ref = solveFullyLocal(fine_mesh, g, load);

  const FESpace loc_all = buildSpace(mesh, SpaceKind::P1, interiorElems(*mesh));
  const SparseOperator A_L_full = assembleStiffness(loc_all);

  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "delta_convergence";
    j["h"] = h;
    j["s"] = s;
    j["fine_refine"] = fine_refine;
    j["reference"] = "local_dirichlet_fine_mesh";
    j["reference_dofs"] = ref.space.numDofs();
    lines.push_back(j);
  }
  std::string csv = "delta,l2_splice,l2_fully_nonlocal\n";
  std::vector<double> ds, e_splice, e_full;
  const Region left = Region::interval(-1.0, 0.0);
  const Region right = Region::interval(0.0, 1.0);
  for (const double delta : deltas) {
    const KernelSpec kernel = makeKernel(KernelFamily::fractional, 1, s, delta);
    const CoupledProblem p =
        solveCoupledP1(mesh, Region::interval(-1.0, 0.0), kernel, g, load, quad);
    const FullSolution fs =
        solveFullyNonlocal(mesh, kernel, SpaceKind::P1, g, load, quad);
    const double eL = errorNormFE(p.local_space, p.sol.u_L, ref.space, ref.u,
                                  NormKind::L2, left);
    const double eN = errorNormFE(p.nonlocal_space, p.sol.u_N, ref.space, ref.u,
                                  NormKind::L2, right);
    const double es = combineNorms(NormKind::L2, eL, eN);
    const double ef =
        errorNormFE(fs.space, fs.u, ref.space, ref.u, NormKind::L2,
                    Region::interval(-1.0, 1.0));
    FullOperators full;
    full.local_space = loc_all;
    full.nonlocal_space = fs.space;
    full.A_L = A_L_full;
    full.A_N = fs.A;
    json j = coupledStats(p);
    j["experiment"] = "delta_convergence";
    j["delta"] = delta;
    j["l2_splice_vs_local"] = es;
    j["l2_fully_nonlocal_vs_local"] = ef;
    j["alternate_identity"] = alternateIdentity(p, full);
    j["fully_nonlocal"] = fullStats(fs);
    lines.push_back(j);
    csv += formatG(delta) + "," + formatG(es) + "," + formatG(ef) + "\n";
    ds.push_back(delta);
    e_splice.push_back(es);
    e_full.push_back(ef);
  }
  writeText(out + "/delta_convergence.csv", csv);
  if (ds.size() >= 2) {
    const double slope_s = logLogSlope(ds, e_splice);
    const double slope_f = logLogSlope(ds, e_full);
    json j;
    j["experiment"] = "delta_convergence";
    j["slope_splice"] = slope_s;
    j["slope_fully_nonlocal"] = slope_f;
    j["slope_gap"] = std::abs(slope_s - slope_f);
    lines.push_back(j);
    if (std::abs(slope_s - 1.0) > 0.3 || std::abs(slope_s - slope_f) > 0.15)
      res.ok = false;
  }
  res.summary_jsonl = joinLines(lines);
  return res;
}

ExperimentResult runJump1d(Config& cfg, const std::string& out) {
  cfg.validate({"h", "delta", "threads"});
  const double delta = cfg.getDouble("delta", 0.1);
  const double h = cfg.getDouble("h", delta / 4.0);
  const QuadConfig quad = quadFromConfig(cfg);
  const ManufacturedCase c = jump1dCase(delta);

  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "jump_1d";
    j["h"] = h;
    j["delta"] = delta;
    lines.push_back(j);
  }
  const CaseCheck gate = verifyCase(c);
  lines.push_back(checkLine(gate));
  lines.back()["experiment"] = "jump_1d";
  if (!gate.pass) res.ok = false;

  auto mesh = intervalMeshWithCollar(-1.0, 1.0, h, delta);
  const Region omega_L =
      Region::complement(Region::interval(-0.25, 0.25));
  const LoadAssembler load = [delta](const FESpace& space) {
    return jumpLoad1D(space, delta);
  };
  const CoupledProblem p11 =
      solveCoupledP1(mesh, omega_L, c.kernel, c.g, load, quad);
  const P0P1Coupling coupling =
      buildP0P1Coupling(mesh, Region::interval(-0.25, 0.25), delta, {});
  const CoupledProblem p01 = solveCoupled(coupling.partition, coupling.dofs,
                                          c.kernel, c.g, load, quad);
  const FullSolution f1 =
      solveFullyNonlocal(mesh, c.kernel, SpaceKind::P1, c.g, load, quad);
  const FullSolution f0 =
      solveFullyNonlocal(mesh, c.kernel, SpaceKind::P0, c.g, load, quad);
  const FullOperators full = buildFullOperators(mesh, f1.space, f1.A);

  const double l2_p11 = spliceErrorNorm(p11, c.u_exact, NormKind::L2);
  const double l2_p01 = spliceErrorNorm(p01, c.u_exact, NormKind::L2, omega_L);
  const double l2_f1 = fullErrorNorm(f1, c.u_exact, NormKind::L2);
  const double l2_f0 = fullErrorNorm(f0, c.u_exact, NormKind::L2);
  {
    json j = coupledStats(p11);
    j["experiment"] = "jump_1d";
    j["case"] = "splice_p1p1";
    j["l2_error"] = l2_p11;
    j["l2_error_fully_nonlocal"] = l2_f1;
    j["l2_ratio_vs_fully_nonlocal"] = l2_p11 / std::max(l2_f1, 1e-300);
    j["alternate_identity"] = alternateIdentity(p11, full);
    if (j["l2_ratio_vs_fully_nonlocal"].get<double>() > 2.0) res.ok = false;
    lines.push_back(j);
  }
  {
    json j = coupledStats(p01);
    j["experiment"] = "jump_1d";
    j["case"] = "splice_p0p1";
    j["l2_error"] = l2_p01;
    j["l2_error_fully_nonlocal"] = l2_f0;
    j["l2_ratio_vs_fully_nonlocal"] = l2_p01 / std::max(l2_f0, 1e-300);
    j["alternate_identity"] = nullptr;
    if (j["l2_ratio_vs_fully_nonlocal"].get<double>() > 2.0) res.ok = false;
    lines.push_back(j);
  }
  {
    json j = fullStats(f1);
    j["experiment"] = "jump_1d";
    j["case"] = "fully_nonlocal_p1";
    j["l2_error"] = l2_f1;
    lines.push_back(j);
    json k = fullStats(f0);
    k["experiment"] = "jump_1d";
    k["case"] = "fully_nonlocal_p0";
    k["l2_error"] = l2_f0;
    lines.push_back(k);
  }
  writeSolutionCsv(out + "/jump_1d_p1p1_solution.csv", p11, c.u_exact);
  writeSolutionCsv(out + "/jump_1d_p0p1_solution.csv", p01, c.u_exact);
  writeFullSolutionCsv(out + "/jump_1d_fully_nonlocal_p1_solution.csv", f1,
                       c.u_exact);
  writeFullSolutionCsv(out + "/jump_1d_fully_nonlocal_p0_solution.csv", f0,
                       c.u_exact);
  res.summary_jsonl = joinLines(lines);
  return res;
}

ExperimentResult runCylinder2d(Config& cfg, const std::string& out) {
  cfg.validate({"h", "delta", "r_star", "windows", "run_gate", "threads"});
  const double h = cfg.getDouble("h", 0.05);
  const double delta = cfg.getDouble("delta", 0.25);
  const double r_star = cfg.getDouble("r_star", 0.2);
  const std::vector<double> windows =
      cfg.getDoubleList("windows", {0.2, 0.3, 0.4, 0.45});
  const bool run_gate = cfg.getBool("run_gate", true);
  const QuadConfig quad = quadFromConfig(cfg);
  const ManufacturedCase c = cylinder2dCase(Vec2(0.0, 0.0), r_star, delta);

  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "cylinder_2d_windows";
    j["h"] = h;
    j["delta"] = delta;
    j["r_star"] = r_star;
    lines.push_back(j);
  }
  if (run_gate) {
    const CaseCheck gate = verifyCase(c);
    lines.push_back(checkLine(gate));
    lines.back()["experiment"] = "cylinder_2d_windows";
    if (!gate.pass) res.ok = false;
  }

  auto mesh = squareMeshWithCollar(-1.0, 1.0, h, delta);
  const LoadAssembler load = fieldLoad(c.f, 6);
  const FullSolution fs =
      solveFullyNonlocal(mesh, c.kernel, SpaceKind::P1, c.g, load, quad);
  const double l2_full = fullErrorNorm(fs, c.u_exact, NormKind::L2);
  const FullOperators full = buildFullOperators(mesh, fs.space, fs.A);
  {
    json j = fullStats(fs);
    j["experiment"] = "cylinder_2d_windows";
    j["case"] = "fully_nonlocal";
    j["l2_error"] = l2_full;
    lines.push_back(j);
  }
  std::string csv = "window_halfwidth,l2_error,n_unknowns,residual_rel\n";
  std::vector<double> halfwidths, l2s;
  for (const double a : windows) {
    const Region omega_L =
        Region::complement(Region::box(Vec2(-a, -a), Vec2(a, a)));
    const CoupledProblem p =
        solveCoupledP1(mesh, omega_L, c.kernel, c.g, load, quad);
    const double l2 = spliceErrorNorm(p, c.u_exact, NormKind::L2);
    json j = coupledStats(p);
    j["experiment"] = "cylinder_2d_windows";
    j["case"] = "window";
    j["window_halfwidth"] = a;
    j["l2_error"] = l2;
    j["l2_ratio_vs_fully_nonlocal"] = l2 / std::max(l2_full, 1e-300);
    j["alternate_identity"] = alternateIdentity(p, full);
    lines.push_back(j);
    csv += formatG(a) + "," + formatG(l2) + "," +
           formatG(double(p.sys.A_S.rows())) + "," +
           formatG(p.sol.residual_rel) + "\n";
    halfwidths.push_back(a);
    l2s.push_back(l2);
    writeSolutionCsv(out + "/cylinder_window_" + formatG(a) + "_solution.csv",
                     p, c.u_exact);
  }
  csv += std::string("inf,") + formatG(l2_full) + "," +
         formatG(double(fs.space.numDofs())) + "," + formatG(fs.residual_rel) +
         "\n";
  writeText(out + "/cylinder_windows.csv", csv);
  auto l2At = [&](double a) -> double {
    for (std::size_t i = 0; i < halfwidths.size(); ++i)
      if (std::abs(halfwidths[i] - a) < 1e-12) return l2s[i];
    return -1.0;
  };
  {
    json j;
    j["experiment"] = "cylinder_2d_windows";
    j["l2_fully_nonlocal"] = l2_full;
    const double e02 = l2At(0.2), e04 = l2At(0.4), e045 = l2At(0.45);
    if (e02 > 0 && e04 > 0) {
      j["decay_ratio_a04_vs_a02"] = e04 / e02;
      if (e04 > 0.25 * e02) res.ok = false;
    }
    if (e045 > 0) {
      j["plateau_ratio_a045_vs_full"] = e045 / l2_full;
      const double r = e045 / l2_full;
      if (r < 0.5 || r > 2.0) res.ok = false;
    }
    lines.push_back(j);
  }
  res.summary_jsonl = joinLines(lines);
  return res;
}

ExperimentResult runHeat2d(Config& cfg, const std::string& out) {
  cfg.validate({"h", "dt", "t_end", "diffusivity", "delta", "window_halfwidth",
                "boundary_layer_width", "strategies", "refine", "decay",
                "write_snapshots", "threads"});
  const double h = cfg.getDouble("h", 2.0 / 24.0);
  TimeConfig base;
  base.dt = cfg.getDouble("dt", 0.1);
  base.t_end = cfg.getDouble("t_end", 10.0);
  base.diffusivity = cfg.getDouble("diffusivity", 0.1);
  base.window_halfwidth = cfg.getDouble("window_halfwidth", 0.3);
  base.boundary_layer_width = cfg.getDouble("boundary_layer_width", 0.2);
  const double delta = cfg.getDouble("delta", 0.2);
  const std::vector<std::string> strategies = splitCsvNames(cfg.getString(
      "strategies",
      "fully_nonlocal,moving,moving_with_boundary_layer,fixed_annulus"));
  const int refine = cfg.getInt("refine", 2);
  const bool decay = cfg.getBool("decay", true);
  const bool write_snapshots = cfg.getBool("write_snapshots", false);
  const QuadConfig quad = quadFromConfig(cfg);
  const KernelSpec kernel = makeConstantKernel(2, delta);

  auto coarse = squareMeshWithCollar(-1.0, 1.0, h, delta);
  auto fine = squareMeshWithCollar(-1.0, 1.0, h / refine, delta);

  ExperimentResult res;
  std::vector<json> lines;
  {
    json j;
    j["experiment"] = "heat_2d";
    j["h"] = h;
    j["dt"] = base.dt;
    j["t_end"] = base.t_end;
    j["diffusivity"] = base.diffusivity;
    j["delta"] = delta;
    j["refine"] = refine;
    j["reference"] = "fully_nonlocal_refined";
    lines.push_back(j);
  }
  Timer tref;
  TimeConfig ref_cfg = base;
  ref_cfg.strategy = WindowStrategy::fully_nonlocal;
  const HeatTrace ref = runHeat(fine, kernel, ref_cfg, quad);
  {
    json j;
    j["experiment"] = "heat_2d";
    j["case"] = "reference";
    j["n_dofs"] = ref.space.numDofs();
    j["steps"] = ref.times.size();
    j["seconds"] = tref.stop();
    lines.push_back(j);
  }

  const std::vector<double> key_times = {2.0, 4.0, 6.0, 8.0, 10.0};
  for (const std::string& name : strategies) {
    TimeConfig tc = base;
    tc.strategy = windowStrategyFromName(name);
    Timer t;
    const HeatTrace trace = runHeat(coarse, kernel, tc, quad);
    const double run_seconds = t.stop();
    require(trace.times.size() == ref.times.size(),
            "heat_2d: reference and strategy step counts differ");
    std::string csv = "t,l2_error,l1_error\n";
    std::string wcsv = "t,x0,y0,x1,y1\n";
    json errors_at = json::object();
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
      const double l2 =
          errorNormFE(trace.space, trace.snapshots[i], ref.space,
                      ref.snapshots[i], NormKind::L2);
      const double l1 =
          errorNormFE(trace.space, trace.snapshots[i], ref.space,
                      ref.snapshots[i], NormKind::L1);
      csv += formatG(trace.times[i]) + "," + formatG(l2) + "," + formatG(l1) +
             "\n";
      const auto& wb = trace.window_box[i];
      wcsv += formatG(trace.times[i]) + "," + formatG(wb[0]) + "," +
              formatG(wb[1]) + "," + formatG(wb[2]) + "," + formatG(wb[3]) +
              "\n";
      for (const double kt : key_times) {
        if (std::abs(trace.times[i] - kt) < 1e-9)
          errors_at[formatG(kt)] = json{{"l2", l2}, {"l1", l1}};
      }
      if (write_snapshots &&
          std::abs(trace.times[i] / 2.0 - std::round(trace.times[i] / 2.0)) <
              1e-9) {
        std::string scsv = "x,y,value\n";
        for (Index d = 0; d < trace.space.numDofs(); ++d) {
          const Vec2& pnt = trace.space.dof_coords[std::size_t(d)];
          scsv += formatG(pnt.x) + "," + formatG(pnt.y) + "," +
                  formatG(trace.snapshots[i][d]) + "\n";
        }
        writeText(out + "/heat_" + name + "_t" + formatG(trace.times[i]) +
                      ".csv",
                  scsv);
      }
    }
    writeText(out + "/heat_error_trace_" + name + ".csv", csv);
    writeText(out + "/heat_window_" + name + ".csv", wcsv);
    json j;
    j["experiment"] = "heat_2d";
    j["case"] = name;
    j["n_dofs"] = trace.space.numDofs();
    j["errors_at"] = errors_at;
    j["seconds"] = run_seconds;
    lines.push_back(j);
  }

  // The window step matrix equals the row-wise spliced matrix: checked once
  // for the moving window at the first implicit time.
  {
    TimeConfig tc = base;
    tc.strategy = WindowStrategy::moving;
    PartitionOptions popts;
    popts.snap = true;
    const DomainPartition part = buildDomainPartition(
        coarse, localRegionAt(tc, base.dt), delta, popts);
    const DofPartition dofs = classifyDofs(part, SpaceKind::P1);
    const FESpace Sl = makeLocalSpace(part, dofs);
    const FESpace Sn = makeNonlocalSpace(part, dofs);
    const LocalBlocks lb =
        eliminateLocalBc(assembleStiffness(Sl),
                         Eigen::VectorXd::Zero(Sl.numDofs()), dofs, zeroField());
    const NonlocalBlocks nb = eliminateVolumeCondition(
        assembleNonlocalStiffness(Sn, kernel, quad),
        Eigen::VectorXd::Zero(Sn.numDofs()), dofs, zeroField());
    const SpliceSystem sys = assembleSplice(lb, nb, dofs);
    const FESpace nl_all = buildSpace(coarse, SpaceKind::P1, allElems(*coarse));
    const FullOperators full = buildFullOperators(
        coarse, nl_all, assembleNonlocalStiffness(nl_all, kernel, quad));
    const SparseOperator alt = assembleSpliceAlternate(full, part, dofs);
    const SpMat diff = sys.A_S.mat - alt.mat;
    json j;
    j["experiment"] = "heat_2d";
    j["check"] = "window_step_matrix_identity";
    j["alternate_identity"] = maxAbsEntry(diff);
    lines.push_back(j);
    if (maxAbsEntry(diff) > 1e-12) res.ok = false;
  }

  if (decay) {
    TimeConfig tc = base;
    tc.strategy = WindowStrategy::fully_nonlocal;
    tc.with_forcing = false;
    const HeatTrace trace = runHeat(coarse, kernel, tc, quad);
    const SpMat M = assembleMass(trace.space, false).mat;
    auto energy = [&](const Eigen::VectorXd& u) {
      return 0.5 * u.dot(M * u);
    };
    std::string csv = "t,l2_norm,energy\n";
    const ScalarField zero = zeroField();
    double prev = energy(trace.initial);
    csv += std::string("0,") +
           formatG(errorNorm(trace.space, trace.initial, zero, NormKind::L2)) +
           "," + formatG(prev) + "\n";
    bool monotone = true;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
      const double e = energy(trace.snapshots[i]);
      if (e > prev * (1.0 + 1e-12)) monotone = false;
      prev = e;
      csv += formatG(trace.times[i]) + "," +
             formatG(errorNorm(trace.space, trace.snapshots[i], zero,
                               NormKind::L2)) +
             "," + formatG(e) + "\n";
    }
    writeText(out + "/heat_decay.csv", csv);
    json j;
    j["experiment"] = "heat_2d";
    j["case"] = "free_decay";
    j["energy_monotone"] = monotone;
    lines.push_back(j);
    if (!monotone) res.ok = false;
  }
  res.summary_jsonl = joinLines(lines);
  return res;
}

ExperimentResult runVerifyCases(Config& cfg, const std::string& out) {
  cfg.validate({"include_monte_carlo", "jump_delta", "cylinder_delta",
                "cylinder_r", "threads"});
  const bool include_mc = cfg.getBool("include_monte_carlo", true);
  const double jump_delta = cfg.getDouble("jump_delta", 0.1);
  const double cyl_delta = cfg.getDouble("cylinder_delta", 0.25);
  const double cyl_r = cfg.getDouble("cylinder_r", 0.2);

  std::vector<ManufacturedCase> cases = {
      patchLinear1dCase(), patchQuadratic1dCase(),
      patchQuadratic1dLowOrderCase(), patch2dCase(), jump1dCase(jump_delta)};
  if (include_mc)
    cases.push_back(cylinder2dCase(Vec2(0.0, 0.0), cyl_r, cyl_delta));

  ExperimentResult res;
  std::vector<json> lines;
  std::string csv = "case,samples,max_rel_err,tol,pass\n";
  for (const ManufacturedCase& c : cases) {
    Timer t;
    const CaseCheck check = verifyCase(c);
    json j = checkLine(check);
    j["experiment"] = "verify_cases";
    j["tol"] = c.oracle_rel_tol;
    j["monte_carlo"] = c.monte_carlo_oracle;
    j["seconds"] = t.stop();
    lines.push_back(j);
    csv += check.name + "," + std::to_string(check.samples) + "," +
           formatG(check.max_rel_err) + "," + formatG(c.oracle_rel_tol) + "," +
           (check.pass ? "1" : "0") + "\n";
    if (!check.pass) res.ok = false;
  }
  writeText(out + "/verify_cases.csv", csv);
  res.summary_jsonl = joinLines(lines);
  return res;
}

std::string spyPattern(const SpMat& mat, int max_cells) {
  const Index rows = mat.rows(), cols = mat.cols();
  const int gr = static_cast<int>(std::min<Index>(rows, max_cells));
  const int gc = static_cast<int>(std::min<Index>(cols, max_cells));
  if (gr == 0 || gc == 0) return "";
  std::vector<int> counts(std::size_t(gr) * std::size_t(gc), 0);
  for (int k = 0; k < mat.outerSize(); ++k) {
    for (SpMat::InnerIterator it(mat, k); it; ++it) {
      if (it.value() == 0.0) continue;
      const int r = static_cast<int>(it.row() * gr / rows);
      const int c = static_cast<int>(it.col() * gc / cols);
      counts[std::size_t(r) * std::size_t(gc) + std::size_t(c)]++;
    }
  }
  std::string text;
  for (int r = 0; r < gr; ++r) {
    for (int c = 0; c < gc; ++c)
      text += counts[std::size_t(r) * std::size_t(gc) + std::size_t(c)] ? '*'
                                                                        : '.';
    text += '\n';
  }
  return text;
}

ExperimentResult runDumpMatrix(Config& cfg, const std::string& out) {
  cfg.validate({"dim", "h", "delta", "s", "operator", "split", "spy",
                "threads"});
  const int dim = cfg.getInt("dim", 1);
  require(dim == 1 || dim == 2, "dump_matrix: dim must be 1 or 2");
  const double h = cfg.getDouble("h", dim == 1 ? 0.05 : 2.0 / 24.0);
  const double delta = cfg.getDouble("delta", dim == 1 ? 0.1 : 0.2);
  const double s = cfg.getDouble("s", dim == 1 ? 0.75 : 0.25);
  const std::string op_name = cfg.getString("operator", "splice");
  const std::string split = cfg.getString("split", "left_right");
  const bool spy = cfg.getBool("spy", false);
  const QuadConfig quad = quadFromConfig(cfg);
  const KernelSpec kernel = makeKernel(KernelFamily::fractional, dim, s, delta);

  std::shared_ptr<const Mesh> mesh =
      dim == 1 ? intervalMeshWithCollar(-1.0, 1.0, h, delta)
               : squareMeshWithCollar(-1.0, 1.0, h, delta);
  SparseOperator op;
  if (op_name == "splice") {
    const ManufacturedCase c =
        dim == 1 ? withKernel(patchLinear1dCase(), kernel)
                 : withKernel(patch2dCase(), kernel);
    const Region omega_L = dim == 1 ? Region::interval(-1.0, 0.0)
                                    : patch2dLocalRegion(split);
    const CoupledProblem p =
        solveCoupledP1(mesh, omega_L, kernel, c.g, fieldLoad(c.f), quad);
    op = p.sys.A_S;
  } else if (op_name == "local_stiffness") {
    op = assembleStiffness(buildSpace(mesh, SpaceKind::P1, interiorElems(*mesh)));
  } else if (op_name == "nonlocal_stiffness") {
    op = assembleNonlocalStiffness(
        buildSpace(mesh, SpaceKind::P1, allElems(*mesh)), kernel, quad);
  } else if (op_name == "mass") {
    op = assembleMass(buildSpace(mesh, SpaceKind::P1, interiorElems(*mesh)));
  } else {
    fail("dump_matrix: unknown operator " + op_name +
         " (use splice, local_stiffness, nonlocal_stiffness, or mass)");
  }
  const std::string path = out + "/" + op_name + ".mtx";
  writeMatrixMarketFile(op, path);
  if (spy) writeText(out + "/" + op_name + "_spy.txt", spyPattern(op.mat, 64));

  ExperimentResult res;
  json j;
  j["experiment"] = "dump_matrix";
  j["operator"] = op_name;
  j["rows"] = op.rows();
  j["cols"] = op.cols();
  j["nnz"] = op.mat.nonZeros();
  j["path"] = path;
  res.summary_jsonl = joinLines({j});
  return res;
}

using Runner = ExperimentResult (*)(Config&, const std::string&);

const std::vector<std::pair<std::string, Runner>>& runnerTable() {
  static const std::vector<std::pair<std::string, Runner>> table = {
      {"patch_1d", &runPatch1d},
      {"patch_1d_p0p1", &runPatch1dP0P1},
      {"patch_2d", &runPatch2d},
      {"opt_compare", &runOptCompare},
      {"delta_convergence", &runDeltaConvergence},
      {"jump_1d", &runJump1d},
      {"cylinder_2d_windows", &runCylinder2d},
      {"heat_2d", &runHeat2d},
      {"verify_cases", &runVerifyCases},
      {"dump_matrix", &runDumpMatrix},
  };
  return table;
}

}  // namespace

ExperimentResult runExperiment(const std::string& name, Config& config,
                               const std::string& out_dir) {
  for (const auto& [n, fn] : runnerTable()) {
    if (n != name) continue;
    std::filesystem::create_directories(out_dir);
    ExperimentResult res = fn(config, out_dir);
    res.name = name;
    writeText(out_dir + "/summary.jsonl", res.summary_jsonl);
    writeText(out_dir + "/resolved_config.txt", config.resolvedText());
    return res;
  }
  std::string known;
  for (const auto& [n, fn] : runnerTable()) {
    (void)fn;
    known += known.empty() ? n : ", " + n;
  }
  fail("unknown experiment: " + name + " (known: " + known + ")");
}

const std::vector<std::string>& experimentNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [n, fn] : runnerTable()) {
      (void)fn;
      out.push_back(n);
    }
    return out;
  }();
  return names;
}

}  // namespace ltn
