// experiments.hpp: the desk-scale experiment suite behind the CLI.  Each
// experiment builds its meshes and couplings from a validated flat
// configuration, writes CSV / MatrixMarket outputs plus a JSON-lines summary
// into an output directory, and returns the summary text.  Reference solves
// (single-model local or nonlocal) and the shared coupling drivers live here
// so tests exercise exactly the code the CLI runs.
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ltn/analytic.hpp"
#include "ltn/config.hpp"
#include "ltn/errors.hpp"
#include "ltn/opt_coupling.hpp"
#include "ltn/p0p1.hpp"
#include "ltn/splice.hpp"
#include "ltn/timestepping.hpp"

namespace ltn {

// Load assembly hook: experiments with singular forcings or closed-form
// element integrals supply their own assembler.
using LoadAssembler = std::function<Eigen::VectorXd(const FESpace&)>;
LoadAssembler fieldLoad(const ScalarField& f, int order = 6);

// Generic FE space over an element subset: one DOF per incident vertex (P1)
// or per listed element (P0), ordered by entity id.
FESpace buildSpace(std::shared_ptr<const Mesh> mesh, SpaceKind kind,
                   const std::vector<Index>& elems);
std::vector<Index> allElems(const Mesh& mesh);
std::vector<Index> interiorElems(const Mesh& mesh);

// A fully assembled and solved spliced coupling.
struct CoupledProblem {
  DomainPartition partition;
  DofPartition dofs;
  FESpace local_space;
  FESpace nonlocal_space;
  LocalBlocks loc;
  NonlocalBlocks nl;
  SpliceSystem sys;
  SpliceSolution sol;
  double assemble_local_seconds = 0.0;
  double assemble_nonlocal_seconds = 0.0;
  double splice_seconds = 0.0;
  double solve_seconds = 0.0;
};

CoupledProblem solveCoupled(const DomainPartition& partition,
                            const DofPartition& dofs, const KernelSpec& kernel,
                            const ScalarField& g, const LoadAssembler& load,
                            const QuadConfig& quad = {});

// Continuous-continuous coupling on a shared parent mesh: builds the domain
// partition for the given local region, classifies P1 DOFs, solves.
CoupledProblem solveCoupledP1(std::shared_ptr<const Mesh> mesh,
                              const Region& omega_L, const KernelSpec& kernel,
                              const ScalarField& g, const LoadAssembler& load,
                              const QuadConfig& quad = {}, bool snap = false);

// Single-model reference solve on the same parent mesh.  For the nonlocal
// model the space spans every element (collar included) and the volume
// condition constrains DOFs on or outside the domain boundary; for the local
// model the space spans the interior elements with boundary data on the trace.
struct FullSolution {
  FESpace space;
  Eigen::VectorXd u;                // data values attached at constrained DOFs
  std::vector<Index> domain_elems;  // elements inside the physical domain
  SparseOperator A;                 // the assembled full operator (reused by
                                    // the alternate splice construction)
  double residual_rel = 0.0;
  double assemble_seconds = 0.0;
  double solve_seconds = 0.0;
};

FullSolution solveFullyNonlocal(std::shared_ptr<const Mesh> mesh,
                                const KernelSpec& kernel, SpaceKind kind,
                                const ScalarField& g, const LoadAssembler& load,
                                const QuadConfig& quad = {});

FullSolution solveFullyLocal(std::shared_ptr<const Mesh> mesh,
                             const ScalarField& g, const LoadAssembler& load);

// Error of the spliced pair against a reference field: local part over the
// local elements clipped to local_region (pass the local-region descriptor
// when the local mesh overhangs the interface, e.g. the non-matching pair),
// nonlocal part over the core elements; the two pieces tile the domain.
double spliceErrorNorm(const CoupledProblem& p, const ScalarField& ref,
                       NormKind norm, const Region& local_region = Region::all(),
                       int order = 6);
double fullErrorNorm(const FullSolution& s, const ScalarField& ref,
                     NormKind norm, int order = 6);

// Entrywise deviation between the row-wise spliced matrix and the alternate
// (row relabeling of full-domain operators) construction.
double alternateIdentity(const CoupledProblem& p, const FullOperators& full);

// Structured meshes whose exterior collar is at least delta wide.
std::shared_ptr<const Mesh> intervalMeshWithCollar(double a, double b, double h,
                                                   double delta);
std::shared_ptr<const Mesh> squareMeshWithCollar(double a, double b, double h,
                                                 double delta);

// Slope of the least-squares line through (log10 x_i, log10 y_i).
double logLogSlope(const std::vector<double>& x, const std::vector<double>& y);

struct ExperimentResult {
  std::string name;
  bool ok = true;             // every in-run gate / sanity check passed
  std::string summary_jsonl;  // one JSON object per line
};

// Runs a named experiment.  Unknown config keys fail; the resolved
// configuration (explicit plus defaulted keys) and all outputs are written
// under out_dir.
ExperimentResult runExperiment(const std::string& name, Config& config,
                               const std::string& out_dir);
const std::vector<std::string>& experimentNames();

}  // namespace ltn
