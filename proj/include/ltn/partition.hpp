// partition.hpp: overlapping decomposition of the computational mesh into a
// local region, a nonlocal region (with one shared element layer), and the
// interaction collars that carry interface / given volume data, plus the
// classification of finite-element DOFs into the six coupling index sets.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ltn/mesh.hpp"
#include "ltn/region.hpp"

namespace ltn {

enum class SpaceKind { P1, P0 };

struct DomainPartition {
  std::shared_ptr<const Mesh> mesh;        // covers the domain plus any exterior collar
  std::shared_ptr<const Mesh> local_mesh;  // == mesh unless a separate local mesh is built
  double delta = 0.0;

  // Element-index sets.  elems_L indexes local_mesh; the others index mesh.
  // elems_L and elems_N overlap by one element layer (unless local_mesh is a
  // separate mesh, where the overlap is realized through collocated DOFs).
  std::vector<Index> core_elems;  // elements of the requested nonlocal region
  std::vector<Index> elems_L;
  std::vector<Index> elems_N;   // core plus one vertex-connected layer
  std::vector<Index> elems_NI;  // interface collar: inside the domain, within
                                // horizon of the nonlocal region, not in elems_N
  std::vector<Index> elems_gI;  // given-data collar: outside the domain, within horizon

  // Interface facets on local_mesh: gamma = inner boundary of the local
  // region (data taken from the nonlocal solution), gamma_given = outer
  // boundary on the domain boundary (given data).
  std::vector<FacetKey> gamma_facets;
  std::vector<FacetKey> gamma_given_facets;

  bool degenerate_coupling = false;  // requested nonlocal region was empty
};

struct PartitionOptions {
  // strict: every domain element must be entirely in or out of the local
  // region (error otherwise).  snap: elements cut by the region boundary are
  // assigned to the nonlocal side (the region grows to element boundaries).
  bool snap = false;
  double class_tol = 1e-12;
};

// Builds the overlapping decomposition for a P1 local region described by
// omega_L (the complement of the requested nonlocal core within the domain).
DomainPartition buildDomainPartition(std::shared_ptr<const Mesh> mesh,
                                     const Region& omega_L, double delta,
                                     const PartitionOptions& opts = {});

struct DofPartition {
  SpaceKind nonlocal_kind = SpaceKind::P1;

  // Local P1 space on local_mesh: DOF id indexes these arrays.
  std::vector<Vec2> local_coords;
  std::vector<Index> local_vertex;  // DOF -> vertex id in local_mesh
  std::vector<Index> I_L, I_Gamma, I_GammaGiven;  // sorted by coordinate

  // Nonlocal space on the collar-extended nonlocal element set: vertices for
  // P1, element centroids for P0.
  std::vector<Vec2> nonlocal_coords;
  std::vector<Index> nonlocal_entity;  // DOF -> vertex id (P1) or element id (P0)
  std::vector<Index> I_N, I_NI, I_gI;  // sorted by coordinate

  // Global unknown ordering: the I_L block (coordinate-sorted) first, then
  // the I_N block; n = |I_L| + |I_N|.
  Index n = 0;
  std::vector<Index> global_local_dof;      // global id -> local DOF (first |I_L|)
  std::vector<Index> global_nonlocal_dof;   // global id - |I_L| -> nonlocal DOF
  std::vector<Index> local_to_global;       // local DOF -> global id or -1
  std::vector<Index> nonlocal_to_global;    // nonlocal DOF -> global id or -1

  // Collocation maps (exact coordinate equality), parallel to the sorted
  // index sets: interface DOFs of one space coincide with DOFs of the other.
  std::vector<Index> gamma_to_nonlocal;  // per I_Gamma entry: nonlocal DOF id
  std::vector<Index> ni_to_local;        // per I_NI entry: local DOF id

  Index numLocalDofs() const { return static_cast<Index>(local_coords.size()); }
  Index numNonlocalDofs() const { return static_cast<Index>(nonlocal_coords.size()); }
};

// Classifies all DOFs of the local P1 space and the nonlocal space into the
// six disjoint sets and fixes the global ordering and collocation maps.
DofPartition classifyDofs(const DomainPartition& partition,
                          SpaceKind nonlocal_kind);

// CSV export (dof_id, x, y, set_label) of both spaces' classified DOFs.
std::string exportDofCsv(const DofPartition& dofs);

// Facets of the domain boundary (between interior and exterior/absent).
std::vector<FacetKey> domainBoundaryFacets(const Mesh& mesh);

// Exact distance between segment closures (degenerate endpoints allowed).
double segmentDistance(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                       const Vec2& b1);

}  // namespace ltn
