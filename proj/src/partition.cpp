#include "ltn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace ltn {

namespace {

double pointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double l2 = ab.squaredNorm();
  if (l2 == 0.0) return dist(p, a);
  double t = (p - a).dot(ab) / l2;
  t = std::clamp(t, 0.0, 1.0);
  return dist(p, a + ab * t);
}

// Closed line segments bounding the closure of element k (the element itself
// in 1D, its three edges in 2D).
std::vector<std::pair<Vec2, Vec2>> elementSegments(const Mesh& mesh, Index k) {
  const auto& e = mesh.elems[static_cast<std::size_t>(k)];
  const auto& v = mesh.vertices;
  if (mesh.dim == 1) {
    return {{v[static_cast<std::size_t>(e[0])], v[static_cast<std::size_t>(e[1])]}};
  }
  return {{v[static_cast<std::size_t>(e[0])], v[static_cast<std::size_t>(e[1])]},
          {v[static_cast<std::size_t>(e[1])], v[static_cast<std::size_t>(e[2])]},
          {v[static_cast<std::size_t>(e[2])], v[static_cast<std::size_t>(e[0])]}};
}

std::vector<Index> sortedVector(const std::set<Index>& s) {
  return std::vector<Index>(s.begin(), s.end());
}

}  // namespace

double segmentDistance(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                       const Vec2& b1) {
  const Vec2 da = a1 - a0, db = b1 - b0;
  if (da.squaredNorm() > 0.0 && db.squaredNorm() > 0.0) {
    const double d1 = da.cross(b0 - a0);
    const double d2 = da.cross(b1 - a0);
    const double d3 = db.cross(a0 - b0);
    const double d4 = db.cross(a1 - b0);
    if (((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
        ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))) {
      return 0.0;  // proper crossing
    }
  }
  double d = pointSegmentDistance(a0, b0, b1);
  d = std::min(d, pointSegmentDistance(a1, b0, b1));
  d = std::min(d, pointSegmentDistance(b0, a0, a1));
  d = std::min(d, pointSegmentDistance(b1, a0, a1));
  return d;
}

std::vector<FacetKey> domainBoundaryFacets(const Mesh& mesh) {
  std::vector<FacetKey> out;
  for (const auto& [facet, adj] : buildFacetToElems(mesh)) {
    int interior = 0;
    for (Index k : adj) {
      if (!mesh.isExterior(k)) ++interior;
    }
    if (interior == 1 && (adj.size() == 1 || interior < static_cast<int>(adj.size()))) {
      out.push_back(facet);
    }
  }
  return out;
}

DomainPartition buildDomainPartition(std::shared_ptr<const Mesh> mesh,
                                     const Region& omega_L, double delta,
                                     const PartitionOptions& opts) {
  require(mesh != nullptr, "buildDomainPartition: null mesh");
  require(std::isfinite(delta) && delta > 0.0,
          "buildDomainPartition: horizon must be positive");
  const Mesh& m = *mesh;
  DomainPartition part;
  part.mesh = mesh;
  part.local_mesh = mesh;
  part.delta = delta;

  auto classifyElem = [&](Index k) {
    const auto& e = m.elems[static_cast<std::size_t>(k)];
    const auto& v = m.vertices;
    if (m.dim == 1) {
      return omega_L.classifyInterval(v[static_cast<std::size_t>(e[0])].x,
                                      v[static_cast<std::size_t>(e[1])].x,
                                      opts.class_tol);
    }
    return omega_L.classifyTriangle(v[static_cast<std::size_t>(e[0])],
                                    v[static_cast<std::size_t>(e[1])],
                                    v[static_cast<std::size_t>(e[2])],
                                    opts.class_tol);
  };

  std::set<Index> core;
  for (Index k = 0; k < m.numElements(); ++k) {
    if (m.isExterior(k)) continue;
    const RegionClass c = classifyElem(k);
    if (c == RegionClass::cut && !opts.snap) {
      fail("buildDomainPartition: local-region boundary cuts an element "
           "interior (use snap mode for non-aligned regions)");
    }
    if (c != RegionClass::inside) core.insert(k);  // outside, or cut in snap mode
  }

  const auto vertexToElems = buildVertexToElems(m);
  std::set<Index> nset;
  if (core.empty()) {
    part.degenerate_coupling = true;
    // No nonlocal region requested: keep a single boundary-adjacent layer.
    std::set<Index> bdryVerts;
    for (const auto& [a, b] : domainBoundaryFacets(m)) {
      bdryVerts.insert(a);
      if (b >= 0) bdryVerts.insert(b);
    }
    for (Index k = 0; k < m.numElements(); ++k) {
      if (m.isExterior(k)) continue;
      const auto& e = m.elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < m.vertsPerElem(); ++i) {
        if (bdryVerts.count(e[static_cast<std::size_t>(i)])) {
          nset.insert(k);
          break;
        }
      }
    }
    require(!nset.empty(), "buildDomainPartition: empty boundary layer");
  } else {
    // Core plus every domain element sharing a vertex with it.
    std::set<Index> coreVerts;
    for (Index k : core) {
      const auto& e = m.elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < m.vertsPerElem(); ++i) {
        coreVerts.insert(e[static_cast<std::size_t>(i)]);
      }
    }
    for (Index k = 0; k < m.numElements(); ++k) {
      if (m.isExterior(k)) continue;
      const auto& e = m.elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < m.vertsPerElem(); ++i) {
        if (coreVerts.count(e[static_cast<std::size_t>(i)])) {
          nset.insert(k);
          break;
        }
      }
    }
  }

  part.core_elems = sortedVector(core);
  part.elems_N = sortedVector(nset);
  for (Index k = 0; k < m.numElements(); ++k) {
    if (!m.isExterior(k) && !core.count(k)) part.elems_L.push_back(k);
  }
  require(!part.elems_L.empty(), "buildDomainPartition: empty local region");

  const auto facetToElems = buildFacetToElems(m);
  for (const auto& [facet, adj] : facetToElems) {
    if (adj.size() != 2) continue;
    if (m.isExterior(adj[0]) || m.isExterior(adj[1])) continue;
    const bool c0 = core.count(adj[0]) > 0, c1 = core.count(adj[1]) > 0;
    if (c0 != c1) part.gamma_facets.push_back(facet);
  }
  for (const auto& facet : domainBoundaryFacets(m)) {
    const auto& adj = facetToElems.at(facet);
    Index inner = -1;
    for (Index k : adj) {
      if (!m.isExterior(k)) inner = k;
    }
    if (inner >= 0 && !core.count(inner)) part.gamma_given_facets.push_back(facet);
  }

  // Interaction collars: distance from the element closure to the closure of
  // the nonlocal region, computed against the region's boundary facets.
  std::vector<std::pair<Vec2, Vec2>> nBoundary;
  for (const auto& [facet, adj] : facetToElems) {
    int inN = 0;
    for (Index k : adj) {
      if (nset.count(k)) ++inN;
    }
    if (inN != 1) continue;
    const Vec2& p = m.vertices[static_cast<std::size_t>(facet.first)];
    const Vec2 q = facet.second >= 0
                       ? m.vertices[static_cast<std::size_t>(facet.second)]
                       : p;
    nBoundary.push_back({p, q});
  }
  require(!nBoundary.empty(), "buildDomainPartition: nonlocal region has no boundary");
  const double cutoff = delta * (1.0 - 1e-12);
  for (Index k = 0; k < m.numElements(); ++k) {
    if (nset.count(k)) continue;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& seg : elementSegments(m, k)) {
      for (const auto& bs : nBoundary) {
        d = std::min(d, segmentDistance(seg.first, seg.second, bs.first, bs.second));
        if (d == 0.0) break;
      }
      if (d == 0.0) break;
    }
    if (d < cutoff) {
      (m.isExterior(k) ? part.elems_gI : part.elems_NI).push_back(k);
    }
  }
  return part;
}

namespace {

std::set<Index> facetVertices(const std::vector<FacetKey>& facets) {
  std::set<Index> out;
  for (const auto& [a, b] : facets) {
    out.insert(a);
    if (b >= 0) out.insert(b);
  }
  return out;
}

// Sorts DOF ids by lexicographic coordinate order and applies the same
// permutation to a parallel payload array (if present).
void sortByCoord(const std::vector<Vec2>& coords, std::vector<Index>& ids,
                 std::vector<Index>* payload = nullptr) {
  std::vector<std::size_t> perm(ids.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return lexLess(coords[static_cast<std::size_t>(ids[a])],
                   coords[static_cast<std::size_t>(ids[b])]);
  });
  std::vector<Index> sortedIds(ids.size());
  for (std::size_t i = 0; i < perm.size(); ++i) sortedIds[i] = ids[perm[i]];
  ids = std::move(sortedIds);
  if (payload) {
    require(payload->size() == perm.size(), "sortByCoord: payload size mismatch");
    std::vector<Index> sortedPayload(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      sortedPayload[i] = (*payload)[perm[i]];
    }
    *payload = std::move(sortedPayload);
  }
}

}  // namespace

DofPartition classifyDofs(const DomainPartition& partition,
                          SpaceKind nonlocal_kind) {
  require(partition.mesh && partition.local_mesh, "classifyDofs: null meshes");
  require(nonlocal_kind == SpaceKind::P0 || partition.local_mesh == partition.mesh,
          "classifyDofs: P1 nonlocal space requires the shared parent mesh");
  const Mesh& nm = *partition.mesh;
  const Mesh& lm = *partition.local_mesh;
  DofPartition dofs;
  dofs.nonlocal_kind = nonlocal_kind;

  // --- Local P1 space: vertices of the local element set. ---
  {
    std::set<Index> lverts;
    for (Index k : partition.elems_L) {
      const auto& e = lm.elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < lm.vertsPerElem(); ++i) {
        lverts.insert(e[static_cast<std::size_t>(i)]);
      }
    }
    const std::set<Index> onGamma = facetVertices(partition.gamma_facets);
    const std::set<Index> onGammaGiven = facetVertices(partition.gamma_given_facets);
    std::set<Index> onDomBdry;
    if (partition.local_mesh == partition.mesh) {
      onDomBdry = facetVertices(domainBoundaryFacets(lm));
    }
    for (Index v : lverts) {
      const Index dof = static_cast<Index>(dofs.local_coords.size());
      dofs.local_coords.push_back(lm.vertices[static_cast<std::size_t>(v)]);
      dofs.local_vertex.push_back(v);
      if (onGammaGiven.count(v) || onDomBdry.count(v)) {
        dofs.I_GammaGiven.push_back(dof);
      } else if (onGamma.count(v)) {
        dofs.I_Gamma.push_back(dof);
      } else {
        dofs.I_L.push_back(dof);
      }
    }
  }

  // --- Nonlocal space over the collar-extended nonlocal element set. ---
  std::vector<Index> nElemsAll;
  nElemsAll.insert(nElemsAll.end(), partition.elems_N.begin(), partition.elems_N.end());
  nElemsAll.insert(nElemsAll.end(), partition.elems_NI.begin(), partition.elems_NI.end());
  nElemsAll.insert(nElemsAll.end(), partition.elems_gI.begin(), partition.elems_gI.end());
  std::sort(nElemsAll.begin(), nElemsAll.end());
  if (nonlocal_kind == SpaceKind::P0) {
    const std::set<Index> inN(partition.elems_N.begin(), partition.elems_N.end());
    const std::set<Index> inNI(partition.elems_NI.begin(), partition.elems_NI.end());
    for (Index k : nElemsAll) {
      const Index dof = static_cast<Index>(dofs.nonlocal_coords.size());
      dofs.nonlocal_coords.push_back(nm.elemCentroid(k));
      dofs.nonlocal_entity.push_back(k);
      if (inN.count(k)) {
        dofs.I_N.push_back(dof);
      } else if (inNI.count(k)) {
        dofs.I_NI.push_back(dof);
      } else {
        dofs.I_gI.push_back(dof);
      }
    }
  } else {
    const std::set<Index> inN(partition.elems_N.begin(), partition.elems_N.end());
    // Boundary facets of the nonlocal-region element union.
    std::vector<FacetKey> nBdryFacets;
    for (const auto& [facet, adj] : buildFacetToElems(nm)) {
      int cnt = 0;
      for (Index k : adj) {
        if (inN.count(k)) ++cnt;
      }
      if (cnt == 1) nBdryFacets.push_back(facet);
    }
    const std::set<Index> onNBdry = facetVertices(nBdryFacets);
    const std::set<Index> onDomBdry = facetVertices(domainBoundaryFacets(nm));
    std::set<Index> inNVerts;  // vertices incident to the nonlocal element set
    for (Index k : partition.elems_N) {
      const auto& e = nm.elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < nm.vertsPerElem(); ++i) {
        inNVerts.insert(e[static_cast<std::size_t>(i)]);
      }
    }
    std::set<Index> hasInteriorElem;  // vertices incident to a domain element
    for (Index k = 0; k < nm.numElements(); ++k) {
      if (nm.isExterior(k)) continue;
      const auto& e = nm.elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < nm.vertsPerElem(); ++i) {
        hasInteriorElem.insert(e[static_cast<std::size_t>(i)]);
      }
    }
    std::set<Index> nverts;
    for (Index k : nElemsAll) {
      const auto& e = nm.elems[static_cast<std::size_t>(k)];
      for (int i = 0; i < nm.vertsPerElem(); ++i) {
        nverts.insert(e[static_cast<std::size_t>(i)]);
      }
    }
    for (Index v : nverts) {
      const Index dof = static_cast<Index>(dofs.nonlocal_coords.size());
      dofs.nonlocal_coords.push_back(nm.vertices[static_cast<std::size_t>(v)]);
      dofs.nonlocal_entity.push_back(v);
      if (inNVerts.count(v) && !onNBdry.count(v)) {
        dofs.I_N.push_back(dof);  // interior to the nonlocal region
      } else if (hasInteriorElem.count(v) && !onDomBdry.count(v)) {
        dofs.I_NI.push_back(dof);  // inside the domain: interface data
      } else {
        dofs.I_gI.push_back(dof);  // on or beyond the domain boundary: given
      }
    }
  }

  // --- Deterministic coordinate ordering within every set. ---
  sortByCoord(dofs.local_coords, dofs.I_L);
  sortByCoord(dofs.local_coords, dofs.I_Gamma);
  sortByCoord(dofs.local_coords, dofs.I_GammaGiven);
  sortByCoord(dofs.nonlocal_coords, dofs.I_N);
  sortByCoord(dofs.nonlocal_coords, dofs.I_NI);
  sortByCoord(dofs.nonlocal_coords, dofs.I_gI);

  // --- Global ordering: I_L block then I_N block. ---
  const Index nL = static_cast<Index>(dofs.I_L.size());
  const Index nN = static_cast<Index>(dofs.I_N.size());
  dofs.n = nL + nN;
  dofs.local_to_global.assign(dofs.local_coords.size(), -1);
  dofs.nonlocal_to_global.assign(dofs.nonlocal_coords.size(), -1);
  for (Index g = 0; g < nL; ++g) {
    dofs.global_local_dof.push_back(dofs.I_L[static_cast<std::size_t>(g)]);
    dofs.local_to_global[static_cast<std::size_t>(dofs.I_L[static_cast<std::size_t>(g)])] = g;
  }
  for (Index g = 0; g < nN; ++g) {
    dofs.global_nonlocal_dof.push_back(dofs.I_N[static_cast<std::size_t>(g)]);
    dofs.nonlocal_to_global[static_cast<std::size_t>(dofs.I_N[static_cast<std::size_t>(g)])] =
        nL + g;
  }

  // --- Collocation maps by exact coordinate equality. ---
  std::map<std::pair<double, double>, Index> nonlocalByCoord, localByCoord;
  for (std::size_t i = 0; i < dofs.nonlocal_coords.size(); ++i) {
    nonlocalByCoord[{dofs.nonlocal_coords[i].x, dofs.nonlocal_coords[i].y}] =
        static_cast<Index>(i);
  }
  for (std::size_t i = 0; i < dofs.local_coords.size(); ++i) {
    localByCoord[{dofs.local_coords[i].x, dofs.local_coords[i].y}] =
        static_cast<Index>(i);
  }
  std::vector<char> isN(dofs.nonlocal_coords.size(), 0),
      isL(dofs.local_coords.size(), 0);
  for (Index i : dofs.I_N) isN[static_cast<std::size_t>(i)] = 1;
  for (Index i : dofs.I_L) isL[static_cast<std::size_t>(i)] = 1;
  auto coordTag = [](const Vec2& p) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << p.x << ", " << p.y << ")";
    return os.str();
  };
  for (Index i : dofs.I_Gamma) {
    const Vec2& p = dofs.local_coords[static_cast<std::size_t>(i)];
    auto it = nonlocalByCoord.find({p.x, p.y});
    require(it != nonlocalByCoord.end() && isN[static_cast<std::size_t>(it->second)],
            "classifyDofs: interface DOF at " + coordTag(p) +
                " not collocated with a nonlocal unknown");
    dofs.gamma_to_nonlocal.push_back(it->second);
  }
  for (Index i : dofs.I_NI) {
    const Vec2& p = dofs.nonlocal_coords[static_cast<std::size_t>(i)];
    auto it = localByCoord.find({p.x, p.y});
    require(it != localByCoord.end() && isL[static_cast<std::size_t>(it->second)],
            "classifyDofs: interface-collar DOF at " + coordTag(p) +
                " not collocated with a local unknown");
    dofs.ni_to_local.push_back(it->second);
  }

  require(dofs.I_L.size() + dofs.I_Gamma.size() + dofs.I_GammaGiven.size() ==
              dofs.local_coords.size(),
          "classifyDofs: local DOF sets do not partition the space");
  require(dofs.I_N.size() + dofs.I_NI.size() + dofs.I_gI.size() ==
              dofs.nonlocal_coords.size(),
          "classifyDofs: nonlocal DOF sets do not partition the space");
  return dofs;
}

std::string exportDofCsv(const DofPartition& dofs) {
  std::ostringstream os;
  os.precision(17);
  os << "dof_id,x,y,set_label\n";
  auto emit = [&](const std::vector<Index>& ids, const std::vector<Vec2>& coords,
                  const char* label) {
    for (Index i : ids) {
      const Vec2& p = coords[static_cast<std::size_t>(i)];
      os << i << "," << p.x << "," << p.y << "," << label << "\n";
    }
  };
  emit(dofs.I_L, dofs.local_coords, "L");
  emit(dofs.I_Gamma, dofs.local_coords, "Gamma");
  emit(dofs.I_GammaGiven, dofs.local_coords, "GammaGiven");
  emit(dofs.I_N, dofs.nonlocal_coords, "N");
  emit(dofs.I_NI, dofs.nonlocal_coords, "NI");
  emit(dofs.I_gI, dofs.nonlocal_coords, "gI");
  return os.str();
}

}  // namespace ltn
