// p0p1.cpp: non-matching discretization pair.  The parent mesh carries the
// piecewise-constant nonlocal space; the continuous local mesh is rebuilt
// from scratch on the prescribed vertex set (element centroids in and
// adjacent to the local region, plus retained domain-boundary vertices) so
// that every interface DOF of one space is collocated with a DOF of the
// other.
#include "ltn/p0p1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "ltn/fe.hpp"

namespace ltn {

namespace {

double orient2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// > 0 when p lies strictly inside the circumcircle of the ccw triangle.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double ax = a.x - p.x, ay = a.y - p.y;
  const double bx = b.x - p.x, by = b.y - p.y;
  const double cx = c.x - p.x, cy = c.y - p.y;
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) +
         a2 * (bx * cy - by * cx);
}

struct Tri {
  int v[3];
  bool active = true;
};

std::vector<Index> sortedVector(const std::set<Index>& s) {
  return std::vector<Index>(s.begin(), s.end());
}

}  // namespace

std::vector<std::array<Index, 3>> triangulatePointSet(
    const std::vector<Vec2>& pts) {
  const int n = static_cast<int>(pts.size());
  require(n >= 3, "triangulatePointSet: need at least 3 points");

  // Normalize into the unit box so fixed tolerances apply.
  Vec2 lo = pts[0], hi = pts[0];
  for (const Vec2& p : pts) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  const double span = std::max({hi.x - lo.x, hi.y - lo.y, 1e-300});
  std::vector<Vec2> q(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    q[i] = {(pts[i].x - lo.x) / span, (pts[i].y - lo.y) / span};
  }
  {
    std::vector<std::pair<double, double>> sorted;
    sorted.reserve(q.size());
    for (const Vec2& p : q) sorted.push_back({p.x, p.y});
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      require(sorted[i] != sorted[i + 1],
              "triangulatePointSet: duplicate points");
    }
  }
  const double eps_or = 1e-12;
  const double eps_inc = 1e-10;

  // Deterministic insertion order: lexicographic by normalized coordinate.
  std::vector<int> order(q.size());
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec2& pa = q[static_cast<std::size_t>(a)];
    const Vec2& pb = q[static_cast<std::size_t>(b)];
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    return a < b;
  });

  // Enclosing triangle far outside the unit box.
  q.push_back({-30.0, -20.0});
  q.push_back({31.0, -20.0});
  q.push_back({0.5, 40.0});
  std::vector<Tri> tris;
  tris.push_back({{n, n + 1, n + 2}, true});

  auto ccw = [&](Tri& t) {
    if (orient2(q[static_cast<std::size_t>(t.v[0])],
                q[static_cast<std::size_t>(t.v[1])],
                q[static_cast<std::size_t>(t.v[2])]) < 0.0)
      std::swap(t.v[1], t.v[2]);
  };
  ccw(tris[0]);

  for (int pi : order) {
    const Vec2& p = q[static_cast<std::size_t>(pi)];
    // Containing triangle (barycentric sign test, tie to lowest index).
    int home = -1;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!tris[t].active) continue;
      const Vec2& a = q[static_cast<std::size_t>(tris[t].v[0])];
      const Vec2& b = q[static_cast<std::size_t>(tris[t].v[1])];
      const Vec2& c = q[static_cast<std::size_t>(tris[t].v[2])];
      if (orient2(a, b, p) >= -eps_or && orient2(b, c, p) >= -eps_or &&
          orient2(c, a, p) >= -eps_or) {
        home = static_cast<int>(t);
        break;
      }
    }
    require(home >= 0, "triangulatePointSet: point outside current hull");

    // Cavity: triangles whose circumcircle contains p (tie-inclusive),
    // restricted to the edge-connected component of the containing triangle.
    std::set<int> cavity;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!tris[t].active) continue;
      if (static_cast<int>(t) == home ||
          incircle(q[static_cast<std::size_t>(tris[t].v[0])],
                   q[static_cast<std::size_t>(tris[t].v[1])],
                   q[static_cast<std::size_t>(tris[t].v[2])], p) > -eps_inc) {
        cavity.insert(static_cast<int>(t));
      }
    }
    auto edgeKey = [](int a, int b) {
      return std::pair<int, int>(std::min(a, b), std::max(a, b));
    };
    // Connectivity restriction (BFS over shared edges from home).
    {
      std::map<std::pair<int, int>, std::vector<int>> edges;
      for (int t : cavity) {
        for (int e = 0; e < 3; ++e) {
          edges[edgeKey(tris[static_cast<std::size_t>(t)].v[e],
                        tris[static_cast<std::size_t>(t)].v[(e + 1) % 3])]
              .push_back(t);
        }
      }
      std::set<int> reach{home};
      std::vector<int> stack{home};
      while (!stack.empty()) {
        const int t = stack.back();
        stack.pop_back();
        for (int e = 0; e < 3; ++e) {
          const auto& adj =
              edges[edgeKey(tris[static_cast<std::size_t>(t)].v[e],
                            tris[static_cast<std::size_t>(t)].v[(e + 1) % 3])];
          for (int o : adj) {
            if (!reach.count(o)) {
              reach.insert(o);
              stack.push_back(o);
            }
          }
        }
      }
      cavity = reach;
    }
    // Star-shape repair: every cavity boundary edge must face p.
    for (bool changed = true; changed;) {
      changed = false;
      std::map<std::pair<int, int>, int> count;
      for (int t : cavity) {
        for (int e = 0; e < 3; ++e) {
          count[edgeKey(tris[static_cast<std::size_t>(t)].v[e],
                        tris[static_cast<std::size_t>(t)].v[(e + 1) % 3])]++;
        }
      }
      for (int t : cavity) {
        if (t == home) continue;
        bool bad = false;
        for (int e = 0; e < 3 && !bad; ++e) {
          const int a = tris[static_cast<std::size_t>(t)].v[e];
          const int b = tris[static_cast<std::size_t>(t)].v[(e + 1) % 3];
          if (count[edgeKey(a, b)] != 1) continue;  // interior to the cavity
          // Boundary edge oriented with the cavity on its left.
          if (orient2(q[static_cast<std::size_t>(a)],
                      q[static_cast<std::size_t>(b)], p) <= eps_or * 1e-2)
            bad = true;
        }
        if (bad) {
          cavity.erase(t);
          changed = true;
          break;
        }
      }
    }
    // Retriangulate the cavity as a fan from p.
    std::map<std::pair<int, int>, int> count;
    std::vector<std::array<int, 2>> rim;
    for (int t : cavity) {
      for (int e = 0; e < 3; ++e) {
        count[edgeKey(tris[static_cast<std::size_t>(t)].v[e],
                      tris[static_cast<std::size_t>(t)].v[(e + 1) % 3])]++;
      }
    }
    for (int t : cavity) {
      for (int e = 0; e < 3; ++e) {
        const int a = tris[static_cast<std::size_t>(t)].v[e];
        const int b = tris[static_cast<std::size_t>(t)].v[(e + 1) % 3];
        if (count[edgeKey(a, b)] == 1) rim.push_back({a, b});
      }
      tris[static_cast<std::size_t>(t)].active = false;
    }
    for (const auto& [a, b] : rim) {
      Tri t{{a, b, pi}, true};
      ccw(t);
      tris.push_back(t);
    }
  }

  // Drop the enclosing-triangle fans, keep real triangles.
  std::vector<Tri> real;
  for (const Tri& t : tris) {
    if (!t.active) continue;
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    real.push_back(t);
  }

  // Local edge flips toward the Delaunay criterion (also repairs any
  // boundary-adjacent suboptimality introduced by the enclosing triangle).
  for (int sweep = 0; sweep < 64; ++sweep) {
    std::map<std::pair<int, int>, std::vector<int>> edges;
    for (std::size_t t = 0; t < real.size(); ++t) {
      for (int e = 0; e < 3; ++e) {
        const int a = real[t].v[e], b = real[t].v[(e + 1) % 3];
        edges[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(t));
      }
    }
    bool flipped = false;
    for (const auto& [key, adj] : edges) {
      if (adj.size() != 2) continue;
      Tri& t1 = real[static_cast<std::size_t>(adj[0])];
      Tri& t2 = real[static_cast<std::size_t>(adj[1])];
      auto opposite = [&](const Tri& t) {
        for (int e = 0; e < 3; ++e) {
          if (t.v[e] != key.first && t.v[e] != key.second) return t.v[e];
        }
        return -1;
      };
      const int c = opposite(t1), d = opposite(t2);
      if (c < 0 || d < 0 || c == d) continue;
      Tri o1 = t1;
      ccw(o1);
      if (incircle(q[static_cast<std::size_t>(o1.v[0])],
                   q[static_cast<std::size_t>(o1.v[1])],
                   q[static_cast<std::size_t>(o1.v[2])],
                   q[static_cast<std::size_t>(d)]) <= eps_inc)
        continue;
      // Flip only across a strictly convex quadrilateral.
      const int u = key.first, v = key.second;
      const Vec2& pu = q[static_cast<std::size_t>(u)];
      const Vec2& pv = q[static_cast<std::size_t>(v)];
      const Vec2& pc = q[static_cast<std::size_t>(c)];
      const Vec2& pd = q[static_cast<std::size_t>(d)];
      if (std::abs(orient2(pc, pd, pu)) <= eps_or ||
          std::abs(orient2(pc, pd, pv)) <= eps_or)
        continue;
      if ((orient2(pc, pd, pu) > 0) == (orient2(pc, pd, pv) > 0)) continue;
      t1.v[0] = u, t1.v[1] = c, t1.v[2] = d;
      t2.v[0] = v, t2.v[1] = c, t2.v[2] = d;
      ccw(t1);
      ccw(t2);
      flipped = true;
      break;  // edge map is stale after a flip
    }
    if (!flipped) break;
  }

  std::vector<std::array<Index, 3>> out;
  for (const Tri& t : real) {
    std::array<Index, 3> e{t.v[0], t.v[1], t.v[2]};
    if (orient2(pts[static_cast<std::size_t>(e[0])],
                pts[static_cast<std::size_t>(e[1])],
                pts[static_cast<std::size_t>(e[2])]) < 0.0)
      std::swap(e[1], e[2]);
    out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

P0P1Coupling buildP0P1Coupling(std::shared_ptr<const Mesh> mesh,
                               const Region& omega_N, double delta,
                               const PartitionOptions& opts) {
  require(mesh != nullptr, "buildP0P1Coupling: null mesh");
  require(std::isfinite(delta) && delta > 0.0,
          "buildP0P1Coupling: horizon must be positive");
  const Mesh& m = *mesh;

  // Nonlocal elements: interior elements inside the requested region.
  std::set<Index> nset;
  for (Index k = 0; k < m.numElements(); ++k) {
    if (m.isExterior(k)) continue;
    const auto& e = m.elems[static_cast<std::size_t>(k)];
    const auto& v = m.vertices;
    const RegionClass c =
        m.dim == 1
            ? omega_N.classifyInterval(v[static_cast<std::size_t>(e[0])].x,
                                       v[static_cast<std::size_t>(e[1])].x,
                                       opts.class_tol)
            : omega_N.classifyTriangle(v[static_cast<std::size_t>(e[0])],
                                       v[static_cast<std::size_t>(e[1])],
                                       v[static_cast<std::size_t>(e[2])],
                                       opts.class_tol);
    if (c == RegionClass::cut && !opts.snap) {
      fail("buildP0P1Coupling: nonlocal-region boundary cuts an element "
           "interior (use snap mode for non-aligned regions)");
    }
    if (c == RegionClass::inside || c == RegionClass::cut) nset.insert(k);
  }
  require(!nset.empty(), "buildP0P1Coupling: empty nonlocal region");

  const auto facetToElems = buildFacetToElems(m);

  // Layer: nonlocal elements sharing a full facet with an interior element
  // of the local side (their centroids become local-mesh interface vertices).
  std::set<Index> layer;
  for (const auto& [facet, adj] : facetToElems) {
    if (adj.size() != 2) continue;
    if (m.isExterior(adj[0]) || m.isExterior(adj[1])) continue;
    const bool n0 = nset.count(adj[0]) > 0, n1 = nset.count(adj[1]) > 0;
    if (n0 != n1) layer.insert(n0 ? adj[0] : adj[1]);
  }
  require(!layer.empty(),
          "buildP0P1Coupling: nonlocal region has no interior neighbors");

  // Interaction collars by exact distance to the nonlocal-region boundary.
  std::vector<std::pair<Vec2, Vec2>> nBoundary;
  for (const auto& [facet, adj] : facetToElems) {
    int inN = 0;
    for (Index k : adj) {
      if (nset.count(k)) ++inN;
    }
    if (inN != 1) continue;
    const Vec2& p = m.vertices[static_cast<std::size_t>(facet.first)];
    const Vec2 qv = facet.second >= 0
                        ? m.vertices[static_cast<std::size_t>(facet.second)]
                        : p;
    nBoundary.push_back({p, qv});
  }
  const double cutoff = delta * (1.0 - 1e-12);
  std::vector<Index> elems_NI, elems_gI;
  for (Index k = 0; k < m.numElements(); ++k) {
    if (nset.count(k)) continue;
    double dist = std::numeric_limits<double>::infinity();
    const auto& e = m.elems[static_cast<std::size_t>(k)];
    std::vector<std::pair<Vec2, Vec2>> segs;
    if (m.dim == 1) {
      segs.push_back({m.vertices[static_cast<std::size_t>(e[0])],
                      m.vertices[static_cast<std::size_t>(e[1])]});
    } else {
      for (int i = 0; i < 3; ++i) {
        segs.push_back({m.vertices[static_cast<std::size_t>(e[static_cast<std::size_t>(i)])],
                        m.vertices[static_cast<std::size_t>(e[static_cast<std::size_t>((i + 1) % 3)])]});
      }
    }
    for (const auto& seg : segs) {
      for (const auto& bs : nBoundary) {
        dist = std::min(dist, segmentDistance(seg.first, seg.second, bs.first, bs.second));
        if (dist == 0.0) break;
      }
      if (dist == 0.0) break;
    }
    if (dist < cutoff) {
      (m.isExterior(k) ? elems_gI : elems_NI).push_back(k);
    }
  }

  // Prescribed local-mesh vertices: centroids of interior elements of the
  // local side and of the facet-adjacent nonlocal layer, plus the domain
  // boundary vertices not incident to the nonlocal region.
  std::vector<Vec2> verts;
  for (Index k = 0; k < m.numElements(); ++k) {
    if (m.isExterior(k)) continue;
    if (!nset.count(k) || layer.count(k)) verts.push_back(m.elemCentroid(k));
  }
  const auto vertexToElems = buildVertexToElems(m);
  std::set<Index> bdryVerts;
  for (const auto& [a, b] : domainBoundaryFacets(m)) {
    bdryVerts.insert(a);
    if (b >= 0) bdryVerts.insert(b);
  }
  for (Index v : bdryVerts) {
    bool touchesN = false;
    for (Index k : vertexToElems[static_cast<std::size_t>(v)]) {
      if (nset.count(k)) touchesN = true;
    }
    if (!touchesN) verts.push_back(m.vertices[static_cast<std::size_t>(v)]);
  }
  require(verts.size() >= 2, "buildP0P1Coupling: too few local-mesh vertices");

  auto localMesh = std::make_shared<Mesh>();
  Mesh& lm = *localMesh;
  lm.dim = m.dim;
  if (m.dim == 1) {
    std::sort(verts.begin(), verts.end(),
              [](const Vec2& a, const Vec2& b) { return a.x < b.x; });
    for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
      require(verts[i].x < verts[i + 1].x,
              "buildP0P1Coupling: duplicate local-mesh vertices");
    }
    lm.vertices = verts;
    for (Index i = 0; i + 1 < static_cast<Index>(verts.size()); ++i) {
      lm.elems.push_back({i, i + 1, -1});
    }
  } else {
    const auto tri = triangulatePointSet(verts);
    // Carve: keep a triangle when its centroid falls in an interior parent
    // element of the local side or of the adjacent layer.
    std::vector<std::array<Index, 3>> kept;
    for (const auto& t : tri) {
      const Vec2 c = {(verts[static_cast<std::size_t>(t[0])].x +
                       verts[static_cast<std::size_t>(t[1])].x +
                       verts[static_cast<std::size_t>(t[2])].x) / 3.0,
                      (verts[static_cast<std::size_t>(t[0])].y +
                       verts[static_cast<std::size_t>(t[1])].y +
                       verts[static_cast<std::size_t>(t[2])].y) / 3.0};
      Index parent = -1;
      for (Index k = 0; k < m.numElements() && parent < 0; ++k) {
        const auto bc = barycentric(m, k, c);
        if (bc[0] >= -1e-9 && bc[1] >= -1e-9 && bc[2] >= -1e-9) parent = k;
      }
      if (parent < 0) continue;
      if (m.isExterior(parent)) continue;
      if (nset.count(parent) && !layer.count(parent)) continue;
      kept.push_back(t);
    }
    require(!kept.empty(), "buildP0P1Coupling: local mesh carved away");
    std::vector<char> used(verts.size(), 0);
    for (const auto& t : kept) {
      for (Index v : t) used[static_cast<std::size_t>(v)] = 1;
    }
    require(std::all_of(used.begin(), used.end(), [](char u) { return u != 0; }),
            "buildP0P1Coupling: a prescribed local-mesh vertex is unused");
    lm.vertices = verts;
    lm.elems = kept;
  }
  lm.finalize();
  validateConforming(lm);

  P0P1Coupling out;
  DomainPartition& part = out.partition;
  part.mesh = mesh;
  part.local_mesh = localMesh;
  part.delta = delta;
  part.core_elems = sortedVector(nset);
  part.elems_N = part.core_elems;
  std::sort(elems_NI.begin(), elems_NI.end());
  std::sort(elems_gI.begin(), elems_gI.end());
  part.elems_NI = elems_NI;
  part.elems_gI = elems_gI;
  for (Index k = 0; k < lm.numElements(); ++k) part.elems_L.push_back(k);

  // Local-mesh boundary facets: on the domain boundary they carry given
  // data, elsewhere they form the interface to the nonlocal solution.
  std::vector<std::pair<Vec2, Vec2>> domBdry;
  for (const auto& [a, b] : domainBoundaryFacets(m)) {
    const Vec2& p = m.vertices[static_cast<std::size_t>(a)];
    const Vec2 qv = b >= 0 ? m.vertices[static_cast<std::size_t>(b)] : p;
    domBdry.push_back({p, qv});
  }
  double scale = 0.0;
  for (const auto& [p, qv] : domBdry) {
    scale = std::max({scale, std::abs(p.x), std::abs(p.y), std::abs(qv.x),
                      std::abs(qv.y), (qv - p).norm()});
  }
  const double tol = 1e-9 * std::max(scale, 1.0);
  auto onDomainBoundary = [&](const Vec2& p) {
    for (const auto& [a, b] : domBdry) {
      if (segmentDistance(p, p, a, b) <= tol) return true;
    }
    return false;
  };
  for (const auto& facet : lm.boundary_facets) {
    const Vec2& p = lm.vertices[static_cast<std::size_t>(facet.first)];
    const Vec2 qv = facet.second >= 0
                        ? lm.vertices[static_cast<std::size_t>(facet.second)]
                        : p;
    const Vec2 mid = {0.5 * (p.x + qv.x), 0.5 * (p.y + qv.y)};
    if (onDomainBoundary(p) && onDomainBoundary(qv) && onDomainBoundary(mid)) {
      part.gamma_given_facets.push_back(facet);
    } else {
      part.gamma_facets.push_back(facet);
    }
  }

  out.dofs = classifyDofs(part, SpaceKind::P0);
  return out;
}

}  // namespace ltn
