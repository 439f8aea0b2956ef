// mesh.hpp: simplicial meshes in 1D/2D with structured generators, an
// optional exterior collar (elements beyond the physical domain that carry
// given volume data), adjacency helpers, and plain-text import/export.
#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ltn/core.hpp"

namespace ltn {

// Facet identifier: sorted vertex pair for edges, (vertex, -1) for points.
using FacetKey = std::pair<Index, Index>;

struct Mesh {
  int dim = 1;
  std::vector<Vec2> vertices;            // y = 0 in 1D
  std::vector<std::array<Index, 3>> elems;  // [2] = -1 in 1D
  std::vector<char> exterior;            // per element: lies outside the domain
  std::vector<FacetKey> boundary_facets;  // facets with a single adjacent element

  int vertsPerElem() const { return dim + 1; }
  Index numVertices() const { return static_cast<Index>(vertices.size()); }
  Index numElements() const { return static_cast<Index>(elems.size()); }

  double elemMeasure(Index k) const;
  Vec2 elemCentroid(Index k) const;
  double elemDiameter(Index k) const;
  bool isExterior(Index k) const { return exterior[static_cast<std::size_t>(k)] != 0; }

  // Orients triangles positively, checks degeneracy, fills boundary_facets.
  void finalize();
};

// ceil((b-a)/h) equal segments on [a, b]; optional exterior collars extend
// the grid by whole cells of the same spacing beyond a and/or b.
Mesh uniformIntervalMesh(double a, double b, double h, double collarLeft = 0.0,
                         double collarRight = 0.0);

// Uniform grid on [x0,x1]x[y0,y1], each cell split along the lower-left to
// upper-right diagonal; optional exterior collar of width >= collar added on
// all four sides (whole cells, same spacing).
Mesh structuredTriangleMesh(double x0, double x1, double y0, double y1,
                            double h, double collar = 0.0);

// Facets of element k, as canonical keys.
std::vector<FacetKey> elementFacets(const Mesh& mesh, Index k);

// facet -> adjacent element indices (1 or 2 entries, ascending).
std::map<FacetKey, std::vector<Index>> buildFacetToElems(const Mesh& mesh);

// vertex -> incident element indices (ascending).
std::vector<std::vector<Index>> buildVertexToElems(const Mesh& mesh);

// Structural conformity: no duplicate vertices (exact coordinates), every
// facet shared by at most two elements, positive measures.
void validateConforming(const Mesh& mesh);

// Plain-text format:
//   dim nv
//   nv lines: x [y]
//   ne
//   ne lines: v0 v1 [v2] [exterior_flag]
std::string exportMeshText(const Mesh& mesh);
Mesh importMeshText(const std::string& text);
void writeMeshFile(const Mesh& mesh, const std::string& path);
Mesh readMeshFile(const std::string& path);

}  // namespace ltn
