#include "ltn/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ltn {

namespace {

// Cell count for a span: ceil(len/h) with a guard against ulp-level
// overshoot (len/h = 40.0000000001 must give 40, len/h = 3.33 gives 4).
Index cellCount(double len, double h) {
  require(std::isfinite(len) && std::isfinite(h) && len > 0.0 && h > 0.0,
          "mesh: non-finite or non-positive extent/spacing");
  const double q = len / h;
  Index n = static_cast<Index>(std::ceil(q - 1e-9));
  if (n < 1) n = 1;
  return n;
}

}  // namespace

double Mesh::elemMeasure(Index k) const {
  const auto& e = elems[static_cast<std::size_t>(k)];
  if (dim == 1) {
    return vertices[static_cast<std::size_t>(e[1])].x -
           vertices[static_cast<std::size_t>(e[0])].x;
  }
  const Vec2& a = vertices[static_cast<std::size_t>(e[0])];
  const Vec2& b = vertices[static_cast<std::size_t>(e[1])];
  const Vec2& c = vertices[static_cast<std::size_t>(e[2])];
  return 0.5 * (b - a).cross(c - a);
}

Vec2 Mesh::elemCentroid(Index k) const {
  const auto& e = elems[static_cast<std::size_t>(k)];
  Vec2 c{0.0, 0.0};
  const int nv = vertsPerElem();
  for (int i = 0; i < nv; ++i) {
    c = c + vertices[static_cast<std::size_t>(e[static_cast<std::size_t>(i)])];
  }
  return c * (1.0 / nv);
}

double Mesh::elemDiameter(Index k) const {
  const auto& e = elems[static_cast<std::size_t>(k)];
  if (dim == 1) return elemMeasure(k);
  const Vec2& a = vertices[static_cast<std::size_t>(e[0])];
  const Vec2& b = vertices[static_cast<std::size_t>(e[1])];
  const Vec2& c = vertices[static_cast<std::size_t>(e[2])];
  return std::max({dist(a, b), dist(b, c), dist(c, a)});
}

void Mesh::finalize() {
  require(dim == 1 || dim == 2, "mesh: dim must be 1 or 2");
  if (exterior.empty()) exterior.assign(elems.size(), 0);
  require(exterior.size() == elems.size(), "mesh: exterior flag size mismatch");
  for (Index k = 0; k < numElements(); ++k) {
    auto& e = elems[static_cast<std::size_t>(k)];
    if (dim == 2) {
      const Vec2& a = vertices[static_cast<std::size_t>(e[0])];
      const Vec2& b = vertices[static_cast<std::size_t>(e[1])];
      const Vec2& c = vertices[static_cast<std::size_t>(e[2])];
      if ((b - a).cross(c - a) < 0.0) std::swap(e[1], e[2]);
    } else if (vertices[static_cast<std::size_t>(e[1])].x <
               vertices[static_cast<std::size_t>(e[0])].x) {
      std::swap(e[0], e[1]);
    }
    require(elemMeasure(k) > 0.0, "mesh: degenerate element");
  }
  boundary_facets.clear();
  for (const auto& [facet, adj] : buildFacetToElems(*this)) {
    if (adj.size() == 1) boundary_facets.push_back(facet);
  }
}

Mesh uniformIntervalMesh(double a, double b, double h, double collarLeft,
                         double collarRight) {
  require(a < b, "uniformIntervalMesh: need a < b");
  require(collarLeft >= 0.0 && collarRight >= 0.0,
          "uniformIntervalMesh: collar widths must be >= 0");
  const Index n = cellCount(b - a, h);
  const double len = b - a;
  const Index ncl =
      collarLeft > 0.0 ? static_cast<Index>(std::ceil(collarLeft * n / len - 1e-9)) : 0;
  const Index ncr =
      collarRight > 0.0 ? static_cast<Index>(std::ceil(collarRight * n / len - 1e-9)) : 0;
  Mesh mesh;
  mesh.dim = 1;
  const Index total = n + ncl + ncr;
  for (Index i = -ncl; i <= n + ncr; ++i) {
    // Interior lattice points computed as a + len*i/n so symmetric meshes
    // get bit-identical symmetric coordinates.
    mesh.vertices.push_back({a + len * static_cast<double>(i) / static_cast<double>(n), 0.0});
  }
  for (Index k = 0; k < total; ++k) {
    mesh.elems.push_back({k, k + 1, -1});
    const bool ext = k < ncl || k >= ncl + n;
    mesh.exterior.push_back(ext ? 1 : 0);
  }
  mesh.finalize();
  return mesh;
}

Mesh structuredTriangleMesh(double x0, double x1, double y0, double y1,
                            double h, double collar) {
  require(x0 < x1 && y0 < y1, "structuredTriangleMesh: empty box");
  require(collar >= 0.0, "structuredTriangleMesh: collar must be >= 0");
  const Index nx = cellCount(x1 - x0, h);
  const Index ny = cellCount(y1 - y0, h);
  const double lx = x1 - x0, ly = y1 - y0;
  const Index cx =
      collar > 0.0 ? static_cast<Index>(std::ceil(collar * nx / lx - 1e-9)) : 0;
  const Index cy =
      collar > 0.0 ? static_cast<Index>(std::ceil(collar * ny / ly - 1e-9)) : 0;
  Mesh mesh;
  mesh.dim = 2;
  const Index mx = nx + 2 * cx, my = ny + 2 * cy;
  auto vid = [&](Index i, Index j) { return (my + 1) * i + j; };
  for (Index i = 0; i <= mx; ++i) {
    for (Index j = 0; j <= my; ++j) {
      mesh.vertices.push_back(
          {x0 + lx * static_cast<double>(i - cx) / static_cast<double>(nx),
           y0 + ly * static_cast<double>(j - cy) / static_cast<double>(ny)});
    }
  }
  for (Index i = 0; i < mx; ++i) {
    for (Index j = 0; j < my; ++j) {
      const Index va = vid(i, j), vb = vid(i + 1, j), vc = vid(i + 1, j + 1),
                  vd = vid(i, j + 1);
      const bool ext = i < cx || i >= cx + nx || j < cy || j >= cy + ny;
      mesh.elems.push_back({va, vb, vc});
      mesh.exterior.push_back(ext ? 1 : 0);
      mesh.elems.push_back({va, vc, vd});
      mesh.exterior.push_back(ext ? 1 : 0);
    }
  }
  mesh.finalize();
  return mesh;
}

std::vector<FacetKey> elementFacets(const Mesh& mesh, Index k) {
  const auto& e = mesh.elems[static_cast<std::size_t>(k)];
  if (mesh.dim == 1) return {{e[0], -1}, {e[1], -1}};
  auto key = [](Index p, Index q) {
    return p < q ? FacetKey{p, q} : FacetKey{q, p};
  };
  return {key(e[0], e[1]), key(e[1], e[2]), key(e[2], e[0])};
}

std::map<FacetKey, std::vector<Index>> buildFacetToElems(const Mesh& mesh) {
  std::map<FacetKey, std::vector<Index>> out;
  for (Index k = 0; k < mesh.numElements(); ++k) {
    for (const auto& f : elementFacets(mesh, k)) out[f].push_back(k);
  }
  return out;
}

std::vector<std::vector<Index>> buildVertexToElems(const Mesh& mesh) {
  std::vector<std::vector<Index>> out(mesh.vertices.size());
  for (Index k = 0; k < mesh.numElements(); ++k) {
    const auto& e = mesh.elems[static_cast<std::size_t>(k)];
    for (int i = 0; i < mesh.vertsPerElem(); ++i) {
      out[static_cast<std::size_t>(e[static_cast<std::size_t>(i)])].push_back(k);
    }
  }
  return out;
}

void validateConforming(const Mesh& mesh) {
  std::map<std::pair<double, double>, Index> seen;
  for (Index v = 0; v < mesh.numVertices(); ++v) {
    const Vec2& p = mesh.vertices[static_cast<std::size_t>(v)];
    auto [it, inserted] = seen.emplace(std::make_pair(p.x, p.y), v);
    (void)it;
    require(inserted, "mesh: duplicate vertex coordinates");
  }
  for (const auto& [facet, adj] : buildFacetToElems(mesh)) {
    (void)facet;
    require(adj.size() <= 2, "mesh: facet shared by more than two elements");
  }
  for (Index k = 0; k < mesh.numElements(); ++k) {
    require(mesh.elemMeasure(k) > 0.0, "mesh: non-positive element measure");
  }
}

std::string exportMeshText(const Mesh& mesh) {
  std::ostringstream os;
  os.precision(17);
  os << mesh.dim << " " << mesh.numVertices() << "\n";
  for (const Vec2& p : mesh.vertices) {
    os << p.x;
    if (mesh.dim == 2) os << " " << p.y;
    os << "\n";
  }
  os << mesh.numElements() << "\n";
  for (Index k = 0; k < mesh.numElements(); ++k) {
    const auto& e = mesh.elems[static_cast<std::size_t>(k)];
    os << e[0] << " " << e[1];
    if (mesh.dim == 2) os << " " << e[2];
    os << " " << (mesh.isExterior(k) ? 1 : 0) << "\n";
  }
  return os.str();
}

Mesh importMeshText(const std::string& text) {
  std::istringstream is(text);
  Mesh mesh;
  Index nv = 0;
  require(static_cast<bool>(is >> mesh.dim >> nv), "mesh import: bad header");
  require(mesh.dim == 1 || mesh.dim == 2, "mesh import: dim must be 1 or 2");
  require(nv >= mesh.dim + 1, "mesh import: too few vertices");
  mesh.vertices.resize(static_cast<std::size_t>(nv));
  for (Index v = 0; v < nv; ++v) {
    Vec2 p{0.0, 0.0};
    require(static_cast<bool>(is >> p.x), "mesh import: bad vertex line");
    if (mesh.dim == 2) {
      require(static_cast<bool>(is >> p.y), "mesh import: bad vertex line");
    }
    mesh.vertices[static_cast<std::size_t>(v)] = p;
  }
  Index ne = 0;
  require(static_cast<bool>(is >> ne), "mesh import: bad element count");
  require(ne >= 1, "mesh import: empty element list");
  std::string rest;
  std::getline(is, rest);  // consume end of count line
  for (Index k = 0; k < ne; ++k) {
    std::string line;
    do {
      require(static_cast<bool>(std::getline(is, line)), "mesh import: truncated");
    } while (line.find_first_not_of(" \t\r") == std::string::npos);
    std::istringstream ls(line);
    std::array<Index, 3> e{-1, -1, -1};
    require(static_cast<bool>(ls >> e[0] >> e[1]), "mesh import: bad element line");
    if (mesh.dim == 2) {
      require(static_cast<bool>(ls >> e[2]), "mesh import: bad element line");
    }
    int flag = 0;
    if (!(ls >> flag)) flag = 0;
    for (int i = 0; i < mesh.dim + 1; ++i) {
      require(e[static_cast<std::size_t>(i)] >= 0 && e[static_cast<std::size_t>(i)] < nv,
              "mesh import: vertex index out of range");
    }
    mesh.elems.push_back(e);
    mesh.exterior.push_back(flag ? 1 : 0);
  }
  mesh.finalize();
  return mesh;
}

void writeMeshFile(const Mesh& mesh, const std::string& path) {
  std::ofstream os(path);
  require(static_cast<bool>(os), "writeMeshFile: cannot open " + path);
  os << exportMeshText(mesh);
  require(static_cast<bool>(os), "writeMeshFile: write failed for " + path);
}

Mesh readMeshFile(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "readMeshFile: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return importMeshText(buf.str());
}

}  // namespace ltn
