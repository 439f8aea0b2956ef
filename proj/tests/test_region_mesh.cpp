// Region predicates and mesh generation: classification against element
// boundaries, generator cell counts, conformity, and text round-trips.
#include <cmath>
#include <memory>
#include <set>

#include "doctest.h"
#include "ltn/mesh.hpp"
#include "ltn/region.hpp"

using namespace ltn;

TEST_CASE("region membership and exact measures") {
  const Region r = Region::interval(-1.0, 0.0);
  CHECK(r.contains(Vec2(-0.5, 0.0)));
  CHECK(r.contains(Vec2(0.0, 0.0)));  // closed
  CHECK(!r.contains(Vec2(0.5, 0.0)));
  CHECK(r.measureInInterval(-2.0, 2.0) == doctest::Approx(1.0));
  CHECK(r.measureInInterval(-0.25, 0.75) == doctest::Approx(0.25));

  const Region box = Region::box(Vec2(-0.25, -0.25), Vec2(0.25, 0.25));
  const Region outside = Region::complement(box);
  CHECK(outside.contains(Vec2(0.5, 0.5)));
  CHECK(!outside.contains(Vec2(0.1, 0.0)));

  // Triangle (0,0)-(1,0)-(0,1) clipped to x <= 0.5 keeps area 3/8.
  const Region half = Region::box(Vec2(-10.0, -10.0), Vec2(0.5, 10.0));
  CHECK(half.measureInTriangle(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)) ==
        doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("region classification flags cut elements") {
  const Region r = Region::interval(-1.0, 0.0);
  CHECK(r.classifyInterval(-0.5, -0.25) == RegionClass::inside);
  CHECK(r.classifyInterval(0.25, 0.5) == RegionClass::outside);
  CHECK(r.classifyInterval(-0.25, 0.25) == RegionClass::cut);
  // Element boundary exactly on the region edge is not a cut.
  CHECK(r.classifyInterval(-0.25, 0.0) == RegionClass::inside);
  CHECK(r.classifyInterval(0.0, 0.25) == RegionClass::outside);

  const Region box = Region::box(Vec2(0.0, -1.0), Vec2(1.0, 1.0));
  CHECK(box.classifyTriangle(Vec2(-0.1, 0.0), Vec2(0.4, 0.0),
                             Vec2(0.0, 0.5)) == RegionClass::cut);
}

TEST_CASE("uniform interval mesh counts") {
  CHECK(uniformIntervalMesh(-1.0, 1.0, 0.5).elems.size() == 4);
  CHECK(uniformIntervalMesh(-1.0, 1.0, 0.5).vertices.size() == 5);
  CHECK(uniformIntervalMesh(-1.0, 1.0, 0.05).elems.size() == 40);
  // ceil rounding makes 4 cells of width 0.25 out of h = 0.3.
  const Mesh m = uniformIntervalMesh(0.0, 1.0, 0.3);
  CHECK(m.elems.size() == 4);
  CHECK(m.elemMeasure(0) == doctest::Approx(0.25));
}

TEST_CASE("interval mesh collars extend by whole cells and flag exterior") {
  const Mesh m = uniformIntervalMesh(-1.0, 1.0, 0.05, 0.1, 0.1);
  CHECK(m.elems.size() == 44);
  int exterior = 0;
  for (Index e = 0; e < Index(m.elems.size()); ++e)
    if (m.isExterior(e)) ++exterior;
  CHECK(exterior == 4);
  // Collar cells share the interior spacing.
  CHECK(m.elemMeasure(0) == doctest::Approx(0.05));
  double lo = 1e9, hi = -1e9;
  for (const Vec2& v : m.vertices) {
    lo = std::min(lo, v.x);
    hi = std::max(hi, v.x);
  }
  CHECK(lo == doctest::Approx(-1.1));
  CHECK(hi == doctest::Approx(1.1));
}

TEST_CASE("structured triangle mesh counts and orientation") {
  const Mesh one = structuredTriangleMesh(0.0, 1.0, 0.0, 1.0, 1.0);
  CHECK(one.elems.size() == 2);

  const Mesh m = structuredTriangleMesh(-1.0, 1.0, -1.0, 1.0, 0.08);
  CHECK(m.elems.size() >= 2 * 25 * 25);
  for (Index e = 0; e < Index(m.elems.size()); ++e) {
    CHECK(m.elemMeasure(e) > 0.0);  // positive orientation by construction
    CHECK(m.elemDiameter(e) <= 0.08 * std::sqrt(2.0) + 1e-12);
  }
  validateConforming(m);
}

TEST_CASE("structured triangle mesh collar flags a frame of elements") {
  const Mesh m = structuredTriangleMesh(-1.0, 1.0, -1.0, 1.0, 0.25, 0.3);
  int exterior = 0;
  for (Index e = 0; e < Index(m.elems.size()); ++e)
    if (m.isExterior(e)) ++exterior;
  // Collar of ceil(0.3/0.25) = 2 cells around an 8x8 interior grid.
  CHECK(m.elems.size() == 2 * 12 * 12);
  CHECK(exterior == 2 * (12 * 12 - 8 * 8));
  validateConforming(m);
}

TEST_CASE("mesh text round-trip") {
  const Mesh m = structuredTriangleMesh(0.0, 1.0, 0.0, 1.0, 0.5, 0.5);
  const std::string text = exportMeshText(m);
  const Mesh back = importMeshText(text);
  REQUIRE(back.vertices.size() == m.vertices.size());
  REQUIRE(back.elems.size() == m.elems.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    CHECK(back.vertices[i].x == doctest::Approx(m.vertices[i].x).epsilon(1e-15));
    CHECK(back.vertices[i].y == doctest::Approx(m.vertices[i].y).epsilon(1e-15));
  }
  for (std::size_t e = 0; e < m.elems.size(); ++e) {
    CHECK(back.elems[e] == m.elems[e]);
    CHECK(back.isExterior(Index(e)) == m.isExterior(Index(e)));
  }
}

TEST_CASE("facet maps cover every element edge") {
  const Mesh m = structuredTriangleMesh(0.0, 1.0, 0.0, 1.0, 0.5);
  const auto facets = buildFacetToElems(m);
  // 4x2 triangles on a 2x2 grid: 16 edges (9 vertices, Euler: V - E + F = 1
  // for a disk with F = 8 faces: E = 9 + 8 - 1 = 16).
  CHECK(facets.size() == 16);
  for (const auto& [key, elems] : facets) {
    CHECK(elems.size() >= 1);
    CHECK(elems.size() <= 2);
  }
}
