// region.hpp: axis-aligned region predicates (boxes, unions, complements)
// with exact measure-based element classification.  Elements are classified
// by slicing them along every box face that crosses them, so the result
// depends only on polygon arithmetic, never on sampling heuristics.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "ltn/core.hpp"

namespace ltn {

enum class RegionClass { inside, outside, cut };

class Region {
 public:
  Region() : node_(emptyNode()) {}

  static Region empty() { return Region(emptyNode()); }
  static Region all() { return Region(std::make_shared<Node>(Node{Kind::All, {}, {}, {}})); }
  // Closed interval [a, b] extended to all of y (usable in both dimensions).
  static Region interval(double a, double b) {
    require(a < b, "Region::interval: need a < b");
    const double inf = std::numeric_limits<double>::infinity();
    return box({a, -inf}, {b, inf});
  }
  static Region box(Vec2 lo, Vec2 hi) {
    require(lo.x < hi.x && lo.y < hi.y, "Region::box: need lo < hi");
    return Region(std::make_shared<Node>(Node{Kind::Box, lo, hi, {}}));
  }
  static Region unionOf(std::vector<Region> parts) {
    auto node = std::make_shared<Node>(Node{Kind::Union, {}, {}, {}});
    for (auto& p : parts) node->kids.push_back(p.node_);
    return Region(std::move(node));
  }
  static Region complement(const Region& r) {
    auto node = std::make_shared<Node>(Node{Kind::Complement, {}, {}, {}});
    node->kids.push_back(r.node_);
    return Region(std::move(node));
  }

  // Membership with closed-box semantics; pieces produced by the slicing in
  // the measure routines never place query points on a box face.
  bool contains(const Vec2& p) const { return containsImpl(*node_, p); }

  // Length of [a, b] covered by the region (1D elements live on the x-axis).
  double measureInInterval(double a, double b) const {
    require(a < b, "measureInInterval: need a < b");
    std::vector<double> cuts{a, b};
    collectFaces(*node_, 0, a, b, cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double len = cuts[i + 1] - cuts[i];
      if (len <= 0.0) continue;
      if (contains({0.5 * (cuts[i] + cuts[i + 1]), 0.0})) total += len;
    }
    return total;
  }

  // Area of the triangle (v0, v1, v2) covered by the region.
  double measureInTriangle(const Vec2& v0, const Vec2& v1, const Vec2& v2) const {
    std::vector<Vec2> poly{v0, v1, v2};
    const double xmin = std::min({v0.x, v1.x, v2.x});
    const double xmax = std::max({v0.x, v1.x, v2.x});
    const double ymin = std::min({v0.y, v1.y, v2.y});
    const double ymax = std::max({v0.y, v1.y, v2.y});
    std::vector<double> xs{xmin, xmax}, ys{ymin, ymax};
    collectFaces(*node_, 0, xmin, xmax, xs);
    collectFaces(*node_, 1, ymin, ymax, ys);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    const double triArea = std::abs(signedArea(poly));
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      std::vector<Vec2> strip = clipAxis(poly, 0, xs[i], true);
      strip = clipAxis(strip, 0, xs[i + 1], false);
      if (strip.size() < 3) continue;
      for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
        std::vector<Vec2> cell = clipAxis(strip, 1, ys[j], true);
        cell = clipAxis(cell, 1, ys[j + 1], false);
        if (cell.size() < 3) continue;
        const double area = std::abs(signedArea(cell));
        if (area <= triArea * 1e-14) continue;
        if (contains(centroid(cell))) total += area;
      }
    }
    return total;
  }

  RegionClass classifyInterval(double a, double b, double tol = 1e-12) const {
    const double len = b - a;
    const double m = measureInInterval(a, b);
    if (m >= len * (1.0 - tol)) return RegionClass::inside;
    if (m <= len * tol) return RegionClass::outside;
    return RegionClass::cut;
  }

  RegionClass classifyTriangle(const Vec2& v0, const Vec2& v1, const Vec2& v2,
                               double tol = 1e-12) const {
    const double area =
        std::abs(0.5 * ((v1 - v0).cross(v2 - v0)));
    require(area > 0.0, "classifyTriangle: degenerate triangle");
    const double m = measureInTriangle(v0, v1, v2);
    if (m >= area * (1.0 - tol)) return RegionClass::inside;
    if (m <= area * tol) return RegionClass::outside;
    return RegionClass::cut;
  }

  // Shared polygon helpers (exact for convex clip against axis planes).
  static double signedArea(const std::vector<Vec2>& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % poly.size()];
      s += p.x * q.y - q.x * p.y;
    }
    return 0.5 * s;
  }

  static Vec2 centroid(const std::vector<Vec2>& poly) {
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % poly.size()];
      const double cr = p.x * q.y - q.x * p.y;
      a += cr;
      cx += (p.x + q.x) * cr;
      cy += (p.y + q.y) * cr;
    }
    require(std::abs(a) > 0.0, "centroid: degenerate polygon");
    return {cx / (3.0 * a), cy / (3.0 * a)};
  }

  // Sutherland-Hodgman clip against {coord >= c} (keepGreater) or
  // {coord <= c}; axis 0 = x, axis 1 = y.
  static std::vector<Vec2> clipAxis(const std::vector<Vec2>& poly, int axis,
                                    double c, bool keepGreater) {
    std::vector<Vec2> out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    auto coord = [axis](const Vec2& p) { return axis == 0 ? p.x : p.y; };
    auto inside = [&](const Vec2& p) {
      return keepGreater ? coord(p) >= c : coord(p) <= c;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % n];
      const bool pin = inside(p), qin = inside(q);
      if (pin) out.push_back(p);
      if (pin != qin) {
        const double t = (c - coord(p)) / (coord(q) - coord(p));
        out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
    return out;
  }

 private:
  enum class Kind { Empty, All, Box, Union, Complement };
  struct Node {
    Kind kind;
    Vec2 lo, hi;
    std::vector<std::shared_ptr<const Node>> kids;
  };
  using NodePtr = std::shared_ptr<const Node>;

  explicit Region(NodePtr node) : node_(std::move(node)) {}

  static NodePtr emptyNode() {
    static NodePtr n = std::make_shared<Node>(Node{Kind::Empty, {}, {}, {}});
    return n;
  }

  static bool containsImpl(const Node& n, const Vec2& p) {
    switch (n.kind) {
      case Kind::Empty:
        return false;
      case Kind::All:
        return true;
      case Kind::Box:
        return p.x >= n.lo.x && p.x <= n.hi.x && p.y >= n.lo.y && p.y <= n.hi.y;
      case Kind::Union:
        for (const auto& k : n.kids)
          if (containsImpl(*k, p)) return true;
        return false;
      case Kind::Complement:
        return !containsImpl(*n.kids[0], p);
    }
    return false;
  }

  // Collect box face coordinates along the given axis that fall strictly
  // inside (lo, hi).
  static void collectFaces(const Node& n, int axis, double lo, double hi,
                           std::vector<double>& out) {
    switch (n.kind) {
      case Kind::Empty:
      case Kind::All:
        return;
      case Kind::Box: {
        const double a = axis == 0 ? n.lo.x : n.lo.y;
        const double b = axis == 0 ? n.hi.x : n.hi.y;
        if (a > lo && a < hi) out.push_back(a);
        if (b > lo && b < hi) out.push_back(b);
        return;
      }
      case Kind::Union:
      case Kind::Complement:
        for (const auto& k : n.kids) collectFaces(*k, axis, lo, hi, out);
        return;
    }
  }

  NodePtr node_;
};

}  // namespace ltn
