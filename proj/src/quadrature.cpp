#include "ltn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Dense>

namespace ltn {

namespace {

// Evaluate Legendre P_n and its derivative at x.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

GaussRule gaussLegendre(int n) {
  require(n >= 1, "gaussLegendre: need n >= 1");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess, then Newton.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const auto [p, dp] = legendre(n, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

GaussRule gaussLegendreOn(int n, double a, double b) {
  GaussRule base = gaussLegendre(n);
  GaussRule rule;
  rule.nodes.reserve(base.nodes.size());
  rule.weights.reserve(base.nodes.size());
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    rule.nodes.push_back(mid + half * base.nodes[i]);
    rule.weights.push_back(half * base.weights[i]);
  }
  return rule;
}

GaussRule gaussJacobiUnit(int n, double mu) {
  require(n >= 1, "gaussJacobiUnit: need n >= 1");
  require(mu > -1.0, "gaussJacobiUnit: need mu > -1");
  // Jacobi weight (1-x)^a (1+x)^b on [-1,1] with a = 0, b = mu; recurrence
  // coefficients from the standard three-term relation, nodes/weights via
  // the Golub-Welsch tridiagonal eigenproblem.
  const double a = 0.0, b = mu;
  Eigen::VectorXd diag(n), sub(std::max(n - 1, 1));
  auto alpha = [&](int k) {
    if (k == 0) return (b - a) / (a + b + 2.0);
    const double q = 2.0 * k + a + b;
    return (b * b - a * a) / (q * (q + 2.0));
  };
  auto betaCoeff = [&](int k) {
    // beta_k for k >= 1.
    const double q = 2.0 * k + a + b;
    return 4.0 * k * (k + a) * (k + b) * (k + a + b) /
           (q * q * (q + 1.0) * (q - 1.0));
  };
  for (int k = 0; k < n; ++k) diag[k] = alpha(k);
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(betaCoeff(k));
  const double beta0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) *
                       std::tgamma(b + 1.0) / std::tgamma(a + b + 2.0);
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    rule.nodes[0] = 0.5 * (diag[0] + 1.0);
    rule.weights[0] = beta0 * std::pow(0.5, mu + 1.0);
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(n - 1),
                            Eigen::ComputeEigenvectors);
  require(es.info() == Eigen::Success, "gaussJacobiUnit: eigensolve failed");
  // Map x in [-1,1] to t = (x+1)/2 in [0,1]; the weight transforms with the
  // factor 2^{-(mu+1)}.
  const double scale = beta0 * std::pow(0.5, mu + 1.0);
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (es.eigenvalues()[i] + 1.0);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = scale * v0 * v0;
  }
  return rule;
}

namespace {

TriangleRule makeCentroidRule() {
  TriangleRule r;
  r.bary = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  r.weights = {1.0};
  return r;
}

// Append the three cyclic permutations of (1-2a, a, a).
void addPerm3(TriangleRule& r, double a, double w) {
  const double c = 1.0 - 2.0 * a;
  r.bary.push_back({c, a, a});
  r.bary.push_back({a, c, a});
  r.bary.push_back({a, a, c});
  r.weights.push_back(w);
  r.weights.push_back(w);
  r.weights.push_back(w);
}

TriangleRule makeDegree2Rule() {
  TriangleRule r;
  addPerm3(r, 1.0 / 6.0, 1.0 / 3.0);
  return r;
}

TriangleRule makeDegree4Rule() {
  // Classic 6-point symmetric rule.
  TriangleRule r;
  addPerm3(r, 0.445948490915965, 0.223381589678011);
  addPerm3(r, 0.091576213509771, 0.109951743655322);
  return r;
}

// Collapsed tensor (Duffy) rule: exact for total degree <= deg with
// (deg+1)^2 points.  Used for the higher orders where hand-entered
// symmetric tables would be error-prone.
TriangleRule makeCollapsedRule(int deg) {
  // x^p y^q with p+q <= deg pulls back to u^p (1-u)^{q+1} v^q, so n = deg+1
  // Gauss points per direction (exact through degree 2n-1 >= deg+1) suffice.
  const int n = deg + 1;
  const GaussRule gu = gaussLegendreOn(n, 0.0, 1.0);
  const GaussRule gv = gaussLegendreOn(n, 0.0, 1.0);
  TriangleRule r;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = gu.nodes[static_cast<std::size_t>(i)];
      const double v = gv.nodes[static_cast<std::size_t>(j)];
      // Map the unit square to the reference triangle: x = u, y = v(1-u),
      // Jacobian (1-u); weights are relative to triangle area 1/2.
      const double x = u;
      const double y = v * (1.0 - u);
      const double w = gu.weights[static_cast<std::size_t>(i)] *
                       gv.weights[static_cast<std::size_t>(j)] * (1.0 - u);
      r.bary.push_back({1.0 - x - y, x, y});
      r.weights.push_back(2.0 * w);  // normalize to sum 1
    }
  }
  return r;
}

}  // namespace

const TriangleRule& triangleRule(int degree) {
  require(degree >= 0 && degree <= 20, "triangleRule: degree out of range");
  static std::map<int, TriangleRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;
  TriangleRule r;
  if (degree <= 1) {
    r = makeCentroidRule();
  } else if (degree == 2) {
    r = makeDegree2Rule();
  } else if (degree <= 4) {
    r = makeDegree4Rule();
  } else {
    r = makeCollapsedRule(degree);
  }
  return cache.emplace(degree, std::move(r)).first->second;
}

double powerMoment(double p, double a, double b) {
  require(a >= 0.0 && b > a, "powerMoment: need 0 <= a < b");
  const double q = p + 1.0;
  if (a == 0.0) {
    require(q > 0.0, "powerMoment: divergent at 0");
    return std::pow(b, q) / q;
  }
  if (std::abs(q) < 1e-12) {
    // int_a^b u^{-1+eps} du = log(b/a) + O(eps); use the exact limit form
    // a^q * expm1(q log(b/a)) / q which handles eps = 0 via the log.
    const double lr = std::log(b / a);
    if (q == 0.0) return lr;
    return std::pow(a, q) * std::expm1(q * lr) / q;
  }
  // Stable form for all other exponents: a^q ((b/a)^q - 1)/q.
  return std::pow(a, q) * std::expm1(q * std::log(b / a)) / q;
}

}  // namespace ltn
