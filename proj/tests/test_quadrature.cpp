// Quadrature rules: polynomial exactness degrees and weighted-rule moments.
#include <cmath>
#include <functional>

#include "doctest.h"
#include "ltn/quadrature.hpp"

using namespace ltn;

namespace {

double integrate(const GaussRule& r, const std::function<double(double)>& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i)
    acc += r.weights[i] * f(r.nodes[i]);
  return acc;
}

}  // namespace

TEST_CASE("Gauss-Legendre exactness up to degree 2n-1") {
  for (const int n : {1, 2, 4, 8, 16}) {
    const GaussRule r = gaussLegendre(n);
    REQUIRE(r.nodes.size() == std::size_t(n));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      const double exact = (p % 2 == 0) ? 2.0 / (p + 1) : 0.0;
      const double got =
          integrate(r, [&](double x) { return std::pow(x, p); });
      CHECK(got == doctest::Approx(exact).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("mapped Gauss-Legendre integrates on [a,b]") {
  const GaussRule r = gaussLegendreOn(6, 0.25, 0.75);
  const double got = integrate(r, [](double x) { return x * x * x; });
  const double exact = (std::pow(0.75, 4) - std::pow(0.25, 4)) / 4.0;
  CHECK(got == doctest::Approx(exact).epsilon(1e-13));
}

TEST_CASE("Gauss-Jacobi absorbs the weight t^mu on [0,1]") {
  // int_0^1 t^mu t^p dt = 1/(mu+p+1); the weight is inside the rule, so the
  // integrand handed to the rule is just t^p.
  for (const double mu : {-0.5, -0.25, 0.5, 2.0, 3.0}) {
    const GaussRule r = gaussJacobiUnit(12, mu);
    for (int p = 0; p <= 15; ++p) {
      const double got =
          integrate(r, [&](double t) { return std::pow(t, p); });
      CHECK(got == doctest::Approx(1.0 / (mu + p + 1)).epsilon(1e-11));
    }
  }
}

TEST_CASE("triangle rules are exact to their stated degree") {
  // int over the reference triangle of x^a y^b = a! b! / (a+b+2)!.
  auto fact = [](int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
  };
  for (const int degree : {1, 2, 3, 4, 6, 8}) {
    const TriangleRule& rule = triangleRule(degree);
    double wsum = 0.0;
    for (const double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
    for (int a = 0; a + 0 <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
          const double x = rule.bary[q][1];
          const double y = rule.bary[q][2];
          acc += rule.weights[q] * std::pow(x, a) * std::pow(y, b);
        }
        // Weights sum to 1 on a measure-1/2 reference triangle: scale by 1/2.
        const double got = acc * 0.5;
        const double exact = fact(a) * fact(b) / fact(a + b + 2);
        CHECK(got == doctest::Approx(exact).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("power moments, including the log case") {
  CHECK(powerMoment(2.0, 0.0, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(powerMoment(-0.5, 0.0, 4.0) == doctest::Approx(4.0));
  CHECK(powerMoment(-1.0, 1.0, std::exp(1.0)) == doctest::Approx(1.0));
  CHECK(powerMoment(-0.25, 0.0, 1.0) == doctest::Approx(1.0 / 0.75));
  CHECK_THROWS_AS((void)powerMoment(-1.5, 0.0, 1.0), Error);
}
