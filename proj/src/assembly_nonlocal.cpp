#include "ltn/assembly_nonlocal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>
#include <vector>

#include "ltn/partition.hpp"
#include "ltn/quadrature.hpp"

namespace ltn {

const char* overlapClassName(OverlapClass c) {
  switch (c) {
    case OverlapClass::identical: return "identical";
    case OverlapClass::vertex_touch: return "vertex_touch";
    case OverlapClass::edge_touch: return "edge_touch";
    case OverlapClass::disjoint_within_horizon: return "disjoint_within_horizon";
  }
  return "?";
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------- pair slots

// A pair of elements touches at most 6 distinct DOFs (two triangles sharing
// nothing).  Contributions accumulate into a small dense symmetric matrix
// indexed by "slots"; kIdx/kpIdx map a slot back to the local DOF position
// on the outer resp. inner element (-1 when the DOF is not on that element).
struct SlotSet {
  int ns = 0;
  Index dof[6] = {-1, -1, -1, -1, -1, -1};
  int kIdx[6] = {-1, -1, -1, -1, -1, -1};
  int kpIdx[6] = {-1, -1, -1, -1, -1, -1};
  double m[6][6] = {};

  void addOuter(const std::array<Index, 3>& d, int nd) {
    for (int i = 0; i < nd; ++i) {
      dof[ns] = d[i];
      kIdx[ns] = i;
      ++ns;
    }
  }
  void addInner(const std::array<Index, 3>& d, int nd) {
    for (int i = 0; i < nd; ++i) {
      int found = -1;
      for (int s = 0; s < ns; ++s)
        if (dof[s] == d[i]) found = s;
      if (found < 0) {
        found = ns++;
        dof[found] = d[i];
      }
      kpIdx[found] = i;
    }
  }
  void scatter(std::vector<Triplet>& out) const {
    for (int i = 0; i < ns; ++i)
      for (int j = i; j < ns; ++j) {
        double v = m[i][j];
        if (v == 0.0) continue;
        out.emplace_back(dof[i], dof[j], v);
        if (i != j) out.emplace_back(dof[j], dof[i], v);
      }
  }
};

// ------------------------------------------------------------ 1D closed form

// Pre-inverted Vandermonde for the fixed cubic-fit nodes t = (2q+1)/8.
const Eigen::Matrix4d& cubicFitInverse() {
  static const Eigen::Matrix4d inv = [] {
    Eigen::Matrix4d V;
    const double t[4] = {0.125, 0.375, 0.625, 0.875};
    for (int q = 0; q < 4; ++q)
      for (int k = 0; k < 4; ++k) V(q, k) = std::pow(t[q], k);
    return Eigen::Matrix4d(V.inverse());
  }();
  return inv;
}

// Same-element interval pair: with phi_i(x)-phi_i(y) = m_i (x-y) the double
// integral collapses to a single radial moment (P0 contributes nothing).
void pair1DIdentical(double a, double b, const KernelSpec& kernel,
                     SlotSet& S, bool p1) {
  if (!p1) return;
  const double h = b - a;
  const double U = std::min(h, kernel.delta);
  if (U <= 0) return;
  const double beta = kernel.beta();
  const double I = kernel.c_norm *
                   (h * powerMoment(2.0 - beta, 0.0, U) -
                    powerMoment(3.0 - beta, 0.0, U));
  const double mL = -1.0 / h, mR = 1.0 / h;
  S.m[0][0] += mL * mL * I;
  S.m[0][1] += mL * mR * I;
  S.m[1][1] += mR * mR * I;
}

// Distinct intervals, K=[a1,b1] left of K'=[a2,b2].  Substituting u = y-x,
// the inner x-integral P_ij(u) is an exact cubic between the breakpoints
// where the overlap window changes; each piece integrates against u^-beta
// in closed form.  The piece starting at u=0 (shared vertex) is exactly
// c*u^3 for P1 (c*u for P0), so one sample pins it.
void pair1DDistinct(double a1, double b1, double a2, double b2,
                    const KernelSpec& kernel, SlotSet& S, bool p1) {
  const double beta = kernel.beta();
  const double C = kernel.c_norm;
  // Affine data per slot: phi(x) = al + be*x on K, alp + bep*y on K'.
  double al[6] = {}, be[6] = {}, alp[6] = {}, bep[6] = {};
  const double h1 = b1 - a1, h2 = b2 - a2;
  for (int s = 0; s < S.ns; ++s) {
    if (p1) {
      if (S.kIdx[s] == 0) { al[s] = b1 / h1; be[s] = -1.0 / h1; }
      if (S.kIdx[s] == 1) { al[s] = -a1 / h1; be[s] = 1.0 / h1; }
      if (S.kpIdx[s] == 0) { alp[s] = b2 / h2; bep[s] = -1.0 / h2; }
      if (S.kpIdx[s] == 1) { alp[s] = -a2 / h2; bep[s] = 1.0 / h2; }
    } else {
      if (S.kIdx[s] == 0) al[s] = 1.0;
      if (S.kpIdx[s] == 0) alp[s] = 1.0;
    }
  }
  auto evalP = [&](double u, double P[6][6]) {
    const double xlo = std::max(a1, a2 - u), xhi = std::min(b1, b2 - u);
    const double w = xhi - xlo;
    if (w <= 0) return;
    double sv[2][6];
    const double g = 0.5 / std::sqrt(3.0);
    const double xq[2] = {0.5 * (xlo + xhi) - g * w, 0.5 * (xlo + xhi) + g * w};
    for (int q = 0; q < 2; ++q)
      for (int s = 0; s < S.ns; ++s)
        sv[q][s] = (al[s] - alp[s] - bep[s] * u) + (be[s] - bep[s]) * xq[q];
    for (int i = 0; i < S.ns; ++i)
      for (int j = i; j < S.ns; ++j)
        P[i][j] = 0.5 * w * (sv[0][i] * sv[0][j] + sv[1][i] * sv[1][j]);
  };

  const double lo0 = a2 - b1;  // >= 0; == 0 for a shared vertex
  const double end = std::min(b2 - a1, kernel.delta);
  if (end <= lo0) return;
  std::vector<double> brk = {lo0, a2 - a1, b2 - b1, b2 - a1, kernel.delta};
  std::sort(brk.begin(), brk.end());
  const double tiny = 1e-14 * (h1 + h2);

  for (std::size_t p = 0; p + 1 < brk.size(); ++p) {
    double u0 = std::max(brk[p], lo0), u1 = std::min(brk[p + 1], end);
    if (u1 - u0 <= tiny) continue;
    if (u0 <= tiny) {
      // singular sliver: P_ij(u) = c u^nu exactly
      const double nu = p1 ? 3.0 : 1.0;
      const double um = 0.5 * u1;
      double P[6][6] = {};
      evalP(um, P);
      const double M = powerMoment(nu - beta, 0.0, u1);
      const double scale = C * M / std::pow(um, nu);
      for (int i = 0; i < S.ns; ++i)
        for (int j = i; j < S.ns; ++j) S.m[i][j] += scale * P[i][j];
    } else {
      const double w = u1 - u0;
      static const double tq[4] = {0.125, 0.375, 0.625, 0.875};
      double P[4][6][6];
      for (int q = 0; q < 4; ++q) {
        double Pq[6][6] = {};
        evalP(u0 + w * tq[q], Pq);
        for (int i = 0; i < S.ns; ++i)
          for (int j = i; j < S.ns; ++j) P[q][i][j] = Pq[i][j];
      }
      // moments of the shifted basis t^k = ((u-u0)/w)^k against u^-beta
      double Mu[4];
      for (int m = 0; m < 4; ++m) Mu[m] = powerMoment(m - beta, u0, u1);
      double T[4];
      const double binom[4][4] = {
          {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
      for (int k = 0; k < 4; ++k) {
        double acc = 0;
        for (int m = 0; m <= k; ++m)
          acc += binom[k][m] * std::pow(-u0, k - m) * Mu[m];
        T[k] = acc / std::pow(w, k);
      }
      const Eigen::Matrix4d& Vi = cubicFitInverse();
      for (int i = 0; i < S.ns; ++i)
        for (int j = i; j < S.ns; ++j) {
          double add = 0;
          for (int k = 0; k < 4; ++k) {
            double ak = 0;
            for (int q = 0; q < 4; ++q) ak += Vi(k, q) * P[q][i][j];
            add += ak * T[k];
          }
          S.m[i][j] += C * add;
        }
    }
  }
}

// --------------------------------------------------- 2D identical pair, exact

// For x,y in the same triangle K, phi_i(x)-phi_i(y) = grad_i . (x-y), and
//   int_K int_K F(x-y) dy dx = int_{K-K} F(z) |K n (K+z)| dz
// where the translate overlap is a similar triangle of scale 1 - r/R(w):
// shifting by z=rw tightens each edge constraint by r*max(0,-n_e.w), and the
// scale of a triangle with fixed edge normals is affine in the offsets, so
//   1/R(w) = sum_e max(0, -n_e.w) / w_e     (w_e = opposite-vertex height).
// Everything reduces to radial monomial moments, exact in r; the angular
// factor is analytic per active-set arc and integrated by Gauss nodes.
void pair2DIdentical(const Mesh& mesh, Index k, const KernelSpec& kernel,
                     SlotSet& S, bool p1) {
  if (!p1) return;
  const auto& el = mesh.elems[k];
  const Vec2 v[3] = {mesh.vertices[el[0]], mesh.vertices[el[1]],
                     mesh.vertices[el[2]]};
  const double area = mesh.elemMeasure(k);
  const double beta = kernel.beta();
  const double C = kernel.c_norm, delta = kernel.delta;

  Vec2 g[3];  // P1 shape gradients
  {
    const double det = 2.0 * area;
    g[0] = Vec2{(v[1].y - v[2].y) / det, (v[2].x - v[1].x) / det};
    g[1] = Vec2{(v[2].y - v[0].y) / det, (v[0].x - v[2].x) / det};
    g[2] = Vec2{(v[0].y - v[1].y) / det, (v[1].x - v[0].x) / det};
  }
  Vec2 n[3];
  double wd[3];
  for (int e = 0; e < 3; ++e) {
    const Vec2 p = v[e], q = v[(e + 1) % 3], o = v[(e + 2) % 3];
    Vec2 t{q.x - p.x, q.y - p.y};
    const double len = t.norm();
    Vec2 nn{t.y / len, -t.x / len};
    if (nn.x * (o.x - p.x) + nn.y * (o.y - p.y) > 0) nn = Vec2{-nn.x, -nn.y};
    n[e] = nn;
    wd[e] = 2.0 * area / len;
  }
  // active-set arcs: boundaries where some n_e . w changes sign
  std::vector<double> ang;
  for (int e = 0; e < 3; ++e) {
    const double a = std::atan2(n[e].y, n[e].x);
    ang.push_back(a + 0.5 * kPi);
    ang.push_back(a - 0.5 * kPi);
  }
  for (double& a : ang) {
    while (a < 0) a += 2 * kPi;
    while (a >= 2 * kPi) a -= 2 * kPi;
  }
  std::sort(ang.begin(), ang.end());
  ang.push_back(ang.front() + 2 * kPi);

  const GaussRule& gl = gaussLegendre(20);
  for (std::size_t arc = 0; arc + 1 < ang.size(); ++arc) {
    const double t0 = ang[arc], t1 = ang[arc + 1];
    if (t1 - t0 < 1e-14) continue;
    const double tm = 0.5 * (t0 + t1);
    const Vec2 wm{std::cos(tm), std::sin(tm)};
    double A = 0, B = 0;
    for (int e = 0; e < 3; ++e)
      if (n[e].x * wm.x + n[e].y * wm.y < 0) {
        A += -n[e].x / wd[e];
        B += -n[e].y / wd[e];
      }
    // split the arc where R(theta) = 1/(A cos + B sin) crosses delta
    std::vector<double> sub = {t0, t1};
    const double rho = std::hypot(A, B);
    if (rho * delta > 1.0) {
      const double phi0 = std::atan2(B, A), dphi = std::acos(1.0 / (rho * delta));
      for (double cand : {phi0 - dphi, phi0 + dphi})
        for (int shift = -2; shift <= 2; ++shift) {
          const double c = cand + 2 * kPi * shift;
          if (c > t0 + 1e-13 && c < t1 - 1e-13) sub.push_back(c);
        }
      std::sort(sub.begin(), sub.end());
    }
    for (std::size_t s = 0; s + 1 < sub.size(); ++s) {
      const double s0 = sub[s], s1 = sub[s + 1];
      if (s1 - s0 < 1e-14) continue;
      for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
        const double th = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * gl.nodes[q];
        const double wq = 0.5 * (s1 - s0) * gl.weights[q];
        const Vec2 w{std::cos(th), std::sin(th)};
        const double D = A * w.x + B * w.y;
        const double R = 1.0 / D;
        const double U = std::min(R, delta);
        const double M3 = std::pow(U, 4.0 - beta) / (4.0 - beta);
        const double M4 = std::pow(U, 5.0 - beta) / (5.0 - beta);
        const double M5 = std::pow(U, 6.0 - beta) / (6.0 - beta);
        const double rad = M3 - 2.0 * M4 / R + M5 / (R * R);
        const double gw[3] = {g[0].x * w.x + g[0].y * w.y,
                              g[1].x * w.x + g[1].y * w.y,
                              g[2].x * w.x + g[2].y * w.y};
        const double scale = 0.5 * C * area * wq * rad;
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) S.m[i][j] += scale * gw[i] * gw[j];
      }
    }
  }
}

// ------------------------------------------------------- 2D inner integration

// Geometry of the inner element K' plus the affine extensions of its shape
// functions, l_j(y) = c_j + d_j . y.
struct InnerGeom {
  Vec2 v[3];
  double c[3] = {};
  Vec2 d[3] = {{0, 0}, {0, 0}, {0, 0}};
  int ndof = 0;
  double scale = 0;  // element diameter, for tolerances
};

InnerGeom makeInnerGeom(const Mesh& mesh, Index k, bool p1) {
  InnerGeom G;
  const auto& el = mesh.elems[k];
  for (int i = 0; i < 3; ++i) G.v[i] = mesh.vertices[el[i]];
  G.scale = mesh.elemDiameter(k);
  if (p1) {
    G.ndof = 3;
    const double det = 2.0 * mesh.elemMeasure(k);
    const Vec2 grads[3] = {
        {(G.v[1].y - G.v[2].y) / det, (G.v[2].x - G.v[1].x) / det},
        {(G.v[2].y - G.v[0].y) / det, (G.v[0].x - G.v[2].x) / det},
        {(G.v[0].y - G.v[1].y) / det, (G.v[1].x - G.v[0].x) / det}};
    for (int i = 0; i < 3; ++i) {
      G.d[i] = grads[i];
      G.c[i] = (i == 0 ? 1.0 : 0.0) - (grads[i].x * G.v[0].x + grads[i].y * G.v[0].y);
    }
  } else {
    G.ndof = 1;
    G.c[0] = 1.0;
  }
  return G;
}

// For an outer point x strictly outside K', integrate
//   sum_ij s_i(y) s_j(y) gamma(|x-y|)  over  y in K' with |x-y| < delta
// in polar coordinates about x.  With s_i = A_i - r B_i(phi) the radial
// moments are closed-form power integrals over [r_in, min(r_out, delta)],
// so the horizon clip is exact; the angular integrand is analytic between
// breakpoints at vertex directions and at horizon-circle crossings.
void innerAccumulate(const InnerGeom& G, const KernelSpec& kernel, const Vec2& x,
                     const double* Aval, const int* innerSlot, int ns,
                     double Wouter, const GaussRule& gl, double m[6][6]) {
  const double beta = kernel.beta(), delta = kernel.delta;
  double a[3];
  for (int i = 0; i < 3; ++i) a[i] = std::atan2(G.v[i].y - x.y, G.v[i].x - x.x);
  std::sort(a, a + 3);
  for (int rep = 0; rep < 3 && a[2] - a[0] > kPi; ++rep) {
    a[0] += 2 * kPi;
    std::sort(a, a + 3);
  }
  if (a[2] - a[0] > kPi) return;  // x inside or degenerate; not expected

  std::vector<double> brk = {a[0], a[1], a[2]};
  for (int e = 0; e < 3; ++e) {
    const Vec2 p = G.v[e], q = G.v[(e + 1) % 3];
    Vec2 t{q.x - p.x, q.y - p.y};
    const double len = t.norm();
    if (len <= 0) continue;
    Vec2 nn{t.y / len, -t.x / len};
    double dn = nn.x * (p.x - x.x) + nn.y * (p.y - x.y);
    if (dn < 0) {
      nn = Vec2{-nn.x, -nn.y};
      dn = -dn;
    }
    if (dn >= delta) continue;
    const double psi = std::atan2(nn.y, nn.x);
    const double dphi = std::acos(std::min(1.0, dn / delta));
    for (double cand : {psi - dphi, psi + dphi})
      for (int shift = -2; shift <= 2; ++shift) {
        const double c = cand + 2 * kPi * shift;
        if (c > a[0] + 1e-13 && c < a[2] - 1e-13) brk.push_back(c);
      }
  }
  std::sort(brk.begin(), brk.end());

  const double rtol = 1e-14 * G.scale;
  for (std::size_t s = 0; s + 1 < brk.size(); ++s) {
    const double p0 = brk[s], p1 = brk[s + 1];
    if (p1 - p0 < 1e-14) continue;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double phi = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * gl.nodes[q];
      const double wphi = 0.5 * (p1 - p0) * gl.weights[q];
      const Vec2 w{std::cos(phi), std::sin(phi)};
      double rmin = 0, rmax = 0;
      int cnt = 0;
      for (int e = 0; e < 3; ++e) {
        const Vec2 p = G.v[e], qv = G.v[(e + 1) % 3];
        const Vec2 ev{qv.x - p.x, qv.y - p.y};
        const double den = w.x * ev.y - w.y * ev.x;  // w x e
        if (std::abs(den) < 1e-300) continue;
        const Vec2 px{p.x - x.x, p.y - x.y};
        const double r = (px.x * ev.y - px.y * ev.x) / den;
        const double t = (px.x * w.y - px.y * w.x) / den;
        if (t < -1e-12 || t > 1.0 + 1e-12) continue;
        if (r <= rtol) continue;
        if (cnt == 0) {
          rmin = rmax = r;
        } else {
          rmin = std::min(rmin, r);
          rmax = std::max(rmax, r);
        }
        ++cnt;
      }
      if (cnt < 2) continue;
      const double hi = std::min(rmax, delta);
      if (hi <= rmin) continue;
      const double m0 = powerMoment(1.0 - beta, rmin, hi);
      const double m1 = powerMoment(2.0 - beta, rmin, hi);
      const double m2 = powerMoment(3.0 - beta, rmin, hi);
      double B[6];
      for (int i = 0; i < ns; ++i)
        B[i] = innerSlot[i] >= 0
                   ? G.d[innerSlot[i]].x * w.x + G.d[innerSlot[i]].y * w.y
                   : 0.0;
      const double sc = Wouter * wphi * kernel.c_norm;
      for (int i = 0; i < ns; ++i)
        for (int j = i; j < ns; ++j)
          m[i][j] += sc * (Aval[i] * Aval[j] * m0 -
                           (Aval[i] * B[j] + Aval[j] * B[i]) * m1 +
                           B[i] * B[j] * m2);
    }
  }
}

// Shared outer-node handling: barycentric values on K minus the affine
// extension from K' gives A_i; then delegate to the polar inner pass.
struct OuterCtx {
  const Mesh* mesh = nullptr;
  Index k = -1;
  bool p1 = true;
  const InnerGeom* inner = nullptr;
  const KernelSpec* kernel = nullptr;
  SlotSet* S = nullptr;
  const GaussRule* glphi = nullptr;
};

void outerNode(const OuterCtx& ctx, const Vec2& x, double W) {
  const SlotSet& S = *ctx.S;
  double Aval[6];
  std::array<double, 3> lam{};
  if (ctx.p1) lam = barycentric(*ctx.mesh, ctx.k, x);
  int innerSlot[6];
  for (int s = 0; s < S.ns; ++s) {
    double av = 0;
    if (S.kIdx[s] >= 0) av = ctx.p1 ? lam[S.kIdx[s]] : 1.0;
    const int ip = S.kpIdx[s];
    innerSlot[s] = ip;
    if (ip >= 0) av -= ctx.inner->c[ip] + ctx.inner->d[ip].x * x.x +
                       ctx.inner->d[ip].y * x.y;
    Aval[s] = av;
  }
  innerAccumulate(*ctx.inner, *ctx.kernel, x, Aval, innerSlot, S.ns, W,
                  *ctx.glphi, ctx.S->m);
}

// Touching pairs: Duffy-type map on the outer element collapsing at the
// shared simplex, with geometric grading in the collapse coordinate; the
// graded ladder stops once the remaining tail is below roundoff.
void pair2DTouching(const Mesh& mesh, Index ka, Index kb,
                    const std::vector<Index>& sharedIds, const KernelSpec& kernel,
                    const QuadConfig& quad, bool p1, bool clipped, SlotSet& S) {
  const auto& el = mesh.elems[ka];
  const Vec2 v[3] = {mesh.vertices[el[0]], mesh.vertices[el[1]],
                     mesh.vertices[el[2]]};
  const double area = mesh.elemMeasure(ka);
  const double beta = kernel.beta();

  InnerGeom G = makeInnerGeom(mesh, kb, p1);
  const GaussRule glphi =
      gaussLegendre(std::max(10, 2 * quad.regular_rule_order + 2));
  OuterCtx ctx{&mesh, ka, p1, &G, &kernel, &S, &glphi};

  const double expo = (p1 ? 5.0 : 3.0) - beta;
  const int M = std::clamp(static_cast<int>(std::ceil(54.0 / expo)) + 2, 10, 120);
  const int nt = std::max(4, quad.singular_rule_order / 2);
  const int nsCells = clipped ? (1 << std::max(0, quad.clip_subdivision_depth)) : 1;
  const GaussRule& glt = gaussLegendre(nt);
  const GaussRule& gls = gaussLegendre(nt);

  const bool vertexTouch = sharedIds.size() == 1;
  int sharedLocal[2] = {-1, -1};
  {
    int c = 0;
    for (int i = 0; i < 3; ++i)
      for (Index sid : sharedIds)
        if (el[i] == sid) sharedLocal[c++] = i;
  }

  Vec2 V, Aa, Bb, P, Q, R;
  if (vertexTouch) {
    V = v[sharedLocal[0]];
    Aa = v[(sharedLocal[0] + 1) % 3];
    Bb = v[(sharedLocal[0] + 2) % 3];
  } else {
    P = v[sharedLocal[0]];
    Q = v[sharedLocal[1]];
    R = v[3 - sharedLocal[0] - sharedLocal[1]];
  }

  double tHi = 1.0;
  for (int cell = 0; cell < M; ++cell) {
    const double tLo = tHi * 0.5;
    for (std::size_t qt = 0; qt < glt.nodes.size(); ++qt) {
      const double t = 0.5 * (tLo + tHi) + 0.5 * (tHi - tLo) * glt.nodes[qt];
      const double wt = 0.5 * (tHi - tLo) * glt.weights[qt];
      for (int sc = 0; sc < nsCells; ++sc) {
        const double sLo = static_cast<double>(sc) / nsCells;
        const double sW = 1.0 / nsCells;
        for (std::size_t qs = 0; qs < gls.nodes.size(); ++qs) {
          const double s = sLo + sW * (0.5 + 0.5 * gls.nodes[qs]);
          const double ws = sW * 0.5 * gls.weights[qs];
          Vec2 x;
          double jac;
          if (vertexTouch) {
            x = Vec2{(1 - t) * V.x + t * ((1 - s) * Aa.x + s * Bb.x),
                     (1 - t) * V.y + t * ((1 - s) * Aa.y + s * Bb.y)};
            jac = 2.0 * area * t;
          } else {
            x = Vec2{(1 - t) * (P.x + s * (Q.x - P.x)) + t * R.x,
                     (1 - t) * (P.y + s * (Q.y - P.y)) + t * R.y};
            jac = 2.0 * area * (1 - t);
          }
          outerNode(ctx, x, jac * wt * ws);
        }
      }
    }
    tHi = tLo;
  }
}

void subdivideTriangles(std::vector<std::array<Vec2, 3>>& tris, int depth) {
  for (int d = 0; d < depth; ++d) {
    std::vector<std::array<Vec2, 3>> out;
    out.reserve(tris.size() * 4);
    for (const auto& T : tris) {
      const Vec2 m01{0.5 * (T[0].x + T[1].x), 0.5 * (T[0].y + T[1].y)};
      const Vec2 m12{0.5 * (T[1].x + T[2].x), 0.5 * (T[1].y + T[2].y)};
      const Vec2 m20{0.5 * (T[2].x + T[0].x), 0.5 * (T[2].y + T[0].y)};
      out.push_back({T[0], m01, m20});
      out.push_back({m01, T[1], m12});
      out.push_back({m20, m12, T[2]});
      out.push_back({m01, m12, m20});
    }
    tris.swap(out);
  }
}

void pair2DDisjoint(const Mesh& mesh, Index ka, Index kb, double dist,
                    const KernelSpec& kernel, const QuadConfig& quad, bool p1,
                    bool clipped, SlotSet& S) {
  const auto& el = mesh.elems[ka];
  const double diam = std::max(mesh.elemDiameter(ka), mesh.elemDiameter(kb));
  const double rho = dist / diam;
  int extra = 0;
  if (rho < 0.35) extra = 6;
  else if (rho < 1.0) extra = 4;
  else if (rho < 2.5) extra = 2;
  const int degree = quad.regular_rule_order + extra;
  const TriangleRule& rule = triangleRule(degree);

  InnerGeom G = makeInnerGeom(mesh, kb, p1);
  const GaussRule glphi =
      gaussLegendre(std::max(10, 2 * quad.regular_rule_order + 2));
  OuterCtx ctx{&mesh, ka, p1, &G, &kernel, &S, &glphi};

  std::vector<std::array<Vec2, 3>> tris = {
      {mesh.vertices[el[0]], mesh.vertices[el[1]], mesh.vertices[el[2]]}};
  if (clipped) subdivideTriangles(tris, std::max(0, quad.clip_subdivision_depth));

  for (const auto& T : tris) {
    const double a2 =
        0.5 * std::abs((T[1].x - T[0].x) * (T[2].y - T[0].y) -
                       (T[2].x - T[0].x) * (T[1].y - T[0].y));
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& b = rule.bary[q];
      const Vec2 x{b[0] * T[0].x + b[1] * T[1].x + b[2] * T[2].x,
                   b[0] * T[0].y + b[1] * T[1].y + b[2] * T[2].y};
      outerNode(ctx, x, rule.weights[q] * a2);
    }
  }
}

// ------------------------------------------------------------- enumeration

std::vector<Vec2> elemVerts(const Mesh& mesh, Index k) {
  std::vector<Vec2> out;
  const auto& el = mesh.elems[k];
  for (int i = 0; i < (mesh.dim == 1 ? 2 : 3); ++i)
    out.push_back(mesh.vertices[el[i]]);
  return out;
}

double closureDistance(const Mesh& mesh, Index a, Index b) {
  const auto va = elemVerts(mesh, a), vb = elemVerts(mesh, b);
  double best = std::numeric_limits<double>::infinity();
  if (mesh.dim == 1) {
    best = segmentDistance(va[0], va[1], vb[0], vb[1]);
  } else {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        best = std::min(best, segmentDistance(va[i], va[(i + 1) % 3], vb[j],
                                              vb[(j + 1) % 3]));
  }
  return best;
}

double maxVertexDistance(const Mesh& mesh, Index a, Index b) {
  const auto va = elemVerts(mesh, a), vb = elemVerts(mesh, b);
  double best = 0;
  for (const Vec2& p : va)
    for (const Vec2& q : vb) best = std::max(best, dist(p, q));
  return best;
}

std::vector<Index> sharedVertexIds(const Mesh& mesh, Index a, Index b) {
  std::vector<Index> va, vb;
  const int nv = mesh.dim == 1 ? 2 : 3;
  for (int i = 0; i < nv; ++i) va.push_back(mesh.elems[a][i]);
  for (int i = 0; i < nv; ++i) vb.push_back(mesh.elems[b][i]);
  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  std::vector<Index> out;
  std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(),
                        std::back_inserter(out));
  return out;
}

}  // namespace

std::vector<InteractionPair> enumeratePairs(const Mesh& mesh,
                                            const std::vector<Index>& elems,
                                            double delta) {
  require(delta > 0, "horizon must be positive");
  // hash element centroids into bins of size delta + max diameter so that
  // candidate partners always live in the 3^dim neighborhood
  double maxDiam = 0;
  for (Index k : elems) maxDiam = std::max(maxDiam, mesh.elemDiameter(k));
  const double cell = delta + maxDiam + 1e-300;
  std::map<std::pair<long long, long long>, std::vector<Index>> bins;
  auto binOf = [&](const Vec2& p) {
    return std::make_pair(static_cast<long long>(std::floor(p.x / cell)),
                          static_cast<long long>(std::floor(p.y / cell)));
  };
  for (Index k : elems) bins[binOf(mesh.elemCentroid(k))].push_back(k);

  const double cutoff = delta * (1.0 - 1e-12);
  std::vector<InteractionPair> pairs;
  for (Index a : elems) {
    const auto ba = binOf(mesh.elemCentroid(a));
    for (long long di = -1; di <= 1; ++di)
      for (long long dj = -1; dj <= 1; ++dj) {
        if (mesh.dim == 1 && dj != 0) continue;
        const auto it = bins.find({ba.first + di, ba.second + dj});
        if (it == bins.end()) continue;
        for (Index b : it->second) {
          if (b < a) continue;
          InteractionPair P;
          P.elem_a = a;
          P.elem_b = b;
          if (a == b) {
            P.overlap_class = OverlapClass::identical;
          } else {
            const auto shared = sharedVertexIds(mesh, a, b);
            if (shared.size() >= 2) {
              P.overlap_class = OverlapClass::edge_touch;
            } else if (shared.size() == 1) {
              P.overlap_class = OverlapClass::vertex_touch;
            } else {
              if (closureDistance(mesh, a, b) >= cutoff) continue;
              P.overlap_class = OverlapClass::disjoint_within_horizon;
            }
          }
          P.clipped = maxVertexDistance(mesh, a, b) > delta;
          pairs.push_back(P);
        }
      }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const InteractionPair& l, const InteractionPair& r) {
              return std::tie(l.elem_a, l.elem_b) < std::tie(r.elem_a, r.elem_b);
            });
  return pairs;
}

std::vector<InteractionPair> enumeratePairs(const DomainPartition& partition) {
  std::vector<Index> elems;
  elems.insert(elems.end(), partition.elems_N.begin(), partition.elems_N.end());
  elems.insert(elems.end(), partition.elems_NI.begin(), partition.elems_NI.end());
  elems.insert(elems.end(), partition.elems_gI.begin(), partition.elems_gI.end());
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  return enumeratePairs(*partition.mesh, elems, partition.delta);
}

namespace {

void processPair(const FESpace& space, const KernelSpec& kernel,
                 const QuadConfig& quad, const InteractionPair& P,
                 std::vector<Triplet>& out) {
  const Mesh& mesh = *space.mesh;
  const bool p1 = space.kind == SpaceKind::P1;
  const int nd = space.dofsPerElem();

  SlotSet S;
  S.addOuter(space.elementDofs(P.elem_a), nd);
  if (P.elem_b != P.elem_a) S.addInner(space.elementDofs(P.elem_b), nd);
  else if (P.overlap_class == OverlapClass::identical && !p1)
    return;  // piecewise constants: no same-element contribution

  if (mesh.dim == 1) {
    const auto& ea = mesh.elems[P.elem_a];
    const auto& eb = mesh.elems[P.elem_b];
    double a1 = mesh.vertices[ea[0]].x, b1 = mesh.vertices[ea[1]].x;
    if (a1 > b1) std::swap(a1, b1);
    if (P.elem_a == P.elem_b) {
      pair1DIdentical(a1, b1, kernel, S, p1);
    } else {
      double a2 = mesh.vertices[eb[0]].x, b2 = mesh.vertices[eb[1]].x;
      if (a2 > b2) std::swap(a2, b2);
      // orient so the outer element sits to the left
      if (a1 <= a2) {
        pair1DDistinct(a1, b1, a2, b2, kernel, S, p1);
      } else {
        // swap roles: slots keep their dofs, k/kp indices exchange
        SlotSet T = S;
        for (int s = 0; s < T.ns; ++s) std::swap(T.kIdx[s], T.kpIdx[s]);
        pair1DDistinct(a2, b2, a1, b1, kernel, T, p1);
        for (int i = 0; i < T.ns; ++i)
          for (int j = i; j < T.ns; ++j) S.m[i][j] = T.m[i][j];
      }
    }
  } else {
    switch (P.overlap_class) {
      case OverlapClass::identical:
        pair2DIdentical(mesh, P.elem_a, kernel, S, p1);
        break;
      case OverlapClass::vertex_touch:
      case OverlapClass::edge_touch:
        pair2DTouching(mesh, P.elem_a, P.elem_b,
                       sharedVertexIds(mesh, P.elem_a, P.elem_b), kernel, quad,
                       p1, P.clipped, S);
        break;
      case OverlapClass::disjoint_within_horizon:
        pair2DDisjoint(mesh, P.elem_a, P.elem_b,
                       closureDistance(mesh, P.elem_a, P.elem_b), kernel, quad,
                       p1, P.clipped, S);
        break;
    }
  }
  S.scatter(out);
}

}  // namespace

SparseOperator assembleNonlocalStiffness(const FESpace& space,
                                         const KernelSpec& kernel,
                                         const QuadConfig& quad) {
  const Mesh& mesh = *space.mesh;
  require(kernel.d == mesh.dim, "kernel dimension must match the mesh");
  require(kernel.delta > 0, "kernel horizon must be positive");
  if (space.kind == SpaceKind::P0) {
    const double betaMax = mesh.dim == 1 ? 2.0 : 3.0;
    require(kernel.beta() < betaMax,
            "piecewise-constant space needs kernel exponent below d+1");
  }

  const auto pairs = enumeratePairs(mesh, space.elems, kernel.delta);

  const int chunkSize = 256;
  const int nchunks =
      static_cast<int>((pairs.size() + chunkSize - 1) / chunkSize);
  std::vector<std::vector<Triplet>> buf(nchunks);
  auto work = [&](int c) {
    const std::size_t lo = static_cast<std::size_t>(c) * chunkSize;
    const std::size_t hi = std::min(pairs.size(), lo + chunkSize);
    for (std::size_t i = lo; i < hi; ++i)
      processPair(space, kernel, quad, pairs[i], buf[c]);
  };
  const int nthreads = std::max(1, quad.threads);
  if (nthreads == 1 || nchunks <= 1) {
    for (int c = 0; c < nchunks; ++c) work(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(nthreads, nchunks); ++t)
      pool.emplace_back([&] {
        int c;
        while ((c = next.fetch_add(1)) < nchunks) work(c);
      });
    for (auto& th : pool) th.join();
  }
  std::vector<Triplet> trips;
  std::size_t total = 0;
  for (const auto& b : buf) total += b.size();
  trips.reserve(total);
  for (const auto& b : buf) trips.insert(trips.end(), b.begin(), b.end());
  return operatorFromTriplets(space.numDofs(), space.numDofs(), trips,
                              "nonlocal", "nonlocal");
}

NonlocalBlocks eliminateVolumeCondition(const SparseOperator& A_full,
                                        const Eigen::VectorXd& f_full,
                                        const DofPartition& dofs,
                                        const ScalarField& g) {
  require(A_full.rows() == static_cast<Index>(dofs.nonlocal_coords.size()),
          "operator size must match the nonlocal DOF set");
  require(f_full.size() == A_full.rows(),
          "load vector size must match the nonlocal DOF set");
  NonlocalBlocks out;
  out.A_NN = SparseOperator{extractBlock(A_full.mat, dofs.I_N, dofs.I_N), "N", "N"};
  out.A_NNI =
      SparseOperator{extractBlock(A_full.mat, dofs.I_N, dofs.I_NI), "N", "NI"};
  out.A_NgI =
      SparseOperator{extractBlock(A_full.mat, dofs.I_N, dofs.I_gI), "N", "gI"};
  out.f_N.resize(static_cast<Eigen::Index>(dofs.I_N.size()));
  for (std::size_t i = 0; i < dofs.I_N.size(); ++i)
    out.f_N[static_cast<Eigen::Index>(i)] = f_full[dofs.I_N[i]];
  out.g.resize(static_cast<Eigen::Index>(dofs.I_gI.size()));
  for (std::size_t i = 0; i < dofs.I_gI.size(); ++i) {
    out.g[static_cast<Eigen::Index>(i)] =
        g(dofs.nonlocal_coords[dofs.I_gI[i]]);
    require(std::isfinite(out.g[static_cast<Eigen::Index>(i)]),
            "volume-condition data must be finite at DOF locations");
  }
  out.rhs = out.f_N - out.A_NgI.mat * out.g;
  return out;
}

}  // namespace ltn
