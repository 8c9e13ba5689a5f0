#pragma once

// Manufactured divergence-free solutions with closed-form derivatives, used
// to build forcing terms f = v_t + (v.grad)v - nu lap v + grad p whose exact
// solution is known.  Two families:
//
//  - torus_trig: smooth periodic shear triple on the unit torus; each
//    component is independent of its own coordinate, so point samples and
//    cell averages are discretely divergence free for the central operators.
//  - ball_swirl: curl(psi e^k) with psi = (R^2 - r^2)^2, a polynomial swirl
//    that vanishes on the sphere r = R.  The three axes give mutually
//    L2-orthogonal fields with ||.||^2 = 1024 pi R^9 / 945 each.
//  - ball_bump: curl(psi e^3) with psi = (rho^2 - r^2)^5 cut off at r = rho,
//    a compactly supported swirl that is exactly C^3 across r = rho and
//    identically zero outside.  Because staircase approximations of a domain
//    carry an O(h) erosion of the boundary, a study on coarse grids needs a
//    velocity that vanishes beyond every level's eroded boundary, not just on
//    the true sphere; choose rho accordingly.
//
// All carry the time factor s(t) = 1 + sin(2 pi t)/2 (period one).

#include <functional>

#include "chorin/common.hpp"

namespace chorin {

struct ManufacturedSolution {
  std::function<Vec3(double, const Vec3&)> v;      // velocity
  std::function<Vec3(double, const Vec3&)> v_t;    // time derivative
  std::function<std::array<Vec3, 3>(double, const Vec3&)> grad_v;  // [i][j] = d v_i / d x_j
  std::function<Vec3(double, const Vec3&)> lap_v;  // componentwise Laplacian
  std::function<double(double, const Vec3&)> p;    // pressure
  std::function<Vec3(double, const Vec3&)> grad_p;

  Vec3 forcing(double nu, double t, const Vec3& x) const {
    const Vec3 vt = v_t(t, x);
    const Vec3 vv = v(t, x);
    const auto gv = grad_v(t, x);
    const Vec3 lv = lap_v(t, x);
    const Vec3 gp = grad_p(t, x);
    Vec3 f;
    for (int i = 0; i < 3; ++i) {
      double conv = 0.0;
      for (int j = 0; j < 3; ++j)
        conv += vv[static_cast<size_t>(j)] * gv[static_cast<size_t>(i)][static_cast<size_t>(j)];
      f[static_cast<size_t>(i)] = vt[static_cast<size_t>(i)] + conv -
                                  nu * lv[static_cast<size_t>(i)] + gp[static_cast<size_t>(i)];
    }
    return f;
  }
  // Forcing as a space-time closure bound to a fixed viscosity.
  std::function<Vec3(double, const Vec3&)> forcing_fn(double nu) const {
    return [this, nu](double t, const Vec3& x) { return forcing(nu, t, x); };
  }
};

namespace detail {
inline double s_of_t(double t) { return 1.0 + 0.5 * std::sin(2.0 * kPi * t); }
inline double ds_of_t(double t) { return kPi * std::cos(2.0 * kPi * t); }
inline constexpr int levi_civita(int i, int j, int k) {
  return (i == j || j == k || i == k) ? 0
         : ((j - i + 3) % 3 == 1 ? 1 : -1);  // cyclic (i,j,k) -> +1
}
}  // namespace detail

// Periodic shear triple on the unit torus, amplitude `amp`:
//   v1 = s(t) amp sin(2 pi x2) cos(2 pi x3)   (and cyclic),
//   p  = s(t) amp sin(2 pi x1) sin(2 pi x2) sin(2 pi x3).
inline ManufacturedSolution torus_trig(double amp) {
  using detail::ds_of_t;
  using detail::s_of_t;
  const double w = 2.0 * kPi;
  ManufacturedSolution m;
  auto raw = [w](const Vec3& x) -> Vec3 {
    return {std::sin(w * x[1]) * std::cos(w * x[2]), std::sin(w * x[2]) * std::cos(w * x[0]),
            std::sin(w * x[0]) * std::cos(w * x[1])};
  };
  m.v = [amp, raw](double t, const Vec3& x) -> Vec3 {
    const Vec3 r = raw(x);
    const double a = amp * s_of_t(t);
    return {a * r[0], a * r[1], a * r[2]};
  };
  m.v_t = [amp, raw](double t, const Vec3& x) -> Vec3 {
    const Vec3 r = raw(x);
    const double a = amp * ds_of_t(t);
    return {a * r[0], a * r[1], a * r[2]};
  };
  m.grad_v = [amp, w](double t, const Vec3& x) {
    const double a = amp * s_of_t(t);
    std::array<Vec3, 3> g{};
    // v1 depends on x2, x3
    g[0][1] = a * w * std::cos(w * x[1]) * std::cos(w * x[2]);
    g[0][2] = -a * w * std::sin(w * x[1]) * std::sin(w * x[2]);
    // v2 depends on x3, x1
    g[1][2] = a * w * std::cos(w * x[2]) * std::cos(w * x[0]);
    g[1][0] = -a * w * std::sin(w * x[2]) * std::sin(w * x[0]);
    // v3 depends on x1, x2
    g[2][0] = a * w * std::cos(w * x[0]) * std::cos(w * x[1]);
    g[2][1] = -a * w * std::sin(w * x[0]) * std::sin(w * x[1]);
    return g;
  };
  m.lap_v = [amp, raw, w](double t, const Vec3& x) -> Vec3 {
    const Vec3 r = raw(x);
    const double a = -2.0 * w * w * amp * s_of_t(t);
    return {a * r[0], a * r[1], a * r[2]};
  };
  m.p = [amp, w](double t, const Vec3& x) {
    return amp * s_of_t(t) * std::sin(w * x[0]) * std::sin(w * x[1]) * std::sin(w * x[2]);
  };
  m.grad_p = [amp, w](double t, const Vec3& x) -> Vec3 {
    const double a = amp * s_of_t(t) * w;
    const double s1 = std::sin(w * x[0]), c1 = std::cos(w * x[0]);
    const double s2 = std::sin(w * x[1]), c2 = std::cos(w * x[1]);
    const double s3 = std::sin(w * x[2]), c3 = std::cos(w * x[2]);
    return {a * c1 * s2 * s3, a * s1 * c2 * s3, a * s1 * s2 * c3};
  };
  return m;
}

// The axis-k swirl on the ball of radius R centered at the origin:
//   B^k_i(x) = -4 (R^2 - r^2) eps_{ijk} x_j      (curl of (R^2-r^2)^2 e^k).
// Exposed as raw spatial closures for mixing.
inline Vec3 ball_swirl_value(int k, double R, const Vec3& x) {
  const double r2 = dot(x, x);
  const double w = R * R - r2;
  Vec3 out{0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int e = detail::levi_civita(i, j, k);
      if (e != 0) out[static_cast<size_t>(i)] += -4.0 * w * e * x[static_cast<size_t>(j)];
    }
  return out;
}

// Mixed swirl a B^1 + b B^2 + c B^3 with the common time factor s(t) and the
// polynomial pressure p = s(t) x1 x2 x3.
inline ManufacturedSolution ball_swirl_mix(double R, double a, double b, double c) {
  using detail::ds_of_t;
  using detail::levi_civita;
  using detail::s_of_t;
  const std::array<double, 3> coef{a, b, c};
  auto raw = [R, coef](const Vec3& x) -> Vec3 {
    Vec3 out{0.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      if (coef[static_cast<size_t>(k)] == 0.0) continue;
      const Vec3 bk = ball_swirl_value(k, R, x);
      out = out + coef[static_cast<size_t>(k)] * bk;
    }
    return out;
  };
  ManufacturedSolution m;
  m.v = [raw](double t, const Vec3& x) -> Vec3 {
    const Vec3 r = raw(x);
    const double s = s_of_t(t);
    return {s * r[0], s * r[1], s * r[2]};
  };
  m.v_t = [raw](double t, const Vec3& x) -> Vec3 {
    const Vec3 r = raw(x);
    const double s = ds_of_t(t);
    return {s * r[0], s * r[1], s * r[2]};
  };
  m.grad_v = [R, coef](double t, const Vec3& x) {
    // d/dx_m [ -4 w eps_{ijk} x_j ] = 8 x_m eps_{ijk} x_j - 4 w eps_{imk}
    const double s = s_of_t(t);
    const double w = R * R - dot(x, x);
    std::array<Vec3, 3> g{};
    for (int k = 0; k < 3; ++k) {
      const double ck = coef[static_cast<size_t>(k)];
      if (ck == 0.0) continue;
      for (int i = 0; i < 3; ++i) {
        double exj = 0.0;
        for (int j = 0; j < 3; ++j) exj += levi_civita(i, j, k) * x[static_cast<size_t>(j)];
        for (int mm = 0; mm < 3; ++mm)
          g[static_cast<size_t>(i)][static_cast<size_t>(mm)] +=
              s * ck * (8.0 * x[static_cast<size_t>(mm)] * exj - 4.0 * w * levi_civita(i, mm, k));
      }
    }
    return g;
  };
  m.lap_v = [coef](double t, const Vec3& x) -> Vec3 {
    // lap of -4 w eps_{ijk} x_j is 40 eps_{ijk} x_j
    const double s = s_of_t(t);
    Vec3 out{0.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      const double ck = coef[static_cast<size_t>(k)];
      if (ck == 0.0) continue;
      for (int i = 0; i < 3; ++i) {
        double exj = 0.0;
        for (int j = 0; j < 3; ++j) exj += levi_civita(i, j, k) * x[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] += s * ck * 40.0 * exj;
      }
    }
    return out;
  };
  m.p = [](double t, const Vec3& x) { return s_of_t(t) * x[0] * x[1] * x[2]; };
  m.grad_p = [](double t, const Vec3& x) -> Vec3 {
    const double s = s_of_t(t);
    return {s * x[1] * x[2], s * x[0] * x[2], s * x[0] * x[1]};
  };
  return m;
}

// Compactly supported swirl: v = curl(psi e^3) with psi = amp (rho^2 - r^2)^5
// inside r < rho and psi = 0 outside, paired with the harmonic pressure
// p = s(t) x1 x2 x3.  The fifth power makes v exactly C^3 across r = rho
// (third derivatives carry a factor rho^2 - r^2 and vanish there; fourth
// derivatives jump), and v is quartically flat at the support edge, so its
// values stay negligible under the O(h) wobble of a staircase boundary.
// Choose rho small enough that the support clears the eroded boundary of
// every grid level in a study.
//
// With w = max(rho^2 - r^2, 0) and a = 10 amp s(t):
//   v        = a w^4 (-x2, x1, 0)
//   dv1/dxj  = -a (d_{2j} w^4 - 8 x2 xj w^3),  dv2/dxj mirrored in 1 <-> 2
//   lap v    = a (48 w^2 r^2 - 40 w^3) (-x2, x1, 0)
inline ManufacturedSolution ball_bump(double rho, double amp) {
  using detail::ds_of_t;
  using detail::s_of_t;
  const double rho2 = rho * rho;
  ManufacturedSolution m;
  m.v = [rho2, amp](double t, const Vec3& x) -> Vec3 {
    const double w = rho2 - dot(x, x);
    if (w <= 0.0) return {0.0, 0.0, 0.0};
    const double c = 10.0 * amp * s_of_t(t) * w * w * w * w;
    return {-c * x[1], c * x[0], 0.0};
  };
  m.v_t = [rho2, amp](double t, const Vec3& x) -> Vec3 {
    const double w = rho2 - dot(x, x);
    if (w <= 0.0) return {0.0, 0.0, 0.0};
    const double c = 10.0 * amp * ds_of_t(t) * w * w * w * w;
    return {-c * x[1], c * x[0], 0.0};
  };
  m.grad_v = [rho2, amp](double t, const Vec3& x) {
    std::array<Vec3, 3> g{};
    const double w = rho2 - dot(x, x);
    if (w <= 0.0) return g;
    const double a = 10.0 * amp * s_of_t(t);
    const double w3 = w * w * w;
    const double w4 = w3 * w;
    for (int j = 0; j < 3; ++j) {
      const double xj = x[static_cast<size_t>(j)];
      g[0][static_cast<size_t>(j)] = -a * ((j == 1 ? w4 : 0.0) - 8.0 * x[1] * xj * w3);
      g[1][static_cast<size_t>(j)] = a * ((j == 0 ? w4 : 0.0) - 8.0 * x[0] * xj * w3);
    }
    return g;
  };
  m.lap_v = [rho2, amp](double t, const Vec3& x) -> Vec3 {
    const double r2 = dot(x, x);
    const double w = rho2 - r2;
    if (w <= 0.0) return {0.0, 0.0, 0.0};
    const double a = 10.0 * amp * s_of_t(t);
    const double q = 48.0 * w * w * r2 - 40.0 * w * w * w;
    return {-a * x[1] * q, a * x[0] * q, 0.0};
  };
  m.p = [](double t, const Vec3& x) { return s_of_t(t) * x[0] * x[1] * x[2]; };
  m.grad_p = [](double t, const Vec3& x) -> Vec3 {
    const double s = s_of_t(t);
    return {s * x[1] * x[2], s * x[0] * x[2], s * x[0] * x[1]};
  };
  return m;
}

// ||B^k||_{L2(ball R)}^2, the same for each axis.
inline double ball_swirl_l2_sq(double R) { return 1024.0 * kPi * std::pow(R, 9) / 945.0; }

}  // namespace chorin
