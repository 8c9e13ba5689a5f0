#pragma once

// Domain shapes and their signed distance functions.
//
// The grid builder accepts a lattice point x iff the surrounding cube of side
// 4h fits inside the domain, tested conservatively as sdf(x) > 2*sqrt(3)*h.
// That test is only sound if the signed distance is the *exact* Euclidean
// distance to the boundary (an underestimating "bound" would pass points it
// must not), so each shape here implements the exact distance:
//   - ball: trivial;
//   - rounded box: Minkowski sum of a box and a ball, classic closed form;
//   - ellipsoid: nearest-point parameter solved by bisection, with the
//     degenerate short-axis branch handled explicitly.
// Convention: sdf > 0 inside the domain, < 0 outside, = 0 on the boundary.

#include <algorithm>
#include <limits>
#include <string>

#include "chorin/common.hpp"

namespace chorin {

struct DomainSpec {
  enum class Kind { ball, ellipsoid, rounded_box, torus };
  Kind kind = Kind::ball;
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 1.0;                 // ball
  Vec3 semiaxes{1.0, 1.0, 1.0};        // ellipsoid
  Vec3 half_extents{1.0, 1.0, 1.0};    // rounded_box
  double corner_radius = 0.25;         // rounded_box
  int torus_n = 0;                     // torus: points per axis, h = 1/N

  static DomainSpec ball(const Vec3& c, double r) {
    if (!(r > 0.0)) throw ConfigError("domain.radius must be > 0");
    DomainSpec s;
    s.kind = Kind::ball;
    s.center = c;
    s.radius = r;
    return s;
  }
  static DomainSpec ellipsoid(const Vec3& c, const Vec3& ax) {
    for (double a : ax)
      if (!(a > 0.0)) throw ConfigError("domain.semiaxes must be > 0");
    DomainSpec s;
    s.kind = Kind::ellipsoid;
    s.center = c;
    s.semiaxes = ax;
    return s;
  }
  static DomainSpec rounded_box(const Vec3& c, const Vec3& he, double r) {
    for (double a : he)
      if (!(a > 0.0)) throw ConfigError("domain.half_extents must be > 0");
    if (!(r > 0.0)) throw ConfigError("domain.corner_radius must be > 0");
    if (r > std::min({he[0], he[1], he[2]}))
      throw ConfigError("domain.corner_radius must not exceed the smallest half extent");
    DomainSpec s;
    s.kind = Kind::rounded_box;
    s.center = c;
    s.half_extents = he;
    s.corner_radius = r;
    return s;
  }
  static DomainSpec torus(int n) {
    if (n < 4) throw InvalidNError("torus requires N >= 4, got N = " + std::to_string(n));
    DomainSpec s;
    s.kind = Kind::torus;
    s.torus_n = n;
    return s;
  }

  bool is_torus() const { return kind == Kind::torus; }

  // Axis-aligned bounding half-widths around `center` (shapes only).
  Vec3 bounding_half_widths() const {
    switch (kind) {
      case Kind::ball:
        return {radius, radius, radius};
      case Kind::ellipsoid:
        return semiaxes;
      case Kind::rounded_box:
        return half_extents;
      case Kind::torus:
        break;
    }
    throw ConfigError("torus has no bounding box");
  }
};

namespace detail {

// Exact signed distance to a box of half-extents b centered at the origin
// (negative inside).  Standard two-part form: outside distance from the
// clamped corner offset, inside distance from the deepest face.
inline double box_outward_distance(const Vec3& p, const Vec3& b) {
  Vec3 q{std::abs(p[0]) - b[0], std::abs(p[1]) - b[1], std::abs(p[2]) - b[2]};
  const double qmax = std::max({q[0], q[1], q[2]});
  Vec3 qpos{std::max(q[0], 0.0), std::max(q[1], 0.0), std::max(q[2], 0.0)};
  return norm(qpos) + std::min(qmax, 0.0);
}

// Exact distance from point y (relative to center) to the ellipsoid surface
// sum (x_i/a_i)^2 = 1.  The nearest surface point has the KKT form
// x_i = a_i^2 y_i / (t + a_i^2); t solves F(t) = sum (a_i y_i/(t+a_i^2))^2 = 1
// on (t_low, inf) where t_low is the largest pole among axes with y_i != 0.
// If the shortest axis has y_i = 0, the nearest point may leave that
// coordinate plane: when F(-a_min^2) < 1 the minimizer sits at t = -a_min^2
// with the free component filling the slack, handled as a separate branch.
inline double ellipsoid_surface_distance(Vec3 y, const Vec3& a) {
  for (auto& c : y) c = std::abs(c);
  const double amin = std::min({a[0], a[1], a[2]});

  double t_low = -std::numeric_limits<double>::infinity();
  bool all_zero = true;
  for (int i = 0; i < 3; ++i) {
    if (y[i] > 0.0) {
      all_zero = false;
      t_low = std::max(t_low, -a[i] * a[i]);
    }
  }
  if (all_zero) return amin;  // center: nearest point lies along the shortest axis

  const auto F = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (y[i] == 0.0) continue;
      const double r = a[i] * y[i] / (t + a[i] * a[i]);
      s += r * r;
    }
    return s;
  };

  // Degenerate branch: shortest axis unconstrained and slack available there.
  const double t_hat = -amin * amin;
  if (t_hat > t_low) {
    double slack = 1.0, d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (y[i] == 0.0) continue;
      const double xi = a[i] * a[i] * y[i] / (a[i] * a[i] - amin * amin);
      slack -= (xi / a[i]) * (xi / a[i]);
      d2 += (xi - y[i]) * (xi - y[i]);
    }
    if (slack > 0.0) return std::sqrt(d2 + amin * amin * slack);
    // else F(t_hat) >= 1: the regular root lies in [t_hat, inf)
  }

  // Bracket the root of F(t) = 1.  F decreases from +inf at t_low+ to 0.
  const double scale = std::max({a[0], a[1], a[2], norm(y)});
  double lo = (t_hat > t_low && F(t_hat) >= 1.0) ? t_hat : t_low;
  double hi = std::max(0.0, t_low) + scale * (norm(y) + scale);
  while (F(hi) > 1.0) hi = t_low + 2.0 * (hi - t_low);
  if (lo == t_low) {
    // Walk off the pole until F is finite and above 1.
    double step = (hi - t_low) * 0.5;
    lo = t_low + step;
    while (F(lo) < 1.0) {
      step *= 0.5;
      lo = t_low + step;
      if (step < 1e-300) break;
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-17 * (std::abs(lo) + std::abs(hi) + 1e-30); ++it) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) > 1.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double xi = (y[i] == 0.0) ? 0.0 : a[i] * a[i] * y[i] / (t + a[i] * a[i]);
    d2 += (xi - y[i]) * (xi - y[i]);
  }
  return std::sqrt(d2);
}

}  // namespace detail

// Exact signed distance to the domain boundary; positive inside.
inline double signed_distance(const DomainSpec& spec, const Vec3& x) {
  const Vec3 p = x - spec.center;
  switch (spec.kind) {
    case DomainSpec::Kind::ball:
      return spec.radius - norm(p);
    case DomainSpec::Kind::rounded_box: {
      const double r = spec.corner_radius;
      const Vec3 inner{spec.half_extents[0] - r, spec.half_extents[1] - r,
                       spec.half_extents[2] - r};
      return r - detail::box_outward_distance(p, inner);
    }
    case DomainSpec::Kind::ellipsoid: {
      const Vec3& a = spec.semiaxes;
      double inside_q = 0.0;
      for (int i = 0; i < 3; ++i) inside_q += (p[i] / a[i]) * (p[i] / a[i]);
      const double d = detail::ellipsoid_surface_distance(p, a);
      return inside_q <= 1.0 ? d : -d;
    }
    case DomainSpec::Kind::torus:
      break;
  }
  throw ConfigError("signed_distance is undefined for the torus");
}

}  // namespace chorin
