#pragma once

// Scalar and 3-vector grid functions with zero-extension-outside semantics,
// discrete L2 inner products, and sampling of continuum functions.
//
// Values are stored densely per grid ordinal.  Reads at absent lattice sites
// go through the grid's neighbor tables and yield 0 on Dirichlet grids
// (the zero extension the difference operators rely on); torus lookups wrap.

#include <functional>
#include <vector>

#include "chorin/grid.hpp"

namespace chorin {

struct ScalarField {
  const Grid* g = nullptr;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid& grid) : g(&grid), v(static_cast<size_t>(grid.n()), 0.0) {}
  double& operator[](int p) { return v[static_cast<size_t>(p)]; }
  double operator[](int p) const { return v[static_cast<size_t>(p)]; }
  // Value at ordinal q, treating q < 0 as "outside" (zero extension).
  double at(int q) const { return q < 0 ? 0.0 : v[static_cast<size_t>(q)]; }
};

struct VectorField {
  const Grid* g = nullptr;
  std::array<std::vector<double>, 3> comp;

  VectorField() = default;
  explicit VectorField(const Grid& grid) : g(&grid) {
    for (auto& c : comp) c.assign(static_cast<size_t>(grid.n()), 0.0);
  }
  double& operator()(int i, int p) { return comp[static_cast<size_t>(i)][static_cast<size_t>(p)]; }
  double operator()(int i, int p) const {
    return comp[static_cast<size_t>(i)][static_cast<size_t>(p)];
  }
  double at(int i, int q) const {
    return q < 0 ? 0.0 : comp[static_cast<size_t>(i)][static_cast<size_t>(q)];
  }
  Vec3 vec(int p) const {
    return {comp[0][static_cast<size_t>(p)], comp[1][static_cast<size_t>(p)],
            comp[2][static_cast<size_t>(p)]};
  }
};

inline void require_same_grid(const Grid* a, const Grid* b) {
  if (a == nullptr || b == nullptr || a != b)
    throw GridMismatchError("fields live on different grids");
}

// ---------------------------------------------------------------------------
// Inner products and norms:  (u,v) = sum_x u(x).v(x) h^3  over all of the grid.
// Sums run in ordinal order: reproducibility beats vectorized reductions here.
// ---------------------------------------------------------------------------

inline double inner(const ScalarField& u, const ScalarField& w) {
  require_same_grid(u.g, w.g);
  double s = 0.0;
  const size_t n = u.v.size();
  for (size_t p = 0; p < n; ++p) s += u.v[p] * w.v[p];
  return s * u.g->h * u.g->h * u.g->h;
}

inline double inner(const VectorField& u, const VectorField& w) {
  require_same_grid(u.g, w.g);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto& a = u.comp[static_cast<size_t>(i)];
    const auto& b = w.comp[static_cast<size_t>(i)];
    double si = 0.0;
    for (size_t p = 0; p < a.size(); ++p) si += a[p] * b[p];
    s += si;
  }
  return s * u.g->h * u.g->h * u.g->h;
}

inline double l2_norm(const ScalarField& u) { return std::sqrt(std::max(0.0, inner(u, u))); }
inline double l2_norm(const VectorField& u) { return std::sqrt(std::max(0.0, inner(u, u))); }

inline double linf_norm(const ScalarField& u) {
  double m = 0.0;
  for (double x : u.v) m = std::max(m, std::abs(x));
  return m;
}
inline double linf_norm(const VectorField& u) {
  double m = 0.0;
  for (const auto& c : u.comp)
    for (double x : c) m = std::max(m, std::abs(x));
  return m;
}

// sum over a point subset of |u(x)|^2 h^3
inline double l2_sq_subset(const ScalarField& u, const std::vector<std::int32_t>& pts) {
  double s = 0.0;
  for (int p : pts) s += u[p] * u[p];
  return s * u.g->h * u.g->h * u.g->h;
}
inline double l2_sq_subset(const VectorField& u, const std::vector<std::int32_t>& pts) {
  double s = 0.0;
  for (int p : pts) {
    const Vec3 a = u.vec(p);
    s += dot(a, a);
  }
  return s * u.g->h * u.g->h * u.g->h;
}

// Elementwise helpers (same grid required).
inline void add_scaled(VectorField& dst, double s, const VectorField& src) {
  require_same_grid(dst.g, src.g);
  for (int i = 0; i < 3; ++i)
    for (size_t p = 0; p < dst.comp[static_cast<size_t>(i)].size(); ++p)
      dst.comp[static_cast<size_t>(i)][p] += s * src.comp[static_cast<size_t>(i)][p];
}
inline void scale(VectorField& u, double s) {
  for (auto& c : u.comp)
    for (double& x : c) x *= s;
}
inline VectorField difference(const VectorField& a, const VectorField& b) {
  require_same_grid(a.g, b.g);
  VectorField d(*a.g);
  for (int i = 0; i < 3; ++i)
    for (size_t p = 0; p < d.comp[static_cast<size_t>(i)].size(); ++p)
      d.comp[static_cast<size_t>(i)][p] =
          a.comp[static_cast<size_t>(i)][p] - b.comp[static_cast<size_t>(i)][p];
  return d;
}

// ---------------------------------------------------------------------------
// Sampling of continuum functions.
// ---------------------------------------------------------------------------

enum class SampleMode { interior_only, all };

// 2-point Gauss nodes on [-1/2, 1/2] (cells are x + h*[-1/2,1/2]^3).
inline constexpr double kGauss2 = 0.28867513459481288225457439025098;  // 1/(2 sqrt 3)

// Point samples fn(x) at every grid point (or zeroed outside the interior).
template <class F>
ScalarField sample_point(const Grid& g, F&& fn, SampleMode mode = SampleMode::all) {
  ScalarField out(g);
  for (int p = 0; p < g.n(); ++p) {
    if (mode == SampleMode::interior_only && !g.is_interior(p)) continue;
    out[p] = fn(g.coords(p));
  }
  return out;
}

template <class F>
VectorField sample_point_vec(const Grid& g, F&& fn, SampleMode mode = SampleMode::all) {
  VectorField out(g);
  for (int p = 0; p < g.n(); ++p) {
    if (mode == SampleMode::interior_only && !g.is_interior(p)) continue;
    const Vec3 val = fn(g.coords(p));
    for (int i = 0; i < 3; ++i) out(i, p) = val[static_cast<size_t>(i)];
  }
  return out;
}

// Cell averages h^-3 int_{C_h(x)} fn, by tensor 2-point Gauss (8 nodes):
// exact for trilinear integrands, which is all the first-order data
// preparation needs.  interior_only zeroes boundary points, matching the
// initial-data recipe.
template <class F>
VectorField sample_cell_average_vec(const Grid& g, F&& fn, SampleMode mode) {
  VectorField out(g);
  const double o = kGauss2 * g.h;
  for (int p = 0; p < g.n(); ++p) {
    if (mode == SampleMode::interior_only && !g.is_interior(p)) continue;
    const Vec3 c = g.coords(p);
    Vec3 acc{0.0, 0.0, 0.0};
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1})
        for (int s3 : {-1, 1}) {
          const Vec3 val = fn(Vec3{c[0] + s1 * o, c[1] + s2 * o, c[2] + s3 * o});
          acc = acc + val;
        }
    for (int i = 0; i < 3; ++i) out(i, p) = acc[static_cast<size_t>(i)] / 8.0;
  }
  return out;
}

template <class F>
ScalarField sample_cell_average(const Grid& g, F&& fn, SampleMode mode) {
  ScalarField out(g);
  const double o = kGauss2 * g.h;
  for (int p = 0; p < g.n(); ++p) {
    if (mode == SampleMode::interior_only && !g.is_interior(p)) continue;
    const Vec3 c = g.coords(p);
    double acc = 0.0;
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1})
        for (int s3 : {-1, 1})
          acc += fn(Vec3{c[0] + s1 * o, c[1] + s2 * o, c[2] + s3 * o});
    out[p] = acc / 8.0;
  }
  return out;
}

// Space-and-time averaged forcing sample over [t0,t1] x C_h(x): 2-point Gauss
// in time as well, mirroring the double average in the scheme's data.
template <class F>
VectorField sample_cell_time_average_vec(const Grid& g, F&& fn, double t0, double t1,
                                         SampleMode mode = SampleMode::all) {
  VectorField out(g);
  const double o = kGauss2 * g.h;
  const double tm = 0.5 * (t0 + t1);
  const double to = kGauss2 * (t1 - t0);
  for (int p = 0; p < g.n(); ++p) {
    if (mode == SampleMode::interior_only && !g.is_interior(p)) continue;
    const Vec3 c = g.coords(p);
    Vec3 acc{0.0, 0.0, 0.0};
    for (int st : {-1, 1}) {
      const double t = tm + st * to;
      for (int s1 : {-1, 1})
        for (int s2 : {-1, 1})
          for (int s3 : {-1, 1}) {
            const Vec3 val = fn(t, Vec3{c[0] + s1 * o, c[1] + s2 * o, c[2] + s3 * o});
            acc = acc + val;
          }
    }
    for (int i = 0; i < 3; ++i) out(i, p) = acc[static_cast<size_t>(i)] / 16.0;
  }
  return out;
}

// Uniform [-1,1] entries on interior points (zero boundary layer), optionally
// rescaled to a target discrete L2 norm.  Deterministic given the generator
// state; the draw order is component-major then ordinal.
inline VectorField random_interior_field(const Grid& g, Rng& rng, double target_l2 = -1.0) {
  VectorField u(g);
  for (int i = 0; i < 3; ++i)
    for (int p : g.interior_list) u(i, p) = uniform_pm1(rng);
  if (target_l2 >= 0.0) {
    const double n = l2_norm(u);
    if (n > 0.0) scale(u, target_l2 / n);
  }
  return u;
}

inline ScalarField random_scalar_field(const Grid& g, Rng& rng, bool zero_boundary) {
  ScalarField u(g);
  for (int p = 0; p < g.n(); ++p) {
    if (zero_boundary && g.is_boundary(p)) continue;
    u[p] = uniform_pm1(rng);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Piecewise-trilinear interpolation over the 2h cells anchored at one parity
// sublattice: blends the 8 cell corners, reproducing corner values exactly.
// ---------------------------------------------------------------------------

inline double interpolate_trilinear(const ScalarField& u, int sublattice_class, const Vec3& q) {
  const Grid& g = *u.g;
  if (g.kind == GridKind::torus && g.torus_n % 2 == 1)
    throw ConfigError("trilinear sublattice interpolation requires parity sublattices (odd torus has none)");
  if (sublattice_class < 0 || sublattice_class >= 8)
    throw ConfigError("sublattice class must be in 0..7");
  static constexpr int kParity[8][3] = {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0},
                                        {0, 1, 1}, {1, 1, 0}, {1, 0, 1}, {1, 1, 1}};
  Idx3 a;
  Vec3 s;
  for (int i = 0; i < 3; ++i) {
    const int par = kParity[sublattice_class][i];
    const double zi = q[static_cast<size_t>(i)] / g.h;
    int t = static_cast<int>(std::floor(zi));
    if (((t - par) % 2 + 2) % 2 != 0) t -= 1;  // snap down to the class parity
    a[i] = t;
    s[static_cast<size_t>(i)] = (zi - t) / 2.0;
    if (s[static_cast<size_t>(i)] < -1e-12 || s[static_cast<size_t>(i)] > 1.0 + 1e-12)
      throw OutsideCoverageError("query point outside the anchored 2h cell");
  }
  double acc = 0.0;
  for (int c1 = 0; c1 <= 1; ++c1)
    for (int c2 = 0; c2 <= 1; ++c2)
      for (int c3 = 0; c3 <= 1; ++c3) {
        const int p = g.ordinal({a[0] + 2 * c1, a[1] + 2 * c2, a[2] + 2 * c3});
        if (p < 0 || !g.is_core(p))
          throw OutsideCoverageError("2h cell corner is not a core sublattice point");
        const double w1 = c1 ? s[0] : 1.0 - s[0];
        const double w2 = c2 ? s[1] : 1.0 - s[1];
        const double w3 = c3 ? s[2] : 1.0 - s[2];
        acc += w1 * w2 * w3 * u[p];
      }
  return acc;
}

}  // namespace chorin
