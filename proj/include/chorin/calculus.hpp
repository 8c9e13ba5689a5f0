#pragma once

// Matrix-free difference operators on grid fields.
//
// All operators use the zero-extension convention: reads at lattice sites
// outside the point cloud return 0 (periodic wrap on the torus, where no
// site is ever absent).  Central differences D_i are the divergence/gradient
// building blocks; one-sided differences appear in energy balances.

#include "chorin/field.hpp"

namespace chorin {

enum class DiffKind { forward, backward, central, second };

// Apply a one-dimensional difference along `axis` to every grid point.
inline ScalarField diff(const ScalarField& u, int axis, DiffKind kind) {
  const Grid& g = *u.g;
  ScalarField out(g);
  const double h = g.h;
  const int sm = 2 * axis + 0, sp = 2 * axis + 1;
  for (int p = 0; p < g.n(); ++p) {
    const double um = u.at(g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sm)]);
    const double up = u.at(g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)]);
    const double uc = u[p];
    switch (kind) {
      case DiffKind::forward: out[p] = (up - uc) / h; break;
      case DiffKind::backward: out[p] = (uc - um) / h; break;
      case DiffKind::central: out[p] = (up - um) / (2.0 * h); break;
      case DiffKind::second: out[p] = (up - 2.0 * uc + um) / (h * h); break;
    }
  }
  return out;
}

// Central-difference gradient (the discrete gradient used throughout).
inline VectorField gradient(const ScalarField& phi) {
  const Grid& g = *phi.g;
  VectorField out(g);
  for (int i = 0; i < 3; ++i) {
    const int sm = 2 * i + 0, sp = 2 * i + 1;
    for (int p = 0; p < g.n(); ++p) {
      const double um = phi.at(g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sm)]);
      const double up = phi.at(g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)]);
      out(i, p) = (up - um) / (2.0 * g.h);
    }
  }
  return out;
}

// Central-difference divergence.
inline ScalarField divergence(const VectorField& u) {
  const Grid& g = *u.g;
  ScalarField out(g);
  for (int i = 0; i < 3; ++i) {
    const int sm = 2 * i + 0, sp = 2 * i + 1;
    for (int p = 0; p < g.n(); ++p) {
      const double um = u.at(i, g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sm)]);
      const double up = u.at(i, g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)]);
      out[p] += (up - um) / (2.0 * g.h);
    }
  }
  return out;
}

// Seven-point Laplacian.
inline ScalarField laplacian(const ScalarField& u) {
  const Grid& g = *u.g;
  ScalarField out(g);
  const double h2 = g.h * g.h;
  for (int i = 0; i < 3; ++i) {
    const int sm = 2 * i + 0, sp = 2 * i + 1;
    for (int p = 0; p < g.n(); ++p) {
      const double um = u.at(g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sm)]);
      const double up = u.at(g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)]);
      out[p] += (up - 2.0 * u[p] + um) / h2;
    }
  }
  return out;
}

inline VectorField laplacian(const VectorField& u) {
  const Grid& g = *u.g;
  VectorField out(g);
  const double h2 = g.h * g.h;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i) {
      const int sm = 2 * i + 0, sp = 2 * i + 1;
      for (int p = 0; p < g.n(); ++p) {
        const double um = u.at(c, g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sm)]);
        const double up = u.at(c, g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)]);
        out(c, p) += (up - 2.0 * u(c, p) + um) / h2;
      }
    }
  return out;
}

// Skew-averaged advection term
//   (1/2) sum_j [ a_j(x-he^j) D_j w(x-he^j) + a_j(x+he^j) D_j w(x+he^j) ]
// evaluated at interior points (zero at boundary points).  The staggered
// average makes the trilinear form antisymmetric in its last two slots when
// the carrier a is discretely divergence free, which is what keeps the
// implicit momentum step energy-stable.
inline VectorField advect(const VectorField& a, const VectorField& w) {
  require_same_grid(a.g, w.g);
  const Grid& g = *a.g;
  VectorField out(g);
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int c = 0; c < 3; ++c) {
    for (int p : g.interior_list) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) {
        const int sm = 2 * j + 0, sp = 2 * j + 1;
        const int qm = g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sm)];
        const int qp = g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)];
        const int qmm = g.nbr2[static_cast<size_t>(p)][static_cast<size_t>(sm)];
        const int qpp = g.nbr2[static_cast<size_t>(p)][static_cast<size_t>(sp)];
        // D_j w(x-he^j) = (w(x) - w(x-2he^j)) / 2h, carrier taken at x-he^j
        acc += a.at(j, qm) * (w(c, p) - w.at(c, qmm)) * inv2h;
        // D_j w(x+he^j) = (w(x+2he^j) - w(x)) / 2h, carrier taken at x+he^j
        acc += a.at(j, qp) * (w.at(c, qpp) - w(c, p)) * inv2h;
      }
      out(c, p) = 0.5 * acc;
    }
  }
  return out;
}

// sum_j sum_i || D_j^+ u_i ||^2 over the whole grid (dissipation functional).
inline double forward_grad_sq_norm(const VectorField& u) {
  const Grid& g = *u.g;
  const double h3 = g.h * g.h * g.h;
  double s = 0.0;
  for (int j = 0; j < 3; ++j) {
    const int sp = 2 * j + 1;
    for (int c = 0; c < 3; ++c) {
      double sj = 0.0;
      for (int p = 0; p < g.n(); ++p) {
        const double d = (u.at(c, g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)]) -
                          u(c, p)) /
                         g.h;
        sj += d * d;
      }
      s += sj;
    }
  }
  return s * h3;
}

inline double forward_grad_sq_norm(const ScalarField& u) {
  const Grid& g = *u.g;
  const double h3 = g.h * g.h * g.h;
  double s = 0.0;
  for (int j = 0; j < 3; ++j) {
    const int sp = 2 * j + 1;
    double sj = 0.0;
    for (int p = 0; p < g.n(); ++p) {
      const double d =
          (u.at(g.nbr[static_cast<size_t>(p)][static_cast<size_t>(sp)]) - u[p]) / g.h;
      sj += d * d;
    }
    s += sj;
  }
  return s * h3;
}

// (u, grad phi) + (div u, phi): identically zero for the central operators
// with zero extension (no boundary condition needed), so this measures only
// floating-point noise.  Exposed as a structural self-check.
inline double summation_by_parts_residual(const VectorField& u, const ScalarField& phi) {
  require_same_grid(u.g, phi.g);
  const VectorField gp = gradient(phi);
  const ScalarField du = divergence(u);
  return inner(u, gp) + inner(du, phi);
}

}  // namespace chorin
