// Difference-operator tests: exactness on polynomials, the summation-by-parts
// identity, the advection trilinear-form identity with an independent
// re-implementation, and second-order consistency against smooth fields.

#include <catch2/catch_amalgamated.hpp>

#include "chorin/calculus.hpp"
#include "chorin/manufactured.hpp"

using namespace chorin;

namespace {

Grid small_ball() { return build_dirichlet_grid(DomainSpec::ball({0, 0, 0}, 1.0), 0.12); }

// Naive advection evaluation using coordinate arithmetic on the torus,
// sharing no lookup machinery with the library implementation.
Vec3 naive_advect_at(const Grid& g, const VectorField& a, const VectorField& w, Idx3 z) {
  auto wrap = [&](Idx3 q) {
    for (int i = 0; i < 3; ++i) q[i] = ((q[i] % g.torus_n) + g.torus_n) % g.torus_n;
    return q;
  };
  auto aval = [&](int j, Idx3 q) { return a(j, g.ordinal(wrap(q))); };
  auto wval = [&](int c, Idx3 q) { return w(c, g.ordinal(wrap(q))); };
  Vec3 out{0.0, 0.0, 0.0};
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      Idx3 zm = z, zp = z, zmm = z, zpp = z;
      zm[j] -= 1;
      zp[j] += 1;
      zmm[j] -= 2;
      zpp[j] += 2;
      const double dm = (wval(c, z) - wval(c, zmm)) / (2.0 * g.h);
      const double dp = (wval(c, zpp) - wval(c, z)) / (2.0 * g.h);
      acc += aval(j, zm) * dm + aval(j, zp) * dp;
    }
    out[static_cast<size_t>(c)] = 0.5 * acc;
  }
  return out;
}

}  // namespace

// ===========================================================================
// Summation by parts
// ===========================================================================

TEST_CASE("summation by parts is exact for arbitrary fields", "[calculus]") {
  // (u, grad phi) + (div u, phi) vanishes identically for the zero-extended
  // central operators; only roundoff remains.  No boundary condition on
  // either field.
  for (int which = 0; which < 2; ++which) {
    const Grid g = which == 0 ? small_ball() : build_torus_grid(8);
    Rng rng(21 + which);
    for (int k = 0; k < 10; ++k) {
      VectorField u(g);
      ScalarField phi(g);
      for (int p = 0; p < g.n(); ++p) {
        for (int i = 0; i < 3; ++i) u(i, p) = uniform_pm1(rng);
        phi[p] = uniform_pm1(rng);
      }
      const double res = summation_by_parts_residual(u, phi);
      const double tol = 1e-12 * l2_norm(u) * l2_norm(phi) / g.h;
      CHECK(std::abs(res) <= tol);
    }
  }
}

// ===========================================================================
// Polynomial exactness
// ===========================================================================

TEST_CASE("first differences are exact on affine data", "[calculus]") {
  const Grid g = small_ball();
  ScalarField u(g);
  for (int p = 0; p < g.n(); ++p) {
    const Vec3 x = g.coords(p);
    u[p] = 3.0 * x[0] - 2.0 * x[1] + x[2] + 1.0;
  }
  // Interior points have all six neighbors, so no zero-extension artifacts.
  const ScalarField f0 = diff(u, 0, DiffKind::forward);
  const ScalarField b1 = diff(u, 1, DiffKind::backward);
  const ScalarField c2 = diff(u, 2, DiffKind::central);
  for (int p : g.interior_list) {
    CHECK(f0[p] == Catch::Approx(3.0).margin(1e-11));
    CHECK(b1[p] == Catch::Approx(-2.0).margin(1e-11));
    CHECK(c2[p] == Catch::Approx(1.0).margin(1e-11));
  }
}

TEST_CASE("central second differences and the Laplacian are exact on quadratics",
          "[calculus]") {
  const Grid g = small_ball();
  ScalarField q(g);
  for (int p = 0; p < g.n(); ++p) {
    const Vec3 x = g.coords(p);
    q[p] = x[0] * x[0] + 2.0 * x[1] * x[1] - 3.0 * x[2] * x[2];  // harmonic
  }
  const ScalarField d2 = diff(q, 0, DiffKind::second);
  const ScalarField lap = laplacian(q);
  const VectorField grad = gradient(q);
  for (int p : g.interior_list) {
    const Vec3 x = g.coords(p);
    CHECK(d2[p] == Catch::Approx(2.0).margin(1e-9));
    CHECK(lap[p] == Catch::Approx(0.0).margin(1e-9));
    CHECK(grad(0, p) == Catch::Approx(2.0 * x[0]).margin(1e-10));
    CHECK(grad(1, p) == Catch::Approx(4.0 * x[1]).margin(1e-10));
    CHECK(grad(2, p) == Catch::Approx(-6.0 * x[2]).margin(1e-10));
  }
}

TEST_CASE("divergence of a linear field is the trace", "[calculus]") {
  const Grid g = small_ball();
  VectorField u(g);
  for (int p = 0; p < g.n(); ++p) {
    const Vec3 x = g.coords(p);
    u(0, p) = 2.0 * x[0];
    u(1, p) = -5.0 * x[1];
    u(2, p) = 0.5 * x[2];
  }
  const ScalarField du = divergence(u);
  for (int p : g.interior_list) CHECK(du[p] == Catch::Approx(-2.5).margin(1e-10));
}

// ===========================================================================
// Advection
// ===========================================================================

TEST_CASE("advection matches a naive reimplementation on the torus", "[calculus]") {
  const Grid g = build_torus_grid(8);
  Rng rng(31);
  VectorField a(g), w(g);
  for (int p = 0; p < g.n(); ++p)
    for (int i = 0; i < 3; ++i) {
      a(i, p) = uniform_pm1(rng);
      w(i, p) = uniform_pm1(rng);
    }
  const VectorField adv = advect(a, w);
  for (int p = 0; p < g.n(); p += 7) {
    const Vec3 e = naive_advect_at(g, a, w, g.pts[static_cast<size_t>(p)]);
    for (int c = 0; c < 3; ++c)
      CHECK(adv(c, p) == Catch::Approx(e[static_cast<size_t>(c)]).margin(1e-13));
  }
}

TEST_CASE("constant carrier reduces advection to a wide central difference",
          "[calculus]") {
  // With a = (1,0,0), the skew average collapses to (w(x+2he^1)-w(x-2he^1))/(4h);
  // for w_0 = sin(2 pi x1) this is cos(2 pi x1) sin(4 pi h)/(2 h) exactly.
  const Grid g = build_torus_grid(16);
  VectorField a(g), w(g);
  for (int p = 0; p < g.n(); ++p) {
    a(0, p) = 1.0;
    w(0, p) = std::sin(2.0 * kPi * g.coords(p)[0]);
  }
  const VectorField adv = advect(a, w);
  const double factor = std::sin(4.0 * kPi * g.h) / (2.0 * g.h);
  for (int p = 0; p < g.n(); p += 11)
    CHECK(adv(0, p) ==
          Catch::Approx(std::cos(2.0 * kPi * g.coords(p)[0]) * factor).margin(1e-12));
}

TEST_CASE("advection trilinear form pairs with the carrier divergence", "[calculus]") {
  // (A(a)w, w) = -(1/2) sum_interior (div a)(x) |w(x)|^2 h^3 exactly, for any
  // carrier and any w vanishing on the boundary layer.  In particular the
  // form is antisymmetric (zero diagonal) on divergence-free carriers.
  for (int which = 0; which < 2; ++which) {
    const Grid g = which == 0 ? small_ball() : build_torus_grid(8);
    Rng rng(41 + which);
    for (int k = 0; k < 5; ++k) {
      VectorField a(g);
      for (int p = 0; p < g.n(); ++p)
        for (int i = 0; i < 3; ++i) a(i, p) = uniform_pm1(rng);
      const VectorField w = random_interior_field(g, rng);
      const ScalarField da = divergence(a);
      double expect = 0.0;
      for (int p : g.interior_list) {
        double wsq = 0.0;
        for (int i = 0; i < 3; ++i) wsq += w(i, p) * w(i, p);
        expect += da[p] * wsq;
      }
      expect *= -0.5 * g.h * g.h * g.h;
      const double got = inner(advect(a, w), w);
      CHECK(got == Catch::Approx(expect).margin(1e-12 * (1.0 + std::abs(expect))));
    }
  }
}

// ===========================================================================
// Consistency orders on smooth periodic fields
// ===========================================================================

TEST_CASE("Laplacian and advection are second-order consistent", "[calculus]") {
  const ManufacturedSolution ms = torus_trig(1.0);
  const double t = 0.3;
  std::vector<double> lap_err, adv_err, hs;
  for (int N : {8, 16, 32}) {
    const Grid g = build_torus_grid(N);
    const VectorField v = sample_point_vec(g, [&](const Vec3& x) { return ms.v(t, x); });
    const VectorField lv = laplacian(v);
    const VectorField av = advect(v, v);
    double le = 0.0, ae = 0.0;
    for (int p = 0; p < g.n(); ++p) {
      const Vec3 x = g.coords(p);
      const Vec3 lap_exact = ms.lap_v(t, x);
      const auto grad = ms.grad_v(t, x);
      const Vec3 vx = ms.v(t, x);
      for (int c = 0; c < 3; ++c) {
        le = std::max(le, std::abs(lv(c, p) - lap_exact[static_cast<size_t>(c)]));
        double conv = 0.0;
        for (int j = 0; j < 3; ++j)
          conv += vx[static_cast<size_t>(j)] * grad[static_cast<size_t>(c)][static_cast<size_t>(j)];
        ae = std::max(ae, std::abs(av(c, p) - conv));
      }
    }
    lap_err.push_back(le);
    adv_err.push_back(ae);
    hs.push_back(g.h);
  }
  const double lap_order = std::log(lap_err[0] / lap_err[2]) / std::log(hs[0] / hs[2]);
  const double adv_order = std::log(adv_err[0] / adv_err[2]) / std::log(hs[0] / hs[2]);
  CHECK(lap_order > 1.7);
  CHECK(lap_order < 2.3);
  CHECK(adv_order > 1.7);
  CHECK(adv_order < 2.3);
}

// ===========================================================================
// Dissipation pairing
// ===========================================================================

TEST_CASE("Laplacian quadratic form equals minus the forward-difference energy",
          "[calculus]") {
  // (Lap u, u) = -sum_j ||D_j^+ u||^2 exactly for fields vanishing outside
  // the interior: every lattice edge with a nonzero endpoint is counted once.
  for (int which = 0; which < 2; ++which) {
    const Grid g = which == 0 ? small_ball() : build_torus_grid(8);
    Rng rng(51 + which);
    const VectorField u = random_interior_field(g, rng);
    const double lhs = inner(laplacian(u), u);
    const double rhs = -forward_grad_sq_norm(u);
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
  }
}
