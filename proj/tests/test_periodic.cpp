// Periodic-orbit machinery tests: forcing-train bookkeeping, fixed points of
// the period map under genuinely contractive (viscous, small-data) dynamics,
// orbit periodicity, trajectory-difference contraction with its closed-form
// per-step bound, and the smallness guard.

#include <catch2/catch_amalgamated.hpp>

#include "chorin/periodic.hpp"

using namespace chorin;

namespace {

Grid small_ball() { return build_dirichlet_grid(DomainSpec::ball({0, 0, 0}, 1.0), 0.12); }

// Smooth 1-periodic-in-time forcing with adjustable amplitude.
auto smooth_forcing(double amp) {
  return [amp](double t, const Vec3& x) {
    const double s = std::sin(2.0 * kPi * t);
    const double c = std::cos(2.0 * kPi * t);
    return Vec3{amp * (s + std::sin(3.0 * x[1])), amp * c * std::cos(2.0 * x[2]),
                amp * std::sin(x[0] + 2.0 * x[1])};
  };
}

}  // namespace

// ===========================================================================
// Forcing trains
// ===========================================================================

TEST_CASE("forcing window budget and scaling", "[periodic]") {
  const Grid g = small_ball();
  // time-constant forcing: the unit-window budget is just the sample norm
  auto steady = [](double, const Vec3& x) {
    return Vec3{std::sin(x[0]), x[1] * x[2], 0.25};
  };
  const PeriodicForcing f = make_periodic_forcing(g, steady, 4);
  REQUIRE(f.t1 == 4);
  REQUIRE(f.tau == 0.25);
  REQUIRE(f.samples.size() == 4);
  CHECK(f.alpha == Catch::Approx(l2_norm(f.samples[0])).epsilon(1e-12));
  CHECK(l2_norm(difference(f.at(7), f.samples[3])) == 0.0);  // wraps mod t1

  const PeriodicForcing half = scaled(f, 0.5);
  CHECK(half.alpha == Catch::Approx(0.5 * f.alpha).epsilon(1e-15));
  CHECK(l2_norm(half.samples[2]) == Catch::Approx(0.5 * l2_norm(f.samples[2])).epsilon(1e-13));
  CHECK_THROWS_AS(make_periodic_forcing(g, steady, 0), ConfigError);
}

// ===========================================================================
// Fixed points of the period map
// ===========================================================================

TEST_CASE("zero forcing has the rest state as an immediate fixed point", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f =
      make_periodic_forcing(g, [](double, const Vec3&) { return Vec3{0, 0, 0}; }, 5);
  CHECK(f.alpha == 0.0);
  const FixedPointReport rep = find_fixed_point(hodge, f, {}, {});
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.residual == 0.0);
  CHECK(l2_norm(rep.orbit_start) == 0.0);
}

TEST_CASE("Picard finds a certified small orbit; orbit is discretely periodic",
          "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.02), 5);
  const double a_hat = estimate_poincare_first(g).a_hat;

  FixedPointOptions fp;
  fp.tol = 1e-10;
  fp.max_iter = 100;
  fp.a_hat = a_hat;
  const FixedPointReport rep = find_fixed_point(hodge, f, fp, {});
  REQUIRE(rep.converged);
  CHECK(rep.residual <= 1e-10);
  CHECK(rep.history.size() == static_cast<size_t>(rep.iterations));
  CHECK(rep.history.back() <= rep.history.front());
  CHECK(rep.beta0 == Catch::Approx(1.0 / (4.0 * a_hat)).epsilon(1e-15));
  CHECK(rep.max_abs < rep.beta0);  // small data stays small
  CHECK(rep.certified_small);

  CHECK(orbit_periodicity_error(hodge, f, rep.orbit_start, {}) <= 1e-9);
}

TEST_CASE("smaller forcing yields a smaller orbit", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.02), 5);
  FixedPointOptions fp;
  fp.tol = 1e-9;
  const FixedPointReport full = find_fixed_point(hodge, f, fp, {});
  const FixedPointReport half = find_fixed_point(hodge, scaled(f, 0.5), fp, {});
  REQUIRE(full.converged);
  REQUIRE(half.converged);
  CHECK(l2_norm(half.orbit_start) < l2_norm(full.orbit_start));
  CHECK(l2_norm(half.orbit_start) > 0.0);
}

TEST_CASE("Anderson mixing converges to the same orbit as Picard", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.02), 5);
  FixedPointOptions fp;
  fp.tol = 1e-9;
  const FixedPointReport picard = find_fixed_point(hodge, f, fp, {});
  fp.accel = FixedPointAccel::anderson;
  fp.anderson_window = 3;
  const FixedPointReport anderson = find_fixed_point(hodge, f, fp, {});
  REQUIRE(picard.converged);
  REQUIRE(anderson.converged);
  CHECK(l2_norm(difference(anderson.orbit_start, picard.orbit_start)) <= 1e-7);
}

// ===========================================================================
// Contraction of trajectory differences
// ===========================================================================

TEST_CASE("trajectory differences contract within the closed-form bound", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.01), 10);
  const double a_hat = estimate_poincare_first(g).a_hat;
  Rng rng(91);
  const VectorField a0 = random_interior_field(g, rng, 0.05);
  const VectorField b0 = random_interior_field(g, rng, 0.08);

  const ContractionReport rep = contraction_test(hodge, f, a0, b0, 10, a_hat, {});
  CHECK(rep.per_step_bound ==
        Catch::Approx(1.0 / (1.0 + f.tau / (a_hat * a_hat))).epsilon(1e-15));
  REQUIRE(rep.diff_norms.size() == 11);
  REQUIRE(rep.ratios.size() == 10);
  CHECK(rep.max_abs < rep.beta0);
  CHECK(rep.ratios_within(0.05));
  for (double r : rep.ratios) CHECK(r < 1.0);
  CHECK(rep.fitted_exponent < 0.0);
}

TEST_CASE("per-step bound closed forms at tau = 0.1, unit constant", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.0), 10);
  Rng rng(92);
  const VectorField a0 = random_interior_field(g, rng, 0.01);
  const ContractionReport rep = contraction_test(hodge, f, a0, VectorField(g), 1, 1.0, {});
  CHECK(rep.per_step_bound == Catch::Approx(1.0 / 1.1).epsilon(1e-15));
  // and the exponential form it implies over a step
  CHECK(std::exp(-0.05) == Catch::Approx(0.951229424500714).epsilon(1e-12));
  CHECK(rep.per_step_bound <= std::exp(-0.05));
}

TEST_CASE("identical starts keep an exactly zero difference", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.01), 4);
  Rng rng(93);
  const VectorField a0 = random_interior_field(g, rng, 0.05);
  const ContractionReport rep = contraction_test(hodge, f, a0, a0, 4, 1.0, {});
  for (double d : rep.diff_norms) CHECK(d == 0.0);
  for (double r : rep.ratios) CHECK(r == 0.0);
}

TEST_CASE("leaving the smallness ball raises the dedicated error", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.01), 4);
  Rng rng(94);
  const VectorField a0 = random_interior_field(g, rng, 1.0);
  // a_hat = 1000 makes beta0 = 2.5e-4, far below the initial field
  CHECK_THROWS_AS(contraction_test(hodge, f, a0, VectorField(g), 4, 1000.0, {}),
                  SmallnessViolatedError);
}

// ===========================================================================
// Period-map runs and the uniqueness probe
// ===========================================================================

TEST_CASE("period runs split bitwise at any step offset", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.02), 5);
  Rng rng(95);
  const VectorField u0 = random_interior_field(g, rng, 0.05);

  const PeriodicRun whole = run_periods(hodge, f, u0, 5, {});
  const PeriodicRun head = run_periods(hodge, f, u0, 1, {});
  const PeriodicRun tail = run_periods(hodge, f, head.u_tilde_end, 4, {}, 1);
  CHECK(l2_norm(difference(tail.u_tilde_end, whole.u_tilde_end)) == 0.0);
  CHECK(whole.max_abs >= linf_norm(u0));
  CHECK(whole.ledger.rows.size() == 5);
}

TEST_CASE("random starts coalesce under common small forcing", "[periodic]") {
  const Grid g = small_ball();
  HodgeSolver hodge(g);
  const PeriodicForcing f = make_periodic_forcing(g, smooth_forcing(0.01), 5);
  const UniquenessReport rep = uniqueness_probe(hodge, f, 3, 0.05, 2, 96, {});
  REQUIRE(rep.start_norms.size() == 3);
  for (double s : rep.start_norms) CHECK(s == Catch::Approx(0.05).epsilon(1e-10));
  REQUIRE(rep.max_pairwise_by_period.size() == 2);
  CHECK(rep.max_pairwise_by_period[1] < rep.max_pairwise_by_period[0]);
  CHECK(rep.final_max_pairwise == rep.max_pairwise_by_period.back());
}
