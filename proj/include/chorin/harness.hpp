#pragma once

// Verification harness: manufactured-solution error tracking, convergence
// studies with order fits, and a refinement-Cauchy diagnostic comparing
// piecewise-constant-in-time trajectories across grid levels.

#include <memory>

#include "chorin/manufactured.hpp"
#include "chorin/periodic.hpp"

namespace chorin {

// ---------------------------------------------------------------------------
// Finite-difference verification that the stored derivative closures and the
// forcing really belong to the velocity/pressure pair: reconstructs
// f = v_t + (v.grad)v - nu lap v + grad p from centered differences of v and
// p alone and returns the max abs deviation from the closure-built forcing.
// ---------------------------------------------------------------------------
inline double pde_residual_probe(const ManufacturedSolution& ms, double nu, double t,
                                 const Vec3& x, double fd = 1e-4) {
  auto vshift = [&](double tt, int axis, double d) {
    Vec3 y = x;
    if (axis >= 0) y[static_cast<size_t>(axis)] += d;
    return ms.v(tt, y);
  };
  const Vec3 vt_fd = (1.0 / (2.0 * fd)) * (vshift(t + fd, -1, 0.0) + (-1.0) * vshift(t - fd, -1, 0.0));
  std::array<Vec3, 3> dv;  // dv[j] = d v / d x_j
  Vec3 lap{0.0, 0.0, 0.0};
  const Vec3 vc = ms.v(t, x);
  for (int j = 0; j < 3; ++j) {
    const Vec3 p = vshift(t, j, fd), m = vshift(t, j, -fd);
    dv[static_cast<size_t>(j)] = (1.0 / (2.0 * fd)) * (p + (-1.0) * m);
    lap = lap + (1.0 / (fd * fd)) * (p + (-2.0) * vc + m);
  }
  Vec3 gp;
  for (int j = 0; j < 3; ++j) {
    Vec3 yp = x, ym = x;
    yp[static_cast<size_t>(j)] += fd;
    ym[static_cast<size_t>(j)] -= fd;
    gp[static_cast<size_t>(j)] = (ms.p(t, yp) - ms.p(t, ym)) / (2.0 * fd);
  }
  double worst = 0.0;
  const Vec3 f = ms.forcing(nu, t, x);
  for (int i = 0; i < 3; ++i) {
    double conv = 0.0;
    for (int j = 0; j < 3; ++j)
      conv += vc[static_cast<size_t>(j)] * dv[static_cast<size_t>(j)][static_cast<size_t>(i)];
    const double fi = vt_fd[static_cast<size_t>(i)] + conv - nu * lap[static_cast<size_t>(i)] +
                      gp[static_cast<size_t>(i)];
    worst = std::max(worst, std::abs(fi - f[static_cast<size_t>(i)]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Per-step errors against point samples of the exact solution.
// ---------------------------------------------------------------------------

struct ErrorSeries {
  std::vector<double> t;                 // 0, tau, ..., steps*tau
  std::vector<double> l2_u, linf_u;      // u^n vs v(t_n, .)
  std::vector<double> l2_ut, linf_ut;    // utilde^n vs v(t_n, .)
  double max_l2_u = 0.0, final_l2_u = 0.0;
  double max_linf_u = 0.0, final_linf_u = 0.0;
  double max_l2_ut = 0.0, final_l2_ut = 0.0;
};

inline void record_error(ErrorSeries& es, const Grid& g, const ManufacturedSolution& ms, double t,
                         const VectorField& u, const VectorField& ut) {
  const VectorField ex = sample_point_vec(g, [&](const Vec3& x) { return ms.v(t, x); });
  es.t.push_back(t);
  es.l2_u.push_back(l2_norm(difference(u, ex)));
  es.linf_u.push_back(linf_norm(difference(u, ex)));
  es.l2_ut.push_back(l2_norm(difference(ut, ex)));
  es.linf_ut.push_back(linf_norm(difference(ut, ex)));
}

inline void finalize_error(ErrorSeries& es) {
  for (double v : es.l2_u) es.max_l2_u = std::max(es.max_l2_u, v);
  for (double v : es.linf_u) es.max_linf_u = std::max(es.max_linf_u, v);
  for (double v : es.l2_ut) es.max_l2_ut = std::max(es.max_l2_ut, v);
  es.final_l2_u = es.l2_u.back();
  es.final_linf_u = es.linf_u.back();
  es.final_l2_ut = es.l2_ut.back();
}

// Initialize from ms at t=0, run `steps` steps with the ms forcing, and track
// errors at every step (entry 0 is the pure data-preparation error).
inline ErrorSeries manufactured_error_run(const HodgeSolver& hodge, const ManufacturedSolution& ms,
                                          double nu, double tau, int steps,
                                          const StepperOptions& opt,
                                          std::vector<VectorField>* keep_u_tilde = nullptr) {
  const Grid& g = hodge.grid();
  StepperOptions o = opt;
  o.nu = nu;
  Stepper st(g, hodge, o);
  st.init_from_function([&](const Vec3& x) { return ms.v(0.0, x); });
  ErrorSeries es;
  record_error(es, g, ms, 0.0, st.u(), st.u_tilde());
  auto f = ms.forcing_fn(nu);
  for (int n = 0; n < steps; ++n) {
    const VectorField fn = sample_cell_time_average_vec(g, f, n * tau, (n + 1) * tau, SampleMode::all);
    st.step(fn, tau);
    record_error(es, g, ms, (n + 1) * tau, st.u(), st.u_tilde());
    if (keep_u_tilde) keep_u_tilde->push_back(st.u_tilde());
  }
  finalize_error(es);
  return es;
}

// ---------------------------------------------------------------------------
// Convergence studies.
// ---------------------------------------------------------------------------

struct ScalingRule {
  enum class Kind { h34, h2, explicit_tau } kind = Kind::h2;
  double theta = 1.0;
  std::vector<double> taus;  // for explicit_tau, one per level

  static ScalingRule h34(double theta = 1.0) { return {Kind::h34, theta, {}}; }
  static ScalingRule h2(double theta = 1.0) { return {Kind::h2, theta, {}}; }
  static ScalingRule explicit_list(std::vector<double> t) {
    return {Kind::explicit_tau, 1.0, std::move(t)};
  }
  double tau_for(double h, size_t level) const {
    switch (kind) {
      case Kind::h34: return theta * std::pow(h, 0.75);
      case Kind::h2: return theta * h * h;
      case Kind::explicit_tau: return taus.at(level);
    }
    return 0.0;
  }
};

struct ConvergenceRow {
  double h = 0.0, tau = 0.0;
  int steps = 0;
  double t_end = 0.0;
  double final_l2 = 0.0, max_l2 = 0.0, final_linf = 0.0, max_linf = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;  // coarse to fine
  double fitted_l2_order = 0.0;      // log-log slope of final L2 error vs h
  double fit_residual = 0.0;         // max abs log deviation from the fit
  bool fit_flagged = false;          // residual > 0.2: fit not trustworthy
  double beta_star = 0.0;            // max over the coarsest two rows of max_l2 / h^{1/4}
  bool beta_star_bounds_finest = false;
  bool max_l2_strictly_decreasing = false;
};

inline void fit_convergence(ConvergenceTable& tab) {
  const size_t n = tab.rows.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : tab.rows) {
    const double x = std::log(r.h), y = std::log(r.final_l2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  const double det = sxx * dn - sx * sx;
  if (det > 0.0) {
    tab.fitted_l2_order = (sxy * dn - sx * sy) / det;
    const double icept = (sy - tab.fitted_l2_order * sx) / dn;
    for (const auto& r : tab.rows)
      tab.fit_residual = std::max(
          tab.fit_residual, std::abs(std::log(r.final_l2) - (icept + tab.fitted_l2_order * std::log(r.h))));
  }
  tab.fit_flagged = tab.fit_residual > 0.2;
  if (n >= 2) {
    tab.beta_star = 0.0;
    for (size_t i = 0; i < 2; ++i)
      tab.beta_star = std::max(tab.beta_star, tab.rows[i].max_l2 / std::pow(tab.rows[i].h, 0.25));
    const auto& fin = tab.rows.back();
    tab.beta_star_bounds_finest = fin.max_l2 <= tab.beta_star * std::pow(fin.h, 0.25);
  }
  tab.max_l2_strictly_decreasing = true;
  for (size_t i = 0; i + 1 < n; ++i)
    if (!(tab.rows[i + 1].max_l2 < tab.rows[i].max_l2)) tab.max_l2_strictly_decreasing = false;
}

inline ConvergenceRow run_convergence_level(const Grid& g, const ManufacturedSolution& ms,
                                            double nu, double tau, double T,
                                            const StepperOptions& opt) {
  HodgeSolver hodge(g);
  const int steps = std::max(1, static_cast<int>(std::floor(T / tau + 1e-9)));
  const ErrorSeries es = manufactured_error_run(hodge, ms, nu, tau, steps, opt);
  ConvergenceRow row;
  row.h = g.h;
  row.tau = tau;
  row.steps = steps;
  row.t_end = steps * tau;
  row.final_l2 = es.final_l2_u;
  row.max_l2 = es.max_l2_u;
  row.final_linf = es.final_linf_u;
  row.max_linf = es.max_linf_u;
  return row;
}

inline ConvergenceTable convergence_study_torus(const ManufacturedSolution& ms, double nu,
                                                const std::vector<int>& Ns,
                                                const ScalingRule& scaling, double T,
                                                const StepperOptions& opt) {
  ConvergenceTable tab;
  for (size_t i = 0; i < Ns.size(); ++i) {
    const Grid g = build_torus_grid(Ns[i]);
    tab.rows.push_back(run_convergence_level(g, ms, nu, scaling.tau_for(g.h, i), T, opt));
  }
  fit_convergence(tab);
  return tab;
}

inline ConvergenceTable convergence_study_dirichlet(const DomainSpec& spec,
                                                    const ManufacturedSolution& ms, double nu,
                                                    const std::vector<double>& hs,
                                                    const ScalingRule& scaling, double T,
                                                    const StepperOptions& opt) {
  ConvergenceTable tab;
  for (size_t i = 0; i < hs.size(); ++i) {
    const Grid g = build_dirichlet_grid(spec, hs[i]);
    tab.rows.push_back(run_convergence_level(g, ms, nu, scaling.tau_for(g.h, i), T, opt));
  }
  fit_convergence(tab);
  return tab;
}

// ---------------------------------------------------------------------------
// Refinement-Cauchy diagnostic.  Each level's trajectory is read as the
// step function taking the value utilde^{n+1} on (n tau, (n+1) tau]; the
// distance between two levels is the L2-in-time, discrete-L2-in-space norm
// of their difference over the common horizon, with the coarser field
// evaluated at fine-lattice points by cell trilinear interpolation (zero
// extension off the coarse cloud).
// ---------------------------------------------------------------------------

struct LevelRun {
  std::unique_ptr<Grid> grid;
  std::unique_ptr<HodgeSolver> hodge;
  double tau = 0.0;
  std::vector<VectorField> u_tilde;  // utilde^1 .. utilde^steps
  double t_end() const { return tau * static_cast<double>(u_tilde.size()); }
};

template <class V0, class FF>
LevelRun run_level(std::unique_ptr<Grid> grid, double tau, int steps, V0&& v0, FF&& f,
                   const StepperOptions& opt) {
  LevelRun lvl;
  lvl.grid = std::move(grid);
  lvl.hodge = std::make_unique<HodgeSolver>(*lvl.grid);
  lvl.tau = tau;
  Stepper st(*lvl.grid, *lvl.hodge, opt);
  st.init_from_function(std::forward<V0>(v0));
  for (int n = 0; n < steps; ++n) {
    const VectorField fn =
        sample_cell_time_average_vec(*lvl.grid, f, n * tau, (n + 1) * tau, SampleMode::all);
    st.step(fn, tau);
    lvl.u_tilde.push_back(st.u_tilde());
  }
  return lvl;
}

namespace detail {
// Trilinear sample of a coarse field at an arbitrary physical point, with
// zero extension outside the coarse cloud and exact snapping onto lattice
// points (so identical grids compare exactly).
inline Vec3 trilinear_cell_sample(const VectorField& u, const Vec3& q) {
  const Grid& g = *u.g;
  Idx3 a;
  Vec3 s;
  for (int i = 0; i < 3; ++i) {
    const double z = q[static_cast<size_t>(i)] / g.h;
    const double zr = std::round(z);
    if (std::abs(z - zr) <= 1e-9) {
      a[i] = static_cast<int>(zr);
      s[static_cast<size_t>(i)] = 0.0;
    } else {
      a[i] = static_cast<int>(std::floor(z));
      s[static_cast<size_t>(i)] = z - a[i];
    }
  }
  Vec3 acc{0.0, 0.0, 0.0};
  for (int c1 = 0; c1 <= (s[0] > 0.0 ? 1 : 0); ++c1)
    for (int c2 = 0; c2 <= (s[1] > 0.0 ? 1 : 0); ++c2)
      for (int c3 = 0; c3 <= (s[2] > 0.0 ? 1 : 0); ++c3) {
        const int p = g.ordinal({a[0] + c1, a[1] + c2, a[2] + c3});
        if (p < 0) continue;  // zero extension
        const double w = (c1 ? s[0] : 1.0 - s[0]) * (c2 ? s[1] : 1.0 - s[1]) *
                         (c3 ? s[2] : 1.0 - s[2]);
        for (int i = 0; i < 3; ++i) acc[static_cast<size_t>(i)] += w * u(i, p);
      }
  return acc;
}
}  // namespace detail

// Spatial distance^2 between a fine-grid field and a coarse-grid field,
// measured on the fine lattice.
inline double cross_grid_distance_sq(const VectorField& fine, const VectorField& coarse) {
  const Grid& gf = *fine.g;
  double acc = 0.0;
  for (int p = 0; p < gf.n(); ++p) {
    const Vec3 cv = detail::trilinear_cell_sample(coarse, gf.coords(p));
    const Vec3 fv = fine.vec(p);
    const Vec3 d = fv + (-1.0) * cv;
    acc += dot(d, d);
  }
  return acc * gf.h * gf.h * gf.h;
}

inline double step_function_l2_distance(const LevelRun& a, const LevelRun& b) {
  const LevelRun& fine = (a.grid->h <= b.grid->h) ? a : b;
  const LevelRun& coarse = (a.grid->h <= b.grid->h) ? b : a;
  const double T = std::min(a.t_end(), b.t_end());
  // Merge the two step grids into segments of constant pair values.
  std::vector<double> cuts{0.0};
  for (size_t n = 1; n <= fine.u_tilde.size(); ++n)
    if (n * fine.tau < T - 1e-12) cuts.push_back(n * fine.tau);
  for (size_t n = 1; n <= coarse.u_tilde.size(); ++n)
    if (n * coarse.tau < T - 1e-12) cuts.push_back(n * coarse.tau);
  cuts.push_back(T);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double len = cuts[k + 1] - cuts[k];
    if (len <= 1e-14) continue;
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const size_t nf = std::min(fine.u_tilde.size() - 1,
                               static_cast<size_t>(std::floor(mid / fine.tau)));
    const size_t nc = std::min(coarse.u_tilde.size() - 1,
                               static_cast<size_t>(std::floor(mid / coarse.tau)));
    acc += len * cross_grid_distance_sq(fine.u_tilde[nf], coarse.u_tilde[nc]);
  }
  return std::sqrt(acc);
}

struct CauchyReport {
  std::vector<double> level_h;
  std::vector<double> distances;      // between consecutive levels
  std::vector<double> shrink_factors; // distances[i] / distances[i+1]
  bool strictly_decreasing = false;
};

inline CauchyReport refinement_cauchy_check(const std::vector<LevelRun>& levels) {
  if (levels.size() < 2) throw ConfigError("refinement check needs at least two levels");
  CauchyReport rep;
  for (const auto& l : levels) rep.level_h.push_back(l.grid->h);
  for (size_t i = 0; i + 1 < levels.size(); ++i)
    rep.distances.push_back(step_function_l2_distance(levels[i], levels[i + 1]));
  rep.strictly_decreasing = true;
  for (size_t i = 0; i + 1 < rep.distances.size(); ++i) {
    rep.shrink_factors.push_back(rep.distances[i + 1] > 0.0
                                     ? rep.distances[i] / rep.distances[i + 1]
                                     : std::numeric_limits<double>::infinity());
    if (!(rep.distances[i + 1] < rep.distances[i])) rep.strictly_decreasing = false;
  }
  return rep;
}

}  // namespace chorin
