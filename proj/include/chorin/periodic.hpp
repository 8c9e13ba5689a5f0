#pragma once

// Time-periodic forcing, the period map, fixed-point search for discrete
// time-periodic solutions, and contraction diagnostics.
//
// With period-1 forcing and tau = 1/T1, the period map Phi sends utilde^0 to
// utilde^{T1} through T1 scheme steps.  Its fixed points are discrete
// time-periodic solutions; under the pointwise smallness condition
// |utilde^n(x)| <= beta0 = 1/(4 A) they attract every other trajectory at the
// per-step rate 1/(1 + tau/A^2), which is what the probes here measure.

#include "chorin/stepper.hpp"

namespace chorin {

struct PeriodicForcing {
  const Grid* g = nullptr;
  int t1 = 0;        // steps per period
  double tau = 0.0;  // 1 / t1
  std::vector<VectorField> samples;  // f^0 .. f^{t1-1}
  double alpha = 0.0;  // window budget sqrt(sum_m ||f^m||^2 tau); every unit
                       // window of a 1-periodic train gives the same value

  const VectorField& at(int n) const {
    return samples[static_cast<size_t>(((n % t1) + t1) % t1)];
  }
};

// Cell-and-step averaged samples of a continuum forcing with period 1.
template <class F>
PeriodicForcing make_periodic_forcing(const Grid& g, F&& f, int t1) {
  if (t1 < 1) throw ConfigError("periodic forcing needs at least one step per period");
  PeriodicForcing out;
  out.g = &g;
  out.t1 = t1;
  out.tau = 1.0 / static_cast<double>(t1);
  out.samples.reserve(static_cast<size_t>(t1));
  double acc = 0.0;
  for (int n = 0; n < t1; ++n) {
    out.samples.push_back(
        sample_cell_time_average_vec(g, f, n * out.tau, (n + 1) * out.tau, SampleMode::all));
    const double fn = l2_norm(out.samples.back());
    acc += fn * fn * out.tau;
  }
  out.alpha = std::sqrt(acc);
  return out;
}

// Scale a forcing train in place (used for amplitude sweeps).
inline PeriodicForcing scaled(const PeriodicForcing& f, double eps) {
  PeriodicForcing out;
  out.g = f.g;
  out.t1 = f.t1;
  out.tau = f.tau;
  out.alpha = std::abs(eps) * f.alpha;
  out.samples.reserve(f.samples.size());
  for (const auto& s : f.samples) {
    VectorField c = s;
    scale(c, eps);
    out.samples.push_back(std::move(c));
  }
  return out;
}

struct PeriodicRun {
  VectorField u_tilde_end;
  double max_abs = 0.0;  // max_n max_x |utilde^n| including the initial field
  EnergyLedger ledger;
};

// Run `steps` scheme steps under the periodic forcing train, starting the
// sample index at `first_step`.
inline PeriodicRun run_periods(const HodgeSolver& hodge, const PeriodicForcing& forcing,
                               const VectorField& u_tilde0, int steps, const StepperOptions& opt,
                               int first_step = 0,
                               const std::function<void(int, const Stepper&)>& observer = {}) {
  const Grid& g = hodge.grid();
  require_same_grid(u_tilde0.g, &g);
  Stepper st(g, hodge, opt);
  st.init_from_field(u_tilde0);
  PeriodicRun out;
  out.max_abs = linf_norm(u_tilde0);
  for (int s = 0; s < steps; ++s) {
    st.step(forcing.at(first_step + s), forcing.tau);
    out.max_abs = std::max(out.max_abs, linf_norm(st.u_tilde()));
    if (observer) observer(s + 1, st);
  }
  out.u_tilde_end = st.u_tilde();
  out.ledger = st.ledger();
  return out;
}

inline VectorField time_one_map(const HodgeSolver& hodge, const PeriodicForcing& forcing,
                                const VectorField& u_tilde0, const StepperOptions& opt) {
  return run_periods(hodge, forcing, u_tilde0, forcing.t1, opt).u_tilde_end;
}

// ---------------------------------------------------------------------------
// Fixed points of the period map.
// ---------------------------------------------------------------------------

enum class FixedPointAccel { picard, anderson };

struct FixedPointOptions {
  double tol = 1e-8;  // absolute tolerance on ||Phi(u) - u||
  int max_iter = 200;
  FixedPointAccel accel = FixedPointAccel::picard;
  int anderson_window = 3;  // <= 5
  double a_hat = 0.0;       // axis Poincare constant for smallness certification (0: skip)
};

struct FixedPointReport {
  VectorField orbit_start;  // best utilde^0 found
  int iterations = 0;
  double residual = 0.0;  // ||Phi(u) - u|| at the returned iterate
  std::vector<double> history;
  bool converged = false;
  double beta0 = 0.0;    // smallness threshold 1/(4 a_hat), when a_hat given
  double max_abs = 0.0;  // max |utilde^n(x)| along the returned orbit
  bool certified_small = false;
};

namespace detail {
inline std::vector<double> flatten(const VectorField& u) {
  std::vector<double> x;
  x.reserve(3 * u.comp[0].size());
  for (const auto& c : u.comp) x.insert(x.end(), c.begin(), c.end());
  return x;
}
inline VectorField unflatten(const Grid& g, const std::vector<double>& x) {
  VectorField u(g);
  const size_t n = static_cast<size_t>(g.n());
  for (size_t i = 0; i < 3; ++i)
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(i * n),
              x.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), u.comp[i].begin());
  return u;
}
}  // namespace detail

// Picard iteration on Phi starting from 0, optionally Anderson-mixed.  Does
// not throw on stagnation: existence is guaranteed but constructibility is
// not, so the best iterate and the residual history are returned as data.
inline FixedPointReport find_fixed_point(const HodgeSolver& hodge, const PeriodicForcing& forcing,
                                         const FixedPointOptions& fp, const StepperOptions& opt) {
  const Grid& g = hodge.grid();
  FixedPointReport rep;
  rep.beta0 = fp.a_hat > 0.0 ? contraction_smallness_threshold(fp.a_hat) : 0.0;

  VectorField u(g);  // start from rest
  const int m_max = std::min(fp.anderson_window, 5);
  std::vector<std::vector<double>> dR, dG;  // residual / image difference windows
  std::vector<double> r_prev, g_prev;

  VectorField best = u;
  double best_res = std::numeric_limits<double>::infinity();
  for (int k = 0; k < fp.max_iter; ++k) {
    const VectorField phi_u = time_one_map(hodge, forcing, u, opt);
    const VectorField diff = difference(phi_u, u);
    const double res = l2_norm(diff);
    rep.history.push_back(res);
    rep.iterations = k + 1;
    if (res < best_res) {
      best_res = res;
      best = u;
    }
    if (res <= fp.tol) {
      best = u;
      best_res = res;
      rep.converged = true;
      break;
    }
    if (fp.accel == FixedPointAccel::picard || m_max < 1) {
      u = phi_u;
      continue;
    }
    // Anderson mixing over the last <= m_max residual differences.
    std::vector<double> r_cur = detail::flatten(diff);
    std::vector<double> g_cur = detail::flatten(phi_u);
    if (!r_prev.empty()) {
      std::vector<double> dr(r_cur.size()), dg(r_cur.size());
      for (size_t i = 0; i < r_cur.size(); ++i) {
        dr[i] = r_cur[i] - r_prev[i];
        dg[i] = g_cur[i] - g_prev[i];
      }
      dR.push_back(std::move(dr));
      dG.push_back(std::move(dg));
      if (static_cast<int>(dR.size()) > m_max) {
        dR.erase(dR.begin());
        dG.erase(dG.begin());
      }
    }
    r_prev = r_cur;
    g_prev = g_cur;
    if (dR.empty()) {
      u = phi_u;
      continue;
    }
    const int m = static_cast<int>(dR.size());
    // gamma = argmin || r_cur - dR gamma ||  via normal equations (m <= 5)
    std::vector<Triplet> nt;
    std::vector<double> rhs(static_cast<size_t>(m), 0.0);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        double s = 0.0;
        for (size_t i = 0; i < r_cur.size(); ++i) s += dR[static_cast<size_t>(a)][i] * dR[static_cast<size_t>(b)][i];
        if (a == b) s += 1e-14;  // tiny ridge against collinear windows
        nt.push_back({a, b, s});
      }
      double s = 0.0;
      for (size_t i = 0; i < r_cur.size(); ++i) s += dR[static_cast<size_t>(a)][i] * r_cur[i];
      rhs[static_cast<size_t>(a)] = s;
    }
    std::vector<double> gamma;
    try {
      gamma = dense_solve(SparseMatrix::from_triplets(m, m, std::move(nt)), rhs);
    } catch (const SolverDivergenceError&) {
      gamma.assign(static_cast<size_t>(m), 0.0);  // degenerate window: fall back to Picard
    }
    std::vector<double> next = g_cur;
    for (int a = 0; a < m; ++a)
      for (size_t i = 0; i < next.size(); ++i)
        next[i] -= gamma[static_cast<size_t>(a)] * dG[static_cast<size_t>(a)][i];
    u = detail::unflatten(g, next);
  }
  rep.residual = best_res;
  rep.orbit_start = best;

  // Smallness certification along the returned orbit.
  const PeriodicRun orbit = run_periods(hodge, forcing, rep.orbit_start, forcing.t1, opt);
  rep.max_abs = orbit.max_abs;
  rep.certified_small = rep.beta0 > 0.0 && rep.max_abs < rep.beta0;
  return rep;
}

// Max over the first period of ||utilde^{n+T1} - utilde^n|| when re-simulating
// the orbit for two periods (the orbit-periodicity witness).
inline double orbit_periodicity_error(const HodgeSolver& hodge, const PeriodicForcing& forcing,
                                      const VectorField& orbit_start, const StepperOptions& opt) {
  const Grid& g = hodge.grid();
  Stepper st(g, hodge, opt);
  st.init_from_field(orbit_start);
  std::vector<VectorField> first;  // utilde^0 .. utilde^{T1}
  first.reserve(static_cast<size_t>(forcing.t1) + 1);
  first.push_back(st.u_tilde());
  double worst = 0.0;
  for (int n = 0; n < 2 * forcing.t1; ++n) {
    st.step(forcing.at(n), forcing.tau);
    if (n + 1 <= forcing.t1) first.push_back(st.u_tilde());
    if (n + 1 >= forcing.t1) {
      const int mate = n + 1 - forcing.t1;
      worst = std::max(worst, l2_norm(difference(st.u_tilde(), first[static_cast<size_t>(mate)])));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Contraction of trajectory differences.
// ---------------------------------------------------------------------------

struct ContractionReport {
  std::vector<double> diff_norms;  // ||btilde^n||, n = 0..steps
  std::vector<double> ratios;      // consecutive ratios (0 where the difference vanished)
  double per_step_bound = 0.0;     // 1 / (1 + tau / a_hat^2)
  double fitted_exponent = 0.0;    // least-squares slope of log ||btilde^n|| vs n tau
  double beta0 = 0.0;
  double max_abs = 0.0;  // smallness witness over both trajectories
  bool ratios_within(double slack) const {
    for (double r : ratios)
      if (r > per_step_bound * (1.0 + slack)) return false;
    return true;
  }
};

// Runs two trajectories under common forcing and records the decay of their
// difference.  When enforce_smallness is set, both trajectories must stay
// below beta0 = 1/(4 a_hat) pointwise, else SmallnessViolatedError.
inline ContractionReport contraction_test(const HodgeSolver& hodge, const PeriodicForcing& forcing,
                                          const VectorField& a0, const VectorField& b0, int steps,
                                          double a_hat, const StepperOptions& opt,
                                          bool enforce_smallness = true) {
  const Grid& g = hodge.grid();
  ContractionReport rep;
  rep.beta0 = contraction_smallness_threshold(a_hat);
  rep.per_step_bound = 1.0 / (1.0 + forcing.tau / (a_hat * a_hat));

  Stepper sa(g, hodge, opt), sb(g, hodge, opt);
  sa.init_from_field(a0);
  sb.init_from_field(b0);
  rep.max_abs = std::max(linf_norm(a0), linf_norm(b0));
  rep.diff_norms.push_back(l2_norm(difference(sa.u_tilde(), sb.u_tilde())));
  for (int n = 0; n < steps; ++n) {
    const VectorField& f = forcing.at(n);
    sa.step(f, forcing.tau);
    sb.step(f, forcing.tau);
    rep.max_abs = std::max({rep.max_abs, linf_norm(sa.u_tilde()), linf_norm(sb.u_tilde())});
    if (enforce_smallness && rep.max_abs > rep.beta0)
      throw SmallnessViolatedError("trajectory left the contraction regime", rep.max_abs,
                                   rep.beta0);
    const double prev = rep.diff_norms.back();
    const double cur = l2_norm(difference(sa.u_tilde(), sb.u_tilde()));
    rep.diff_norms.push_back(cur);
    rep.ratios.push_back(prev > 0.0 ? cur / prev : 0.0);
  }
  // Least-squares slope of log ||btilde^n|| against t_n = n tau.
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int cnt = 0;
  for (size_t n = 0; n < rep.diff_norms.size(); ++n) {
    if (rep.diff_norms[n] <= 0.0) continue;
    const double t = static_cast<double>(n) * forcing.tau;
    const double y = std::log(rep.diff_norms[n]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++cnt;
  }
  if (cnt >= 2 && stt * cnt - st * st > 0.0)
    rep.fitted_exponent = (sty * cnt - st * sy) / (stt * cnt - st * st);
  return rep;
}

// ---------------------------------------------------------------------------
// Uniqueness probe: many random starts, one orbit.
// ---------------------------------------------------------------------------

struct UniquenessReport {
  std::vector<double> start_norms;
  std::vector<double> max_pairwise_by_period;  // index m: after m+1 periods
  double final_max_pairwise = 0.0;
};

inline UniquenessReport uniqueness_probe(const HodgeSolver& hodge, const PeriodicForcing& forcing,
                                         int k_starts, double radius, int periods,
                                         std::uint64_t seed, const StepperOptions& opt) {
  const Grid& g = hodge.grid();
  Rng rng(seed);
  std::vector<VectorField> states;
  UniquenessReport rep;
  for (int k = 0; k < k_starts; ++k) {
    states.push_back(random_interior_field(g, rng, radius));
    rep.start_norms.push_back(l2_norm(states.back()));
  }
  for (int m = 0; m < periods; ++m) {
    for (auto& s : states) s = time_one_map(hodge, forcing, s, opt);
    double worst = 0.0;
    for (size_t a = 0; a < states.size(); ++a)
      for (size_t b = a + 1; b < states.size(); ++b)
        worst = std::max(worst, l2_norm(difference(states[a], states[b])));
    rep.max_pairwise_by_period.push_back(worst);
  }
  rep.final_max_pairwise =
      rep.max_pairwise_by_period.empty() ? 0.0 : rep.max_pairwise_by_period.back();
  return rep;
}

}  // namespace chorin
