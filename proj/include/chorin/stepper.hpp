#pragma once

// The projection scheme driver: implicit momentum step followed by the
// discrete Hodge projection, with a per-step energy ledger tracking the
// a priori bounds the scheme satisfies, plus power-iteration estimators for
// the two discrete Poincare constants and the invariant-radius bound built
// from them.
//
// One time step from (u^n, f^n) to u^{n+1}:
//   (utilde - u^n)/tau + A(u^n) utilde = nu Lap utilde + f^n   (interior; utilde=0 on boundary)
//   u^{n+1} = P utilde                                         (Hodge projection)
// where A(a)w is the staggered-average advection of calculus.hpp.  The same
// scalar matrix serves all three velocity components.

#include <functional>

#include "chorin/hodge.hpp"

namespace chorin {

struct StepperOptions {
  double nu = 1.0;
  double momentum_tol = 1e-12;  // relative residual of the implicit solve
  int momentum_max_iter = 4000;
  double projection_tol = 1e-10;
  int projection_max_iter = -1;  // -1: HodgeSolver default cap
};

struct MomentumResult {
  VectorField u_tilde;
  SolveReport report;           // worst of the three component solves
  double stencil_residual = 0;  // max over interior points/components of the
                                // matrix-free residual of the difference scheme
};

// Interior-unknown index map shared by assembly and scatter.
namespace detail {
inline std::vector<int> interior_index(const Grid& g) {
  std::vector<int> idx(static_cast<size_t>(g.n()), -1);
  for (size_t k = 0; k < g.interior_list.size(); ++k)
    idx[static_cast<size_t>(g.interior_list[k])] = static_cast<int>(k);
  return idx;
}
}  // namespace detail

// Assemble the implicit momentum matrix for carrier field a (interior
// unknowns only; boundary and exterior values are zero by convention).
inline SparseMatrix assemble_momentum_matrix(const Grid& g, const VectorField& a, double tau,
                                             double nu, const std::vector<int>& idx) {
  const double h = g.h;
  const double vis = nu * tau / (h * h);
  const double adv = tau / (4.0 * h);
  std::vector<Triplet> trips;
  trips.reserve(g.interior_list.size() * 13);
  for (size_t k = 0; k < g.interior_list.size(); ++k) {
    const int p = g.interior_list[k];
    const int row = static_cast<int>(k);
    double diag = 1.0 + 6.0 * vis;
    for (int j = 0; j < 3; ++j) {
      const int qm = g.nbr[static_cast<size_t>(p)][static_cast<size_t>(2 * j)];
      const int qp = g.nbr[static_cast<size_t>(p)][static_cast<size_t>(2 * j + 1)];
      const double am = a.at(j, qm);  // carrier at x - h e^j (always a grid point here)
      const double ap = a.at(j, qp);
      diag += adv * (am - ap);
      if (idx[static_cast<size_t>(qm)] >= 0) trips.push_back({row, idx[static_cast<size_t>(qm)], -vis});
      if (idx[static_cast<size_t>(qp)] >= 0) trips.push_back({row, idx[static_cast<size_t>(qp)], -vis});
      const int qmm = g.nbr2[static_cast<size_t>(p)][static_cast<size_t>(2 * j)];
      const int qpp = g.nbr2[static_cast<size_t>(p)][static_cast<size_t>(2 * j + 1)];
      if (qmm >= 0 && idx[static_cast<size_t>(qmm)] >= 0 && am != 0.0)
        trips.push_back({row, idx[static_cast<size_t>(qmm)], -adv * am});
      if (qpp >= 0 && idx[static_cast<size_t>(qpp)] >= 0 && ap != 0.0)
        trips.push_back({row, idx[static_cast<size_t>(qpp)], adv * ap});
    }
    trips.push_back({row, row, diag});
  }
  const int m = static_cast<int>(g.interior_list.size());
  return SparseMatrix::from_triplets(m, m, std::move(trips));
}

inline MomentumResult momentum_step(const VectorField& u, const VectorField& f, double tau,
                                    const StepperOptions& opt) {
  require_same_grid(u.g, f.g);
  const Grid& g = *u.g;
  const std::vector<int> idx = detail::interior_index(g);
  const SparseMatrix A = assemble_momentum_matrix(g, u, tau, opt.nu, idx);
  const int m = static_cast<int>(g.interior_list.size());

  MomentumResult res;
  res.u_tilde = VectorField(g);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> rhs(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) {
      const int p = g.interior_list[static_cast<size_t>(k)];
      rhs[static_cast<size_t>(k)] = u(c, p) + tau * f(c, p);
    }
    SolveReport rep;
    const std::vector<double> x = solve_nonsym(A, rhs, opt.momentum_tol, opt.momentum_max_iter, &rep);
    if (rep.rel_residual > res.report.rel_residual) res.report = rep;
    for (int k = 0; k < m; ++k) res.u_tilde(c, g.interior_list[static_cast<size_t>(k)]) = x[static_cast<size_t>(k)];
  }

  // Matrix-free verification of the difference scheme at every interior
  // point; independent of the assembly path above.
  const VectorField adv = advect(u, res.u_tilde);
  const VectorField lap = laplacian(res.u_tilde);
  double worst = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int p : g.interior_list) {
      const double r = (res.u_tilde(c, p) - u(c, p)) / tau + adv(c, p) -
                       opt.nu * lap(c, p) - f(c, p);
      worst = std::max(worst, std::abs(r));
    }
  res.stencil_residual = worst;
  return res;
}

// Per-step record of the quantities entering the energy estimates.
struct EnergyRow {
  int n = 0;        // step index (row logged after computing u^{n+1})
  double t = 0.0;   // time (n+1) tau
  double u_norm = 0.0;
  double u_tilde_norm = 0.0;
  double dissipation = 0.0;  // sum_j ||D_j^+ utilde^{n+1}||^2
  double f_norm = 0.0;
  double stencil_residual = 0.0;
  double div_residual = 0.0;
  double momentum_slack = 0.0;   // ||u^n|| + tau ||f^n|| - ||utilde^{n+1}||
  double growth_slack = 0.0;     // ||u^0|| + sum_m tau ||f^m|| - ||u^{n+1}||
  double energy_slack = 0.0;     // energy-balance RHS - ||u^{n+1}||^2
  double identity_residual = 0.0;  // exact per-step balance (solver noise)
};

struct EnergyLedger {
  double v0_l2 = -1.0;        // L2 norm of the continuum initial datum, if known
  double u_tilde0_norm = 0.0;
  double u0_norm = 0.0;
  std::vector<EnergyRow> rows;
};

class Stepper {
 public:
  Stepper(const Grid& g, const HodgeSolver& hodge, StepperOptions opt = {})
      : g_(&g), hodge_(&hodge), opt_(opt), u_(g), u_tilde_(g) {}

  const Grid& grid() const { return *g_; }
  const StepperOptions& options() const { return opt_; }
  const VectorField& u() const { return u_; }
  const VectorField& u_tilde() const { return u_tilde_; }
  const EnergyLedger& ledger() const { return ledger_; }
  int step_index() const { return n_; }

  // First-order data preparation: cell averages of v0 at interior points,
  // zero on the boundary layer, then one projection.
  template <class V0>
  void init_from_function(V0&& v0, double v0_l2 = -1.0) {
    VectorField ut = sample_cell_average_vec(*g_, std::forward<V0>(v0), SampleMode::interior_only);
    init_from_field(ut, v0_l2);
  }

  void init_from_field(const VectorField& u_tilde0, double v0_l2 = -1.0) {
    require_same_grid(u_tilde0.g, g_);
    u_tilde_ = u_tilde0;
    u_ = hodge_->project(u_tilde_, opt_.projection_tol, opt_.projection_max_iter);
    ledger_ = EnergyLedger{};
    ledger_.v0_l2 = v0_l2;
    ledger_.u_tilde0_norm = l2_norm(u_tilde_);
    ledger_.u0_norm = l2_norm(u_);
    energy_rhs_ = ledger_.u0_norm * ledger_.u0_norm;
    force_accum_ = 0.0;
    n_ = 0;
    t_ = 0.0;
  }

  // Advance one step with the already-averaged forcing f^n; logs and returns
  // the energy row.
  EnergyRow step(const VectorField& f, double tau) {
    const double un_norm = l2_norm(u_);
    const double f_norm = l2_norm(f);
    const VectorField u_prev = u_;

    MomentumResult mres = momentum_step(u_, f, tau, opt_);
    u_tilde_ = std::move(mres.u_tilde);

    EnergyRow row;
    row.n = n_;
    row.t = t_ + tau;
    row.u_tilde_norm = l2_norm(u_tilde_);
    row.dissipation = forward_grad_sq_norm(u_tilde_);
    row.f_norm = f_norm;
    row.stencil_residual = mres.stencil_residual;

    // Exact discrete balance obtained by pairing the scheme with utilde:
    //   ||utilde||^2 = (u^n,utilde) + tau (f^n,utilde)
    //                  - tau (A(u^n)utilde, utilde) - nu tau sum_j ||D_j^+ utilde||^2.
    const double adv_pair = inner(advect(u_prev, u_tilde_), u_tilde_);
    row.identity_residual = row.u_tilde_norm * row.u_tilde_norm -
                            (inner(u_prev, u_tilde_) + tau * inner(f, u_tilde_) -
                             tau * adv_pair - opt_.nu * tau * row.dissipation);

    HodgeDecomposition dec = hodge_->decompose(u_tilde_, opt_.projection_tol, opt_.projection_max_iter);
    u_ = std::move(dec.w);
    row.div_residual = dec.residual_div;
    row.u_norm = l2_norm(u_);

    row.momentum_slack = un_norm + tau * f_norm - row.u_tilde_norm;
    force_accum_ += tau * f_norm;
    row.growth_slack = ledger_.u0_norm + force_accum_ - row.u_norm;
    energy_rhs_ += -opt_.nu * row.dissipation * tau + 2.0 * un_norm * f_norm * tau +
                   f_norm * f_norm * tau * tau;
    row.energy_slack = energy_rhs_ - row.u_norm * row.u_norm;

    ledger_.rows.push_back(row);
    ++n_;
    t_ = row.t;
    return row;
  }

  // Run `steps` steps with space-time forcing f(t,x), averaging it over each
  // cell and step.  The observer (if any) sees the stepper after every step.
  template <class SpaceTimeF>
  void run(SpaceTimeF&& f, double tau, int steps,
           const std::function<void(int, const Stepper&)>& observer = {}) {
    for (int s = 0; s < steps; ++s) {
      const double t0 = t_;
      const VectorField fn = sample_cell_time_average_vec(
          *g_, f, t0, t0 + tau, SampleMode::all);
      step(fn, tau);
      if (observer) observer(n_, *this);
    }
  }

 private:
  const Grid* g_;
  const HodgeSolver* hodge_;
  StepperOptions opt_;
  VectorField u_, u_tilde_;
  EnergyLedger ledger_;
  double energy_rhs_ = 0.0;
  double force_accum_ = 0.0;
  int n_ = 0;
  double t_ = 0.0;
};

// ---------------------------------------------------------------------------
// Poincare constants.
// ---------------------------------------------------------------------------

// Axis-wise constant: the best A_i with
//   sum_{grid} |phi|^2 <= A_i^2 sum_{interior} |D_i^+ phi|^2   for phi = 0 on the boundary.
// The quadratic form splits over maximal interior runs in direction i, each a
// free-end/clamped-end chain; the smallest eigenvalue is found by inverse
// power iteration with exact tridiagonal (Thomas) solves.
struct PoincareIEstimate {
  double a_hat = 0.0;            // max over axes
  std::array<double, 3> axis{};  // per-axis constants
  int iterations = 0;            // worst case over axes
};

inline PoincareIEstimate estimate_poincare_first(const Grid& g, double tol = 1e-8,
                                                 int max_iter = 10000) {
  if (g.kind == GridKind::torus)
    throw ConfigError("the boundary-anchored Poincare constant needs a Dirichlet boundary");
  PoincareIEstimate out;
  for (int axis = 0; axis < 3; ++axis) {
    // Collect maximal interior runs in this direction.
    std::vector<std::vector<int>> runs;
    for (int p : g.interior_list) {
      const int behind = g.nbr[static_cast<size_t>(p)][static_cast<size_t>(2 * axis)];
      if (behind >= 0 && g.is_interior(behind)) continue;  // not a run start
      std::vector<int> run;
      int q = p;
      while (q >= 0 && g.is_interior(q)) {
        run.push_back(q);
        q = g.nbr[static_cast<size_t>(q)][static_cast<size_t>(2 * axis + 1)];
      }
      runs.push_back(std::move(run));
    }
    // phi over the union of runs, all-ones start; S phi has rows
    // (phi_k - phi_{k+1} terms) / h^2 with a free first end and clamped last.
    std::vector<std::vector<double>> phi;
    phi.reserve(runs.size());
    for (const auto& r : runs) phi.emplace_back(r.size(), 1.0);
    const double inv_h2 = 1.0 / (g.h * g.h);
    auto apply_S = [&](const std::vector<std::vector<double>>& v,
                      std::vector<std::vector<double>>& Sv) {
      for (size_t r = 0; r < v.size(); ++r) {
        const auto& x = v[r];
        auto& y = Sv[r];
        const size_t m = x.size();
        for (size_t k = 0; k < m; ++k) {
          double s = (k == 0 ? 1.0 : 2.0) * x[k];
          if (k > 0) s -= x[k - 1];
          if (k + 1 < m) s -= x[k + 1];
          y[k] = s * inv_h2;
        }
      }
    };
    auto thomas_solve = [&](std::vector<std::vector<double>>& v) {
      // In-place solve S v = rhs per run: tridiag(-1, d, -1)/h^2, d0 = 1 else 2.
      for (auto& x : v) {
        const size_t m = x.size();
        std::vector<double> c(m, 0.0);  // modified superdiagonal
        double d0 = 1.0;
        c[0] = -1.0 / d0;
        x[0] = x[0] * (g.h * g.h) / d0;
        for (size_t k = 1; k < m; ++k) {
          const double denom = 2.0 - (-1.0) * c[k - 1];
          c[k] = -1.0 / denom;
          x[k] = (x[k] * (g.h * g.h) - (-1.0) * x[k - 1]) / denom;
        }
        for (size_t k = m - 1; k-- > 0;) x[k] -= c[k] * x[k + 1];
      }
    };
    auto dot_all = [](const std::vector<std::vector<double>>& a,
                      const std::vector<std::vector<double>>& b) {
      double s = 0.0;
      for (size_t r = 0; r < a.size(); ++r)
        for (size_t k = 0; k < a[r].size(); ++k) s += a[r][k] * b[r][k];
      return s;
    };
    std::vector<std::vector<double>> work = phi;
    double lambda = 0.0, lambda_prev = -1.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      thomas_solve(phi);  // phi <- S^-1 phi
      const double nrm = std::sqrt(dot_all(phi, phi));
      for (auto& r : phi)
        for (double& x : r) x /= nrm;
      apply_S(phi, work);
      lambda = dot_all(phi, work);  // Rayleigh quotient, converges to lambda_min
      if (lambda_prev > 0.0 && std::abs(lambda - lambda_prev) <= tol * lambda) break;
      lambda_prev = lambda;
    }
    if (it >= max_iter)
      throw NotConvergedError("inverse power iteration for the axis Poincare constant stalled",
                              std::abs(lambda - lambda_prev));
    out.axis[static_cast<size_t>(axis)] = 1.0 / std::sqrt(lambda);
    out.iterations = std::max(out.iterations, it + 1);
  }
  out.a_hat = std::max({out.axis[0], out.axis[1], out.axis[2]});
  return out;
}

// Sublattice-centered constant: the best A~ with
//   sum_j sum_{core sublattice j} |phi - mean_j phi|^2 <= A~^2 sum_{interior} |grad phi|^2.
// The right-hand form is exactly the wide-stencil class Laplacian of the
// Hodge solver, so the largest generalized eigenvalue is found per class by
// power iteration on L^+ P with deflated-CG applications of L^+.
struct PoincareIIEstimate {
  double a_tilde = 0.0;
  std::vector<double> class_mu;  // largest generalized eigenvalue per class
  int iterations = 0;
};

inline PoincareIIEstimate estimate_poincare_second(const HodgeSolver& hs, double tol = 1e-8,
                                                   int max_iter = 500,
                                                   std::uint64_t seed = 12345) {
  const Grid& g = hs.grid();
  const SparseMatrix& L = hs.laplacian();
  const auto& comps = hs.components();
  PoincareIIEstimate out;
  const int ncls = g.n_pressure_classes();
  out.class_mu.assign(static_cast<size_t>(ncls), 0.0);

  // Class membership by parity (all grid points), core subsets from g.sublattice.
  for (int cls = 0; cls < ncls; ++cls) {
    const auto& core = g.sublattice[static_cast<size_t>(cls)];
    if (core.empty()) continue;
    std::vector<std::int32_t> members;
    for (int p = 0; p < g.n(); ++p)
      if (g.pressure_class_of(p) == cls) members.push_back(p);

    auto apply_P = [&](const std::vector<double>& v, std::vector<double>& Pv) {
      std::fill(Pv.begin(), Pv.end(), 0.0);
      double mean = 0.0;
      for (int p : core) mean += v[static_cast<size_t>(p)];
      mean /= static_cast<double>(core.size());
      for (int p : core) Pv[static_cast<size_t>(p)] = v[static_cast<size_t>(p)] - mean;
    };

    Rng rng(seed + static_cast<std::uint64_t>(cls));
    std::vector<double> v(static_cast<size_t>(g.n()), 0.0);
    for (int p : members) v[static_cast<size_t>(p)] = uniform_pm1(rng);
    detail::project_out_components(v, comps);

    std::vector<double> Pv(static_cast<size_t>(g.n()), 0.0), Lv(static_cast<size_t>(g.n()));
    const int cg_cap = hs.default_iteration_cap();
    double mu = 0.0, mu_prev = -1.0;
    int it = 0;
    for (; it < max_iter; ++it) {
      apply_P(v, Pv);
      double pnorm = 0.0;
      for (double x : Pv) pnorm += x * x;
      if (pnorm == 0.0) break;  // start vector had no centered-core content; mu stays 0
      std::vector<double> y = cg_deflated(L, Pv, comps, 1e-11, cg_cap);
      L.apply(y.data(), Lv.data());
      double num = 0.0, den = 0.0;
      apply_P(y, Pv);
      for (size_t i = 0; i < y.size(); ++i) {
        num += Pv[i] * y[i];
        den += Lv[i] * y[i];
      }
      mu = (den > 0.0) ? num / den : 0.0;
      double ynorm = 0.0;
      for (double x : y) ynorm += x * x;
      ynorm = std::sqrt(ynorm);
      for (size_t i = 0; i < y.size(); ++i) v[i] = y[i] / ynorm;
      if (mu_prev > 0.0 && std::abs(mu - mu_prev) <= tol * std::max(1.0, mu)) {
        ++it;
        break;
      }
      mu_prev = mu;
    }
    out.class_mu[static_cast<size_t>(cls)] = mu;
    out.iterations = std::max(out.iterations, it);
  }
  double mu_max = 0.0;
  for (double m : out.class_mu) mu_max = std::max(mu_max, m);
  out.a_tilde = std::sqrt(mu_max);
  return out;
}

// Invariant-radius bound assembled from the axis Poincare constant A and the
// sliding-window forcing budget alpha:
//   R0 = alpha / (1 - e^{-1/A^2}) * sqrt( (1 - e^{-2/A^2}) / (2/A^2) ).
// Any ball of this radius (in the discrete L2 norm) is mapped into itself by
// the period map when the window-integrated forcing stays below alpha.
inline double invariant_radius(double a_hat, double alpha) {
  const double k = 1.0 / (a_hat * a_hat);
  return alpha / (1.0 - std::exp(-k)) * std::sqrt((1.0 - std::exp(-2.0 * k)) / (2.0 * k));
}

// Pointwise smallness threshold under which the period map is a contraction.
inline double contraction_smallness_threshold(double a_hat) { return 1.0 / (4.0 * a_hat); }

}  // namespace chorin
