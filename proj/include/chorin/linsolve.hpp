#pragma once

// Sparse CSR matrices and the two Krylov solvers the scheme needs:
//  - deflated conjugate gradients for the (singular, SPSD) pressure systems,
//  - BiCGSTAB with diagonal preconditioning for the nonsymmetric momentum
//    systems, backed by a dense partial-pivot LU fallback on small problems.
//
// Everything here is deterministic: fixed sequential reduction order, no
// threading, no randomized starts.  Reported residuals are always recomputed
// from scratch at exit (never the recurrence value, which can drift).

#include <algorithm>
#include <cstdint>
#include <vector>

#include "chorin/common.hpp"

namespace chorin {

struct Triplet {
  int r, c;
  double v;
};

struct SparseMatrix {
  int nrows = 0, ncols = 0;
  std::vector<int> row_ptr;  // size nrows+1
  std::vector<int> col;
  std::vector<double> val;

  static SparseMatrix from_triplets(int nrows, int ncols, std::vector<Triplet> t) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return a.r != b.r ? a.r < b.r : a.c < b.c;
    });
    SparseMatrix m;
    m.nrows = nrows;
    m.ncols = ncols;
    m.row_ptr.assign(static_cast<size_t>(nrows) + 1, 0);
    size_t i = 0;
    while (i < t.size()) {
      size_t j = i + 1;
      double s = t[i].v;
      while (j < t.size() && t[j].r == t[i].r && t[j].c == t[i].c) s += t[j++].v;
      if (s != 0.0) {  // exact zeros never enter the stored pattern
        m.col.push_back(t[i].c);
        m.val.push_back(s);
        m.row_ptr[static_cast<size_t>(t[i].r) + 1] += 1;
      }
      i = j;
    }
    for (size_t r = 0; r < static_cast<size_t>(nrows); ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
  }

  void apply(const double* x, double* y) const {
    for (int r = 0; r < nrows; ++r) {
      double s = 0.0;
      for (int k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k)
        s += val[static_cast<size_t>(k)] * x[col[static_cast<size_t>(k)]];
      y[r] = s;
    }
  }
  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(static_cast<size_t>(nrows), 0.0);
    apply(x.data(), y.data());
    return y;
  }
  double diag_entry(int r) const {
    for (int k = row_ptr[static_cast<size_t>(r)]; k < row_ptr[static_cast<size_t>(r) + 1]; ++k)
      if (col[static_cast<size_t>(k)] == r) return val[static_cast<size_t>(k)];
    return 0.0;
  }
  int nnz() const { return static_cast<int>(val.size()); }
};

struct SolveReport {
  int iterations = 0;
  double rel_residual = 0.0;  // recomputed |b - A x| / |b| at exit
  bool converged = false;
  bool used_dense_fallback = false;
};

namespace detail {

inline double dot_n(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm_n(const std::vector<double>& a) { return std::sqrt(std::max(0.0, dot_n(a, a))); }

// Remove per-component means: projection onto the orthogonal complement of
// the span of disjoint-support indicator vectors.
inline void project_out_components(std::vector<double>& v,
                                   const std::vector<std::vector<std::int32_t>>& comps) {
  for (const auto& c : comps) {
    if (c.empty()) continue;
    double m = 0.0;
    for (int p : c) m += v[static_cast<size_t>(p)];
    m /= static_cast<double>(c.size());
    for (int p : c) v[static_cast<size_t>(p)] -= m;
  }
}

}  // namespace detail

// Dense partial-pivot LU solve of a CSR system (small n only).  Used as the
// last-resort fallback for hard momentum systems; throws on singular pivots.
inline std::vector<double> dense_solve(const SparseMatrix& A, const std::vector<double>& b) {
  const int n = A.nrows;
  std::vector<double> M(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int k = A.row_ptr[static_cast<size_t>(r)]; k < A.row_ptr[static_cast<size_t>(r) + 1]; ++k)
      M[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(A.col[static_cast<size_t>(k)])] =
          A.val[static_cast<size_t>(k)];
  std::vector<double> x = b;
  std::vector<int> piv(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) piv[static_cast<size_t>(i)] = i;
  for (int k = 0; k < n; ++k) {
    int pr = k;
    double pm = std::abs(M[static_cast<size_t>(k) * static_cast<size_t>(n) + static_cast<size_t>(k)]);
    for (int r = k + 1; r < n; ++r) {
      const double m = std::abs(M[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(k)]);
      if (m > pm) {
        pm = m;
        pr = r;
      }
    }
    if (pm < 1e-300) throw SolverDivergenceError("singular matrix in dense LU fallback", pm);
    if (pr != k) {
      for (int c = 0; c < n; ++c)
        std::swap(M[static_cast<size_t>(k) * static_cast<size_t>(n) + static_cast<size_t>(c)],
                  M[static_cast<size_t>(pr) * static_cast<size_t>(n) + static_cast<size_t>(c)]);
      std::swap(x[static_cast<size_t>(k)], x[static_cast<size_t>(pr)]);
    }
    const double pivval = M[static_cast<size_t>(k) * static_cast<size_t>(n) + static_cast<size_t>(k)];
    for (int r = k + 1; r < n; ++r) {
      const double f = M[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(k)] / pivval;
      if (f == 0.0) continue;
      M[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(k)] = 0.0;
      for (int c = k + 1; c < n; ++c)
        M[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(c)] -=
            f * M[static_cast<size_t>(k) * static_cast<size_t>(n) + static_cast<size_t>(c)];
      x[static_cast<size_t>(r)] -= f * x[static_cast<size_t>(k)];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = x[static_cast<size_t>(r)];
    for (int c = r + 1; c < n; ++c)
      s -= M[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(c)] * x[static_cast<size_t>(c)];
    x[static_cast<size_t>(r)] = s / M[static_cast<size_t>(r) * static_cast<size_t>(n) + static_cast<size_t>(r)];
  }
  return x;
}

// Conjugate gradients for symmetric positive semi-definite systems whose
// kernel is spanned by disjoint-support component indicators.  The right
// hand side and the running residual are kept orthogonal to the kernel, so
// the iteration effectively runs on the regular part of the operator.  On
// exit the true residual is recomputed; if the recurrence lied (possible
// after many steps), the solve restarts from the current iterate until the
// budget is exhausted.
inline std::vector<double> cg_deflated(const SparseMatrix& A, std::vector<double> b,
                                       const std::vector<std::vector<std::int32_t>>& kernel_comps,
                                       double tol, int max_iter, SolveReport* report = nullptr) {
  const int n = A.nrows;
  detail::project_out_components(b, kernel_comps);
  const double bnorm = detail::norm_n(b);
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  SolveReport rep;
  if (bnorm == 0.0) {
    rep.converged = true;
    if (report) *report = rep;
    return x;
  }
  std::vector<double> r = b, p, Ap(static_cast<size_t>(n));
  int used = 0;
  while (used < max_iter) {
    // (re)start: true residual from current iterate
    A.apply(x.data(), Ap.data());
    for (int i = 0; i < n; ++i) r[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - Ap[static_cast<size_t>(i)];
    detail::project_out_components(r, kernel_comps);
    double rel = detail::norm_n(r) / bnorm;
    if (rel <= tol) break;
    p = r;
    double rs = detail::dot_n(r, r);
    bool restart = false;
    while (used < max_iter && !restart) {
      A.apply(p.data(), Ap.data());
      const double pAp = detail::dot_n(p, Ap);
      if (pAp <= 0.0) {
        // zero-curvature direction: numerically in the kernel; re-project and restart
        restart = true;
        break;
      }
      const double alpha = rs / pAp;
      for (int i = 0; i < n; ++i) {
        x[static_cast<size_t>(i)] += alpha * p[static_cast<size_t>(i)];
        r[static_cast<size_t>(i)] -= alpha * Ap[static_cast<size_t>(i)];
      }
      detail::project_out_components(r, kernel_comps);
      ++used;
      const double rs_new = detail::dot_n(r, r);
      if (std::sqrt(rs_new) / bnorm <= tol) {
        restart = true;  // drop out to the true-residual confirmation
        break;
      }
      const double beta = rs_new / rs;
      rs = rs_new;
      for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] + beta * p[static_cast<size_t>(i)];
    }
    if (!restart && used >= max_iter) break;
  }
  // confirmed residual
  A.apply(x.data(), Ap.data());
  for (int i = 0; i < n; ++i) r[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - Ap[static_cast<size_t>(i)];
  detail::project_out_components(r, kernel_comps);
  rep.iterations = used;
  rep.rel_residual = detail::norm_n(r) / bnorm;
  rep.converged = rep.rel_residual <= tol;
  if (report) *report = rep;
  if (!rep.converged)
    throw NotConvergedError("deflated CG failed to reach tolerance", rep.rel_residual);
  return x;
}

// Diagonally preconditioned BiCGSTAB for nonsymmetric systems, with breakdown
// restarts and a dense LU fallback on small problems.  Throws NotConvergedError
// when neither route reaches the tolerance.
inline std::vector<double> solve_nonsym(const SparseMatrix& A, const std::vector<double>& b,
                                        double tol, int max_iter, SolveReport* report = nullptr) {
  const int n = A.nrows;
  SolveReport rep;
  const double bnorm = detail::norm_n(b);
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  if (bnorm == 0.0) {
    rep.converged = true;
    if (report) *report = rep;
    return x;
  }
  std::vector<double> dinv(static_cast<size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    const double d = A.diag_entry(i);
    dinv[static_cast<size_t>(i)] = (std::abs(d) > 1e-300) ? 1.0 / d : 1.0;
  }
  std::vector<double> r(static_cast<size_t>(n)), r0(static_cast<size_t>(n)), p(static_cast<size_t>(n)),
      v(static_cast<size_t>(n)), s(static_cast<size_t>(n)), t(static_cast<size_t>(n)),
      phat(static_cast<size_t>(n)), shat(static_cast<size_t>(n)), tmp(static_cast<size_t>(n));
  int used = 0;
  bool gave_up = false;
  while (used < max_iter && !gave_up) {
    A.apply(x.data(), tmp.data());
    for (int i = 0; i < n; ++i) r[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - tmp[static_cast<size_t>(i)];
    if (detail::norm_n(r) / bnorm <= tol) break;
    r0 = r;
    p = r;
    double rho = detail::dot_n(r0, r);
    bool breakdown = false;
    while (used < max_iter && !breakdown) {
      for (int i = 0; i < n; ++i) phat[static_cast<size_t>(i)] = dinv[static_cast<size_t>(i)] * p[static_cast<size_t>(i)];
      A.apply(phat.data(), v.data());
      const double r0v = detail::dot_n(r0, v);
      if (std::abs(r0v) < 1e-300) {
        breakdown = true;
        break;
      }
      const double alpha = rho / r0v;
      for (int i = 0; i < n; ++i) s[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] - alpha * v[static_cast<size_t>(i)];
      if (detail::norm_n(s) / bnorm <= tol) {
        for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] += alpha * phat[static_cast<size_t>(i)];
        ++used;
        breakdown = true;  // drop to the true-residual confirmation
        break;
      }
      for (int i = 0; i < n; ++i) shat[static_cast<size_t>(i)] = dinv[static_cast<size_t>(i)] * s[static_cast<size_t>(i)];
      A.apply(shat.data(), t.data());
      const double tt = detail::dot_n(t, t);
      if (tt < 1e-300) {
        breakdown = true;
        break;
      }
      const double omega = detail::dot_n(t, s) / tt;
      if (std::abs(omega) < 1e-300) {
        breakdown = true;
        break;
      }
      for (int i = 0; i < n; ++i) {
        x[static_cast<size_t>(i)] += alpha * phat[static_cast<size_t>(i)] + omega * shat[static_cast<size_t>(i)];
        r[static_cast<size_t>(i)] = s[static_cast<size_t>(i)] - omega * t[static_cast<size_t>(i)];
      }
      ++used;
      if (detail::norm_n(r) / bnorm <= tol) {
        breakdown = true;
        break;
      }
      const double rho_new = detail::dot_n(r0, r);
      if (std::abs(rho_new) < 1e-300) {
        breakdown = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (int i = 0; i < n; ++i)
        p[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] + beta * (p[static_cast<size_t>(i)] - omega * v[static_cast<size_t>(i)]);
    }
    if (used >= max_iter) gave_up = true;
  }
  A.apply(x.data(), tmp.data());
  for (int i = 0; i < n; ++i) r[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - tmp[static_cast<size_t>(i)];
  rep.iterations = used;
  rep.rel_residual = detail::norm_n(r) / bnorm;
  rep.converged = rep.rel_residual <= tol;
  if (!rep.converged && n <= 3000) {
    x = dense_solve(A, b);
    A.apply(x.data(), tmp.data());
    for (int i = 0; i < n; ++i) r[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - tmp[static_cast<size_t>(i)];
    rep.rel_residual = detail::norm_n(r) / bnorm;
    rep.converged = rep.rel_residual <= std::max(tol, 1e-10);
    rep.used_dense_fallback = true;
  }
  if (report) *report = rep;
  if (!rep.converged)
    throw NotConvergedError("nonsymmetric Krylov solve failed to reach tolerance",
                            rep.rel_residual);
  return x;
}

}  // namespace chorin
