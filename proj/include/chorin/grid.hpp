#pragma once

// Staircase discretization of a shape domain and the periodic torus lattice.
//
// A lattice point x = h*z joins the Dirichlet grid iff the cube of side 4h
// centered at x lies inside the domain; the conservative test used here is
// sdf(x) > 2*sqrt(3)*h (half diagonal of that cube) plus a relative epsilon
// so that points exactly on the threshold do not flip with rounding.
//
// Classification layers, all derived from the raw point set:
//   boundary      points missing at least one of their 6 lattice neighbors
//   interior      the rest
//   core          interior points whose forward 2h-block {x + a*h*e} for
//                 a in {0,1,2}^3 stays interior
//   sublattices   the 8 parity classes of the core (order fixed below);
//                 each must be connected under 2h steps or construction fails
//
// The torus grid (h = 1/N) has no boundary; its "sublattices" are the
// connected components of the 2h-shift graph: the 8 parity classes when N is
// even, a single component when N is odd.

#include <cstdint>
#include <deque>
#include <ostream>
#include <vector>

#include "chorin/domain.hpp"

namespace chorin {

// Parity classes in the fixed order (even,even,even), (even,even,odd),
// (even,odd,even), (odd,even,even), (even,odd,odd), (odd,odd,even),
// (odd,even,odd), (odd,odd,odd); indexed 0..7.
inline int parity_class(const Idx3& z) {
  static constexpr int table[8] = {0, 1, 2, 4, 3, 6, 5, 7};  // packed p1p2p3 -> class
  const int p1 = ((z[0] % 2) + 2) % 2;
  const int p2 = ((z[1] % 2) + 2) % 2;
  const int p3 = ((z[2] % 2) + 2) % 2;
  return table[p1 * 4 + p2 * 2 + p3];
}

enum class GridKind { dirichlet, torus };

class Grid {
 public:
  GridKind kind = GridKind::dirichlet;
  double h = 0.0;
  int torus_n = 0;  // torus only

  // Points in lexicographic (z1,z2,z3) order; all other arrays are indexed
  // by the resulting ordinal.
  std::vector<Idx3> pts;
  std::vector<std::array<std::int32_t, 6>> nbr;   // +-h  steps, slot 2*axis + (0 minus | 1 plus)
  std::vector<std::array<std::int32_t, 6>> nbr2;  // +-2h steps, same layout
  std::vector<std::uint8_t> bflag;                // 1 iff boundary
  std::vector<std::uint8_t> cflag;                // 1 iff core

  std::vector<std::int32_t> boundary_list;
  std::vector<std::int32_t> interior_list;
  std::vector<std::int32_t> core_list;
  // gamma[axis][0] = Gamma^{axis,-}, gamma[axis][1] = Gamma^{axis,+};
  // gamma_tilde likewise.  Dirichlet only (empty on the torus).
  std::array<std::array<std::vector<std::int32_t>, 2>, 3> gamma;
  std::array<std::array<std::vector<std::int32_t>, 2>, 3> gamma_tilde;
  // Dirichlet: 8 parity classes of the core.  Torus: the components of the
  // 2h-shift graph (8 for even N, 1 for odd N).
  std::vector<std::vector<std::int32_t>> sublattice;

  int n() const { return static_cast<int>(pts.size()); }
  bool is_boundary(int p) const { return bflag[static_cast<size_t>(p)] != 0; }
  bool is_interior(int p) const { return bflag[static_cast<size_t>(p)] == 0; }
  bool is_core(int p) const { return cflag[static_cast<size_t>(p)] != 0; }

  Vec3 coords(int p) const {
    const Idx3& z = pts[static_cast<size_t>(p)];
    return {h * z[0], h * z[1], h * z[2]};
  }

  // Ordinal of lattice index z, or -1 if absent.  Torus indices wrap.
  int ordinal(Idx3 z) const {
    if (kind == GridKind::torus) {
      for (int i = 0; i < 3; ++i) z[i] = ((z[i] % torus_n) + torus_n) % torus_n;
      return (z[0] * torus_n + z[1]) * torus_n + z[2];
    }
    for (int i = 0; i < 3; ++i) {
      const int c = z[i] - zmin_[i];
      if (c < 0 || c >= dims_[i]) return -1;
    }
    return lookup_[box_index(z)];
  }

  // Number of parity classes carrying pressure systems (8, or 1 for odd-N torus).
  int n_pressure_classes() const {
    return (kind == GridKind::torus && torus_n % 2 == 1) ? 1 : 8;
  }
  int pressure_class_of(int p) const {
    if (n_pressure_classes() == 1) return 0;
    return parity_class(pts[static_cast<size_t>(p)]);
  }

  // FNV-1a over the defining data; used by run manifests.
  std::uint64_t content_hash() const {
    std::uint64_t s = 14695981039346656037ull;
    auto mix = [&s](std::uint64_t v) {
      for (int k = 0; k < 8; ++k) {
        s ^= (v >> (8 * k)) & 0xff;
        s *= 1099511628211ull;
      }
    };
    mix(static_cast<std::uint64_t>(kind));
    std::uint64_t hb;
    static_assert(sizeof(hb) == sizeof(h));
    __builtin_memcpy(&hb, &h, 8);
    mix(hb);
    mix(static_cast<std::uint64_t>(torus_n));
    mix(static_cast<std::uint64_t>(pts.size()));
    for (const Idx3& z : pts) {
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(z[0])));
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(z[1])));
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(z[2])));
    }
    for (auto f : bflag) mix(f);
    for (auto f : cflag) mix(f);
    return s;
  }

  std::string content_hash_hex() const {
    static const char* hex = "0123456789abcdef";
    std::uint64_t v = content_hash();
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<size_t>(i)] = hex[v & 0xF];
    return s;
  }

  // Builder access.
  Idx3 zmin_{0, 0, 0};
  Idx3 dims_{0, 0, 0};
  std::vector<std::int32_t> lookup_;

  size_t box_index(const Idx3& z) const {
    return (static_cast<size_t>(z[0] - zmin_[0]) * dims_[1] + static_cast<size_t>(z[1] - zmin_[1])) *
               dims_[2] +
           static_cast<size_t>(z[2] - zmin_[2]);
  }
};

namespace detail {

inline void finish_classification(Grid& g) {
  const int n = g.n();
  g.nbr.assign(static_cast<size_t>(n), {});
  g.nbr2.assign(static_cast<size_t>(n), {});
  g.bflag.assign(static_cast<size_t>(n), 0);
  g.cflag.assign(static_cast<size_t>(n), 0);

  for (int p = 0; p < n; ++p) {
    const Idx3& z = g.pts[static_cast<size_t>(p)];
    bool bdry = false;
    for (int i = 0; i < 3; ++i) {
      for (int s = 0; s < 2; ++s) {
        const int d = s == 0 ? -1 : 1;
        Idx3 z1 = z, z2 = z;
        z1[i] += d;
        z2[i] += 2 * d;
        const int q1 = g.ordinal(z1);
        const int q2 = g.ordinal(z2);
        g.nbr[static_cast<size_t>(p)][2 * i + s] = q1;
        g.nbr2[static_cast<size_t>(p)][2 * i + s] = q2;
        if (q1 < 0) bdry = true;
      }
    }
    if (g.kind == GridKind::torus) bdry = false;  // no boundary on the torus
    g.bflag[static_cast<size_t>(p)] = bdry ? 1 : 0;
  }

  g.boundary_list.clear();
  g.interior_list.clear();
  for (int p = 0; p < n; ++p)
    (g.is_boundary(p) ? g.boundary_list : g.interior_list).push_back(p);

  if (g.interior_list.empty())
    throw EmptyGridError("grid has no interior points; decrease h");

  // Core: forward 2h-block of interior points.
  g.core_list.clear();
  for (int p : g.interior_list) {
    const Idx3& z = g.pts[static_cast<size_t>(p)];
    bool ok = true;
    for (int a1 = 0; a1 <= 2 && ok; ++a1)
      for (int a2 = 0; a2 <= 2 && ok; ++a2)
        for (int a3 = 0; a3 <= 2 && ok; ++a3) {
          const int q = g.ordinal({z[0] + a1, z[1] + a2, z[2] + a3});
          if (q < 0 || g.is_boundary(q)) ok = false;
        }
    if (ok) {
      g.cflag[static_cast<size_t>(p)] = 1;
      g.core_list.push_back(p);
    }
  }

  // Directional boundary strata.
  for (int i = 0; i < 3; ++i)
    for (int s = 0; s < 2; ++s) {
      g.gamma[static_cast<size_t>(i)][static_cast<size_t>(s)].clear();
      g.gamma_tilde[static_cast<size_t>(i)][static_cast<size_t>(s)].clear();
    }
  for (int p : g.boundary_list) {
    for (int i = 0; i < 3; ++i) {
      // Gamma^{i+}: the neighbor *behind* (x - h e^i) is interior; mirrored for i-.
      const int behind = g.nbr[static_cast<size_t>(p)][2 * i + 0];
      const int ahead = g.nbr[static_cast<size_t>(p)][2 * i + 1];
      if (behind >= 0 && g.is_interior(behind)) g.gamma[static_cast<size_t>(i)][1].push_back(p);
      if (ahead >= 0 && g.is_interior(ahead)) g.gamma[static_cast<size_t>(i)][0].push_back(p);
      if (ahead < 0) g.gamma_tilde[static_cast<size_t>(i)][1].push_back(p);
      if (behind < 0) g.gamma_tilde[static_cast<size_t>(i)][0].push_back(p);
    }
  }
}

// Connected components of the 2h-step graph restricted to `members`
// (ordered); returns component sizes and fills comp_of (-1 outside members).
inline std::vector<int> components_2h(const Grid& g, const std::vector<std::int32_t>& members,
                                      std::vector<int>& comp_of) {
  comp_of.assign(static_cast<size_t>(g.n()), -1);
  for (int p : members) comp_of[static_cast<size_t>(p)] = -2;  // member, unvisited
  std::vector<int> sizes;
  std::deque<int> queue;
  for (int p : members) {
    if (comp_of[static_cast<size_t>(p)] != -2) continue;
    const int c = static_cast<int>(sizes.size());
    sizes.push_back(0);
    comp_of[static_cast<size_t>(p)] = c;
    queue.push_back(p);
    while (!queue.empty()) {
      const int q = queue.front();
      queue.pop_front();
      ++sizes[static_cast<size_t>(c)];
      for (int slot = 0; slot < 6; ++slot) {
        const int r = g.nbr2[static_cast<size_t>(q)][static_cast<size_t>(slot)];
        if (r >= 0 && comp_of[static_cast<size_t>(r)] == -2) {
          comp_of[static_cast<size_t>(r)] = c;
          queue.push_back(r);
        }
      }
    }
  }
  return sizes;
}

}  // namespace detail

inline Grid build_dirichlet_grid(const DomainSpec& spec, double h) {
  if (spec.is_torus()) throw ConfigError("build_dirichlet_grid: spec is a torus");
  if (!(h > 0.0)) throw ConfigError("mesh size h must be > 0");

  Grid g;
  g.kind = GridKind::dirichlet;
  g.h = h;

  const Vec3 bw = spec.bounding_half_widths();
  for (int i = 0; i < 3; ++i) {
    g.zmin_[i] = static_cast<int>(std::floor((spec.center[i] - bw[i]) / h)) - 2;
    const int zmax = static_cast<int>(std::ceil((spec.center[i] + bw[i]) / h)) + 2;
    g.dims_[i] = zmax - g.zmin_[i] + 1;
  }

  const double threshold = 2.0 * std::sqrt(3.0) * h + 1e-12 * h;
  g.lookup_.assign(static_cast<size_t>(g.dims_[0]) * g.dims_[1] * g.dims_[2], -1);
  for (int z1 = g.zmin_[0]; z1 < g.zmin_[0] + g.dims_[0]; ++z1)
    for (int z2 = g.zmin_[1]; z2 < g.zmin_[1] + g.dims_[1]; ++z2)
      for (int z3 = g.zmin_[2]; z3 < g.zmin_[2] + g.dims_[2]; ++z3) {
        const Idx3 z{z1, z2, z3};
        if (signed_distance(spec, {h * z1, h * z2, h * z3}) > threshold) {
          g.lookup_[g.box_index(z)] = static_cast<std::int32_t>(g.pts.size());
          g.pts.push_back(z);
        }
      }
  if (g.pts.empty())
    throw EmptyGridError("no lattice point admits a surrounding 4h cube inside the domain; decrease h");

  detail::finish_classification(g);

  // Sublattices: parity classes of the core, each connected under 2h steps.
  g.sublattice.assign(8, {});
  for (int p : g.core_list)
    g.sublattice[static_cast<size_t>(parity_class(g.pts[static_cast<size_t>(p)]))].push_back(p);
  for (int j = 0; j < 8; ++j) {
    std::vector<int> comp_of;
    // Restrict steps to the sublattice itself: temporary member BFS relying on
    // nbr2 plus the membership mask built inside components_2h.
    const auto sizes = detail::components_2h(g, g.sublattice[static_cast<size_t>(j)], comp_of);
    if (sizes.size() > 1) {
      std::string msg = "sublattice " + std::to_string(j + 1) +
                        " is disconnected under 2h steps; component sizes:";
      for (int s : sizes) msg += " " + std::to_string(s);
      throw DisconnectedSublatticeError(msg + "; decrease h");
    }
  }
  return g;
}

inline Grid build_torus_grid(int N) {
  if (N < 4) throw InvalidNError("torus requires N >= 4, got N = " + std::to_string(N));
  Grid g;
  g.kind = GridKind::torus;
  g.torus_n = N;
  g.h = 1.0 / N;
  g.zmin_ = {0, 0, 0};
  g.dims_ = {N, N, N};
  g.pts.reserve(static_cast<size_t>(N) * N * N);
  for (int z1 = 0; z1 < N; ++z1)
    for (int z2 = 0; z2 < N; ++z2)
      for (int z3 = 0; z3 < N; ++z3) g.pts.push_back({z1, z2, z3});

  detail::finish_classification(g);

  std::vector<int> comp_of;
  std::vector<std::int32_t> all(g.pts.size());
  for (int p = 0; p < g.n(); ++p) all[static_cast<size_t>(p)] = p;
  const auto sizes = detail::components_2h(g, all, comp_of);
  const size_t expected = (N % 2 == 0) ? 8 : 1;
  if (sizes.size() != expected)
    throw NumericalError("torus 2h-shift graph has " + std::to_string(sizes.size()) +
                         " components, expected " + std::to_string(expected));
  g.sublattice.assign(expected, {});
  for (int p = 0; p < g.n(); ++p)
    g.sublattice[static_cast<size_t>(comp_of[static_cast<size_t>(p)])].push_back(p);
  // Normalize component order to the parity-class order for even N.
  if (N % 2 == 0) {
    std::vector<std::vector<std::int32_t>> by_parity(8);
    for (auto& comp : g.sublattice) {
      const int j = parity_class(g.pts[static_cast<size_t>(comp.front())]);
      by_parity[static_cast<size_t>(j)] = std::move(comp);
    }
    g.sublattice = std::move(by_parity);
  }
  return g;
}

struct GapReport {
  double max_boundary_gap = 0.0;       // max over boundary points of dist to the surface
  double boundary_gap_bound = 0.0;     // (1 + 2*sqrt(3)) h
  double max_core_boundary_gap = 0.0;  // same for the boundary of the core
  double core_gap_bound = 0.0;         // 2 (1 + 2*sqrt(3)) h
};

// Distances from discrete boundaries to the true surface.  Uses the exact
// signed distance, so "gap" is the exact nearest-surface distance.
inline GapReport boundary_gap_report(const Grid& g, const DomainSpec& spec) {
  if (g.kind != GridKind::dirichlet) throw ConfigError("gap report requires a Dirichlet grid");
  GapReport r;
  r.boundary_gap_bound = (1.0 + 2.0 * std::sqrt(3.0)) * g.h;
  r.core_gap_bound = 2.0 * r.boundary_gap_bound;
  for (int p : g.boundary_list)
    r.max_boundary_gap = std::max(r.max_boundary_gap, std::abs(signed_distance(spec, g.coords(p))));
  // Boundary of the core as a point set: core points missing a core neighbor.
  for (int p : g.core_list) {
    bool edge = false;
    for (int slot = 0; slot < 6 && !edge; ++slot) {
      const int q = g.nbr[static_cast<size_t>(p)][static_cast<size_t>(slot)];
      if (q < 0 || !g.is_core(q)) edge = true;
    }
    if (edge)
      r.max_core_boundary_gap =
          std::max(r.max_core_boundary_gap, std::abs(signed_distance(spec, g.coords(p))));
  }
  return r;
}

// Point-cloud export: z1,z2,z3,class with class in {interior, boundary, core_j}.
inline void write_grid_csv(const Grid& g, std::ostream& os) {
  os << "z1,z2,z3,class\n";
  for (int p = 0; p < g.n(); ++p) {
    const Idx3& z = g.pts[static_cast<size_t>(p)];
    os << z[0] << ',' << z[1] << ',' << z[2] << ',';
    if (g.is_core(p))
      os << "core_" << (g.pressure_class_of(p) + 1);
    else if (g.is_boundary(p))
      os << "boundary";
    else
      os << "interior";
    os << '\n';
  }
}

}  // namespace chorin
