#pragma once

// Deterministic output: shortest round-trip decimal formatting, CSV writers
// for the run artifacts, a legacy-ASCII VTK exporter, SHA-256 digests, and
// the JSON run manifest that makes a run reproducible bit for bit.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

#include "chorin/harness.hpp"

namespace chorin {

using json = nlohmann::json;

// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace detail {
inline void csv_row(std::ofstream& out, const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}
inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + path);
  return out;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// CSV artifacts.
// ---------------------------------------------------------------------------

inline void write_energy_csv(const std::string& path, const EnergyLedger& led) {
  auto out = detail::open_out(path);
  detail::csv_row(out, {"step", "t", "u_norm", "u_tilde_norm", "dissipation", "f_norm",
                        "stencil_residual", "div_residual", "momentum_slack", "growth_slack",
                        "energy_slack", "identity_residual"});
  for (const auto& r : led.rows)
    detail::csv_row(out, {std::to_string(r.n), format_double(r.t), format_double(r.u_norm),
                          format_double(r.u_tilde_norm), format_double(r.dissipation),
                          format_double(r.f_norm), format_double(r.stencil_residual),
                          format_double(r.div_residual), format_double(r.momentum_slack),
                          format_double(r.growth_slack), format_double(r.energy_slack),
                          format_double(r.identity_residual)});
}

inline void write_error_series_csv(const std::string& path, const ErrorSeries& es) {
  auto out = detail::open_out(path);
  detail::csv_row(out, {"t", "l2_u", "linf_u", "l2_u_tilde", "linf_u_tilde"});
  for (size_t i = 0; i < es.t.size(); ++i)
    detail::csv_row(out, {format_double(es.t[i]), format_double(es.l2_u[i]),
                          format_double(es.linf_u[i]), format_double(es.l2_ut[i]),
                          format_double(es.linf_ut[i])});
}

inline void write_convergence_csv(const std::string& path, const ConvergenceTable& tab) {
  auto out = detail::open_out(path);
  detail::csv_row(out, {"h", "tau", "steps", "t_end", "final_l2", "max_l2", "final_linf",
                        "max_linf"});
  for (const auto& r : tab.rows)
    detail::csv_row(out, {format_double(r.h), format_double(r.tau), std::to_string(r.steps),
                          format_double(r.t_end), format_double(r.final_l2),
                          format_double(r.max_l2), format_double(r.final_linf),
                          format_double(r.max_linf)});
}

inline void write_series_csv(const std::string& path, const std::string& name,
                             const std::vector<double>& values) {
  auto out = detail::open_out(path);
  detail::csv_row(out, {"index", name});
  for (size_t i = 0; i < values.size(); ++i)
    detail::csv_row(out, {std::to_string(i), format_double(values[i])});
}

// ---------------------------------------------------------------------------
// Legacy-ASCII VTK structured points.  The point cloud is embedded into its
// integer bounding box; lattice sites outside the cloud carry zeros.
// ---------------------------------------------------------------------------

inline void write_vtk(const std::string& path, const VectorField& u, const ScalarField* phi = nullptr) {
  const Grid& g = *u.g;
  Idx3 lo = g.pts.at(0), hi = g.pts.at(0);
  for (const auto& z : g.pts)
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], z[i]);
      hi[i] = std::max(hi[i], z[i]);
    }
  const int nx = hi[0] - lo[0] + 1, ny = hi[1] - lo[1] + 1, nz = hi[2] - lo[2] + 1;
  auto out = detail::open_out(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "chorin velocity field\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << nx << ' ' << ny << ' ' << nz << '\n';
  out << "ORIGIN " << format_double(lo[0] * g.h) << ' ' << format_double(lo[1] * g.h) << ' '
      << format_double(lo[2] * g.h) << '\n';
  out << "SPACING " << format_double(g.h) << ' ' << format_double(g.h) << ' '
      << format_double(g.h) << '\n';
  out << "POINT_DATA " << (static_cast<long long>(nx) * ny * nz) << '\n';
  out << "VECTORS velocity double\n";
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int p = g.ordinal({lo[0] + i, lo[1] + j, lo[2] + k});
        const Vec3 v = (p >= 0) ? u.vec(p) : Vec3{0.0, 0.0, 0.0};
        out << format_double(v[0]) << ' ' << format_double(v[1]) << ' ' << format_double(v[2])
            << '\n';
      }
  if (phi) {
    out << "SCALARS pressure_potential double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const int p = g.ordinal({lo[0] + i, lo[1] + j, lo[2] + k});
          out << format_double(phi->at(p)) << '\n';
        }
  }
}

// ---------------------------------------------------------------------------
// SHA-256.
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const void* data, size_t len) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, len) != 1 || EVP_DigestFinal_ex(ctx, md, &md_len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("SHA-256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(2 * md_len);
  for (unsigned int i = 0; i < md_len; ++i) {
    s.push_back(hex[md[i] >> 4]);
    s.push_back(hex[md[i] & 0xF]);
  }
  return s;
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_hex_file(const std::string& path) {
  return sha256_hex(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Run manifest: everything needed to rerun a case and to check its outputs.
// ---------------------------------------------------------------------------

inline constexpr const char* kToolVersion = "1.0.0";

struct ManifestOutput {
  std::string path;  // relative to the manifest location
  std::string sha256;
  uint64_t bytes = 0;
};

struct RunManifest {
  int schema_version = 1;
  std::string tool_version = kToolVersion;
  std::string command;
  json config;  // fully resolved configuration
  std::string grid_hash;
  uint64_t seed = 0;
  std::vector<ManifestOutput> outputs;
  double wall_seconds = 0.0;

  json to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["tool_version"] = tool_version;
    j["command"] = command;
    j["config"] = config;
    j["grid_hash"] = grid_hash;
    j["seed"] = seed;
    j["outputs"] = json::array();
    for (const auto& o : outputs)
      j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
    j["wall_seconds"] = wall_seconds;
    return j;
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != 1)
      throw ConfigError("unsupported manifest schema_version: " +
                        std::to_string(m.schema_version));
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.value("command", std::string{});
    m.config = j.at("config");
    m.grid_hash = j.value("grid_hash", std::string{});
    m.seed = j.value("seed", uint64_t{0});
    if (j.contains("outputs"))
      for (const auto& o : j.at("outputs"))
        m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>(),
                             o.at("bytes").get<uint64_t>()});
    m.wall_seconds = j.value("wall_seconds", 0.0);
    return m;
  }
};

inline void write_manifest(const std::string& path, const RunManifest& m) {
  auto out = detail::open_out(path);
  out << m.to_json().dump(2) << '\n';
}

inline RunManifest load_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  return RunManifest::from_json(j);
}

}  // namespace chorin
