#pragma once

// Strict JSON run configuration.  Unknown keys are errors (they are almost
// always typos in scientific configs), every validation message names the
// offending field, and the fully resolved configuration (defaults filled) is
// exposed for the run manifest so reruns are exact.

#include <set>

#include "chorin/io.hpp"

namespace chorin {

struct TimeConfig {
  ScalingRule::Kind scaling = ScalingRule::Kind::h2;
  double theta = 1.0;
  double tau = 0.0;   // explicit scaling only
  double T = 0.0;     // horizon; steps derived when not given
  int steps = 0;      // 0 = derive from T
};

struct ManufacturedConfig {
  std::string kind;  // "torus_trig" | "ball_swirl"
  double amplitude = 1.0;
  std::array<double, 3> mix{1.0, 0.0, 0.0};  // ball_swirl: axis weights
};

struct OutputConfig {
  std::string energy_csv = "energy.csv";
  std::string error_csv;    // empty = skip
  std::string vtk;          // empty = skip; final state only
  std::string grid_csv;     // empty = skip
  std::string manifest = "manifest.json";
};

struct PeriodicSearchConfig {
  std::string accel = "picard";  // "picard" | "anderson"
  int anderson_window = 3;
  double tol = 1e-8;
  int max_iter = 200;
  int contraction_steps = 0;  // 0 = one period
};

struct Config {
  int schema_version = 1;
  DomainSpec domain;
  double h = 0.0;  // Dirichlet grids; torus derives h = 1/N
  double nu = 1.0;
  TimeConfig time;
  StepperOptions solver;
  std::string forcing_kind = "zero";        // "zero" | "manufactured"
  std::string initial_kind = "zero";        // "zero" | "manufactured" | "random"
  double initial_l2 = 1.0;                  // random initial data only
  ManufacturedConfig manufactured;
  OutputConfig output;
  PeriodicSearchConfig periodic;
  uint64_t seed = 12345;
  int threads = 1;

  json resolved;  // defaults filled in; what the manifest records

  Grid build_grid() const {
    return domain.is_torus() ? build_torus_grid(domain.torus_n)
                             : build_dirichlet_grid(domain, h);
  }
  double grid_h() const { return domain.is_torus() ? 1.0 / domain.torus_n : h; }
  double tau_for_grid(double gh) const {
    ScalingRule r;
    r.kind = time.scaling;
    r.theta = time.theta;
    r.taus = {time.tau};
    return r.tau_for(gh, 0);
  }
  int steps_for_tau(double tau) const {
    if (time.steps > 0) return time.steps;
    return std::max(1, static_cast<int>(std::floor(time.T / tau + 1e-9)));
  }
  bool needs_manufactured() const {
    return forcing_kind == "manufactured" || initial_kind == "manufactured";
  }
  ManufacturedSolution build_manufactured() const {
    if (manufactured.kind == "torus_trig") return torus_trig(manufactured.amplitude);
    if (manufactured.kind == "ball_swirl")
      return ball_swirl_mix(domain.radius, manufactured.mix[0], manufactured.mix[1],
                            manufactured.mix[2]);
    throw ConfigError("manufactured.kind must be \"torus_trig\" or \"ball_swirl\", got \"" +
                      manufactured.kind + "\"");
  }
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key: " + (where.empty() ? it.key() : where + "." + it.key()));
}

inline const json& require_key(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing config key: " + where);
  return j.at(key);
}

inline double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

inline double get_positive(const json& j, const std::string& where) {
  const double v = get_number(j, where);
  if (!(v > 0.0)) throw ConfigError(where + " must be > 0");
  return v;
}

inline int get_positive_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  const long long v = j.get<long long>();
  if (v <= 0) throw ConfigError(where + " must be > 0");
  return static_cast<int>(v);
}

inline std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

inline Vec3 get_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + " must be an array of 3 numbers");
  Vec3 v;
  for (size_t i = 0; i < 3; ++i) v[i] = get_number(j.at(i), where);
  return v;
}

inline DomainSpec parse_domain(const json& j) {
  if (!j.is_object()) throw ConfigError("domain must be an object");
  const std::string kind = get_string(require_key(j, "kind", "domain.kind"), "domain.kind");
  if (kind == "ball") {
    reject_unknown_keys(j, {"kind", "center", "radius"}, "domain");
    const Vec3 c = j.contains("center") ? get_vec3(j.at("center"), "domain.center")
                                        : Vec3{0.0, 0.0, 0.0};
    return DomainSpec::ball(c, get_positive(require_key(j, "radius", "domain.radius"),
                                            "domain.radius"));
  }
  if (kind == "ellipsoid") {
    reject_unknown_keys(j, {"kind", "center", "semiaxes"}, "domain");
    const Vec3 c = j.contains("center") ? get_vec3(j.at("center"), "domain.center")
                                        : Vec3{0.0, 0.0, 0.0};
    return DomainSpec::ellipsoid(
        c, get_vec3(require_key(j, "semiaxes", "domain.semiaxes"), "domain.semiaxes"));
  }
  if (kind == "rounded_box") {
    reject_unknown_keys(j, {"kind", "center", "half_extents", "corner_radius"}, "domain");
    const Vec3 c = j.contains("center") ? get_vec3(j.at("center"), "domain.center")
                                        : Vec3{0.0, 0.0, 0.0};
    return DomainSpec::rounded_box(
        c, get_vec3(require_key(j, "half_extents", "domain.half_extents"), "domain.half_extents"),
        get_positive(require_key(j, "corner_radius", "domain.corner_radius"),
                     "domain.corner_radius"));
  }
  if (kind == "torus") {
    reject_unknown_keys(j, {"kind", "n"}, "domain");
    return DomainSpec::torus(get_positive_int(require_key(j, "n", "domain.n"), "domain.n"));
  }
  throw ConfigError("domain.kind must be one of \"ball\", \"ellipsoid\", \"rounded_box\", "
                    "\"torus\"; got \"" + kind + "\"");
}

inline json domain_to_json(const DomainSpec& d) {
  json j;
  switch (d.kind) {
    case DomainSpec::Kind::ball:
      j = {{"kind", "ball"}, {"center", {d.center[0], d.center[1], d.center[2]}},
           {"radius", d.radius}};
      break;
    case DomainSpec::Kind::ellipsoid:
      j = {{"kind", "ellipsoid"}, {"center", {d.center[0], d.center[1], d.center[2]}},
           {"semiaxes", {d.semiaxes[0], d.semiaxes[1], d.semiaxes[2]}}};
      break;
    case DomainSpec::Kind::rounded_box:
      j = {{"kind", "rounded_box"}, {"center", {d.center[0], d.center[1], d.center[2]}},
           {"half_extents", {d.half_extents[0], d.half_extents[1], d.half_extents[2]}},
           {"corner_radius", d.corner_radius}};
      break;
    case DomainSpec::Kind::torus:
      j = {{"kind", "torus"}, {"n", d.torus_n}};
      break;
  }
  return j;
}

}  // namespace detail

inline Config parse_config(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(j,
                      {"schema_version", "domain", "h", "nu", "time", "solver", "forcing",
                       "initial", "manufactured", "output", "periodic", "seed", "threads"},
                      "");
  Config c;
  c.schema_version = get_positive_int(
      require_key(j, "schema_version", "schema_version"), "schema_version");
  if (c.schema_version != 1)
    throw ConfigError("schema_version must be 1, got " + std::to_string(c.schema_version));
  c.domain = parse_domain(require_key(j, "domain", "domain"));

  if (c.domain.is_torus()) {
    if (j.contains("h")) throw ConfigError("h is derived from domain.n on the torus; remove h");
  } else {
    c.h = get_positive(require_key(j, "h", "h"), "h");
  }
  if (j.contains("nu")) c.nu = get_positive(j.at("nu"), "nu");

  const json& jt = require_key(j, "time", "time");
  if (!jt.is_object()) throw ConfigError("time must be an object");
  reject_unknown_keys(jt, {"scaling", "theta", "tau", "T", "steps"}, "time");
  const std::string scaling =
      get_string(require_key(jt, "scaling", "time.scaling"), "time.scaling");
  if (scaling == "h34")
    c.time.scaling = ScalingRule::Kind::h34;
  else if (scaling == "h2")
    c.time.scaling = ScalingRule::Kind::h2;
  else if (scaling == "explicit")
    c.time.scaling = ScalingRule::Kind::explicit_tau;
  else
    throw ConfigError("time.scaling must be \"h34\", \"h2\", or \"explicit\"; got \"" + scaling +
                      "\"");
  if (jt.contains("theta")) {
    if (c.time.scaling == ScalingRule::Kind::explicit_tau)
      throw ConfigError("time.theta does not apply with time.scaling = \"explicit\"");
    c.time.theta = get_positive(jt.at("theta"), "time.theta");
  }
  if (c.time.scaling == ScalingRule::Kind::explicit_tau) {
    c.time.tau = get_positive(require_key(jt, "tau", "time.tau"), "time.tau");
  } else if (jt.contains("tau")) {
    throw ConfigError("time.tau applies only with time.scaling = \"explicit\"");
  }
  if (jt.contains("steps")) c.time.steps = get_positive_int(jt.at("steps"), "time.steps");
  if (jt.contains("T")) c.time.T = get_positive(jt.at("T"), "time.T");
  if (c.time.steps == 0 && c.time.T == 0.0)
    throw ConfigError("time requires T or steps");

  if (j.contains("solver")) {
    const json& js = j.at("solver");
    if (!js.is_object()) throw ConfigError("solver must be an object");
    reject_unknown_keys(
        js, {"momentum_tol", "momentum_max_iter", "projection_tol", "projection_max_iter"},
        "solver");
    if (js.contains("momentum_tol"))
      c.solver.momentum_tol = get_positive(js.at("momentum_tol"), "solver.momentum_tol");
    if (js.contains("momentum_max_iter"))
      c.solver.momentum_max_iter =
          get_positive_int(js.at("momentum_max_iter"), "solver.momentum_max_iter");
    if (js.contains("projection_tol"))
      c.solver.projection_tol = get_positive(js.at("projection_tol"), "solver.projection_tol");
    if (js.contains("projection_max_iter"))
      c.solver.projection_max_iter =
          get_positive_int(js.at("projection_max_iter"), "solver.projection_max_iter");
  }
  c.solver.nu = c.nu;

  if (j.contains("forcing")) {
    const json& jf = j.at("forcing");
    if (!jf.is_object()) throw ConfigError("forcing must be an object");
    reject_unknown_keys(jf, {"kind"}, "forcing");
    c.forcing_kind = get_string(require_key(jf, "kind", "forcing.kind"), "forcing.kind");
    if (c.forcing_kind != "zero" && c.forcing_kind != "manufactured")
      throw ConfigError("forcing.kind must be \"zero\" or \"manufactured\"; got \"" +
                        c.forcing_kind + "\"");
  }

  if (j.contains("initial")) {
    const json& ji = j.at("initial");
    if (!ji.is_object()) throw ConfigError("initial must be an object");
    reject_unknown_keys(ji, {"kind", "l2"}, "initial");
    c.initial_kind = get_string(require_key(ji, "kind", "initial.kind"), "initial.kind");
    if (c.initial_kind != "zero" && c.initial_kind != "manufactured" &&
        c.initial_kind != "random")
      throw ConfigError("initial.kind must be \"zero\", \"manufactured\", or \"random\"; got \"" +
                        c.initial_kind + "\"");
    if (ji.contains("l2")) {
      if (c.initial_kind != "random")
        throw ConfigError("initial.l2 applies only with initial.kind = \"random\"");
      c.initial_l2 = get_positive(ji.at("l2"), "initial.l2");
    }
  }

  if (j.contains("manufactured")) {
    const json& jm = j.at("manufactured");
    if (!jm.is_object()) throw ConfigError("manufactured must be an object");
    reject_unknown_keys(jm, {"kind", "amplitude", "mix"}, "manufactured");
    c.manufactured.kind =
        get_string(require_key(jm, "kind", "manufactured.kind"), "manufactured.kind");
    if (c.manufactured.kind != "torus_trig" && c.manufactured.kind != "ball_swirl")
      throw ConfigError("manufactured.kind must be \"torus_trig\" or \"ball_swirl\"; got \"" +
                        c.manufactured.kind + "\"");
    if (jm.contains("amplitude"))
      c.manufactured.amplitude = get_positive(jm.at("amplitude"), "manufactured.amplitude");
    if (jm.contains("mix")) {
      const Vec3 m = get_vec3(jm.at("mix"), "manufactured.mix");
      c.manufactured.mix = {m[0], m[1], m[2]};
    }
    if (c.manufactured.kind == "torus_trig" && !c.domain.is_torus())
      throw ConfigError("manufactured.kind \"torus_trig\" requires a torus domain");
    if (c.manufactured.kind == "ball_swirl" && c.domain.kind != DomainSpec::Kind::ball)
      throw ConfigError("manufactured.kind \"ball_swirl\" requires a ball domain");
  } else if (c.needs_manufactured()) {
    throw ConfigError("forcing/initial reference a manufactured solution but the "
                      "\"manufactured\" section is missing");
  }

  if (j.contains("periodic")) {
    const json& jp = j.at("periodic");
    if (!jp.is_object()) throw ConfigError("periodic must be an object");
    reject_unknown_keys(jp, {"accel", "anderson_window", "tol", "max_iter", "contraction_steps"},
                        "periodic");
    if (jp.contains("accel")) {
      c.periodic.accel = get_string(jp.at("accel"), "periodic.accel");
      if (c.periodic.accel != "picard" && c.periodic.accel != "anderson")
        throw ConfigError("periodic.accel must be \"picard\" or \"anderson\"; got \"" +
                          c.periodic.accel + "\"");
    }
    if (jp.contains("anderson_window"))
      c.periodic.anderson_window =
          get_positive_int(jp.at("anderson_window"), "periodic.anderson_window");
    if (jp.contains("tol")) c.periodic.tol = get_positive(jp.at("tol"), "periodic.tol");
    if (jp.contains("max_iter"))
      c.periodic.max_iter = get_positive_int(jp.at("max_iter"), "periodic.max_iter");
    if (jp.contains("contraction_steps"))
      c.periodic.contraction_steps =
          get_positive_int(jp.at("contraction_steps"), "periodic.contraction_steps");
  }

  if (j.contains("output")) {
    const json& jo = j.at("output");
    if (!jo.is_object()) throw ConfigError("output must be an object");
    reject_unknown_keys(jo, {"energy_csv", "error_csv", "vtk", "grid_csv", "manifest"}, "output");
    if (jo.contains("energy_csv"))
      c.output.energy_csv = get_string(jo.at("energy_csv"), "output.energy_csv");
    if (jo.contains("error_csv"))
      c.output.error_csv = get_string(jo.at("error_csv"), "output.error_csv");
    if (jo.contains("vtk")) c.output.vtk = get_string(jo.at("vtk"), "output.vtk");
    if (jo.contains("grid_csv")) c.output.grid_csv = get_string(jo.at("grid_csv"), "output.grid_csv");
    if (jo.contains("manifest")) c.output.manifest = get_string(jo.at("manifest"), "output.manifest");
  }
  if (c.output.error_csv.empty() && c.forcing_kind == "manufactured" &&
      c.initial_kind == "manufactured")
    c.output.error_csv = "error.csv";

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    c.seed = j.at("seed").get<uint64_t>();
  }
  if (j.contains("threads")) c.threads = get_positive_int(j.at("threads"), "threads");

  // Resolved view, defaults included, in a fixed key order (nlohmann objects
  // serialize alphabetically, which is itself deterministic).
  json r;
  r["schema_version"] = 1;
  r["domain"] = detail::domain_to_json(c.domain);
  if (!c.domain.is_torus()) r["h"] = c.h;
  r["nu"] = c.nu;
  r["time"] = {{"scaling", scaling}};
  if (c.time.scaling == ScalingRule::Kind::explicit_tau)
    r["time"]["tau"] = c.time.tau;
  else
    r["time"]["theta"] = c.time.theta;
  if (c.time.T > 0.0) r["time"]["T"] = c.time.T;
  if (c.time.steps > 0) r["time"]["steps"] = c.time.steps;
  r["solver"] = {{"momentum_tol", c.solver.momentum_tol},
                 {"momentum_max_iter", c.solver.momentum_max_iter},
                 {"projection_tol", c.solver.projection_tol}};
  // -1 is the internal "use the projection solver's default cap" sentinel;
  // it is not part of the schema, so omit the key unless a cap was set.
  if (c.solver.projection_max_iter > 0)
    r["solver"]["projection_max_iter"] = c.solver.projection_max_iter;
  r["forcing"] = {{"kind", c.forcing_kind}};
  r["initial"] = {{"kind", c.initial_kind}};
  if (c.initial_kind == "random") r["initial"]["l2"] = c.initial_l2;
  if (!c.manufactured.kind.empty())
    r["manufactured"] = {{"kind", c.manufactured.kind},
                         {"amplitude", c.manufactured.amplitude},
                         {"mix", {c.manufactured.mix[0], c.manufactured.mix[1],
                                  c.manufactured.mix[2]}}};
  r["output"] = {{"energy_csv", c.output.energy_csv}, {"manifest", c.output.manifest}};
  if (!c.output.error_csv.empty()) r["output"]["error_csv"] = c.output.error_csv;
  if (!c.output.vtk.empty()) r["output"]["vtk"] = c.output.vtk;
  if (!c.output.grid_csv.empty()) r["output"]["grid_csv"] = c.output.grid_csv;
  r["periodic"] = {{"accel", c.periodic.accel},
                   {"anderson_window", c.periodic.anderson_window},
                   {"tol", c.periodic.tol},
                   {"max_iter", c.periodic.max_iter}};
  if (c.periodic.contraction_steps > 0)
    r["periodic"]["contraction_steps"] = c.periodic.contraction_steps;
  r["seed"] = c.seed;
  r["threads"] = c.threads;
  c.resolved = std::move(r);
  return c;
}

inline Config load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace chorin
