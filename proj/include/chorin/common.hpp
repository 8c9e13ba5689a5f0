#pragma once

// Shared basics: index/vector triples, error taxonomy, deterministic RNG
// helpers.  Everything downstream includes this header.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace chorin {

using Idx3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------
// Error taxonomy.  Construction/validation problems and numerical failures
// are kept distinct so the CLI can map them to exit codes 2 and 1.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid inputs / configuration (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};
struct EmptyGridError : ConfigError {
  using ConfigError::ConfigError;
};
struct InvalidNError : ConfigError {
  using ConfigError::ConfigError;
};
struct GridMismatchError : ConfigError {
  using ConfigError::ConfigError;
};
struct OutsideCoverageError : ConfigError {
  using ConfigError::ConfigError;
};

// Numerical failures (CLI exit code 1).
struct NumericalError : Error {
  using Error::Error;
};
struct DisconnectedSublatticeError : NumericalError {
  using NumericalError::NumericalError;
};
struct NotConvergedError : NumericalError {
  double final_residual = 0.0;
  NotConvergedError(const std::string& msg, double res) : NumericalError(msg), final_residual(res) {}
};
struct SolverDivergenceError : NumericalError {
  double final_residual = 0.0;
  SolverDivergenceError(const std::string& msg, double res) : NumericalError(msg), final_residual(res) {}
};
struct SmallnessViolatedError : NumericalError {
  double max_abs = 0.0;
  double beta0 = 0.0;
  SmallnessViolatedError(const std::string& msg, double m, double b)
      : NumericalError(msg), max_abs(m), beta0(b) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG.  All randomized tests and probes seed explicitly; the
// engine choice is part of the reproducibility contract.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

inline double uniform_pm1(Rng& rng) {
  // Fixed 53-bit path rather than std::uniform_real_distribution: the
  // distribution's algorithm is implementation-defined, which would make
  // "same seed, same bytes" depend on the standard library.
  const std::uint64_t bits = rng() >> 11;  // 53 bits
  const double u = static_cast<double>(bits) * 0x1.0p-53;  // [0,1)
  return 2.0 * u - 1.0;
}

inline constexpr double kPi = 3.14159265358979323846264338327950288;

}  // namespace chorin
