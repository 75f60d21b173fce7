// Run configuration: a validated, typed view of a TOML config file plus
// factories that turn it into the model, grid, initial state and source the
// solver consumes. Parsing aggregates every violation (unknown keys, type
// mismatches, range constraints) into one ValidationError instead of stopping
// at the first.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "porodyn/evolution.hpp"
#include "porodyn/grid.hpp"
#include "porodyn/phi_model.hpp"
#include "porodyn/toml.hpp"

namespace porodyn {

struct ModelConfig {
  std::string kind = "biofilm";  // biofilm | pme | linear
  double a = 1.0;                // biofilm singularity exponent, a >= 1
  double b = 1.0;                // biofilm degeneracy exponent, b > 0
  double m = 2.0;                // pme exponent, m > 1
  int approx_k = 0;              // > 0: run on the smoothed tabulated approximation
};

struct GridConfig {
  int d = 1;
  int n = 128;                 // cells per axis, power of two
  double L = 1.0;              // box [-L, L)^d
  std::string bc = "periodic";  // periodic | zeroflux
};

struct TimeConfig {
  double T = 0.5;
  double eps = 1.0 / 256.0;    // step-size certificate target
  double picard_tol = 1e-10;   // reaction-coupling fixed-point tolerance
};

struct SourceConfig {
  std::string kind = "none";  // none | bumps | logistic
  bool nonnegative = false;   // bumps: restrict to nonnegative amplitudes
  double rate = 1.0;          // logistic: f(z) = rate * z * (1 - z)
};

struct InitialConfig {
  std::string kind = "zeros";  // zeros | bumps | barenblatt
  double amp_lo = -0.8;        // bumps amplitude range
  double amp_hi = 0.8;
  double t0 = 1.0;             // barenblatt: reference time of the profile
};

struct OutputsConfig {
  std::string directory = "out";
  int snapshot_stride = 0;  // write a binary state snapshot every k steps; 0 = none
};

struct VerifyConfig {
  int trials = 25;
  bool with_forcing = true;
};

struct RegularityConfig {
  std::vector<int> levels = {64, 128, 256};  // refinement resolutions
  double p = 2.0;
  std::vector<double> sigma_t = {0.0};
  std::vector<double> sigma_x = {0.5, 0.9};
};

struct KineticConfig {
  int bins = 64;
};

// One sweep axis: a parameter name (a, b, m, rate, n, eps, T or seed) and the
// values it takes. The sweep command runs the cartesian product.
struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct RunConfig {
  std::uint64_t seed = 0;  // master seed; batch trials derive their own from it
  ModelConfig model;
  GridConfig grid;
  TimeConfig time;
  SourceConfig source;
  InitialConfig initial;
  OutputsConfig outputs;
  VerifyConfig verify;
  RegularityConfig regularity;
  KineticConfig kinetic;
  std::vector<SweepAxis> sweep;  // file order; empty unless a [sweep] section is present

  // Every range violation, one message per constraint; empty when valid.
  std::vector<std::string> violations() const;
  // Throws ValidationError when violations() is nonempty.
  void validate() const;

  // Factories. All assume a validated config.
  PhiModel build_model() const;            // applies approx_k smoothing when set
  Grid build_grid() const;
  Field build_initial(const Grid& g) const;
  SourceSpec build_source(const Grid& g) const;
};

// Typed view of a parsed document; throws ValidationError aggregating unknown
// keys, type mismatches and range violations.
RunConfig config_from_toml(const TomlDocument& doc);

// parse_toml_file + config_from_toml. IOError when the file cannot be opened,
// ParseError on syntax, ValidationError on anything semantic.
RunConfig parse_config(const std::string& path);

// Shipped example configs; ConfigError on an unknown name.
std::string preset_config(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace porodyn
