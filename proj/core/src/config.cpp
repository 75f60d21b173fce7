#include "porodyn/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "porodyn/harness.hpp"

namespace porodyn {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "model.kind", "model.a", "model.b", "model.m", "model.approx_k",
      "grid.d", "grid.n", "grid.L", "grid.bc",
      "time.T", "time.eps", "time.picard_tol",
      "source.kind", "source.nonnegative", "source.rate",
      "initial.kind", "initial.amp_lo", "initial.amp_hi", "initial.t0",
      "outputs.directory", "outputs.snapshot_stride",
      "verify.trials", "verify.with_forcing",
      "regularity.levels", "regularity.p", "regularity.sigma_t", "regularity.sigma_x",
      "kinetic.bins",
      "sweep.a", "sweep.b", "sweep.m", "sweep.rate", "sweep.n", "sweep.eps", "sweep.T",
      "sweep.seed",
  };
  return keys;
}

// Typed key extraction that records a violation and keeps the default on a
// type mismatch, so one pass reports every problem in the file.
struct Reader {
  const TomlDocument& doc;
  std::vector<std::string>& out;

  double number(const std::string& key, double dflt) const {
    const TomlValue* v = doc.find(key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Integer && v->kind != TomlValue::Kind::Float) {
      out.push_back(key + " must be a number");
      return dflt;
    }
    return v->as_number();
  }

  int integer(const std::string& key, int dflt) const {
    const TomlValue* v = doc.find(key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Integer) {
      out.push_back(key + " must be an integer");
      return dflt;
    }
    return static_cast<int>(v->integer);
  }

  std::uint64_t nonneg_integer(const std::string& key, std::uint64_t dflt) const {
    const TomlValue* v = doc.find(key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Integer || v->integer < 0) {
      out.push_back(key + " must be a nonnegative integer");
      return dflt;
    }
    return static_cast<std::uint64_t>(v->integer);
  }

  std::string text(const std::string& key, const std::string& dflt) const {
    const TomlValue* v = doc.find(key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::String) {
      out.push_back(key + " must be a string");
      return dflt;
    }
    return v->str;
  }

  bool boolean(const std::string& key, bool dflt) const {
    const TomlValue* v = doc.find(key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Boolean) {
      out.push_back(key + " must be a boolean");
      return dflt;
    }
    return v->boolean;
  }

  std::vector<int> int_array(const std::string& key, std::vector<int> dflt) const {
    const TomlValue* v = doc.find(key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Array) {
      out.push_back(key + " must be an array of integers");
      return dflt;
    }
    std::vector<int> result;
    for (const TomlValue& item : v->items) {
      if (item.kind != TomlValue::Kind::Integer) {
        out.push_back(key + " must be an array of integers");
        return dflt;
      }
      result.push_back(static_cast<int>(item.integer));
    }
    return result;
  }

  std::vector<double> number_array(const std::string& key, std::vector<double> dflt) const {
    const TomlValue* v = doc.find(key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Array) {
      out.push_back(key + " must be an array of numbers");
      return dflt;
    }
    std::vector<double> result;
    for (const TomlValue& item : v->items) {
      if (item.kind != TomlValue::Kind::Integer && item.kind != TomlValue::Kind::Float) {
        out.push_back(key + " must be an array of numbers");
        return dflt;
      }
      result.push_back(item.as_number());
    }
    return result;
  }
};

bool power_of_two(int n) { return n >= 4 && (n & (n - 1)) == 0; }

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

}  // namespace

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> v;

  if (model.kind != "biofilm" && model.kind != "pme" && model.kind != "linear") {
    v.push_back("model.kind must be \"biofilm\", \"pme\" or \"linear\" (got \"" + model.kind +
                "\")");
  }
  if (model.kind == "biofilm") {
    if (!(model.a >= 1.0)) v.push_back("model.a must satisfy a ≥ 1 (got " + num(model.a) + ")");
    if (!(model.b > 0.0)) v.push_back("model.b must satisfy b > 0 (got " + num(model.b) + ")");
  }
  if (model.kind == "pme") {
    if (!(model.m > 1.0)) v.push_back("model.m must satisfy m > 1 (got " + num(model.m) + ")");
  }
  if (model.approx_k < 0 || model.approx_k > 40) {
    v.push_back("model.approx_k must be between 0 and 40");
  }

  if (grid.d < 1 || grid.d > 3) v.push_back("grid.d must be 1, 2 or 3");
  if (!power_of_two(grid.n)) {
    v.push_back("grid.n must be a power of two ≥ 4 (got " + std::to_string(grid.n) + ")");
  }
  if (!(grid.L > 0.0) || !std::isfinite(grid.L)) v.push_back("grid.L must be positive");
  if (grid.bc != "periodic" && grid.bc != "zeroflux") {
    v.push_back("grid.bc must be \"periodic\" or \"zeroflux\" (got \"" + grid.bc + "\")");
  }

  if (!(time.T > 0.0) || !std::isfinite(time.T)) v.push_back("time.T must be positive");
  if (!(time.eps > 0.0)) v.push_back("time.eps must satisfy ε > 0 (got " + num(time.eps) + ")");
  if (!(time.picard_tol > 0.0)) v.push_back("time.picard_tol must be positive");

  if (source.kind != "none" && source.kind != "bumps" && source.kind != "logistic") {
    v.push_back("source.kind must be \"none\", \"bumps\" or \"logistic\" (got \"" + source.kind +
                "\")");
  }
  if (source.kind == "logistic" && !(source.rate > 0.0)) {
    v.push_back("source.rate must be positive");
  }

  if (initial.kind != "zeros" && initial.kind != "bumps" && initial.kind != "barenblatt") {
    v.push_back("initial.kind must be \"zeros\", \"bumps\" or \"barenblatt\" (got \"" +
                initial.kind + "\")");
  }
  if (initial.kind == "bumps" && !(initial.amp_lo <= initial.amp_hi)) {
    v.push_back("initial.amp_lo must not exceed initial.amp_hi");
  }
  if (initial.kind == "barenblatt") {
    if (!(initial.t0 > 0.0)) v.push_back("initial.t0 must be positive");
    if (model.kind != "pme" || model.m != 2.0 || grid.d != 1) {
      v.push_back(
          "initial.kind = \"barenblatt\" requires model.kind = \"pme\" with m = 2 and grid.d = 1");
    }
  }

  if (outputs.directory.empty()) v.push_back("outputs.directory must not be empty");
  if (outputs.snapshot_stride < 0) v.push_back("outputs.snapshot_stride must be ≥ 0");

  if (verify.trials < 1) v.push_back("verify.trials must be ≥ 1");

  if (regularity.levels.size() < 2) {
    v.push_back("regularity.levels needs at least two resolutions");
  } else {
    for (std::size_t i = 0; i < regularity.levels.size(); ++i) {
      if (!power_of_two(regularity.levels[i])) {
        v.push_back("regularity.levels[" + std::to_string(i) + "] must be a power of two ≥ 4");
      }
      if (i > 0 && regularity.levels[i] <= regularity.levels[i - 1]) {
        v.push_back("regularity.levels must be strictly increasing");
        break;
      }
    }
  }
  if (!(regularity.p >= 1.0)) v.push_back("regularity.p must be ≥ 1");
  if (regularity.sigma_t.empty()) v.push_back("regularity.sigma_t must not be empty");
  for (double s : regularity.sigma_t) {
    if (!(s >= 0.0 && s < 1.0)) {
      v.push_back("regularity.sigma_t entries must lie in [0, 1)");
      break;
    }
  }
  if (regularity.sigma_x.empty()) v.push_back("regularity.sigma_x must not be empty");
  for (double s : regularity.sigma_x) {
    if (!(s > 0.0 && s < 2.0)) {
      v.push_back("regularity.sigma_x entries must lie in (0, 2)");
      break;
    }
  }

  if (kinetic.bins < 8) v.push_back("kinetic.bins must be ≥ 8");

  for (const SweepAxis& axis : sweep) {
    if (axis.values.empty()) {
      v.push_back("sweep." + axis.name + " must list at least one value");
      continue;
    }
    if (axis.name == "n" || axis.name == "seed") {
      for (double x : axis.values) {
        if (x != std::floor(x) || x < 0.0) {
          v.push_back("sweep." + axis.name + " values must be nonnegative integers");
          break;
        }
      }
    }
  }

  return v;
}

void RunConfig::validate() const {
  std::vector<std::string> v = violations();
  if (!v.empty()) throw ValidationError(std::move(v));
}

PhiModel RunConfig::build_model() const {
  PhiModel base;
  if (model.kind == "biofilm") {
    base = PhiModel::biofilm(model.a, model.b);
  } else if (model.kind == "pme") {
    base = PhiModel::pme(model.m);
  } else {
    // Identity flux φ(z) = z on the whole line: the linear heat equation,
    // used by the sanity preset.
    base = PhiModel::tabulated_from_phi({-8.0, 0.0, 8.0}, {-8.0, 0.0, 8.0});
  }
  if (model.approx_k > 0) {
    SmoothApproxParams params;
    params.k = model.approx_k;
    base = build_smooth_approx(base, params);
  }
  return base;
}

Grid RunConfig::build_grid() const {
  return Grid{grid.d, grid.n, grid.L, grid.bc == "periodic" ? BC::Periodic : BC::ZeroFlux};
}

Field RunConfig::build_initial(const Grid& g) const {
  if (initial.kind == "zeros") return Field::zeros(g);
  if (initial.kind == "bumps") return random_bumps(g, seed, initial.amp_lo, initial.amp_hi);
  const double t0 = initial.t0;
  const double height = std::pow(t0, -1.0 / 3.0);
  const double radius_sq = 12.0 * std::pow(t0, 2.0 / 3.0);
  return sample(g, [height, radius_sq](const std::array<double, 3>& x) {
    const double s = 1.0 - x[0] * x[0] / radius_sq;
    return s > 0.0 ? height * s : 0.0;
  });
}

SourceSpec RunConfig::build_source(const Grid& g) const {
  if (source.kind == "none") return SourceSpec::none();
  if (source.kind == "bumps") {
    // Decorrelate the source from the initial data drawn from the same seed.
    return random_forcing(g, seed ^ 0x9e3779b97f4a7c15ull, source.nonnegative);
  }
  const double rate = source.rate;
  return SourceSpec::make_reaction([rate](double z) { return rate * z * (1.0 - z); },
                                   3.0 * rate);
}

RunConfig config_from_toml(const TomlDocument& doc) {
  std::vector<std::string> problems;
  for (const std::string& key : doc.order) {
    if (known_keys().count(key) == 0) problems.push_back("unknown key '" + key + "'");
  }

  Reader r{doc, problems};
  RunConfig cfg;
  cfg.seed = r.nonneg_integer("seed", cfg.seed);

  cfg.model.kind = r.text("model.kind", cfg.model.kind);
  cfg.model.a = r.number("model.a", cfg.model.a);
  cfg.model.b = r.number("model.b", cfg.model.b);
  cfg.model.m = r.number("model.m", cfg.model.m);
  cfg.model.approx_k = r.integer("model.approx_k", cfg.model.approx_k);

  cfg.grid.d = r.integer("grid.d", cfg.grid.d);
  cfg.grid.n = r.integer("grid.n", cfg.grid.n);
  cfg.grid.L = r.number("grid.L", cfg.grid.L);
  cfg.grid.bc = r.text("grid.bc", cfg.grid.bc);

  cfg.time.T = r.number("time.T", cfg.time.T);
  cfg.time.eps = r.number("time.eps", cfg.time.eps);
  cfg.time.picard_tol = r.number("time.picard_tol", cfg.time.picard_tol);

  cfg.source.kind = r.text("source.kind", cfg.source.kind);
  cfg.source.nonnegative = r.boolean("source.nonnegative", cfg.source.nonnegative);
  cfg.source.rate = r.number("source.rate", cfg.source.rate);

  cfg.initial.kind = r.text("initial.kind", cfg.initial.kind);
  cfg.initial.amp_lo = r.number("initial.amp_lo", cfg.initial.amp_lo);
  cfg.initial.amp_hi = r.number("initial.amp_hi", cfg.initial.amp_hi);
  cfg.initial.t0 = r.number("initial.t0", cfg.initial.t0);

  cfg.outputs.directory = r.text("outputs.directory", cfg.outputs.directory);
  cfg.outputs.snapshot_stride = r.integer("outputs.snapshot_stride", cfg.outputs.snapshot_stride);

  cfg.verify.trials = r.integer("verify.trials", cfg.verify.trials);
  cfg.verify.with_forcing = r.boolean("verify.with_forcing", cfg.verify.with_forcing);

  cfg.regularity.levels = r.int_array("regularity.levels", cfg.regularity.levels);
  cfg.regularity.p = r.number("regularity.p", cfg.regularity.p);
  cfg.regularity.sigma_t = r.number_array("regularity.sigma_t", cfg.regularity.sigma_t);
  cfg.regularity.sigma_x = r.number_array("regularity.sigma_x", cfg.regularity.sigma_x);

  cfg.kinetic.bins = r.integer("kinetic.bins", cfg.kinetic.bins);

  for (const std::string& key : doc.order) {
    if (key.rfind("sweep.", 0) != 0 || known_keys().count(key) == 0) continue;
    SweepAxis axis;
    axis.name = key.substr(6);
    axis.values = r.number_array(key, {});
    cfg.sweep.push_back(std::move(axis));
  }

  for (const std::string& range_problem : cfg.violations()) problems.push_back(range_problem);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return cfg;
}

RunConfig parse_config(const std::string& path) { return config_from_toml(parse_toml_file(path)); }

std::vector<std::string> preset_names() {
  return {"biofilm_a1b1", "biofilm_a1b2", "pme_m2_barenblatt", "heat_sanity"};
}

std::string preset_config(const std::string& name) {
  if (name == "biofilm_a1b1") {
    return R"(# Singular-degenerate diffusion on (-1, 1): D(z) = |z| / (1 - |z|).
seed = 1

[model]
kind = "biofilm"
a = 1.0
b = 1.0

[grid]
d = 1
n = 128
L = 1.0
bc = "periodic"

[time]
T = 0.5
eps = 0.00390625

[initial]
kind = "bumps"
amp_lo = -0.8
amp_hi = 0.8

[outputs]
directory = "out_biofilm_a1b1"
)";
  }
  if (name == "biofilm_a1b2") {
    return R"(# Stronger degeneracy at 0: D(z) = z^2 / (1 - |z|), logistic growth term.
seed = 2

[model]
kind = "biofilm"
a = 1.0
b = 2.0

[grid]
d = 1
n = 128
L = 1.0
bc = "periodic"

[time]
T = 0.5
eps = 0.00390625

[initial]
kind = "bumps"
amp_lo = 0.0
amp_hi = 0.8

[source]
kind = "logistic"
rate = 1.0

[outputs]
directory = "out_biofilm_a1b2"
)";
  }
  if (name == "pme_m2_barenblatt") {
    return R"(# Quadratic-diffusion self-similar profile released at t0 = 1.
seed = 3

[model]
kind = "pme"
m = 2.0

[grid]
d = 1
n = 256
L = 8.0
bc = "periodic"

[time]
T = 1.0
eps = 0.00390625

[initial]
kind = "barenblatt"
t0 = 1.0

[outputs]
directory = "out_pme_m2_barenblatt"

[regularity]
levels = [64, 128, 256]
p = 2.0
sigma_t = [0.0]
sigma_x = [0.5, 0.9]
)";
  }
  if (name == "heat_sanity") {
    return R"(# Linear flux sanity run: identity φ reduces the stepper to the heat equation.
seed = 4

[model]
kind = "linear"

[grid]
d = 1
n = 64
L = 1.0
bc = "periodic"

[time]
T = 0.1
eps = 0.0078125

[initial]
kind = "bumps"
amp_lo = -0.8
amp_hi = 0.8

[outputs]
directory = "out_heat_sanity"
)";
  }
  throw ConfigError("unknown preset \"" + name + "\"; available: biofilm_a1b1, biofilm_a1b2, " +
                    "pme_m2_barenblatt, heat_sanity");
}

}  // namespace porodyn
