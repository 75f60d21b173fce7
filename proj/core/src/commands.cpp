#include "porodyn/commands.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "porodyn/harness.hpp"
#include "porodyn/kinetic.hpp"
#include "porodyn/parallel.hpp"
#include "porodyn/regularity.hpp"
#include "porodyn/snapshot.hpp"

namespace porodyn {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return seed ^ (0x9e3779b97f4a7c15ull * (salt + 1));
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("cannot create output directory " + dir + ": " + ec.message());
}

Trajectory run_configured(const RunConfig& cfg) {
  const PhiModel model = cfg.build_model();
  const Grid g = cfg.build_grid();
  const Field u0 = cfg.build_initial(g);
  const SourceSpec src = cfg.build_source(g);
  if (src.kind == SourceKind::Reaction) {
    return solve_with_reaction(model, u0, src, cfg.time.T, cfg.time.eps, cfg.time.picard_tol);
  }
  return solve_cauchy(model, u0, src, cfg.time.T, cfg.time.eps);
}

// manifest.csv (every recorded time) plus state snapshots at the stride.
void write_manifest(const Trajectory& tr, const std::string& dir, int stride) {
  std::string csv = "t,mass,min,max,l1,l2,energy,dissipation\n";
  char line[512];
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const Field& u = tr.states[i];
    double energy = 0.0;
    Field w(u.grid);
    for (std::int64_t j = 0; j < u.size(); ++j) {
      energy += eval_Phi(tr.model, u[j]);
      w[j] = eval_phi(tr.model, u[j]);
    }
    energy *= u.grid.cell_volume();
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  tr.times[i], integral(u), min_value(u), max_value(u), norm_lp(u, 1.0),
                  norm_lp(u, 2.0), energy, grad_norm_sq(w));
    csv += line;
    if (stride > 0 && (i % static_cast<std::size_t>(stride) == 0 || i + 1 == tr.states.size())) {
      char name[64];
      std::snprintf(name, sizeof(name), "state_%06zu.f64", i);
      snapshot_write(dir + "/" + name, u, tr.times[i]);
    }
  }
  atomic_write_text(dir + "/manifest.csv", csv);
}

nlohmann::json config_echo(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["model"] = {{"kind", cfg.model.kind},     {"a", cfg.model.a},
                {"b", cfg.model.b},           {"m", cfg.model.m},
                {"approx_k", cfg.model.approx_k}};
  j["grid"] = {{"d", cfg.grid.d}, {"n", cfg.grid.n}, {"L", cfg.grid.L}, {"bc", cfg.grid.bc}};
  j["time"] = {{"T", cfg.time.T}, {"eps", cfg.time.eps}, {"picard_tol", cfg.time.picard_tol}};
  j["source"] = {{"kind", cfg.source.kind},
                 {"nonnegative", cfg.source.nonnegative},
                 {"rate", cfg.source.rate}};
  j["initial"] = {{"kind", cfg.initial.kind},
                  {"amp_lo", cfg.initial.amp_lo},
                  {"amp_hi", cfg.initial.amp_hi},
                  {"t0", cfg.initial.t0}};
  return j;
}

void write_run_summary(const RunConfig& cfg, const Trajectory& tr, const std::string& dir) {
  const Field& last = tr.states.back();
  nlohmann::json j;
  j["config"] = config_echo(cfg);
  j["result"] = {{"steps", tr.taus.size()},
                 {"eps_certificate", tr.eps_certificate},
                 {"solver_iterations", tr.solver_iterations},
                 {"max_step_residual", tr.max_step_residual},
                 {"max_picard_ratio", tr.max_picard_ratio},
                 {"final_time", tr.times.back()},
                 {"final_mass", integral(last)},
                 {"final_min", min_value(last)},
                 {"final_max", max_value(last)}};
  atomic_write_text(dir + "/run.json", j.dump(2) + "\n");
}

// Per-step dissipation checks over randomized runs, merged into one row.
PropertyResult energy_suite(const BatchSpec& batch) {
  std::vector<PropertyResult> parts(static_cast<std::size_t>(batch.trials));
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(batch.trials));
  for (int t = 0; t < batch.trials; ++t) {
    const std::uint64_t s = mix_seed(batch.seed, static_cast<std::uint64_t>(t));
    seeds[static_cast<std::size_t>(t)] = s;
    const Field u0 = random_bumps(batch.grid, s, -0.9, 0.9);
    SourceSpec src = SourceSpec::none();
    if (batch.with_forcing && t % 2 == 1) src = random_forcing(batch.grid, mix_seed(s, 7), false);
    const Trajectory tr = solve_cauchy(batch.model, u0, src, batch.T, batch.eps);
    parts[static_cast<std::size_t>(t)] = check_energy(tr, src);
  }
  PropertyResult merged = merge_results("energy", parts);
  merged.seeds = std::move(seeds);
  return merged;
}

void apply_sweep_value(RunConfig& cfg, const std::string& name, double value) {
  if (name == "a") {
    cfg.model.a = value;
  } else if (name == "b") {
    cfg.model.b = value;
  } else if (name == "m") {
    cfg.model.m = value;
  } else if (name == "rate") {
    cfg.source.rate = value;
  } else if (name == "n") {
    cfg.grid.n = static_cast<int>(std::llround(value));
  } else if (name == "eps") {
    cfg.time.eps = value;
  } else if (name == "T") {
    cfg.time.T = value;
  } else if (name == "seed") {
    cfg.seed = static_cast<std::uint64_t>(std::llround(value));
  } else {
    throw ConfigError("unknown sweep axis '" + name + "'");
  }
}

}  // namespace

int cmd_solve(const RunConfig& cfg) {
  const Trajectory tr = run_configured(cfg);
  const std::string& dir = cfg.outputs.directory;
  ensure_directory(dir);
  write_manifest(tr, dir, cfg.outputs.snapshot_stride);
  write_run_summary(cfg, tr, dir);
  std::printf("solve: %zu steps to t=%.6g, mass %.6g, range [%.6g, %.6g] -> %s\n",
              tr.taus.size(), tr.times.back(), integral(tr.states.back()),
              min_value(tr.states.back()), max_value(tr.states.back()), dir.c_str());
  return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite) {
  BatchSpec batch;
  batch.model = cfg.build_model();
  batch.grid = cfg.build_grid();
  batch.T = cfg.time.T;
  batch.eps = cfg.time.eps;
  batch.trials = cfg.verify.trials;
  batch.seed = cfg.seed;
  batch.with_forcing = cfg.verify.with_forcing;
  batch.approx_k = cfg.model.approx_k > 0 ? cfg.model.approx_k : 8;

  std::vector<std::string> wanted;
  if (suite == "all") {
    wanted = {"contraction", "comparison", "positivity", "energy", "chi", "defect"};
  } else if (suite == "contraction" || suite == "comparison" || suite == "positivity" ||
             suite == "energy" || suite == "chi" || suite == "defect") {
    wanted = {suite};
  } else {
    throw ConfigError("unknown verify suite \"" + suite +
                      "\"; use contraction, comparison, positivity, energy, chi, defect or all");
  }

  std::vector<PropertyResult> results;
  for (const std::string& name : wanted) {
    if (name == "contraction") results.push_back(check_contraction(batch));
    if (name == "comparison") results.push_back(check_comparison(batch));
    if (name == "positivity") results.push_back(check_positivity_and_range(batch));
    if (name == "energy") results.push_back(energy_suite(batch));
    if (name == "chi") results.push_back(check_chi_suite(batch));
    if (name == "defect") results.push_back(check_defect_suite(batch));
    const PropertyResult& r = results.back();
    std::printf("%s: trials=%d failures=%d worst_slack=%.6e\n", r.name.c_str(), r.trials,
                r.failures, r.worst_slack);
  }

  const std::string& dir = cfg.outputs.directory;
  ensure_directory(dir);
  export_results_csv(results, dir + "/results.csv");
  export_results_junit(results, dir + "/results.xml");

  for (const PropertyResult& r : results) {
    if (r.failures > 0) return 1;
  }
  return 0;
}

int cmd_regularity(const RunConfig& cfg) {
  const RegularityConfig& rc = cfg.regularity;
  std::vector<Trajectory> runs;
  runs.reserve(rc.levels.size());
  for (std::size_t i = 0; i < rc.levels.size(); ++i) {
    RunConfig level = cfg;
    level.grid.n = rc.levels[i];
    // Keep tau proportional to the mesh width across the refinement ladder.
    level.time.eps = cfg.time.eps * static_cast<double>(rc.levels[0]) / rc.levels[i];
    runs.push_back(run_configured(level));
  }

  const RegularityReport report = exponent_scan(runs, rc.p, rc.sigma_t, rc.sigma_x);
  const std::string& dir = cfg.outputs.directory;
  ensure_directory(dir);
  export_regularity_report(report, dir);

  std::printf("regularity: m=%.6g p=%.6g kappa_t=%.6g kappa_x=%.6g%s\n", report.m, report.p,
              report.kappa.kappa_t, report.kappa.kappa_x,
              report.flux_hypothesis_assumed ? " (slow-diffusion flux bound assumed)" : "");
  for (std::size_t it = 0; it < rc.sigma_t.size(); ++it) {
    for (std::size_t ix = 0; ix < rc.sigma_x.size(); ++ix) {
      std::printf("  sigma_t=%.3g sigma_x=%.3g: %s (finest value %.6e)\n", rc.sigma_t[it],
                  rc.sigma_x[ix], trend_label(report.verdicts[it][ix]),
                  report.values.back()[it][ix]);
    }
  }
  return 0;
}

int cmd_kinetic(const RunConfig& cfg) {
  RunConfig eff = cfg;
  // The binned measure is defined on tabulated fluxes; smooth analytic models
  // at a default level when the config does not pick one.
  if (eff.model.approx_k == 0 && eff.model.kind != "linear") eff.model.approx_k = 8;

  const Trajectory tr = run_configured(eff);
  const KineticSample sample = defect_measure(tr, cfg.kinetic.bins);

  const std::string& dir = cfg.outputs.directory;
  ensure_directory(dir);
  write_manifest(tr, dir, cfg.outputs.snapshot_stride);
  export_kinetic_sample(sample, dir);

  std::printf("kinetic: %d bins on [%.6g, %.6g], measure mass %.6e, sup density %.6e -> %s\n",
              sample.bins, sample.v_lo, sample.v_hi, sample.total_mass(),
              sample.lambda_inf_sup(), dir.c_str());
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<SweepAxis>& axes) {
  if (axes.empty()) {
    throw ConfigError("sweep requires a [sweep] section with at least one axis");
  }
  std::size_t total = 1;
  for (const SweepAxis& axis : axes) {
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.name + "' has no values");
    total *= axis.values.size();
    if (total > 4096) throw SizeError("sweep grid exceeds 4096 combinations");
  }

  const std::string& base = cfg.outputs.directory;
  ensure_directory(base);

  std::vector<int> statuses(total, 0);
  std::vector<std::vector<double>> combos(total, std::vector<double>(axes.size()));
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    for (std::size_t j = 0; j < axes.size(); ++j) {
      combos[c][j] = axes[j].values[rem % axes[j].values.size()];
      rem /= axes[j].values.size();
    }
  }

  parallel_for(static_cast<std::int64_t>(total), [&](std::int64_t c) {
    RunConfig combo = cfg;
    for (std::size_t j = 0; j < axes.size(); ++j) {
      apply_sweep_value(combo, axes[j].name, combos[static_cast<std::size_t>(c)][j]);
    }
    char sub[32];
    std::snprintf(sub, sizeof(sub), "sweep_%04" PRId64, static_cast<std::int64_t>(c));
    combo.outputs.directory = base + "/" + sub;
    combo.validate();  // a swept value can leave the admissible range
    statuses[static_cast<std::size_t>(c)] = cmd_solve(combo);
  });

  std::string csv = "run";
  for (const SweepAxis& axis : axes) csv += "," + axis.name;
  csv += ",directory\n";
  char buf[128];
  for (std::size_t c = 0; c < total; ++c) {
    std::snprintf(buf, sizeof(buf), "%zu", c);
    csv += buf;
    for (std::size_t j = 0; j < axes.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", combos[c][j]);
      csv += buf;
    }
    std::snprintf(buf, sizeof(buf), ",sweep_%04zu\n", c);
    csv += buf;
  }
  atomic_write_text(base + "/sweep_index.csv", csv);

  int worst = 0;
  for (int s : statuses) worst = std::max(worst, s);
  std::printf("sweep: %zu runs -> %s (worst status %d)\n", total, base.c_str(), worst);
  return worst;
}

}  // namespace porodyn
