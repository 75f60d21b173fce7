// Command entry points behind the CLI. Each materializes the configured
// problem, writes its artifacts under cfg.outputs.directory (write-to-temp,
// atomic rename, so re-runs never corrupt prior outputs) and returns a
// process exit status: 0 on success, 1 when a checked property recorded
// failures. Module errors propagate as exceptions for the CLI to report.
#pragma once

#include <string>
#include <vector>

#include "porodyn/config.hpp"

namespace porodyn {

// Runs the configured problem once. Writes manifest.csv (one row per recorded
// time), binary state snapshots at outputs.snapshot_stride (0 = none, k =
// every k-th state plus the final one) and run.json with the echoed config and
// solver counters.
int cmd_solve(const RunConfig& cfg);

// Runs randomized property checks over cfg.verify.trials trials per property.
// suite: contraction | comparison | positivity | energy | chi | defect | all.
// Writes results.csv and results.xml; prints one line per property; returns 1
// iff any property recorded failures.
int cmd_verify(const RunConfig& cfg, const std::string& suite);

// Solves the configured problem at every resolution in regularity.levels
// (step size scaled proportionally to the mesh), runs the refinement scan
// over the configured (sigma_t, sigma_x, p) grid and writes report.csv and
// report.json.
int cmd_regularity(const RunConfig& cfg);

// Solves on the smoothed flux (model.approx_k, defaulting to 8 for analytic
// models, which the measure construction requires), bins the dissipation
// measure into kinetic.bins value bins and writes sample.csv, sample.json and
// the trajectory manifest.
int cmd_kinetic(const RunConfig& cfg);

// Runs cmd_solve over the cartesian product of the axes (normally
// cfg.sweep), one subdirectory sweep_NNNN per combination, workers capped by
// PORODYN_THREADS; writes sweep_index.csv mapping runs to parameter values.
// Returns the worst per-run status.
int cmd_sweep(const RunConfig& cfg, const std::vector<SweepAxis>& axes);

}  // namespace porodyn
