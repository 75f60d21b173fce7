// Property harness: turns the solver's inequalities (contraction, comparison,
// positivity/range confinement, entropy dissipation, kinetic identities and
// measure bounds) into pass/fail checks over randomized problem batches, with
// CSV and JUnit-style exports for CI consumption.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "porodyn/evolution.hpp"
#include "porodyn/grid.hpp"
#include "porodyn/phi_model.hpp"

namespace porodyn {

// Outcome of one property over a batch. `worst_slack` is the most negative
// margin rhs − lhs seen across trials, where rhs/lhs are the two sides of the
// exact inequality being asserted (no budget folded in); a trial counts as a
// failure only when its slack drops below −budget for the property's declared
// tolerance budget. `seeds` holds one derived seed per trial so any trial can
// be reproduced in isolation.
struct PropertyResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  double worst_slack = HUGE_VAL;
  std::vector<std::uint64_t> seeds;
};

// Randomized batch description shared by the check_* drivers. Paired runs
// inside one batch always share the model, grid and step size.
struct BatchSpec {
  PhiModel model = PhiModel::biofilm(1.0, 1.0);
  Grid grid{1, 128, 1.0, BC::Periodic};
  double T = 0.5;
  double eps = 1.0 / 256.0;
  int trials = 25;
  std::uint64_t seed = 0;
  bool with_forcing = true;  // alternate/no random sources where applicable
  int approx_k = 8;          // smoothing level used by the measure suite
};

// Inequality tolerance proportional to the inner-solver residual times the
// problem size: 100 · (per-step L¹ residual target) · cells · steps. The
// discrete scheme satisfies the inequalities exactly modulo those residuals,
// so the budget keeps pass/fail insensitive to grid and horizon.
double tolerance_budget(const Grid& g, std::int64_t steps);

// Sum of 1–4 Gaussian bumps sampled on the grid and clamped to [-0.9, 0.9]
// (or [0, 0.9] when amp_lo >= 0); amplitudes drawn from [amp_lo, amp_hi].
// Fully determined by the seed.
Field random_bumps(const Grid& g, std::uint64_t seed, double amp_lo, double amp_hi);

// Time-independent bump-sum source scaled so its discrete L¹ norm on g is at
// most 1; nonnegative bumps when `nonnegative` is set.
SourceSpec random_forcing(const Grid& g, std::uint64_t seed, bool nonnegative);

// sup-in-time L¹ distance of paired runs against the initial distance plus
// the accumulated forcing gap.
PropertyResult check_contraction(const BatchSpec& batch);

// Positive-part contraction ‖(u−ũ)₊‖₁ at every recorded time against the
// initial positive part plus the accumulated positive forcing gap, in both
// argument orders, plus the ordered special case (u₀ ≤ ũ₀, f ≤ f̃ ⇒ u ≤ ũ).
PropertyResult check_comparison(const BatchSpec& batch);

// Nonnegative data stays nonnegative (slack = worst cell value, budget 1e-10)
// and, for models on a bounded interval, trajectories keep a strict margin of
// at least 1e-12 to both endpoints. Trials alternate between unforced runs
// and either logistic-reaction runs (bounded models) or nonnegative forcing.
PropertyResult check_positivity_and_range(const BatchSpec& batch);

// Per-step entropy dissipation of one trajectory: with E = h^d Σ Φ(u),
//   E(u^{n+1}) − E(u^n) ≤ τ ⟨f_n, φ(u^{n+1})⟩ h^d − τ ‖∇_h φ(u^{n+1})‖²,
// asserted per step with budget 100·tol·cells (unforced runs make E
// nonincreasing). `src` must be the source the trajectory was produced with;
// one result row per step, seeds left to the caller.
PropertyResult check_energy(const Trajectory& traj, const SourceSpec& src = SourceSpec::none());

// Level-set indicator identities on randomly generated trajectories: the
// indicator L¹ distance between states equals their field L¹ distance, and
// identity-weight velocity averaging recomposes the state, both to 1e-14.
PropertyResult check_chi_suite(const BatchSpec& batch);

// Dissipation-measure bounds on smoothed-model runs from nonnegative data:
// total measure mass and density sup stay within 10% of the initial-mass plus
// forcing-mass bound.
PropertyResult check_defect_suite(const BatchSpec& batch);

// Combines partial results into one row (summed trials/failures, worst slack,
// concatenated seeds).
PropertyResult merge_results(const std::string& name, const std::vector<PropertyResult>& parts);

// name,trials,failures,worst_slack,seeds rows (seeds ';'-joined), 17
// significant digits, atomic replace.
void export_results_csv(const std::vector<PropertyResult>& results, const std::string& path);

// Minimal JUnit-style XML (one testcase per property, failure node when the
// property recorded failures), atomic replace.
void export_results_junit(const std::vector<PropertyResult>& results, const std::string& path);

}  // namespace porodyn
