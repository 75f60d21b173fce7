#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "porodyn/evolution.hpp"
#include "porodyn/grid.hpp"
#include "porodyn/phi_model.hpp"

namespace porodyn {

// Sign signature of the level-set indicator of a scalar value:
// +1 if 0 < v < u_val, -1 if u_val < v < 0, 0 otherwise.
int chi_value(double u_val, double v);

// Velocity average Σ_bins ∫ H'(v) χ(u_i, v) dv per cell. The v-integral is
// piecewise (split at bin edges, with the partial bin containing u_i handled
// exactly) and each piece uses a Gauss panel, so the identity H' ≡ 1 → u is
// exact to rounding and smooth H' are resolved far below bin resolution.
// Requires [v_lo, v_hi] ⊇ {0} ∪ range(u); RangeError otherwise.
Field velocity_average(const Field& u, const std::function<double(double)>& Hprime,
                       double v_lo, double v_hi, int bins = 64);

// ∫∫ |χ(·,·;u) − χ(·,·;w)| dv dx. Per cell the v-section of the symmetric
// difference has measure |u_i − w_i| exactly, so this equals the L¹ distance.
double chi_distance(const Field& u, const Field& w);

// Level-set sampling of a trajectory: χ on bin centers per (time, cell, bin),
// plus the dissipation measure D(u)|∇_h u|² evaluated at each post-step state
// and assigned in full to the bin holding that cell's value (no smearing).
struct KineticSample {
  Grid grid;
  std::vector<double> times;  // state times copied from the trajectory
  std::vector<double> taus;   // step sizes
  double v_lo = 0.0;
  double v_hi = 0.0;
  int bins = 0;

  std::vector<signed char> chi;      // (time, cell, bin) -> {-1, 0, +1}
  std::vector<double> defect_value;  // (step, cell) -> D(u)|∇_h u|², post-step state
  std::vector<int> defect_bin;       // (step, cell) -> v-bin of the post-step value

  double bin_width() const { return (v_hi - v_lo) / bins; }
  double v_center(int b) const { return v_lo + (b + 0.5) * bin_width(); }
  signed char chi_at(std::size_t time_index, std::int64_t cell, int b) const;
  // Nonnegative density of the binned measure; zero off the carrying bin.
  double defect_density_at(std::size_t step, std::int64_t cell, int b) const;

  double total_mass() const;               // Σ_steps τ h^d · defect_value
  std::vector<double> bin_masses() const;  // per-bin split of total_mass
  double lambda_inf_sup() const;           // max over bins of mass / bin width
};

// Builds the sample for a run performed with a mollified (tabulated) model;
// ModelError if the trajectory carries an analytic model instead. The window
// [v_lo, v_hi] must be supplied or, in the second overload, is derived from
// the sampled range of the trajectory (5% padding, clipped to the interval).
KineticSample defect_measure(const Trajectory& traj, double v_lo, double v_hi, int bins = 64);
KineticSample defect_measure(const Trajectory& traj, int bins = 64);

// Separable test ψ(t)ϕ(x)ζ(v); the derivatives ψ' and ζ' are supplied
// analytically so the moved pairings carry no extra differencing error.
struct SeparableTest {
  std::function<double(double)> psi;
  std::function<double(double)> psi_prime;
  std::function<double(const std::array<double, 3>&)> phi_x;
  std::function<double(double)> zeta;
  std::function<double(double)> zeta_prime;
};

// Distributional residual ⟨∂ₜχ − D(v)Δχ − ∂ᵥn − δ_{v=u}f, ψϕζ⟩ per test, each
// derivative moved onto the test (ψ', Δ_hϕ, ζ'). `source` must be the forcing
// the trajectory was computed with (defaults to none); `include_defect_term`
// = false drops the ∂ᵥn pairing, for ablation runs. SupportError if a factor
// is nonzero on the boundary of (0,T) × box × [v_lo, v_hi].
std::vector<double> kinetic_residual(const Trajectory& traj, const KineticSample& sample,
                                     const std::vector<SeparableTest>& tests,
                                     const SourceSpec& source = SourceSpec::none(),
                                     bool include_defect_term = true);

// sample.csv rows (t_index, v_bin, mass) for nonzero bins + sample.json header.
void export_kinetic_sample(const KineticSample& sample, const std::string& dir);
// CSV rows (test_id, value, h, tau).
void export_residual_report(const std::vector<double>& residuals, double h, double tau,
                            const std::string& path);

}  // namespace porodyn
