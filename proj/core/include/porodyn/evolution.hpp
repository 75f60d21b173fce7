// Time integration built on the implicit step u - τ Δ_h φ(u) = u_prev + τ f:
// uniform-step approximate trajectories with a stored step-size certificate,
// the Lipschitz-reaction fixed point on chunks short enough to contract, and
// convergence sweeps over smooth approximations of φ.
#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "porodyn/grid.hpp"
#include "porodyn/phi_model.hpp"
#include "porodyn/resolvent.hpp"

namespace porodyn {

// Discrete L¹ residual accepted from the inner solver on every implicit step;
// the tolerance budgets of the property harness are expressed in units of it.
inline constexpr double kStepResidualTol = 1e-13;

enum class SourceKind { None, TimeSpace, Reaction };

struct SourceSpec {
  SourceKind kind = SourceKind::None;
  // TimeSpace: f(t, x), sampled at the step midpoint t_n + τ/2.
  std::function<double(double, const std::array<double, 3>&)> space_time;
  // Reaction: scalar f(u) with f(0) = 0 and |f| Lipschitz with constant L.
  std::function<double(double)> reaction;
  double lipschitz = 0.0;

  static SourceSpec none();
  static SourceSpec time_space(std::function<double(double, const std::array<double, 3>&)> f);
  static SourceSpec make_reaction(std::function<double(double)> f, double lipschitz);

  // Reaction terms must satisfy f(0) = 0 and |f(z)| <= L|z| on samples of
  // closure(I) (the interval [-1,1] stands in for unbounded I).
  void validate(const PhiModel& model) const;
};

struct Trajectory {
  Grid grid;
  PhiModel model;
  std::vector<double> times;         // 0 = t_0 < ... < t_N = T
  std::vector<Field> states;         // states[n] at times[n]; states[0] = u0
  std::vector<double> taus;          // taus[n] = times[n+1] - times[n]
  std::vector<double> forcing_mass;  // ∫ f_n dx actually applied on step n
  double eps_certificate = 0.0;      // the uniform step size used
  long solver_iterations = 0;        // inner iterations summed over steps
  double max_step_residual = 0.0;    // worst accepted implicit-step residual
  double max_picard_ratio = 0.0;     // reaction runs: largest contraction ratio

  void validate() const;
};

// One implicit Euler step: resolvent solve of u - τ Δ_h φ(u) = u_prev + τ f.
Field step_implicit(const PhiModel& model, const Field& u_prev, double tau, const Field& forcing,
                    SolverStats* stats = nullptr);

// Uniform τ <= eps implicit Euler for a prescribed source (None or TimeSpace);
// the step size τ is recorded as the trajectory's certificate.
Trajectory solve_cauchy(const PhiModel& model, const Field& u0, const SourceSpec& src, double T,
                        double eps);

// Reaction source f(u): splits [0,T] into chunks of duration <= 1/(2L) and on
// each chunk iterates u_next = solve(forcing = f(u_current)) to a fixed point
// in C_t L¹; the chunk length makes each sweep a strict contraction.
Trajectory solve_with_reaction(const PhiModel& model, const Field& u0, const SourceSpec& src,
                               double T, double eps, double picard_tol = 1e-10);

// Solves once with the true φ and once per k with build_smooth_approx(·, k);
// returns (k, max_n ‖u_k(t_n) - u_ref(t_n)‖₁). Errors must be nonincreasing
// in k within 10% slack, or NumericError is thrown.
std::vector<std::pair<int, double>> trotter_kato_sweep(const PhiModel& model,
                                                       const std::vector<int>& ks, const Field& u0,
                                                       const SourceSpec& src, double T, double eps);

// max_n ‖a(t_n) - b(t_n)‖₁ over a shared time grid (DomainError otherwise).
double ctl1_distance(const Trajectory& a, const Trajectory& b);

// Writes states as snapshot files (state_NNNNNN.f64 + sidecars) plus a CSV
// manifest with per-state columns t, mass, min, max, l1, l2, energy (h^d ΣΦ),
// dissipation (discrete ‖∇_h φ(u)‖₂²).
void export_trajectory(const Trajectory& tr, const std::string& dir);

}  // namespace porodyn
