// The single implicit Euler step: solve u - λ Δ_h φ(u) = g. Three independent
// methods share one residual contract (discrete L¹ residual <= tol):
//   * cellwise monotone Gauss-Seidel (robust reference; bisection per cell),
//   * damped Newton with a Jacobi-preconditioned BiCGStab inner solve (fast),
//   * proximal descent of (1/2λ)|u-g|²_{H⁻¹} + ∫Φ(u) in the discrete H⁻¹
//     metric (periodic only; independent variational route).
#pragma once

#include <utility>
#include <vector>

#include "porodyn/grid.hpp"
#include "porodyn/phi_model.hpp"

namespace porodyn {

struct ResolventProblem {
  PhiModel model;
  double lambda = 1.0;
  Field g;
  double tol = 1e-11;     // discrete L¹ residual target
  long max_iter = 0;      // 0 = per-method default

  void validate() const;  // lambda > 0, finite g
};

struct SolverStats {
  long iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  std::vector<double> objective_history;  // prox solver only: J along iterations
};

// ‖u - λ Δ_h φ(u) - g‖₁, the shared convergence measure.
double resolvent_residual_l1(const ResolventProblem& p, const Field& u);

Field solve_cellwise_monotone(const ResolventProblem& p, SolverStats* stats = nullptr);
Field solve_newton(const ResolventProblem& p, const Field& u_init, SolverStats* stats = nullptr);
Field solve_prox_hminus1(const ResolventProblem& p, const Field& u_init,
                         SolverStats* stats = nullptr);

// Default path used by the time stepper: Newton from clamped g, falling back
// to the cellwise solver if Newton stalls.
Field solve_resolvent(const ResolventProblem& p, SolverStats* stats = nullptr);

// Clamps values into [lo+δ, hi-δ], δ = 1e-12 (hi-lo), for bounded intervals;
// identity for unbounded ones. The margin keeps φ evaluable everywhere.
Field clamp_to_interval(const PhiModel& model, const Field& f);

// (‖R(g) - R(g̃)‖₁, ‖g - g̃‖₁): the discrete scheme is nonexpansive, so the
// first component must not exceed the second beyond solver-residual slack.
std::pair<double, double> resolvent_contraction_check(const PhiModel& model, double lambda,
                                                      const Field& g, const Field& g_tilde);

}  // namespace porodyn
