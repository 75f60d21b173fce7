// Maximal monotone diffusion profiles φ on an open interval I ∋ 0 together
// with everything derived from them: D = φ′, the primitive Φ, the inverse β,
// growth/divergence admissibility checks, and the smooth non-degenerate
// approximations φ_k obtained by clipping D to a compact sub-interval, adding
// the floor 2^{-k}, and mollifying.
//
// Three kinds:
//   Biofilm(a ≥ 1, b > 0): D(z) = |z|^b / (1-|z|)^a on I = (-1, 1)
//   PME(m > 1):            φ(u) = |u|^{m-1} u on I = ℝ, so D(z) = m|z|^{m-1}
//   Tabulated:             a monotone piecewise-polynomial curve with linear
//                          tails, built either from samples of D or of φ
#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "porodyn/errors.hpp"

namespace porodyn {

enum class PhiKind { Biofilm, PME, Tabulated };

// Monotone curve representation shared by all tabulated models: φ is a
// piecewise quartic (degree ≤ 4) in local coordinates t = z - x_i, D its
// exact derivative, Φ its exact integral anchored at Φ(0) = 0. Beyond the
// node range φ continues linearly with the stored tail slopes; a zero slope
// means the curve (and the model's interval) ends there.
struct TabulatedCurve {
  std::vector<double> x;                      // strictly increasing, contains 0
  std::vector<std::array<double, 5>> c;       // φ coefficients per segment
  std::vector<double> phi_at_x;
  std::vector<double> Phi_at_x;
  double slope_lo = 0.0;
  double slope_hi = 0.0;

  int segment(double z) const;                // index i with x[i] <= z <= x[i+1]
  double phi(double z) const;
  double D(double z) const;
  double Phi(double z) const;
};

struct PhiModel {
  PhiKind kind = PhiKind::PME;
  double a = 1.0;   // Biofilm singularity exponent
  double b = 1.0;   // Biofilm degeneracy exponent
  double m = 2.0;   // PME exponent
  double lo = -HUGE_VAL;
  double hi = HUGE_VAL;
  std::shared_ptr<const TabulatedCurve> table;  // Tabulated kind only

  static PhiModel biofilm(double a, double b);
  static PhiModel pme(double m);
  // Builds the curve by monotone cubic interpolation of D samples (all > 0)
  // and exact integration; φ(0) = 0 requires 0 among the nodes (inserted if
  // absent). Tail slopes < 0 mean "use the end sample value".
  static PhiModel tabulated_from_D(const std::vector<double>& nodes,
                                   const std::vector<double>& D_values,
                                   double tail_slope_lo = -1.0, double tail_slope_hi = -1.0);
  // Builds the curve by monotone cubic interpolation of strictly increasing
  // φ samples. Tail slopes < 0 mean "use the interpolant's end derivative".
  static PhiModel tabulated_from_phi(const std::vector<double>& nodes,
                                     const std::vector<double>& phi_values,
                                     double tail_slope_lo = -1.0, double tail_slope_hi = -1.0);

  // Throws ModelError on out-of-range parameters (a < 1, b <= 0, m <= 1).
  void validate() const;
};

// All evaluators throw DomainError when the argument leaves I or comes
// within 1e-14 of a finite endpoint.
double eval_D(const PhiModel& model, double z);
double eval_phi(const PhiModel& model, double rho);
double eval_Phi(const PhiModel& model, double rho);

// Inverse of φ. Monotone, β(0) = 0. For arguments beyond the representable
// range near a finite endpoint the result saturates at the last point of I
// that the evaluators accept. Throws RangeError for tabulated curves whose
// range genuinely ends (zero tail slope).
double eval_beta(const PhiModel& model, double w);

// ln β(e^{ln_w}) for the positive branch, usable far below the underflow
// threshold of eval_beta. Used by the divergence-condition integral, whose
// integrand probes β at arguments as small as e^{-1000}.
double eval_beta_log(const PhiModel& model, double ln_w);

struct GrowthCheck {
  bool holds = false;
  double C_J = 0.0;  // smallest sampled constant with |φ(r)| <= C_J |r|^α on J
};

// Samples |φ(r)|/|r|^α on 10^4 points of J = [j_lo, j_hi] (uniform plus
// log-spaced toward 0). holds is true when the ratio near the origin stays
// comparable to its bulk value instead of blowing up.
GrowthCheck check_growth_alpha(const PhiModel& model, double alpha, double j_lo, double j_hi);

// Decides whether ∫_R^∞ ρ^{d-1} β(ρ^{-(d-2)}) dρ diverges, by accumulating
// partial integrals over doubling octaves [2^{j-1}R, 2^j R], j = 1..budget,
// in log space. Returns true when the last doubling still grows the total by
// a relative increment > 1e-3 (no plateau).
bool check_divergence_condition(const PhiModel& model, int d, double R, int budget);

struct SmoothApproxParams {
  int k = 1;                      // approximation index; mollifier width 2^{-k}
  int mollifier_resolution = 64;  // Gauss-Legendre panels per smooth piece
  int coarse_nodes = 4096;        // base table resolution across the band
  // Override of the clipping band I_k (testing only); default is
  // [lo(1-2^{-k}), hi(1-2^{-k})] for finite endpoints and ±2^k for ℝ.
  std::optional<std::pair<double, double>> custom_band;
};

// The smooth approximation D_k = 2^{-k} + (1_{I_k} D) * η_k realized as a
// dense tabulated model with exact linear tails of slope 2^{-k}. D_k >= 2^{-k}
// everywhere and φ_k(0) = 0 hold exactly.
PhiModel build_smooth_approx(const PhiModel& model, const SmoothApproxParams& params);

// The clipping band I_k used by build_smooth_approx for this model and k.
std::pair<double, double> smooth_approx_band(const PhiModel& model, int k);

// Normalized C^∞ bump on (-1, 1): exp(-1/(1-s²)) / Z, zero outside.
double mollifier(double s);

}  // namespace porodyn
