#include "porodyn/resolvent.hpp"

#include <algorithm>
#include <cmath>

#include "porodyn/spectral.hpp"

namespace porodyn {

namespace {

struct IntervalMargin {
  double lo, hi;  // clamp targets strictly inside I
};

IntervalMargin margin_of(const PhiModel& M) {
  if (std::isfinite(M.lo) && std::isfinite(M.hi)) {
    const double delta = 1e-12 * (M.hi - M.lo);
    return {M.lo + delta, M.hi - delta};
  }
  return {-HUGE_VAL, HUGE_VAL};
}

double clamp_value(const IntervalMargin& im, double v) {
  return std::clamp(v, im.lo, im.hi);
}

// Number of distinct neighbors of cell i (differs from 2d only for ZeroFlux
// boundary cells, where the reflected face drops out of the cell equation).
int neighbor_degree(const Grid& g, const std::array<int, 3>& idx) {
  if (g.bc == BC::Periodic) return 2 * g.d;
  int deg = 0;
  for (int a = 0; a < g.d; ++a) {
    if (idx[static_cast<size_t>(a)] > 0) ++deg;
    if (idx[static_cast<size_t>(a)] < g.n - 1) ++deg;
  }
  return deg;
}

Field apply_phi(const PhiModel& M, const Field& u) {
  Field w(u.grid);
  for (std::int64_t i = 0; i < u.size(); ++i) w[i] = eval_phi(M, u[i]);
  return w;
}

}  // namespace

void ResolventProblem::validate() const {
  model.validate();
  if (!(lambda > 0.0)) throw DomainError("resolvent requires lambda > 0");
  if (!(tol > 0.0)) throw DomainError("resolvent requires tol > 0");
  assert_finite(g, "resolvent right side");
}

Field clamp_to_interval(const PhiModel& model, const Field& f) {
  const auto im = margin_of(model);
  Field out = f;
  for (auto& v : out.v) v = clamp_value(im, v);
  return out;
}

namespace {

// Starting iterate: clamp(g) additionally pulled into the region |φ| <= CAP.
// A bare margin clamp can park cells where φ is astronomically steep (for
// data far outside I), which defeats both sweeps and line searches; capping
// the initial φ leaves warm starts exact in every ordinary regime.
Field safe_start(const PhiModel& M, const Field& g) {
  constexpr double kPhiCap = 1e6;
  Field u = clamp_to_interval(M, g);
  const double vmax = max_value(u);
  const double vmin = min_value(u);
  if (vmax > 0.0 && !(eval_phi(M, vmax) <= kPhiCap)) {
    const double cap = eval_beta(M, kPhiCap);
    for (auto& v : u.v) v = std::min(v, cap);
  }
  if (vmin < 0.0 && !(eval_phi(M, vmin) >= -kPhiCap)) {
    const double cap = eval_beta(M, -kPhiCap);
    for (auto& v : u.v) v = std::max(v, cap);
  }
  return u;
}

}  // namespace

double resolvent_residual_l1(const ResolventProblem& p, const Field& u) {
  Field w = apply_phi(p.model, u);
  Field lap = laplacian(w);
  double s = 0.0;
  for (std::int64_t i = 0; i < u.size(); ++i)
    s += std::abs(u[i] - p.lambda * lap[i] - p.g[i]);
  return s * u.grid.cell_volume();
}

// ---------------------------------------------------------------------------
// Cellwise monotone Gauss-Seidel

namespace {

// Solves v + c·φ(v) = rhs for the strictly increasing left side; the root is
// bracketed inside [im.lo, im.hi] (bounded I) or found by geometric bracket
// expansion (unbounded I). Returns a value with |v + c φ(v) - rhs| <= gtol
// or the clamped endpoint when the representable root is outside the margin.
double solve_cell(const PhiModel& M, const IntervalMargin& im, double c, double rhs, double gtol,
                  double v_init) {
  auto G = [&](double v) { return v + c * eval_phi(M, v) - rhs; };

  double lo, hi;
  if (std::isfinite(im.lo)) {
    lo = im.lo;
    hi = im.hi;
    const double Glo = G(lo);
    if (Glo >= 0.0) return lo;
    const double Ghi = G(hi);
    if (Ghi <= 0.0) return hi;
  } else {
    // Geometric expansion around the initial guess.
    double step = std::max(1.0, std::abs(v_init));
    lo = v_init;
    hi = v_init;
    double Glo = G(lo), Ghi = G(hi);
    for (int it = 0; it < 200 && (Glo > 0.0 || Ghi < 0.0); ++it) {
      if (Glo > 0.0) {
        lo -= step;
        Glo = G(lo);
      }
      if (Ghi < 0.0) {
        hi += step;
        Ghi = G(hi);
      }
      step *= 2.0;
    }
    if (Glo > 0.0 || Ghi < 0.0)
      throw NumericError("cell equation bracket expansion failed");
  }

  // Bisection down to a short bracket, then Newton polish.
  double v = clamp_value(im, v_init);
  if (v < lo || v > hi) v = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double Gv = G(v);
    if (std::abs(Gv) <= gtol) return v;
    if (Gv > 0.0)
      hi = v;
    else
      lo = v;
    // Newton candidate; fall back to the midpoint if it leaves the bracket.
    const double D = eval_D(M, v);
    double next = v - Gv / (1.0 + c * D);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == v) return v;
    v = next;
  }
  return v;
}

}  // namespace

Field solve_cellwise_monotone(const ResolventProblem& p, SolverStats* stats) {
  p.validate();
  const Grid& grid = p.g.grid;
  grid.validate();
  const auto im = margin_of(p.model);
  const double h2 = grid.h() * grid.h();
  const double c_nbr = p.lambda / h2;
  const std::int64_t N = grid.cells();
  const long max_sweeps = p.max_iter > 0 ? p.max_iter : 20000;
  // Per-cell equation tolerance well below the L¹ budget per cell.
  const double gtol = p.tol / (static_cast<double>(N) * grid.cell_volume() * 50.0);

  Field u = safe_start(p.model, p.g);
  Field w = apply_phi(p.model, u);

  auto relax_cell = [&](std::int64_t i) {
    const auto idx = unflatten(grid, i);
    double nbr_sum = 0.0;
    int deg = 0;
    for (int a = 0; a < grid.d; ++a) {
      for (int dir : {-1, +1}) {
        auto j = idx;
        int& cc = j[static_cast<size_t>(a)];
        cc += dir;
        if (cc < 0 || cc >= grid.n) {
          if (grid.bc == BC::Periodic)
            cc = (cc + grid.n) % grid.n;
          else
            continue;  // reflected face: no coupling
        }
        nbr_sum += w[flatten(grid, j)];
        ++deg;
      }
    }
    const double rhs = p.g[i] + c_nbr * nbr_sum;
    const double c_diag = c_nbr * deg;
    u[i] = solve_cell(p.model, im, c_diag, rhs, gtol, u[i]);
    w[i] = eval_phi(p.model, u[i]);
  };

  double residual = HUGE_VAL;
  long sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    for (std::int64_t i = 0; i < N; ++i) relax_cell(i);
    for (std::int64_t i = N - 1; i >= 0; --i) relax_cell(i);
    // Residual from the cached w (exactly the φ values of the iterate).
    Field lap = laplacian(w);
    residual = 0.0;
    for (std::int64_t i = 0; i < N; ++i)
      residual += std::abs(u[i] - p.lambda * lap[i] - p.g[i]);
    residual *= grid.cell_volume();
    if (stats) stats->residual_history.push_back(residual);
    if (residual <= p.tol) break;
  }
  if (stats) {
    stats->iterations = sweep + 1;
    stats->residual = residual;
  }
  if (residual > p.tol)
    throw NoConvergence("cellwise resolvent solve stalled", residual, sweep);
  return u;
}

// ---------------------------------------------------------------------------
// Damped Newton with Jacobi-preconditioned BiCGStab

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Solves (I - λ Δ_h diag(D)) x = b, matrix-free, right-preconditioned by the
// Jacobi diagonal 1 + λ deg_i D_i / h². The system matrix is a nonsymmetric
// M-matrix (columns sum to 1 for periodic bc), hence BiCGStab over CG.
// Returns false on breakdown; x then holds the best iterate found.
bool bicgstab(const Grid& grid, double lambda, const std::vector<double>& D,
              const std::vector<double>& b, std::vector<double>& x, double rtol, int max_iter) {
  const std::int64_t N = grid.cells();
  const double h2 = grid.h() * grid.h();
  std::vector<double> diag(static_cast<size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    const int deg = neighbor_degree(grid, unflatten(grid, i));
    diag[static_cast<size_t>(i)] = 1.0 + lambda * deg * D[static_cast<size_t>(i)] / h2;
  }
  Field tmp(grid), lap(grid);
  auto apply_A_Minv = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::int64_t i = 0; i < N; ++i)
      tmp[i] = D[static_cast<size_t>(i)] * v[static_cast<size_t>(i)] / diag[static_cast<size_t>(i)];
    lap = laplacian(tmp);
    for (std::int64_t i = 0; i < N; ++i)
      out[static_cast<size_t>(i)] =
          v[static_cast<size_t>(i)] / diag[static_cast<size_t>(i)] - lambda * lap[i];
  };

  const size_t n = static_cast<size_t>(N);
  std::vector<double> z(n, 0.0), r = b, r_hat = b, p(n, 0.0), v(n, 0.0), s(n), t(n);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    return true;
  }
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  bool ok = false;
  for (int it = 0; it < max_iter; ++it) {
    const double rho1 = dot(r_hat, r);
    if (std::abs(rho1) < 1e-300) break;
    const double beta = (rho1 / rho) * (alpha / omega);
    for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    apply_A_Minv(p, v);
    const double denom = dot(r_hat, v);
    if (std::abs(denom) < 1e-300) break;
    alpha = rho1 / denom;
    for (size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (std::sqrt(dot(s, s)) <= rtol * bnorm) {
      for (size_t i = 0; i < n; ++i) z[i] += alpha * p[i];
      ok = true;
      break;
    }
    apply_A_Minv(s, t);
    const double tt = dot(t, t);
    if (tt < 1e-300) break;
    omega = dot(t, s) / tt;
    for (size_t i = 0; i < n; ++i) z[i] += alpha * p[i] + omega * s[i];
    for (size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    rho = rho1;
    if (std::sqrt(dot(r, r)) <= rtol * bnorm) {
      ok = true;
      break;
    }
    if (std::abs(omega) < 1e-300) break;
  }
  for (size_t i = 0; i < n; ++i) x[i] = z[i] / diag[i];
  return ok;
}

}  // namespace

Field solve_newton(const ResolventProblem& p, const Field& u_init, SolverStats* stats) {
  p.validate();
  const Grid& grid = p.g.grid;
  grid.validate();
  if (!(u_init.grid == grid)) throw DomainError("solve_newton: init grid mismatch");
  const auto im = margin_of(p.model);
  const std::int64_t N = grid.cells();
  const long max_newton = p.max_iter > 0 ? p.max_iter : 60;

  Field u = clamp_to_interval(p.model, u_init);
  const size_t n = static_cast<size_t>(N);
  std::vector<double> D(n), F(n), step(n);

  auto eval_residual = [&](const Field& cand, std::vector<double>* Fout) {
    Field w = apply_phi(p.model, cand);
    Field lap = laplacian(w);
    double s = 0.0;
    for (std::int64_t i = 0; i < N; ++i) {
      const double f = cand[i] - p.lambda * lap[i] - p.g[i];
      if (Fout) (*Fout)[static_cast<size_t>(i)] = f;
      s += std::abs(f);
    }
    return s * grid.cell_volume();
  };

  double res = eval_residual(u, &F);
  if (stats) stats->residual_history.push_back(res);
  long it = 0;
  for (; it < max_newton && res > p.tol; ++it) {
    for (std::int64_t i = 0; i < N; ++i) D[static_cast<size_t>(i)] = eval_D(p.model, u[i]);
    std::vector<double> rhs(n);
    for (size_t i = 0; i < n; ++i) rhs[i] = -F[i];
    bicgstab(grid, p.lambda, D, rhs, step, 1e-10, 500);

    // Armijo backtracking on the L¹ residual with clamped trial iterates.
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Field trial(grid);
      for (std::int64_t i = 0; i < N; ++i)
        trial[i] = clamp_value(im, u[i] + alpha * step[static_cast<size_t>(i)]);
      const double trial_res = eval_residual(trial, nullptr);
      if (trial_res <= (1.0 - 1e-4 * alpha) * res) {
        u = std::move(trial);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (stats) {
        stats->iterations = it;
        stats->residual = res;
      }
      throw NoConvergence("Newton resolvent solve stalled in line search", res, it);
    }
    res = eval_residual(u, &F);
    if (stats) stats->residual_history.push_back(res);
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = res;
  }
  if (res > p.tol) throw NoConvergence("Newton resolvent solve hit max_iter", res, it);
  return u;
}

// ---------------------------------------------------------------------------
// Proximal descent in the discrete H^{-1} metric

namespace {

// Oriented ∫_{x1}^{x2} φ by composite 8-point Gauss-Legendre. Used to form
// objective differences Φ(x2)-Φ(x1) to full relative precision: subtracting
// two Φ values directly would lose all signal once steps shrink below the
// round-off of the objective, stalling the line search long before tol.
double phi_line_integral(const PhiModel& M, double x1, double x2) {
  static constexpr double kNode[4] = {0.1834346424956498, 0.5255324099163290,
                                      0.7966664774136267, 0.9602898564975363};
  static constexpr double kWeight[4] = {0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};
  const double span = x2 - x1;
  if (span == 0.0) return 0.0;
  const int panels = std::min(64, 1 + static_cast<int>(std::abs(span) / 0.05));
  const double dx = span / panels;
  double acc = 0.0;
  for (int q = 0; q < panels; ++q) {
    const double mid = x1 + (q + 0.5) * dx;
    const double half = 0.5 * dx;
    for (int j = 0; j < 4; ++j) {
      acc += kWeight[j] * half *
             (eval_phi(M, mid - half * kNode[j]) + eval_phi(M, mid + half * kNode[j]));
    }
  }
  return acc;
}

}  // namespace

Field solve_prox_hminus1(const ResolventProblem& p, const Field& u_init, SolverStats* stats) {
  p.validate();
  const Grid& grid = p.g.grid;
  grid.validate();
  if (grid.bc != BC::Periodic)
    throw BCError("the dual-metric proximal solver requires periodic boundaries");
  if (!(u_init.grid == grid)) throw DomainError("solve_prox_hminus1: init grid mismatch");
  const auto im = margin_of(p.model);
  const std::int64_t N = grid.cells();
  const long max_steps = p.max_iter > 0 ? p.max_iter : 2000000;

  // Descent steps preserve the mean (the direction is projected to mean zero
  // below), so the iterate must start on the mass shell of g.
  double mean_g = 0.0;
  for (std::int64_t i = 0; i < N; ++i) mean_g += p.g[i];
  mean_g /= static_cast<double>(N);
  Field u = clamp_to_interval(p.model, u_init);
  {
    double mean_u = 0.0;
    for (std::int64_t i = 0; i < N; ++i) mean_u += u[i];
    mean_u /= static_cast<double>(N);
    Field shifted(grid);
    for (std::int64_t i = 0; i < N; ++i) shifted[i] = u[i] + (mean_g - mean_u);
    u = clamp_to_interval(p.model, shifted);
    double check = 0.0;
    for (std::int64_t i = 0; i < N; ++i) check += u[i];
    check /= static_cast<double>(N);
    if (std::abs(check - mean_g) > 1e-13 * std::max(1.0, std::abs(mean_g)))
      u = Field::constant(grid, clamp_value(im, mean_g));
  }

  // Absolute objective, for the recorded trace only; descent decisions use
  // exact increments ΔJ(s) so they stay meaningful below round-off of J.
  double J_track;
  {
    Field diff(grid);
    for (std::int64_t i = 0; i < N; ++i) diff[i] = u[i] - p.g[i];
    double phi_sum = 0.0;
    for (std::int64_t i = 0; i < N; ++i) phi_sum += eval_Phi(p.model, u[i]);
    J_track = hminus1_inner(diff, diff) / (2.0 * p.lambda) + phi_sum * grid.cell_volume();
  }

  double step_size = 1.0;
  double res = HUGE_VAL;
  long it = 0;
  for (; it < max_steps; ++it) {
    Field w = apply_phi(p.model, u);
    Field lap = laplacian(w);
    Field v(grid);
    res = 0.0;
    double mean_v = 0.0;
    for (std::int64_t i = 0; i < N; ++i) {
      v[i] = u[i] - p.g[i] - p.lambda * lap[i];
      res += std::abs(v[i]);
      mean_v += v[i];
    }
    res *= grid.cell_volume();
    mean_v /= static_cast<double>(N);
    if (stats && (it < 64 || it % 256 == 0)) {
      stats->residual_history.push_back(res);
      stats->objective_history.push_back(J_track);
    }
    if (res <= p.tol) break;
    // Project the direction onto mean zero: the dual metric does not see the
    // mean, and the resolvent preserves it, so descent happens on the shell.
    for (std::int64_t i = 0; i < N; ++i) v[i] -= mean_v;

    // For the quadratic part the increment is exact in s:
    //   (1/2λ)(|u-sv-g|² - |u-g|²)_{H⁻¹} = (s² ⟨v,v⟩ - 2s ⟨u-g,v⟩)/(2λ);
    // the entropy part is the oriented integral of φ cell by cell.
    Field diff(grid);
    for (std::int64_t i = 0; i < N; ++i) diff[i] = u[i] - p.g[i];
    const double vv = hminus1_inner(v, v);
    const double wv = hminus1_inner(diff, v);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Field trial(grid);
      bool inside = true;
      for (std::int64_t i = 0; i < N; ++i) {
        trial[i] = u[i] - step_size * v[i];
        if (trial[i] < im.lo || trial[i] > im.hi) {
          inside = false;
          break;
        }
      }
      if (inside) {
        double delta = (step_size * step_size * vv - 2.0 * step_size * wv) / (2.0 * p.lambda);
        for (std::int64_t i = 0; i < N; ++i)
          delta += phi_line_integral(p.model, u[i], trial[i]) * grid.cell_volume();
        if (delta <= -1e-4 * step_size * vv / p.lambda) {
          u = std::move(trial);
          J_track += delta;
          accepted = true;
          break;
        }
      }
      step_size *= 0.5;
    }
    if (!accepted) {
      if (stats) {
        stats->iterations = it;
        stats->residual = res;
      }
      throw NoConvergence("dual-metric proximal solve stalled", res, it);
    }
    step_size = std::min(step_size * 2.0, 1e6);
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = res;
  }
  if (res > p.tol) throw NoConvergence("dual-metric proximal solve hit max_iter", res, it);
  return u;
}

// ---------------------------------------------------------------------------

Field solve_resolvent(const ResolventProblem& p, SolverStats* stats) {
  try {
    return solve_newton(p, safe_start(p.model, p.g), stats);
  } catch (const NoConvergence&) {
    if (stats) *stats = SolverStats{};
    return solve_cellwise_monotone(p, stats);
  }
}

std::pair<double, double> resolvent_contraction_check(const PhiModel& model, double lambda,
                                                      const Field& g, const Field& g_tilde) {
  if (!(g.grid == g_tilde.grid))
    throw DomainError("resolvent_contraction_check requires matching grids");
  ResolventProblem p{model, lambda, g};
  ResolventProblem pt{model, lambda, g_tilde};
  Field u = solve_resolvent(p);
  Field ut = solve_resolvent(pt);
  return {norm_l1_diff(u, ut), norm_l1_diff(g, g_tilde)};
}

}  // namespace porodyn
