#include "porodyn/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <string>

#include "porodyn/errors.hpp"
#include "porodyn/snapshot.hpp"
#include "porodyn/spectral.hpp"

namespace porodyn {

namespace {

constexpr std::int64_t kPairSumCellCap = std::int64_t{1} << 13;

void check_fractional_orders(double sigma, double p) {
  if (!(sigma > 0.0) || !(sigma < 2.0))
    throw ConfigError("fractional order sigma must lie in (0, 2)");
  if (!(p >= 1.0)) throw ConfigError("integrability exponent p must be >= 1");
}

// Inverse distance powers dist^{-(sigma p + d)} indexed by the per-axis
// absolute index separations (flattened row-major like the field itself).
// Both metrics depend only on those separations: min-image folds each one
// onto [0, n/2], the plain metric uses it directly.
std::vector<double> distance_kernel(const Grid& g, double sigma, double p) {
  const double h = g.h();
  const double expo = -(sigma * p + static_cast<double>(g.d));
  const auto n = static_cast<std::int64_t>(g.n);
  std::int64_t entries = 1;
  for (int a = 0; a < g.d; ++a) entries *= n;
  std::vector<double> kernel(static_cast<size_t>(entries), 0.0);
  for (std::int64_t off = 0; off < entries; ++off) {
    std::int64_t rest = off;
    double dist_sq = 0.0;
    for (int a = 0; a < g.d; ++a) {
      std::int64_t delta = rest % n;
      rest /= n;
      if (g.bc == BC::Periodic) delta = std::min(delta, n - delta);
      const double dx = static_cast<double>(delta) * h;
      dist_sq += dx * dx;
    }
    if (off != 0) kernel[static_cast<size_t>(off)] = std::pow(std::sqrt(dist_sq), expo);
  }
  return kernel;
}

double pair_sum(const Field& w, const std::vector<double>& kernel, double p) {
  const Grid& g = w.grid;
  const auto N = g.cells();
  const auto n = static_cast<std::int64_t>(g.n);
  const bool quadratic = p == 2.0;
  double total = 0.0;
  if (g.d == 1) {
    for (std::int64_t i = 0; i < N; ++i) {
      const double wi = w.v[static_cast<size_t>(i)];
      double row = 0.0;
      for (std::int64_t j = i + 1; j < N; ++j) {
        const double diff = wi - w.v[static_cast<size_t>(j)];
        const double num = quadratic ? diff * diff : std::pow(std::abs(diff), p);
        row += num * kernel[static_cast<size_t>(j - i)];
      }
      total += row;
    }
    return 2.0 * total;
  }
  std::vector<std::array<std::int64_t, 3>> coord(static_cast<size_t>(N), {0, 0, 0});
  for (std::int64_t i = 0; i < N; ++i) {
    std::int64_t rest = i;
    for (int a = 0; a < g.d; ++a) {
      coord[static_cast<size_t>(i)][static_cast<size_t>(a)] = rest % n;
      rest /= n;
    }
  }
  for (std::int64_t i = 0; i < N; ++i) {
    const double wi = w.v[static_cast<size_t>(i)];
    const auto& ci = coord[static_cast<size_t>(i)];
    double row = 0.0;
    for (std::int64_t j = i + 1; j < N; ++j) {
      const auto& cj = coord[static_cast<size_t>(j)];
      std::int64_t off = 0;
      std::int64_t stride = 1;
      for (int a = 0; a < g.d; ++a) {
        off += std::abs(ci[static_cast<size_t>(a)] - cj[static_cast<size_t>(a)]) * stride;
        stride *= n;
      }
      const double diff = wi - w.v[static_cast<size_t>(j)];
      const double num = quadratic ? diff * diff : std::pow(std::abs(diff), p);
      row += num * kernel[static_cast<size_t>(off)];
    }
    total += row;
  }
  return 2.0 * total;
}

// Trapezoid weights over the recorded times; they sum to the horizon.
std::vector<double> time_weights(const Trajectory& traj) {
  const size_t M = traj.times.size();
  std::vector<double> w(M, 0.0);
  for (size_t s = 0; s + 1 < M; ++s) {
    const double tau = traj.taus[s];
    w[s] += 0.5 * tau;
    w[s + 1] += 0.5 * tau;
  }
  return w;
}

double smoothstep(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

double slobodetskii_seminorm(const Field& w, double sigma, double p) {
  check_fractional_orders(sigma, p);
  const Grid& g = w.grid;
  if (g.cells() > kPairSumCellCap)
    throw SizeError("pairwise seminorm limited to 2^13 cells (O(N^2) double sum)");
  assert_finite(w, "seminorm input");
  const auto kernel = distance_kernel(g, sigma, p);
  const double vol = g.cell_volume();
  const double sum = pair_sum(w, kernel, p);
  return std::pow(vol * vol * sum, 1.0 / p);
}

double spacetime_norm(const Trajectory& traj, double sigma_t, double sigma_x, double p) {
  traj.validate();
  if (!(sigma_t >= 0.0) || !(sigma_t < 1.0))
    throw ConfigError("temporal order sigma_t must lie in [0, 1)");
  check_fractional_orders(sigma_x, p);
  if (traj.grid.cells() > kPairSumCellCap)
    throw SizeError("pairwise seminorm limited to 2^13 cells (O(N^2) double sum)");
  const size_t M = traj.times.size();
  if (sigma_t > 0.0 && M > 128)
    throw SizeError("sigma_t > 0 evaluates a spatial seminorm per time pair; "
                    "at most 128 recorded states are supported");
  const auto kernel = distance_kernel(traj.grid, sigma_x, p);
  const double vol = traj.grid.cell_volume();
  const auto weights = time_weights(traj);
  auto inner_norm = [&](const Field& u) {
    return norm_lp(u, p) + std::pow(vol * vol * pair_sum(u, kernel, p), 1.0 / p);
  };
  double acc = 0.0;
  for (size_t s = 0; s < M; ++s)
    acc += weights[s] * std::pow(inner_norm(traj.states[s]), p);
  if (sigma_t > 0.0) {
    Field diff(traj.grid);
    const double time_expo = 1.0 + sigma_t * p;
    for (size_t a = 0; a < M; ++a) {
      for (size_t b = a + 1; b < M; ++b) {
        for (size_t i = 0; i < diff.v.size(); ++i)
          diff.v[i] = traj.states[a].v[i] - traj.states[b].v[i];
        const double gap = traj.times[b] - traj.times[a];
        acc += 2.0 * weights[a] * weights[b] * std::pow(inner_norm(diff), p) /
               std::pow(gap, time_expo);
      }
    }
  }
  return std::pow(acc, 1.0 / p);
}

double dyadic_cutoff(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 1.5) return 0.0;
  return 1.0 - smoothstep((r - 1.0) / 0.5);
}

double dyadic_multiplier(int j, double r) {
  if (j < 0) throw ConfigError("dyadic block index must be nonnegative");
  if (j == 0) return dyadic_cutoff(r);
  return dyadic_cutoff(std::ldexp(r, -j)) - dyadic_cutoff(std::ldexp(r, -j + 1));
}

std::vector<std::pair<int, double>> besov_block_norms(const Field& w, double s, double p) {
  const Grid& g = w.grid;
  if ((g.n & (g.n - 1)) != 0)
    throw SizeError("dyadic block decomposition requires n to be a power of two");
  if (!(p >= 1.0)) throw ConfigError("integrability exponent p must be >= 1");
  assert_finite(w, "block decomposition input");
  int log2n = 0;
  while ((1 << (log2n + 1)) <= g.n) ++log2n;
  const int j_max = std::max(0, log2n - 2);
  const auto spectrum = dft_forward(w);
  const auto N = g.cells();
  std::vector<double> radius(static_cast<size_t>(N), 0.0);
  for (std::int64_t i = 0; i < N; ++i) {
    std::int64_t rest = i;
    double r_sq = 0.0;
    for (int a = 0; a < g.d; ++a) {
      const int k = signed_mode(static_cast<int>(rest % g.n), g.n);
      rest /= g.n;
      r_sq += static_cast<double>(k) * static_cast<double>(k);
    }
    radius[static_cast<size_t>(i)] = std::sqrt(r_sq);
  }
  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<size_t>(j_max) + 1);
  std::vector<std::complex<double>> windowed(static_cast<size_t>(N));
  for (int j = 0; j <= j_max; ++j) {
    for (std::int64_t i = 0; i < N; ++i) {
      const auto idx = static_cast<size_t>(i);
      windowed[idx] = spectrum[idx] * dyadic_multiplier(j, radius[idx]);
    }
    const Field block = dft_inverse(g, windowed);
    out.emplace_back(j, std::exp2(s * j) * norm_lp(block, p));
  }
  return out;
}

KappaExponents kappa_from_m(double m, double p) {
  if (!(m > 1.0)) throw ConfigError("growth order m must exceed 1");
  if (!(p >= 1.0)) throw ConfigError("integrability exponent p must be >= 1");
  return {(m - p) / (p * (m - 1.0)), 2.0 * (p - 1.0) / (p * (m - 1.0))};
}

KappaExponents kappa_from_b(double b, double p) {
  if (!(b > 0.0)) throw ConfigError("degeneracy exponent b must be positive");
  if (!(p >= 1.0)) throw ConfigError("integrability exponent p must be >= 1");
  return {(b + 1.0 - p) / (p * b), 2.0 * (p - 1.0) / (p * b)};
}

const char* trend_label(TrendVerdict v) {
  switch (v) {
    case TrendVerdict::Stable: return "stable";
    case TrendVerdict::Growing: return "growing";
    default: return "inconclusive";
  }
}

RegularityReport exponent_scan(const std::vector<Trajectory>& runs, double p,
                               const std::vector<double>& sigma_t_grid,
                               const std::vector<double>& sigma_x_grid) {
  if (runs.size() < 2) throw ConfigError("exponent scan needs at least two refinement levels");
  if (sigma_t_grid.empty() || sigma_x_grid.empty())
    throw ConfigError("exponent scan needs nonempty sigma grids");
  for (const auto& traj : runs) traj.validate();
  const auto& base = runs.front();
  for (size_t l = 1; l < runs.size(); ++l) {
    const auto& g = runs[l].grid;
    if (g.d != base.grid.d || g.L != base.grid.L || g.bc != base.grid.bc)
      throw ConfigError("refinement levels must share the physical box");
    if (g.n <= runs[l - 1].grid.n)
      throw ConfigError("refinement levels must have strictly increasing resolution");
    const auto& m0 = base.model;
    const auto& ml = runs[l].model;
    if (ml.kind != m0.kind || ml.a != m0.a || ml.b != m0.b || ml.m != m0.m)
      throw ConfigError("refinement levels must share the diffusion model");
    const double T0 = base.times.back();
    if (std::abs(runs[l].times.back() - T0) > 1e-9 * std::max(1.0, std::abs(T0)))
      throw ConfigError("refinement levels must share the time horizon");
  }
  double m_eff = 0.0;
  switch (base.model.kind) {
    case PhiKind::Biofilm:
      if (!(p >= 2.0) || !(p <= base.model.b + 1.0))
        throw ConfigError("biofilm exponent predictions require p in [2, b+1]");
      m_eff = base.model.b + 1.0;
      break;
    case PhiKind::PME:
      m_eff = base.model.m;
      break;
    default:
      throw ConfigError("exponent predictions require a Biofilm or PME model");
  }
  RegularityReport report;
  report.p = p;
  report.m = m_eff;
  report.kappa = kappa_from_m(m_eff, p);
  report.flux_hypothesis_assumed = m_eff < 2.0;
  report.sigma_t_grid = sigma_t_grid;
  report.sigma_x_grid = sigma_x_grid;
  for (const auto& traj : runs) report.level_cells.push_back(traj.grid.cells());
  report.values.assign(runs.size(),
                       std::vector<std::vector<double>>(
                           sigma_t_grid.size(), std::vector<double>(sigma_x_grid.size(), 0.0)));
  for (size_t l = 0; l < runs.size(); ++l)
    for (size_t it = 0; it < sigma_t_grid.size(); ++it)
      for (size_t ix = 0; ix < sigma_x_grid.size(); ++ix)
        report.values[l][it][ix] = spacetime_norm(runs[l], sigma_t_grid[it], sigma_x_grid[ix], p);
  report.verdicts.assign(sigma_t_grid.size(),
                         std::vector<TrendVerdict>(sigma_x_grid.size(), TrendVerdict::Inconclusive));
  constexpr double kZeroFloor = 1e-300;
  for (size_t it = 0; it < sigma_t_grid.size(); ++it) {
    for (size_t ix = 0; ix < sigma_x_grid.size(); ++ix) {
      bool all_stable = true;
      bool all_growing = true;
      for (size_t l = 0; l + 1 < runs.size(); ++l) {
        const double lo = report.values[l][it][ix];
        const double hi = report.values[l + 1][it][ix];
        const double ratio = hi <= kZeroFloor ? (lo <= kZeroFloor ? 1.0 : 0.0)
                                              : (lo <= kZeroFloor ? HUGE_VAL : hi / lo);
        all_stable = all_stable && ratio <= 1.25;
        all_growing = all_growing && ratio >= 2.0;
      }
      report.verdicts[it][ix] = all_stable    ? TrendVerdict::Stable
                                : all_growing ? TrendVerdict::Growing
                                              : TrendVerdict::Inconclusive;
    }
  }
  return report;
}

void export_regularity_report(const RegularityReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string csv = "level,sigma_t,sigma_x,p,value,verdict\n";
  for (size_t l = 0; l < report.values.size(); ++l) {
    for (size_t it = 0; it < report.sigma_t_grid.size(); ++it) {
      for (size_t ix = 0; ix < report.sigma_x_grid.size(); ++ix) {
        csv += std::to_string(l);
        csv += ',';
        csv += format_double(report.sigma_t_grid[it]);
        csv += ',';
        csv += format_double(report.sigma_x_grid[ix]);
        csv += ',';
        csv += format_double(report.p);
        csv += ',';
        csv += format_double(report.values[l][it][ix]);
        csv += ',';
        csv += trend_label(report.verdicts[it][ix]);
        csv += '\n';
      }
    }
  }
  atomic_write_text((fs::path(dir) / "report.csv").string(), csv);

  std::string json = "{\n";
  json += "  \"p\": " + format_double(report.p) + ",\n";
  json += "  \"m\": " + format_double(report.m) + ",\n";
  json += "  \"kappa_t\": " + format_double(report.kappa.kappa_t) + ",\n";
  json += "  \"kappa_x\": " + format_double(report.kappa.kappa_x) + ",\n";
  json += std::string("  \"flux_hypothesis_assumed\": ") +
          (report.flux_hypothesis_assumed ? "true" : "false") + ",\n";
  auto number_list = [](const auto& xs, auto&& fmt) {
    std::string s = "[";
    for (size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ", ";
      s += fmt(xs[i]);
    }
    return s + "]";
  };
  json += "  \"level_cells\": " +
          number_list(report.level_cells, [](std::int64_t c) { return std::to_string(c); }) + ",\n";
  json += "  \"sigma_t\": " + number_list(report.sigma_t_grid, format_double) + ",\n";
  json += "  \"sigma_x\": " + number_list(report.sigma_x_grid, format_double) + ",\n";
  json += "  \"verdicts\": [";
  for (size_t it = 0; it < report.verdicts.size(); ++it) {
    if (it) json += ", ";
    json += "[";
    for (size_t ix = 0; ix < report.verdicts[it].size(); ++ix) {
      if (ix) json += ", ";
      json += std::string("\"") + trend_label(report.verdicts[it][ix]) + "\"";
    }
    json += "]";
  }
  json += "]\n}\n";
  atomic_write_text((fs::path(dir) / "report.json").string(), json);
}

}  // namespace porodyn
