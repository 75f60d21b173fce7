#include "porodyn/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "porodyn/errors.hpp"
#include "porodyn/snapshot.hpp"

namespace porodyn {

namespace {

// 8-point Gauss-Legendre panel on [a, b] (oriented: flips sign with a > b).
constexpr double kNode[4] = {0.1834346424956498, 0.5255324099163290,
                             0.7966664774136267, 0.9602898564975363};
constexpr double kWeight[4] = {0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};

double gauss_panel(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double s = 0.0;
  for (int q = 0; q < 4; ++q) {
    s += kWeight[q] * (f(c + r * kNode[q]) + f(c - r * kNode[q]));
  }
  return s * r;
}

// Squared centered-difference gradient of u at one cell, mirror ghosts on
// reflecting boundaries.
double centered_grad_sq(const Field& u, std::int64_t flat) {
  const Grid& g = u.grid;
  const auto idx = unflatten(g, flat);
  const double inv2h = 1.0 / (2.0 * g.h());
  double s = 0.0;
  for (int a = 0; a < g.d; ++a) {
    auto pick = [&](int shifted) {
      auto j = idx;
      if (shifted < 0) {
        j[a] = (g.bc == BC::Periodic) ? g.n - 1 : 0;
      } else if (shifted >= g.n) {
        j[a] = (g.bc == BC::Periodic) ? 0 : g.n - 1;
      } else {
        j[a] = shifted;
      }
      return u[flatten(g, j)];
    };
    const double diff = (pick(idx[a] + 1) - pick(idx[a] - 1)) * inv2h;
    s += diff * diff;
  }
  return s;
}

int bin_of(double value, double v_lo, double width, int bins) {
  int b = static_cast<int>(std::floor((value - v_lo) / width));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

int chi_value(double u_val, double v) {
  if (0.0 < v && v < u_val) return 1;
  if (u_val < v && v < 0.0) return -1;
  return 0;
}

Field velocity_average(const Field& u, const std::function<double(double)>& Hprime,
                       double v_lo, double v_hi, int bins) {
  if (!(v_lo < v_hi) || bins < 1) throw ConfigError("velocity_average: bad bin window");
  if (!(v_lo <= 0.0 && 0.0 <= v_hi))
    throw RangeError("velocity_average: window must contain 0");
  if (min_value(u) < v_lo || max_value(u) > v_hi)
    throw RangeError("velocity_average: field exits the bin window");
  const double width = (v_hi - v_lo) / bins;
  Field out(u.grid);
  for (std::int64_t i = 0; i < u.size(); ++i) {
    const double ui = u[i];
    if (ui == 0.0) {
      out[i] = 0.0;
      continue;
    }
    // χ(ui, ·) is ±1 between 0 and ui, so the average is the oriented
    // integral of H' from 0 to ui, accumulated one bin piece at a time.
    const double lo = std::min(0.0, ui);
    const double hi = std::max(0.0, ui);
    double acc = 0.0;
    double a = lo;
    int b = bin_of(lo, v_lo, width, bins);
    while (a < hi) {
      const double edge = v_lo + (b + 1) * width;
      const double piece_end = std::min(hi, edge);
      if (piece_end > a) acc += gauss_panel(Hprime, a, piece_end);
      a = piece_end;
      ++b;
      if (b >= bins) {
        if (a < hi) acc += gauss_panel(Hprime, a, hi);
        break;
      }
    }
    out[i] = (ui > 0.0) ? acc : -acc;
  }
  return out;
}

double chi_distance(const Field& u, const Field& w) {
  if (!(u.grid == w.grid)) throw DomainError("chi_distance: grid mismatch");
  // For fixed x the set {v : χ_u(v) != χ_w(v)} is the interval between u_i
  // and w_i (minus a null set), so its measure is |u_i - w_i| exactly.
  double s = 0.0;
  for (std::int64_t i = 0; i < u.size(); ++i) s += std::abs(u[i] - w[i]);
  return s * u.grid.cell_volume();
}

signed char KineticSample::chi_at(std::size_t time_index, std::int64_t cell, int b) const {
  const std::size_t cells = static_cast<std::size_t>(grid.cells());
  return chi[(time_index * cells + static_cast<std::size_t>(cell)) * bins + b];
}

double KineticSample::defect_density_at(std::size_t step, std::int64_t cell, int b) const {
  const std::size_t k = step * static_cast<std::size_t>(grid.cells()) + static_cast<std::size_t>(cell);
  return defect_bin[k] == b ? defect_value[k] : 0.0;
}

double KineticSample::total_mass() const {
  const std::int64_t cells = grid.cells();
  const double vol = grid.cell_volume();
  double s = 0.0;
  for (std::size_t n = 0; n < taus.size(); ++n) {
    double slice = 0.0;
    for (std::int64_t i = 0; i < cells; ++i) slice += defect_value[n * cells + i];
    s += taus[n] * vol * slice;
  }
  return s;
}

std::vector<double> KineticSample::bin_masses() const {
  std::vector<double> mass(static_cast<std::size_t>(bins), 0.0);
  const std::int64_t cells = grid.cells();
  const double vol = grid.cell_volume();
  for (std::size_t n = 0; n < taus.size(); ++n) {
    for (std::int64_t i = 0; i < cells; ++i) {
      const std::size_t k = n * cells + i;
      mass[static_cast<std::size_t>(defect_bin[k])] += taus[n] * vol * defect_value[k];
    }
  }
  return mass;
}

double KineticSample::lambda_inf_sup() const {
  const auto mass = bin_masses();
  const double width = bin_width();
  double sup = 0.0;
  for (double m : mass) sup = std::max(sup, m / width);
  return sup;
}

KineticSample defect_measure(const Trajectory& traj, double v_lo, double v_hi, int bins) {
  if (traj.model.kind != PhiKind::Tabulated)
    throw ModelError("defect_measure: trajectory must be solved with a mollified model");
  if (!(v_lo < v_hi) || bins < 1) throw ConfigError("defect_measure: bad bin window");
  traj.validate();

  KineticSample ks;
  ks.grid = traj.grid;
  ks.times = traj.times;
  ks.taus = traj.taus;
  ks.v_lo = v_lo;
  ks.v_hi = v_hi;
  ks.bins = bins;

  const std::int64_t cells = ks.grid.cells();
  const double width = ks.bin_width();
  ks.chi.assign(traj.times.size() * static_cast<std::size_t>(cells) * bins, 0);
  for (std::size_t n = 0; n < traj.times.size(); ++n) {
    const Field& u = traj.states[n];
    for (std::int64_t i = 0; i < cells; ++i) {
      signed char* row = &ks.chi[(n * cells + i) * bins];
      for (int b = 0; b < bins; ++b)
        row[b] = static_cast<signed char>(chi_value(u[i], ks.v_center(b)));
    }
  }

  ks.defect_value.assign(traj.taus.size() * static_cast<std::size_t>(cells), 0.0);
  ks.defect_bin.assign(traj.taus.size() * static_cast<std::size_t>(cells), 0);
  for (std::size_t s = 0; s < traj.taus.size(); ++s) {
    const Field& u = traj.states[s + 1];
    for (std::int64_t i = 0; i < cells; ++i) {
      const std::size_t k = s * cells + i;
      ks.defect_value[k] = eval_D(traj.model, u[i]) * centered_grad_sq(u, i);
      ks.defect_bin[k] = bin_of(u[i], v_lo, width, bins);
    }
  }
  return ks;
}

KineticSample defect_measure(const Trajectory& traj, int bins) {
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& s : traj.states) {
    lo = std::min(lo, min_value(s));
    hi = std::max(hi, max_value(s));
  }
  const double pad = 0.05 * (hi - lo) + 1e-9;
  lo = std::max(lo - pad, traj.model.lo);
  hi = std::min(hi + pad, traj.model.hi);
  return defect_measure(traj, lo, hi, bins);
}

std::vector<double> kinetic_residual(const Trajectory& traj, const KineticSample& sample,
                                     const std::vector<SeparableTest>& tests,
                                     const SourceSpec& source, bool include_defect_term) {
  traj.validate();
  if (!(sample.grid == traj.grid) || sample.times.size() != traj.times.size())
    throw DomainError("kinetic_residual: sample does not match the trajectory");
  const Grid& g = traj.grid;
  const std::int64_t cells = g.cells();
  const double T = traj.times.back();
  const double vol = g.cell_volume();
  const double width = sample.bin_width();

  // Forcing actually applied on each step: midpoint sample in time, or the
  // reaction rate at the midpoint of the converged bracketing states.
  std::vector<Field> fstep;
  if (source.kind != SourceKind::None) {
    fstep.reserve(traj.taus.size());
    for (std::size_t s = 0; s < traj.taus.size(); ++s) {
      if (source.kind == SourceKind::TimeSpace) {
        const double t_mid = 0.5 * (traj.times[s] + traj.times[s + 1]);
        fstep.push_back(porodyn::sample(
            g, [&](const std::array<double, 3>& x) { return source.space_time(t_mid, x); }));
      } else {
        Field f(g);
        const Field& ua = traj.states[s];
        const Field& ub = traj.states[s + 1];
        for (std::int64_t i = 0; i < cells; ++i) f[i] = source.reaction(0.5 * (ua[i] + ub[i]));
        fstep.push_back(std::move(f));
      }
    }
  }

  std::vector<double> out;
  out.reserve(tests.size());
  for (const auto& test : tests) {
    if (test.psi(0.0) != 0.0 || test.psi(T) != 0.0)
      throw SupportError("kinetic_residual: time factor touches t=0 or t=T");
    if (test.zeta(sample.v_lo) != 0.0 || test.zeta(sample.v_hi) != 0.0)
      throw SupportError("kinetic_residual: velocity factor touches the bin window edge");
    for (int a = 0; a < g.d; ++a) {
      std::array<double, 3> x{0.0, 0.0, 0.0};
      x[a] = -g.L;
      const double at_lo = test.phi_x(x);
      x[a] = g.L;
      const double at_hi = test.phi_x(x);
      if (at_lo != 0.0 || at_hi != 0.0)
        throw SupportError("kinetic_residual: space factor touches the box boundary");
    }

    const Field phi = porodyn::sample(g, test.phi_x);
    const Field lap_phi = laplacian(phi);
    std::vector<double> zeta_b(static_cast<std::size_t>(sample.bins));
    std::vector<double> dzeta_b(static_cast<std::size_t>(sample.bins));
    for (int b = 0; b < sample.bins; ++b) {
      const double v = sample.v_center(b);
      zeta_b[static_cast<std::size_t>(b)] = test.zeta(v);
      dzeta_b[static_cast<std::size_t>(b)] = eval_D(traj.model, v) * zeta_b[static_cast<std::size_t>(b)];
    }

    // <∂ₜχ, Ψ> moved onto ψ' and <D(v)Δχ, Ψ> moved onto Δϕ, both against the
    // stored χ with trapezoid weights in time.
    double p1 = 0.0, p2 = 0.0;
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
      const double w_lo = (n == 0) ? 0.0 : traj.taus[n - 1];
      const double w_hi = (n + 1 == traj.times.size()) ? 0.0 : traj.taus[n];
      const double w = 0.5 * (w_lo + w_hi);
      if (w == 0.0) continue;
      double a1 = 0.0, a2 = 0.0;
      for (std::int64_t i = 0; i < cells; ++i) {
        const signed char* row = &sample.chi[(n * cells + i) * sample.bins];
        double s1 = 0.0, s2 = 0.0;
        for (int b = 0; b < sample.bins; ++b) {
          if (row[b] == 0) continue;
          s1 += row[b] * zeta_b[static_cast<std::size_t>(b)];
          s2 += row[b] * dzeta_b[static_cast<std::size_t>(b)];
        }
        a1 += phi[i] * s1;
        a2 += lap_phi[i] * s2;
      }
      const double t = traj.times[n];
      p1 += -w * test.psi_prime(t) * a1 * vol * width;
      p2 += w * test.psi(t) * a2 * vol * width;
    }

    // <∂ᵥn, Ψ> moved onto ζ' at the carrying bin center, and the reaction
    // pairing <δ_{v=u} f, Ψ>, both on the post-step states.
    double p3 = 0.0, p4 = 0.0;
    for (std::size_t s = 0; s < traj.taus.size(); ++s) {
      const double t = traj.times[s + 1];
      const double psi_t = test.psi(t);
      if (psi_t == 0.0) continue;
      const Field& u = traj.states[s + 1];
      double a3 = 0.0, a4 = 0.0;
      for (std::int64_t i = 0; i < cells; ++i) {
        const std::size_t k = s * cells + i;
        a3 += sample.defect_value[k] * phi[i] *
              test.zeta_prime(sample.v_center(sample.defect_bin[k]));
        if (!fstep.empty()) a4 += phi[i] * test.zeta(u[i]) * fstep[s][i];
      }
      p3 += -traj.taus[s] * vol * psi_t * a3;
      p4 += traj.taus[s] * vol * psi_t * a4;
    }

    double r = p1 - p2 - p4;
    if (include_defect_term) r -= p3;
    out.push_back(r);
  }
  return out;
}

void export_kinetic_sample(const KineticSample& sample, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IOError("export_kinetic_sample: cannot create " + dir);

  const std::int64_t cells = sample.grid.cells();
  const double vol = sample.grid.cell_volume();
  std::string csv = "t_index,v_bin,mass\n";
  char line[128];
  for (std::size_t n = 0; n < sample.taus.size(); ++n) {
    std::vector<double> mass(static_cast<std::size_t>(sample.bins), 0.0);
    for (std::int64_t i = 0; i < cells; ++i) {
      const std::size_t k = n * cells + i;
      mass[static_cast<std::size_t>(sample.defect_bin[k])] +=
          sample.taus[n] * vol * sample.defect_value[k];
    }
    for (int b = 0; b < sample.bins; ++b) {
      if (mass[static_cast<std::size_t>(b)] == 0.0) continue;
      std::snprintf(line, sizeof(line), "%zu,%d,%.17g\n", n, b,
                    mass[static_cast<std::size_t>(b)]);
      csv += line;
    }
  }
  atomic_write_text(dir + "/sample.csv", csv);

  char head[512];
  std::snprintf(head, sizeof(head),
                "{\n  \"bins\": %d,\n  \"v_lo\": %.17g,\n  \"v_hi\": %.17g,\n"
                "  \"times\": %zu,\n  \"cells\": %lld,\n  \"total_mass\": %.17g,\n"
                "  \"lambda_inf_sup\": %.17g\n}\n",
                sample.bins, sample.v_lo, sample.v_hi, sample.times.size(),
                static_cast<long long>(cells), sample.total_mass(), sample.lambda_inf_sup());
  atomic_write_text(dir + "/sample.json", head);
}

void export_residual_report(const std::vector<double>& residuals, double h, double tau,
                            const std::string& path) {
  std::string csv = "test_id,value,h,tau\n";
  char line[160];
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g\n", i, residuals[i], h, tau);
    csv += line;
  }
  atomic_write_text(path, csv);
}

}  // namespace porodyn
