#include "porodyn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <thread>

#include "porodyn/errors.hpp"
#include "porodyn/kinetic.hpp"
#include "porodyn/snapshot.hpp"

namespace porodyn {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(trial) + 1));
}

double u01(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& eng, double a, double b) { return a + (b - a) * u01(eng); }

// Analytic bump sums are used both for initial data (sampled and clamped) and
// for forcing terms (kept as closures so any grid or time can evaluate them).
struct Bump {
  double amp = 0.0;
  std::array<double, 3> center = {0.0, 0.0, 0.0};
  double width = 1.0;
};

struct BumpSum {
  std::vector<Bump> bumps;
  int d = 1;
  double L = 1.0;
  bool periodic = true;

  double operator()(const std::array<double, 3>& x) const {
    double total = 0.0;
    for (const Bump& b : bumps) {
      double r_sq = 0.0;
      for (int a = 0; a < d; ++a) {
        double delta = std::abs(x[static_cast<size_t>(a)] - b.center[static_cast<size_t>(a)]);
        if (periodic) delta = std::min(delta, 2.0 * L - delta);
        r_sq += delta * delta;
      }
      total += b.amp * std::exp(-0.5 * r_sq / (b.width * b.width));
    }
    return total;
  }
};

BumpSum draw_bumps(const Grid& g, std::mt19937_64& eng, double amp_lo, double amp_hi) {
  BumpSum f;
  f.d = g.d;
  f.L = g.L;
  f.periodic = g.bc == BC::Periodic;
  const int count = 1 + static_cast<int>(eng() % 4);
  for (int k = 0; k < count; ++k) {
    Bump b;
    b.amp = uniform(eng, amp_lo, amp_hi);
    for (int a = 0; a < g.d; ++a)
      b.center[static_cast<size_t>(a)] = uniform(eng, -g.L, g.L);
    b.width = uniform(eng, 0.08 * g.L, 0.4 * g.L);
    f.bumps.push_back(b);
  }
  return f;
}

int worker_count(int trials) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (const char* env = std::getenv("PORODYN_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) workers = static_cast<unsigned>(parsed);
  }
  return std::max(1, std::min<int>(trials, static_cast<int>(workers)));
}

// Runs body(t) for t = 0..trials-1 on a small worker pool; bodies write only
// their own output slots, so scheduling cannot change results.
void parallel_trials(int trials, const std::function<void(int)>& body) {
  const int workers = worker_count(trials);
  if (workers == 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  auto drain = [&] {
    int t;
    while ((t = next.fetch_add(1)) < trials) {
      if (failed.load()) return;
      try {
        body(t);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(first_error);
}

PropertyResult reduce_trials(std::string name, const std::vector<double>& slacks,
                             const std::vector<bool>& failed,
                             const std::vector<std::uint64_t>& seeds) {
  PropertyResult out;
  out.name = std::move(name);
  out.trials = static_cast<int>(slacks.size());
  for (size_t t = 0; t < slacks.size(); ++t) {
    out.failures += failed[t] ? 1 : 0;
    out.worst_slack = std::min(out.worst_slack, slacks[t]);
  }
  out.seeds = seeds;
  return out;
}

Field sample_source(const Grid& g, const SourceSpec& src, double t_mid) {
  if (src.kind != SourceKind::TimeSpace) return Field::zeros(g);
  return sample(g, [&](const std::array<double, 3>& x) { return src.space_time(t_mid, x); });
}

// Σ_s τ_s ‖(f − f̃)(t_mid)‖-type accumulations along a recorded schedule;
// reduce maps a per-cell difference to its contribution before the L¹ sum.
double forcing_gap(const Trajectory& traj, const SourceSpec& f, const SourceSpec& g,
                   const std::function<double(double)>& reduce) {
  double total = 0.0;
  for (size_t s = 0; s < traj.taus.size(); ++s) {
    const double t_mid = 0.5 * (traj.times[s] + traj.times[s + 1]);
    const Field fa = sample_source(traj.grid, f, t_mid);
    const Field fb = sample_source(traj.grid, g, t_mid);
    double step = 0.0;
    for (std::int64_t i = 0; i < fa.size(); ++i) step += reduce(fa[i] - fb[i]);
    total += traj.taus[s] * step * traj.grid.cell_volume();
  }
  return total;
}

double positive_part_l1(const Field& a, const Field& b) {
  double total = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) total += std::max(a[i] - b[i], 0.0);
  return total * a.grid.cell_volume();
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

double tolerance_budget(const Grid& g, std::int64_t steps) {
  return 100.0 * kStepResidualTol * static_cast<double>(g.cells()) * static_cast<double>(steps);
}

Field random_bumps(const Grid& g, std::uint64_t seed, double amp_lo, double amp_hi) {
  std::mt19937_64 eng(splitmix64(seed));
  const BumpSum f = draw_bumps(g, eng, amp_lo, amp_hi);
  const double floor = amp_lo < 0.0 ? -0.9 : 0.0;
  Field u = sample(g, [&](const std::array<double, 3>& x) {
    return std::clamp(f(x), floor, 0.9);
  });
  return u;
}

SourceSpec random_forcing(const Grid& g, std::uint64_t seed, bool nonnegative) {
  std::mt19937_64 eng(splitmix64(seed ^ 0x5851f42d4c957f2dull));
  BumpSum f = draw_bumps(g, eng, nonnegative ? 0.1 : -1.0, 1.0);
  const Field probe = sample(g, [&](const std::array<double, 3>& x) { return f(x); });
  const double l1 = norm_lp(probe, 1.0);
  if (l1 > 1.0)
    for (Bump& b : f.bumps) b.amp /= l1;
  return SourceSpec::time_space(
      [f](double, const std::array<double, 3>& x) { return f(x); });
}

PropertyResult check_contraction(const BatchSpec& batch) {
  std::vector<double> slacks(static_cast<size_t>(batch.trials), 0.0);
  std::vector<bool> failed(static_cast<size_t>(batch.trials), false);
  std::vector<std::uint64_t> seeds(static_cast<size_t>(batch.trials), 0);
  parallel_trials(batch.trials, [&](int t) {
    const std::uint64_t s = trial_seed(batch.seed, t);
    seeds[static_cast<size_t>(t)] = s;
    const Field u0 = random_bumps(batch.grid, s, -0.9, 0.9);
    const Field v0 = random_bumps(batch.grid, splitmix64(s), -0.9, 0.9);
    const SourceSpec f =
        batch.with_forcing ? random_forcing(batch.grid, s, false) : SourceSpec::none();
    const SourceSpec g =
        batch.with_forcing ? random_forcing(batch.grid, splitmix64(s), false) : SourceSpec::none();
    const Trajectory a = solve_cauchy(batch.model, u0, f, batch.T, batch.eps);
    const Trajectory b = solve_cauchy(batch.model, v0, g, batch.T, batch.eps);
    const double lhs = ctl1_distance(a, b);
    const double rhs = norm_l1_diff(u0, v0) +
                       forcing_gap(a, f, g, [](double d) { return std::abs(d); });
    const double slack = rhs - lhs;
    slacks[static_cast<size_t>(t)] = slack;
    failed[static_cast<size_t>(t)] =
        slack < -tolerance_budget(batch.grid, static_cast<std::int64_t>(a.taus.size()));
  });
  return reduce_trials("contraction", slacks, failed, seeds);
}

PropertyResult check_comparison(const BatchSpec& batch) {
  std::vector<double> slacks(static_cast<size_t>(batch.trials), 0.0);
  std::vector<bool> failed(static_cast<size_t>(batch.trials), false);
  std::vector<std::uint64_t> seeds(static_cast<size_t>(batch.trials), 0);
  parallel_trials(batch.trials, [&](int t) {
    const std::uint64_t s = trial_seed(batch.seed, t);
    seeds[static_cast<size_t>(t)] = s;
    const Field u0 = random_bumps(batch.grid, s, -0.9, 0.9);
    const Field v0 = random_bumps(batch.grid, splitmix64(s), -0.9, 0.9);
    const SourceSpec f =
        batch.with_forcing ? random_forcing(batch.grid, s, false) : SourceSpec::none();
    const SourceSpec g =
        batch.with_forcing ? random_forcing(batch.grid, splitmix64(s), false) : SourceSpec::none();
    const Trajectory a = solve_cauchy(batch.model, u0, f, batch.T, batch.eps);
    const Trajectory b = solve_cauchy(batch.model, v0, g, batch.T, batch.eps);

    // positive-part inequality at every recorded time, both argument orders
    auto positive_gap = [](double d) { return std::max(d, 0.0); };
    double slack = HUGE_VAL;
    for (int order = 0; order < 2; ++order) {
      const Trajectory& lo = order == 0 ? a : b;
      const Trajectory& hi = order == 0 ? b : a;
      const SourceSpec& flo = order == 0 ? f : g;
      const SourceSpec& fhi = order == 0 ? g : f;
      double rhs = positive_part_l1(lo.states[0], hi.states[0]);
      size_t step = 0;
      for (size_t n = 1; n < lo.states.size(); ++n) {
        const double t_mid = 0.5 * (lo.times[n - 1] + lo.times[n]);
        const Field fa = sample_source(lo.grid, flo, t_mid);
        const Field fb = sample_source(lo.grid, fhi, t_mid);
        double gap = 0.0;
        for (std::int64_t i = 0; i < fa.size(); ++i) gap += std::max(fa[i] - fb[i], 0.0);
        rhs += lo.taus[step++] * gap * lo.grid.cell_volume();
        slack = std::min(slack, rhs - positive_part_l1(lo.states[n], hi.states[n]));
      }
    }

    // ordered special case: cellwise envelopes evolve in order
    Field lo0(batch.grid), hi0(batch.grid);
    for (std::int64_t i = 0; i < u0.size(); ++i) {
      lo0[i] = std::min(u0[i], v0[i]);
      hi0[i] = std::max(u0[i], v0[i]);
    }
    SourceSpec flo = SourceSpec::none();
    SourceSpec fhi = SourceSpec::none();
    if (batch.with_forcing) {
      const auto fa = f.space_time;
      const auto fb = g.space_time;
      flo = SourceSpec::time_space([fa, fb](double tt, const std::array<double, 3>& x) {
        return std::min(fa(tt, x), fb(tt, x));
      });
      fhi = SourceSpec::time_space([fa, fb](double tt, const std::array<double, 3>& x) {
        return std::max(fa(tt, x), fb(tt, x));
      });
    }
    const Trajectory lo = solve_cauchy(batch.model, lo0, flo, batch.T, batch.eps);
    const Trajectory hi = solve_cauchy(batch.model, hi0, fhi, batch.T, batch.eps);
    for (size_t n = 0; n < lo.states.size(); ++n)
      slack = std::min(slack, -positive_part_l1(lo.states[n], hi.states[n]));

    slacks[static_cast<size_t>(t)] = slack;
    failed[static_cast<size_t>(t)] =
        slack < -tolerance_budget(batch.grid, static_cast<std::int64_t>(a.taus.size()));
  });
  return reduce_trials("comparison", slacks, failed, seeds);
}

PropertyResult check_positivity_and_range(const BatchSpec& batch) {
  constexpr double kPositivityBudget = 1e-10;
  constexpr double kRangeMargin = 1e-12;
  const bool bounded = std::isfinite(batch.model.lo) && std::isfinite(batch.model.hi);
  std::vector<double> slacks(static_cast<size_t>(batch.trials), 0.0);
  std::vector<bool> failed(static_cast<size_t>(batch.trials), false);
  std::vector<std::uint64_t> seeds(static_cast<size_t>(batch.trials), 0);
  parallel_trials(batch.trials, [&](int t) {
    const std::uint64_t s = trial_seed(batch.seed, t);
    seeds[static_cast<size_t>(t)] = s;
    const Field u0 = random_bumps(batch.grid, s, 0.0, 0.9);
    Trajectory traj;
    if (!batch.with_forcing || t % 2 == 0) {
      traj = solve_cauchy(batch.model, u0, SourceSpec::none(), batch.T, batch.eps);
    } else if (bounded) {
      std::mt19937_64 eng(splitmix64(s ^ 0xa076bc9353e0f7ull));
      const double rate = uniform(eng, 0.5, 2.0);
      const SourceSpec growth = SourceSpec::make_reaction(
          [rate](double z) { return rate * z * (1.0 - z); }, 3.0 * rate);
      traj = solve_with_reaction(batch.model, u0, growth, batch.T, batch.eps);
    } else {
      traj = solve_cauchy(batch.model, u0, random_forcing(batch.grid, s, true), batch.T,
                          batch.eps);
    }
    double low = HUGE_VAL, high = -HUGE_VAL;
    for (const Field& state : traj.states) {
      low = std::min(low, min_value(state));
      high = std::max(high, max_value(state));
    }
    double slack = low;  // nonnegativity margin
    bool bad = low < -kPositivityBudget;
    if (bounded) {
      const double margin = std::min(batch.model.hi - high, low - batch.model.lo);
      slack = std::min(slack, margin - kRangeMargin);
      bad = bad || margin <= kRangeMargin;
    }
    slacks[static_cast<size_t>(t)] = slack;
    failed[static_cast<size_t>(t)] = bad;
  });
  return reduce_trials("positivity_range", slacks, failed, seeds);
}

PropertyResult check_energy(const Trajectory& traj, const SourceSpec& src) {
  traj.validate();
  const Grid& g = traj.grid;
  const double vol = g.cell_volume();
  const double budget = 100.0 * kStepResidualTol * static_cast<double>(g.cells());
  PropertyResult out;
  out.name = "energy_dissipation";
  out.trials = static_cast<int>(traj.taus.size());
  out.worst_slack = HUGE_VAL;
  for (size_t n = 0; n + 1 < traj.states.size(); ++n) {
    const Field& ua = traj.states[n];
    const Field& ub = traj.states[n + 1];
    Field w(g);
    double entropy_a = 0.0, entropy_b = 0.0;
    for (std::int64_t i = 0; i < ub.size(); ++i) {
      entropy_a += eval_Phi(traj.model, ua[i]);
      entropy_b += eval_Phi(traj.model, ub[i]);
      w[i] = eval_phi(traj.model, ub[i]);
    }
    Field fn = Field::zeros(g);
    if (src.kind == SourceKind::TimeSpace) {
      const double t_mid = 0.5 * (traj.times[n] + traj.times[n + 1]);
      fn = sample(g, [&](const std::array<double, 3>& x) { return src.space_time(t_mid, x); });
    } else if (src.kind == SourceKind::Reaction) {
      for (std::int64_t i = 0; i < fn.size(); ++i)
        fn[i] = src.reaction(0.5 * (ua[i] + ub[i]));
    }
    double pairing = 0.0;
    for (std::int64_t i = 0; i < ub.size(); ++i) pairing += fn[i] * w[i];
    const double tau = traj.taus[n];
    const double lhs = (entropy_b - entropy_a) * vol;
    const double rhs = tau * pairing * vol - tau * grad_norm_sq(w);
    const double slack = rhs - lhs;
    out.worst_slack = std::min(out.worst_slack, slack);
    if (slack < -budget) ++out.failures;
  }
  if (out.trials == 0) out.worst_slack = 0.0;
  return out;
}

PropertyResult check_chi_suite(const BatchSpec& batch) {
  constexpr double kExactTol = 1e-14;
  std::vector<double> slacks(static_cast<size_t>(batch.trials), 0.0);
  std::vector<bool> failed(static_cast<size_t>(batch.trials), false);
  std::vector<std::uint64_t> seeds(static_cast<size_t>(batch.trials), 0);
  parallel_trials(batch.trials, [&](int t) {
    const std::uint64_t s = trial_seed(batch.seed, t);
    seeds[static_cast<size_t>(t)] = s;
    const Field u0 = random_bumps(batch.grid, s, -0.9, 0.9);
    const Trajectory traj =
        solve_cauchy(batch.model, u0, SourceSpec::none(), batch.T, batch.eps);
    const Field& mid = traj.states[traj.states.size() / 2];
    const Field& last = traj.states.back();
    const double iso_err =
        std::abs(chi_distance(mid, last) - norm_l1_diff(mid, last));
    double span = 1e-6;
    span = std::max({span, std::abs(min_value(mid)), std::abs(max_value(mid)),
                     std::abs(min_value(last)), std::abs(max_value(last))});
    const Field averaged = velocity_average(
        last, [](double) { return 1.0; }, -1.05 * span, 1.05 * span, 256);
    double avg_err = 0.0;
    for (std::int64_t i = 0; i < last.size(); ++i)
      avg_err = std::max(avg_err, std::abs(averaged[i] - last[i]));
    const double slack = kExactTol - std::max(iso_err, avg_err);
    slacks[static_cast<size_t>(t)] = slack;
    failed[static_cast<size_t>(t)] = slack < 0.0;
  });
  return reduce_trials("chi_identities", slacks, failed, seeds);
}

PropertyResult check_defect_suite(const BatchSpec& batch) {
  constexpr double kRelativeSlack = 0.10;
  const PhiModel smooth = build_smooth_approx(batch.model, SmoothApproxParams{batch.approx_k});
  std::vector<double> slacks(static_cast<size_t>(batch.trials), 0.0);
  std::vector<bool> failed(static_cast<size_t>(batch.trials), false);
  std::vector<std::uint64_t> seeds(static_cast<size_t>(batch.trials), 0);
  parallel_trials(batch.trials, [&](int t) {
    const std::uint64_t s = trial_seed(batch.seed, t);
    seeds[static_cast<size_t>(t)] = s;
    const Field u0 = random_bumps(batch.grid, s, 0.0, 0.9);
    const SourceSpec src = (batch.with_forcing && t % 2 == 1)
                               ? random_forcing(batch.grid, s, true)
                               : SourceSpec::none();
    const Trajectory traj = solve_cauchy(smooth, u0, src, batch.T, batch.eps);
    const KineticSample ks = defect_measure(traj);
    double bound = norm_lp(u0, 1.0);
    bound += forcing_gap(traj, src, SourceSpec::none(),
                         [](double d) { return std::abs(d); });
    const double allowance = (1.0 + kRelativeSlack) * bound;
    const double slack =
        std::min(allowance - ks.total_mass(), allowance - ks.lambda_inf_sup());
    slacks[static_cast<size_t>(t)] = slack;
    failed[static_cast<size_t>(t)] = slack < 0.0;
  });
  return reduce_trials("defect_bound", slacks, failed, seeds);
}

PropertyResult merge_results(const std::string& name, const std::vector<PropertyResult>& parts) {
  PropertyResult out;
  out.name = name;
  out.worst_slack = HUGE_VAL;
  for (const PropertyResult& part : parts) {
    out.trials += part.trials;
    out.failures += part.failures;
    out.worst_slack = std::min(out.worst_slack, part.worst_slack);
    out.seeds.insert(out.seeds.end(), part.seeds.begin(), part.seeds.end());
  }
  if (parts.empty()) out.worst_slack = 0.0;
  return out;
}

void export_results_csv(const std::vector<PropertyResult>& results, const std::string& path) {
  std::string csv = "name,trials,failures,worst_slack,seeds\n";
  for (const PropertyResult& r : results) {
    csv += r.name;
    csv += ',';
    csv += std::to_string(r.trials);
    csv += ',';
    csv += std::to_string(r.failures);
    csv += ',';
    csv += format_double(r.worst_slack);
    csv += ',';
    for (size_t i = 0; i < r.seeds.size(); ++i) {
      if (i) csv += ';';
      csv += std::to_string(r.seeds[i]);
    }
    csv += '\n';
  }
  atomic_write_text(path, csv);
}

void export_results_junit(const std::vector<PropertyResult>& results, const std::string& path) {
  int failures = 0;
  for (const PropertyResult& r : results) failures += r.failures > 0 ? 1 : 0;
  std::string xml = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  xml += "<testsuite name=\"porodyn_properties\" tests=\"" + std::to_string(results.size()) +
         "\" failures=\"" + std::to_string(failures) + "\">\n";
  for (const PropertyResult& r : results) {
    xml += "  <testcase classname=\"porodyn.properties\" name=\"" + xml_escape(r.name) + "\">\n";
    if (r.failures > 0) {
      xml += "    <failure message=\"" + std::to_string(r.failures) + " of " +
             std::to_string(r.trials) + " trials beyond budget; worst slack " +
             xml_escape(format_double(r.worst_slack)) + "\"/>\n";
    }
    xml += "    <system-out>trials=" + std::to_string(r.trials) +
           " worst_slack=" + format_double(r.worst_slack) + " seeds=";
    for (size_t i = 0; i < r.seeds.size(); ++i) {
      if (i) xml += ';';
      xml += std::to_string(r.seeds[i]);
    }
    xml += "</system-out>\n  </testcase>\n";
  }
  xml += "</testsuite>\n";
  atomic_write_text(path, xml);
}

}  // namespace porodyn
