#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "porodyn/errors.hpp"
#include "porodyn/evolution.hpp"
#include "porodyn/grid.hpp"
#include "porodyn/harness.hpp"
#include "porodyn/phi_model.hpp"

using namespace porodyn;

namespace {

BatchSpec small_batch(int trials, std::uint64_t seed) {
  BatchSpec batch;
  batch.model = PhiModel::biofilm(1.0, 1.0);
  batch.grid = Grid{1, 64, 1.0, BC::Periodic};
  batch.T = 0.25;
  batch.eps = 1.0 / 64.0;
  batch.trials = trials;
  batch.seed = seed;
  return batch;
}

}  // namespace

TEST_SUITE("harness_generator") {
  TEST_CASE("bump fields are deterministic in the seed and respect the clamp") {
    Grid g{1, 96, 1.0, BC::Periodic};
    const Field a = random_bumps(g, 7, -0.9, 0.9);
    const Field b = random_bumps(g, 7, -0.9, 0.9);
    const Field c = random_bumps(g, 8, -0.9, 0.9);
    double max_gap = 0.0, diff_from_c = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
      max_gap = std::max(max_gap, std::abs(a[i] - b[i]));
      diff_from_c = std::max(diff_from_c, std::abs(a[i] - c[i]));
    }
    CHECK(max_gap == 0.0);
    CHECK(diff_from_c > 1e-6);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const Field w = random_bumps(g, seed, -0.9, 0.9);
      CHECK(min_value(w) >= -0.9);
      CHECK(max_value(w) <= 0.9);
      const Field pos = random_bumps(g, seed, 0.0, 0.9);
      CHECK(min_value(pos) >= 0.0);
      CHECK(max_value(pos) <= 0.9);
    }
  }

  TEST_CASE("forcing terms are normalized to unit mass on the generator grid") {
    Grid g{1, 128, 1.0, BC::Periodic};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const SourceSpec f = random_forcing(g, seed, false);
      REQUIRE(f.kind == SourceKind::TimeSpace);
      const Field probe = sample(g, [&](const std::array<double, 3>& x) {
        return f.space_time(0.37, x);
      });
      CHECK(norm_lp(probe, 1.0) <= 1.0 + 1e-12);
      const SourceSpec pos = random_forcing(g, seed, true);
      const Field probe_pos = sample(g, [&](const std::array<double, 3>& x) {
        return pos.space_time(0.0, x);
      });
      CHECK(min_value(probe_pos) >= 0.0);
      CHECK(norm_lp(probe_pos, 1.0) <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("tolerance budgets scale with cells and steps") {
    Grid g{1, 128, 1.0, BC::Periodic};
    CHECK(tolerance_budget(g, 256) == 100.0 * kStepResidualTol * 128.0 * 256.0);
    Grid plane{2, 16, 1.0, BC::Periodic};
    CHECK(tolerance_budget(plane, 10) == 100.0 * kStepResidualTol * 256.0 * 10.0);
  }
}

TEST_SUITE("harness_contraction") {
  TEST_CASE("random batches satisfy the sup-in-time estimate with margin") {
    const BatchSpec batch = small_batch(6, 42);
    const PropertyResult r = check_contraction(batch);
    CHECK(r.name == "contraction");
    CHECK(r.trials == 6);
    CHECK(r.failures == 0);
    CHECK(r.worst_slack >= 0.0);
    CHECK(r.seeds.size() == 6);
  }

  TEST_CASE("results are reproducible from the batch seed") {
    const BatchSpec batch = small_batch(4, 1234);
    const PropertyResult r1 = check_contraction(batch);
    const PropertyResult r2 = check_contraction(batch);
    CHECK(r1.worst_slack == r2.worst_slack);
    CHECK(r1.seeds == r2.seeds);
    BatchSpec other = batch;
    other.seed = 1235;
    const PropertyResult r3 = check_contraction(other);
    CHECK(r3.seeds != r1.seeds);
  }

  TEST_CASE("disjoint supports put the estimate near equality at short times") {
    Grid g{1, 128, 1.0, BC::Periodic};
    const Field u0 = sample(g, [](const std::array<double, 3>& x) {
      const double r = (x[0] + 0.6) / 0.08;
      return 0.7 * std::exp(-0.5 * r * r);
    });
    const Field v0 = sample(g, [](const std::array<double, 3>& x) {
      const double r = (x[0] - 0.6) / 0.08;
      return 0.7 * std::exp(-0.5 * r * r);
    });
    const auto model = PhiModel::biofilm(1.0, 1.0);
    const double T = 0.01;
    const Trajectory a = solve_cauchy(model, u0, SourceSpec::none(), T, 1.0 / 512);
    const Trajectory b = solve_cauchy(model, v0, SourceSpec::none(), T, 1.0 / 512);
    const double lhs = ctl1_distance(a, b);
    const double rhs = norm_l1_diff(u0, v0);
    CHECK(lhs <= rhs + tolerance_budget(g, static_cast<std::int64_t>(a.taus.size())));
    CHECK(lhs >= 0.95 * rhs);  // supports barely interact this early
  }
}

TEST_SUITE("harness_comparison") {
  TEST_CASE("positive-part estimate and ordered envelopes hold on random batches") {
    const BatchSpec batch = small_batch(4, 77);
    const PropertyResult r = check_comparison(batch);
    CHECK(r.name == "comparison");
    CHECK(r.trials == 4);
    CHECK(r.failures == 0);
    CHECK(r.worst_slack >= -tolerance_budget(batch.grid, 16));
  }

  TEST_CASE("unforced batches work too") {
    BatchSpec batch = small_batch(3, 99);
    batch.with_forcing = false;
    const PropertyResult r = check_comparison(batch);
    CHECK(r.failures == 0);
  }
}

TEST_SUITE("harness_positivity") {
  TEST_CASE("nonnegative data stays nonnegative and inside the model interval") {
    const BatchSpec batch = small_batch(6, 11);
    const PropertyResult r = check_positivity_and_range(batch);
    CHECK(r.name == "positivity_range");
    CHECK(r.trials == 6);
    CHECK(r.failures == 0);
    CHECK(r.worst_slack >= -1e-10);
  }

  TEST_CASE("unbounded models run the forced branch") {
    BatchSpec batch = small_batch(4, 13);
    batch.model = PhiModel::pme(2.0);
    const PropertyResult r = check_positivity_and_range(batch);
    CHECK(r.failures == 0);
    CHECK(r.worst_slack >= -1e-10);
  }
}

TEST_SUITE("harness_energy") {
  TEST_CASE("the zero trajectory dissipates nothing") {
    Grid g{1, 32, 1.0, BC::Periodic};
    const Trajectory tr = solve_cauchy(PhiModel::biofilm(1.0, 1.0), Field::zeros(g),
                                       SourceSpec::none(), 0.25, 1.0 / 32);
    const PropertyResult r = check_energy(tr);
    CHECK(r.trials == static_cast<int>(tr.taus.size()));
    CHECK(r.failures == 0);
    CHECK(r.worst_slack == 0.0);
  }

  TEST_CASE("unforced, forced, and reaction runs all dissipate per step") {
    Grid g{1, 64, 1.0, BC::Periodic};
    const Field u0 = random_bumps(g, 21, -0.9, 0.9);
    const auto model = PhiModel::biofilm(1.0, 2.0);

    const Trajectory plain = solve_cauchy(model, u0, SourceSpec::none(), 0.25, 1.0 / 64);
    const PropertyResult r_plain = check_energy(plain);
    CHECK(r_plain.failures == 0);

    const SourceSpec f = random_forcing(g, 22, false);
    const Trajectory forced = solve_cauchy(model, u0, f, 0.25, 1.0 / 64);
    const PropertyResult r_forced = check_energy(forced, f);
    CHECK(r_forced.failures == 0);

    const Field pos0 = random_bumps(g, 23, 0.0, 0.9);
    const SourceSpec growth =
        SourceSpec::make_reaction([](double z) { return z * (1.0 - z); }, 3.0);
    const Trajectory grown = solve_with_reaction(model, pos0, growth, 0.25, 1.0 / 64);
    const PropertyResult r_grown = check_energy(grown, growth);
    CHECK(r_grown.failures == 0);
  }

  TEST_CASE("unforced energies are nonincreasing along the trajectory") {
    Grid g{1, 32, 1.0, BC::Periodic};
    const Field u0 = random_bumps(g, 31, -0.9, 0.9);
    const auto model = PhiModel::biofilm(1.0, 1.0);
    const Trajectory tr = solve_cauchy(model, u0, SourceSpec::none(), 0.5, 1.0 / 64);
    const double budget = 100.0 * kStepResidualTol * static_cast<double>(g.cells());
    double prev = HUGE_VAL;
    for (const Field& state : tr.states) {
      double energy = 0.0;
      for (std::int64_t i = 0; i < state.size(); ++i) energy += eval_Phi(model, state[i]);
      energy *= g.cell_volume();
      CHECK(energy <= prev + budget);
      prev = energy;
    }
  }
}

TEST_SUITE("harness_kinetic_suites") {
  TEST_CASE("indicator identities hold on random trajectories") {
    const BatchSpec batch = small_batch(5, 55);
    const PropertyResult r = check_chi_suite(batch);
    CHECK(r.name == "chi_identities");
    CHECK(r.trials == 5);
    CHECK(r.failures == 0);
    CHECK(r.worst_slack >= 0.0);
  }

  TEST_CASE("measure bounds hold on smoothed nonnegative runs") {
    BatchSpec batch = small_batch(4, 66);
    batch.approx_k = 8;
    const PropertyResult r = check_defect_suite(batch);
    CHECK(r.name == "defect_bound");
    CHECK(r.trials == 4);
    CHECK(r.failures == 0);
    CHECK(r.worst_slack > 0.0);
  }
}

TEST_SUITE("harness_results") {
  TEST_CASE("merging accumulates counts and keeps the most negative slack") {
    PropertyResult a{"x", 5, 1, -0.25, {1, 2}};
    PropertyResult b{"x", 3, 0, 0.5, {9}};
    const PropertyResult merged = merge_results("combined", {a, b});
    CHECK(merged.name == "combined");
    CHECK(merged.trials == 8);
    CHECK(merged.failures == 1);
    CHECK(merged.worst_slack == -0.25);
    CHECK(merged.seeds == std::vector<std::uint64_t>{1, 2, 9});
  }

  TEST_CASE("CSV export round-trips header, counts and slack") {
    const std::string dir = "porodyn_test_harness_export";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    PropertyResult ok{"contraction", 25, 0, 3.25e-3, {11, 22, 33}};
    PropertyResult bad{"comparison", 10, 2, -4.5e-7, {44}};
    export_results_csv({ok, bad}, dir + "/results.csv");
    std::ifstream csv(dir + "/results.csv");
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "name,trials,failures,worst_slack,seeds");
    std::getline(csv, line);
    std::stringstream row(line);
    std::string tok;
    std::getline(row, tok, ',');
    CHECK(tok == "contraction");
    std::getline(row, tok, ',');
    CHECK(tok == "25");
    std::getline(row, tok, ',');
    CHECK(tok == "0");
    std::getline(row, tok, ',');
    CHECK(std::stod(tok) == doctest::Approx(3.25e-3).epsilon(1e-15));
    std::getline(row, tok, ',');
    CHECK(tok == "11;22;33");
    std::getline(csv, line);
    CHECK(line.find("comparison,10,2,") == 0);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("JUnit export marks failing properties with a failure node") {
    const std::string dir = "porodyn_test_harness_junit";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    PropertyResult ok{"contraction", 25, 0, 3.25e-3, {11}};
    PropertyResult bad{"comparison", 10, 2, -4.5e-7, {44}};
    export_results_junit({ok, bad}, dir + "/results.xml");
    std::ifstream xml_in(dir + "/results.xml");
    REQUIRE(xml_in.good());
    std::stringstream buf;
    buf << xml_in.rdbuf();
    const std::string xml = buf.str();
    CHECK(xml.find("<?xml version=\"1.0\"") == 0);
    CHECK(xml.find("tests=\"2\"") != std::string::npos);
    CHECK(xml.find("failures=\"1\"") != std::string::npos);
    CHECK(xml.find("name=\"contraction\"") != std::string::npos);
    const auto ok_pos = xml.find("name=\"contraction\"");
    const auto bad_pos = xml.find("name=\"comparison\"");
    const auto fail_pos = xml.find("<failure");
    REQUIRE(fail_pos != std::string::npos);
    CHECK(fail_pos > bad_pos);
    CHECK(xml.find("<failure", ok_pos) == fail_pos);  // only the failing case has one
    CHECK(xml.find("</testsuite>") != std::string::npos);
    std::filesystem::remove_all(dir);
  }
}
