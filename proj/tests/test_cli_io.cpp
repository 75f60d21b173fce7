#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "porodyn/commands.hpp"
#include "porodyn/config.hpp"
#include "porodyn/errors.hpp"
#include "porodyn/snapshot.hpp"
#include "porodyn/toml.hpp"

using namespace porodyn;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream row(line);
  std::string tok;
  while (std::getline(row, tok, ',')) cells.push_back(tok);
  return cells;
}

// A problem small enough that every command finishes in milliseconds.
std::string tiny_config(const std::string& extra = "") {
  return R"([model]
kind = "linear"

[grid]
n = 32
L = 1.0

[time]
T = 0.05
eps = 0.00625

[initial]
kind = "bumps"
amp_lo = -0.5
amp_hi = 0.5

[verify]
trials = 3
)" + extra;
}

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path(name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

}  // namespace

TEST_SUITE("cli_toml") {
  TEST_CASE("scalars, sections, comments and arrays parse") {
    const TomlDocument doc = parse_toml(R"(# header comment
title = "porous # run"   # trailing comment
count = 42
scale = -1.5e2
flag = true

[alpha]
name = "x\n\"y\""
values = [1, 2, 3,]
mixed = [0.5, 2.0]
)");
    CHECK(doc.find("title")->str == "porous # run");
    CHECK(doc.find("count")->integer == 42);
    CHECK(doc.find("count")->as_number() == 42.0);
    CHECK(doc.find("scale")->number == -150.0);
    CHECK(doc.find("flag")->boolean == true);
    CHECK(doc.find("alpha.name")->str == "x\n\"y\"");
    REQUIRE(doc.find("alpha.values")->items.size() == 3);
    CHECK(doc.find("alpha.values")->items[2].integer == 3);
    CHECK(doc.find("alpha.mixed")->items[0].as_number() == 0.5);
    CHECK(doc.order.front() == "title");
    CHECK(doc.order.back() == "alpha.mixed");
    CHECK(doc.find("absent") == nullptr);
  }

  TEST_CASE("syntax errors carry the offending line") {
    auto line_of = [](const std::string& text) {
      try {
        parse_toml(text);
      } catch (const ParseError& e) {
        return e.line;
      }
      return -1;
    };
    CHECK(line_of("a = 1\nb =") == 2);
    CHECK(line_of("a = 1\na = 2") == 2);
    CHECK(line_of("[s]\nx = 1\n[s]") == 3);
    CHECK(line_of("a = \"unterminated") == 1);
    CHECK(line_of("a = [1, [2]]") == 1);
    CHECK(line_of("a = zebra") == 1);
    CHECK(line_of("just text") == 1);
    CHECK(line_of("a.b = 1") == 1);
    CHECK(line_of("a = [1,, 2]") == 1);
    CHECK(line_of("a = \"bad \\q escape\"") == 1);
    CHECK_THROWS_AS(parse_toml("x = 1\ny = ["), ParseError);
    CHECK_THROWS_AS((void)parse_toml("s = \"text\"").find("s")->as_number(), ParseError);
    CHECK_THROWS_AS(parse_toml_file("porodyn_no_such_file.toml"), IOError);
  }
}

TEST_SUITE("cli_config") {
  TEST_CASE("a minimal file yields the documented defaults") {
    const RunConfig cfg = config_from_toml(parse_toml("[model]\nkind = \"biofilm\"\n"));
    CHECK(cfg.model.a == 1.0);
    CHECK(cfg.model.b == 1.0);
    CHECK(cfg.grid.n == 128);
    CHECK(cfg.grid.L == 1.0);
    CHECK(cfg.grid.bc == "periodic");
    CHECK(cfg.time.T == 0.5);
    CHECK(cfg.time.eps == 1.0 / 256.0);
    CHECK(cfg.source.kind == "none");
    CHECK(cfg.initial.kind == "zeros");
    CHECK(cfg.outputs.directory == "out");
    CHECK(cfg.verify.trials == 25);
    CHECK(cfg.regularity.levels == std::vector<int>{64, 128, 256});
    CHECK(cfg.sweep.empty());
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("constraint violations are aggregated with their hypotheses") {
    const std::string text = R"([model]
kind = "biofilm"
a = 0.5
b = -2.0

[grid]
n = 100

[time]
eps = 0.0

[extra]
k = 1
)";
    try {
      config_from_toml(parse_toml(text));
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      auto cites = [&](const std::string& needle) {
        return std::any_of(e.violations.begin(), e.violations.end(),
                           [&](const std::string& v) { return v.find(needle) != std::string::npos; });
      };
      CHECK(e.violations.size() == 5);
      CHECK(cites("a ≥ 1"));
      CHECK(cites("b > 0"));
      CHECK(cites("n must be a power of two"));
      CHECK(cites("ε > 0"));
      CHECK(cites("unknown key 'extra.k'"));
    }
  }

  TEST_CASE("type mismatches are reported, not fatal mid-parse") {
    try {
      config_from_toml(parse_toml("seed = -4\n\n[model]\nkind = \"pme\"\nm = \"big\"\n"));
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      REQUIRE(e.violations.size() == 2);
      CHECK(e.violations[0].find("seed must be a nonnegative integer") != std::string::npos);
      CHECK(e.violations[1].find("model.m must be a number") != std::string::npos);
    }
  }

  TEST_CASE("pme and barenblatt constraints") {
    CHECK_THROWS_AS(config_from_toml(parse_toml("[model]\nkind = \"pme\"\nm = 1.0\n")),
                    ValidationError);
    CHECK_THROWS_AS(
        config_from_toml(parse_toml("[model]\nkind = \"biofilm\"\n\n[initial]\nkind = "
                                    "\"barenblatt\"\n")),
        ValidationError);
    CHECK_NOTHROW(config_from_toml(
        parse_toml("[model]\nkind = \"pme\"\nm = 2.0\n\n[initial]\nkind = \"barenblatt\"\n")));
  }

  TEST_CASE("factories build what the file describes") {
    RunConfig cfg = config_from_toml(parse_toml(R"([model]
kind = "pme"
m = 2.0

[grid]
n = 64
L = 8.0
bc = "zeroflux"

[initial]
kind = "barenblatt"
t0 = 1.0

[source]
kind = "logistic"
rate = 2.0
)"));
    CHECK(cfg.build_model().kind == PhiKind::PME);
    const Grid g = cfg.build_grid();
    CHECK(g.bc == BC::ZeroFlux);
    CHECK(g.n == 64);
    CHECK(g.L == 8.0);

    const Field u0 = cfg.build_initial(g);
    // Self-similar profile at t0 = 1: height 1 at the origin, support |x| < sqrt(12).
    double peak = 0.0;
    for (std::int64_t i = 0; i < u0.size(); ++i) peak = std::max(peak, u0[i]);
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-2));
    const double h = g.h();
    for (std::int64_t i = 0; i < u0.size(); ++i) {
      const double x = -8.0 + (i + 0.5) * h;
      if (std::abs(x) > std::sqrt(12.0) + h) CHECK(u0[i] == 0.0);
    }

    const SourceSpec src = cfg.build_source(g);
    REQUIRE(src.kind == SourceKind::Reaction);
    CHECK(src.reaction(0.5) == doctest::Approx(2.0 * 0.25).epsilon(1e-15));
    CHECK(src.lipschitz == doctest::Approx(6.0).epsilon(1e-15));

    cfg.model.kind = "linear";
    cfg.initial.kind = "zeros";
    CHECK(cfg.build_model().kind == PhiKind::Tabulated);
    CHECK(eval_phi(cfg.build_model(), 0.25) == doctest::Approx(0.25).epsilon(1e-12));
    const Field zeros = cfg.build_initial(g);
    for (std::int64_t i = 0; i < zeros.size(); ++i) CHECK(zeros[i] == 0.0);

    cfg.model.kind = "biofilm";
    cfg.model.approx_k = 4;
    CHECK(cfg.build_model().kind == PhiKind::Tabulated);
  }

  TEST_CASE("sweep axes keep file order and demand integer values where needed") {
    const RunConfig cfg = config_from_toml(parse_toml(
        "[model]\nkind = \"biofilm\"\n\n[sweep]\nn = [32, 64]\nb = [1.0, 2.0, 3.0]\n"));
    REQUIRE(cfg.sweep.size() == 2);
    CHECK(cfg.sweep[0].name == "n");
    CHECK(cfg.sweep[0].values == std::vector<double>{32.0, 64.0});
    CHECK(cfg.sweep[1].name == "b");
    CHECK_THROWS_AS(
        config_from_toml(parse_toml("[sweep]\nn = [32.5]\n")), ValidationError);
    CHECK_THROWS_AS(
        config_from_toml(parse_toml("[sweep]\nq = [1.0]\n")), ValidationError);
  }

  TEST_CASE("every shipped preset parses, validates and builds") {
    for (const std::string& name : preset_names()) {
      CAPTURE(name);
      const RunConfig cfg = config_from_toml(parse_toml(preset_config(name)));
      CHECK_NOTHROW(cfg.build_model());
      CHECK_NOTHROW(cfg.build_initial(cfg.build_grid()));
      CHECK(cfg.outputs.directory.find(name) != std::string::npos);
    }
    CHECK_THROWS_AS(preset_config("unknown"), ConfigError);
  }

  TEST_CASE("parse_config reads from disk") {
    TempDir dir("porodyn_test_cli_parse");
    atomic_write_text(dir.file("run.toml"), tiny_config());
    const RunConfig cfg = parse_config(dir.file("run.toml"));
    CHECK(cfg.grid.n == 32);
    CHECK(cfg.verify.trials == 3);
  }
}

TEST_SUITE("cli_commands") {
  TEST_CASE("solving the zero problem writes an all-zero manifest") {
    TempDir dir("porodyn_test_cli_zero");
    RunConfig cfg = config_from_toml(parse_toml(tiny_config()));
    cfg.initial.kind = "zeros";
    cfg.outputs.directory = dir.file("run");
    CHECK(cmd_solve(cfg) == 0);

    std::ifstream csv(dir.file("run") + "/manifest.csv");
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,mass,min,max,l1,l2,energy,dissipation");
    int rows = 0;
    double prev_t = -1.0;
    while (std::getline(csv, line)) {
      const std::vector<std::string> cells = split_csv_row(line);
      REQUIRE(cells.size() == 8);
      CHECK(std::stod(cells[0]) > prev_t);
      prev_t = std::stod(cells[0]);
      for (std::size_t c = 1; c < cells.size(); ++c) CHECK(std::stod(cells[c]) == 0.0);
      ++rows;
    }
    CHECK(rows >= 2);

    const std::string summary = slurp(dir.file("run") + "/run.json");
    CHECK(summary.find("\"final_mass\": 0.0") != std::string::npos);
    CHECK(summary.find("\"kind\": \"linear\"") != std::string::npos);
  }

  TEST_CASE("snapshot stride controls which states are written") {
    TempDir dir("porodyn_test_cli_stride");
    RunConfig cfg = config_from_toml(parse_toml(tiny_config()));
    cfg.outputs.directory = dir.file("none");
    CHECK(cmd_solve(cfg) == 0);
    int binaries = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir.file("none"))) {
      if (entry.path().extension() == ".f64") ++binaries;
    }
    CHECK(binaries == 0);

    cfg.outputs.snapshot_stride = 4;
    cfg.outputs.directory = dir.file("strided");
    CHECK(cmd_solve(cfg) == 0);
    CHECK(std::filesystem::exists(dir.file("strided") + "/state_000000.f64"));
    CHECK(std::filesystem::exists(dir.file("strided") + "/state_000004.f64"));
    CHECK(!std::filesystem::exists(dir.file("strided") + "/state_000001.f64"));
  }

  TEST_CASE("verify re-runs are byte-identical under a fixed seed") {
    TempDir dir("porodyn_test_cli_verify");
    RunConfig cfg = config_from_toml(parse_toml(tiny_config()));
    cfg.seed = 42;
    cfg.outputs.directory = dir.file("v1");
    CHECK(cmd_verify(cfg, "contraction") == 0);
    cfg.outputs.directory = dir.file("v2");
    CHECK(cmd_verify(cfg, "contraction") == 0);
    CHECK(slurp(dir.file("v1") + "/results.csv") == slurp(dir.file("v2") + "/results.csv"));
    CHECK(slurp(dir.file("v1") + "/results.xml") == slurp(dir.file("v2") + "/results.xml"));
    const std::string csv = slurp(dir.file("v1") + "/results.csv");
    CHECK(csv.find("contraction,3,0,") != std::string::npos);
    CHECK_THROWS_AS(cmd_verify(cfg, "everything"), ConfigError);
  }

  TEST_CASE("the energy suite covers unforced and forced runs") {
    TempDir dir("porodyn_test_cli_energy");
    RunConfig cfg = config_from_toml(parse_toml(tiny_config()));
    cfg.outputs.directory = dir.file("e");
    CHECK(cmd_verify(cfg, "energy") == 0);
    const std::string csv = slurp(dir.file("e") + "/results.csv");
    CHECK(csv.find("energy,") != std::string::npos);
  }

  TEST_CASE("the refinement scan reports the predicted exponents") {
    TempDir dir("porodyn_test_cli_reg");
    RunConfig cfg = config_from_toml(parse_toml(R"([model]
kind = "pme"
m = 2.0

[grid]
n = 64
L = 8.0

[time]
T = 0.25
eps = 0.0078125

[initial]
kind = "barenblatt"

[regularity]
levels = [32, 64]
sigma_x = [0.5]
)"));
    cfg.outputs.directory = dir.file("r");
    CHECK(cmd_regularity(cfg) == 0);
    const std::string json = slurp(dir.file("r") + "/report.json");
    CHECK(json.find("\"kappa_x\": 1") != std::string::npos);
    CHECK(json.find("\"kappa_t\": 0") != std::string::npos);
    CHECK(std::filesystem::exists(dir.file("r") + "/report.csv"));
  }

  TEST_CASE("the measure command smooths analytic fluxes and exports the sample") {
    TempDir dir("porodyn_test_cli_kin");
    RunConfig cfg = config_from_toml(parse_toml(tiny_config()));
    cfg.model.kind = "biofilm";  // analytic: the command must smooth it itself
    cfg.initial.amp_lo = 0.0;
    cfg.outputs.directory = dir.file("k");
    CHECK(cmd_kinetic(cfg) == 0);
    CHECK(std::filesystem::exists(dir.file("k") + "/sample.csv"));
    CHECK(std::filesystem::exists(dir.file("k") + "/sample.json"));
    CHECK(std::filesystem::exists(dir.file("k") + "/manifest.csv"));
  }

  TEST_CASE("sweeps run the cartesian grid into exclusive subdirectories") {
    TempDir dir("porodyn_test_cli_sweep");
    RunConfig cfg = config_from_toml(parse_toml(tiny_config()));
    cfg.outputs.directory = dir.file("s");
    std::vector<SweepAxis> axes = {{"n", {16, 32}}, {"eps", {0.0125, 0.00625}}};
    CHECK(cmd_sweep(cfg, axes) == 0);
    for (int c = 0; c < 4; ++c) {
      char sub[32];
      std::snprintf(sub, sizeof(sub), "/sweep_%04d/manifest.csv", c);
      CHECK(std::filesystem::exists(dir.file("s") + sub));
    }
    const std::string index = slurp(dir.file("s") + "/sweep_index.csv");
    CHECK(index.find("run,n,eps,directory") == 0);
    CHECK(index.find("3,32,0.00625") != std::string::npos);

    CHECK_THROWS_AS(cmd_sweep(cfg, {}), ConfigError);
    // A swept value outside the admissible range surfaces as a validation error.
    CHECK_THROWS_AS(cmd_sweep(cfg, {{"n", {100}}}), ValidationError);
  }
}
