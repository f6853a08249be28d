#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dno/experiments.hpp"
#include "oracles.hpp"

using namespace dno;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig base(const std::string& command) {
  ExperimentConfig c;
  c.command = command;
  c.M = 32;
  c.order = 4;
  return c;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "dno_test_experiments" / name;
  fs::remove_all(p);
  return p;
}

int cli(const std::string& args) {
  std::string cmd = std::string(DNO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("configuration parsing rejects unknown keys and wrong types") {
  nlohmann::json doc = {{"command", "bim-solve"}, {"grid", 64}, {"bits", 80}, {"depth", 1.5}, {"cutoff", 7}};
  ExperimentConfig c = ExperimentConfig::from_json(doc);
  CHECK(c.M == 64);
  CHECK(c.bits == 80);
  CHECK(c.depth == "1.5");
  CHECK(c.cutoffs == std::vector<int>{7});
  CHECK(c.source == doc);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"grids", 64}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"grid", "many"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("validation catches invalid values and combinations") {
  CHECK_NOTHROW(base("bim-solve").validate());
  auto bad = [](auto edit) {
    ExperimentConfig c = base("bim-solve");
    edit(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](ExperimentConfig& c) { c.command = "nope"; });
  bad([](ExperimentConfig& c) { c.M = 31; });
  bad([](ExperimentConfig& c) { c.bits = 10; });
  bad([](ExperimentConfig& c) { c.depth = "-1"; });
  bad([](ExperimentConfig& c) { c.depth = "deep"; });
  bad([](ExperimentConfig& c) { c.command = "tfe-run"; });  // infinite depth
  bad([](ExperimentConfig& c) {
    c.command = "compare";
    c.methods = {"bim"};
  });
  bad([](ExperimentConfig& c) {
    c.command = "compare";
    c.methods = {"bim", "fmm"};
  });
  bad([](ExperimentConfig& c) {
    c.command = "afm-sweep";
    c.K = 64;
  });
  bad([](ExperimentConfig& c) {
    c.command = "compare";
    c.methods = {"bim", "tfe"};
  });
}

TEST_CASE("command-dependent mode defaults") {
  ExperimentConfig c = base("cs-growth");
  c.M = 96;
  CHECK(c.modes() == 48);
  c.command = "afm-sweep";
  CHECK(c.modes() == 64);
  c.K = 20;
  CHECK(c.modes() == 20);
}

TEST_CASE("problem specs") {
  PrecisionCtx ctx(106);
  ExperimentConfig c = base("bim-solve");
  c.profile = "flat";
  c.data = "cos:k=2";
  c.depth = "1";
  Problem p = make_problem(c, ctx);
  REQUIRE(p.neumann);
  MpReal mult = tanh(MpReal(ctx, 2)) * 2L;
  for (int j = 0; j < c.M; ++j) CHECK(abs((*p.neumann)[j] - p.dirichlet.value(j) * mult) < oracle::ulp_scale(ctx, 4));

  c.profile = "polepair:eps=0.25,offset=-1";
  c.data = "";
  c.depth = "1";
  CHECK_THROWS_AS(make_problem(c, ctx), ConfigError);  // reaches below the bottom
  c.depth = "inf";
  p = make_problem(c, ctx);
  CHECK(p.profile.eta_max() == MpReal::parse(ctx, "-0.75"));
  CHECK(p.neumann);

  c.profile = "example:analytic,eps=0.1";
  c.data = "random:kmax=3,seed=2";
  p = make_problem(c, ctx);
  CHECK_FALSE(p.neumann);
  CHECK(abs(p.dirichlet.mode(5)) < oracle::ulp_scale(ctx, 8));

  for (const char* bad : {"wave", "example", "example:choppy", "polepair:eps=x", "polepair:width=1", "random:seed=1.5",
                          "file:/nonexistent/surface.json"}) {
    CAPTURE(bad);
    c.profile = bad;
    c.data = "cos";
    CHECK_THROWS_AS(make_problem(c, ctx), ConfigError);
  }
  c.profile = "flat";
  for (const char* bad : {"exact", "file", "sine", "pole:d=-1"}) {
    CAPTURE(bad);
    c.data = bad;
    CHECK_THROWS_AS(make_problem(c, ctx), ConfigError);
  }
}

TEST_CASE("reference falls back to BIM at doubled precision") {
  PrecisionCtx ctx(53);
  ExperimentConfig c = base("compare");
  c.profile = "example:bandlimited,eps=0.1";
  Problem p = make_problem(c, ctx);
  std::string how;
  std::vector<MpReal> ref = reference_neumann(c, p, how);
  CHECK(how == "bim at 106 bits");
  CHECK(ref.size() == 32u);
  CHECK(ref[0].ctx().bits() == 53);
}

TEST_CASE("compare on a flat surface agrees with the G_0 multiplier") {
  ExperimentConfig c = base("compare");
  c.profile = "flat";
  c.depth = "1";
  c.data = "cos:k=3";
  c.M = 64;
  c.K = 16;
  c.N = 16;
  c.order = 1;
  c.methods = {"cs", "afm", "afmstar", "afm-qr", "bim", "tfe"};
  RunReport r = run_experiment(c);
  REQUIRE(r.tables.size() == 2);
  const CsvTable& m = r.tables[0];
  CHECK(m.rows.size() == 6);
  PrecisionCtx ctx(53);
  for (const auto& row : m.rows) {
    CAPTURE(row[0]);
    CHECK(MpReal::parse(ctx, row[1]) < MpReal(ctx, 1e-13));
  }
  CHECK(r.tables[1].rows.size() == 15);
  CHECK(r.meta["reference"] == "exact");
}

TEST_CASE("reports are deterministic and carry metadata") {
  ExperimentConfig c = base("cs-apply");
  c.profile = "polepair:eps=0.3";
  c.bits = 106;
  c.order = 12;
  fs::path a = scratch("a"), b = scratch("b");
  c.out = a.string();
  auto files = write_report(run_experiment(c), c);
  c.out = b.string();
  write_report(run_experiment(c), c);
  REQUIRE(files.size() == 2);
  for (const auto& f : files) {
    CAPTURE(f);
    CHECK(slurp(f) == slurp(b / f.filename()));
    nlohmann::json meta = nlohmann::json::parse(slurp(fs::path(f).replace_extension(".json")));
    CHECK(meta["bits"] == 106);
    CHECK(meta.contains("wall_seconds"));
    CHECK(meta["versions"].contains("mpfr"));
    CHECK(meta["resolved"]["command"] == "cs-apply");
  }
  std::string errors = slurp(a / "cs-apply_errors.csv");
  CHECK(errors.rfind("n,rms_error\n0,", 0) == 0);
}

TEST_CASE("demo-divergence summary") {
  ExperimentConfig c = base("demo-divergence");
  c.M = 64;
  c.cutoffs = {8, 16, 32};
  RunReport r = run_experiment(c);
  const CsvTable& s = r.tables[1];
  REQUIRE(s.rows.size() == 3);
  PrecisionCtx ctx(53);
  for (size_t i = 1; i < 3; ++i) {
    CHECK(MpReal::parse(ctx, s.rows[i][1]) < MpReal::parse(ctx, s.rows[i - 1][1]));
    CHECK(MpReal::parse(ctx, s.rows[i][2]) > MpReal::parse(ctx, s.rows[i - 1][2]));
  }
}

TEST_CASE("command-line exit codes") {
  fs::path out = scratch("cli");
  std::string o = " -o " + out.string();
  CHECK(cli("bim-solve -M 16" + o) == 0);
  CHECK(fs::exists(out / "bim-solve_solution.csv"));
  CHECK(fs::exists(out / "bim-solve_solution.json"));
  CHECK(cli("") == 2);
  CHECK(cli("bim-solve --grid seven") == 2);
  CHECK(cli("tfe-run" + o) == 2);
  CHECK(cli("bim-solve --profile nope" + o) == 2);
  // 24 bits cannot resolve the outer modes of G_n for this profile.
  CHECK(cli("cs-growth -M 64 --order 12 --bits 24 --profile example:analytic" + o) == 3);

  fs::create_directories(out);
  std::ofstream(out / "cfg.json") << R"({"command": "bim-solve", "grid": 16, "depth": "2"})";
  CHECK(cli("bim-solve --config " + (out / "cfg.json").string() + o) == 0);
  nlohmann::json meta = nlohmann::json::parse(slurp(out / "bim-solve_solution.json"));
  CHECK(meta["config"]["depth"] == "2");
  CHECK(cli("bim-solve --config " + (out / "cfg.json").string() + " --grid 20" + o) == 0);
  meta = nlohmann::json::parse(slurp(out / "bim-solve_solution.json"));
  CHECK(meta["resolved"]["grid"] == 20);
  CHECK(cli("afm-sweep --config " + (out / "cfg.json").string() + o) == 2);
}
