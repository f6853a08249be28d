// Experiment driver: one subcommand per study, JSON config plus flag overrides, CSV/JSON output.
// Exit codes: 0 success, 2 configuration error, 3 numerical diagnostic failure.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dno/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  int bits = 0, grid = 0, modes = 0, order = -1, chebyshev = 0;
  std::vector<int> cutoff, columns;
  std::string depth, profile, data, out;
  std::vector<std::string> methods;
  bool filter = false, iterative = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--bits", f.bits, "working precision in bits");
  sub->add_option("--grid,-M", f.grid, "number of collocation points M");
  sub->add_option("--modes,-K", f.modes, "number of modes K");
  sub->add_option("--order,-n", f.order, "expansion order");
  sub->add_option("--chebyshev,-N", f.chebyshev, "Chebyshev degree for TFE");
  sub->add_option("--cutoff", f.cutoff, "cutoff(s); demo-divergence reads them as truncations");
  sub->add_option("--columns", f.columns, "CS columns j");
  sub->add_option("--depth", f.depth, "'inf' or a positive depth h");
  sub->add_option("--profile", f.profile, "profile spec, e.g. polepair:eps=0.5,offset=-1");
  sub->add_option("--data", f.data, "Dirichlet data spec, e.g. exact, pole:d=1, cos:k=2");
  sub->add_option("--methods", f.methods, "compare: cs afm afmstar afm-qr bim tfe");
  sub->add_option("--out,-o", f.out, "output directory");
  sub->add_flag("--filter", f.filter, "apply the 2/3 dealiasing filter in CS");
  sub->add_flag("--iterative", f.iterative, "solve the BIM system with GMRES");
}

dno::ExperimentConfig resolve(const std::string& command, const Flags& f, const CLI::App* sub) {
  dno::ExperimentConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw dno::ConfigError(f.config + ": " + e.what());
    }
    c = dno::ExperimentConfig::from_json(doc);
    if (!c.command.empty() && c.command != command)
      throw dno::ConfigError("config is for '" + c.command + "' but '" + command + "' was requested");
  }
  c.command = command;
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  if (given("--bits")) c.bits = f.bits;
  if (given("--grid")) c.M = f.grid;
  if (given("--modes")) c.K = f.modes;
  if (given("--order")) c.order = f.order;
  if (given("--chebyshev")) c.N = f.chebyshev;
  if (given("--cutoff")) c.cutoffs = f.cutoff;
  if (given("--columns")) c.columns = f.columns;
  if (given("--depth")) c.depth = f.depth;
  if (given("--profile")) c.profile = f.profile;
  if (given("--data")) c.data = f.data;
  if (given("--methods")) c.methods = f.methods;
  if (given("--out")) c.out = f.out;
  if (given("--filter")) c.filter = true;
  if (given("--iterative")) c.iterative = true;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-Neumann operator experiments"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"cs-growth", "norms of the CS operators A_n and G_n"},
      {"cs-columns", "individual columns of A_n and G_n"},
      {"cs-sym", "self-adjointness defect r_n of G_n"},
      {"cs-apply", "partial-sum errors of the CS series"},
      {"afm-sweep", "AFM and AFM* errors against the pseudo-inverse cutoff"},
      {"afm-transform", "orthogonalized AFM coefficients against Fourier coefficients"},
      {"bim-solve", "boundary-integral solution"},
      {"tfe-run", "transformed field expansion terms and norms"},
      {"demo-divergence", "truncated reconstructions of a divergent series"},
      {"compare", "all selected methods against a common reference"},
  };
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    dno::ExperimentConfig cfg = resolve(sub->get_name(), flags, sub);
    dno::RunReport report = dno::run_experiment(cfg);
    for (const auto& path : dno::write_report(report, cfg)) std::cout << path.string() << '\n';
    if (report.diagnostic_failed) {
      std::cerr << "diagnostic: " << report.diagnostic << '\n';
      return 3;
    }
  } catch (const dno::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
