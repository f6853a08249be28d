#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dno/profiles.hpp"
#include "dno/spectral.hpp"

namespace dno {

/// Invalid or inconsistent run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment run. Profiles and data are given as short specs:
///
///   profile  polepair[:eps=0.5,offset=0]   η = offset − eps·cos x
///            example:bandlimited|analytic|smooth[,eps=1]
///            fab:alpha=1,beta=0.6667[,eps=1]
///            random:kmax=8,amp=0.01,seed=7
///            flat
///            file:<path>                    surface JSON (profile and Dirichlet modes)
///   data     exact     traces of the pole pair (polepair profiles only)
///            pole:d=1  pole field above an arbitrary profile (exact Neumann data)
///            cos[:k=1]
///            random:kmax=8,seed=8
///            file      Dirichlet modes stored with a file profile
///
/// An empty data spec picks exact for polepair, file for file profiles and cos otherwise.
struct ExperimentConfig {
  std::string command;
  std::vector<std::string> methods;  // compare: cs, afm, afmstar, afm-qr, bim, tfe
  std::string profile = "polepair";
  std::string data;
  std::string depth = "inf";
  int M = 256;
  int K = 0;  // 0 picks the command default
  int N = 24;
  int bits = 53;
  int order = 20;
  std::vector<int> cutoffs;
  std::vector<int> columns;
  bool filter = false;
  bool iterative = false;
  std::string out = "out";
  nlohmann::json source = nlohmann::json::object();  // the configuration as given

  /// Reads every known key; unknown keys are a ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  /// Throws ConfigError for invalid values and combinations (e.g. TFE at infinite depth).
  void validate() const;
  /// K if set, otherwise the per-command default.
  int modes() const;
};

/// Profile, Dirichlet samples and (when known) exact Neumann samples on one grid.
struct Problem {
  WaveProfile profile;
  SurfaceField dirichlet;
  std::optional<std::vector<MpReal>> neumann;
  std::string description;
};
/// Builds the problem at the given precision. Throws ConfigError on malformed specs.
Problem make_problem(const ExperimentConfig& cfg, const PrecisionCtx& ctx);
/// Neumann reference: the exact trace if available, else BIM at max(2·bits, 106) bits.
std::vector<MpReal> reference_neumann(const ExperimentConfig& cfg, const Problem& p, std::string& how);

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string str() const;
};

struct RunReport {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<CsvTable> tables;
  bool diagnostic_failed = false;
  std::string diagnostic;
};

/// Runs one subcommand: cs-growth, cs-columns, cs-sym, cs-apply, afm-sweep, afm-transform,
/// bim-solve, tfe-run, demo-divergence, compare.
RunReport run_experiment(const ExperimentConfig& cfg);

/// Writes <dir>/<command>_<table>.csv for every table, each with a sibling .json holding the
/// run metadata. Returns the CSV paths.
std::vector<std::filesystem::path> write_report(const RunReport& report, const ExperimentConfig& cfg);

/// Decimal string with enough digits to round-trip at the value's precision.
std::string csv_value(const MpReal& v);

}  // namespace dno
