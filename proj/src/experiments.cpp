#include "dno/experiments.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dno/afm.hpp"
#include "dno/bim.hpp"
#include "dno/cs.hpp"
#include "dno/tfe.hpp"

namespace dno {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"cs-growth", "cs-columns",     "cs-sym",     "cs-apply", "afm-sweep",
                                         "afm-transform", "bim-solve", "tfe-run", "demo-divergence", "compare"};
const std::set<std::string> kMethods = {"cs", "afm", "afmstar", "afm-qr", "bim", "tfe"};

struct Spec {
  std::string name;
  std::vector<std::string> positional;
  std::map<std::string, std::string> kv;
};

// "name:a,k=v,..." ; everything after "file:" is a path.
Spec parse_spec(const std::string& text) {
  Spec s;
  auto colon = text.find(':');
  s.name = text.substr(0, colon);
  if (colon == std::string::npos) return s;
  std::string rest = text.substr(colon + 1);
  if (s.name == "file") {
    s.positional.push_back(rest);
    return s;
  }
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) s.positional.push_back(item);
    else s.kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return s;
}

MpReal spec_real(const Spec& s, const std::string& key, const char* fallback, const PrecisionCtx& ctx) {
  auto it = s.kv.find(key);
  std::string v = it == s.kv.end() ? fallback : it->second;
  try {
    return MpReal::parse(ctx, v);
  } catch (const std::invalid_argument&) {
    throw ConfigError("'" + s.name + "': " + key + " must be a number, got '" + v + "'");
  }
}

long spec_int(const Spec& s, const std::string& key, long fallback) {
  auto it = s.kv.find(key);
  if (it == s.kv.end()) return fallback;
  try {
    size_t used = 0;
    long v = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + s.name + "': " + key + " must be an integer, got '" + it->second + "'");
  }
}

void check_keys(const Spec& s, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : s.kv) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("'" + s.name + "' does not take '" + k + "'");
  }
}

Depth parse_depth(const std::string& text, const PrecisionCtx& ctx) {
  try {
    return Depth::parse(ctx, text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("depth: ") + e.what());
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class F>
double timed(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<MpReal> modes_to_values(const ModeVector& m, const Grid& g) { return fft_inverse_real(m, g); }

WaveProfile widen(const WaveProfile& f, const PrecisionCtx& wide) {
  std::map<int, MpComplex> c;
  for (const auto& [k, z] : f.coeffs()) c.emplace(k, MpComplex(MpReal(wide, z.re), MpReal(wide, z.im)));
  Depth d = f.depth().is_infinite() ? Depth::infinite() : Depth::finite(MpReal(wide, f.depth().h()));
  return WaveProfile(std::move(c), std::move(d), ldexp(pi(wide), 1));
}

SurfaceField widen(const SurfaceField& f, const PrecisionCtx& wide) {
  std::vector<MpReal> v;
  for (const auto& x : f.values()) v.emplace_back(wide, x);
  return SurfaceField::from_values(Grid(f.M(), wide), std::move(v));
}

std::vector<MpReal> narrow(const std::vector<MpReal>& v, const PrecisionCtx& ctx) {
  std::vector<MpReal> out;
  for (const auto& x : v) out.emplace_back(ctx, x);
  return out;
}

// ---------------------------------------------------------------- commands

RunReport cs_growth(const ExperimentConfig& cfg, const Problem& p) {
  CsEngine engine(p.profile, cfg.order, cfg.M, cfg.filter);
  CancellationReport r = cancellation_report(engine, cfg.modes(), false);
  RunReport out;
  CsvTable t{"growth", {"n", "norm_A", "norm_G", "noise_ratio"}, {}};
  for (int n = 0; n <= cfg.order; ++n)
    t.add({std::to_string(n), csv_value(r.norm_a[n]), csv_value(r.norm_g[n]), fmt_double(r.noise_ratio[n])});
  out.tables.push_back(std::move(t));
  out.meta["tail_log10"] = r.tail_log10;
  out.meta["noise_flagged"] = r.noise_flagged();
  if (r.noise_flagged() || !r.tail_warning.empty()) {
    out.diagnostic_failed = true;
    out.diagnostic = r.noise_flagged() ? "roundoff noise dominates the outer modes; raise --bits" : r.tail_warning;
  }
  return out;
}

RunReport cs_columns(const ExperimentConfig& cfg, const Problem& p) {
  CsEngine engine(p.profile, cfg.order, cfg.M, cfg.filter);
  std::vector<int> cols = cfg.columns.empty() ? std::vector<int>{1, 2, 3} : cfg.columns;
  RunReport out;
  CsvTable t{"columns", {"n", "j", "k", "abs_A", "abs_G"}, {}};
  for (int j : cols) {
    CsEngine::Column c = engine.column(j);
    for (int n = 0; n <= cfg.order; ++n)
      for (int k = -cfg.M / 2 + 1; k < cfg.M / 2; ++k) {
        size_t idx = static_cast<size_t>((k + cfg.M) % cfg.M);
        MpReal a = n == 0 ? MpReal(engine.ctx()) : abs(c.a[n][idx]);
        t.add({std::to_string(n), std::to_string(j), std::to_string(k), csv_value(a), csv_value(abs(c.g[n][idx]))});
      }
  }
  out.tables.push_back(std::move(t));
  return out;
}

RunReport cs_sym(const ExperimentConfig& cfg, const Problem& p) {
  CsEngine engine(p.profile, cfg.order, cfg.M, cfg.filter);
  CancellationReport r = cancellation_report(engine, cfg.modes(), true);
  RunReport out;
  CsvTable t{"symmetry", {"n", "norm_G", "r_n"}, {}};
  MpReal worst(engine.ctx());
  for (int n = 0; n <= cfg.order; ++n) {
    t.add({std::to_string(n), csv_value(r.norm_g[n]), csv_value(r.r[n])});
    worst = max(worst, r.r[n]);
  }
  out.tables.push_back(std::move(t));
  out.meta["max_r_n"] = worst.to_string(6);
  return out;
}

RunReport cs_apply(const ExperimentConfig& cfg, const Problem& p) {
  std::string how;
  std::vector<MpReal> ref = reference_neumann(cfg, p, how);
  CsEngine engine(p.profile, cfg.order, cfg.M, cfg.filter);
  std::vector<ModeVector> terms = cfg.K > 0 ? gn_apply_columns(engine, p.dirichlet.modes(), cfg.K)
                                            : engine.apply(p.dirichlet.modes());
  int cutoff = cfg.cutoffs.empty() ? cfg.M / 2 : cfg.cutoffs.front();
  PartialSumErrors e = apply_partial_sum(terms, ref, cutoff);
  RunReport out;
  CsvTable t{"errors", {"n", "rms_error"}, {}};
  for (int n = 0; n <= cfg.order; ++n) t.add({std::to_string(n), csv_value(e.rms[n])});
  CsvTable s{"spectrum", {"k", "abs_E"}, {}};
  const ModeVector& last = e.spectra.back();
  for (int k = 0; k < cfg.M / 2; ++k) s.add({std::to_string(k), csv_value(abs(last[static_cast<size_t>(k)]))});
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(s));
  out.meta["reference"] = how;
  out.meta["mode_cutoff"] = cutoff;
  out.meta["final_rms_error"] = e.rms.back().to_string(6);
  return out;
}

RunReport afm_sweep(const ExperimentConfig& cfg, const Problem& p) {
  std::string how;
  std::vector<MpReal> ref = reference_neumann(cfg, p, how);
  AfmSolver solver(build_system(p.profile, cfg.modes(), cfg.M));
  CutoffSweep sw = solver.sweep(p.dirichlet, ref);
  RunReport out;
  CsvTable sv{"singular_values", {"k", "sigma"}, {}};
  for (size_t k = 0; k < solver.svd().S.size(); ++k) sv.add({std::to_string(k), csv_value(solver.svd().S[k])});
  CsvTable t{"sweep", {"cutoff", "rms_afm", "rms_afmstar"}, {}};
  for (size_t c = 0; c < sw.rms_afm.size(); ++c) t.add({std::to_string(c), csv_value(sw.rms_afm[c]), csv_value(sw.rms_afmstar[c])});
  CsvTable pe{"pointwise", {"x", "E_afm", "E_afmstar"}, {}};
  for (int j = 0; j < cfg.M; ++j)
    pe.add({csv_value(p.dirichlet.grid().x(j)), csv_value(sw.error_afm[j]), csv_value(sw.error_afmstar[j])});
  out.tables.push_back(std::move(sv));
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(pe));
  out.meta["reference"] = how;
  out.meta["best_cutoff_afm"] = sw.best_afm;
  out.meta["best_cutoff_afmstar"] = sw.best_afmstar;
  out.meta["best_rms_afm"] = sw.rms_afm[sw.best_afm].to_string(6);
  out.meta["best_rms_afmstar"] = sw.rms_afmstar[sw.best_afmstar].to_string(6);
  out.meta["sigma_ratio"] = (solver.svd().S.front() / solver.svd().S.back()).to_string(6);
  return out;
}

RunReport afm_transform_run(const ExperimentConfig& cfg, const Problem& p) {
  std::string how;
  std::vector<MpReal> ref = reference_neumann(cfg, p, how);
  AfmSystem sys = build_system(p.profile, cfg.modes(), cfg.M, AfmForm::real_trig);
  SurfaceField N = SurfaceField::from_values(sys.grid, ref);
  AfmTransform tn = afm_transform(sys, N), td = afm_transform(sys, p.dirichlet);
  RunReport out;
  CsvTable t{"coefficients", {"k", "abs_N_afm", "abs_N_fourier", "abs_D_afm", "abs_D_fourier"}, {}};
  // The transform of a flat-surface field is √2 times its Fourier modes; divide it out.
  MpReal root2 = sqrt(MpReal(sys.grid.ctx(), 2));
  for (int k = 0; k < cfg.modes() / 2; ++k) {
    MpReal s = k == 0 ? MpReal(sys.grid.ctx(), 1) : root2;
    t.add({std::to_string(k), csv_value(abs(tn.coeffs[k]) / s), csv_value(abs(N.mode(k))), csv_value(abs(td.coeffs[k]) / s),
           csv_value(abs(p.dirichlet.mode(k)))});
  }
  out.tables.push_back(std::move(t));
  out.meta["reference"] = how;
  out.meta["rank_warnings"] = tn.rank_warnings.size();
  if (!tn.rank_warnings.empty()) {
    out.diagnostic_failed = true;
    out.diagnostic = "QR of the AFM matrix lost rank; raise --bits";
  }
  return out;
}

RunReport bim_run(const ExperimentConfig& cfg, const Problem& p) {
  BimKernels k = assemble_kernels(p.profile, cfg.M);
  BimSolution s = bim_solve(k, p.dirichlet, cfg.iterative ? BimMethod::iterative : BimMethod::direct);
  SurfaceField N = bim_neumann(k, s.mu);
  RunReport out;
  std::vector<std::string> header{"x", "mu", "N"};
  if (p.neumann) header.push_back("error");
  CsvTable t{"solution", header, {}};
  for (int j = 0; j < cfg.M; ++j) {
    std::vector<std::string> row{csv_value(k.grid.x(j)), csv_value(s.mu.value(j)), csv_value(N.value(j))};
    if (p.neumann) row.push_back(csv_value(N.value(j) - (*p.neumann)[j]));
    t.add(std::move(row));
  }
  out.tables.push_back(std::move(t));
  out.meta["condition_1"] = s.condition_1.to_string(6);
  out.meta["iterations"] = s.iterations;
  if (!s.warning.empty()) out.meta["warning"] = s.warning;
  if (p.neumann) out.meta["rms_error"] = rms_diff(N.values(), *p.neumann).to_string(6);
  return out;
}

RunReport tfe_run(const ExperimentConfig& cfg, const Problem& p) {
  TfeSolver t(p.profile, p.dirichlet, cfg.N);
  t.run_to(cfg.order);
  PrecisionCtx ctx(cfg.bits), wide(std::max(4 * cfg.bits, 212));
  // Γ_n against CS terms at extended precision on the same (exactly widened) inputs.
  std::vector<ModeVector> cs = CsEngine(widen(p.profile, wide), cfg.order, cfg.M, false)
                                   .apply(widen(p.dirichlet, wide).modes());
  std::optional<std::vector<MpReal>> ref = p.neumann;
  RunReport out;
  CsvTable terms{"terms", {"n", "norm_G_cs", "Gamma_n", "rms_error"}, {}};
  std::vector<MpReal> sum(static_cast<size_t>(cfg.M), MpReal(ctx));
  Grid gw(cfg.M, wide);
  for (int n = 0; n <= cfg.order; ++n) {
    SurfaceField g = t.gn(n);
    std::vector<MpReal> c = modes_to_values(cs[static_cast<size_t>(n)], gw);
    std::vector<MpReal> tw;
    for (const auto& v : g.values()) tw.emplace_back(wide, v);
    for (int j = 0; j < cfg.M; ++j) sum[static_cast<size_t>(j)] += g.value(j);
    terms.add({std::to_string(n), csv_value(MpReal(ctx, rms(c))), csv_value(MpReal(ctx, rms_diff(tw, c))),
               ref ? csv_value(rms_diff(sum, *ref)) : std::string()});
  }
  TfeNorms nm = t.norms();
  CsvTable kap{"kappa", {"n", "j", "kappa"}, {}}, gam{"gamma", {"n", "k", "gamma"}, {}};
  for (int n = 0; n <= cfg.order; ++n) {
    for (int j = 0; j <= cfg.N; ++j) kap.add({std::to_string(n), std::to_string(j), csv_value(nm.kappa[n][j])});
    for (int k = 0; k < cfg.M / 2; ++k) gam.add({std::to_string(n), std::to_string(k), csv_value(nm.gamma[n][k])});
  }
  out.tables.push_back(std::move(terms));
  out.tables.push_back(std::move(kap));
  out.tables.push_back(std::move(gam));
  out.meta["cs_oracle_bits"] = wide.bits();
  return out;
}

RunReport divergence(const ExperimentConfig& cfg) {
  PrecisionCtx ctx(cfg.bits);
  Spec s = parse_spec(cfg.profile);
  MpReal eps = s.name == "polepair" ? spec_real(s, "eps", "0.5", ctx) : MpReal(ctx, 0.5);
  std::vector<int> Ks = cfg.cutoffs.empty() ? std::vector<int>{4, 8, 16, 32, 64} : cfg.cutoffs;
  Grid g(cfg.M, ctx);
  RunReport out;
  CsvTable pts{"traces", {"K", "x", "eta", "D_K", "D_exact", "N_K", "N_exact"}, {}};
  // Convergence slows to nothing as η → 0⁻, so the summary uses the region η ≤ −ε/4.
  CsvTable sum{"summary", {"K", "max_error_eta_below", "abs_D_at_pi"}, {}};
  MpReal below = -ldexp(eps, -2);
  for (int K : Ks) {
    DivergenceDemo d = divergent_series_demo(eps, K, g);
    MpReal worst(ctx), at_pi(ctx);
    for (int j = 0; j < cfg.M; ++j) {
      pts.add({std::to_string(K), csv_value(d.x[j]), csv_value(d.eta[j]), csv_value(d.dirichlet[j]),
               csv_value(d.exact_dirichlet[j]), csv_value(d.neumann[j]), csv_value(d.exact_neumann[j])});
      if (d.eta[j] <= below) worst = max(worst, abs(d.dirichlet[j] - d.exact_dirichlet[j]));
      if (2 * j == cfg.M) at_pi = abs(d.dirichlet[j]);
    }
    sum.add({std::to_string(K), csv_value(worst), csv_value(at_pi)});
  }
  out.tables.push_back(std::move(pts));
  out.tables.push_back(std::move(sum));
  out.meta["eta_threshold"] = below.to_string(6);
  return out;
}

RunReport compare(const ExperimentConfig& cfg, const Problem& p) {
  std::string how;
  std::vector<MpReal> ref = reference_neumann(cfg, p, how);
  PrecisionCtx ctx(cfg.bits);
  std::map<std::string, std::vector<MpReal>> result;
  std::map<std::string, std::string> condition;
  json seconds = json::object();
  std::optional<AfmSolver> afm;
  auto afm_solver = [&]() -> const AfmSolver& {
    if (!afm) afm.emplace(build_system(p.profile, cfg.modes(), cfg.M));
    return *afm;
  };
  for (const auto& m : cfg.methods) {
    double sec = timed([&] {
      if (m == "cs") {
        result[m] = cs_neumann(p.profile, p.dirichlet, cfg.order);
      } else if (m == "afm" || m == "afmstar") {
        const AfmSolver& s = afm_solver();
        int cut = cfg.cutoffs.empty() ? s.columns() : cfg.cutoffs.front();
        result[m] = (m == "afm" ? s.afm_neumann(p.dirichlet, cut) : s.afmstar_neumann(p.dirichlet, cut)).values();
        condition[m] = (s.svd().S.front() / s.svd().S.back()).to_string(6);
      } else if (m == "afm-qr") {
        result[m] = afm_qr_neumann(build_system(p.profile, cfg.modes(), cfg.M), p.dirichlet, false).values();
      } else if (m == "bim") {
        BimKernels k = assemble_kernels(p.profile, cfg.M);
        BimSolution s = bim_solve(k, p.dirichlet, cfg.iterative ? BimMethod::iterative : BimMethod::direct);
        result[m] = bim_neumann(k, s.mu).values();
        condition[m] = s.condition_1.to_string(6);
      } else if (m == "tfe") {
        TfeSolver t(p.profile, p.dirichlet, cfg.N);
        t.run_to(cfg.order);
        std::vector<MpReal> sum(static_cast<size_t>(cfg.M), MpReal(ctx));
        for (int n = 0; n <= cfg.order; ++n) {
          SurfaceField g = t.gn(n);
          for (int j = 0; j < cfg.M; ++j) sum[static_cast<size_t>(j)] += g.value(j);
        }
        result[m] = std::move(sum);
      }
    });
    seconds[m] = sec;
  }
  RunReport out;
  CsvTable t{"methods", {"method", "rms_error", "bits", "condition"}, {}};
  for (const auto& m : cfg.methods)
    t.add({m, csv_value(rms_diff(result[m], ref)), std::to_string(cfg.bits), condition.count(m) ? condition[m] : ""});
  CsvTable pw{"pairwise", {"a", "b", "rms_difference"}, {}};
  for (size_t a = 0; a < cfg.methods.size(); ++a)
    for (size_t b = a + 1; b < cfg.methods.size(); ++b)
      pw.add({cfg.methods[a], cfg.methods[b], csv_value(rms_diff(result[cfg.methods[a]], result[cfg.methods[b]]))});
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(pw));
  out.meta["reference"] = how;
  out.meta["seconds"] = seconds;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  ExperimentConfig c;
  c.source = doc;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "command") c.command = v.get<std::string>();
      else if (key == "methods") c.methods = v.get<std::vector<std::string>>();
      else if (key == "profile") c.profile = v.get<std::string>();
      else if (key == "data") c.data = v.get<std::string>();
      else if (key == "depth") c.depth = v.is_string() ? v.get<std::string>() : v.dump();
      else if (key == "grid" || key == "M") c.M = v.get<int>();
      else if (key == "modes" || key == "K") c.K = v.get<int>();
      else if (key == "chebyshev" || key == "N") c.N = v.get<int>();
      else if (key == "bits") c.bits = v.get<int>();
      else if (key == "order") c.order = v.get<int>();
      else if (key == "cutoff") c.cutoffs = v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
      else if (key == "columns") c.columns = v.get<std::vector<int>>();
      else if (key == "filter") c.filter = v.get<bool>();
      else if (key == "iterative") c.iterative = v.get<bool>();
      else if (key == "out") c.out = v.get<std::string>();
      else throw ConfigError("unknown configuration key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  return c;
}

json ExperimentConfig::to_json() const {
  return json{{"command", command}, {"methods", methods}, {"profile", profile}, {"data", data},   {"depth", depth},
              {"grid", M},          {"modes", modes()},   {"chebyshev", N},     {"bits", bits},   {"order", order},
              {"cutoff", cutoffs},  {"columns", columns}, {"filter", filter},   {"iterative", iterative}, {"out", out}};
}

int ExperimentConfig::modes() const {
  if (K > 0) return K;
  if (command.rfind("cs-", 0) == 0) return M / 2;
  int k = 2 * M / 3;
  return k - k % 2;
}

void ExperimentConfig::validate() const {
  if (!kCommands.count(command)) throw ConfigError("unknown command '" + command + "'");
  if (M < 8 || M % 2) throw ConfigError("grid size must be even and at least 8");
  if (bits < 24 || bits > 100000) throw ConfigError("bits must lie in [24, 100000]");
  if (order < 0) throw ConfigError("order must be nonnegative");
  if (N < 2) throw ConfigError("Chebyshev degree must be at least 2");
  if (K != 0 && (K < 4 || K % 2)) throw ConfigError("modes must be even and at least 4");
  bool uses_afm = command.rfind("afm-", 0) == 0;
  for (const auto& m : methods) {
    if (!kMethods.count(m)) throw ConfigError("unknown method '" + m + "'");
    uses_afm = uses_afm || (command == "compare" && m.rfind("afm", 0) == 0);
  }
  if (uses_afm && modes() > M) throw ConfigError("AFM needs modes <= grid");
  if (command.rfind("cs-", 0) == 0 && modes() > M) throw ConfigError("CS columns need modes <= grid");
  if (command == "compare" && methods.size() < 2) throw ConfigError("compare needs at least two methods");
  for (int c : cutoffs)
    if (c < 0) throw ConfigError("cutoffs must be nonnegative");
  for (int j : columns)
    if (j < 0 || j >= M / 2) throw ConfigError("columns must lie in [0, grid/2)");
  if (command == "demo-divergence")
    for (int k : cutoffs)
      if (k < 1) throw ConfigError("demo-divergence truncations must be positive");
  Depth d = parse_depth(depth, PrecisionCtx(std::max(bits, 53)));
  bool wants_tfe = command == "tfe-run";
  for (const auto& m : methods) wants_tfe = wants_tfe || m == "tfe";
  if (wants_tfe && d.is_infinite()) throw ConfigError("TFE is implemented for finite depth only; set --depth");
  if (command == "demo-divergence" && d.is_finite()) throw ConfigError("demo-divergence is an infinite-depth study");
}

// ---------------------------------------------------------------- problems

Problem make_problem(const ExperimentConfig& cfg, const PrecisionCtx& ctx) {
  Depth depth = parse_depth(cfg.depth, ctx);
  Grid grid(cfg.M, ctx);
  Spec ps = parse_spec(cfg.profile);
  std::optional<ExactPair> pair;
  std::optional<SurfaceFile> file;
  std::optional<WaveProfile> profile;
  try {
    if (ps.name == "polepair") {
      check_keys(ps, {"eps", "offset"});
      pair = polepair_exact(spec_real(ps, "eps", "0.5", ctx), spec_real(ps, "offset", "0", ctx), depth);
      profile = pair->profile;
    } else if (ps.name == "example") {
      check_keys(ps, {"eps"});
      if (ps.positional.size() != 1) throw ConfigError("example needs a kind: bandlimited, analytic or smooth");
      const std::string& k = ps.positional[0];
      ExampleKind kind = k == "bandlimited" ? ExampleKind::bandlimited
                         : k == "analytic"  ? ExampleKind::analytic
                         : k == "smooth"    ? ExampleKind::smooth
                                            : throw ConfigError("unknown example kind '" + k + "'");
      profile = example_profile(kind, ctx, cfg.M, depth).scaled(spec_real(ps, "eps", "1", ctx));
    } else if (ps.name == "fab") {
      check_keys(ps, {"alpha", "beta", "eps"});
      profile = fab_profile(spec_real(ps, "alpha", "1", ctx), spec_real(ps, "beta", "1", ctx), cfg.M, depth)
                    .scaled(spec_real(ps, "eps", "1", ctx));
    } else if (ps.name == "random") {
      check_keys(ps, {"kmax", "amp", "seed"});
      profile = random_bandlimited(static_cast<int>(spec_int(ps, "kmax", 8)), spec_real(ps, "amp", "0.01", ctx),
                                   static_cast<std::uint64_t>(spec_int(ps, "seed", 7)), depth);
    } else if (ps.name == "flat") {
      profile = WaveProfile::flat(depth, ctx);
    } else if (ps.name == "file") {
      if (ps.positional.empty() || ps.positional[0].empty()) throw ConfigError("file profile needs a path");
      try {
        file = load_surface_file(ps.positional[0], ctx);
      } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
      }
      profile = file->profile.with_depth(depth);
    } else {
      throw ConfigError("unknown profile '" + ps.name + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }

  std::string data = cfg.data;
  if (data.empty()) data = pair ? "exact" : file ? "file" : "cos";
  Spec ds = parse_spec(data);
  std::optional<SurfaceField> D;
  std::optional<std::vector<MpReal>> N;
  try {
    if (ds.name == "exact") {
      if (!pair) throw ConfigError("data 'exact' needs the polepair profile");
      D = pair->dirichlet_on(grid);
      N = pair->neumann_on(grid).values();
    } else if (ds.name == "pole") {
      check_keys(ds, {"d"});
      ExactPair f = pole_field_on(*profile, spec_real(ds, "d", "1", ctx));
      D = f.dirichlet_on(grid);
      N = f.neumann_on(grid).values();
    } else if (ds.name == "cos") {
      check_keys(ds, {"k"});
      long k = spec_int(ds, "k", 1);
      D = SurfaceField::from_function(grid, [k](const MpReal& x) { return cos(x * k); });
      if (ps.name == "flat") {
        // G_0 multiplier: |k| tanh(|k|h), or |k| at infinite depth.
        MpReal ak(ctx, std::abs(k));
        MpReal mult = depth.is_infinite() ? ak : ak * tanh(ak * depth.h());
        std::vector<MpReal> n;
        for (const auto& v : D->values()) n.push_back(v * mult);
        N = std::move(n);
      }
    } else if (ds.name == "random") {
      check_keys(ds, {"kmax", "seed"});
      WaveProfile r = random_bandlimited(static_cast<int>(spec_int(ds, "kmax", 8)), MpReal(ctx, 1),
                                         static_cast<std::uint64_t>(spec_int(ds, "seed", 8)), Depth::infinite());
      D = SurfaceField::from_values(grid, r.samples(grid));
    } else if (ds.name == "file") {
      if (!file) throw ConfigError("data 'file' needs a file profile");
      D = file->dirichlet_on(grid);
    } else {
      throw ConfigError("unknown data '" + ds.name + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data: ") + e.what());
  }
  return Problem{*profile, *D, std::move(N), cfg.profile + " / " + data};
}

std::vector<MpReal> reference_neumann(const ExperimentConfig& cfg, const Problem& p, std::string& how) {
  if (p.neumann) {
    how = "exact";
    return *p.neumann;
  }
  PrecisionCtx ctx(cfg.bits), wide(std::max(2 * cfg.bits, 106));
  ExperimentConfig hi = cfg;
  hi.bits = wide.bits();
  Problem q = make_problem(hi, wide);
  how = "bim at " + std::to_string(wide.bits()) + " bits";
  return narrow(bim_dno(q.profile, q.dirichlet).values(), ctx);
}

// ---------------------------------------------------------------- output

std::string csv_value(const MpReal& v) { return v.to_string(); }

std::string CsvTable::str() const {
  std::string s;
  for (size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
  s += '\n';
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
    s += '\n';
  }
  return s;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  PrecisionCtx ctx(cfg.bits);
  RunReport r;
  double sec = timed([&] {
    if (cfg.command == "demo-divergence") {
      r = divergence(cfg);
      return;
    }
    Problem p = make_problem(cfg, ctx);
    if (cfg.command == "cs-growth") r = cs_growth(cfg, p);
    else if (cfg.command == "cs-columns") r = cs_columns(cfg, p);
    else if (cfg.command == "cs-sym") r = cs_sym(cfg, p);
    else if (cfg.command == "cs-apply") r = cs_apply(cfg, p);
    else if (cfg.command == "afm-sweep") r = afm_sweep(cfg, p);
    else if (cfg.command == "afm-transform") r = afm_transform_run(cfg, p);
    else if (cfg.command == "bim-solve") r = bim_run(cfg, p);
    else if (cfg.command == "tfe-run") r = tfe_run(cfg, p);
    else r = compare(cfg, p);
    r.meta["problem"] = p.description;
  });
  r.meta["config"] = cfg.source;
  r.meta["resolved"] = cfg.to_json();
  r.meta["bits"] = cfg.bits;
  r.meta["wall_seconds"] = sec;
  r.meta["versions"] = {{"dno", "1.0.0"}, {"mpfr", mpfr_get_version()}, {"gmp", gmp_version}};
  if (r.diagnostic_failed) r.meta["diagnostic"] = r.diagnostic;
  return r;
}

std::vector<std::filesystem::path> write_report(const RunReport& report, const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& t : report.tables) {
    std::filesystem::path csv = dir / (cfg.command + "_" + t.name + ".csv");
    std::ofstream c(csv);
    c << t.str();
    json meta = report.meta;
    meta["table"] = t.name;
    meta["columns"] = t.header;
    std::ofstream j(std::filesystem::path(csv).replace_extension(".json"));
    j << meta.dump(2) << '\n';
    if (!c || !j) throw std::runtime_error("cannot write " + csv.string());
    written.push_back(csv);
  }
  return written;
}

}  // namespace dno
