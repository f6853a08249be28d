#include "dno/profiles.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>

namespace dno {

namespace {

int pow2_at_least(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

// (i·2πk/L)^order
MpComplex derivative_factor(int k, int order, const MpReal& L) {
  PrecisionCtx ctx = L.ctx();
  if (order == 0) return MpComplex(ctx, 1.0);
  MpReal w = ldexp(pi(ctx), 1) * static_cast<long>(k) / L;
  MpReal m = pow(w, static_cast<long>(order));
  switch (order % 4) {
    case 0: return MpComplex(m, MpReal(ctx));
    case 1: return MpComplex(MpReal(ctx), m);
    case 2: return MpComplex(-m, MpReal(ctx));
    default: return MpComplex(MpReal(ctx), -m);
  }
}

}  // namespace

WaveProfile::WaveProfile(std::map<int, MpComplex> coeffs, Depth depth, MpReal L)
    : coeffs_(std::move(coeffs)), depth_(std::move(depth)), L_(std::move(L)), eta_max_(L_.ctx()), x_max_(L_.ctx()),
      eta_min_(L_.ctx()) {
  if (L_.sign() <= 0) throw std::invalid_argument("period must be positive");
  PrecisionCtx ctx = L_.ctx();
  for (auto& [k, c] : coeffs_) {
    if (k < 0) throw std::invalid_argument("profile coefficients are stored for k >= 0 only");
    c = MpComplex(MpReal(ctx, c.re), MpReal(ctx, c.im));
  }
  if (auto it = coeffs_.find(0); it != coeffs_.end() && !it->second.im.is_zero())
    throw std::invalid_argument("mean of a real profile must be real");
  locate_extrema();
  if (depth_.is_finite() && eta_min_ <= -depth_.h())
    throw std::invalid_argument("surface must stay above the bottom (min eta = " + eta_min_.to_string(8) + ")");
}

WaveProfile WaveProfile::flat(Depth depth, const PrecisionCtx& ctx) {
  return WaveProfile({}, std::move(depth), ldexp(pi(ctx), 1));
}

MpComplex WaveProfile::coeff(int k) const {
  auto it = coeffs_.find(std::abs(k));
  if (it == coeffs_.end()) return MpComplex(ctx());
  return k >= 0 ? it->second : conj(it->second);
}

MpReal WaveProfile::eval(const MpReal& x, int order) const {
  PrecisionCtx c = ctx();
  MpReal acc(c);
  MpReal theta0 = ldexp(pi(c), 1) * x / L_;
  for (const auto& [k, z] : coeffs_) {
    MpComplex term = z * derivative_factor(k, order, L_) * expi(theta0 * static_cast<long>(k));
    // k and -k together contribute 2 Re(term); the mean appears once.
    acc += k == 0 ? term.re : ldexp(term.re, 1);
  }
  return acc;
}

ModeVector WaveProfile::folded_modes(int M, int order) const {
  PrecisionCtx c = ctx();
  ModeVector out = zeros(M, c);
  for (const auto& [k, z] : coeffs_) {
    MpComplex t = z * derivative_factor(k, order, L_);
    out[static_cast<size_t>(k % M)] += t;
    if (k != 0) out[static_cast<size_t>((M - k % M) % M)] += conj(t);
  }
  return out;
}

std::vector<MpReal> WaveProfile::samples(const Grid& grid, int order) const {
  const int M = grid.M();
  ModeVector modes = folded_modes(M, order);
  std::vector<MpReal> v = fft_inverse_real(modes, grid);
  if (M % 2 == 0) {
    // The inverse transform drops the Nyquist slot; aliased energy can land there.
    const MpReal& nyq = modes[static_cast<size_t>(M / 2)].re;
    if (!nyq.is_zero())
      for (int j = 0; j < M; ++j) {
        if (j % 2) v[static_cast<size_t>(j)] -= nyq;
        else v[static_cast<size_t>(j)] += nyq;
      }
  }
  return v;
}

SurfaceField WaveProfile::sample(const Grid& grid, int order) const {
  return SurfaceField::from_values(grid, samples(grid, order));
}

WaveProfile WaveProfile::scaled(const MpReal& epsilon) const {
  std::map<int, MpComplex> c;
  for (const auto& [k, z] : coeffs_) c.emplace(k, z * epsilon);
  return WaveProfile(std::move(c), depth_, L_);
}

WaveProfile WaveProfile::with_depth(Depth depth) const { return WaveProfile(coeffs_, std::move(depth), L_); }

void WaveProfile::locate_extrema() {
  PrecisionCtx c = ctx();
  if (coeffs_.empty() || (coeffs_.size() == 1 && coeffs_.begin()->first == 0)) {
    eta_max_ = coeffs_.empty() ? MpReal(c) : coeffs_.begin()->second.re;
    eta_min_ = eta_max_;
    x_max_ = MpReal(c);
    return;
  }
  Grid g(std::max(64, pow2_at_least(8 * (kmax() + 1))), L_);
  std::vector<MpReal> v = samples(g);
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  eta_min_ = *lo;
  eta_max_ = *hi;
  x_max_ = g.x(static_cast<int>(hi - v.begin()));

  // Newton on η' = 0 from the best sample; keep the polished point only if it improves.
  MpReal x = x_max_;
  MpReal tol = ldexp(L_, -(c.bits() / 2 + 4));
  for (int it = 0; it < 60; ++it) {
    MpReal d2 = eval(x, 2);
    if (d2.sign() >= 0) break;
    MpReal step = eval(x, 1) / d2;
    x -= step;
    if (abs(step) <= tol) {
      // One more step after the quadratic phase has kicked in.
      x -= eval(x, 1) / eval(x, 2);
      break;
    }
  }
  if (abs(x - x_max_) < ldexp(L_ / static_cast<long>(g.M()), 1)) {
    MpReal e = eval(x);
    if (e >= eta_max_) {
      eta_max_ = e;
      x_max_ = x;
    }
  }
}

// ---------------------------------------------------------------- examples

WaveProfile fab_profile(const MpReal& alpha, const MpReal& beta, std::optional<int> max_k, Depth depth) {
  PrecisionCtx ctx = alpha.ctx();
  if (alpha.sign() <= 0 || beta.sign() <= 0) throw std::invalid_argument("fab profile needs alpha, beta > 0");
  // Stop once α k^β exceeds (bits + 16) ln 2.
  MpReal cut = MpReal(ctx, static_cast<long>(ctx.bits() + 16)) * log(MpReal(ctx, 2));
  std::map<int, MpComplex> c;
  for (int k = 0;; ++k) {
    if (max_k && 2 * k >= *max_k) break;
    MpReal e = alpha * pow(MpReal(ctx, k), beta);
    if (e > cut) break;
    c.emplace(k, MpComplex(exp(-e)));
  }
  return WaveProfile(std::move(c), std::move(depth), ldexp(pi(ctx), 1));
}

WaveProfile example_profile(ExampleKind kind, const PrecisionCtx& ctx, std::optional<int> max_k, Depth depth) {
  switch (kind) {
    case ExampleKind::bandlimited: {
      // cos(x − π/6) = ½e^{−iπ/6}e^{ix} + c.c.
      MpComplex c1 = expi(-pi(ctx) / 6L);
      c1.re = ldexp(c1.re, -1);
      c1.im = ldexp(c1.im, -1);
      return WaveProfile({{1, c1}}, std::move(depth), ldexp(pi(ctx), 1));
    }
    case ExampleKind::analytic:
      return fab_profile(MpReal(ctx, 1), MpReal(ctx, 1), max_k, std::move(depth));
    case ExampleKind::smooth:
      return fab_profile(MpReal(ctx, 3) / 2L, MpReal(ctx, 2) / 3L, max_k, std::move(depth));
  }
  throw std::invalid_argument("unknown example kind");
}

WaveProfile random_bandlimited(int kmax, const MpReal& amplitude, std::uint64_t seed, Depth depth) {
  if (kmax < 1) throw std::invalid_argument("random profile needs kmax >= 1");
  PrecisionCtx ctx = amplitude.ctx();
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0; };
  std::map<int, MpComplex> c;
  for (int k = 1; k <= kmax; ++k) {
    MpComplex z(ctx, uniform(), uniform());
    c.emplace(k, z / MpReal(ctx, k));
  }
  MpReal L = ldexp(pi(ctx), 1);
  WaveProfile raw(c, Depth::infinite(), L);
  MpReal peak = max(abs(raw.eta_max()), abs(raw.eta_min()));
  MpReal s = amplitude / peak;
  for (auto& [k, z] : c) z *= s;
  return WaveProfile(std::move(c), std::move(depth), L);
}

// ---------------------------------------------------------------- exact pair

ExactPair polepair_exact(const MpReal& epsilon, const MpReal& offset, const Depth& depth) {
  PrecisionCtx ctx = epsilon.ctx();
  if (offset - epsilon >= 0L)
    throw std::invalid_argument("pole at the origin must lie strictly above the surface (offset - epsilon < 0)");
  std::map<int, MpComplex> c;
  if (!offset.is_zero()) c.emplace(0, MpComplex(offset));
  if (!epsilon.is_zero()) c.emplace(1, MpComplex(-ldexp(epsilon, -1), MpReal(ctx)));
  WaveProfile profile(std::move(c), depth, ldexp(pi(ctx), 1));

  std::optional<MpReal> h;
  if (depth.is_finite()) h = MpReal(ctx, depth.h());
  MpReal eps(ctx, epsilon), off(ctx, offset);

  auto eta = [=](const MpReal& x) { return off - eps * cos(x); };
  // F(z) with φ = Im F; the image term for infinite depth is the constant i/2.
  auto phi = [=](const MpReal& x) {
    MpComplex half_z(ldexp(x, -1), ldexp(eta(x), -1));
    MpReal v = ldexp(cot(half_z).im, -1);
    if (h) v -= ldexp(cot(MpComplex(half_z.re, half_z.im + *h)).im, -1);
    else v += MpReal(ctx, 0.5);
    return v;
  };
  auto dphi = [=](const MpReal& x) {
    MpComplex half_z(ldexp(x, -1), ldexp(eta(x), -1));
    MpComplex d = csc2(half_z);
    d = -d;
    if (h) d += csc2(MpComplex(half_z.re, half_z.im + *h));
    d.re = ldexp(d.re, -2);
    d.im = ldexp(d.im, -2);
    return d;  // F'(z): φ_x = Im F', φ_y = Re F'
  };
  auto neumann = [=](const MpReal& x) {
    MpComplex d = dphi(x);
    MpReal eta_x = eps * sin(x);
    return d.re - eta_x * d.im;
  };
  return ExactPair{std::move(profile), phi, neumann};
}

ExactPair pole_field_on(const WaveProfile& profile, const MpReal& d) {
  PrecisionCtx ctx = profile.ctx();
  if (!(d > profile.eta_max())) throw std::invalid_argument("pole must lie strictly above the surface");
  if (!Grid(4, profile.L()).is_2pi()) throw std::invalid_argument("pole field requires period 2π");
  std::optional<MpReal> image;  // d + 2h
  if (profile.depth().is_finite()) image = d + ldexp(profile.depth().h(), 1);
  MpReal height(ctx, d);
  auto half_z = [=](const MpReal& x, const MpReal& shift) {
    return MpComplex(ldexp(x, -1), ldexp(profile.eval(x) + shift, -1));
  };
  auto phi = [=](const MpReal& x) {
    MpReal v = ldexp(cot(half_z(x, -height)).im, -1);
    if (image) v -= ldexp(cot(half_z(x, *image)).im, -1);
    else v += MpReal(ctx, 0.5);
    return v;
  };
  auto neumann = [=](const MpReal& x) {
    MpComplex f = -csc2(half_z(x, -height));
    if (image) f += csc2(half_z(x, *image));
    // F'(z) = f/4: φ_x = Im F', φ_y = Re F'
    return ldexp(f.re - profile.eval(x, 1) * f.im, -2);
  };
  return ExactPair{profile, phi, neumann};
}

DivergenceDemo divergent_series_demo(const MpReal& epsilon, int K, const Grid& grid) {
  PrecisionCtx ctx = grid.ctx();
  if (K < 0) throw std::invalid_argument("truncation must be nonnegative");
  MpReal eps(ctx, epsilon);
  ExactPair pair = polepair_exact(eps, MpReal(ctx), Depth::infinite());
  DivergenceDemo out;
  MpReal eta_max = abs(eps);
  out.c.emplace_back(ctx, 1);
  for (int k = 1; k <= K; ++k) out.c.emplace_back(ldexp(exp(eta_max * static_cast<long>(k)), -1));
  for (int j = 0; j < grid.M(); ++j) {
    MpReal x = grid.x(j);
    MpReal eta = -eps * cos(x);
    MpReal eta_x = eps * sin(x);
    MpReal d(ctx, 1), n(ctx);
    // c_k e^{|k|(η − η_max)} combined over ±k.
    for (int k = 1; k <= K; ++k) {
      MpReal w = exp(eta * static_cast<long>(k));
      MpReal ck = cos(x * static_cast<long>(k)), sk = sin(x * static_cast<long>(k));
      d += w * ck;
      n += w * static_cast<long>(k) * (ck + eta_x * sk);
    }
    out.x.push_back(x);
    out.eta.push_back(eta);
    out.dirichlet.push_back(d);
    out.neumann.push_back(n);
    out.exact_dirichlet.push_back(pair.dirichlet(x));
    out.exact_neumann.push_back(pair.neumann(x));
  }
  return out;
}

// ---------------------------------------------------------------- files

SurfaceField SurfaceFile::dirichlet_on(const Grid& grid) const {
  WaveProfile d(dirichlet, Depth::infinite(), profile.L());
  return d.sample(grid);
}

namespace {

std::map<int, MpComplex> parse_modes(const nlohmann::json& arr, const PrecisionCtx& ctx, const char* name) {
  if (!arr.is_array()) throw std::invalid_argument(std::string(name) + " must be an array");
  std::map<int, MpComplex> out;
  int last = -1;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_string() || !e[2].is_string())
      throw std::invalid_argument(std::string(name) + " entries must be [k, \"re\", \"im\"]");
    int k = e[0].get<int>();
    if (k <= last) throw std::invalid_argument(std::string(name) + " wavenumbers must be nonnegative and increasing");
    last = k;
    MpComplex z(MpReal::parse(ctx, e[1].get<std::string>()), MpReal::parse(ctx, e[2].get<std::string>()));
    if (k == 0 && !z.im.is_zero())
      throw std::invalid_argument(std::string(name) + ": k = 0 coefficient must be real (conjugate symmetry)");
    out.emplace(k, std::move(z));
  }
  return out;
}

nlohmann::json modes_json(const std::map<int, MpComplex>& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [k, z] : m) arr.push_back({k, z.re.to_string(), z.im.to_string()});
  return arr;
}

}  // namespace

SurfaceFile parse_surface_json(const nlohmann::json& doc, const PrecisionCtx& ctx) {
  if (!doc.is_object()) throw std::invalid_argument("surface file must be a JSON object");
  for (const char* key : {"L", "depth", "eta"})
    if (!doc.contains(key)) throw std::invalid_argument(std::string("surface file is missing \"") + key + "\"");
  if (!doc["L"].is_string() || !doc["depth"].is_string())
    throw std::invalid_argument("\"L\" and \"depth\" must be decimal strings");
  MpReal L = MpReal::parse(ctx, doc["L"].get<std::string>());
  Depth depth = Depth::parse(ctx, doc["depth"].get<std::string>());
  std::map<int, MpComplex> eta = parse_modes(doc["eta"], ctx, "eta");
  std::map<int, MpComplex> dir;
  if (doc.contains("dirichlet")) dir = parse_modes(doc["dirichlet"], ctx, "dirichlet");
  nlohmann::json meta = doc.value("meta", nlohmann::json::object());
  if (!meta.is_object()) throw std::invalid_argument("\"meta\" must be an object");
  return SurfaceFile{WaveProfile(std::move(eta), std::move(depth), std::move(L)), std::move(dir), std::move(meta)};
}

SurfaceFile load_surface_file(const std::filesystem::path& path, const PrecisionCtx& ctx) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return parse_surface_json(doc, ctx);
}

nlohmann::json surface_json(const SurfaceFile& file) {
  return {{"L", file.profile.L().to_string()},
          {"depth", file.profile.depth().to_string()},
          {"eta", modes_json(file.profile.coeffs())},
          {"dirichlet", modes_json(file.dirichlet)},
          {"meta", file.meta}};
}

void save_surface_file(const std::filesystem::path& path, const SurfaceFile& file) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << surface_json(file).dump(1) << '\n';
}

}  // namespace dno
