#pragma once

// JSON-configured experiment pipelines behind the latticeham command line:
// kernel accuracy, spectra, timing sweeps, block sparsity and energy tables.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "latticeham/block_tensor.hpp"
#include "latticeham/coulomb_kernel.hpp"
#include "latticeham/eigensolve.hpp"
#include "latticeham/error.hpp"
#include "latticeham/galerkin.hpp"
#include "latticeham/lattice_potential.hpp"
#include "latticeham/mlbc.hpp"

namespace latticeham {

using json = nlohmann::json;

enum class ModeSelection { Box, Periodic, Both };

struct ExperimentConfig {
  LatticeConfig lattice;
  std::vector<GaussianGenerator> basis;
  Index fem_refine = 1;
  double kinetic_factor = 0.5;
  double potential_sign = -1.0;
  bool toeplitz_potential = false;
  double kernel_tol = 1e-5;
  double prune_tol = 0.0;
  double overlap_threshold = 1e-8;
  double rmin_factor = 0.1;
  std::optional<Index> overlap_constant;
  ModeSelection mode = ModeSelection::Both;
  std::vector<Lattice3> sweep;
  Index gap_count = 10;
  Index occupied_per_cell = 1;
  Index dense_cap = kDefaultDenseCap;
  int repetitions = 5;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  json source;

  std::vector<Boundary> boundaries() const {
    switch (mode) {
      case ModeSelection::Box: return {Boundary::Box};
      case ModeSelection::Periodic: return {Boundary::Periodic};
      case ModeSelection::Both: break;
    }
    return {Boundary::Box, Boundary::Periodic};
  }
  /// Sweep lattices, or the configured lattice alone when no sweep is given.
  std::vector<Lattice3> lattices() const { return sweep.empty() ? std::vector{lattice.L} : sweep; }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) throw ConfigError(at(it.key()), "unknown field");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "." + key; }
  const json& get(const char* key) const { return j_.at(key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number()) throw ConfigError(at(key), "expected a number");
    return j_.at(key).get<double>();
  }
  double positive(const char* key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0)) throw ConfigError(at(key), "must be positive");
    return v;
  }
  Index integer(const char* key, Index fallback, Index min_value) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < min_value) throw ConfigError(at(key), "must be >= " + std::to_string(min_value));
    return static_cast<Index>(x);
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(at(key), "expected a boolean");
    return j_.at(key).get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
};

inline std::array<double, 3> triple(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(path, "expected an array of 3 numbers");
  std::array<double, 3> t;
  for (int l = 0; l < 3; ++l) {
    if (!j[static_cast<std::size_t>(l)].is_number())
      throw ConfigError(path + "[" + std::to_string(l) + "]", "expected a number");
    t[l] = j[static_cast<std::size_t>(l)].get<double>();
  }
  return t;
}

inline Lattice3 lattice_dims(const json& j, const std::string& path) {
  Lattice3 L{1, 1, 1};
  if (j.is_number_integer()) {
    L[0] = j.get<long long>();
  } else if (j.is_array() && j.size() >= 1 && j.size() <= 3) {
    for (std::size_t l = 0; l < j.size(); ++l) {
      if (!j[l].is_number_integer())
        throw ConfigError(path + "[" + std::to_string(l) + "]", "expected an integer");
      L[l] = j[l].get<long long>();
    }
  } else {
    throw ConfigError(path, "expected an integer or an array of 1 to 3 integers");
  }
  for (auto x : L)
    if (x < 1) throw ConfigError(path, "lattice sizes must be >= 1");
  return L;
}

}  // namespace detail

/// Parses and validates an experiment config; errors carry the JSON field path.
inline ExperimentConfig parse_config(const json& j) {
  using detail::ConfigReader;
  ExperimentConfig c;
  c.source = j;
  ConfigReader root(j, "$");
  root.allow({"lattice", "basis", "hamiltonian", "tolerances", "overlap_constant", "mode", "sweep",
              "gap_count", "occupied_per_cell", "bench", "output_dir", "seed"});

  if (!root.has("lattice")) throw ConfigError("$.lattice", "required field missing");
  {
    ConfigReader lat(root.get("lattice"), "$.lattice");
    lat.allow({"L", "h", "n0", "n", "nuclei"});
    auto& L = c.lattice;
    if (lat.has("L")) L.L = detail::lattice_dims(lat.get("L"), lat.at("L"));
    L.h = lat.positive("h", L.h);
    L.n0 = lat.integer("n0", L.n0, 1);
    L.n = lat.integer("n", L.n, 2);
    if (L.n < L.n0) throw ConfigError("$.lattice.n", "must be >= n0");
    L.nuclei.clear();
    if (lat.has("nuclei")) {
      const auto& nj = lat.get("nuclei");
      if (!nj.is_array() || nj.empty()) throw ConfigError("$.lattice.nuclei", "expected a non-empty array");
      for (std::size_t v = 0; v < nj.size(); ++v) {
        const std::string path = "$.lattice.nuclei[" + std::to_string(v) + "]";
        ConfigReader nr(nj[v], path);
        nr.allow({"position", "charge"});
        Nucleus nu;
        if (nr.has("position")) nu.position = detail::triple(nr.get("position"), nr.at("position"));
        nu.charge = nr.positive("charge", 1.0);
        for (int l = 0; l < 3; ++l)
          if (!(std::abs(nu.position[l]) < 0.5 * L.b0()))
            throw ConfigError(nr.at("position"), "must lie strictly inside the formation cube of edge n0*h");
        L.nuclei.push_back(nu);
      }
    } else {
      L.nuclei.push_back(Nucleus{});
    }
  }

  {
    std::vector<double> exponents{0.3, 0.9, 2.7, 8.1};
    std::vector<std::array<double, 3>> centers;
    if (root.has("basis")) {
      ConfigReader b(root.get("basis"), "$.basis");
      b.allow({"exponents", "centers", "fem_refine"});
      if (b.has("exponents")) {
        const auto& e = b.get("exponents");
        if (!e.is_array() || e.empty()) throw ConfigError("$.basis.exponents", "expected a non-empty array");
        exponents.clear();
        for (std::size_t i = 0; i < e.size(); ++i) {
          if (!e[i].is_number() || !(e[i].get<double>() > 0))
            throw ConfigError("$.basis.exponents[" + std::to_string(i) + "]", "must be a positive number");
          exponents.push_back(e[i].get<double>());
        }
      }
      if (b.has("centers")) {
        const auto& cj = b.get("centers");
        if (!cj.is_array() || cj.size() != exponents.size())
          throw ConfigError("$.basis.centers", "expected one centre per exponent");
        for (std::size_t i = 0; i < cj.size(); ++i)
          centers.push_back(detail::triple(cj[i], "$.basis.centers[" + std::to_string(i) + "]"));
      }
      c.fem_refine = b.integer("fem_refine", 1, 1);
    }
    c.basis = centered_generators(exponents);
    for (std::size_t i = 0; i < centers.size(); ++i) c.basis[i].center = centers[i];
  }

  if (root.has("hamiltonian")) {
    ConfigReader hj(root.get("hamiltonian"), "$.hamiltonian");
    hj.allow({"kinetic_factor", "potential_sign", "toeplitz_potential"});
    c.kinetic_factor = hj.positive("kinetic_factor", c.kinetic_factor);
    c.potential_sign = hj.number("potential_sign", c.potential_sign);
    if (c.potential_sign != 1.0 && c.potential_sign != -1.0)
      throw ConfigError("$.hamiltonian.potential_sign", "must be +1 or -1");
    c.toeplitz_potential = hj.boolean("toeplitz_potential", false);
  }

  if (root.has("tolerances")) {
    ConfigReader t(root.get("tolerances"), "$.tolerances");
    t.allow({"kernel", "prune", "overlap_threshold", "rmin_factor"});
    c.kernel_tol = t.positive("kernel", c.kernel_tol);
    if (c.kernel_tol > 1e-2) throw ConfigError("$.tolerances.kernel", "must be <= 1e-2");
    c.prune_tol = t.number("prune", c.prune_tol);
    if (c.prune_tol < 0) throw ConfigError("$.tolerances.prune", "must be >= 0");
    c.overlap_threshold = t.positive("overlap_threshold", c.overlap_threshold);
    c.rmin_factor = t.positive("rmin_factor", c.rmin_factor);
    if (c.rmin_factor > 1) throw ConfigError("$.tolerances.rmin_factor", "must be <= 1");
  }

  if (root.has("overlap_constant")) c.overlap_constant = root.integer("overlap_constant", 0, 0);

  {
    const std::string m = root.string("mode", "both");
    if (m == "box")
      c.mode = ModeSelection::Box;
    else if (m == "periodic")
      c.mode = ModeSelection::Periodic;
    else if (m == "both")
      c.mode = ModeSelection::Both;
    else
      throw ConfigError("$.mode", "expected \"box\", \"periodic\" or \"both\"");
  }

  if (root.has("sweep")) {
    const auto& s = root.get("sweep");
    if (!s.is_array() || s.empty()) throw ConfigError("$.sweep", "expected a non-empty array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      Lattice3 L = detail::lattice_dims(s[i], "$.sweep[" + std::to_string(i) + "]");
      if (s[i].is_number_integer()) {
        L[1] = c.lattice.L[1];
        L[2] = c.lattice.L[2];
      }
      c.sweep.push_back(L);
    }
  }

  c.gap_count = root.integer("gap_count", c.gap_count, 1);
  c.occupied_per_cell = root.integer("occupied_per_cell", c.occupied_per_cell, 0);
  if (c.occupied_per_cell > static_cast<Index>(c.basis.size()))
    throw ConfigError("$.occupied_per_cell", "exceeds the number of basis functions per cell");
  if (root.has("bench")) {
    ConfigReader b(root.get("bench"), "$.bench");
    b.allow({"dense_cap", "repetitions"});
    c.dense_cap = b.integer("dense_cap", c.dense_cap, 1);
    c.repetitions = static_cast<int>(b.integer("repetitions", c.repetitions, 1));
  }
  c.output_dir = root.string("output_dir", c.output_dir);
  if (root.has("seed")) {
    const auto& sj = root.get("seed");
    if (!sj.is_number_integer() || (!sj.is_number_unsigned() && sj.get<long long>() < 0))
      throw ConfigError("$.seed", "expected a non-negative integer");
    c.seed = sj.get<std::uint64_t>();
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// FNV-1a 64 of the canonical JSON dump.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : c.source.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Median wall time of `reps` runs of f after one discarded warm-up run.
template <class F>
double median_time(int reps, F&& f) {
  f();
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    t.push_back(seconds_since(t0));
  }
  std::sort(t.begin(), t.end());
  return t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
}

/// Everything assembled for one lattice and boundary mode.
struct LatticeSystem {
  LatticeConfig cfg;
  SeparableBasis basis;
  OverlapResult overlap;
  SincQuadrature quadrature;
  Lattice3 reference_dims{0, 0, 0};
  Index potential_rank = 0;
  BlockCoefficientTensor V, H;
  LaplacianMassBlocks AS;
  double t_kernel = 0, t_potential = 0, t_assembly = 0;

  Index basis_size() const { return basis.m0() * cfg.cells(); }
};

inline LatticeConfig lattice_for(const ExperimentConfig& x, const Lattice3& L, Boundary b) {
  LatticeConfig cfg = x.lattice;
  cfg.L = L;
  cfg.boundary = b;
  return cfg;
}

/// Quadrature and reference tensor sized for cfg.
inline std::pair<SincQuadrature, CanonicalTensor3> build_kernel(const ExperimentConfig& x,
                                                                const LatticeConfig& cfg) {
  const Lattice3 ref = required_reference_size(cfg);
  SincQuadrature q = build_quadrature(x.rmin_factor * cfg.h, reference_radius(ref, cfg.h), x.kernel_tol);
  CanonicalTensor3 t = build_reference_tensor(GridSpec::centered(ref, cfg.h), q);
  return {std::move(q), std::move(t)};
}

inline LatticeSystem build_system(const ExperimentConfig& x, const Lattice3& L, Boundary b) {
  LatticeConfig cfg = lattice_for(x, L, b);
  SeparableBasis basis = SeparableBasis::for_lattice(cfg, x.basis, x.fem_refine);
  OverlapResult ov = detect_overlap_constant(basis, x.overlap_threshold, L);
  cfg.L0 = x.overlap_constant ? *x.overlap_constant : ov.needed;
  cfg.validate();

  auto t0 = std::chrono::steady_clock::now();
  auto [q, ref] = build_kernel(x, cfg);
  const double t_kernel = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  CanonicalTensor3 pot =
      b == Boundary::Box ? box_lattice_potential(cfg, ref) : periodic_cell_potential(cfg, ref);
  if (x.prune_tol > 0) pot = prune(pot, x.prune_tol);
  const double t_potential = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  LatticeSystem s{cfg, std::move(basis), ov, std::move(q), ref.dims(), pot.rank(), {}, {}, {}, t_kernel,
                  t_potential, 0};
  s.V = assemble_nuclear_blocks(s.basis, pot, cfg);
  s.AS = assemble_laplacian_mass_blocks(s.basis, cfg);
  const BlockCoefficientTensor Vh =
      (b == Boundary::Box && x.toeplitz_potential) ? toeplitz_potential(s.V) : s.V;
  s.H = core_hamiltonian(s.AS.A, Vh, x.kinetic_factor, x.potential_sign);
  s.t_assembly = seconds_since(t0);
  return s;
}

/// Box: dense generalized solve of the assembled matrices. Periodic: Fourier path.
inline Spectrum solve_system(const LatticeSystem& s, Index dense_cap) {
  if (s.cfg.boundary == Boundary::Periodic) return solve_periodic_fft(s.H, s.AS.S);
  const Eigen::MatrixXd H = to_dense(s.H, dense_cap);
  const Eigen::MatrixXd S = to_dense(s.AS.S, dense_cap);
  Spectrum sp = solve_dense_generalized(H, S, false);
  sp.L = s.cfg.L;
  sp.m0 = s.basis.m0();
  return sp;
}

inline std::string lattice_tag(const Lattice3& L) {
  return std::to_string(L[0]) + "x" + std::to_string(L[1]) + "x" + std::to_string(L[2]);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return NAN;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

class OutputDir {
 public:
  OutputDir(const ExperimentConfig& c) : dir_(c.output_dir), header_("# config_hash=" + config_hash(c) +
                                                                     " seed=" + std::to_string(c.seed)) {
    std::filesystem::create_directories(dir_);
  }
  std::ofstream csv(const std::string& name) const {
    std::ofstream f(dir_ / name);
    if (!f) throw Error("cannot write " + (dir_ / name).string());
    f << header_ << '\n';
    return f;
  }
  std::ofstream file(const std::string& name) const {
    std::ofstream f(dir_ / name);
    if (!f) throw Error("cannot write " + (dir_ / name).string());
    return f;
  }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
  std::string header_;
};

struct KernelReport {
  Index rank = 0;
  double max_rel_err = 0;         // quadrature error over 1000 log-spaced radii
  double max_cell_rel_err = 0;    // tensor vs exact cell integrals on sampled cells
  double r_min = 0, r_max = 0;
  Lattice3 reference_dims{0, 0, 0};
  double t_quadrature = 0, t_reference = 0;
};

/// Builds the kernel for the first configured lattice and mode and checks it
/// against exact cell integrals of 1/|x| on seeded random cells at >= 3h.
inline KernelReport cmd_kernel(const ExperimentConfig& x, std::ostream& log = std::cout) {
  const LatticeConfig cfg = lattice_for(x, x.lattices().front(), x.boundaries().front());
  const Lattice3 ref = required_reference_size(cfg);
  KernelReport r;
  r.reference_dims = ref;
  r.r_min = x.rmin_factor * cfg.h;
  r.r_max = reference_radius(ref, cfg.h);
  auto t0 = std::chrono::steady_clock::now();
  const SincQuadrature q = build_quadrature(r.r_min, r.r_max, x.kernel_tol);
  r.t_quadrature = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const GridSpec grid = GridSpec::centered(ref, cfg.h);
  const CanonicalTensor3 P = build_reference_tensor(grid, q);
  r.t_reference = seconds_since(t0);
  r.rank = static_cast<Index>(q.rank());
  r.max_rel_err = validate_quadrature(q, 1000);

  std::mt19937_64 rng(x.seed);
  int checked = 0;
  for (int tries = 0; checked < 200 && tries < 100000; ++tries) {
    std::array<Index, 3> i;
    std::array<double, 3> lo, hi, c;
    double r2 = 0;
    for (int l = 0; l < 3; ++l) {
      i[l] = static_cast<Index>(rng() % static_cast<std::uint64_t>(ref[l]));
      lo[l] = grid.cell_left(l, i[l]);
      hi[l] = lo[l] + cfg.h;
      c[l] = grid.cell_center(l, i[l]);
      r2 += c[l] * c[l];
    }
    if (std::sqrt(r2) < 3 * cfg.h) continue;
    const double exact = box_integral_inverse_distance(lo, hi);
    r.max_cell_rel_err = std::max(r.max_cell_rel_err, std::abs(P(i[0], i[1], i[2]) / exact - 1.0));
    ++checked;
  }

  json out = {{"rank", r.rank},
              {"max_rel_err", r.max_rel_err},
              {"max_cell_rel_err", r.max_cell_rel_err},
              {"target_rel_err", x.kernel_tol},
              {"r_min", r.r_min},
              {"r_max", r.r_max},
              {"reference_dims", {ref[0], ref[1], ref[2]}},
              {"t_quadrature_s", r.t_quadrature},
              {"t_reference_s", r.t_reference},
              {"config_hash", config_hash(x)}};
  OutputDir dir(x);
  dir.file("kernel.json") << out.dump(2) << '\n';
  log << out.dump(2) << '\n';
  if (r.max_rel_err > x.kernel_tol)
    throw NumericalError("kernel: quadrature error " + std::to_string(r.max_rel_err) +
                         " exceeds target " + std::to_string(x.kernel_tol));
  return r;
}

/// Spectrum CSVs per mode and lattice; with both modes also the gap table.
inline void cmd_spectrum(const ExperimentConfig& x, std::ostream& log = std::cout) {
  OutputDir dir(x);
  for (const Lattice3& L : x.lattices()) {
    std::vector<std::pair<Boundary, Spectrum>> spectra;
    for (Boundary b : x.boundaries()) {
      const LatticeSystem s = build_system(x, L, b);
      Spectrum sp = solve_system(s, x.dense_cap);
      const std::string name = std::string("spectrum_") + to_string(b) + "_L" + lattice_tag(L) + ".csv";
      auto f = dir.csv(name);
      write_spectrum_csv(f, sp);
      log << name << ": N_b=" << sp.size() << " lowest=" << std::setprecision(10) << sp.eigenvalues[0]
          << " L0=" << s.cfg.L0 << '\n';
      spectra.emplace_back(b, std::move(sp));
    }
    if (spectra.size() == 2) {
      const Index k = std::min<Index>(x.gap_count, spectra[0].second.size());
      const SpectralGaps g = spectral_comparison(spectra[0].second, spectra[1].second, k);
      const std::string name = "gaps_L" + lattice_tag(L) + ".csv";
      auto f = dir.csv(name);
      f << "i,box,periodic,gap\n" << std::setprecision(17);
      for (Index i = 0; i < k; ++i)
        f << i << ',' << spectra[0].second.eigenvalues[i] << ',' << spectra[1].second.eigenvalues[i] << ','
          << g.gaps[static_cast<std::size_t>(i)] << '\n';
      log << name << ": min gap=" << g.min << " max gap=" << g.max << '\n';
    }
  }
}

struct BenchRow {
  Index L = 0, N_b = 0;
  std::optional<double> t_dense;
  double t_fft = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double fft_slope = NAN, dense_slope = NAN;
};

/// Times the dense generalized eigensolve of the materialized periodic
/// system against the Fourier path (block transforms and per-block solves).
inline BenchResult run_bench(const ExperimentConfig& x, std::ostream& log = std::cout) {
  BenchResult res;
  for (const Lattice3& L : x.lattices()) {
    const LatticeSystem s = build_system(x, L, Boundary::Periodic);
    BenchRow row;
    row.L = s.cfg.cells();
    row.N_b = s.basis_size();
    row.t_fft = median_time(x.repetitions, [&] { (void)solve_periodic_fft(s.H, s.AS.S); });
    if (row.N_b <= x.dense_cap) {
      const Eigen::MatrixXd H = to_dense(s.H, x.dense_cap), S = to_dense(s.AS.S, x.dense_cap);
      row.t_dense = median_time(x.repetitions, [&] { (void)solve_dense_generalized(H, S, false); });
    }
    log << "L=" << row.L << " N_b=" << row.N_b << " t_fft=" << row.t_fft
        << " t_dense=" << (row.t_dense ? std::to_string(*row.t_dense) : std::string("--")) << std::endl;
    res.rows.push_back(row);
  }
  std::vector<double> lf, tf, ld, td;
  for (const auto& r : res.rows) {
    lf.push_back(static_cast<double>(r.L));
    tf.push_back(r.t_fft);
    if (r.t_dense) {
      ld.push_back(static_cast<double>(r.L));
      td.push_back(*r.t_dense);
    }
  }
  res.fft_slope = loglog_slope(lf, tf);
  res.dense_slope = loglog_slope(ld, td);
  return res;
}

inline BenchResult cmd_bench(const ExperimentConfig& x, std::ostream& log = std::cout) {
  BenchResult res = run_bench(x, log);
  OutputDir dir(x);
  auto f = dir.csv("bench.csv");
  f << "L,N_b,t_dense,t_fft\n" << std::setprecision(6);
  for (const auto& r : res.rows) {
    f << r.L << ',' << r.N_b << ',';
    if (r.t_dense)
      f << *r.t_dense;
    else
      f << "--";
    f << ',' << r.t_fft << '\n';
  }
  f << "# slope_fft=" << res.fft_slope << " slope_dense=" << res.dense_slope << '\n';
  log << "log-log slope: fft=" << res.fft_slope << " dense=" << res.dense_slope << '\n';
  return res;
}

struct SparsityReport {
  Boundary boundary = Boundary::Box;
  Index L0 = 0, d = 1, max_per_row = 0, bound = 0;
};

/// Nonzero blocks of V with their Frobenius norms; checks the per-row band bound.
inline std::vector<SparsityReport> cmd_sparsity(const ExperimentConfig& x, std::ostream& log = std::cout) {
  OutputDir dir(x);
  std::vector<SparsityReport> reports;
  for (const Lattice3& L : x.lattices())
    for (Boundary b : x.boundaries()) {
      const LatticeSystem s = build_system(x, L, b);
      const std::string name = std::string("sparsity_") + to_string(b) + "_L" + lattice_tag(L) + ".csv";
      auto f = dir.csv(name);
      f << "k1,k2,k3,m1,m2,m3,frobenius\n" << std::setprecision(17);
      SparsityReport r;
      r.boundary = b;
      r.L0 = s.cfg.L0;
      r.d = s.cfg.levels();
      r.bound = 1;
      for (int l = 0; l < 3; ++l)
        r.bound *= b == Boundary::Box ? 2 * std::min(r.L0, L[l] - 1) + 1 : std::min(2 * r.L0 + 1, L[l]);
      for (Index i = 0; i < s.V.cells(); ++i) {
        Index count = 0;
        const Lattice3 k = cell_from_index(i, L);
        for (Index j = 0; j < s.V.cells(); ++j) {
          const Lattice3 m = cell_from_index(j, L);
          const auto* blk = s.V.block_at(k, m);
          if (!blk || !(blk->array() != 0.0).any()) continue;
          ++count;
          f << k[0] << ',' << k[1] << ',' << k[2] << ',' << m[0] << ',' << m[1] << ',' << m[2] << ','
            << blk->norm() << '\n';
        }
        r.max_per_row = std::max(r.max_per_row, count);
      }
      log << name << ": L0=" << r.L0 << " max nonzero blocks per row=" << r.max_per_row
          << " bound=" << r.bound << '\n';
      if (r.max_per_row > r.bound)
        throw NumericalError("sparsity: " + std::to_string(r.max_per_row) +
                             " nonzero blocks in a row exceed the band bound " + std::to_string(r.bound));
      reports.push_back(r);
    }
  return reports;
}

struct EnergyRow {
  Lattice3 L{1, 1, 1};
  std::optional<double> box, periodic;
};

struct EnergyResult {
  std::vector<EnergyRow> rows;
  bool box_relaxes = true, periodic_relaxes = true;
};

/// True when |E_{i+1} - E_i| strictly decreases along the sequence.
inline bool successive_differences_shrink(const std::vector<double>& e) {
  for (std::size_t i = 2; i < e.size(); ++i)
    if (!(std::abs(e[i] - e[i - 1]) < std::abs(e[i - 1] - e[i - 2]))) return false;
  return true;
}

inline EnergyResult run_energy(const ExperimentConfig& x, std::ostream& log = std::cout) {
  EnergyResult res;
  std::vector<double> eb, ep;
  for (const Lattice3& L : x.lattices()) {
    EnergyRow row;
    row.L = L;
    for (Boundary b : x.boundaries()) {
      const LatticeSystem s = build_system(x, L, b);
      const Spectrum sp = solve_system(s, x.dense_cap);
      const double e = average_energy_per_cell(sp, x.occupied_per_cell * s.cfg.cells(), s.cfg.cells());
      (b == Boundary::Box ? row.box : row.periodic) = e;
      (b == Boundary::Box ? eb : ep).push_back(e);
    }
    log << "L=" << lattice_tag(L) << std::setprecision(12)
        << " box=" << (row.box ? std::to_string(*row.box) : "--")
        << " periodic=" << (row.periodic ? std::to_string(*row.periodic) : "--") << std::endl;
    res.rows.push_back(row);
  }
  res.box_relaxes = successive_differences_shrink(eb);
  res.periodic_relaxes = successive_differences_shrink(ep);
  return res;
}

inline EnergyResult cmd_energy(const ExperimentConfig& x, std::ostream& log = std::cout) {
  EnergyResult res = run_energy(x, log);
  OutputDir dir(x);
  auto f = dir.csv("energy.csv");
  const auto modes = x.boundaries();
  f << "L1,L2,L3";
  for (Boundary b : modes) f << ",E_" << to_string(b);
  f << '\n' << std::setprecision(17);
  for (const auto& r : res.rows) {
    f << r.L[0] << ',' << r.L[1] << ',' << r.L[2];
    for (Boundary b : modes) f << ',' << *(b == Boundary::Box ? r.box : r.periodic);
    f << '\n';
  }
  if (res.rows.size() >= 3) {
    log << "relaxation: box=" << (res.box_relaxes ? "shrinking" : "NOT shrinking")
        << " periodic=" << (res.periodic_relaxes ? "shrinking" : "NOT shrinking") << '\n';
    for (Boundary b : modes)
      if (!(b == Boundary::Box ? res.box_relaxes : res.periodic_relaxes))
        throw NumericalError(std::string("energy: successive differences do not shrink in ") +
                             to_string(b) + " mode");
  }
  return res;
}

}  // namespace latticeham
