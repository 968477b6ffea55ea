#pragma once

// Nuclear Coulomb potentials of lattice systems as canonical tensors. Lattice
// sums are carried out inside each mode factor by summing shifted windows of
// the reference tensor, so the rank stays at (number of nuclei) x R.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "latticeham/block_tensor.hpp"
#include "latticeham/coulomb_kernel.hpp"
#include "latticeham/cp_tensor.hpp"
#include "latticeham/error.hpp"
#include "latticeham/parallel.hpp"

namespace latticeham {

enum class Boundary { Box, Periodic };

inline const char* to_string(Boundary b) { return b == Boundary::Box ? "box" : "periodic"; }

/// Nucleus with position relative to the centre of its unit cell.
struct Nucleus {
  std::array<double, 3> position{0, 0, 0};
  double charge = 1.0;
};

/// Lattice of L1 x L2 x L3 unit cells. Cells repeat with period b0 = n0 h;
/// each cell carries a window of n >= n0 grid cells (edge b = n h) centred on
/// it, and nuclei sit strictly inside the formation cube of edge b0.
struct LatticeConfig {
  Lattice3 L{1, 1, 1};
  double h = 0.1;
  Index n0 = 30;
  Index n = 150;
  std::vector<Nucleus> nuclei;
  Boundary boundary = Boundary::Box;
  Index L0 = 1;

  double b() const { return static_cast<double>(n) * h; }
  double b0() const { return static_cast<double>(n0) * h; }
  Index cells() const { return lattice_cells(L); }
  int levels() const { return lattice_levels(L); }

  void validate() const {
    for (auto x : L)
      if (x < 1) throw InvalidArgument("LatticeConfig: lattice sizes must be >= 1");
    if (!(h > 0)) throw InvalidArgument("LatticeConfig: h must be positive");
    if (n0 < 1 || n < n0) throw InvalidArgument("LatticeConfig: need 1 <= n0 <= n");
    if (n < 2) throw InvalidArgument("LatticeConfig: n must be >= 2");
    if (L0 < 0) throw InvalidArgument("LatticeConfig: L0 must be >= 0");
    if (nuclei.empty()) throw InvalidArgument("LatticeConfig: at least one nucleus required");
    for (std::size_t v = 0; v < nuclei.size(); ++v) {
      const auto& nu = nuclei[v];
      if (!(nu.charge > 0))
        throw InvalidArgument("LatticeConfig: nucleus " + std::to_string(v) + " charge must be positive");
      for (int l = 0; l < 3; ++l)
        if (!(std::abs(nu.position[l]) < 0.5 * b0()))
          throw InvalidArgument("LatticeConfig: nucleus " + std::to_string(v) +
                                " lies outside the formation domain");
    }
  }

  /// Cells of the target grid along axis l: the supercell grid
  /// N_L = n0 (L - 1) + n for Box, the central unit cell n for Periodic.
  Index grid_size(int l) const {
    return boundary == Boundary::Box ? n0 * (L[l] - 1) + n : n;
  }
  Lattice3 grid_dims() const { return {grid_size(0), grid_size(1), grid_size(2)}; }
  GridSpec target_grid() const { return GridSpec::centered(grid_dims(), h); }

  /// Cell centres along axis l in units of b0, in the frame of the target grid.
  /// Box: the supercell is centred at the origin. Periodic: the L translates
  /// s = k - floor(L/2) around the central cell.
  std::vector<double> translates(int l) const {
    std::vector<double> t(static_cast<std::size_t>(L[l]));
    for (Index k = 0; k < L[l]; ++k)
      t[static_cast<std::size_t>(k)] =
          boundary == Boundary::Box ? static_cast<double>(k) - 0.5 * static_cast<double>(L[l] - 1)
                                    : static_cast<double>(k - L[l] / 2);
    return t;
  }
};

/// Restriction of a length-ñ vector (per mode) to `length` entries from `offset`.
struct WindowOp {
  std::array<Index, 3> offset{0, 0, 0};
  std::array<Index, 3> length{0, 0, 0};
};

inline Eigen::VectorXd window(const Eigen::VectorXd& source, Index offset, Index length) {
  if (offset < 0 || length < 0 || offset + length > source.size())
    throw DimensionError("window: [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") exceeds source length " +
                         std::to_string(source.size()));
  return source.segment(offset, length);
}

inline CanonicalTensor3 window(const CanonicalTensor3& source, const WindowOp& op) {
  std::array<Eigen::MatrixXd, 3> f;
  for (int l = 0; l < 3; ++l) {
    const auto& s = source.factor(l);
    if (op.offset[l] < 0 || op.offset[l] + op.length[l] > s.rows())
      throw DimensionError("window: mode " + std::to_string(l) + " out of bounds");
    f[l] = s.middleRows(op.offset[l], op.length[l]);
  }
  return CanonicalTensor3(source.weights(), std::move(f));
}

namespace detail {

// Window offset placing a point charge at `pos` of a centred target grid of
// `target` cells when the reference grid has `ref` cells: (ref - target)/2 - pos/h.
inline Index window_offset(Index ref, Index target, double pos, double h) {
  const double o = 0.5 * static_cast<double>(ref - target) - pos / h;
  const double r = std::round(o);
  if (std::abs(o - r) > 1e-6)
    throw InvalidArgument("lattice potential: nucleus translate at " + std::to_string(pos) +
                          " is not aligned with the grid of the reference tensor");
  const auto off = static_cast<Index>(r);
  if (off < 0 || off + target > ref)
    throw InvalidArgument("lattice potential: reference grid too small (" + std::to_string(ref) +
                          " cells) for window of " + std::to_string(target) + " cells at offset " +
                          std::to_string(off));
  return off;
}

// Rank M0 * R tensor on `target` cells summing windows of `ref` for every
// nucleus and every combination of the per-axis translates (units of b0).
inline CanonicalTensor3 lattice_sum_tensor(const LatticeConfig& cfg, const CanonicalTensor3& ref,
                                           const Lattice3& target,
                                           const std::array<std::vector<double>, 3>& translates) {
  const Index r = ref.rank();
  const auto m = static_cast<Index>(cfg.nuclei.size());
  std::array<Eigen::MatrixXd, 3> f;
  for (int l = 0; l < 3; ++l) f[l].setZero(target[l], m * r);
  Eigen::VectorXd w(m * r);

  std::array<std::vector<std::vector<Index>>, 3> offsets;
  for (int l = 0; l < 3; ++l) {
    offsets[l].resize(static_cast<std::size_t>(m));
    for (Index v = 0; v < m; ++v)
      for (double t : translates[l])
        offsets[l][static_cast<std::size_t>(v)].push_back(
            window_offset(ref.dims()[l], target[l],
                          t * cfg.b0() + cfg.nuclei[static_cast<std::size_t>(v)].position[l], cfg.h));
  }

  parallel_for(static_cast<std::size_t>(m * r), [&](std::size_t idx) {
    const auto col = static_cast<Index>(idx);
    const Index v = col / r, q = col % r;
    w[col] = cfg.nuclei[static_cast<std::size_t>(v)].charge * ref.weights()[q];
    for (int l = 0; l < 3; ++l) {
      const auto src = ref.factor(l).col(q);
      auto dst = f[l].col(col);
      for (Index off : offsets[l][static_cast<std::size_t>(v)]) dst += src.segment(off, target[l]);
    }
  });
  return CanonicalTensor3(std::move(w), std::move(f));
}

inline void require_finite_reference(const CanonicalTensor3& ref) {
  if (ref.rank() == 0) throw InvalidArgument("lattice potential: empty reference tensor");
}

}  // namespace detail

/// Reference grid size per axis for which every nucleus translate of cfg
/// windows onto the target grid by pure restriction.
inline Lattice3 required_reference_size(const LatticeConfig& cfg) {
  cfg.validate();
  Lattice3 out;
  for (int l = 0; l < 3; ++l) {
    const Index target = cfg.grid_size(l);
    double reach = 0;
    long parity = -1;
    for (const auto& nu : cfg.nuclei)
      for (double t : cfg.translates(l)) {
        const double p = t * cfg.b0() + nu.position[l];
        const double twice = 2.0 * p / cfg.h;
        const double rt = std::round(twice);
        if (std::abs(twice - rt) > 1e-6)
          throw InvalidArgument("lattice potential: nucleus coordinate " + std::to_string(nu.position[l]) +
                                " must be a multiple of h/2");
        const long par = positive_mod(static_cast<Index>(rt), 2);
        if (parity >= 0 && par != parity)
          throw InvalidArgument(
              "lattice potential: nuclei must share their alignment with the grid "
              "(all on cell centres or all on cell faces per axis)");
        parity = par;
        reach = std::max(reach, std::abs(rt));
      }
    auto extra = static_cast<Index>(reach);
    // The window offset (ref - target)/2 - p/h is integral iff extra has the parity of 2p/h.
    if (positive_mod(extra, 2) != parity) ++extra;
    out[l] = target + extra;
    if (out[l] < 2) out[l] += 2;
  }
  return out;
}

/// Reach of the Coulomb kernel needed on a reference grid of `ref` cells.
inline double reference_radius(const Lattice3& ref, double h) {
  double s = 0;
  for (auto x : ref) s += 0.25 * static_cast<double>(x * x) * h * h;
  return std::sqrt(s);
}

/// Potential of the nuclei of one cell on the n^3 cell grid.
inline CanonicalTensor3 unit_cell_potential(const LatticeConfig& cfg, const CanonicalTensor3& ref) {
  cfg.validate();
  detail::require_finite_reference(ref);
  return detail::lattice_sum_tensor(cfg, ref, {cfg.n, cfg.n, cfg.n}, {{{0.0}, {0.0}, {0.0}}});
}

/// Sum over all cells of a Box lattice on the N_L grid of the supercell.
inline CanonicalTensor3 box_lattice_potential(const LatticeConfig& cfg, const CanonicalTensor3& ref) {
  cfg.validate();
  detail::require_finite_reference(ref);
  LatticeConfig c = cfg;
  c.boundary = Boundary::Box;
  return detail::lattice_sum_tensor(c, ref, c.grid_dims(),
                                    {c.translates(0), c.translates(1), c.translates(2)});
}

/// Sum of all L1 L2 L3 translates restricted to the central cell n^3 grid.
inline CanonicalTensor3 periodic_cell_potential(const LatticeConfig& cfg, const CanonicalTensor3& ref) {
  cfg.validate();
  detail::require_finite_reference(ref);
  LatticeConfig c = cfg;
  c.boundary = Boundary::Periodic;
  return detail::lattice_sum_tensor(c, ref, c.grid_dims(),
                                    {c.translates(0), c.translates(1), c.translates(2)});
}

/// Literal sum of Z / |x - a - b0 k| over nuclei and cell translates, with
/// probes in the frame of cfg's target grid.
inline std::vector<double> direct_sum_oracle(const LatticeConfig& cfg,
                                             const std::vector<std::array<double, 3>>& probes) {
  cfg.validate();
  const std::array<std::vector<double>, 3> t{cfg.translates(0), cfg.translates(1), cfg.translates(2)};
  std::vector<double> out;
  out.reserve(probes.size());
  for (const auto& x : probes) {
    double s = 0;
    for (const auto& nu : cfg.nuclei)
      for (double t0 : t[0])
        for (double t1 : t[1])
          for (double t2 : t[2]) {
            const double dx = x[0] - nu.position[0] - t0 * cfg.b0();
            const double dy = x[1] - nu.position[1] - t1 * cfg.b0();
            const double dz = x[2] - nu.position[2] - t2 * cfg.b0();
            const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (r <= 1e-12 * cfg.b()) throw InvalidArgument("direct_sum_oracle: probe coincides with a nucleus");
            s += nu.charge / r;
          }
    out.push_back(s);
  }
  return out;
}

}  // namespace latticeham
