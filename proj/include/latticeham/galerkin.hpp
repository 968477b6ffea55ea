#pragma once

// Galerkin matrices of the core Hamiltonian in a lattice-replicated separable
// Gaussian basis. Every entry is reduced to 1D vector operations per mode.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "latticeham/block_tensor.hpp"
#include "latticeham/coulomb_kernel.hpp"
#include "latticeham/cp_tensor.hpp"
#include "latticeham/error.hpp"
#include "latticeham/lattice_potential.hpp"
#include "latticeham/parallel.hpp"

namespace latticeham {

/// exp(-sum_l exponent_l (x_l - center_l)^2), centre relative to the cell centre.
struct GaussianGenerator {
  std::array<double, 3> center{0, 0, 0};
  std::array<double, 3> exponent{1, 1, 1};
};

/// m0 generating Gaussians of one cell, sampled on two 1D grids per mode:
/// cell averages on the n-cell potential window, and interior nodal values
/// on the FEM grid of spacing h / refine over the same window. Generators of
/// other cells are exact index shifts (n0 cells, n0 * refine nodes per cell).
class SeparableBasis {
 public:
  SeparableBasis(std::vector<GaussianGenerator> generators, double h, Index n, Index n0,
                 Index refine = 1)
      : gens_(std::move(generators)), h_(h), n_(n), n0_(n0), refine_(refine) {
    if (gens_.empty()) throw InvalidArgument("SeparableBasis: need at least one generator");
    if (!(h > 0) || n < 2 || n0 < 1 || n0 > n || refine < 1)
      throw InvalidArgument("SeparableBasis: invalid grid parameters");
    const auto m0 = static_cast<Index>(gens_.size());
    const double left = -0.5 * static_cast<double>(n) * h;
    for (int l = 0; l < 3; ++l) {
      avg_[l].resize(n, m0);
      nodal_[l].resize(fem_nodes(), m0);
      for (Index mu = 0; mu < m0; ++mu) {
        const auto& g = gens_[static_cast<std::size_t>(mu)];
        if (!(g.exponent[l] > 0)) throw InvalidArgument("SeparableBasis: exponents must be positive");
        const double t = std::sqrt(g.exponent[l]);
        for (Index i = 0; i < n; ++i) {
          const double a = left + static_cast<double>(i) * h - g.center[l];
          avg_[l](i, mu) = gaussian_cell_integral(t, a, a + h) / h;
        }
        for (Index i = 0; i < fem_nodes(); ++i) {
          const double x = left + static_cast<double>(i + 1) * fem_h() - g.center[l];
          nodal_[l](i, mu) = std::exp(-g.exponent[l] * x * x);
        }
      }
    }
  }

  static SeparableBasis for_lattice(const LatticeConfig& cfg, std::vector<GaussianGenerator> gens,
                                    Index refine = 1) {
    return SeparableBasis(std::move(gens), cfg.h, cfg.n, cfg.n0, refine);
  }

  Index m0() const { return static_cast<Index>(gens_.size()); }
  double h() const { return h_; }
  Index n() const { return n_; }
  Index n0() const { return n0_; }
  Index refine() const { return refine_; }
  double fem_h() const { return h_ / static_cast<double>(refine_); }
  Index fem_nodes() const { return n_ * refine_ - 1; }
  const std::vector<GaussianGenerator>& generators() const { return gens_; }
  /// n x m0 cell averages over the window of the cell.
  const Eigen::MatrixXd& cell_averages(int mode) const { return avg_[mode]; }
  /// (n refine - 1) x m0 nodal values at interior FEM nodes of the window.
  const Eigen::MatrixXd& nodal_values(int mode) const { return nodal_[mode]; }

 private:
  std::vector<GaussianGenerator> gens_;
  double h_;
  Index n_, n0_, refine_;
  std::array<Eigen::MatrixXd, 3> avg_, nodal_;
};

/// Gaussians with the given exponents, isotropic and centred in the cell.
inline std::vector<GaussianGenerator> centered_generators(const std::vector<double>& exponents) {
  std::vector<GaussianGenerator> g;
  for (double a : exponents) g.push_back({{0, 0, 0}, {a, a, a}});
  return g;
}

struct OverlapResult {
  Index L0 = 0;       // band used for the lattice: `needed`, or max L when it does not decay
  Index needed = 0;   // smallest separation beyond which every factor product is <= threshold
  bool decayed = true;
};

/// Smallest L0 such that, in every mode and for every generator pair, the
/// pointwise product of two functions more than L0 cells apart stays below
/// `threshold` on both grids. Functions more than L0 cells apart are then
/// treated as non-overlapping.
inline OverlapResult detect_overlap_constant(const SeparableBasis& basis, double threshold,
                                             const Lattice3& L) {
  if (!(threshold > 0)) throw InvalidArgument("detect_overlap_constant: threshold must be positive");
  const Index smax = (basis.n() + basis.n0() - 1) / basis.n0();
  Index needed = 0;
  auto max_product = [](const Eigen::MatrixXd& g, Index mu, Index nu, Index shift) {
    double worst = 0;
    for (Index i = shift; i < g.rows(); ++i)
      worst = std::max(worst, std::abs(g(i, mu) * g(i - shift, nu)));
    return worst;
  };
  for (int l = 0; l < 3; ++l)
    for (Index mu = 0; mu < basis.m0(); ++mu)
      for (Index nu = 0; nu < basis.m0(); ++nu)
        for (Index s = 1; s <= smax; ++s) {
          const double p = std::max(max_product(basis.cell_averages(l), mu, nu, s * basis.n0()),
                                    max_product(basis.nodal_values(l), mu, nu,
                                                s * basis.n0() * basis.refine()));
          if (p > threshold) needed = std::max(needed, s);
        }
  const Index lmax = std::max({L[0], L[1], L[2]});
  OverlapResult r;
  r.needed = needed;
  r.decayed = needed < lmax;
  r.L0 = r.decayed ? needed : lmax;
  return r;
}

namespace detail {

inline bool lex_positive(const Lattice3& c) {
  for (auto x : c)
    if (x != 0) return x > 0;
  return false;
}

inline Lattice3 negate(const Lattice3& c) { return {-c[0], -c[1], -c[2]}; }

// (m0*m0) x R table with entry (mu + m0 nu, q) = sum_i g_mu[i - sa] g_nu[i - sb] P(i, q),
// where the generators' n-cell windows start at rows sa and sb of the potential grid.
inline Eigen::MatrixXd potential_pair_table(const SeparableBasis& basis, const Eigen::MatrixXd& P,
                                            int mode, Index sa, Index sb) {
  const Index m0 = basis.m0(), n = basis.n();
  const Index lo = std::max({sa, sb, Index{0}});
  const Index hi = std::min({sa + n, sb + n, static_cast<Index>(P.rows())});
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m0 * m0, P.cols());
  if (hi <= lo) return t;
  const auto& g = basis.cell_averages(mode);
  const Index len = hi - lo;
  const auto rows = P.middleRows(lo, len);
  Eigen::VectorXd prod(len);
  for (Index nu = 0; nu < m0; ++nu)
    for (Index mu = 0; mu < m0; ++mu) {
      prod = g.col(mu).segment(lo - sa, len).cwiseProduct(g.col(nu).segment(lo - sb, len));
      t.row(mu + m0 * nu).noalias() = prod.transpose() * rows;
    }
  return t;
}

inline Eigen::MatrixXd combine_tables(const std::array<const Eigen::MatrixXd*, 3>& t,
                                      const Eigen::VectorXd& w, Index m0) {
  const Eigen::VectorXd e =
      (t[0]->array() * t[1]->array() * t[2]->array()).matrix() * w;
  return Eigen::Map<const Eigen::MatrixXd>(e.data(), m0, m0);
}

inline void symmetrize(Eigen::MatrixXd& b) { b = 0.5 * (b + b.transpose()).eval(); }

// Sets every circulant generator's partner at -c to its transpose and
// symmetrizes self-paired generators, so the generated matrix is exactly symmetric.
inline void enforce_circulant_symmetry(BlockCoefficientTensor& t) {
  const Lattice3& L = t.dims();
  for (Index i = 0; i < t.cells(); ++i) {
    const Lattice3 c = cell_from_index(i, L);
    Lattice3 p;
    for (int l = 0; l < 3; ++l) p[l] = positive_mod(-c[l], L[l]);
    const Index j = cell_index(p, L);
    if (j == i)
      symmetrize(t.generator(c));
    else if (i < j)
      t.generator(p) = t.generator(c).transpose();
  }
}

// x^T T y for the tridiagonal T = tridiag(off, diag, off) on an infinite node
// line, with x occupying nodes [sx, sx + len) and y nodes [sy, sy + len).
inline double tridiagonal_form(const Eigen::VectorXd& x, Index sx, const Eigen::VectorXd& y, Index sy,
                               double diag, double off) {
  const Index len = x.size();
  auto Y = [&](Index g) { return (g >= sy && g < sy + len) ? y[g - sy] : 0.0; };
  double s = 0;
  for (Index j = 0; j < len; ++j) {
    const Index g = sx + j;
    const double ty = diag * Y(g) + off * (Y(g - 1) + Y(g + 1));
    s += x[j] * ty;
  }
  return s;
}

}  // namespace detail

/// 1D FEM operators of the hat basis with spacing h on `nodes` nodes:
/// stiffness (1/h) tridiag(-1, 2, -1) and mass (h/6) tridiag(1, 4, 1).
struct Fem1D {
  double h = 1;
  Index nodes = 2;
  Boundary boundary = Boundary::Box;

  Eigen::MatrixXd stiffness() const { return assemble(2.0 / h, -1.0 / h); }
  Eigen::MatrixXd mass() const { return assemble(4.0 * h / 6.0, h / 6.0); }

 private:
  Eigen::MatrixXd assemble(double diag, double off) const {
    if (nodes < 2 || !(h > 0)) throw InvalidArgument("Fem1D: need nodes >= 2 and h > 0");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nodes, nodes);
    for (Index i = 0; i < nodes; ++i) {
      m(i, i) = diag;
      if (i + 1 < nodes) m(i, i + 1) = m(i + 1, i) = off;
    }
    if (boundary == Boundary::Periodic) {
      if (nodes < 3) throw InvalidArgument("Fem1D: periodic wrap needs at least 3 nodes");
      m(0, nodes - 1) += off;
      m(nodes - 1, 0) += off;
    }
    return m;
  }
};

/// Mode-l Galerkin blocks of the 1D FEM mass and stiffness between a
/// generator in cell m + d (rows) and one in cell m (columns), d in [-band, band].
struct ModeLineBlocks {
  Index band = 0;
  std::vector<Eigen::MatrixXd> mass, stiffness;
  const Eigen::MatrixXd& mass_at(Index d) const { return mass[static_cast<std::size_t>(d + band)]; }
  const Eigen::MatrixXd& stiffness_at(Index d) const {
    return stiffness[static_cast<std::size_t>(d + band)];
  }
};

inline ModeLineBlocks fem_line_blocks(const SeparableBasis& basis, int mode, Index band) {
  const Index m0 = basis.m0();
  const double hh = basis.fem_h();
  const auto& g = basis.nodal_values(mode);
  ModeLineBlocks out;
  out.band = band;
  out.mass.assign(static_cast<std::size_t>(2 * band + 1), Eigen::MatrixXd::Zero(m0, m0));
  out.stiffness = out.mass;
  for (Index d = 0; d <= band; ++d) {
    Eigen::MatrixXd m(m0, m0), k(m0, m0);
    const Index shift = d * basis.n0() * basis.refine();
    for (Index mu = 0; mu < m0; ++mu)
      for (Index nu = 0; nu < m0; ++nu) {
        const Eigen::VectorXd x = g.col(mu), y = g.col(nu);
        m(mu, nu) = detail::tridiagonal_form(x, shift, y, 0, 4.0 * hh / 6.0, hh / 6.0);
        k(mu, nu) = detail::tridiagonal_form(x, shift, y, 0, 2.0 / hh, -1.0 / hh);
      }
    if (d == 0) {
      detail::symmetrize(m);
      detail::symmetrize(k);
    }
    out.mass[static_cast<std::size_t>(band + d)] = m;
    out.stiffness[static_cast<std::size_t>(band + d)] = k;
    out.mass[static_cast<std::size_t>(band - d)] = m.transpose();
    out.stiffness[static_cast<std::size_t>(band - d)] = k.transpose();
  }
  return out;
}

/// Laplacian (A) and mass (S) block tensors plus, in periodic mode, their
/// per-mode circulant sequences (S is one separable term, A three).
struct LaplacianMassBlocks {
  BlockCoefficientTensor A, S;
  std::array<std::vector<Eigen::MatrixXd>, 3> mass_modes, stiffness_modes;

  std::vector<FactorizedTerm> mass_terms() const { return {FactorizedTerm{mass_modes}}; }
  std::vector<FactorizedTerm> laplacian_terms() const {
    std::vector<FactorizedTerm> terms;
    for (int p = 0; p < 3; ++p) {
      FactorizedTerm t{mass_modes};
      t.modes[p] = stiffness_modes[p];
      terms.push_back(std::move(t));
    }
    return terms;
  }
};

namespace detail {

inline Index mode_band(const LatticeConfig& cfg, int l) {
  if (cfg.L[l] == 1) return 0;
  return cfg.boundary == Boundary::Box ? std::min(cfg.L0, cfg.L[l] - 1) : cfg.L0;
}

// Circulant sequence of length L: sum of line blocks whose offset is congruent mod L,
// with the partner at -c set to the transpose.
inline std::vector<Eigen::MatrixXd> fold_circulant(const ModeLineBlocks& b, Index L, bool stiff) {
  const Index m0 = b.mass.front().rows();
  std::vector<Eigen::MatrixXd> c(static_cast<std::size_t>(L), Eigen::MatrixXd::Zero(m0, m0));
  for (Index d = -b.band; d <= b.band; ++d)
    c[static_cast<std::size_t>(positive_mod(d, L))] += stiff ? b.stiffness_at(d) : b.mass_at(d);
  for (Index k = 0; k < L; ++k) {
    const Index p = positive_mod(-k, L);
    if (p == k)
      symmetrize(c[static_cast<std::size_t>(k)]);
    else if (k < p)
      c[static_cast<std::size_t>(p)] = c[static_cast<std::size_t>(k)].transpose();
  }
  return c;
}

inline void check_basis_matches(const SeparableBasis& basis, const LatticeConfig& cfg) {
  if (basis.n() != cfg.n || basis.n0() != cfg.n0 || std::abs(basis.h() - cfg.h) > 1e-14 * cfg.h)
    throw DimensionError("galerkin: basis grid does not match the lattice configuration");
}

}  // namespace detail

/// Mass S = prod_l S^(l) and Laplacian A = sum_p A^(p) prod_{l != p} S^(l)
/// (Hadamard products of 1D Gram blocks). Box: SymmetricToeplitz generators;
/// Periodic: Circulant generators. Offsets beyond L0 are exactly zero.
inline LaplacianMassBlocks assemble_laplacian_mass_blocks(const SeparableBasis& basis,
                                                          const LatticeConfig& cfg) {
  cfg.validate();
  detail::check_basis_matches(basis, cfg);
  const Index m0 = basis.m0();
  std::array<ModeLineBlocks, 3> line;
  for (int l = 0; l < 3; ++l) line[l] = fem_line_blocks(basis, l, detail::mode_band(cfg, l));

  LaplacianMassBlocks out;
  if (cfg.boundary == Boundary::Periodic) {
    for (int l = 0; l < 3; ++l) {
      out.mass_modes[l] = detail::fold_circulant(line[l], cfg.L[l], false);
      out.stiffness_modes[l] = detail::fold_circulant(line[l], cfg.L[l], true);
    }
    out.S = BlockCoefficientTensor(BlockTag::Circulant, cfg.L, m0, cfg.L0);
    out.A = out.S;
    for (Index i = 0; i < out.S.cells(); ++i) {
      const Lattice3 c = cell_from_index(i, cfg.L);
      const auto M = [&](int l) -> const Eigen::MatrixXd& {
        return out.mass_modes[l][static_cast<std::size_t>(c[l])];
      };
      const auto K = [&](int l) -> const Eigen::MatrixXd& {
        return out.stiffness_modes[l][static_cast<std::size_t>(c[l])];
      };
      out.S.generator(c) = M(0).cwiseProduct(M(1)).cwiseProduct(M(2));
      out.A.generator(c) = K(0).cwiseProduct(M(1)).cwiseProduct(M(2)) +
                           M(0).cwiseProduct(K(1)).cwiseProduct(M(2)) +
                           M(0).cwiseProduct(M(1)).cwiseProduct(K(2));
    }
    return out;
  }

  out.S = BlockCoefficientTensor(BlockTag::SymmetricToeplitz, cfg.L, m0, cfg.L0);
  out.A = out.S;
  for (int l = 0; l < 3; ++l) {
    out.mass_modes[l].assign(static_cast<std::size_t>(2 * cfg.L[l] - 1), Eigen::MatrixXd::Zero(m0, m0));
    out.stiffness_modes[l] = out.mass_modes[l];
    for (Index d = -line[l].band; d <= line[l].band; ++d) {
      out.mass_modes[l][static_cast<std::size_t>(d + cfg.L[l] - 1)] = line[l].mass_at(d);
      out.stiffness_modes[l][static_cast<std::size_t>(d + cfg.L[l] - 1)] = line[l].stiffness_at(d);
    }
  }
  Lattice3 band;
  for (int l = 0; l < 3; ++l) band[l] = line[l].band;
  for_each_index(detail::negate(band), band, [&](const Lattice3& c) {
    const auto M = [&](int l) -> const Eigen::MatrixXd& { return line[l].mass_at(c[l]); };
    const auto K = [&](int l) -> const Eigen::MatrixXd& { return line[l].stiffness_at(c[l]); };
    out.S.generator(c) = M(0).cwiseProduct(M(1)).cwiseProduct(M(2));
    out.A.generator(c) = K(0).cwiseProduct(M(1)).cwiseProduct(M(2)) +
                         M(0).cwiseProduct(K(1)).cwiseProduct(M(2)) +
                         M(0).cwiseProduct(M(1)).cwiseProduct(K(2));
  });
  return out;
}

/// Nuclear attraction blocks V_km(mu, nu) = <G_k,mu .* G_m,nu, P> (positive
/// sign). Periodic: circulant generators from a central-cell potential;
/// Box: banded blocks from a supercell potential.
inline BlockCoefficientTensor assemble_nuclear_blocks(const SeparableBasis& basis,
                                                      const CanonicalTensor3& potential,
                                                      const LatticeConfig& cfg) {
  cfg.validate();
  detail::check_basis_matches(basis, cfg);
  const Lattice3 grid = cfg.grid_dims();
  if (potential.dims() != Dims3{grid[0], grid[1], grid[2]})
    throw DimensionError("assemble_nuclear_blocks: potential grid does not match the " +
                         std::string(to_string(cfg.boundary)) + " target grid");
  const Index m0 = basis.m0(), n0 = basis.n0();
  const Eigen::VectorXd& w = potential.weights();
  const Lattice3& L = cfg.L;
  Lattice3 band;
  for (int l = 0; l < 3; ++l) band[l] = detail::mode_band(cfg, l);

  using Key = std::pair<Index, Index>;
  std::array<std::map<Key, Eigen::MatrixXd>, 3> tables;
  auto table = [&](int l, Index sa, Index sb) -> const Eigen::MatrixXd& {
    return tables[l].at({sa, sb});
  };

  if (cfg.boundary == Boundary::Periodic) {
    for (int l = 0; l < 3; ++l)
      for (Index d = 0; d <= band[l]; ++d) {
        for (Key k : {Key{d * n0, 0}, Key{0, -d * n0}, Key{-d * n0, 0}, Key{0, d * n0}})
          if (!tables[l].count(k))
            tables[l][k] = detail::potential_pair_table(basis, potential.factor(l), l, k.first, k.second);
      }
    BlockCoefficientTensor V(BlockTag::Circulant, L, m0, cfg.L0);
    std::vector<Lattice3> offsets;
    for_each_index(detail::negate(band), band, [&](const Lattice3& d) {
      if (d == Lattice3{0, 0, 0} || detail::lex_positive(d)) offsets.push_back(d);
    });
    std::vector<Eigen::MatrixXd> blocks(offsets.size());
    parallel_for(offsets.size(), [&](std::size_t i) {
      const Lattice3& d = offsets[i];
      std::array<const Eigen::MatrixXd*, 3> t1, t2;
      for (int l = 0; l < 3; ++l) {
        t1[l] = &table(l, d[l] * n0, 0);
        t2[l] = &table(l, 0, -d[l] * n0);
      }
      blocks[i] = 0.5 * (detail::combine_tables(t1, w, m0) + detail::combine_tables(t2, w, m0));
    });
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const Lattice3& d = offsets[i];
      Lattice3 c, p;
      for (int l = 0; l < 3; ++l) {
        c[l] = positive_mod(d[l], L[l]);
        p[l] = positive_mod(-d[l], L[l]);
      }
      if (d == Lattice3{0, 0, 0}) {
        Eigen::MatrixXd b = blocks[i];
        detail::symmetrize(b);
        V.generator(c) += b;
      } else {
        V.generator(c) += blocks[i];
        V.generator(p) += blocks[i].transpose();
      }
    }
    detail::enforce_circulant_symmetry(V);
    return V;
  }

  for (int l = 0; l < 3; ++l)
    for (Index k = 0; k < L[l]; ++k)
      for (Index c = -band[l]; c <= band[l]; ++c) {
        const Index m = k - c;
        if (m < 0 || m >= L[l]) continue;
        tables[l][{k * n0, m * n0}] =
            detail::potential_pair_table(basis, potential.factor(l), l, k * n0, m * n0);
      }
  BlockCoefficientTensor V(BlockTag::GeneralBanded, L, m0, cfg.L0);
  const Index cells = lattice_cells(L);
  parallel_for(static_cast<std::size_t>(cells), [&](std::size_t i) {
    const Lattice3 k = cell_from_index(static_cast<Index>(i), L);
    for_each_index(detail::negate(band), band, [&](const Lattice3& c) {
      if (!(c == Lattice3{0, 0, 0} || detail::lex_positive(c))) return;
      Lattice3 m;
      for (int l = 0; l < 3; ++l) {
        m[l] = k[l] - c[l];
        if (m[l] < 0 || m[l] >= L[l]) return;
      }
      std::array<const Eigen::MatrixXd*, 3> t;
      for (int l = 0; l < 3; ++l) t[l] = &table(l, k[l] * n0, m[l] * n0);
      Eigen::MatrixXd b = detail::combine_tables(t, w, m0);
      if (c == Lattice3{0, 0, 0}) detail::symmetrize(b);
      V.banded(k, c) = std::move(b);
    });
  });
  for (Index i = 0; i < cells; ++i) {
    const Lattice3 k = cell_from_index(i, L);
    for_each_index(detail::negate(band), band, [&](const Lattice3& c) {
      if (c == Lattice3{0, 0, 0} || detail::lex_positive(c)) return;
      Lattice3 m;
      for (int l = 0; l < 3; ++l) {
        m[l] = k[l] - c[l];
        if (m[l] < 0 || m[l] >= L[l]) return;
      }
      V.banded(k, c) = V.banded(m, detail::negate(c)).transpose();
    });
  }
  return V;
}

/// Banded copy of a symmetric block Toeplitz tensor; fails if the Toeplitz
/// generators are nonzero beyond the band.
inline BlockCoefficientTensor toeplitz_to_banded(const BlockCoefficientTensor& T, Index L0) {
  if (T.tag() != BlockTag::SymmetricToeplitz)
    throw InvalidArgument("toeplitz_to_banded: expected a symmetric Toeplitz tensor");
  BlockCoefficientTensor B(BlockTag::GeneralBanded, T.dims(), T.m0(), L0);
  for_each_index(T.offset_lo(), T.offset_hi(), [&](const Lattice3& c) {
    if (!B.stores_offset(c) && (T.generator(c).array() != 0.0).any())
      throw InvalidArgument("toeplitz_to_banded: generator beyond the band is nonzero");
  });
  const Lattice3& L = T.dims();
  for (Index i = 0; i < T.cells(); ++i) {
    const Lattice3 k = cell_from_index(i, L);
    for_each_index(B.offset_lo(), B.offset_hi(), [&](const Lattice3& c) {
      for (int l = 0; l < 3; ++l)
        if (k[l] - c[l] < 0 || k[l] - c[l] >= L[l]) return;
      B.banded(k, c) = T.generator(c);
    });
  }
  return B;
}

/// Shift-invariant approximation of banded V: each Toeplitz generator copies
/// the block of a central row (clamped so the column cell exists), and
/// negative offsets are set to transposes.
inline BlockCoefficientTensor toeplitz_potential(const BlockCoefficientTensor& V) {
  if (V.tag() != BlockTag::GeneralBanded)
    throw InvalidArgument("toeplitz_potential: expected a banded tensor");
  const Lattice3& L = V.dims();
  BlockCoefficientTensor T(BlockTag::SymmetricToeplitz, L, V.m0(), V.bandwidth());
  for_each_index(V.offset_lo(), V.offset_hi(), [&](const Lattice3& c) {
    if (!(c == Lattice3{0, 0, 0} || detail::lex_positive(c))) return;
    Lattice3 k;
    for (int l = 0; l < 3; ++l)
      k[l] = c[l] >= 0 ? std::max(L[l] / 2, c[l]) : std::min(L[l] / 2, L[l] - 1 + c[l]);
    T.generator(c) = V.banded(k, c);
    if (c == Lattice3{0, 0, 0})
      detail::symmetrize(T.generator(c));
    else
      T.generator(detail::negate(c)) = V.banded(k, c).transpose();
  });
  return T;
}

/// H = kinetic_factor * A + potential_sign * V. A Toeplitz A combined with a
/// banded V is expanded to banded form; any other tag mismatch is an error.
inline BlockCoefficientTensor core_hamiltonian(const BlockCoefficientTensor& A,
                                               const BlockCoefficientTensor& V,
                                               double kinetic_factor = 0.5,
                                               double potential_sign = -1.0) {
  if (A.dims() != V.dims() || A.m0() != V.m0())
    throw DimensionError("core_hamiltonian: A and V differ in lattice dims or m0");
  if (A.tag() == BlockTag::SymmetricToeplitz && V.tag() == BlockTag::GeneralBanded)
    return core_hamiltonian(toeplitz_to_banded(A, V.bandwidth()), V, kinetic_factor, potential_sign);
  if (A.tag() != V.tag())
    throw InvalidArgument(std::string("core_hamiltonian: tag mismatch (") + to_string(A.tag()) +
                          " vs " + to_string(V.tag()) + ")");
  if (A.offset_lo() != V.offset_lo() || A.offset_hi() != V.offset_hi())
    throw DimensionError("core_hamiltonian: A and V differ in stored band");
  BlockCoefficientTensor H = A;
  for (std::size_t i = 0; i < H.blocks().size(); ++i)
    H.blocks()[i] = kinetic_factor * A.blocks()[i] + potential_sign * V.blocks()[i];
  return H;
}

}  // namespace latticeham
