#pragma once

// Multilevel block circulant and symmetric block Toeplitz algebra:
// dense expansion, FFT block diagonalization, fast matvecs, eigenvectors.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "latticeham/block_tensor.hpp"
#include "latticeham/error.hpp"
#include "latticeham/fft.hpp"

namespace latticeham {

using cdouble = std::complex<double>;

/// Blocks bar A_j = sum_k omega^{j.k} A_k, omega = exp(-2 pi i / L) per
/// level, for every lattice multi-index j in lexicographic order.
struct FourierBlockDiagonal {
  Lattice3 L{1, 1, 1};
  Index m0 = 1;
  std::vector<Eigen::MatrixXcd> blocks;

  Index cells() const { return lattice_cells(L); }
  const Eigen::MatrixXcd& block(const Lattice3& j) const {
    return blocks[static_cast<std::size_t>(cell_index(j, L))];
  }
};

inline constexpr Index kDefaultDenseCap = 4096;

/// Explicit matrix generated by a block tensor of any tag, block (k, m) at
/// rows k*m0 and columns m*m0 with cells in lexicographic order.
inline Eigen::MatrixXd to_dense(const BlockCoefficientTensor& t, Index cap = kDefaultDenseCap) {
  const Index N = t.full_size(), m0 = t.m0();
  if (N > cap)
    throw InvalidArgument("to_dense: matrix size " + std::to_string(N) + " exceeds cap " +
                          std::to_string(cap));
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  const Lattice3& L = t.dims();
  for (Index i = 0; i < t.cells(); ++i)
    for (Index j = 0; j < t.cells(); ++j)
      if (const auto* b = t.block_at(cell_from_index(i, L), cell_from_index(j, L)))
        D.block(i * m0, j * m0, m0, m0) = *b;
  return D;
}

namespace detail {

inline std::vector<int> fft_dims(const Lattice3& L) {
  std::vector<int> d;
  for (int l = 0; l < lattice_levels(L); ++l) d.push_back(static_cast<int>(L[l]));
  return d;
}

inline void require_tag(const BlockCoefficientTensor& t, BlockTag tag, const char* op) {
  if (t.tag() != tag)
    throw InvalidArgument(std::string(op) + ": expected a " + to_string(tag) + " tensor, got " +
                          to_string(t.tag()));
}

}  // namespace detail

/// FFT over the lattice index, entrywise over block positions.
inline FourierBlockDiagonal block_diagonalize(const BlockCoefficientTensor& m) {
  detail::require_tag(m, BlockTag::Circulant, "block_diagonalize");
  const Index m0 = m.m0(), cells = m.cells(), e = m0 * m0;
  std::vector<cdouble> buf(static_cast<std::size_t>(cells * e));
  for (Index c = 0; c < cells; ++c) {
    const auto& b = m.blocks()[static_cast<std::size_t>(c)];
    for (Index i = 0; i < e; ++i) buf[static_cast<std::size_t>(c * e + i)] = b.data()[i];
  }
  fft::transform(buf, detail::fft_dims(m.dims()), static_cast<int>(e), fft::Direction::Forward);
  FourierBlockDiagonal out{m.dims(), m0, {}};
  out.blocks.resize(static_cast<std::size_t>(cells));
  for (Index c = 0; c < cells; ++c)
    out.blocks[static_cast<std::size_t>(c)] =
        Eigen::Map<const Eigen::MatrixXcd>(buf.data() + c * e, m0, m0);
  return out;
}

namespace detail {

inline void check_terms(const std::vector<FactorizedTerm>& terms, Lattice3& L, Index& m0) {
  if (terms.empty()) throw InvalidArgument("factorized terms: need at least one term");
  for (int l = 0; l < 3; ++l) L[l] = static_cast<Index>(terms.front().modes[l].size());
  m0 = terms.front().modes[0].empty() ? 0 : terms.front().modes[0].front().rows();
  for (const auto& t : terms)
    for (int l = 0; l < 3; ++l) {
      if (static_cast<Index>(t.modes[l].size()) != L[l] || L[l] < 1)
        throw DimensionError("factorized terms: mode " + std::to_string(l) + " sequence length mismatch");
      for (const auto& b : t.modes[l])
        if (b.rows() != m0 || b.cols() != m0)
          throw DimensionError("factorized terms: block size mismatch");
    }
}

}  // namespace detail

/// Circulant tensor represented by a sum of separable terms.
inline BlockCoefficientTensor expand(const std::vector<FactorizedTerm>& terms, Index L0) {
  Lattice3 L;
  Index m0;
  detail::check_terms(terms, L, m0);
  BlockCoefficientTensor out(BlockTag::Circulant, L, m0, L0);
  for (Index i = 0; i < out.cells(); ++i) {
    const Lattice3 c = cell_from_index(i, L);
    auto& g = out.generator(c);
    for (const auto& t : terms)
      g += t.modes[0][static_cast<std::size_t>(c[0])]
               .cwiseProduct(t.modes[1][static_cast<std::size_t>(c[1])])
               .cwiseProduct(t.modes[2][static_cast<std::size_t>(c[2])]);
  }
  return out;
}

/// Fourier blocks of a sum of separable terms using 1D DFTs of each mode
/// sequence only, combined by Hadamard products across modes.
inline FourierBlockDiagonal block_diagonalize_factorized(const std::vector<FactorizedTerm>& terms) {
  Lattice3 L;
  Index m0;
  detail::check_terms(terms, L, m0);
  const Index e = m0 * m0;
  FourierBlockDiagonal out{L, m0, {}};
  out.blocks.assign(static_cast<std::size_t>(lattice_cells(L)), Eigen::MatrixXcd::Zero(m0, m0));
  for (const auto& t : terms) {
    std::array<std::vector<Eigen::MatrixXcd>, 3> f;
    for (int l = 0; l < 3; ++l) {
      std::vector<cdouble> buf(static_cast<std::size_t>(L[l] * e));
      for (Index k = 0; k < L[l]; ++k)
        for (Index i = 0; i < e; ++i)
          buf[static_cast<std::size_t>(k * e + i)] = t.modes[l][static_cast<std::size_t>(k)].data()[i];
      fft::transform(buf, {static_cast<int>(L[l])}, static_cast<int>(e), fft::Direction::Forward);
      for (Index k = 0; k < L[l]; ++k)
        f[l].push_back(Eigen::Map<const Eigen::MatrixXcd>(buf.data() + k * e, m0, m0));
    }
    for (Index i = 0; i < out.cells(); ++i) {
      const Lattice3 j = cell_from_index(i, L);
      out.blocks[static_cast<std::size_t>(i)] +=
          f[0][static_cast<std::size_t>(j[0])]
              .cwiseProduct(f[1][static_cast<std::size_t>(j[1])])
              .cwiseProduct(f[2][static_cast<std::size_t>(j[2])]);
    }
  }
  return out;
}

/// y = A x for a circulant A through forward FFT, blockwise products and an
/// inverse FFT scaled by 1 / |L|.
inline Eigen::VectorXd matvec_circulant(const BlockCoefficientTensor& m, const Eigen::VectorXd& x) {
  detail::require_tag(m, BlockTag::Circulant, "matvec_circulant");
  if (x.size() != m.full_size())
    throw DimensionError("matvec_circulant: vector length " + std::to_string(x.size()) +
                         " does not match matrix size " + std::to_string(m.full_size()));
  const FourierBlockDiagonal db = block_diagonalize(m);
  const Index m0 = m.m0(), cells = m.cells();
  std::vector<cdouble> buf(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) buf[static_cast<std::size_t>(i)] = x[i];
  const auto dims = detail::fft_dims(m.dims());
  fft::transform(buf, dims, static_cast<int>(m0), fft::Direction::Forward);
  for (Index c = 0; c < cells; ++c) {
    Eigen::Map<Eigen::VectorXcd> seg(buf.data() + c * m0, m0);
    seg = (db.blocks[static_cast<std::size_t>(c)] * seg).eval();
  }
  fft::transform(buf, dims, static_cast<int>(m0), fft::Direction::Backward);
  Eigen::VectorXd y(x.size());
  for (Index i = 0; i < x.size(); ++i)
    y[i] = buf[static_cast<std::size_t>(i)].real() / static_cast<double>(cells);
  return y;
}

/// Circulant of size 2 L per nontrivial level embedding a symmetric block
/// Toeplitz tensor: slot c < L holds T_c, slot L the zero block, slot c > L
/// holds T_{c - 2L}.
inline BlockCoefficientTensor circulant_embedding(const BlockCoefficientTensor& t) {
  detail::require_tag(t, BlockTag::SymmetricToeplitz, "circulant_embedding");
  const Lattice3& L = t.dims();
  Lattice3 E;
  for (int l = 0; l < 3; ++l) E[l] = L[l] > 1 ? 2 * L[l] : 1;
  BlockCoefficientTensor c(BlockTag::Circulant, E, t.m0(), t.bandwidth());
  for (Index i = 0; i < c.cells(); ++i) {
    const Lattice3 s = cell_from_index(i, E);
    Lattice3 o{0, 0, 0};
    bool pad = false;
    for (int l = 0; l < 3; ++l) {
      if (E[l] == 1) {
        o[l] = 0;
      } else if (s[l] < L[l]) {
        o[l] = s[l];
      } else if (s[l] == L[l]) {
        pad = true;
      } else {
        o[l] = s[l] - 2 * L[l];
      }
    }
    if (!pad) c.generator(s) = t.generator(o);
  }
  return c;
}

/// y = T x for a symmetric block Toeplitz T via its double-size circulant embedding.
inline Eigen::VectorXd matvec_toeplitz(const BlockCoefficientTensor& t, const Eigen::VectorXd& x) {
  detail::require_tag(t, BlockTag::SymmetricToeplitz, "matvec_toeplitz");
  if (x.size() != t.full_size())
    throw DimensionError("matvec_toeplitz: vector length " + std::to_string(x.size()) +
                         " does not match matrix size " + std::to_string(t.full_size()));
  const BlockCoefficientTensor c = circulant_embedding(t);
  const Index m0 = t.m0();
  Eigen::VectorXd big = Eigen::VectorXd::Zero(c.full_size());
  for (Index i = 0; i < t.cells(); ++i)
    big.segment(cell_index(cell_from_index(i, t.dims()), c.dims()) * m0, m0) = x.segment(i * m0, m0);
  const Eigen::VectorXd yb = matvec_circulant(c, big);
  Eigen::VectorXd y(x.size());
  for (Index i = 0; i < t.cells(); ++i)
    y.segment(i * m0, m0) = yb.segment(cell_index(cell_from_index(i, t.dims()), c.dims()) * m0, m0);
  return y;
}

struct FourierEigenvectors {
  Eigen::MatrixXcd vectors;      // |L| m0 x p
  double max_residual = 0;       // max_i |bar A u - lambda bar B u| / (|bar A| |u|)
  bool residual_warning = false;
};

/// Full-length eigenvectors U = (1/sqrt|L|) exp(+2 pi i j.k / L) u in block
/// slot k, for eigenvectors u (columns) of the pencil (bar A_j, bar B_j).
/// The block residual is checked; a large one only raises the warning flag.
inline FourierEigenvectors eigvecs_from_fourier(const FourierBlockDiagonal& db, const Lattice3& j,
                                                const Eigen::MatrixXcd& u,
                                                const FourierBlockDiagonal* metric = nullptr,
                                                double tol = 1e-10) {
  const Index m0 = db.m0, cells = db.cells();
  for (int l = 0; l < 3; ++l)
    if (j[l] < 0 || j[l] >= db.L[l]) throw DimensionError("eigvecs_from_fourier: j out of range");
  if (u.rows() != m0) throw DimensionError("eigvecs_from_fourier: block vectors must have m0 rows");
  const Eigen::MatrixXcd& A = db.block(j);
  const Eigen::MatrixXcd B = metric ? metric->block(j) : Eigen::MatrixXcd::Identity(m0, m0);
  FourierEigenvectors out;
  const double anorm = std::max(A.norm(), 1e-300);
  for (Index p = 0; p < u.cols(); ++p) {
    const Eigen::VectorXcd x = u.col(p);
    const Eigen::VectorXcd Ax = A * x, Bx = B * x;
    const cdouble lambda = x.dot(Ax) / x.dot(Bx);
    const double res = (Ax - lambda * Bx).norm() / (anorm * std::max(x.norm(), 1e-300));
    out.max_residual = std::max(out.max_residual, res);
  }
  out.residual_warning = out.max_residual > tol;
  out.vectors.resize(cells * m0, u.cols());
  const double scale = 1.0 / std::sqrt(static_cast<double>(cells));
  for (Index i = 0; i < cells; ++i) {
    const Lattice3 k = cell_from_index(i, db.L);
    double phase = 0;
    for (int l = 0; l < 3; ++l)
      phase += static_cast<double>(j[l] * k[l]) / static_cast<double>(db.L[l]);
    const cdouble f = std::polar(scale, 2.0 * std::numbers::pi * phase);
    out.vectors.middleRows(i * m0, m0) = f * u;
  }
  return out;
}

/// One-level symmetric circulant with even L: bar A_j = A_0 + sum_{0<k<L/2}
/// (omega^{kj} A_k + conj(omega^{kj}) A_k^T) + (-1)^j A_{L/2}.
inline FourierBlockDiagonal symmetric_fourier_blocks(const BlockCoefficientTensor& m, double tol = 1e-12) {
  detail::require_tag(m, BlockTag::Circulant, "symmetric_fourier_blocks");
  const Lattice3& L = m.dims();
  if (L[1] != 1 || L[2] != 1)
    throw InvalidArgument("symmetric_fourier_blocks: one-level matrices only");
  if (L[0] % 2 != 0)
    throw InvalidArgument("symmetric_fourier_blocks: L must be even (use block_diagonalize for odd L)");
  double scale = 0;
  for (const auto& b : m.blocks()) scale = std::max(scale, b.cwiseAbs().maxCoeff());
  if (m.symmetry_defect() > tol * std::max(scale, 1e-300))
    throw InvalidArgument("symmetric_fourier_blocks: coefficients are not symmetric (A_k^T != A_{L-k})");
  const Index n = L[0], m0 = m.m0();
  auto A = [&](Index k) -> const Eigen::MatrixXd& { return m.generator({k, 0, 0}); };
  FourierBlockDiagonal out{L, m0, {}};
  for (Index j = 0; j < n; ++j) {
    Eigen::MatrixXcd b = A(0).cast<cdouble>();
    for (Index k = 1; k < n / 2; ++k) {
      const cdouble w = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) /
                                            static_cast<double>(n));
      b += w * A(k).cast<cdouble>() + std::conj(w) * A(k).transpose().cast<cdouble>();
    }
    b += (j % 2 == 0 ? 1.0 : -1.0) * A(n / 2).cast<cdouble>();
    out.blocks.push_back(std::move(b));
  }
  return out;
}

}  // namespace latticeham
