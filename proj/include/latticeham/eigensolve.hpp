#pragma once

// Generalized symmetric eigenproblems H C = S C Lambda: a dense Cholesky
// reduction path and the Fourier-decoupled path for block circulant pencils.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "latticeham/block_tensor.hpp"
#include "latticeham/error.hpp"
#include "latticeham/mlbc.hpp"
#include "latticeham/parallel.hpp"

namespace latticeham {

enum class SpectrumSource { Dense, FourierDecoupled };

struct Spectrum {
  Eigen::VectorXd eigenvalues;                  // ascending
  std::optional<Eigen::MatrixXd> eigenvectors;  // dense path, S-orthonormal columns
  SpectrumSource source = SpectrumSource::Dense;
  Lattice3 L{1, 1, 1};
  Index m0 = 1;
  std::vector<Lattice3> j;           // originating Fourier index per eigenvalue
  std::vector<Index> block_index;    // position within the block spectrum
  double max_block_imag = 0;         // largest |Im| met on block diagonals

  Index size() const { return eigenvalues.size(); }
};

/// Lower Cholesky factor; failure names the pivot.
inline Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& S) {
  const Index n = S.rows();
  if (S.cols() != n) throw DimensionError("cholesky_lower: matrix must be square");
  Eigen::MatrixXd Lf = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = S(j, j) - Lf.row(j).head(j).squaredNorm();
    if (!(d > 0))
      throw NumericalError("S is not positive definite: Cholesky pivot " + std::to_string(j) +
                           " is " + std::to_string(d));
    const double ljj = std::sqrt(d);
    Lf(j, j) = ljj;
    if (j + 1 < n)
      Lf.col(j).tail(n - j - 1) =
          (S.col(j).tail(n - j - 1) - Lf.bottomLeftCorner(n - j - 1, j) * Lf.row(j).head(j).transpose()) / ljj;
  }
  return Lf;
}

inline double symmetry_error(const Eigen::MatrixXd& A) {
  return (A - A.transpose()).cwiseAbs().maxCoeff() / std::max(A.cwiseAbs().maxCoeff(), 1e-300);
}

/// Cholesky reduction S = L L^T, symmetric eigensolve of L^-1 H L^-T and
/// back-substitution C = L^-T Y.
inline Spectrum solve_dense_generalized(const Eigen::MatrixXd& H, const Eigen::MatrixXd& S,
                                        bool vectors = true) {
  if (H.rows() != H.cols() || S.rows() != S.cols() || H.rows() != S.rows())
    throw DimensionError("solve_dense_generalized: H and S must be square of equal size");
  if (H.size() == 0) throw DimensionError("solve_dense_generalized: empty matrices");
  if (symmetry_error(H) > 1e-10) throw InvalidArgument("solve_dense_generalized: H is not symmetric");
  if (symmetry_error(S) > 1e-10) throw InvalidArgument("solve_dense_generalized: S is not symmetric");
  const Eigen::MatrixXd Lf = cholesky_lower(S);
  const auto tri = Lf.triangularView<Eigen::Lower>();
  Eigen::MatrixXd M = tri.solve(H);
  M = tri.solve(M.transpose()).eval();
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, vectors ? Eigen::ComputeEigenvectors
                                                               : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("solve_dense_generalized: eigensolver failed");
  Spectrum s;
  s.eigenvalues = es.eigenvalues();
  s.source = SpectrumSource::Dense;
  s.L = {1, 1, 1};
  s.m0 = H.rows();
  s.j.assign(static_cast<std::size_t>(H.rows()), Lattice3{-1, -1, -1});
  s.block_index.resize(static_cast<std::size_t>(H.rows()));
  std::iota(s.block_index.begin(), s.block_index.end(), Index{0});
  if (vectors) s.eigenvectors = Lf.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors());
  return s;
}

struct HermitianEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // unitary, columns match values
  double max_imag = 0;      // largest |Im| on the diagonal seen during sweeps
  int sweeps = 0;
};

/// Cyclic Jacobi for Hermitian matrices. Each rotation first rotates the
/// phase of coordinate q so a_pq becomes real, then applies a real rotation.
inline HermitianEigen jacobi_hermitian(const Eigen::MatrixXcd& input, int max_sweeps = 100) {
  const Index n = input.rows();
  if (input.cols() != n) throw DimensionError("jacobi_hermitian: matrix must be square");
  Eigen::MatrixXcd a = 0.5 * (input + input.adjoint());
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
  HermitianEigen out;
  for (Index i = 0; i < n; ++i) out.max_imag = std::max(out.max_imag, std::abs(input(i, i).imag()));
  const double scale = std::max(a.norm(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= 1e-15 * scale) break;
    out.sweeps = sweep + 1;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r <= 1e-300) continue;
        const cdouble ph = std::conj(a(p, q)) / r;  // exp(-i phi)
        a.col(q) *= ph;
        a.row(q) *= std::conj(ph);
        v.col(q) *= ph;
        const double app = a(p, p).real(), aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        const Eigen::VectorXcd cp = a.col(p), cq = a.col(q);
        a.col(p) = c * cp - s * cq;
        a.col(q) = s * cp + c * cq;
        const Eigen::RowVectorXcd rp = a.row(p), rq = a.row(q);
        a.row(p) = c * rp - s * rq;
        a.row(q) = s * rp + c * rq;
        const Eigen::VectorXcd vp = v.col(p), vq = v.col(q);
        v.col(p) = c * vp - s * vq;
        v.col(q) = s * vp + c * vq;
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = app - t * r;
        a(q, q) = aqq + t * r;
      }
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return a(x, x).real() < a(y, y).real(); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    out.values[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]).real();
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Lower Cholesky factor of a Hermitian matrix, or an empty matrix if it is
/// not positive definite.
inline Eigen::MatrixXcd cholesky_hermitian(const Eigen::MatrixXcd& S) {
  const Index n = S.rows();
  Eigen::MatrixXcd Lf = Eigen::MatrixXcd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const double d = S(j, j).real() - Lf.row(j).head(j).squaredNorm();
    if (!(d > 0)) return {};
    const double ljj = std::sqrt(d);
    Lf(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      cdouble sum = S(i, j);
      for (Index k = 0; k < j; ++k) sum -= Lf(i, k) * std::conj(Lf(j, k));
      Lf(i, j) = sum / ljj;
    }
  }
  return Lf;
}

struct BlockSolution {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;  // S_j-orthonormal
  double max_imag = 0;
};

/// Hermitian pencil (H, S) of one Fourier block; `j` only labels errors.
inline BlockSolution solve_hermitian_pencil(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& S,
                                            const Lattice3& j) {
  const Eigen::MatrixXcd Sh = 0.5 * (S + S.adjoint());
  const Eigen::MatrixXcd Lf = cholesky_hermitian(Sh);
  if (Lf.size() == 0) {
    const double lmin = jacobi_hermitian(Sh).values.minCoeff();
    std::ostringstream msg;
    msg << "Fourier block of S at j = (" << j[0] << ", " << j[1] << ", " << j[2]
        << ") is not positive definite; smallest eigenvalue " << lmin;
    throw NumericalError(msg.str());
  }
  const auto tri = Lf.triangularView<Eigen::Lower>();
  Eigen::MatrixXcd M = tri.solve(H);
  M = tri.solve(M.adjoint()).adjoint().eval();
  const HermitianEigen e = jacobi_hermitian(M);
  BlockSolution out;
  out.values = e.values;
  out.vectors = Lf.adjoint().triangularView<Eigen::Upper>().solve(e.vectors);
  double imag = 0;
  for (Index i = 0; i < H.rows(); ++i) imag = std::max(imag, std::abs(H(i, i).imag()));
  out.max_imag = std::max(imag, e.max_imag);
  return out;
}

struct PeriodicSolution {
  Spectrum spectrum;
  FourierBlockDiagonal H, S;
  std::vector<Eigen::MatrixXcd> block_vectors;  // per j, when requested
};

/// Solves each m0 x m0 Fourier block pencil independently and returns the
/// sorted union; ties keep lexicographic j, then block position.
inline PeriodicSolution solve_periodic_fft_full(const BlockCoefficientTensor& Hb,
                                                const BlockCoefficientTensor& Sb,
                                                bool keep_vectors = false) {
  if (Hb.tag() != BlockTag::Circulant || Sb.tag() != BlockTag::Circulant)
    throw InvalidArgument("solve_periodic_fft: H and S must be circulant");
  if (Hb.dims() != Sb.dims() || Hb.m0() != Sb.m0())
    throw DimensionError("solve_periodic_fft: H and S differ in lattice dims or m0");
  PeriodicSolution out;
  out.H = block_diagonalize(Hb);
  out.S = block_diagonalize(Sb);
  const Index cells = Hb.cells(), m0 = Hb.m0();
  std::vector<BlockSolution> sol(static_cast<std::size_t>(cells));
  parallel_for(static_cast<std::size_t>(cells), [&](std::size_t i) {
    sol[i] = solve_hermitian_pencil(out.H.blocks[i], out.S.blocks[i],
                                    cell_from_index(static_cast<Index>(i), Hb.dims()));
  });
  Spectrum& s = out.spectrum;
  s.source = SpectrumSource::FourierDecoupled;
  s.L = Hb.dims();
  s.m0 = m0;
  const Index N = cells * m0;
  std::vector<Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), Index{0});
  auto value = [&](Index g) { return sol[static_cast<std::size_t>(g / m0)].values[g % m0]; };
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return value(x) < value(y); });
  s.eigenvalues.resize(N);
  s.j.resize(static_cast<std::size_t>(N));
  s.block_index.resize(static_cast<std::size_t>(N));
  for (Index i = 0; i < N; ++i) {
    const Index g = order[static_cast<std::size_t>(i)];
    s.eigenvalues[i] = value(g);
    s.j[static_cast<std::size_t>(i)] = cell_from_index(g / m0, Hb.dims());
    s.block_index[static_cast<std::size_t>(i)] = g % m0;
  }
  for (const auto& b : sol) s.max_block_imag = std::max(s.max_block_imag, b.max_imag);
  if (keep_vectors)
    for (auto& b : sol) out.block_vectors.push_back(std::move(b.vectors));
  return out;
}

inline Spectrum solve_periodic_fft(const BlockCoefficientTensor& Hb, const BlockCoefficientTensor& Sb) {
  return solve_periodic_fft_full(Hb, Sb).spectrum;
}

/// Sum of the n_occ smallest eigenvalues divided by the number of cells.
inline double average_energy_per_cell(const Spectrum& s, Index n_occ, Index cells) {
  if (n_occ < 0 || n_occ > s.size())
    throw InvalidArgument("average_energy_per_cell: n_occ " + std::to_string(n_occ) +
                          " outside [0, " + std::to_string(s.size()) + "]");
  if (cells < 1) throw InvalidArgument("average_energy_per_cell: cells must be >= 1");
  return s.eigenvalues.head(n_occ).sum() / static_cast<double>(cells);
}

struct SpectralGaps {
  std::vector<double> gaps;
  double min = 0, max = 0, mean = 0;
};

/// |lambda_i(box) - lambda_i(periodic)| for the k lowest eigenvalues.
inline SpectralGaps spectral_comparison(const Spectrum& box, const Spectrum& periodic, Index k) {
  if (k < 0 || box.size() < k || periodic.size() < k)
    throw InvalidArgument("spectral_comparison: both spectra need at least k eigenvalues");
  SpectralGaps g;
  for (Index i = 0; i < k; ++i) g.gaps.push_back(std::abs(box.eigenvalues[i] - periodic.eigenvalues[i]));
  if (k > 0) {
    g.min = *std::min_element(g.gaps.begin(), g.gaps.end());
    g.max = *std::max_element(g.gaps.begin(), g.gaps.end());
    g.mean = std::accumulate(g.gaps.begin(), g.gaps.end(), 0.0) / static_cast<double>(k);
  }
  return g;
}

/// ||a - b||_inf / max |a|, the relative spectral distance used throughout.
inline double relative_spectrum_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return INFINITY;
  if (a.size() == 0) return 0;
  return (a - b).cwiseAbs().maxCoeff() / std::max(a.cwiseAbs().maxCoeff(), 1e-300);
}

/// CSV columns: index, eigenvalue, j1, j2, j3 (-1 for the dense path), block_index.
inline void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  os << "index,eigenvalue,j1,j2,j3,block_index\n";
  os.precision(17);
  for (Index i = 0; i < s.size(); ++i) {
    const auto& j = s.j[static_cast<std::size_t>(i)];
    os << i << ',' << s.eigenvalues[i] << ',' << j[0] << ',' << j[1] << ',' << j[2] << ','
       << s.block_index[static_cast<std::size_t>(i)] << '\n';
  }
}

}  // namespace latticeham
