#include <gtest/gtest.h>

#include "latticeham/eigensolve.hpp"
#include "latticeham/experiment.hpp"
#include "oracles.hpp"

using namespace latticeham;

namespace {

Eigen::MatrixXd randn(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

const LatticeSystem& chain8() {
  static const LatticeSystem s = [] {
    auto x = parse_config(json::parse(R"({"lattice": {"L": 8, "h": 0.1, "n0": 30, "n": 150}})"));
    return build_system(x, {8, 1, 1}, Boundary::Periodic);
  }();
  return s;
}

Spectrum with_values(std::vector<double> v) {
  Spectrum s;
  s.eigenvalues = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
  s.j.assign(v.size(), Lattice3{-1, -1, -1});
  s.block_index.assign(v.size(), 0);
  return s;
}

}  // namespace

TEST(Dense, IdentityAndDiagonal) {
  const auto s = solve_dense_generalized(Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Identity(4, 4));
  EXPECT_LT((s.eigenvalues - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff(), 1e-15);
  const auto d = solve_dense_generalized(Eigen::Vector3d(3, 1, 2).asDiagonal().toDenseMatrix(),
                                         Eigen::MatrixXd::Identity(3, 3));
  EXPECT_LT((d.eigenvalues - Eigen::Vector3d(1, 2, 3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(d.source, SpectrumSource::Dense);
}

TEST(Dense, MatchesJacobiOracle) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd H = oracle::random_symmetric(rng, 64), S = oracle::random_spd(rng, 64);
  const auto s = solve_dense_generalized(H, S);
  const Eigen::MatrixXd Li = Eigen::LLT<Eigen::MatrixXd>(S).matrixL().solve(Eigen::MatrixXd::Identity(64, 64));
  const Eigen::VectorXd ref = oracle::jacobi_eigenvalues(Li * H * Li.transpose());
  EXPECT_LT(relative_spectrum_error(s.eigenvalues, ref), 1e-9);
}

TEST(Dense, ResidualsAndMetricOrthonormality) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd H = oracle::random_symmetric(rng, 40), S = oracle::random_spd(rng, 40);
  const auto s = solve_dense_generalized(H, S);
  ASSERT_TRUE(s.eigenvectors);
  const Eigen::MatrixXd& C = *s.eigenvectors;
  const double scale = H.norm() + s.eigenvalues.cwiseAbs().maxCoeff() * S.norm();
  EXPECT_LT((H * C - S * C * s.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff(), 1e-9 * scale);
  EXPECT_LT((C.transpose() * S * C - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff(), 1e-9);
  for (Index i = 1; i < s.size(); ++i) EXPECT_LE(s.eigenvalues[i - 1], s.eigenvalues[i]);
}

TEST(Dense, IndefiniteMetricNamesPivot) {
  Eigen::Matrix3d S;
  S << 1, 0, 0, 0, 1, 2, 0, 2, 1;
  try {
    solve_dense_generalized(Eigen::MatrixXd::Identity(3, 3), S);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("pivot 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(solve_dense_generalized(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(2, 2)),
               DimensionError);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  A(0, 1) = 1;
  EXPECT_THROW(solve_dense_generalized(A, Eigen::MatrixXd::Identity(2, 2)), InvalidArgument);
}

TEST(Jacobi, HermitianAgainstEigen) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXcd A0 = randn(rng, 7, 7).cast<cdouble>() + cdouble(0, 1) * randn(rng, 7, 7).cast<cdouble>();
  const Eigen::MatrixXcd A = A0 + A0.adjoint();
  const auto e = jacobi_hermitian(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(A);
  EXPECT_LT((e.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12 * A.norm());
  EXPECT_LT((A * e.vectors - e.vectors * e.values.asDiagonal()).norm(), 1e-11 * A.norm());
  EXPECT_LT((e.vectors.adjoint() * e.vectors - Eigen::MatrixXcd::Identity(7, 7)).norm(), 1e-12);
}

TEST(Pencil, IndefiniteBlockReportsIndex) {
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Identity(2, 2);
  S(1, 1) = -0.5;
  try {
    solve_hermitian_pencil(Eigen::MatrixXcd::Identity(2, 2), S, {3, 1, 0});
    FAIL();
  } catch (const NumericalError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("(3, 1, 0)"), std::string::npos) << m;
    EXPECT_NE(m.find("-0.5"), std::string::npos) << m;
  }
}

TEST(Periodic, OnlyDiagonalGeneratorRepeatsSpectrum) {
  std::mt19937_64 rng(4);
  BlockCoefficientTensor H(BlockTag::Circulant, {3, 2, 1}, 3, 0), S(BlockTag::Circulant, {3, 2, 1}, 3, 0);
  H.generator({0, 0, 0}) = oracle::random_symmetric(rng, 3);
  S.generator({0, 0, 0}) = oracle::random_spd(rng, 3);
  const auto per = solve_periodic_fft(H, S);
  const auto one = solve_dense_generalized(H.generator({0, 0, 0}), S.generator({0, 0, 0}));
  ASSERT_EQ(per.size(), 18);
  for (Index i = 0; i < 18; ++i) EXPECT_NEAR(per.eigenvalues[i], one.eigenvalues[i / 6], 1e-12);
  EXPECT_EQ(per.source, SpectrumSource::FourierDecoupled);
}

TEST(Periodic, ChainMatchesDenseSolve) {
  const auto& s = chain8();
  ASSERT_EQ(s.basis.m0(), 4);
  ASSERT_EQ(s.H.tag(), BlockTag::Circulant);
  const auto fft = solve_periodic_fft(s.H, s.AS.S);
  const auto dense = solve_dense_generalized(to_dense(s.H), to_dense(s.AS.S), false);
  ASSERT_EQ(fft.size(), 32);
  EXPECT_LT(relative_spectrum_error(fft.eigenvalues, dense.eigenvalues), 1e-10);
  EXPECT_LT(fft.max_block_imag, 1e-12);
}

TEST(Periodic, ConjugateIndexPairing) {
  const auto& s = chain8();
  const auto full = solve_periodic_fft_full(s.H, s.AS.S);
  std::map<Index, std::vector<double>> by_j;
  for (Index i = 0; i < full.spectrum.size(); ++i) by_j[full.spectrum.j[i][0]].push_back(full.spectrum.eigenvalues[i]);
  ASSERT_EQ(by_j.size(), 8u);
  for (Index j = 1; j < 8; ++j)
    for (std::size_t p = 0; p < 4; ++p) EXPECT_NEAR(by_j[j][p], by_j[8 - j][p], 1e-12 * std::abs(by_j[j][p]) + 1e-14);
  for (const auto& b : full.H.blocks) EXPECT_LT((b - b.adjoint()).cwiseAbs().maxCoeff(), 1e-12 * b.cwiseAbs().maxCoeff());
}

TEST(Periodic, BlockVectorsSolvePencils) {
  const auto& s = chain8();
  const auto full = solve_periodic_fft_full(s.H, s.AS.S, true);
  ASSERT_EQ(full.block_vectors.size(), 8u);
  for (std::size_t j = 0; j < 8; ++j) {
    const auto& Hj = full.H.blocks[j];
    const auto& Sj = full.S.blocks[j];
    const auto& C = full.block_vectors[j];
    const auto sol = solve_hermitian_pencil(Hj, Sj, {static_cast<Index>(j), 0, 0});
    EXPECT_LT((Hj * C - Sj * C * sol.values.asDiagonal()).norm(), 1e-9 * Hj.norm());
    EXPECT_LT((C.adjoint() * Sj * C - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-9);
  }
}

TEST(Periodic, IndefiniteFourierBlockRejected) {
  BlockCoefficientTensor H(BlockTag::Circulant, {4, 1, 1}, 1, 1), S(BlockTag::Circulant, {4, 1, 1}, 1, 1);
  H.generator({0, 0, 0})(0, 0) = 1;
  S.generator({0, 0, 0})(0, 0) = 1;
  S.generator({1, 0, 0})(0, 0) = S.generator({3, 0, 0})(0, 0) = 0.75;  // block at j = 2 is 1 - 1.5
  try {
    solve_periodic_fft(H, S);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("(2, 0, 0)"), std::string::npos) << e.what();
  }
  EXPECT_THROW(solve_periodic_fft(BlockCoefficientTensor(BlockTag::SymmetricToeplitz, {4, 1, 1}, 1, 1), S),
               InvalidArgument);
}

TEST(Energy, AverageAndGaps) {
  EXPECT_DOUBLE_EQ(average_energy_per_cell(with_values({1, 2, 5, 9}), 3, 2), 4.0);
  EXPECT_DOUBLE_EQ(average_energy_per_cell(with_values({1, 2}), 2, 2), 1.5);
  EXPECT_DOUBLE_EQ(average_energy_per_cell(with_values({1, 2}), 0, 2), 0.0);
  EXPECT_THROW(average_energy_per_cell(with_values({1}), 2, 1), InvalidArgument);

  const auto a = with_values({-1, 0.5, 2}), b = with_values({-0.75, 0.5, 2.5});
  const auto same = spectral_comparison(a, a, 3);
  EXPECT_EQ(same.max, 0.0);
  const auto g = spectral_comparison(a, b, 3);
  EXPECT_DOUBLE_EQ(g.gaps[0], 0.25);
  EXPECT_DOUBLE_EQ(g.min, 0.0);
  EXPECT_DOUBLE_EQ(g.max, 0.5);
  EXPECT_DOUBLE_EQ(g.mean, 0.25);
  EXPECT_THROW(spectral_comparison(a, b, 4), InvalidArgument);

  Eigen::VectorXd shifted = a.eigenvalues.array() + 1e-3;
  auto c = with_values({0, 0, 0});
  c.eigenvalues = shifted;
  for (double gap : spectral_comparison(a, c, 3).gaps) EXPECT_NEAR(gap, 1e-3, 1e-15);
}

TEST(Variational, EnlargingBasisLowersEigenvalues) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd H = oracle::random_symmetric(rng, 12), S = oracle::random_spd(rng, 12);
  const auto full = solve_dense_generalized(H, S, false);
  const auto sub = solve_dense_generalized(H.topLeftCorner(9, 9), S.topLeftCorner(9, 9), false);
  for (Index i = 0; i < 9; ++i) EXPECT_LE(full.eigenvalues[i], sub.eigenvalues[i] + 1e-12);

  auto x3 = parse_config(json::parse(
      R"({"lattice": {"L": 4, "h": 0.1, "n0": 30, "n": 150}, "basis": {"exponents": [0.3, 0.9, 2.7]},
          "overlap_constant": 3})"));
  auto x4 = x3;
  x4.basis = centered_generators({0.3, 0.9, 2.7, 8.1});
  const auto s3 = solve_system(build_system(x3, {4, 1, 1}, Boundary::Periodic), kDefaultDenseCap);
  const auto s4 = solve_system(build_system(x4, {4, 1, 1}, Boundary::Periodic), kDefaultDenseCap);
  for (Index i = 0; i < s3.size(); ++i) EXPECT_LE(s4.eigenvalues[i], s3.eigenvalues[i] + 1e-10) << i;
}

TEST(Csv, SpectrumLayout) {
  auto s = with_values({-0.5, 0.25});
  s.j = {Lattice3{0, 0, 0}, Lattice3{1, 0, 0}};
  s.block_index = {0, 3};
  std::ostringstream os;
  write_spectrum_csv(os, s);
  EXPECT_EQ(os.str(), "index,eigenvalue,j1,j2,j3,block_index\n0,-0.5,0,0,0,0\n1,0.25,1,0,0,3\n");
}
