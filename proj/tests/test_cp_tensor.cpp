#include <gtest/gtest.h>

#include <sstream>

#include "latticeham/coulomb_kernel.hpp"
#include "latticeham/cp_tensor.hpp"
#include "oracles.hpp"

using namespace latticeham;

namespace {

RankOneTensor3 rank1(Eigen::VectorXd a, Eigen::VectorXd b, Eigen::VectorXd c, double w = 1.0) {
  RankOneTensor3 t;
  t.factors = {std::move(a), std::move(b), std::move(c)};
  t.weight = w;
  return t;
}

double max_abs_diff(const DenseTensor3& a, const DenseTensor3& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double max_abs(const DenseTensor3& a) {
  double m = 0;
  for (double x : a.data) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST(CanonicalTensor, ColumnsAreUnitNormWithMagnitudeInWeights) {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_cp(rng, {4, 5, 6}, 3);
  for (int l = 0; l < 3; ++l)
    for (Eigen::Index q = 0; q < a.rank(); ++q) EXPECT_NEAR(a.factor(l).col(q).norm(), 1.0, 1e-14);
  EXPECT_TRUE(a.all_finite());
}

TEST(CanonicalTensor, FactorColumnMismatchThrows) {
  std::array<Eigen::MatrixXd, 3> f{Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(3, 2),
                                   Eigen::MatrixXd::Ones(3, 1)};
  EXPECT_THROW(CanonicalTensor3(Eigen::VectorXd::Ones(2), f), DimensionError);
}

TEST(Hadamard, OnesIsIdentity) {
  Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(4, 0.5, 2.0);
  const auto a = rank1(u, u, u);
  const auto ones = rank1(Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(4));
  EXPECT_LT(max_abs_diff(materialize(hadamard_rank1(a, ones)), materialize(a)), 1e-14);
}

TEST(Hadamard, ZeroFactorAnnihilates) {
  Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(3, 1, 3);
  const auto z = rank1(u, Eigen::VectorXd::Zero(3), u);
  const auto p = hadamard_rank1(z, rank1(u, u, u));
  EXPECT_EQ(p.weight, 0.0);
  EXPECT_EQ(max_abs(materialize(p)), 0.0);
}

TEST(Hadamard, GaussianProductsMatchPointwiseProduct) {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -2, 2);
  Eigen::VectorXd g1 = (-x.array().square()).exp();
  Eigen::VectorXd g2 = (-(x.array() - 0.7).square()).exp();
  const auto a = rank1(g1, g1, g2, 1.5), b = rank1(g2, g1, g1, -0.5);
  const auto p = materialize(hadamard_rank1(a, b));
  const auto ma = materialize(a), mb = materialize(b);
  for (std::size_t i = 0; i < p.data.size(); ++i)
    EXPECT_NEAR(p.data[i], ma.data[i] * mb.data[i], 1e-13 * std::abs(ma.data[i] * mb.data[i]) + 1e-300);
}

TEST(Hadamard, DimensionMismatchThrows) {
  const auto a = rank1(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3));
  const auto b = rank1(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4), Eigen::VectorXd::Ones(3));
  EXPECT_THROW(hadamard_rank1(a, b), DimensionError);
}

TEST(Inner, RankOneSeparability) {
  Eigen::VectorXd u(3), v(3);
  u << 1, 2, 0.5;
  v << -1, 0.25, 3;
  const double s = u.dot(v);
  const auto a = CanonicalTensor3::from_rank_one(rank1(u, u, u));
  const auto b = CanonicalTensor3::from_rank_one(rank1(v, v, v));
  EXPECT_NEAR(inner(a, b), s * s * s, 1e-13 * std::abs(s * s * s));
}

TEST(Inner, SelfInnerIsFrobeniusNormSquared) {
  std::mt19937_64 rng(2);
  for (auto d : {Dims3{3, 3, 3}, Dims3{16, 7, 11}}) {
    const auto a = oracle::random_cp(rng, d, 2);
    const auto m = materialize(a);
    double f2 = 0;
    for (double x : m.data) f2 += x * x;
    EXPECT_GE(inner(a, a), 0.0);
    EXPECT_NEAR(inner(a, a), f2, 1e-12 * f2);
  }
}

TEST(Inner, ZeroTensorAndSymmetry) {
  std::mt19937_64 rng(3);
  const auto a = oracle::random_cp(rng, {5, 4, 3}, 3), b = oracle::random_cp(rng, {5, 4, 3}, 4);
  EXPECT_EQ(inner(a, CanonicalTensor3({5, 4, 3})), 0.0);
  EXPECT_NEAR(inner(a, b), inner(b, a), 1e-13 * std::abs(inner(a, b)));
  EXPECT_THROW(inner(a, CanonicalTensor3({5, 4, 4})), DimensionError);
}

TEST(Add, MaterializationIsLinear) {
  std::mt19937_64 rng(4);
  const auto a = oracle::random_cp(rng, {4, 6, 5}, 1), b = oracle::random_cp(rng, {4, 6, 5}, 1);
  const auto s = add(a, b);
  EXPECT_EQ(s.rank(), 2);
  const auto ms = materialize(s), ma = materialize(a), mb = materialize(b);
  for (std::size_t i = 0; i < ms.data.size(); ++i)
    EXPECT_NEAR(ms.data[i], ma.data[i] + mb.data[i], 1e-13 * (std::abs(ma.data[i]) + std::abs(mb.data[i])));
}

TEST(Add, ZeroRankAndInverse) {
  std::mt19937_64 rng(5);
  const auto a = oracle::random_cp(rng, {4, 4, 4}, 3);
  EXPECT_LT(max_abs_diff(materialize(add(a, CanonicalTensor3({4, 4, 4}))), materialize(a)), 1e-15);
  EXPECT_LT(max_abs(materialize(add(a, scale(a, -1.0)))), 1e-14 * max_abs(materialize(a)));
}

TEST(Prune, DropsNegligibleTerms) {
  std::array<Eigen::MatrixXd, 3> f{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                                   Eigen::MatrixXd::Identity(2, 2)};
  Eigen::VectorXd w(2);
  w << 1, 1e-16;
  const CanonicalTensor3 a(w, f);
  EXPECT_EQ(prune(a, 1e-12).rank(), 1);
  const auto same = prune(a, 0.0);
  EXPECT_EQ(same.rank(), 2);
  EXPECT_EQ(same.weights(), a.weights());
  EXPECT_THROW(prune(a, -1.0), InvalidArgument);
}

TEST(Prune, KernelTensorErrorStaysSmall) {
  const auto q = build_quadrature(0.1 * 0.1, 30.0, 1e-8);
  const auto P = build_reference_tensor(GridSpec::centered(32, 0.1), q);
  const auto pruned = prune(P, 1e-10);
  EXPECT_LE(pruned.rank(), P.rank());
  const auto a = materialize(P), b = materialize(pruned);
  double worst = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(b.data[i] / a.data[i] - 1));
  EXPECT_LE(worst, 1e-8);
}

TEST(Materialize, SimpleCases) {
  const auto ones = materialize(rank1(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)));
  for (double x : ones.data) EXPECT_NEAR(x, 1.0, 1e-15);
  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 1);
  const auto one = materialize(rank1(e1, e1, e1, 2.0));
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      for (Eigen::Index k = 0; k < 3; ++k) EXPECT_EQ(one(i, j, k), (i == 1 && j == 1 && k == 1) ? 2.0 : 0.0);
}

TEST(Materialize, MatchesNaiveSumAndInner) {
  std::mt19937_64 rng(6);
  const auto a = oracle::random_cp(rng, {5, 3, 4}, 3);
  const auto m = materialize(a);
  double f2 = 0;
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_NEAR(m(i, j, k), oracle::cp_entry(a, i, j, k), 1e-13);
        EXPECT_NEAR(a(i, j, k), m(i, j, k), 1e-13);
        f2 += m(i, j, k) * m(i, j, k);
      }
  EXPECT_NEAR(inner(a, a), f2, 1e-12 * f2);
}

TEST(Materialize, CapEnforced) {
  EXPECT_THROW(materialize(CanonicalTensor3({65, 64, 64})), InvalidArgument);
  EXPECT_NO_THROW(materialize(CanonicalTensor3({4, 4, 4}), 64));
  EXPECT_THROW(materialize(CanonicalTensor3({4, 4, 5}), 64), InvalidArgument);
}

TEST(BinaryDump, RoundTripAndHeader) {
  std::mt19937_64 rng(7);
  const auto a = oracle::random_cp(rng, {3, 4, 5}, 2);
  std::stringstream ss;
  write_binary(ss, a);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 4 + 24 + 8 + 8 * (2 + 2 * 12));
  EXPECT_EQ(bytes.substr(0, 4), "CPT3");
  const auto b = read_canonical_tensor(ss);
  EXPECT_EQ(b.dims(), a.dims());
  EXPECT_EQ(b.weights(), a.weights());
  for (int l = 0; l < 3; ++l) EXPECT_EQ(b.factor(l), a.factor(l));
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_canonical_tensor(bad), InvalidArgument);
}
