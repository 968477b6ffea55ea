#include <gtest/gtest.h>

#include "latticeham/lattice_potential.hpp"
#include "oracles.hpp"

using namespace latticeham;

namespace {

LatticeConfig small_config(Lattice3 L, Boundary b, std::vector<Nucleus> nuclei = {Nucleus{}}) {
  LatticeConfig c;
  c.L = L;
  c.h = 0.25;
  c.n0 = 8;
  c.n = 16;
  c.boundary = b;
  c.nuclei = std::move(nuclei);
  return c;
}

CanonicalTensor3 reference_for(const LatticeConfig& cfg, double tol = 1e-7) {
  const Lattice3 ref = required_reference_size(cfg);
  const auto q = build_quadrature(0.1 * cfg.h, reference_radius(ref, cfg.h), tol);
  return build_reference_tensor(GridSpec::centered(ref, cfg.h), q);
}

// Cell integral of the literal lattice sum over target-grid cell i, by
// adaptive cubature of an independently coded sum.
double direct_cell_integral(const LatticeConfig& cfg, std::array<Index, 3> i) {
  const GridSpec g = cfg.target_grid();
  std::array<double, 3> lo, hi;
  for (int l = 0; l < 3; ++l) {
    lo[l] = g.cell_left(l, i[l]);
    hi[l] = lo[l] + cfg.h;
  }
  std::vector<std::array<double, 3>> centres;
  for (const auto& nu : cfg.nuclei)
    for (Index a = 0; a < cfg.L[0]; ++a)
      for (Index b = 0; b < cfg.L[1]; ++b)
        for (Index c = 0; c < cfg.L[2]; ++c) {
          std::array<Index, 3> k{a, b, c};
          std::array<double, 3> p;
          for (int l = 0; l < 3; ++l) {
            const double shift = cfg.boundary == Boundary::Box ? k[l] - 0.5 * static_cast<double>(cfg.L[l] - 1)
                                                               : static_cast<double>(k[l] - cfg.L[l] / 2);
            p[l] = nu.position[l] + shift * cfg.b0();
          }
          centres.push_back(p);
        }
  double s = 0;
  for (std::size_t v = 0; v < centres.size(); ++v) {
    const double z = cfg.nuclei[v / static_cast<std::size_t>(cfg.cells())].charge;
    std::array<double, 3> a, b;
    for (int l = 0; l < 3; ++l) {
      a[l] = lo[l] - centres[v][l];
      b[l] = hi[l] - centres[v][l];
    }
    s += z * oracle::cell_integral_inverse_distance(a, b);
  }
  return s;
}

bool near_nucleus(const LatticeConfig& cfg, std::array<Index, 3> i, double dist) {
  const GridSpec g = cfg.target_grid();
  std::array<double, 3> x{g.cell_center(0, i[0]), g.cell_center(1, i[1]), g.cell_center(2, i[2])};
  for (const auto& nu : cfg.nuclei)
    for (double t0 : cfg.translates(0))
      for (double t1 : cfg.translates(1))
        for (double t2 : cfg.translates(2)) {
          const double dx = x[0] - nu.position[0] - t0 * cfg.b0(), dy = x[1] - nu.position[1] - t1 * cfg.b0(),
                       dz = x[2] - nu.position[2] - t2 * cfg.b0();
          if (std::sqrt(dx * dx + dy * dy + dz * dz) < dist) return true;
        }
  return false;
}

}  // namespace

TEST(Window, SliceSemantics) {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(10, 0, 9);
  EXPECT_EQ(window(v, 0, 10), v);
  Eigen::VectorXd expect(4);
  expect << 3, 4, 5, 6;
  EXPECT_EQ(window(v, 3, 4), expect);
  EXPECT_THROW(window(v, 7, 4), DimensionError);
  EXPECT_THROW(window(v, -1, 2), DimensionError);
}

TEST(Window, AdjacentCellsDifferByN0) {
  const auto cfg = small_config({4, 1, 1}, Boundary::Box);
  const Index ref = 80, target = cfg.grid_size(0);
  const Index o0 = detail::window_offset(ref, target, 0.0, cfg.h);
  const Index o1 = detail::window_offset(ref, target, cfg.b0(), cfg.h);
  EXPECT_EQ(o0 - o1, cfg.n0);
  EXPECT_THROW(detail::window_offset(ref, target, 0.3 * cfg.h, cfg.h), InvalidArgument);
}

TEST(Window, TensorWindowRestrictsEveryMode) {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_cp(rng, {6, 7, 8}, 2);
  const auto w = window(a, WindowOp{{1, 2, 3}, {3, 4, 5}});
  EXPECT_EQ(w.dims(), (Dims3{3, 4, 5}));
  EXPECT_NEAR(w(0, 0, 0), a(1, 2, 3), 1e-14);
  EXPECT_NEAR(w(2, 3, 4), a(3, 5, 7), 1e-14);
  EXPECT_THROW(window(a, WindowOp{{4, 0, 0}, {3, 1, 1}}), DimensionError);
}

TEST(ReferenceSize, CoversAllTranslates) {
  const auto cfg = small_config({4, 2, 1}, Boundary::Box);
  const auto ref = required_reference_size(cfg);
  for (int l = 0; l < 3; ++l) {
    EXPECT_GE(ref[l], cfg.grid_size(l));
    EXPECT_EQ((ref[l] - cfg.grid_size(l)) % 2, 0);
  }
  auto bad = small_config({1, 1, 1}, Boundary::Box, {Nucleus{{0.3 * 0.25, 0, 0}, 1.0}});
  EXPECT_THROW(required_reference_size(bad), InvalidArgument);
  auto mixed = small_config({1, 1, 1}, Boundary::Box, {Nucleus{{0.125, 0, 0}, 1.0}, Nucleus{{0.25, 0, 0}, 1.0}});
  EXPECT_THROW(required_reference_size(mixed), InvalidArgument);
}

TEST(UnitCellPotential, SingleNucleusIsCentredWindow) {
  const auto cfg = small_config({1, 1, 1}, Boundary::Box);
  const auto ref = reference_for(cfg);
  const auto pc = unit_cell_potential(cfg, ref);
  const Index off = (ref.dims()[0] - cfg.n) / 2;
  const auto w = window(ref, WindowOp{{off, off, off}, {cfg.n, cfg.n, cfg.n}});
  const auto a = materialize(pc), b = materialize(w);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-14 * b.data[i]);
}

TEST(UnitCellPotential, MirroredPairIsMirrorSymmetric) {
  const auto cfg = small_config({1, 1, 1}, Boundary::Box, {Nucleus{{0.5, 0, 0}, 1.0}, Nucleus{{-0.5, 0, 0}, 1.0}});
  const auto pc = materialize(unit_cell_potential(cfg, reference_for(cfg)));
  for (Index i = 0; i < cfg.n; ++i)
    for (Index j = 0; j < cfg.n; j += 3)
      EXPECT_NEAR(pc(i, j, 5), pc(cfg.n - 1 - i, j, 5), 1e-13 * pc(i, j, 5));
}

TEST(UnitCellPotential, PairMatchesTwoTermSum) {
  const auto cfg = small_config({1, 1, 1}, Boundary::Box, {Nucleus{{0.5, 0, 0}, 1.0}, Nucleus{{-0.5, 0, 0}, 1.0}});
  const auto pc = unit_cell_potential(cfg, reference_for(cfg, 1e-7));
  EXPECT_LE(pc.rank(), 2 * reference_for(cfg, 1e-7).rank());
  for (std::array<Index, 3> i : {std::array<Index, 3>{1, 8, 8}, {8, 2, 12}, {14, 13, 5}}) {
    const double exact = direct_cell_integral(cfg, i);
    EXPECT_NEAR(pc(i[0], i[1], i[2]) / exact, 1.0, 2e-7);
  }
}

TEST(BoxLatticePotential, DegenerateLatticeEqualsUnitCell) {
  const auto cfg = small_config({1, 1, 1}, Boundary::Box);
  const auto ref = reference_for(cfg);
  const auto a = materialize(box_lattice_potential(cfg, ref)), b = materialize(unit_cell_potential(cfg, ref));
  ASSERT_EQ(a.dims, b.dims);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-14 * b.data[i]);
}

TEST(BoxLatticePotential, TwoCellsMatchDirectSum) {
  const auto cfg = small_config({2, 1, 1}, Boundary::Box);
  const auto P = box_lattice_potential(cfg, reference_for(cfg, 1e-7));
  EXPECT_EQ(P.dims(), (Dims3{24, 16, 16}));
  for (std::array<Index, 3> i : {std::array<Index, 3>{0, 0, 0}, {7, 8, 9}, {12, 3, 8}, {23, 15, 1}}) {
    if (near_nucleus(cfg, i, 3 * cfg.h)) continue;
    EXPECT_NEAR(P(i[0], i[1], i[2]) / direct_cell_integral(cfg, i), 1.0, 2e-7);
  }
}

TEST(BoxLatticePotential, RankBoundedIndependentOfL) {
  const auto two = small_config({8, 1, 1}, Boundary::Box, {Nucleus{{0.5, 0, 0}, 1}, Nucleus{{-0.5, 0, 0}, 2}});
  const auto ref = reference_for(two, 1e-5);
  for (Index L : {2, 4, 8}) {
    auto cfg = two;
    cfg.L = {L, 1, 1};
    EXPECT_LE(box_lattice_potential(cfg, ref).rank(), 2 * ref.rank());
  }
}

TEST(PeriodicPotential, DegenerateLatticeEqualsUnitCell) {
  const auto cfg = small_config({1, 1, 1}, Boundary::Periodic);
  const auto ref = reference_for(cfg);
  const auto a = materialize(periodic_cell_potential(cfg, ref)), b = materialize(unit_cell_potential(cfg, ref));
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-14 * b.data[i]);
}

TEST(PeriodicPotential, ThreeCellsMatchDirectSum) {
  const auto cfg = small_config({3, 1, 1}, Boundary::Periodic);
  const auto P = periodic_cell_potential(cfg, reference_for(cfg, 1e-7));
  EXPECT_EQ(P.dims(), (Dims3{16, 16, 16}));
  for (std::array<Index, 3> i : {std::array<Index, 3>{0, 0, 0}, {3, 8, 9}, {12, 3, 8}, {15, 15, 1}}) {
    if (near_nucleus(cfg, i, 3 * cfg.h)) continue;
    EXPECT_NEAR(P(i[0], i[1], i[2]) / direct_cell_integral(cfg, i), 1.0, 2e-7);
  }
}

TEST(PeriodicPotential, GrowsWithLAndStaysPositive) {
  auto cfg = small_config({5, 1, 1}, Boundary::Periodic);
  const auto ref = reference_for(cfg, 1e-5);
  DenseTensor3 prev;
  for (Index L : {1, 3, 5}) {
    cfg.L = {L, 1, 1};
    const auto cur = materialize(periodic_cell_potential(cfg, ref));
    for (double v : cur.data) EXPECT_GT(v, 0.0);
    if (!prev.data.empty()) {
      for (std::size_t i = 0; i < cur.data.size(); ++i) EXPECT_GT(cur.data[i], prev.data[i]);
    }
    prev = cur;
  }
}

TEST(PeriodicPotential, MultiAxisRankAndPositivity) {
  const auto cfg = small_config({2, 3, 2}, Boundary::Periodic);
  const auto ref = reference_for(cfg, 1e-5);
  const auto P = periodic_cell_potential(cfg, ref);
  EXPECT_LE(P.rank(), ref.rank());
  for (int l = 0; l < 3; ++l) EXPECT_GE(P.factor(l).minCoeff(), 0.0);
  EXPECT_GT(P.weights().minCoeff(), 0.0);
}

TEST(DirectSumOracle, Basics) {
  auto cfg = small_config({1, 1, 1}, Boundary::Box);
  EXPECT_DOUBLE_EQ(direct_sum_oracle(cfg, {{1.0, 0.0, 0.0}})[0], 1.0);
  auto z2 = cfg;
  z2.nuclei[0].charge = 2;
  const std::vector<std::array<double, 3>> probes{{0.3, 0.1, -0.7}, {1.5, 1.5, 1.5}};
  const auto a = direct_sum_oracle(cfg, probes), b = direct_sum_oracle(z2, probes);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(b[i], 2 * a[i]);
  EXPECT_THROW(direct_sum_oracle(cfg, {{0, 0, 0}}), InvalidArgument);
}

TEST(DirectSumOracle, MatchesIndependentDoubleLoop) {
  // Unit charges sitting at the corners of the 2x2x2 cell array, i.e. at
  // cell-centre offsets of +-b0/2 along each axis from the supercell centre.
  auto cfg = small_config({2, 2, 2}, Boundary::Box);
  const std::vector<std::array<double, 3>> probes{{0.1, 0.2, 0.3}, {2.7, -1.1, 0.4}};
  const auto got = direct_sum_oracle(cfg, probes);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    double s = 0;
    for (int c = 0; c < 8; ++c) {
      double r2 = 0;
      for (int l = 0; l < 3; ++l) {
        const double a = ((c >> l) & 1 ? 0.5 : -0.5) * cfg.b0();
        r2 += (probes[p][l] - a) * (probes[p][l] - a);
      }
      s += 1 / std::sqrt(r2);
    }
    EXPECT_NEAR(got[p], s, 1e-14 * s);
  }
}

TEST(LatticeConfig, ValidationErrors) {
  auto cfg = small_config({1, 1, 1}, Boundary::Box);
  EXPECT_NO_THROW(cfg.validate());
  auto out = cfg;
  out.nuclei[0].position = {1.0, 0, 0};  // b0 / 2 = 1.0: on the boundary, not strictly inside
  EXPECT_THROW(out.validate(), InvalidArgument);
  auto q = cfg;
  q.nuclei[0].charge = 0;
  EXPECT_THROW(q.validate(), InvalidArgument);
  auto n = cfg;
  n.n = 4;
  EXPECT_THROW(n.validate(), InvalidArgument);
  EXPECT_EQ(small_config({4, 1, 1}, Boundary::Box).grid_size(0), 8 * 4 + 16 - 8);
}
