#pragma once

// Coefficient tensors of m0 x m0 blocks generating multilevel block circulant,
// symmetric block Toeplitz, or general block-banded matrices.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "latticeham/cp_tensor.hpp"
#include "latticeham/error.hpp"

namespace latticeham {

using Eigen::Index;
using Lattice3 = std::array<Index, 3>;

enum class BlockTag : std::uint32_t { Circulant = 0, SymmetricToeplitz = 1, GeneralBanded = 2 };

inline const char* to_string(BlockTag t) {
  switch (t) {
    case BlockTag::Circulant: return "circulant";
    case BlockTag::SymmetricToeplitz: return "symmetric-toeplitz";
    case BlockTag::GeneralBanded: return "general-banded";
  }
  return "unknown";
}

inline Index lattice_cells(const Lattice3& L) { return L[0] * L[1] * L[2]; }

/// Number of leading levels needed to describe L (trailing unit levels dropped).
inline int lattice_levels(const Lattice3& L) {
  int d = 1;
  for (int l = 0; l < 3; ++l)
    if (L[l] > 1) d = l + 1;
  return d;
}

/// Lexicographic linear index of a cell, first level slowest.
inline Index cell_index(const Lattice3& k, const Lattice3& L) {
  return (k[0] * L[1] + k[1]) * L[2] + k[2];
}

inline Lattice3 cell_from_index(Index i, const Lattice3& L) {
  Lattice3 k;
  k[2] = i % L[2];
  i /= L[2];
  k[1] = i % L[1];
  k[0] = i / L[1];
  return k;
}

/// Calls f(c) for every c with lo <= c <= hi componentwise, first level slowest.
template <class F>
void for_each_index(const Lattice3& lo, const Lattice3& hi, F&& f) {
  for (Index a = lo[0]; a <= hi[0]; ++a)
    for (Index b = lo[1]; b <= hi[1]; ++b)
      for (Index c = lo[2]; c <= hi[2]; ++c) f(Lattice3{a, b, c});
}

inline Index positive_mod(Index a, Index m) {
  const Index r = a % m;
  return r < 0 ? r + m : r;
}

class BlockCoefficientTensor {
 public:
  BlockCoefficientTensor() = default;

  /// Zero tensor. Circulant stores offsets in [0, L); SymmetricToeplitz stores
  /// offsets in (-L, L); GeneralBanded stores, for every row cell, the offsets
  /// in [-B, B] with B = min(L0, L - 1) per level. Offset c addresses the
  /// block in row cell k and column cell k - c.
  BlockCoefficientTensor(BlockTag tag, Lattice3 L, Index m0, Index L0)
      : tag_(tag), L_(L), m0_(m0), L0_(L0) {
    for (auto x : L_)
      if (x < 1) throw InvalidArgument("BlockCoefficientTensor: lattice sizes must be >= 1");
    if (m0 < 1) throw InvalidArgument("BlockCoefficientTensor: m0 must be >= 1");
    if (L0 < 0) throw InvalidArgument("BlockCoefficientTensor: L0 must be >= 0");
    for (int l = 0; l < 3; ++l) {
      switch (tag_) {
        case BlockTag::Circulant:
          lo_[l] = 0;
          hi_[l] = L_[l] - 1;
          break;
        case BlockTag::SymmetricToeplitz:
          lo_[l] = -(L_[l] - 1);
          hi_[l] = L_[l] - 1;
          break;
        case BlockTag::GeneralBanded:
          hi_[l] = std::min(L0_, L_[l] - 1);
          lo_[l] = -hi_[l];
          break;
      }
      ext_[l] = hi_[l] - lo_[l] + 1;
    }
    const Index count =
        ext_[0] * ext_[1] * ext_[2] * (tag_ == BlockTag::GeneralBanded ? lattice_cells(L_) : 1);
    blocks_.assign(static_cast<std::size_t>(count), Eigen::MatrixXd::Zero(m0_, m0_));
  }

  BlockTag tag() const { return tag_; }
  int levels() const { return lattice_levels(L_); }
  const Lattice3& dims() const { return L_; }
  Index cells() const { return lattice_cells(L_); }
  Index m0() const { return m0_; }
  Index bandwidth() const { return L0_; }
  Index full_size() const { return cells() * m0_; }
  const Lattice3& offset_lo() const { return lo_; }
  const Lattice3& offset_hi() const { return hi_; }

  std::vector<Eigen::MatrixXd>& blocks() { return blocks_; }
  const std::vector<Eigen::MatrixXd>& blocks() const { return blocks_; }

  bool stores_offset(const Lattice3& c) const {
    for (int l = 0; l < 3; ++l)
      if (c[l] < lo_[l] || c[l] > hi_[l]) return false;
    return true;
  }

  /// Generator block for offset c (Circulant or SymmetricToeplitz).
  Eigen::MatrixXd& generator(const Lattice3& c) { return blocks_[generator_slot(c)]; }
  const Eigen::MatrixXd& generator(const Lattice3& c) const { return blocks_[generator_slot(c)]; }

  /// Banded block in row cell k at offset c (GeneralBanded).
  Eigen::MatrixXd& banded(const Lattice3& k, const Lattice3& c) { return blocks_[banded_slot(k, c)]; }
  const Eigen::MatrixXd& banded(const Lattice3& k, const Lattice3& c) const {
    return blocks_[banded_slot(k, c)];
  }

  /// Block (k, m) of the generated matrix, or nullptr when it is structurally zero.
  const Eigen::MatrixXd* block_at(const Lattice3& k, const Lattice3& m) const {
    Lattice3 c;
    switch (tag_) {
      case BlockTag::Circulant:
        for (int l = 0; l < 3; ++l) c[l] = positive_mod(k[l] - m[l], L_[l]);
        return &generator(c);
      case BlockTag::SymmetricToeplitz:
        for (int l = 0; l < 3; ++l) c[l] = k[l] - m[l];
        return &generator(c);
      case BlockTag::GeneralBanded:
        for (int l = 0; l < 3; ++l) c[l] = k[l] - m[l];
        if (!stores_offset(c)) return nullptr;
        return &banded(k, c);
    }
    return nullptr;
  }

  /// Largest |entry| difference between this and the transpose-partner
  /// blocks; zero means the generated matrix is exactly symmetric.
  double symmetry_defect() const {
    double worst = 0;
    const Lattice3 zero{0, 0, 0};
    if (tag_ == BlockTag::GeneralBanded) {
      for_each_index(zero, {L_[0] - 1, L_[1] - 1, L_[2] - 1}, [&](const Lattice3& k) {
        for_each_index(lo_, hi_, [&](const Lattice3& c) {
          Lattice3 m, mc;
          for (int l = 0; l < 3; ++l) {
            m[l] = k[l] - c[l];
            mc[l] = -c[l];
          }
          for (int l = 0; l < 3; ++l)
            if (m[l] < 0 || m[l] >= L_[l]) return;
          worst = std::max(worst, (banded(k, c) - banded(m, mc).transpose()).cwiseAbs().maxCoeff());
        });
      });
      return worst;
    }
    for_each_index(lo_, hi_, [&](const Lattice3& c) {
      Lattice3 p;
      for (int l = 0; l < 3; ++l)
        p[l] = tag_ == BlockTag::Circulant ? positive_mod(-c[l], L_[l]) : -c[l];
      worst = std::max(worst, (generator(c) - generator(p).transpose()).cwiseAbs().maxCoeff());
    });
    return worst;
  }

  bool operator==(const BlockCoefficientTensor& o) const {
    if (tag_ != o.tag_ || L_ != o.L_ || m0_ != o.m0_ || L0_ != o.L0_) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (blocks_[i] != o.blocks_[i]) return false;
    return true;
  }

  /// Little-endian layout: u32 tag, u32 d, u64 L1..L3, u64 m0, u64 L0, then
  /// f64 blocks in storage order, column-major within each block.
  void write_binary(std::ostream& os) const {
    detail::write_le(os, static_cast<std::uint32_t>(tag_));
    detail::write_le(os, static_cast<std::uint32_t>(levels()));
    for (auto x : L_) detail::write_le(os, static_cast<std::uint64_t>(x));
    detail::write_le(os, static_cast<std::uint64_t>(m0_));
    detail::write_le(os, static_cast<std::uint64_t>(L0_));
    for (const auto& b : blocks_)
      for (Index i = 0; i < b.size(); ++i) detail::write_le(os, b.data()[i]);
    if (!os) throw Error("BlockCoefficientTensor: write failed");
  }

  static BlockCoefficientTensor read_binary(std::istream& is) {
    const auto tag = detail::read_le<std::uint32_t>(is);
    const auto d = detail::read_le<std::uint32_t>(is);
    Lattice3 L;
    for (auto& x : L) x = static_cast<Index>(detail::read_le<std::uint64_t>(is));
    const auto m0 = static_cast<Index>(detail::read_le<std::uint64_t>(is));
    const auto L0 = static_cast<Index>(detail::read_le<std::uint64_t>(is));
    if (tag > 2) throw Error("BlockCoefficientTensor: unknown tag " + std::to_string(tag));
    BlockCoefficientTensor t(static_cast<BlockTag>(tag), L, m0, L0);
    if (static_cast<int>(d) != t.levels())
      throw Error("BlockCoefficientTensor: level count does not match lattice sizes");
    for (auto& b : t.blocks_)
      for (Index i = 0; i < b.size(); ++i) b.data()[i] = detail::read_le<double>(is);
    return t;
  }

 private:
  std::size_t generator_slot(const Lattice3& c) const {
    if (tag_ == BlockTag::GeneralBanded)
      throw InvalidArgument("BlockCoefficientTensor: banded tensor has no generators");
    return offset_slot(c);
  }
  std::size_t banded_slot(const Lattice3& k, const Lattice3& c) const {
    if (tag_ != BlockTag::GeneralBanded)
      throw InvalidArgument("BlockCoefficientTensor: not a banded tensor");
    for (int l = 0; l < 3; ++l)
      if (k[l] < 0 || k[l] >= L_[l]) throw DimensionError("BlockCoefficientTensor: row cell out of range");
    return static_cast<std::size_t>(cell_index(k, L_) * ext_[0] * ext_[1] * ext_[2]) + offset_slot(c);
  }
  std::size_t offset_slot(const Lattice3& c) const {
    if (!stores_offset(c)) throw DimensionError("BlockCoefficientTensor: offset out of range");
    return static_cast<std::size_t>(((c[0] - lo_[0]) * ext_[1] + (c[1] - lo_[1])) * ext_[2] +
                                    (c[2] - lo_[2]));
  }

  BlockTag tag_ = BlockTag::Circulant;
  Lattice3 L_{1, 1, 1};
  Index m0_ = 1;
  Index L0_ = 0;
  Lattice3 lo_{0, 0, 0}, hi_{0, 0, 0}, ext_{1, 1, 1};
  std::vector<Eigen::MatrixXd> blocks_{Eigen::MatrixXd::Zero(1, 1)};
};

/// Separable circulant coefficients: the block at offset c is the Hadamard
/// product modes[0][c1] .* modes[1][c2] .* modes[2][c3].
struct FactorizedTerm {
  std::array<std::vector<Eigen::MatrixXd>, 3> modes;
};

/// Number of nonzero blocks in each block row of the generated matrix.
inline std::vector<Index> nonzero_blocks_per_row(const BlockCoefficientTensor& t) {
  const Lattice3& L = t.dims();
  std::vector<Index> counts(static_cast<std::size_t>(t.cells()), 0);
  for (Index i = 0; i < t.cells(); ++i) {
    const Lattice3 k = cell_from_index(i, L);
    for (Index j = 0; j < t.cells(); ++j) {
      const auto* b = t.block_at(k, cell_from_index(j, L));
      if (b && (b->array() != 0.0).any()) ++counts[static_cast<std::size_t>(i)];
    }
  }
  return counts;
}

}  // namespace latticeham
