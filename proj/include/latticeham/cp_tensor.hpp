#pragma once

// Order-3 canonical (CP) tensors: sum of weighted rank-1 outer products.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "latticeham/error.hpp"

namespace latticeham {

using Dims3 = std::array<Eigen::Index, 3>;

/// Dense order-3 array, first index fastest. Only used as a test oracle.
struct DenseTensor3 {
  Dims3 dims{0, 0, 0};
  std::vector<double> data;

  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    return data[static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k))];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data[static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k))];
  }
};

/// Rank-1 tensor: weight * u1 (x) u2 (x) u3.
struct RankOneTensor3 {
  std::array<Eigen::VectorXd, 3> factors;
  double weight = 1.0;

  Dims3 dims() const { return {factors[0].size(), factors[1].size(), factors[2].size()}; }
};

/// R-term canonical tensor sum_q c_q u_q^(1) (x) u_q^(2) (x) u_q^(3).
///
/// Factor columns are kept unit-norm in the Euclidean norm and the magnitude of
/// each term lives in its weight. A term whose factor has zero norm is stored
/// with weight 0 and zero columns.
class CanonicalTensor3 {
 public:
  CanonicalTensor3() = default;

  /// Empty (rank-0) tensor of the given dims; represents zero.
  explicit CanonicalTensor3(const Dims3& dims) {
    for (int l = 0; l < 3; ++l) factors_[l].resize(dims[l], 0);
  }

  /// Takes raw weights and factor columns; columns are normalized on entry.
  CanonicalTensor3(Eigen::VectorXd weights, std::array<Eigen::MatrixXd, 3> factors)
      : weights_(std::move(weights)), factors_(std::move(factors)) {
    const auto r = weights_.size();
    for (int l = 0; l < 3; ++l) {
      if (factors_[l].cols() != r)
        throw DimensionError("CanonicalTensor3: factor " + std::to_string(l) + " has " +
                             std::to_string(factors_[l].cols()) + " columns, expected " +
                             std::to_string(r));
    }
    normalize();
  }

  /// Takes factors that are already unit-normalized, storing them bit for bit.
  static CanonicalTensor3 from_normalized(Eigen::VectorXd weights, std::array<Eigen::MatrixXd, 3> factors) {
    CanonicalTensor3 t;
    for (int l = 0; l < 3; ++l)
      if (factors[l].cols() != weights.size())
        throw DimensionError("CanonicalTensor3: factor " + std::to_string(l) + " column count mismatch");
    t.weights_ = std::move(weights);
    t.factors_ = std::move(factors);
    return t;
  }

  Eigen::Index rank() const { return weights_.size(); }
  Dims3 dims() const { return {factors_[0].rows(), factors_[1].rows(), factors_[2].rows()}; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& factor(int mode) const { return factors_[static_cast<std::size_t>(mode)]; }

  /// Pointwise evaluation of one entry, O(R).
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    double s = 0;
    for (Eigen::Index q = 0; q < rank(); ++q)
      s += weights_[q] * factors_[0](i, q) * factors_[1](j, q) * factors_[2](k, q);
    return s;
  }

  bool all_finite() const {
    if (!weights_.allFinite()) return false;
    return std::all_of(factors_.begin(), factors_.end(),
                       [](const Eigen::MatrixXd& f) { return f.allFinite(); });
  }

  static CanonicalTensor3 from_rank_one(const RankOneTensor3& t) {
    std::array<Eigen::MatrixXd, 3> f;
    for (int l = 0; l < 3; ++l) f[l] = t.factors[l];
    return CanonicalTensor3(Eigen::VectorXd::Constant(1, t.weight), std::move(f));
  }

 private:
  void normalize() {
    for (Eigen::Index q = 0; q < rank(); ++q) {
      double scale = 1.0;
      for (auto& f : factors_) {
        const double nrm = f.col(q).norm();
        if (nrm > 0) f.col(q) /= nrm;
        scale *= nrm;
      }
      weights_[q] *= scale;
      if (scale == 0.0) {
        weights_[q] = 0.0;
        for (auto& f : factors_) f.col(q).setZero();
      }
    }
  }

  Eigen::VectorXd weights_;
  std::array<Eigen::MatrixXd, 3> factors_;
};

namespace detail {
inline void require_same_dims(const Dims3& a, const Dims3& b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": dims (" + std::to_string(a[0]) + "," +
                         std::to_string(a[1]) + "," + std::to_string(a[2]) + ") vs (" +
                         std::to_string(b[0]) + "," + std::to_string(b[1]) + "," +
                         std::to_string(b[2]) + ")");
}
}  // namespace detail

/// Entrywise product of two rank-1 tensors; the result is again rank 1.
inline RankOneTensor3 hadamard_rank1(const RankOneTensor3& a, const RankOneTensor3& b) {
  detail::require_same_dims(a.dims(), b.dims(), "hadamard_rank1");
  RankOneTensor3 out;
  out.weight = a.weight * b.weight;
  for (int l = 0; l < 3; ++l) {
    out.factors[l] = a.factors[l].cwiseProduct(b.factors[l]);
    const double nrm = out.factors[l].norm();
    if (nrm > 0) out.factors[l] /= nrm;
    out.weight *= nrm;
  }
  if (out.weight == 0.0)
    for (auto& f : out.factors) f.setZero();
  return out;
}

/// Euclidean inner product via per-mode Gram matrices, O(Ra Rb (n1+n2+n3)).
inline double inner(const CanonicalTensor3& a, const CanonicalTensor3& b) {
  detail::require_same_dims(a.dims(), b.dims(), "inner");
  if (a.rank() == 0 || b.rank() == 0) return 0.0;
  Eigen::MatrixXd g = a.factor(0).transpose() * b.factor(0);
  g.array() *= (a.factor(1).transpose() * b.factor(1)).array();
  g.array() *= (a.factor(2).transpose() * b.factor(2)).array();
  return a.weights().dot(g * b.weights());
}

/// Concatenation of terms; rank(out) = rank(a) + rank(b).
inline CanonicalTensor3 add(const CanonicalTensor3& a, const CanonicalTensor3& b) {
  detail::require_same_dims(a.dims(), b.dims(), "add");
  const auto ra = a.rank(), rb = b.rank();
  Eigen::VectorXd w(ra + rb);
  w << a.weights(), b.weights();
  std::array<Eigen::MatrixXd, 3> f;
  for (int l = 0; l < 3; ++l) {
    f[l].resize(a.dims()[l], ra + rb);
    f[l] << a.factor(l), b.factor(l);
  }
  return CanonicalTensor3(std::move(w), std::move(f));
}

/// alpha * a, scaling the weights only.
inline CanonicalTensor3 scale(const CanonicalTensor3& a, double alpha) {
  std::array<Eigen::MatrixXd, 3> f{a.factor(0), a.factor(1), a.factor(2)};
  return CanonicalTensor3(a.weights() * alpha, std::move(f));
}

/// Drops terms with |c_q| <= tol * max|c|. tol = 0 returns the input unchanged.
inline CanonicalTensor3 prune(const CanonicalTensor3& a, double tol) {
  if (tol < 0) throw InvalidArgument("prune: tol must be non-negative");
  if (tol == 0.0 || a.rank() == 0) return a;
  const double cut = tol * a.weights().cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index q = 0; q < a.rank(); ++q)
    if (std::abs(a.weights()[q]) > cut) keep.push_back(q);
  const auto r = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd w(r);
  std::array<Eigen::MatrixXd, 3> f;
  for (int l = 0; l < 3; ++l) f[l].resize(a.dims()[l], r);
  for (Eigen::Index p = 0; p < r; ++p) {
    w[p] = a.weights()[keep[static_cast<std::size_t>(p)]];
    for (int l = 0; l < 3; ++l) f[l].col(p) = a.factor(l).col(keep[static_cast<std::size_t>(p)]);
  }
  return CanonicalTensor3(std::move(w), std::move(f));
}

inline constexpr Eigen::Index kDefaultMaterializeCap = 64 * 64 * 64;

/// Full array of a CP tensor. Throws when n1*n2*n3 exceeds `cap`.
inline DenseTensor3 materialize(const CanonicalTensor3& a,
                                Eigen::Index cap = kDefaultMaterializeCap) {
  const auto d = a.dims();
  const Eigen::Index total = d[0] * d[1] * d[2];
  if (total > cap)
    throw InvalidArgument("materialize: " + std::to_string(total) + " entries exceed cap " +
                          std::to_string(cap));
  DenseTensor3 out{d, std::vector<double>(static_cast<std::size_t>(total), 0.0)};
  Eigen::Map<Eigen::MatrixXd> front(out.data.data(), d[0], d[1] * d[2]);
  for (Eigen::Index q = 0; q < a.rank(); ++q) {
    // Kronecker of modes 2 and 3 laid out with mode 2 fastest.
    Eigen::VectorXd tail(d[1] * d[2]);
    for (Eigen::Index k = 0; k < d[2]; ++k)
      tail.segment(k * d[1], d[1]) = a.factor(1).col(q) * a.factor(2)(k, q);
    front.noalias() += a.weights()[q] * a.factor(0).col(q) * tail.transpose();
  }
  return out;
}

inline DenseTensor3 materialize(const RankOneTensor3& a,
                                Eigen::Index cap = kDefaultMaterializeCap) {
  return materialize(CanonicalTensor3::from_rank_one(a), cap);
}

// Binary dump, little-endian:
//   "CPT3" | u32 version | u64 dims[3] | u64 R | f64 weights[R] |
//   f64 factors mode by mode, column-major within each factor.

inline constexpr std::uint32_t kCptVersion = 1;

namespace detail {
template <class T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw InvalidArgument("binary read: unexpected end of stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}
}  // namespace detail

inline void write_binary(std::ostream& os, const CanonicalTensor3& t) {
  os.write("CPT3", 4);
  detail::write_le<std::uint32_t>(os, kCptVersion);
  for (auto d : t.dims()) detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(d));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(t.rank()));
  for (Eigen::Index q = 0; q < t.rank(); ++q) detail::write_le<double>(os, t.weights()[q]);
  for (int l = 0; l < 3; ++l) {
    const auto& f = t.factor(l);
    for (Eigen::Index j = 0; j < f.cols(); ++j)
      for (Eigen::Index i = 0; i < f.rows(); ++i) detail::write_le<double>(os, f(i, j));
  }
}

inline CanonicalTensor3 read_canonical_tensor(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "CPT3", 4) != 0)
    throw InvalidArgument("read_canonical_tensor: bad magic");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kCptVersion)
    throw InvalidArgument("read_canonical_tensor: unsupported version " + std::to_string(version));
  Dims3 dims;
  for (auto& d : dims) d = static_cast<Eigen::Index>(detail::read_le<std::uint64_t>(is));
  const auto r = static_cast<Eigen::Index>(detail::read_le<std::uint64_t>(is));
  Eigen::VectorXd w(r);
  for (Eigen::Index q = 0; q < r; ++q) w[q] = detail::read_le<double>(is);
  std::array<Eigen::MatrixXd, 3> f;
  for (int l = 0; l < 3; ++l) {
    f[l].resize(dims[l], r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < dims[l]; ++i) f[l](i, j) = detail::read_le<double>(is);
  }
  return CanonicalTensor3::from_normalized(std::move(w), std::move(f));
}

}  // namespace latticeham
