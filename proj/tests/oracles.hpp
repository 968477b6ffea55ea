#pragma once

// Independent reference computations used by the test suite. Nothing here
// calls into the library except for plain data types.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "latticeham/cp_tensor.hpp"

namespace oracle {

/// Naive triple loop over the CP sum, for comparison with materialize.
inline double cp_entry(const latticeham::CanonicalTensor3& a, Eigen::Index i, Eigen::Index j, Eigen::Index k) {
  double s = 0;
  for (Eigen::Index q = 0; q < a.rank(); ++q) {
    double p = a.weights()[q];
    p *= a.factor(0)(i, q);
    p *= a.factor(1)(j, q);
    p *= a.factor(2)(k, q);
    s += p;
  }
  return s;
}

inline latticeham::CanonicalTensor3 random_cp(std::mt19937_64& rng, latticeham::Dims3 d, Eigen::Index r) {
  std::normal_distribution<double> g;
  Eigen::VectorXd w(r);
  std::array<Eigen::MatrixXd, 3> f;
  for (auto& x : w) x = g(rng);
  for (int l = 0; l < 3; ++l) {
    f[l].resize(d[l], r);
    for (Eigen::Index i = 0; i < f[l].size(); ++i) f[l].data()[i] = g(rng);
  }
  return latticeham::CanonicalTensor3(w, f);
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (z * p1 - p0) / (z * z - 1);
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2 / ((1 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Tensor-product Gauss-Legendre over a box, bisected adaptively until two
/// refinement levels agree to `rel`.
inline double box_cubature(const std::function<double(double, double, double)>& f,
                           std::array<double, 3> lo, std::array<double, 3> hi, double rel = 1e-12,
                           int depth = 0) {
  static const auto gl = gauss_legendre(10);
  auto rule = [&](std::array<double, 3> a, std::array<double, 3> b) {
    double s = 0;
    for (std::size_t i = 0; i < gl.first.size(); ++i)
      for (std::size_t j = 0; j < gl.first.size(); ++j)
        for (std::size_t k = 0; k < gl.first.size(); ++k) {
          const double x = 0.5 * (a[0] + b[0]) + 0.5 * (b[0] - a[0]) * gl.first[i];
          const double y = 0.5 * (a[1] + b[1]) + 0.5 * (b[1] - a[1]) * gl.first[j];
          const double z = 0.5 * (a[2] + b[2]) + 0.5 * (b[2] - a[2]) * gl.first[k];
          s += gl.second[i] * gl.second[j] * gl.second[k] * f(x, y, z);
        }
    return s * 0.125 * (b[0] - a[0]) * (b[1] - a[1]) * (b[2] - a[2]);
  };
  const double whole = rule(lo, hi);
  double split = 0;
  std::vector<std::pair<std::array<double, 3>, std::array<double, 3>>> kids;
  for (int c = 0; c < 8; ++c) {
    std::array<double, 3> a, b;
    for (int l = 0; l < 3; ++l) {
      const double mid = 0.5 * (lo[l] + hi[l]);
      a[l] = (c >> l) & 1 ? mid : lo[l];
      b[l] = (c >> l) & 1 ? hi[l] : mid;
    }
    kids.emplace_back(a, b);
    split += rule(a, b);
  }
  if (std::abs(split - whole) <= rel * std::abs(split) || depth >= 6) return split;
  double s = 0;
  for (auto& [a, b] : kids) s += box_cubature(f, a, b, rel, depth + 1);
  return s;
}

/// Integral of 1/|x| over a box away from the origin.
inline double cell_integral_inverse_distance(std::array<double, 3> lo, std::array<double, 3> hi) {
  return box_cubature([](double x, double y, double z) { return 1.0 / std::sqrt(x * x + y * y + z * z); },
                      lo, hi, 1e-11);
}

/// Composite 10-point Gauss-Legendre on [a, b] with `panels` equal panels.
inline double composite_gl(const std::function<double(double)>& f, double a, double b, int panels = 400) {
  static const auto gl = gauss_legendre(10);
  const double w = (b - a) / panels;
  double s = 0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * w;
    for (std::size_t i = 0; i < gl.first.size(); ++i) s += gl.second[i] * f(mid + 0.5 * w * gl.first[i]);
  }
  return 0.5 * w * s;
}

/// Adaptive Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double a, double b, double fa, double fm, double fb, double whole, int depth) {
        const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
        if (depth > 40 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
        return rec(a, m, fa, flm, fm, left, depth + 1) + rec(m, b, fm, frm, fb, right, depth + 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), 0);
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a * a.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

/// Real eigenvalues of a symmetric matrix by classical Jacobi rotations.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1 : -1) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Eigen::VectorXd e = a.diagonal();
  std::sort(e.data(), e.data() + n);
  return e;
}

}  // namespace oracle
