#pragma once

// Exponential-sum (sinc quadrature) approximation of the Newton kernel 1/r and
// its projection onto piecewise constants on a uniform 3D grid.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "latticeham/cp_tensor.hpp"
#include "latticeham/error.hpp"
#include "latticeham/parallel.hpp"

namespace latticeham {

/// Uniform tensor grid of cells [origin + i h, origin + (i+1) h] per axis.
struct GridSpec {
  std::array<Eigen::Index, 3> n{0, 0, 0};
  double h = 0;
  std::array<double, 3> origin{0, 0, 0};

  /// Grid of n_l cells per axis centered at the origin.
  static GridSpec centered(std::array<Eigen::Index, 3> n, double h) {
    GridSpec g{n, h, {}};
    for (int l = 0; l < 3; ++l) g.origin[l] = -0.5 * static_cast<double>(n[l]) * h;
    g.validate();
    return g;
  }
  static GridSpec centered(Eigen::Index n, double h) { return centered({n, n, n}, h); }

  double cell_left(int mode, Eigen::Index i) const {
    return origin[mode] + static_cast<double>(i) * h;
  }
  double cell_center(int mode, Eigen::Index i) const {
    return origin[mode] + (static_cast<double>(i) + 0.5) * h;
  }
  double edge(int mode) const { return static_cast<double>(n[mode]) * h; }

  void validate() const {
    if (!(h > 0)) throw InvalidArgument("GridSpec: h must be positive");
    for (auto ni : n)
      if (ni < 2) throw InvalidArgument("GridSpec: need at least 2 cells per axis");
  }
  bool symmetric_about_origin() const {
    for (int l = 0; l < 3; ++l)
      if (std::abs(origin[l] + 0.5 * edge(l)) > 1e-12 * h * static_cast<double>(n[l]))
        return false;
    return true;
  }
};

/// 1/r ~= sum_q w_q exp(-t_q^2 r^2), accurate on [r_min, r_max].
class SincQuadrature {
 public:
  SincQuadrature(std::vector<double> nodes, std::vector<double> weights, double target_rel_err,
                 double r_min, double r_max)
      : nodes_(std::move(nodes)),
        weights_(std::move(weights)),
        target_(target_rel_err),
        r_min_(r_min),
        r_max_(r_max) {
    if (nodes_.size() != weights_.size())
      throw DimensionError("SincQuadrature: nodes and weights differ in length");
    for (std::size_t q = 0; q < nodes_.size(); ++q) {
      if (!(nodes_[q] > 0)) throw InvalidArgument("SincQuadrature: nodes must be positive");
      if (q > 0 && !(nodes_[q] > nodes_[q - 1]))
        throw InvalidArgument("SincQuadrature: nodes must be strictly increasing");
      if (!(weights_[q] >= 0)) throw InvalidArgument("SincQuadrature: weights must be >= 0");
    }
    if (!(r_min_ > 0 && r_max_ >= r_min_))
      throw InvalidArgument("SincQuadrature: need 0 < r_min <= r_max");
  }

  std::size_t rank() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  double target_rel_err() const { return target_; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

  double operator()(double r) const {
    double s = 0;
    for (std::size_t q = 0; q < nodes_.size(); ++q)
      s += weights_[q] * std::exp(-nodes_[q] * nodes_[q] * r * r);
    return s;
  }

  SincQuadrature with_weights(std::vector<double> w) const {
    return SincQuadrature(nodes_, std::move(w), target_, r_min_, r_max_);
  }

 private:
  std::vector<double> nodes_, weights_;
  double target_, r_min_, r_max_;
};

/// max over log-spaced radii in [r_min, r_max] of r |1/r - q(r)|.
inline double validate_quadrature(const SincQuadrature& q, int sample_count) {
  if (sample_count < 2) throw InvalidArgument("validate_quadrature: sample_count must be >= 2");
  const double lo = std::log(q.r_min()), hi = std::log(q.r_max());
  double worst = 0;
  for (int s = 0; s < sample_count; ++s) {
    const double r = std::exp(lo + (hi - lo) * s / (sample_count - 1));
    worst = std::max(worst, std::abs(1.0 - r * q(r)));
  }
  return worst;
}

namespace detail {

inline double softplus(double u) { return u > 30 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }
inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Trapezoidal rule with step `s` on [u_lo, u_hi] for
//   1/rho = 2/sqrt(pi) int exp(-rho^2 t^2) dt,  t = log(1 + e^u),
// for the normalized variable rho = r / r_min.
inline void trapezoid_rule(double s, double u_lo, double u_hi, std::vector<double>& t,
                           std::vector<double>& w) {
  t.clear();
  w.clear();
  const double c = 2.0 / std::sqrt(std::numbers::pi) * s;
  const auto k_lo = static_cast<long>(std::floor(u_lo / s));
  const auto k_hi = static_cast<long>(std::ceil(u_hi / s));
  for (long k = k_lo; k <= k_hi; ++k) {
    const double u = static_cast<double>(k) * s;
    t.push_back(softplus(u));
    w.push_back(c * logistic(u));
  }
}

inline double rule_error(const std::vector<double>& t, const std::vector<double>& w,
                         double rho_max, int samples) {
  const double hi = std::log(rho_max);
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    const double rho = samples == 1 ? 1.0 : std::exp(hi * i / (samples - 1));
    double sum = 0;
    for (std::size_t q = 0; q < t.size(); ++q) sum += w[q] * std::exp(-t[q] * t[q] * rho * rho);
    worst = std::max(worst, std::abs(1.0 - rho * sum));
  }
  return worst;
}

}  // namespace detail

/// Builds an exponential-sum rule for 1/r on [r_min, r_max] with relative
/// error at most `target_rel_err`. The step of the sinc rule is reduced until
/// the rule validates; surplus end terms are trimmed afterwards.
inline SincQuadrature build_quadrature(double r_min, double r_max, double target_rel_err,
                                       std::size_t max_rank = 256) {
  if (!(r_min > 0 && r_max >= r_min))
    throw InvalidArgument("build_quadrature: need 0 < r_min <= r_max");
  if (!(target_rel_err > 0 && target_rel_err <= 1e-2))
    throw InvalidArgument("build_quadrature: target_rel_err must lie in (0, 1e-2]");

  const double rho_max = r_max / r_min;
  const int samples = rho_max == 1.0 ? 1 : 4096;
  const double goal = 0.9 * target_rel_err;
  // Tail bounds: the left tail integrand is below e^u, the right one below
  // exp(-t^2) for rho >= 1.
  const double u_lo = std::log(goal * std::sqrt(std::numbers::pi) / (8.0 * rho_max));
  double t_hi = 1.0;
  while (std::erfc(t_hi) > goal / 4) t_hi += 0.05;
  const double u_hi = std::log(std::expm1(t_hi));

  std::vector<double> t, w;
  bool ok = false;
  for (double s = 1.0; s > 1e-3; s *= 0.9) {
    detail::trapezoid_rule(s, u_lo, u_hi, t, w);
    if (t.size() > max_rank) break;
    if (detail::rule_error(t, w, rho_max, samples) <= goal) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw NumericalError("build_quadrature: no rule with rank <= " + std::to_string(max_rank) +
                         " reaches relative error " + std::to_string(target_rel_err) +
                         " on [" + std::to_string(r_min) + ", " + std::to_string(r_max) + "]");

  // Trim end terms while the rule still validates.
  for (bool trimmed = true; trimmed && t.size() > 1;) {
    trimmed = false;
    for (bool front : {true, false}) {
      auto t2 = t, w2 = w;
      if (front) {
        t2.erase(t2.begin());
        w2.erase(w2.begin());
      } else {
        t2.pop_back();
        w2.pop_back();
      }
      if (!t2.empty() && detail::rule_error(t2, w2, rho_max, samples) <= goal) {
        t = std::move(t2);
        w = std::move(w2);
        trimmed = true;
      }
    }
  }

  for (std::size_t q = 0; q < t.size(); ++q) {
    t[q] /= r_min;
    w[q] /= r_min;
  }
  return SincQuadrature(std::move(t), std::move(w), target_rel_err, r_min, r_max);
}

/// int_a^b exp(-t^2 x^2) dx without cancellation for any t > 0.
inline double gaussian_cell_integral(double t, double a, double b) {
  if (b < a) return -gaussian_cell_integral(t, b, a);
  if (a < 0 && b > 0) {
    return 0.5 * std::sqrt(std::numbers::pi) / t * (std::erf(t * b) + std::erf(-t * a));
  }
  if (b <= 0) {
    const double na = -b;
    b = -a;
    a = na;
  }
  // 0 <= a < b. Smooth, slowly varying integrand: Gauss-Legendre; otherwise
  // the erfc difference has no cancellation.
  const double rise = t * t * (b * b - a * a);
  if (rise < 1.0 && t * (b - a) < 1.0) {
    static constexpr std::array<double, 8> x{-0.9602898564975363, -0.7966664774136267,
                                             -0.5255324099163290, -0.1834346424956498,
                                             0.1834346424956498,  0.5255324099163290,
                                             0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> wt{0.1012285362903763, 0.2223810344533745,
                                              0.3137066458778873, 0.3626837833783620,
                                              0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0;
    for (int i = 0; i < 8; ++i) {
      const double xi = mid + half * x[i];
      s += wt[i] * std::exp(-t * t * xi * xi);
    }
    return s * half;
  }
  return 0.5 * std::sqrt(std::numbers::pi) / t * (std::erfc(t * a) - std::erfc(t * b));
}

/// Cell integrals of exp(-t^2 x^2) over the cells of `grid` along `mode`.
inline Eigen::VectorXd gaussian_cell_factor(const GridSpec& grid, int mode, double t) {
  const Eigen::Index n = grid.n[mode];
  Eigen::VectorXd f(n);
  if (grid.symmetric_about_origin()) {
    // Integer edge offsets make mirrored cells bitwise mirrored.
    const double half = 0.5 * grid.h;
    for (Eigen::Index i = 0; i < n; ++i)
      f[i] = gaussian_cell_integral(t, static_cast<double>(2 * i - n) * half,
                                    static_cast<double>(2 * i + 2 - n) * half);
    return f;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = grid.cell_left(mode, i);
    f[i] = gaussian_cell_integral(t, a, a + grid.h);
  }
  return f;
}

/// Exact integral of 1/|x| over the box [lo, hi] from the corner antiderivative
/// yz asinh(x / |(y,z)|) + ... - x^2/2 atan(yz / (x r)) - ...
inline double box_integral_inverse_distance(const std::array<double, 3>& lo,
                                            const std::array<double, 3>& hi) {
  auto F = [](double x, double y, double z) {
    const double r = std::sqrt(x * x + y * y + z * z);
    auto log_term = [](double a, double b, double c) {
      return (b == 0 || c == 0) ? 0.0 : b * c * std::asinh(a / std::sqrt(b * b + c * c));
    };
    auto atan_term = [r](double a, double b, double c) {
      return a == 0 ? 0.0 : 0.5 * a * a * std::atan(b * c / (a * r));
    };
    return log_term(x, y, z) + log_term(y, z, x) + log_term(z, x, y) - atan_term(x, y, z) -
           atan_term(y, z, x) - atan_term(z, x, y);
  };
  double s = 0;
  for (int c = 0; c < 8; ++c) {
    const int upper = (c & 1) + ((c >> 1) & 1) + ((c >> 2) & 1);
    const double f = F((c & 1) ? hi[0] : lo[0], (c & 2) ? hi[1] : lo[1], (c & 4) ? hi[2] : lo[2]);
    s += (upper % 2 == 1) ? f : -f;
  }
  return s;
}

/// Rank-R reference tensor of cell integrals of 1/|x| on a grid symmetric
/// about the origin; each term is a product of three 1D Gaussian integrals.
inline CanonicalTensor3 build_reference_tensor(const GridSpec& grid, const SincQuadrature& q) {
  grid.validate();
  if (!grid.symmetric_about_origin())
    throw InvalidArgument("build_reference_tensor: grid must be symmetric about the origin");
  double half_diag2 = 0;
  for (int l = 0; l < 3; ++l) half_diag2 += 0.25 * grid.edge(l) * grid.edge(l);
  const double needed_max = std::sqrt(half_diag2);
  if (q.r_min() > grid.h * (1 + 1e-12) || q.r_max() < needed_max * (1 - 1e-12))
    throw InvalidArgument("build_reference_tensor: quadrature interval [" +
                          std::to_string(q.r_min()) + ", " + std::to_string(q.r_max()) +
                          "] does not cover [h, " + std::to_string(needed_max) + "]");

  const auto r = static_cast<Eigen::Index>(q.rank());
  std::array<Eigen::MatrixXd, 3> f;
  for (int l = 0; l < 3; ++l) f[l].resize(grid.n[l], r);
  parallel_for(static_cast<std::size_t>(r), [&](std::size_t qi) {
    const auto col = static_cast<Eigen::Index>(qi);
    for (int l = 0; l < 3; ++l) f[l].col(col) = gaussian_cell_factor(grid, l, q.nodes()[qi]);
  });
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(q.weights().data(), r);
  return CanonicalTensor3(std::move(w), std::move(f));
}

}  // namespace latticeham
