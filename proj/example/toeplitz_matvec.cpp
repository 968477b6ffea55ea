// Multiplies a random two-level symmetric block Toeplitz matrix by a vector
// through its circulant embedding and checks the result densely.

#include <iostream>
#include <random>

#include "latticeham/mlbc.hpp"

int main() {
  using namespace latticeham;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  const Index m0 = 3;
  BlockCoefficientTensor t(BlockTag::SymmetricToeplitz, {12, 9, 1}, m0, 0);
  // Offsets come lexicographically, so -c is always visited before c > 0.
  for_each_index(t.offset_lo(), t.offset_hi(), [&](const Lattice3& c) {
    Eigen::MatrixXd b(m0, m0);
    for (Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
    const Lattice3 minus{-c[0], -c[1], -c[2]};
    if (c == minus)
      t.generator(c) = b + b.transpose();
    else if (c > minus)
      t.generator(c) = t.generator(minus).transpose();
    else
      t.generator(c) = b;
  });
  Eigen::VectorXd x(t.full_size());
  for (Index i = 0; i < x.size(); ++i) x[i] = g(rng);

  const Eigen::VectorXd fast = matvec_toeplitz(t, x);
  const Eigen::VectorXd dense = to_dense(t) * x;
  std::cout << "size " << x.size() << ", relative difference " << (fast - dense).norm() / dense.norm() << '\n';
}
