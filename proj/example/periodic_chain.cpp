// Builds the core Hamiltonian of a periodic hydrogen-like chain and prints the
// lowest band energies from the Fourier-decoupled solver.

#include <iomanip>
#include <iostream>

#include "latticeham/experiment.hpp"

int main(int argc, char** argv) {
  using namespace latticeham;
  const Index L = argc > 1 ? std::stoll(argv[1]) : 16;
  const auto x = parse_config(json::parse(R"({"lattice": {"h": 0.1, "n0": 30, "n": 150},
                                              "basis": {"exponents": [0.3, 0.9, 2.7, 8.1]}})"));
  const LatticeSystem s = build_system(x, {L, 1, 1}, Boundary::Periodic);
  const Spectrum sp = solve_periodic_fft(s.H, s.AS.S);

  std::cout << "L=" << L << " m0=" << s.basis.m0() << " L0=" << s.cfg.L0 << " potential rank=" << s.potential_rank
            << '\n';
  std::cout << std::setprecision(10);
  for (Index i = 0; i < std::min<Index>(8, sp.size()); ++i)
    std::cout << "  lambda_" << i << " = " << sp.eigenvalues[i] << "  (j=" << sp.j[i][0] << ")\n";
  std::cout << "energy per cell = " << average_energy_per_cell(sp, L, L) << '\n';
}
