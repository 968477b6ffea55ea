#include <CLI11.hpp>

#include <iostream>

#include "latticeham/experiment.hpp"

namespace lh = latticeham;

int main(int argc, char** argv) {
  CLI::App app{"Lattice-structured Hamiltonians: kernels, spectra, timings"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "RNG seed (overrides seed)");
  };
  auto* kernel = app.add_subcommand("kernel", "build the Coulomb kernel and report its accuracy");
  auto* spectrum = app.add_subcommand("spectrum", "spectra in box and periodic mode, with gap table");
  auto* bench = app.add_subcommand("bench", "dense versus Fourier eigensolver timings over the sweep");
  auto* sparsity = app.add_subcommand("sparsity", "nonzero block pattern of the nuclear potential");
  auto* energy = app.add_subcommand("energy", "average occupied energy per cell over the sweep");
  for (auto* s : {kernel, spectrum, bench, sparsity, energy}) add_common(s);

  CLI11_PARSE(app, argc, argv);

  try {
    lh::ExperimentConfig cfg = lh::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (kernel->parsed()) lh::cmd_kernel(cfg);
    if (spectrum->parsed()) lh::cmd_spectrum(cfg);
    if (bench->parsed()) lh::cmd_bench(cfg);
    if (sparsity->parsed()) lh::cmd_sparsity(cfg);
    if (energy->parsed()) lh::cmd_energy(cfg);
  } catch (const lh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lh::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const lh::DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << '\n';
    return 2;
  } catch (const lh::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
