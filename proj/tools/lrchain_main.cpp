#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lrchain/io/run.hpp"
#include "lrchain/version.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "run config (JSON); defaults are used when omitted");
  sub->add_option("--out", f.out, "output directory (overrides output_dir)");
  sub->add_option("--seed", f.seed, "RNG seed (overrides seed)");
  sub->add_option("--threads", f.threads, "worker threads (overrides threads)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace lrchain::io;
  CLI::App app{"lattice chain with long-range interactions: effective potentials, ground states, transition energies"};
  app.set_version_flag("--version", std::string(lrchain::version()));
  app.require_subcommand(1);
  Flags flags;
  const char* help[] = {
      "psi0 and the per-branch reduced solutions at the ell points, plus a curve",
      "convex envelope of psi0: K intervals, J segments, tangents",
      "minimizer sets M_ell at the ell points",
      "global minimization of the renormalized energy",
      "transition energy between two microstates",
      "interface detection, Gamma-limit comparison and shift check",
      "batch over M_list x ell_grid (x n_list)",
  };
  for (std::size_t k = 0; k < subcommands().size(); ++k) add_flags(app.add_subcommand(subcommands()[k], help[k]), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!flags.config.empty()) cfg = load_config(flags.config);
    if (flags.out) cfg.output_dir = *flags.out;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) {
      if (*flags.threads < 1) throw ConfigError("--threads", 0, "must be >= 1");
      cfg.threads = *flags.threads;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << (flags.config.empty() ? "" : flags.config + ": ") << e.message() << '\n';
    return kExitConfig;
  }
  return run(command, cfg, cfg.output_dir, std::cerr);
}
