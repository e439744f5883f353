#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lrchain/io/config.hpp"

namespace lrchain::io {

enum ExitStatus : int {
  kExitOk = 0,
  kExitError = 1,
  kExitConfig = 2,
  kExitNoConvergence = 3,
  kExitBudget = 4,
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"psi0", "envelope", "microstates", "minimize", "phi", "analyze", "sweep"};
  return names;
}

/// Everything a subcommand produces, before it touches the disk.
struct Artifacts {
  int status = kExitOk;
  Json document;
  /// Relative path and content. The JSON document itself is "<command>.json".
  std::vector<std::pair<std::string, std::string>> files;
};

/// Runs one subcommand in memory. Library errors become a non-zero status and
/// an "error" block; the document is always filled in.
Artifacts execute(const std::string& command, const RunConfig& cfg);

/// execute() and write every artifact below out_dir. Diagnostics go to err.
int run(const std::string& command, const RunConfig& cfg, const std::string& out_dir, std::ostream& err);

}  // namespace lrchain::io
