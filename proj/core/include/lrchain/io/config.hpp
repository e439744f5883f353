#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrchain/effective_potential.hpp"
#include "lrchain/error.hpp"
#include "lrchain/io/json_writer.hpp"
#include "lrchain/solver.hpp"
#include "lrchain/transition.hpp"

namespace lrchain::io {

struct WellConfig {
  std::string kind = "quadratic";  // quadratic | polynomial
  double center = 0.0;
  double curvature = 1.0;
  std::vector<double> coefficients;  // polynomial, increasing degree
};

struct RunConfig {
  WellConfig w1{"quadratic", -1.0, 1.0, {}};
  WellConfig w2{"quadratic", 1.0, 1.0, {}};
  WellConfig psi_m{"quadratic", 0.0, 0.25, {}};
  double growth_constant = 0.5;
  std::optional<double> range;

  int M = 2;
  std::vector<int> M_list;  // sweep only; defaults to {M}
  std::vector<int> n_list{40};
  std::vector<double> ell_list{0.0};
  double L = 1.0;

  EnvelopeOptions envelope;
  SolverOptions solver;
  TransitionOptions transition;
  std::vector<double> z_left;
  std::vector<double> z_right;
  std::optional<int> window_N;
  std::optional<double> xi;
  bool invariance = false;

  std::optional<double> eta;
  std::vector<double> analysis_slopes;
  bool gamma_compare = true;

  bool sweep_minimize = false;
  bool sweep_phi = false;

  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = "out";
};

/// Validation failure: the field path and, when known, the 1-based line.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, int line, const std::string& msg);
  const std::string& field() const { return field_; }
  int line() const { return line_; }
  /// "line N: field: msg" without the error-code prefix.
  const std::string& message() const { return message_; }

 private:
  std::string field_;
  int line_;
  std::string message_;
};

/// Parses and validates a JSON config. `text` is the file content; unknown
/// keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Checks every invariant (M >= 2, n >= M, tolerances > 0, potentials...).
/// `text` is only used to locate fields for diagnostics.
void validate_config(const RunConfig& cfg, const std::string& text = {});

/// The full config with every default filled in.
Json resolved_config(const RunConfig& cfg);

PotentialSpec make_spec(const RunConfig& cfg);

}  // namespace lrchain::io
