#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lrchain/lattice_energy.hpp"
#include "lrchain/microstates.hpp"
#include "lrchain/transition.hpp"

namespace lrchain {

/// Track k holds z_{M b + k} for blocks b = 0..blocks-1.
struct SlopeTracks {
  int M = 0;
  int blocks = 0;
  std::vector<std::vector<double>> tracks;
  std::vector<double> remainder;  // the q bonds after the last full block
};

SlopeTracks m_interpolations(const ChainConfig& cfg);

struct InterfaceInfo {
  double position = 0.0;  // in (0, L]
  int first_cell = 0;
  int last_cell = 0;      // may be < first_cell when the cluster wraps
  int cells = 0;          // members of I_n(eta) in the cluster
  double energy = 0.0;
  int left_segment = -1;
  int right_segment = -1;
  /// Number of times the chain wraps between the two neighbouring segments;
  /// the right label is read through sigma_q that many times.
  int wrap_shift = 0;
};

struct PhaseSegment {
  double start = 0.0;
  double end = 0.0;
  double length = 0.0;
  int first_cell = 0;
  int last_cell = 0;
  int label = -1;          // index into PhaseDecomposition::set.members
  std::vector<double> z;   // block-aligned tuple of the label
  double alpha = 0.0;
  double classification_error = 0.0;
  /// Too short to classify on its own; label carried over across the wrap.
  bool inferred = false;
  int wrap = 0;  // unwrapped lap index of the segment's cells
};

struct PhaseDecomposition {
  double eta = 0.0;
  double total_energy = 0.0;
  std::vector<double> cell_energies;
  std::vector<int> high_cells;  // I_n(eta)
  std::vector<InterfaceInfo> interfaces;
  std::vector<PhaseSegment> segments;  // in order of increasing position
  int q = 0;
  std::vector<int> shift_map;  // k -> (q + k) mod M
  double classification_radius = 0.0;
  double volume_fraction_gap = 0.0;
  bool counting_bound_holds = false;
  MicrostateSet set;
};

double default_eta(double energy, int n);

/// Throws Error(UnclassifiedSegment) when a low-energy run is farther than the
/// classification radius from every member of M_ell.
PhaseDecomposition detect_interfaces(const EnergyModel& model, const ChainConfig& cfg,
                                     std::optional<double> eta = std::nullopt);

struct GammaTerm {
  int interface = 0;
  int left_label = -1;
  int right_label = -1;
  double phi = 0.0;
};

struct GammaReport {
  double energy = 0.0;
  double phi_sum = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  std::vector<GammaTerm> terms;
};

GammaReport gamma_limit_compare(const EnergyModel& model, const ChainConfig& cfg, const PhaseDecomposition& phases,
                                const TransitionOptions& opts = {});

struct ShiftReport {
  int q = 0;
  int rotation = 0;  // bonds the config was rotated by before checking
  std::vector<int> track_map;
  std::vector<double> deviations;  // |z_k - z_{n-M+k}| per k
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool labels_checked = false;
  bool labels_match = false;
  bool passed = false;
  std::vector<std::string> violations;
};

/// The slopes starting track k continue the slopes closing track (q + k) mod M.
ShiftReport shift_periodicity_check(const EnergyModel& model, const ChainConfig& cfg, const PhaseDecomposition& phases);

/// Rotates the slope sequence left by r bonds: out_i = z_{i + r}.
ChainConfig rotate_config(const ChainConfig& cfg, int r);

}  // namespace lrchain
