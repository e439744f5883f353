#pragma once

#include <span>
#include <vector>

#include "lrchain/effective_potential.hpp"

namespace lrchain {

/// Periodic chain in slope variables: z_i = (u_{i+1} - u_i) / eps_n.
struct ChainConfig {
  int n = 0;
  int M = 2;
  double ell = 0.0;
  double L = 1.0;
  std::vector<double> slopes;

  int q() const { return n % M; }
  double eps() const { return L / n; }
  double slope(long i) const { return slopes[static_cast<std::size_t>(((i % n) + n) % n)]; }
  /// u_i with u_0 = 0 (not periodic: u_n = n eps_n ell).
  std::vector<double> displacements() const;
};

/// Builds a config whose ell is the measured mean slope.
ChainConfig make_config(std::vector<double> slopes, int M, double L = 1.0);

/// Throws Error(MeanMismatch) when the slope mean differs from cfg.ell by more than 1e-9.
void check_mean(const ChainConfig& cfg);

/// psi_0 data frozen at one mean slope ell: the tangent r_ell is looked up once.
class EnergyModel {
 public:
  EnergyModel(const EffectivePotential& ep, double ell);

  const EffectivePotential& potential() const { return *ep_; }
  int M() const { return ep_->M(); }
  double ell() const { return ell_; }
  const TangentLine& tangent() const { return r_; }

  /// psi_M(m) + (1/M) sum psi_1(z_k) - r_ell(m) over the window z[0..M).
  double cell(std::span<const double> window) const;
  /// Same with wrapped indices into a periodic slope vector.
  double cell_at(std::span<const double> slopes, long i) const;

 private:
  const EffectivePotential* ep_;
  double ell_;
  TangentLine r_;
};

struct CellEnergyReport {
  std::vector<double> cells;  // E^i, i = 0..n-1
  std::vector<double> means;  // m_i
  double total = 0.0;
};

struct RenormalizedEnergy {
  double value = 0.0;                // sum of cell energies
  double difference_quotient = 0.0;  // (E_{n,M} - L psi0**(ell)) / eps_n
  double discrepancy = 0.0;
};

double cell_energy(const EnergyModel& model, const ChainConfig& cfg, int i);
CellEnergyReport cell_report(const EnergyModel& model, const ChainConfig& cfg);
RenormalizedEnergy total_renormalized_energy(const EnergyModel& model, const ChainConfig& cfg);

/// E_{n,M} = sum eps_n psi_1(z_i) + sum eps_n psi_M(m_i).
double unrenormalized_energy(const EffectivePotential& ep, const ChainConfig& cfg);

}  // namespace lrchain
