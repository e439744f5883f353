#include "lrchain/lattice_energy.hpp"

#include <cmath>
#include <sstream>

#include "lrchain/error.hpp"

namespace lrchain {

std::vector<double> ChainConfig::displacements() const {
  std::vector<double> u(n + 1, 0.0);
  for (int i = 0; i < n; ++i) u[i + 1] = u[i] + eps() * slopes[i];
  return u;
}

ChainConfig make_config(std::vector<double> slopes, int M, double L) {
  if (M < 2) throw Error(ErrorCode::InvalidArgument, "M must be >= 2");
  if (static_cast<int>(slopes.size()) < M) throw Error(ErrorCode::InvalidArgument, "need n >= M");
  ChainConfig cfg;
  cfg.n = static_cast<int>(slopes.size());
  cfg.M = M;
  cfg.L = L;
  double s = 0.0;
  for (double z : slopes) s += z;
  cfg.ell = s / cfg.n;
  cfg.slopes = std::move(slopes);
  return cfg;
}

void check_mean(const ChainConfig& cfg) {
  if (cfg.n != static_cast<int>(cfg.slopes.size()) || cfg.n < cfg.M) {
    throw Error(ErrorCode::InvalidArgument, "slope vector length must equal n >= M");
  }
  double s = 0.0;
  for (double z : cfg.slopes) s += z;
  const double mean = s / cfg.n;
  if (std::abs(mean - cfg.ell) > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "mean slope " << mean << " differs from ell = " << cfg.ell;
    throw Error(ErrorCode::MeanMismatch, os.str());
  }
}

EnergyModel::EnergyModel(const EffectivePotential& ep, double ell) : ep_(&ep), ell_(ell), r_(ep.tangent(ell)) {}

double EnergyModel::cell(std::span<const double> window) const {
  const auto& spec = ep_->potentials();
  const int M = ep_->M();
  double sum = 0.0, w = 0.0;
  for (int k = 0; k < M; ++k) {
    sum += window[k];
    w += spec.psi1.value(window[k]);
  }
  const double m = sum / M;
  return spec.psi_m.value(m) + w / M - r_(m);
}

double EnergyModel::cell_at(std::span<const double> slopes, long i) const {
  const long n = static_cast<long>(slopes.size());
  const int M = ep_->M();
  double buf[64];
  std::vector<double> big;
  double* win = buf;
  if (M > 64) {
    big.resize(M);
    win = big.data();
  }
  for (int k = 0; k < M; ++k) win[k] = slopes[static_cast<std::size_t>((((i + k) % n) + n) % n)];
  return cell(std::span<const double>(win, M));
}

double cell_energy(const EnergyModel& model, const ChainConfig& cfg, int i) {
  if (i < 0 || i >= cfg.n) throw Error(ErrorCode::InvalidArgument, "cell index out of range");
  return model.cell_at(cfg.slopes, i);
}

CellEnergyReport cell_report(const EnergyModel& model, const ChainConfig& cfg) {
  CellEnergyReport rep;
  rep.cells.resize(cfg.n);
  rep.means.resize(cfg.n);
  const int M = cfg.M;
  for (int i = 0; i < cfg.n; ++i) {
    rep.cells[i] = model.cell_at(cfg.slopes, i);
    double s = 0.0;
    for (int k = 0; k < M; ++k) s += cfg.slope(i + k);
    rep.means[i] = s / M;
    rep.total += rep.cells[i];
  }
  return rep;
}

double unrenormalized_energy(const EffectivePotential& ep, const ChainConfig& cfg) {
  const auto& spec = ep.potentials();
  const int M = cfg.M;
  double e = 0.0;
  for (int i = 0; i < cfg.n; ++i) {
    double s = 0.0;
    for (int k = 0; k < M; ++k) s += cfg.slope(i + k);
    e += cfg.eps() * (spec.psi1.value(cfg.slopes[i]) + spec.psi_m.value(s / M));
  }
  return e;
}

RenormalizedEnergy total_renormalized_energy(const EnergyModel& model, const ChainConfig& cfg) {
  check_mean(cfg);
  if (std::abs(cfg.ell - model.ell()) > 1e-9) {
    throw Error(ErrorCode::MeanMismatch, "config mean slope differs from the energy model's ell");
  }
  RenormalizedEnergy out;
  for (int i = 0; i < cfg.n; ++i) out.value += model.cell_at(cfg.slopes, i);
  const double E = unrenormalized_energy(model.potential(), cfg);
  out.difference_quotient = (E - cfg.L * model.potential().convex_envelope(cfg.ell)) / cfg.eps();
  out.discrepancy = std::abs(out.difference_quotient - out.value);
  return out;
}

}  // namespace lrchain
