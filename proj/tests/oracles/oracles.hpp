#pragma once

// Test-side reference computations. They only use the raw well formulas and
// Eigen, never the library's solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Quad {
  double c = 0.0;  // center
  double k = 1.0;  // curvature
  double operator()(double z) const { return k * (z - c) * (z - c); }
};

struct Wells {
  Quad w1{-1.0, 1.0};
  Quad w2{1.0, 1.0};
  double a = 0.25;  // psi_M(z) = a z^2
  double psi1(double z) const { return std::min(w1(z), w2(z)); }
  double psim(double z) const { return a * z * z; }
  const Quad& well(int s) const { return s == 1 ? w1 : w2; }
};

inline Wells prototype() { return {}; }

struct BranchGrid {
  double value = std::numeric_limits<double>::infinity();  // j W1(z1) + (M-j) W2(z2)
  double z1 = 0.0;
  double z2 = 0.0;
};

/// Grid over (z1, z2) on the line j z1 + (M-j) z2 = M z, region constraints
/// checked pointwise.
inline BranchGrid grid_branch(const Wells& w, int M, int j, double z, double step = 1e-4, double half = 4.0) {
  BranchGrid best;
  auto in1 = [&](double x) { return w.w1(x) <= w.w2(x); };
  auto in2 = [&](double x) { return w.w2(x) <= w.w1(x); };
  if (j == 0) {
    if (in2(z)) best = {M * w.w2(z), z, z};
    return best;
  }
  if (j == M) {
    if (in1(z)) best = {M * w.w1(z), z, z};
    return best;
  }
  const long steps = static_cast<long>(std::llround(2 * half / step));
  for (long s = 0; s <= steps; ++s) {
    const double z2 = -half + step * s;
    const double z1 = (M * z - (M - j) * z2) / j;
    if (!in1(z1) || !in2(z2)) continue;
    const double v = j * w.w1(z1) + (M - j) * w.w2(z2);
    if (v < best.value) best = {v, z1, z2};
  }
  return best;
}

/// psi_0 by brute force: psi_M(z) + min over j and a grid of the j-group slope
/// of the psi_1 average, no region bookkeeping at all.
inline double grid_psi0(const Wells& w, int M, double z, double step = 1e-4, double half = 4.0) {
  double best = M * w.psi1(z);
  const long steps = static_cast<long>(std::llround(2 * half / step));
  for (int j = 1; j < M; ++j) {
    for (long s = 0; s <= steps; ++s) {
      const double z1 = -half + step * s;
      const double z2 = (M * z - j * z1) / (M - j);
      best = std::min(best, j * w.psi1(z1) + (M - j) * w.psi1(z2));
    }
  }
  return w.psim(z) + best / M;
}

inline double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a), fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Renormalized periodic chain energy: sum over cells of
/// psi_M(m_i) + (1/M) sum psi_1(z) - (s m_i + r0).
inline double chain_energy(const Wells& w, int M, const std::vector<double>& z, double s, double r0) {
  const int n = static_cast<int>(z.size());
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    double m = 0.0, p = 0.0;
    for (int k = 0; k < M; ++k) {
      const double x = z[static_cast<std::size_t>((i + k) % n)];
      m += x / M;
      p += w.psi1(x) / M;
    }
    e += w.psim(m) + p - (s * m + r0);
  }
  return e;
}

struct ChainSolve {
  double energy = std::numeric_limits<double>::infinity();  // relaxed energy with W_sigma
  std::vector<double> z;
  std::vector<int> sigma;
};

/// Closed-form KKT solve of the fully quadratic problem for a fixed
/// assignment: min sum_i a m_i^2 + sum_b k (z_b - c)^2 - sum_i (s m_i + r0)
/// subject to sum z = n ell.
inline ChainSolve chain_given(const Wells& w, int M, double ell, const std::vector<int>& sigma, double s, double r0) {
  const int n = static_cast<int>(sigma.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < M; ++k) A(i, (i + k) % n) += 1.0 / M;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  K.topLeftCorner(n, n) = 2.0 * w.a * A.transpose() * A;
  for (int b = 0; b < n; ++b) {
    const Quad& q = w.well(sigma[static_cast<std::size_t>(b)]);
    K(b, b) += 2.0 * q.k;
    rhs(b) = 2.0 * q.k * q.c + s * A.col(b).sum();
    K(b, n) = K(n, b) = 1.0;
  }
  rhs(n) = n * ell;
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  ChainSolve out;
  out.sigma = sigma;
  out.z.assign(x.data(), x.data() + n);
  double e = 0.0;
  const Eigen::VectorXd m = A * x.head(n);
  for (int i = 0; i < n; ++i) e += w.psim(m(i)) - (s * m(i) + r0);
  for (int b = 0; b < n; ++b) e += w.well(sigma[static_cast<std::size_t>(b)])(x(b));
  out.energy = e;
  return out;
}

/// Minimum over all 2^n assignments. Equal to the true minimum because
/// psi_1 = min(W1, W2).
inline ChainSolve chain_min(const Wells& w, int M, double ell, int n, double s, double r0) {
  ChainSolve best;
  std::vector<int> sigma(static_cast<std::size_t>(n));
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    for (int b = 0; b < n; ++b) sigma[static_cast<std::size_t>(b)] = (mask >> b) & 1u ? 2 : 1;
    auto r = chain_given(w, M, ell, sigma, s, r0);
    if (r.energy < best.energy - 1e-13) best = r;
  }
  return best;
}

/// Exhaustive transition-window oracle, right offset free. Free bonds
/// b = -N..N-1, far fields z_left / z_right repeated M-periodically, cells
/// i = -N-M+1..N-1 covering bonds i..i+M-1.
inline double window_min(const Wells& w, int M, int N, const std::vector<double>& zl, const std::vector<double>& zr,
                         double s, double r0) {
  const int nf = 2 * N;
  const int first = -N - M + 1;
  const int nb = (N + M - 1) - first;  // bonds first..N+M-2
  auto mod = [](int a, int m) { return ((a % m) + m) % m; };
  std::vector<double> fixed(static_cast<std::size_t>(nb), 0.0);
  for (int b = first; b < first + nb; ++b) {
    if (b < -N) fixed[static_cast<std::size_t>(b - first)] = zl[static_cast<std::size_t>(mod(b, M))];
    if (b >= N) fixed[static_cast<std::size_t>(b - first)] = zr[static_cast<std::size_t>(mod(b, M))];
  }
  const int ncell = (N - 1) - first + 1;
  // m = B x + d for free variables x
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(ncell, nf);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(ncell);
  double fixed_psi = 0.0;
  for (int c = 0; c < ncell; ++c) {
    const int i = first + c;
    for (int k = 0; k < M; ++k) {
      const int b = i + k;
      if (b >= -N && b < N) {
        B(c, b + N) += 1.0 / M;
      } else {
        d(c) += fixed[static_cast<std::size_t>(b - first)] / M;
        fixed_psi += w.psi1(fixed[static_cast<std::size_t>(b - first)]) / M;
      }
    }
  }
  // each free bond sits in M cells, contributing W/M each
  const Eigen::MatrixXd H0 = 2.0 * w.a * B.transpose() * B;
  const Eigen::VectorXd g0 = -2.0 * w.a * B.transpose() * d + s * B.transpose() * Eigen::VectorXd::Ones(ncell);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << nf); ++mask) {
    Eigen::MatrixXd H = H0;
    Eigen::VectorXd g = g0;
    for (int b = 0; b < nf; ++b) {
      const Quad& q = (mask >> b) & 1u ? w.w2 : w.w1;
      H(b, b) += 2.0 * q.k;
      g(b) += 2.0 * q.k * q.c;
    }
    const Eigen::VectorXd x = H.llt().solve(g);
    const Eigen::VectorXd m = B * x + d;
    double e = fixed_psi;
    for (int c = 0; c < ncell; ++c) e += w.psim(m(c)) - (s * m(c) + r0);
    for (int b = 0; b < nf; ++b) e += ((mask >> b) & 1u ? w.w2 : w.w1)(x(b));
    best = std::min(best, e);
  }
  return best;
}

struct Bitangent {
  double slope = 0.0;
  double intercept = 0.0;
  double a = 0.0;  // touching point on the first parabola
  double b = 0.0;
};

/// Common tangent of A z^2 + B1 z + C1 and A z^2 + B2 z + C2 (same A).
inline Bitangent parabola_bitangent(double A, double B1, double C1, double B2, double C2) {
  Bitangent t;
  t.slope = 0.5 * (B1 + B2) + 2.0 * A * (C2 - C1) / (B1 - B2);
  t.intercept = C1 - (t.slope - B1) * (t.slope - B1) / (4.0 * A);
  t.a = (t.slope - B1) / (2.0 * A);
  t.b = (t.slope - B2) / (2.0 * A);
  return t;
}

/// For unit-curvature wells at -1 and 1 with psi_M = a z^2, the interior
/// branch is a z^2 + (z - c_j)^2 with c_j = 1 - 2j/M.
inline Bitangent prototype_bitangent(int M, int j_left, double a = 0.25) {
  const double cl = 1.0 - 2.0 * j_left / M;
  const double cr = 1.0 - 2.0 * (j_left - 1) / M;
  return parabola_bitangent(a + 1.0, -2.0 * cl, cl * cl, -2.0 * cr, cr * cr);
}

inline long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace oracle
