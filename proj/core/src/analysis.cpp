#include "lrchain/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "lrchain/error.hpp"

namespace lrchain {

namespace {

int wrap_index(long i, int n) { return static_cast<int>(((i % n) + n) % n); }

double to_period(double x, double L) {
  double r = std::fmod(x, L);
  if (r <= 0.0) r += L;
  return r;
}

struct Cluster {
  long first = 0;  // unwrapped cell indices
  long last = 0;
  double centroid = 0.0;  // unwrapped node coordinate
  double energy = 0.0;
  int high = 0;
};

struct Part {
  long first = 0;
  long last = 0;
  double start = 0.0;  // unwrapped node coordinate
  double end = 0.0;
};

}  // namespace

SlopeTracks m_interpolations(const ChainConfig& cfg) {
  SlopeTracks t;
  t.M = cfg.M;
  t.blocks = cfg.n / cfg.M;
  t.tracks.assign(cfg.M, std::vector<double>(t.blocks));
  for (int b = 0; b < t.blocks; ++b)
    for (int k = 0; k < cfg.M; ++k) t.tracks[k][b] = cfg.slopes[b * cfg.M + k];
  for (int i = t.blocks * cfg.M; i < cfg.n; ++i) t.remainder.push_back(cfg.slopes[i]);
  return t;
}

double default_eta(double energy, int n) { return std::max(1e-6, energy / (4.0 * n)); }

ChainConfig rotate_config(const ChainConfig& cfg, int r) {
  ChainConfig out = cfg;
  for (int i = 0; i < cfg.n; ++i) out.slopes[i] = cfg.slopes[wrap_index(static_cast<long>(i) + r, cfg.n)];
  return out;
}

PhaseDecomposition detect_interfaces(const EnergyModel& model, const ChainConfig& cfg, std::optional<double> eta) {
  check_mean(cfg);
  const int n = cfg.n;
  const int M = cfg.M;
  const int q = cfg.q();
  PhaseDecomposition pd;
  pd.q = q;
  for (int k = 0; k < M; ++k) pd.shift_map.push_back((q + k) % M);
  pd.cell_energies.resize(n);
  for (int i = 0; i < n; ++i) {
    pd.cell_energies[i] = model.cell_at(cfg.slopes, i);
    pd.total_energy += pd.cell_energies[i];
  }
  pd.eta = eta ? *eta : default_eta(pd.total_energy, n);
  if (!(pd.eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be > 0");
  for (int i = 0; i < n; ++i)
    if (pd.cell_energies[i] > pd.eta) pd.high_cells.push_back(i);
  // E can come out a few ulps below zero
  pd.counting_bound_holds = static_cast<double>(pd.high_cells.size()) <= std::max(pd.total_energy, 0.0) / pd.eta;

  pd.set = minimizer_set_ell(model.potential(), cfg.ell);
  pd.classification_radius = classification_radius(model.potential(), pd.set);
  const double eps = cfg.eps();

  // Clusters of I_n(eta) merged across gaps shorter than M cells, in
  // unwrapped coordinates starting at a cluster that follows a long gap.
  std::vector<Cluster> clusters;
  long origin = 0;
  const auto& hi = pd.high_cells;
  if (!hi.empty()) {
    const int h = static_cast<int>(hi.size());
    int start = -1;
    for (int k = 0; k < h; ++k) {
      const long prev = k == 0 ? hi[h - 1] - n : hi[k - 1];
      if (hi[k] - prev - 1 >= M) {
        start = k;
        break;
      }
    }
    if (start < 0) {
      Cluster c;
      c.first = 0;
      c.last = n - 1;
      c.high = h;
      clusters.push_back(c);
    } else {
      origin = hi[start];
      for (int t = 0; t < h; ++t) {
        long idx = hi[(start + t) % h];
        if (idx < origin) idx += n;
        if (clusters.empty() || idx - clusters.back().last - 1 >= M) {
          clusters.push_back({idx, idx, 0.0, 0.0, 0});
        }
        clusters.back().last = idx;
        clusters.back().high += 1;
      }
    }
    for (auto& c : clusters) {
      double w = 0.0, wx = 0.0;
      for (long i = c.first; i <= c.last; ++i) {
        const double e = std::max(0.0, pd.cell_energies[wrap_index(i, n)]);
        w += e;
        wx += e * (static_cast<double>(i) + 0.5 * M);
      }
      c.energy = w;
      c.centroid = w > 0.0 ? wx / w : 0.5 * (c.first + c.last) + 0.5 * M;
    }
  }

  // Low-energy runs between consecutive clusters (or the whole cycle).
  std::vector<Part> parts;
  std::vector<int> part_gap;  // which gap a part belongs to
  auto split_and_push = [&](long a, long b, double xa, double xb, int gap) {
    // Splits at lap boundaries when q != 0 so that each part is read in one
    // block alignment.
    long cur = a;
    double xcur = xa;
    while (cur <= b) {
      long lap_end = (cur >= 0 ? (cur / n + 1) * n : ((cur + 1) / n) * n) - 1;
      if (q == 0 || lap_end >= b) {
        parts.push_back({cur, b, xcur, xb});
        part_gap.push_back(gap);
        break;
      }
      const double xw = static_cast<double>(lap_end + 1);
      parts.push_back({cur, lap_end, xcur, xw});
      part_gap.push_back(gap);
      cur = lap_end + 1;
      xcur = xw;
    }
  };
  if (clusters.empty()) {
    split_and_push(0, n - 1, 0.0, static_cast<double>(n), 0);
  } else if (!(clusters.size() == 1 && clusters[0].last - clusters[0].first + 1 >= n)) {
    const int m = static_cast<int>(clusters.size());
    for (int k = 0; k < m; ++k) {
      const auto& c = clusters[k];
      const Cluster next = k + 1 < m ? clusters[k + 1]
                                     : Cluster{clusters[0].first + n, clusters[0].last + n,
                                               clusters[0].centroid + n, 0.0, 0};
      split_and_push(c.last + 1, next.first - 1, c.centroid, next.centroid, k);
    }
  }

  // Classification of each part against M_ell in its own block alignment.
  const auto& members = pd.set.members;
  for (const auto& pt : parts) {
    PhaseSegment seg;
    seg.first_cell = wrap_index(pt.first, n);
    seg.last_cell = wrap_index(pt.last, n);
    seg.start = to_period(pt.start * eps, cfg.L);
    seg.end = to_period(pt.end * eps, cfg.L);
    seg.length = (pt.end - pt.start) * eps;
    seg.wrap = static_cast<int>(std::floor(static_cast<double>(pt.first) / n));
    std::map<int, int> votes;
    std::vector<std::pair<int, std::vector<double>>> tuples;
    for (long i = pt.first; i <= pt.last; ++i) {
      if (q != 0 && std::floor(static_cast<double>(i) / n) != std::floor(static_cast<double>(i + M - 1) / n)) continue;
      std::vector<double> a(M);
      for (int k = 0; k < M; ++k) {
        const int b = wrap_index(i + k, n);
        a[b % M] = cfg.slopes[b];
      }
      int best = -1;
      double dist = std::numeric_limits<double>::infinity();
      for (std::size_t mm = 0; mm < members.size(); ++mm) {
        const double d = tuple_distance(a, members[mm].z);
        if (d < dist) {
          dist = d;
          best = static_cast<int>(mm);
        }
      }
      if (dist > pd.classification_radius) {
        std::ostringstream os;
        os << "low-energy cell " << wrap_index(i, n) << " is " << dist << " away from M_ell (radius "
           << pd.classification_radius << ")";
        throw Error(ErrorCode::UnclassifiedSegment, os.str());
      }
      votes[best] += 1;
      tuples.emplace_back(best, std::move(a));
    }
    if (!votes.empty()) {
      int label = votes.begin()->first;
      for (const auto& [l, c] : votes)
        if (c > votes[label]) label = l;
      seg.label = label;
      seg.z = members[label].z;
      seg.alpha = members[label].alpha;
      for (const auto& [l, a] : tuples) seg.classification_error = std::max(seg.classification_error, tuple_distance(a, seg.z));
      if (seg.classification_error > pd.classification_radius) {
        throw Error(ErrorCode::UnclassifiedSegment, "low-energy run mixes several microstates without an interface");
      }
    }
    pd.segments.push_back(std::move(seg));
  }

  // Parts too short to classify borrow the label of their partner across the wrap.
  for (std::size_t s = 0; s < pd.segments.size(); ++s) {
    auto& seg = pd.segments[s];
    if (seg.label >= 0) continue;
    const PhaseSegment* partner = nullptr;
    int shift = 0;
    if (s + 1 < pd.segments.size() && part_gap[s + 1] == part_gap[s] && pd.segments[s + 1].label >= 0) {
      partner = &pd.segments[s + 1];
      shift = q;  // this part precedes the wrap
    } else if (s > 0 && part_gap[s - 1] == part_gap[s] && pd.segments[s - 1].label >= 0) {
      partner = &pd.segments[s - 1];
      shift = (M - q) % M;
    }
    if (!partner) throw Error(ErrorCode::UnclassifiedSegment, "low-energy run too short to classify");
    const auto z = cyclic_shift(partner->z, shift);
    const int label = find_member(pd.set, z);
    if (label < 0) throw Error(ErrorCode::UnclassifiedSegment, "shifted label is not a member of M_ell");
    seg.label = label;
    seg.z = members[label].z;
    seg.alpha = members[label].alpha;
    seg.inferred = true;
  }

  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const auto& c = clusters[k];
    InterfaceInfo itf;
    itf.position = to_period(c.centroid * eps, cfg.L);
    itf.first_cell = wrap_index(c.first, n);
    itf.last_cell = wrap_index(c.last, n);
    itf.cells = c.high;
    itf.energy = c.energy;
    if (!parts.empty()) {
      // Right neighbour: first part of gap k; left: last part of gap k-1.
      int right = -1, left = -1;
      for (std::size_t s = 0; s < parts.size(); ++s) {
        if (part_gap[s] == static_cast<int>(k) && right < 0) right = static_cast<int>(s);
        if (part_gap[s] == static_cast<int>((k + clusters.size() - 1) % clusters.size())) left = static_cast<int>(s);
      }
      itf.left_segment = left;
      itf.right_segment = right;
      if (left >= 0 && right >= 0) {
        int lw = pd.segments[left].wrap;
        int rw = pd.segments[right].wrap;
        if (k == 0) rw += 1;  // the last gap runs up to the first cluster shifted by n
        itf.wrap_shift = rw - lw;
      }
    }
    pd.interfaces.push_back(itf);
  }

  if (!pd.segments.empty()) {
    double s = 0.0;
    for (const auto& seg : pd.segments) s += seg.alpha * seg.length;
    pd.volume_fraction_gap = std::abs(s / cfg.L - cfg.ell);
  } else {
    pd.volume_fraction_gap = std::numeric_limits<double>::quiet_NaN();
  }
  return pd;
}

GammaReport gamma_limit_compare(const EnergyModel& model, const ChainConfig& cfg, const PhaseDecomposition& phases,
                                const TransitionOptions& opts) {
  GammaReport rep;
  rep.energy = phases.total_energy;
  const int M = cfg.M;
  std::map<std::pair<std::vector<double>, std::vector<double>>, double> cache;
  for (std::size_t k = 0; k < phases.interfaces.size(); ++k) {
    const auto& itf = phases.interfaces[k];
    if (itf.left_segment < 0 || itf.right_segment < 0) continue;
    const auto& L = phases.segments[itf.left_segment];
    const auto& R = phases.segments[itf.right_segment];
    auto zr = R.z;
    const int turns = ((itf.wrap_shift % M) + M) % M;
    for (int t = 0; t < turns; ++t) zr = cyclic_shift(zr, phases.q);
    const auto key = std::make_pair(L.z, zr);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, phi_converged(model, L.z, zr, opts).value).first;
    GammaTerm term;
    term.interface = static_cast<int>(k);
    term.left_label = L.label;
    term.right_label = find_member(phases.set, zr);
    term.phi = it->second;
    rep.phi_sum += term.phi;
    rep.terms.push_back(term);
  }
  rep.abs_gap = std::abs(rep.energy - rep.phi_sum);
  const double denom = std::max(std::abs(rep.phi_sum), std::abs(rep.energy));
  rep.rel_gap = denom > 0.0 ? rep.abs_gap / denom : 0.0;
  return rep;
}

ShiftReport shift_periodicity_check(const EnergyModel& model, const ChainConfig& cfg, const PhaseDecomposition& phases) {
  const int n = cfg.n;
  const int M = cfg.M;
  ShiftReport rep;
  rep.q = cfg.q();
  rep.track_map = phases.shift_map;
  rep.tolerance = phases.classification_radius;

  // The wrap must sit inside a low-energy run; otherwise rotate so that it
  // falls in the middle of the longest one.
  auto wrap_is_clean = [&](const PhaseDecomposition& pd) {
    for (int i = n - M + 1; i < n; ++i)
      if (pd.cell_energies[i] > pd.eta) return false;
    if (pd.cell_energies[0] > pd.eta || pd.cell_energies[n - M] > pd.eta) return false;
    return !pd.segments.empty();
  };
  ChainConfig work = cfg;
  PhaseDecomposition pd = phases;
  if (!wrap_is_clean(pd) && !pd.segments.empty()) {
    std::size_t longest = 0;
    for (std::size_t s = 1; s < pd.segments.size(); ++s)
      if (pd.segments[s].length > pd.segments[longest].length) longest = s;
    const auto& seg = pd.segments[longest];
    const long len = ((static_cast<long>(seg.last_cell) - seg.first_cell) % n + n) % n + 1;
    rep.rotation = wrap_index(seg.first_cell + len / 2, n);
    work = rotate_config(cfg, rep.rotation);
    pd = detect_interfaces(model, work, phases.eta);
  }
  if (!wrap_is_clean(pd)) {
    rep.violations.push_back("no low-energy run long enough to hold the wrap");
  }

  for (int k = 0; k < M; ++k) {
    const double d = std::abs(work.slopes[k] - work.slopes[n - M + k]);
    rep.deviations.push_back(d);
    rep.max_deviation = std::max(rep.max_deviation, d);
    if (d > rep.tolerance) {
      std::ostringstream os;
      os << "track " << k << " starts at " << work.slopes[k] << " but track " << (rep.q + k) % M << " ends at "
         << work.slopes[n - M + k];
      rep.violations.push_back(os.str());
    }
  }

  // Labels on both sides of the wrap: A_start = sigma_{M-q}(A_end).
  if (pd.segments.size() >= 1) {
    const PhaseSegment* first = nullptr;
    const PhaseSegment* last = nullptr;
    for (const auto& s : pd.segments) {
      if (s.first_cell == 0 || (s.first_cell > s.last_cell)) first = &s;
      if (s.last_cell == n - 1 || (s.first_cell > s.last_cell)) last = &s;
    }
    if (first && last && !first->inferred && !last->inferred) {
      rep.labels_checked = true;
      const auto expect = cyclic_shift(last->z, (M - rep.q) % M);
      rep.labels_match = find_member(pd.set, expect) == first->label;
      if (!rep.labels_match) rep.violations.push_back("labels across the wrap are not related by the residue shift");
    }
  }
  rep.passed = rep.violations.empty();
  return rep;
}

}  // namespace lrchain
