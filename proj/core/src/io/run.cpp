#include "lrchain/io/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "lrchain/analysis.hpp"
#include "lrchain/microstates.hpp"
#include "lrchain/version.hpp"

namespace lrchain::io {

namespace {

namespace fs = std::filesystem;

Json nums(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json ints(const Assignment& a) {
  Json out = Json::array();
  for (auto s : a) out.push_back(static_cast<int>(s));
  return out;
}

std::string padded(int k, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, k);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) os_ << ',';
      first = false;
      os_ << h;
    }
    os_ << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((put(cells, first)), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  void put(double v, bool& first) { sep(first), os_ << format_double(v); }
  void put(int v, bool& first) { sep(first), os_ << v; }
  void put(long v, bool& first) { sep(first), os_ << v; }
  void put(const std::string& v, bool& first) { sep(first), os_ << v; }
  void sep(bool& first) {
    if (!first) os_ << ',';
    first = false;
  }
  std::ostringstream os_;
};

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += sep;
    s += std::to_string(v[k]);
  }
  return s;
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o = cfg.solver;
  o.seed = cfg.seed;
  o.threads = cfg.threads;
  return o;
}

TransitionOptions transition_options(const RunConfig& cfg) {
  TransitionOptions o = cfg.transition;
  o.seed = cfg.seed;
  return o;
}

std::pair<double, double> curve_span(const PotentialSpec& spec) {
  const double a = spec.psi1.w1().bottom();
  const double b = spec.psi1.w2().bottom();
  const double R = spec.psi1.range_half_width();
  return {std::max(-R, std::min(a, b) - 1.0), std::min(R, std::max(a, b) + 1.0)};
}

constexpr int kCurvePoints = 2001;

Json envelope_json(const EffectivePotential& ep) {
  const auto& env = ep.envelope();
  Json j;
  j["M"] = ep.M();
  j["grid_step"] = number(env.grid_step);
  j["sampled"] = nums(std::vector<double>{env.sampled.lo, env.sampled.hi});
  Json k = Json::array();
  for (const auto& iv : env.k) {
    Json e;
    e["j"] = iv.j;
    e["left"] = number(iv.left);
    e["right"] = number(iv.right);
    k.push_back(e);
  }
  j["K"] = k;
  Json js = Json::array();
  for (const auto& s : env.j) {
    Json e;
    e["left_branch"] = s.left_branch;
    e["right_branch"] = s.right_branch;
    e["z_left"] = number(s.z_left);
    e["z_right"] = number(s.z_right);
    e["slope"] = number(s.slope);
    e["intercept"] = number(s.intercept);
    e["degenerate"] = s.degenerate;
    js.push_back(e);
  }
  j["J"] = js;
  j["diagnostics"] = env.diagnostics;
  return j;
}

Json location_json(const EffectivePotential& ep, double ell) {
  const auto loc = ep.locate(ell);
  Json j;
  j["regime"] = loc.regime == Regime::InteriorK ? "K" : "J";
  j["index"] = loc.index;
  j["at_endpoint"] = loc.at_endpoint;
  if (loc.regime == Regime::InteriorK) {
    j["branch"] = ep.envelope().k[static_cast<std::size_t>(loc.index)].j;
  } else {
    const auto& s = ep.envelope().j[static_cast<std::size_t>(loc.index)];
    j["branches"] = std::vector<int>{s.left_branch, s.right_branch};
  }
  return j;
}

Json tangent_json(const TangentLine& t) {
  Json j;
  j["ell"] = number(t.ell);
  j["slope"] = number(t.slope);
  j["intercept"] = number(t.intercept);
  j["regime"] = t.regime == Regime::InteriorK ? "K" : "J";
  j["branch"] = t.branch;
  j["segment"] = t.segment;
  j["touching"] = nums(t.touching);
  return j;
}

Json set_json(const MicrostateSet& set, double radius) {
  Json j;
  j["ell"] = number(set.alpha);
  j["regime"] = set.regime == SetRegime::SingleK ? "K" : "J";
  j["boundary_case"] = set.boundary_case;
  j["size"] = set.size();
  j["classification_radius"] = number(radius);
  Json members = Json::array();
  for (const auto& m : set.members) {
    Json e;
    e["z"] = nums(m.z);
    e["alpha"] = number(m.alpha);
    e["j"] = m.j;
    e["orbit"] = m.orbit;
    e["rotation"] = m.rotation;
    members.push_back(e);
  }
  j["members"] = members;
  return j;
}

Json trace_json(const SolverTrace& t) {
  Json j;
  j["seeds"] = t.seeds;
  j["restarts"] = t.restarts;
  j["flips"] = t.flips;
  j["convex_solves"] = t.convex_solves;
  j["local_solves"] = t.local_solves;
  j["newton_iterations"] = t.newton_iterations;
  return j;
}

Json solve_json(const EnergyModel& model, const SolveResult& r) {
  Json j;
  j["n"] = r.config.n;
  j["M"] = r.config.M;
  j["ell"] = number(r.config.ell);
  j["L"] = number(r.config.L);
  j["energy"] = number(r.energy);
  const auto ren = total_renormalized_energy(model, r.config);
  j["difference_quotient"] = number(ren.difference_quotient);
  j["unrenormalized_energy"] = number(unrenormalized_energy(model.potential(), r.config));
  j["optimality"] = r.optimality == Optimality::OracleCertified ? "oracle_certified" : "heuristic";
  j["consistent"] = r.consistent;
  j["assignment"] = ints(r.assignment);
  j["slopes"] = nums(r.config.slopes);
  j["trace"] = trace_json(r.trace);
  return j;
}

std::string cells_csv(const EnergyModel& model, const ChainConfig& cfg, const Assignment* sigma) {
  const auto rep = cell_report(model, cfg);
  const auto u = cfg.displacements();
  Csv csv({"i", "slope", "u", "cell_energy", "cell_mean", "well"});
  for (int i = 0; i < cfg.n; ++i) {
    const int w = sigma ? static_cast<int>((*sigma)[static_cast<std::size_t>(i)])
                        : model.potential().potentials().psi1.active_well(cfg.slopes[static_cast<std::size_t>(i)]);
    csv.row(i, cfg.slopes[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(i)],
            rep.cells[static_cast<std::size_t>(i)], rep.means[static_cast<std::size_t>(i)], w);
  }
  return csv.str();
}

Json window_json(const WindowResult& w) {
  Json j;
  j["N"] = w.N;
  j["value"] = number(w.value);
  j["xi"] = number(w.xi);
  j["exhaustive"] = w.exhaustive;
  j["convex_solves"] = w.convex_solves;
  j["assignment"] = ints(w.assignment);
  j["slopes"] = nums(w.slopes);
  return j;
}

Json transition_json(const TransitionResult& t) {
  Json j;
  j["value"] = number(t.value);
  j["converged"] = t.converged;
  j["converged_at"] = t.converged_at;
  j["N"] = t.N;
  j["values"] = nums(t.values);
  j["monotonicity_violations"] = t.monotonicity_violations;
  j["diagnostics"] = t.diagnostics;
  j["window"] = window_json(t.window);
  return j;
}

std::string profile_csv(const WindowResult& w) {
  Csv csv({"i", "u", "slope"});
  for (int k = 0; k <= 2 * w.N; ++k) {
    const int i = k - w.N;
    const double z = k < 2 * w.N ? w.slopes[static_cast<std::size_t>(k)] : std::nan("");
    csv.row(i, w.u[static_cast<std::size_t>(k)], z);
  }
  return csv.str();
}

Json error_json(const Error& e) {
  Json j;
  j["code"] = std::string(to_string(e.code()));
  j["message"] = e.what();
  return j;
}

int status_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NoConvergence: return kExitNoConvergence;
    case ErrorCode::BudgetExhausted: return kExitBudget;
    default: return kExitError;
  }
}

struct Context {
  const RunConfig& cfg;
  PotentialSpec spec;
  std::map<int, std::unique_ptr<EffectivePotential>> eps;
  std::mutex mu;

  explicit Context(const RunConfig& c) : cfg(c), spec(make_spec(c)) {}

  const EffectivePotential& ep(int M) {
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = eps[M];
    if (!slot) slot = std::make_unique<EffectivePotential>(spec, M, cfg.envelope);
    return *slot;
  }
};

void cmd_psi0(Context& ctx, Artifacts& out) {
  const auto& ep = ctx.ep(ctx.cfg.M);
  Json pts = Json::array();
  for (double z : ctx.cfg.ell_list) {
    const auto v = ep.psi0(z);
    Json p;
    p["z"] = number(z);
    p["value"] = number(v.value);
    p["argmin"] = v.argmin;
    Json br = Json::array();
    for (int j = 0; j <= ep.M(); ++j) {
      const auto b = ep.try_branch(j, z);
      Json e;
      e["j"] = j;
      e["feasible"] = b.has_value();
      if (b) {
        e["z1"] = number(b->z1);
        e["z2"] = number(b->z2);
        e["value"] = number(ep.branch_value(j, z));
      }
      br.push_back(e);
    }
    p["branches"] = br;
    pts.push_back(p);
  }
  const auto [lo, hi] = curve_span(ctx.spec);
  Csv csv({"z", "psi0", "argmin"});
  for (int k = 0; k < kCurvePoints; ++k) {
    const double z = lo + (hi - lo) * k / (kCurvePoints - 1);
    const auto v = ep.psi0(z);
    csv.row(z, v.value, join_ints(v.argmin, ';'));
  }
  out.files.emplace_back("psi0.csv", csv.str());
  out.document["result"] = {{"M", ep.M()}, {"points", pts}, {"curve", "psi0.csv"}};
}

void cmd_envelope(Context& ctx, Artifacts& out) {
  const auto& ep = ctx.ep(ctx.cfg.M);
  Json r = envelope_json(ep);
  Json tangents = Json::array();
  for (double ell : ctx.cfg.ell_list) {
    Json t;
    t["ell"] = number(ell);
    t["psi0_envelope"] = number(ep.convex_envelope(ell));
    t["location"] = location_json(ep, ell);
    try {
      t["tangent"] = tangent_json(ep.tangent(ell));
    } catch (const Error& e) {
      t["tangent"] = nullptr;
      t["error"] = error_json(e);
    }
    tangents.push_back(t);
  }
  r["at_ell"] = tangents;
  const auto [lo, hi] = curve_span(ctx.spec);
  Csv csv({"z", "psi0", "psi0_envelope"});
  for (int k = 0; k < kCurvePoints; ++k) {
    const double z = lo + (hi - lo) * k / (kCurvePoints - 1);
    csv.row(z, ep.psi0_min(z).first, ep.convex_envelope(z));
  }
  out.files.emplace_back("envelope.csv", csv.str());
  r["curve"] = "envelope.csv";
  out.document["result"] = r;
}

void cmd_microstates(Context& ctx, Artifacts& out) {
  const auto& ep = ctx.ep(ctx.cfg.M);
  Json sets = Json::array();
  for (double ell : ctx.cfg.ell_list) {
    const auto set = minimizer_set_ell(ep, ell);
    Json s = set_json(set, classification_radius(ep, set));
    s["location"] = location_json(ep, ell);
    sets.push_back(s);
  }
  out.document["result"] = {{"M", ep.M()}, {"sets", sets}};
}

void cmd_minimize(Context& ctx, Artifacts& out) {
  const auto& ep = ctx.ep(ctx.cfg.M);
  Json runs = Json::array();
  int idx = 0;
  for (double ell : ctx.cfg.ell_list) {
    const EnergyModel model(ep, ell);
    for (int n : ctx.cfg.n_list) {
      const std::string name = "cells_" + padded(idx++, 3) + ".csv";
      SolveResult res;
      Json entry;
      try {
        res = global_minimize(model, n, solver_options(ctx.cfg));
      } catch (const BudgetExhaustedError& e) {
        res = e.best();
        entry["error"] = error_json(e);
        out.status = std::max(out.status, static_cast<int>(kExitBudget));
      }
      Json s = solve_json(model, res);
      s["cells"] = name;
      if (entry.contains("error")) s["error"] = entry["error"];
      runs.push_back(s);
      out.files.emplace_back(name, cells_csv(model, res.config, &res.assignment));
    }
  }
  out.document["result"] = {{"runs", runs}};
}

std::pair<std::vector<double>, std::vector<double>> phi_endpoints(const RunConfig& cfg, const EffectivePotential& ep,
                                                                  double ell) {
  if (!cfg.z_left.empty()) return {cfg.z_left, cfg.z_right};
  const auto set = minimizer_set_ell(ep, ell);
  const auto& a = set.members.front().z;
  const auto& b = set.members.size() > 1 ? set.members[1].z : a;
  return {a, b};
}

void cmd_phi(Context& ctx, Artifacts& out) {
  const auto& ep = ctx.ep(ctx.cfg.M);
  const double ell = ctx.cfg.ell_list.front();
  const EnergyModel model(ep, ell);
  const auto [zl, zr] = phi_endpoints(ctx.cfg, ep, ell);
  const auto opts = transition_options(ctx.cfg);
  Json r;
  r["ell"] = number(ell);
  r["z_left"] = nums(zl);
  r["z_right"] = nums(zr);
  TransitionResult t;
  if (ctx.cfg.window_N) {
    const auto w = phi_window(model, TransitionQuery{zl, zr, *ctx.cfg.window_N, ctx.cfg.xi}, opts);
    t.N = {w.N};
    t.values = {w.value};
    t.value = w.value;
    t.converged = false;
    t.converged_at = w.N;
    t.window = w;
    r["mode"] = "window";
  } else {
    r["mode"] = "converged";
    try {
      t = phi_converged(model, zl, zr, opts);
    } catch (const NoConvergenceError& e) {
      t = e.partial();
      r["error"] = error_json(e);
      out.status = kExitNoConvergence;
    }
  }
  r["transition"] = transition_json(t);
  Csv seq({"N", "value"});
  for (std::size_t k = 0; k < t.N.size(); ++k) seq.row(t.N[k], t.values[k]);
  out.files.emplace_back("phi_sequence.csv", seq.str());
  out.files.emplace_back("phi_profile.csv", profile_csv(t.window));
  r["sequence"] = "phi_sequence.csv";
  r["profile"] = "phi_profile.csv";
  if (ctx.cfg.invariance && out.status == kExitOk) {
    const auto inv = invariance_suite(model, zl, zr, opts);
    Json j;
    j["phi"] = number(inv.phi);
    j["N"] = inv.N;
    Json cyc = Json::array();
    for (const auto& c : inv.cyclic) cyc.push_back({{"q", c.q}, {"value", number(c.value)}, {"difference", number(c.difference)}});
    j["cyclic"] = cyc;
    Json off = Json::array();
    for (const auto& o : inv.offsets) {
      off.push_back({{"xi", number(o.xi)}, {"value", number(o.value)}, {"difference", number(o.difference)}});
    }
    j["offsets"] = off;
    Json tri = Json::array();
    for (const auto& c : inv.triples) {
      tri.push_back({{"a", c.a}, {"b", c.b}, {"c", c.c}, {"lhs", number(c.lhs)}, {"rhs", number(c.rhs)}, {"holds", c.holds}});
    }
    j["triples"] = tri;
    j["max_cyclic_difference"] = number(inv.max_cyclic_difference);
    j["max_offset_difference"] = number(inv.max_offset_difference);
    j["cyclic_ok"] = inv.cyclic_ok;
    j["offsets_ok"] = inv.offsets_ok;
    j["subadditive"] = inv.subadditive;
    r["invariance"] = j;
  }
  out.document["result"] = r;
}

Json phases_json(const PhaseDecomposition& p) {
  Json j;
  j["eta"] = number(p.eta);
  j["total_energy"] = number(p.total_energy);
  j["high_cells"] = p.high_cells;
  j["counting_bound_holds"] = p.counting_bound_holds;
  j["q"] = p.q;
  j["shift_map"] = p.shift_map;
  j["classification_radius"] = number(p.classification_radius);
  j["volume_fraction_gap"] = number(p.volume_fraction_gap);
  Json ifs = Json::array();
  for (const auto& i : p.interfaces) {
    Json e;
    e["position"] = number(i.position);
    e["first_cell"] = i.first_cell;
    e["last_cell"] = i.last_cell;
    e["cells"] = i.cells;
    e["energy"] = number(i.energy);
    e["left_segment"] = i.left_segment;
    e["right_segment"] = i.right_segment;
    e["wrap_shift"] = i.wrap_shift;
    ifs.push_back(e);
  }
  j["interfaces"] = ifs;
  Json segs = Json::array();
  for (const auto& s : p.segments) {
    Json e;
    e["start"] = number(s.start);
    e["end"] = number(s.end);
    e["length"] = number(s.length);
    e["first_cell"] = s.first_cell;
    e["last_cell"] = s.last_cell;
    e["label"] = s.label;
    e["z"] = nums(s.z);
    e["alpha"] = number(s.alpha);
    e["classification_error"] = number(s.classification_error);
    e["inferred"] = s.inferred;
    e["wrap"] = s.wrap;
    segs.push_back(e);
  }
  j["segments"] = segs;
  return j;
}

void cmd_analyze(Context& ctx, Artifacts& out) {
  const auto& ep = ctx.ep(ctx.cfg.M);
  ChainConfig chain;
  Json r;
  std::unique_ptr<EnergyModel> model;
  if (!ctx.cfg.analysis_slopes.empty()) {
    chain = make_config(ctx.cfg.analysis_slopes, ctx.cfg.M, ctx.cfg.L);
    model = std::make_unique<EnergyModel>(ep, chain.ell);
    r["source"] = "slopes";
  } else {
    model = std::make_unique<EnergyModel>(ep, ctx.cfg.ell_list.front());
    SolveResult res;
    try {
      res = global_minimize(*model, ctx.cfg.n_list.front(), solver_options(ctx.cfg));
    } catch (const BudgetExhaustedError& e) {
      res = e.best();
      r["error"] = error_json(e);
      out.status = kExitBudget;
    }
    chain = res.config;
    chain.L = ctx.cfg.L;
    r["source"] = "minimize";
    r["minimize"] = solve_json(*model, res);
  }
  r["n"] = chain.n;
  r["ell"] = number(chain.ell);
  r["energy"] = number(total_renormalized_energy(*model, chain).value);
  const auto phases = detect_interfaces(*model, chain, ctx.cfg.eta);
  r["phases"] = phases_json(phases);
  r["minimizer_set"] = set_json(phases.set, phases.classification_radius);
  if (ctx.cfg.gamma_compare && !phases.interfaces.empty()) {
    const auto g = gamma_limit_compare(*model, chain, phases, transition_options(ctx.cfg));
    Json terms = Json::array();
    for (const auto& t : g.terms) {
      terms.push_back({{"interface", t.interface}, {"left_label", t.left_label}, {"right_label", t.right_label},
                       {"phi", number(t.phi)}});
    }
    r["gamma"] = {{"energy", number(g.energy)}, {"phi_sum", number(g.phi_sum)}, {"abs_gap", number(g.abs_gap)},
                  {"rel_gap", number(g.rel_gap)}, {"terms", terms}};
  } else {
    r["gamma"] = nullptr;
  }
  if (phases.q != 0) {
    const auto s = shift_periodicity_check(*model, chain, phases);
    r["shift"] = {{"q", s.q},
                  {"rotation", s.rotation},
                  {"track_map", s.track_map},
                  {"deviations", nums(s.deviations)},
                  {"max_deviation", number(s.max_deviation)},
                  {"tolerance", number(s.tolerance)},
                  {"labels_checked", s.labels_checked},
                  {"labels_match", s.labels_match},
                  {"passed", s.passed},
                  {"violations", s.violations}};
  } else {
    r["shift"] = nullptr;
  }
  std::vector<char> high(static_cast<std::size_t>(chain.n), 0);
  for (int i : phases.high_cells) high[static_cast<std::size_t>(i)] = 1;
  Csv cells({"i", "cell_energy", "high"});
  for (int i = 0; i < chain.n; ++i) cells.row(i, phases.cell_energies[static_cast<std::size_t>(i)], int(high[i]));
  out.files.emplace_back("analyze_cells.csv", cells.str());
  const auto tr = m_interpolations(chain);
  std::ostringstream head;
  head << "block,t";
  for (int k = 0; k < tr.M; ++k) head << ",track_" << k;
  head << '\n';
  for (int b = 0; b < tr.blocks; ++b) {
    head << b << ',' << format_double(chain.L * (static_cast<double>(tr.M) * b) / chain.n);
    for (int k = 0; k < tr.M; ++k) head << ',' << format_double(tr.tracks[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)]);
    head << '\n';
  }
  out.files.emplace_back("analyze_tracks.csv", head.str());
  r["cells"] = "analyze_cells.csv";
  r["tracks"] = "analyze_tracks.csv";
  out.document["result"] = r;
}

struct SweepPoint {
  int M = 0;
  double ell = 0.0;
  int n = 0;  // 0 without minimization
};

void cmd_sweep(Context& ctx, Artifacts& out) {
  const auto& cfg = ctx.cfg;
  const std::vector<int> Ms = cfg.M_list.empty() ? std::vector<int>{cfg.M} : cfg.M_list;
  std::vector<SweepPoint> points;
  for (int M : Ms)
    for (double ell : cfg.ell_list) {
      if (cfg.sweep_minimize) {
        for (int n : cfg.n_list) points.push_back({M, ell, n});
      } else {
        points.push_back({M, ell, 0});
      }
    }
  for (int M : Ms) ctx.ep(M);

  struct PointOut {
    Json doc;
    int status = kExitOk;
    std::string regime;
    int set_size = 0;
    double envelope = 0.0;
    double energy = std::nan("");
    double phi_min = std::nan("");
    std::string error;
  };
  std::vector<PointOut> results(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= points.size()) return;
      const auto& p = points[k];
      auto& o = results[k];
      Json d;
      d["M"] = p.M;
      d["ell"] = number(p.ell);
      if (p.n) d["n"] = p.n;
      try {
        const auto& ep = ctx.ep(p.M);
        o.envelope = ep.convex_envelope(p.ell);
        d["psi0"] = number(ep.psi0_min(p.ell).first);
        d["psi0_envelope"] = number(o.envelope);
        d["location"] = location_json(ep, p.ell);
        const auto set = minimizer_set_ell(ep, p.ell);
        o.regime = set.regime == SetRegime::SingleK ? "K" : "J";
        o.set_size = static_cast<int>(set.size());
        d["minimizer_set"] = set_json(set, classification_radius(ep, set));
        const EnergyModel model(ep, p.ell);
        d["tangent"] = tangent_json(model.tangent());
        if (p.n) {
          SolverOptions so = solver_options(cfg);
          so.threads = 1;
          SolveResult res;
          try {
            res = global_minimize(model, p.n, so);
          } catch (const BudgetExhaustedError& e) {
            res = e.best();
            d["error"] = error_json(e);
            o.status = kExitBudget;
          }
          o.energy = res.energy;
          d["minimize"] = solve_json(model, res);
        }
        if (cfg.sweep_phi) {
          const auto table = phi_table(model, transition_options(cfg));
          const int m = o.set_size;
          Json rows = Json::array();
          double best = std::numeric_limits<double>::infinity();
          for (int a = 0; a < m; ++a) {
            rows.push_back(nums(std::span<const double>(table).subspan(static_cast<std::size_t>(a * m), static_cast<std::size_t>(m))));
            for (int b = 0; b < m; ++b)
              if (a != b) best = std::min(best, table[static_cast<std::size_t>(a * m + b)]);
          }
          if (std::isfinite(best)) o.phi_min = best;
          d["phi_table"] = rows;
        }
      } catch (const Error& e) {
        d["error"] = error_json(e);
        o.status = std::max(o.status, status_of(e));
        o.error = std::string(to_string(e.code()));
      }
      o.doc = d;
    }
  };
  const int nthreads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Csv csv({"point", "M", "ell", "n", "regime", "set_size", "psi0_envelope", "energy", "phi_min", "error"});
  Json summary = Json::array();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    const auto& o = results[k];
    const std::string name = "sweep/point_" + padded(static_cast<int>(k), 4) + ".json";
    Json doc;
    doc["tool"] = "lrchain";
    doc["version"] = version();
    doc["command"] = "sweep";
    doc["point"] = static_cast<int>(k);
    doc["config"] = resolved_config(cfg);
    doc["result"] = o.doc;
    out.files.emplace_back(name, to_text(doc));
    csv.row(static_cast<int>(k), p.M, p.ell, p.n, o.regime, o.set_size, o.envelope, o.energy, o.phi_min, o.error);
    summary.push_back({{"point", static_cast<int>(k)},
                       {"M", p.M},
                       {"ell", number(p.ell)},
                       {"n", p.n},
                       {"regime", o.regime},
                       {"set_size", o.set_size},
                       {"psi0_envelope", number(o.envelope)},
                       {"energy", number(o.energy)},
                       {"phi_min", number(o.phi_min)},
                       {"error", o.error.empty() ? Json(nullptr) : Json(o.error)},
                       {"file", name}});
    if (o.status != kExitOk) out.status = std::max(out.status, o.status);
  }
  out.files.emplace_back("sweep.csv", csv.str());
  out.document["result"] = {{"points", summary}, {"table", "sweep.csv"}};
}

}  // namespace

Artifacts execute(const std::string& command, const RunConfig& cfg) {
  Artifacts out;
  out.document["tool"] = "lrchain";
  out.document["version"] = version();
  out.document["command"] = command;
  out.document["status"] = 0;
  out.document["config"] = resolved_config(cfg);
  out.document["result"] = nullptr;
  try {
    Context ctx(cfg);
    if (command == "psi0") cmd_psi0(ctx, out);
    else if (command == "envelope") cmd_envelope(ctx, out);
    else if (command == "microstates") cmd_microstates(ctx, out);
    else if (command == "minimize") cmd_minimize(ctx, out);
    else if (command == "phi") cmd_phi(ctx, out);
    else if (command == "analyze") cmd_analyze(ctx, out);
    else if (command == "sweep") cmd_sweep(ctx, out);
    else throw Error(ErrorCode::InvalidArgument, "unknown subcommand " + command);
  } catch (const Error& e) {
    out.status = std::max(out.status, status_of(e));
    out.document["error"] = error_json(e);
  }
  out.document["status"] = out.status;
  return out;
}

int run(const std::string& command, const RunConfig& cfg, const std::string& out_dir, std::ostream& err) {
  const Artifacts a = execute(command, cfg);
  try {
    const fs::path root(out_dir);
    fs::create_directories(root);
    auto write = [&](const std::string& rel, const std::string& content) {
      const fs::path p = root / rel;
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      std::ofstream f(p, std::ios::binary);
      f << content;
      if (!f) throw std::runtime_error("cannot write " + p.string());
    };
    write(command + ".json", to_text(a.document));
    for (const auto& [rel, content] : a.files) write(rel, content);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  if (a.document.contains("error")) err << "error: " << a.document["error"]["message"].get<std::string>() << '\n';
  if (a.status == kExitOk) return kExitOk;
  for (const auto& p : a.document["result"].is_object() && a.document["result"].contains("runs")
                           ? a.document["result"]["runs"]
                           : Json::array()) {
    if (p.contains("error")) err << "error: " << p["error"]["message"].get<std::string>() << '\n';
  }
  return a.status;
}

}  // namespace lrchain::io
