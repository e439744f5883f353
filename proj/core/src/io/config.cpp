#include "lrchain/io/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lrchain::io {

namespace {

std::string with_line(const std::string& field, int line, const std::string& msg) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << field << ": " << msg;
  return os.str();
}

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

/// Line of the last key of a dotted path, searching each key after the previous one.
int locate(const std::string& text, const std::string& path) {
  if (text.empty()) return 0;
  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  std::stringstream ss(path);
  std::string key;
  while (std::getline(ss, key, '.')) {
    const auto bracket = key.find('[');
    if (bracket != std::string::npos) key = key.substr(0, bracket);
    const auto at = text.find('"' + key + '"', pos);
    if (at == std::string::npos) break;
    found = at;
    pos = at + key.size() + 2;
  }
  return found == std::string::npos ? 0 : line_of_offset(text, found);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw ConfigError(path, locate(text_, path), msg);
  }

  void allow(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "must be an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!ok.count(it.key())) fail(join(path, it.key()), "unknown key");
    }
  }

  static std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

  double number(const Json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "must be finite");
    return d;
  }

  long long integer(const Json& v, const std::string& path) const {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    fail(path, "must be an integer");
  }

  bool boolean(const Json& v, const std::string& path) const {
    if (!v.is_boolean()) fail(path, "must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const Json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
  }

  std::vector<int> integers(const Json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "must be an array of integers");
    std::vector<int> out;
    for (std::size_t k = 0; k < v.size(); ++k)
      out.push_back(static_cast<int>(integer(v[k], path + "[" + std::to_string(k) + "]")));
    return out;
  }

  WellConfig well(const Json& v, const std::string& path, WellConfig def) const {
    allow(v, path, {"kind", "center", "curvature", "coefficients"});
    WellConfig w = def;
    if (v.contains("kind")) {
      if (!v["kind"].is_string()) fail(join(path, "kind"), "must be a string");
      w.kind = v["kind"].get<std::string>();
      if (w.kind != "quadratic" && w.kind != "polynomial") fail(join(path, "kind"), "must be quadratic or polynomial");
    }
    if (v.contains("center")) w.center = number(v["center"], join(path, "center"));
    if (v.contains("curvature")) w.curvature = number(v["curvature"], join(path, "curvature"));
    if (v.contains("coefficients")) w.coefficients = numbers(v["coefficients"], join(path, "coefficients"));
    if (w.kind == "polynomial" && w.coefficients.empty()) fail(join(path, "coefficients"), "required for polynomial wells");
    return w;
  }

 private:
  const std::string& text_;
};

ConvexWell build_well(const WellConfig& w) {
  if (w.kind == "polynomial") return ConvexWell::polynomial(w.coefficients);
  return ConvexWell::quadratic(w.center, w.curvature);
}

Json well_json(const WellConfig& w) {
  Json j;
  j["kind"] = w.kind;
  if (w.kind == "polynomial") {
    j["coefficients"] = w.coefficients;
  } else {
    j["center"] = w.center;
    j["curvature"] = w.curvature;
  }
  return j;
}

}  // namespace

ConfigError::ConfigError(std::string field, int line, const std::string& msg)
    : Error(ErrorCode::InvalidArgument, with_line(field, line, msg)), field_(std::move(field)), line_(line),
      message_(with_line(field_, line, msg)) {}

RunConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<syntax>", line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  Reader r(text);
  r.allow(root, "",
          {"potential", "M", "M_list", "n", "n_list", "ell", "ell_grid", "L", "envelope", "solver", "transition",
           "analysis", "sweep", "seed", "threads", "output_dir"});
  RunConfig c;

  if (root.contains("potential")) {
    const auto& p = root["potential"];
    r.allow(p, "potential", {"w1", "w2", "psi_m", "growth_constant", "range"});
    if (p.contains("w1")) c.w1 = r.well(p["w1"], "potential.w1", c.w1);
    if (p.contains("w2")) c.w2 = r.well(p["w2"], "potential.w2", c.w2);
    if (p.contains("psi_m")) c.psi_m = r.well(p["psi_m"], "potential.psi_m", c.psi_m);
    if (p.contains("growth_constant")) c.growth_constant = r.number(p["growth_constant"], "potential.growth_constant");
    if (p.contains("range") && !p["range"].is_null()) c.range = r.number(p["range"], "potential.range");
  }

  if (root.contains("M")) c.M = static_cast<int>(r.integer(root["M"], "M"));
  if (root.contains("M_list")) c.M_list = r.integers(root["M_list"], "M_list");
  if (root.contains("n") && root.contains("n_list")) r.fail("n_list", "give either n or n_list");
  if (root.contains("n")) c.n_list = {static_cast<int>(r.integer(root["n"], "n"))};
  if (root.contains("n_list")) c.n_list = r.integers(root["n_list"], "n_list");
  if (root.contains("ell") && root.contains("ell_grid")) r.fail("ell_grid", "give either ell or ell_grid");
  if (root.contains("ell")) c.ell_list = {r.number(root["ell"], "ell")};
  if (root.contains("ell_grid")) {
    const auto& g = root["ell_grid"];
    if (g.is_array()) {
      c.ell_list = r.numbers(g, "ell_grid");
    } else {
      r.allow(g, "ell_grid", {"min", "max", "count"});
      if (!g.contains("min") || !g.contains("max") || !g.contains("count")) {
        r.fail("ell_grid", "needs min, max and count");
      }
      const double lo = r.number(g["min"], "ell_grid.min");
      const double hi = r.number(g["max"], "ell_grid.max");
      const long long count = r.integer(g["count"], "ell_grid.count");
      if (count < 1 || count > 100000) r.fail("ell_grid.count", "must be between 1 and 100000");
      if (hi < lo) r.fail("ell_grid.max", "must be >= ell_grid.min");
      c.ell_list.clear();
      for (long long k = 0; k < count; ++k)
        c.ell_list.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1));
    }
  }
  if (root.contains("L")) c.L = r.number(root["L"], "L");

  if (root.contains("envelope")) {
    const auto& e = root["envelope"];
    r.allow(e, "envelope", {"grid_step", "refine_tol"});
    if (e.contains("grid_step")) c.envelope.grid_step = r.number(e["grid_step"], "envelope.grid_step");
    if (e.contains("refine_tol")) c.envelope.refine_tol = r.number(e["refine_tol"], "envelope.refine_tol");
  }
  if (root.contains("solver")) {
    const auto& s = root["solver"];
    r.allow(s, "solver",
            {"budget", "random_restarts", "anneal", "anneal_proposals", "anneal_temperature", "cooling", "certify"});
    if (s.contains("budget")) c.solver.budget = r.integer(s["budget"], "solver.budget");
    if (s.contains("random_restarts")) {
      c.solver.random_restarts = static_cast<int>(r.integer(s["random_restarts"], "solver.random_restarts"));
    }
    if (s.contains("anneal")) c.solver.anneal = r.boolean(s["anneal"], "solver.anneal");
    if (s.contains("anneal_proposals")) c.solver.anneal_proposals = r.integer(s["anneal_proposals"], "solver.anneal_proposals");
    if (s.contains("anneal_temperature")) {
      c.solver.anneal_temperature = r.number(s["anneal_temperature"], "solver.anneal_temperature");
    }
    if (s.contains("cooling")) c.solver.cooling = r.number(s["cooling"], "solver.cooling");
    if (s.contains("certify")) c.solver.certify = r.boolean(s["certify"], "solver.certify");
  }
  if (root.contains("transition")) {
    const auto& t = root["transition"];
    r.allow(t, "transition",
            {"tol", "exhaustive_limit", "random_restarts", "n0_factor", "nmax_factor", "budget", "z_left", "z_right", "N",
             "xi", "invariance"});
    if (t.contains("tol")) c.transition.tol = r.number(t["tol"], "transition.tol");
    if (t.contains("exhaustive_limit")) {
      c.transition.exhaustive_limit = static_cast<int>(r.integer(t["exhaustive_limit"], "transition.exhaustive_limit"));
    }
    if (t.contains("random_restarts")) {
      c.transition.random_restarts = static_cast<int>(r.integer(t["random_restarts"], "transition.random_restarts"));
    }
    if (t.contains("n0_factor")) c.transition.n0_factor = static_cast<int>(r.integer(t["n0_factor"], "transition.n0_factor"));
    if (t.contains("nmax_factor")) {
      c.transition.nmax_factor = static_cast<int>(r.integer(t["nmax_factor"], "transition.nmax_factor"));
    }
    if (t.contains("budget")) c.transition.budget = r.integer(t["budget"], "transition.budget");
    if (t.contains("z_left") && !t["z_left"].is_null()) c.z_left = r.numbers(t["z_left"], "transition.z_left");
    if (t.contains("z_right") && !t["z_right"].is_null()) c.z_right = r.numbers(t["z_right"], "transition.z_right");
    if (t.contains("N") && !t["N"].is_null()) c.window_N = static_cast<int>(r.integer(t["N"], "transition.N"));
    if (t.contains("xi") && !t["xi"].is_null()) c.xi = r.number(t["xi"], "transition.xi");
    if (t.contains("invariance")) c.invariance = r.boolean(t["invariance"], "transition.invariance");
  }
  if (root.contains("analysis")) {
    const auto& a = root["analysis"];
    r.allow(a, "analysis", {"eta", "slopes", "gamma_compare"});
    if (a.contains("eta") && !a["eta"].is_null()) c.eta = r.number(a["eta"], "analysis.eta");
    if (a.contains("slopes") && !a["slopes"].is_null()) c.analysis_slopes = r.numbers(a["slopes"], "analysis.slopes");
    if (a.contains("gamma_compare")) c.gamma_compare = r.boolean(a["gamma_compare"], "analysis.gamma_compare");
  }
  if (root.contains("sweep")) {
    const auto& s = root["sweep"];
    r.allow(s, "sweep", {"minimize", "phi"});
    if (s.contains("minimize")) c.sweep_minimize = r.boolean(s["minimize"], "sweep.minimize");
    if (s.contains("phi")) c.sweep_phi = r.boolean(s["phi"], "sweep.phi");
  }
  if (root.contains("seed")) {
    const auto& s = root["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      r.fail("seed", "must be a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (root.contains("threads")) c.threads = static_cast<int>(r.integer(root["threads"], "threads"));
  if (root.contains("output_dir")) {
    if (!root["output_dir"].is_string()) r.fail("output_dir", "must be a string");
    c.output_dir = root["output_dir"].get<std::string>();
  }
  validate_config(c, text);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", 0, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

PotentialSpec make_spec(const RunConfig& c) {
  return PotentialSpec{DoubleWell(build_well(c.w1), build_well(c.w2), c.range), LongRangePotential(build_well(c.psi_m)),
                       c.growth_constant};
}

void validate_config(const RunConfig& c, const std::string& text) {
  auto fail = [&](const std::string& path, const std::string& msg) { throw ConfigError(path, locate(text, path), msg); };
  if (c.M < 2) fail("M", "must be >= 2");
  if (c.M > 64) fail("M", "must be <= 64");
  for (int m : c.M_list)
    if (m < 2 || m > 64) fail("M_list", "entries must lie in [2, 64]");
  const int max_M = std::max(c.M, c.M_list.empty() ? c.M : *std::max_element(c.M_list.begin(), c.M_list.end()));
  if (c.n_list.empty()) fail("n_list", "must not be empty");
  for (int n : c.n_list)
    if (n < max_M) fail(text.find("\"n_list\"") != std::string::npos ? "n_list" : "n", "must be >= M");
  if (c.ell_list.empty()) fail("ell_grid", "must not be empty");
  if (!(c.L > 0.0)) fail("L", "must be > 0");
  if (!(c.envelope.grid_step > 0.0)) fail("envelope.grid_step", "must be > 0");
  if (!(c.envelope.refine_tol > 0.0)) fail("envelope.refine_tol", "must be > 0");
  if (c.solver.budget <= 0) fail("solver.budget", "must be > 0");
  if (c.solver.random_restarts < 0) fail("solver.random_restarts", "must be >= 0");
  if (c.solver.anneal_proposals < 0) fail("solver.anneal_proposals", "must be >= 0");
  if (!(c.solver.cooling > 0.0 && c.solver.cooling < 1.0)) fail("solver.cooling", "must lie in (0, 1)");
  if (!(c.transition.tol > 0.0)) fail("transition.tol", "must be > 0");
  if (c.transition.exhaustive_limit < 0 || c.transition.exhaustive_limit > 24) {
    fail("transition.exhaustive_limit", "must lie in [0, 24]");
  }
  if (c.transition.random_restarts < 0) fail("transition.random_restarts", "must be >= 0");
  if (c.transition.n0_factor < 1) fail("transition.n0_factor", "must be >= 1");
  if (c.transition.nmax_factor < c.transition.n0_factor) fail("transition.nmax_factor", "must be >= n0_factor");
  if (c.transition.budget <= 0) fail("transition.budget", "must be > 0");
  if (!c.z_left.empty() && static_cast<int>(c.z_left.size()) != c.M) fail("transition.z_left", "must have M entries");
  if (!c.z_right.empty() && static_cast<int>(c.z_right.size()) != c.M) fail("transition.z_right", "must have M entries");
  if (c.z_left.empty() != c.z_right.empty()) fail("transition.z_right", "give both z_left and z_right or neither");
  if (c.window_N && *c.window_N < c.M) fail("transition.N", "must be >= M");
  if (c.eta && !(*c.eta > 0.0)) fail("analysis.eta", "must be > 0");
  if (!c.analysis_slopes.empty() && static_cast<int>(c.analysis_slopes.size()) < c.M) {
    fail("analysis.slopes", "needs at least M entries");
  }
  if (c.threads < 1) fail("threads", "must be >= 1");
  if (!(c.growth_constant > 0.0)) fail("potential.growth_constant", "must be > 0");

  PotentialSpec spec = [&]() -> PotentialSpec {
    try {
      return make_spec(c);
    } catch (const Error& e) {
      std::string where = "potential";
      std::string m = e.what();
      const std::string prefix = std::string(to_string(e.code())) + ": ";
      if (m.rfind(prefix, 0) == 0) m = m.substr(prefix.size());
      if (m.find("working range") != std::string::npos) where = "potential.range";
      else if (m.find("polynomial") != std::string::npos || m.find("quadratic") != std::string::npos) {
        for (const char* w : {"w1", "w2", "psi_m"}) {
          const WellConfig& wc = std::string(w) == "w1" ? c.w1 : std::string(w) == "w2" ? c.w2 : c.psi_m;
          try {
            build_well(wc);
          } catch (const Error&) {
            where = std::string("potential.") + w;
            break;
          }
        }
      }
      fail(where, m);
      throw;
    }
  }();
  try {
    validate(spec);
  } catch (const Error& e) {
    std::string m = e.what();
    const std::string prefix = "InvalidArgument: ";
    if (m.rfind(prefix, 0) == 0) m = m.substr(prefix.size());
    const auto colon = m.find(':');
    std::string field = colon == std::string::npos ? "" : m.substr(0, colon);
    std::string where = "potential";
    if (field == "w1" || field == "w2" || field == "psi_m" || field == "growth_constant") where += "." + field;
    fail(where, m);
  }
  const double R = spec.psi1.range_half_width();
  for (double ell : c.ell_list) {
    if (!(std::abs(ell) < R)) fail(text.find("\"ell_grid\"") != std::string::npos ? "ell_grid" : "ell", "must lie inside the working range");
  }
}

Json resolved_config(const RunConfig& c) {
  Json j;
  Json pot;
  pot["w1"] = well_json(c.w1);
  pot["w2"] = well_json(c.w2);
  pot["psi_m"] = well_json(c.psi_m);
  pot["growth_constant"] = c.growth_constant;
  pot["range"] = c.range ? Json(*c.range) : Json(nullptr);
  j["potential"] = pot;
  j["M"] = c.M;
  j["M_list"] = c.M_list.empty() ? std::vector<int>{c.M} : c.M_list;
  j["n_list"] = c.n_list;
  j["ell_grid"] = c.ell_list;
  j["L"] = c.L;
  j["envelope"] = {{"grid_step", c.envelope.grid_step}, {"refine_tol", c.envelope.refine_tol}};
  j["solver"] = {{"budget", c.solver.budget},
                 {"random_restarts", c.solver.random_restarts},
                 {"anneal", c.solver.anneal},
                 {"anneal_proposals", c.solver.anneal_proposals},
                 {"anneal_temperature", c.solver.anneal_temperature},
                 {"cooling", c.solver.cooling},
                 {"certify", c.solver.certify}};
  Json t;
  t["tol"] = c.transition.tol;
  t["exhaustive_limit"] = c.transition.exhaustive_limit;
  t["random_restarts"] = c.transition.random_restarts;
  t["n0_factor"] = c.transition.n0_factor;
  t["nmax_factor"] = c.transition.nmax_factor;
  t["budget"] = c.transition.budget;
  t["z_left"] = c.z_left.empty() ? Json(nullptr) : Json(c.z_left);
  t["z_right"] = c.z_right.empty() ? Json(nullptr) : Json(c.z_right);
  t["N"] = c.window_N ? Json(*c.window_N) : Json(nullptr);
  t["xi"] = c.xi ? Json(*c.xi) : Json(nullptr);
  t["invariance"] = c.invariance;
  j["transition"] = t;
  Json a;
  a["eta"] = c.eta ? Json(*c.eta) : Json(nullptr);
  a["slopes"] = c.analysis_slopes.empty() ? Json(nullptr) : Json(c.analysis_slopes);
  a["gamma_compare"] = c.gamma_compare;
  j["analysis"] = a;
  j["sweep"] = {{"minimize", c.sweep_minimize}, {"phi", c.sweep_phi}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace lrchain::io
