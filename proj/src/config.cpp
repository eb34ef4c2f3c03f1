#include "mnls/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mnls/snapshot.hpp"
#include "mnls/verify.hpp"

namespace mnls {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw ValidationError(where, where + ": " + msg);
}

double to_double(const std::string& where, const std::string& v) {
  const std::string t = trim(v);
  if (t == "inf" || t == "+inf") return kInf;
  try {
    std::size_t pos = 0;
    const double d = std::stod(t, &pos);
    if (pos != t.size()) bad(where, "not a number: '" + v + "'");
    return d;
  } catch (const std::logic_error&) {
    bad(where, "not a number: '" + v + "'");
  }
}

long to_long(const std::string& where, const std::string& v) {
  const double d = to_double(where, v);
  if (!std::isfinite(d) || d != std::floor(d)) bad(where, "expected an integer, got '" + v + "'");
  return static_cast<long>(d);
}

std::vector<double> to_list(const std::string& where, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) bad(where, "empty list entry");
    out.push_back(to_double(where, item));
  }
  return out;
}

std::vector<std::vector<double>> to_matrix(const std::string& where, const std::string& v) {
  std::vector<std::vector<double>> out;
  std::stringstream ss(v);
  std::string row;
  while (std::getline(ss, row, ';')) out.push_back(to_list(where, row));
  return out;
}

class Section {
 public:
  Section(const IniDocument& doc, const std::string& name) : name_(name) {
    const auto it = doc.find(name);
    if (it != doc.end()) kv_ = &it->second;
  }
  bool has(const std::string& key) const { return kv_ && kv_->count(key); }
  std::string where(const std::string& key) const { return name_ + "." + key; }
  const std::string& raw(const std::string& key) const {
    used_.insert(key);
    return kv_->at(key);
  }
  template <typename T, typename F>
  void read(const std::string& key, T& dst, F conv) const {
    if (has(key)) dst = conv(where(key), raw(key));
  }
  void number(const std::string& key, double& dst) const { read(key, dst, to_double); }
  void integer(const std::string& key, int& dst) const {
    read(key, dst, [](const std::string& w, const std::string& v) { return static_cast<int>(to_long(w, v)); });
  }
  void list(const std::string& key, std::vector<double>& dst) const { read(key, dst, to_list); }
  void text(const std::string& key, std::string& dst) const {
    read(key, dst, [](const std::string&, const std::string& v) { return trim(v); });
  }
  void finish() const {
    if (!kv_) return;
    for (const auto& [k, v] : *kv_) {
      if (!used_.count(k)) bad(where(k), "unknown key");
    }
  }

 private:
  std::string name_;
  const std::map<std::string, std::string>* kv_ = nullptr;
  mutable std::set<std::string> used_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::vector<double> read_numbers(const std::filesystem::path& path, std::size_t expected,
                                 const std::string& where) {
  std::ifstream is(path);
  if (!is) bad(where, "cannot open " + path.string());
  std::vector<double> out;
  double v;
  while (is >> v) out.push_back(v);
  if (!is.eof()) bad(where, "malformed number in " + path.string());
  if (out.size() != expected) {
    bad(where, path.string() + " holds " + std::to_string(out.size()) + " values, expected " +
                   std::to_string(expected));
  }
  return out;
}

void read_initial(const Section& s, InitialData& init, const std::filesystem::path& base) {
  std::string kind = init.kind;
  s.text("initial", kind);
  if (kind.rfind("file:", 0) == 0) {
    init.kind = "file";
    init.file = resolve(base, trim(kind.substr(5)));
  } else if (kind == "gaussian" || kind == "sech" || kind == "random") {
    init.kind = kind;
  } else {
    bad(s.where("initial"), "expected gaussian, sech, random or file:<path>, got '" + kind + "'");
  }
  s.list("amplitude", init.amplitude);
  s.number("width", init.width);
  s.list("center", init.center);
  s.list("momentum", init.momentum);
  if (!(init.width > 0.0)) bad(s.where("width"), "must be > 0");
}

}  // namespace

IniDocument parse_ini(std::istream& is) {
  IniDocument doc;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // ';' inside a value separates matrix rows, so only a leading ';' is a comment.
    std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty() || body.front() == ';') continue;
    const std::string where = "config line " + std::to_string(lineno);
    if (body.front() == '[') {
      if (body.back() != ']') bad(where, "unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) bad(where, "empty section name");
      doc[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) bad(where, "expected key = value");
    if (section.empty()) bad(where, "key outside of any section");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) bad(where, "empty key");
    auto& kv = doc[section];
    if (kv.count(key)) bad(where, "duplicate key " + section + "." + key);
    kv[key] = trim(body.substr(eq + 1));
  }
  return doc;
}

RunConfig config_from_ini(const IniDocument& doc, const std::filesystem::path& base) {
  static const std::set<std::string> known = {"grid",  "potentials", "local",
                                              "nonlocal", "evolve", "groundstate"};
  for (const auto& [name, kv] : doc) {
    if (!known.count(name)) bad(name, "unknown section");
  }
  RunConfig cfg;

  const Section grid(doc, "grid");
  grid.integer("dim", cfg.grid.dim);
  grid.integer("n", cfg.grid.n_axis);
  grid.number("L", cfg.grid.half_width);
  if (grid.has("max_points")) {
    const long mp = to_long(grid.where("max_points"), grid.raw("max_points"));
    if (mp < 1) bad(grid.where("max_points"), "must be >= 1");
    cfg.grid.max_points = static_cast<std::size_t>(mp);
  }
  grid.finish();

  const Section loc(doc, "local");
  std::vector<double> a, l;
  std::vector<std::vector<double>> beta;
  loc.list("a", a);
  loc.list("l", l);
  loc.read("beta", beta, to_matrix);
  int m = a.empty() ? (l.empty() ? static_cast<int>(beta.size()) : static_cast<int>(l.size()))
                    : static_cast<int>(a.size());
  loc.integer("m", m);
  if (m < 1) m = 1;
  cfg.m = m;
  cfg.local = LocalSpec::none(m);
  if (!a.empty()) cfg.local.a = a;
  if (!l.empty()) cfg.local.l = l;
  if (!beta.empty()) cfg.local.beta = beta;
  if (loc.has("sign")) {
    const std::string s = trim(loc.raw("sign"));
    if (s == "focusing" || s == "+1" || s == "1") {
      cfg.local.sign = 1;
    } else if (s == "defocusing" || s == "-1") {
      cfg.local.sign = -1;
    } else {
      bad(loc.where("sign"), "expected focusing or defocusing");
    }
  }
  loc.finish();
  if (cfg.local.components() != m || static_cast<int>(cfg.local.l.size()) != m ||
      static_cast<int>(cfg.local.beta.size()) != m) {
    bad("local", "a, l and beta must all describe m = " + std::to_string(m) + " components");
  }
  validate(cfg.local, cfg.grid.dim);

  const Section nl(doc, "nonlocal");
  if (nl.has("w")) {
    NonlocalSpec ns;
    nl.read("w", ns.w, to_matrix);
    nl.number("gamma", ns.gamma);
    nl.number("r0", ns.r0);
    nl.number("mu", ns.mu);
    if (ns.components() != m) bad(nl.where("w"), "weight matrix must be m x m");
    validate(ns, cfg.grid.dim);
    cfg.nonlocal = ns;
  }
  nl.finish();

  const Section pot(doc, "potentials");
  pot.text("A", cfg.A_kind);
  pot.list("A_constant", cfg.A_constant);
  pot.number("B", cfg.B);
  if (pot.has("A_file")) cfg.A_file = resolve(base, trim(pot.raw("A_file")));
  pot.text("V", cfg.V_kind);
  pot.number("V_value", cfg.V_value);
  pot.number("V_omega", cfg.V_omega);
  pot.number("V_offset", cfg.V_offset);
  if (pot.has("V_file")) cfg.V_file = resolve(base, trim(pot.raw("V_file")));
  pot.number("V_p", cfg.V_p);
  pot.finish();
  static const std::set<std::string> A_kinds = {"zero", "constant", "harmonic_gauge", "file"};
  static const std::set<std::string> V_kinds = {"constant", "harmonic", "file"};
  if (!A_kinds.count(cfg.A_kind)) bad("potentials.A", "unknown vector potential '" + cfg.A_kind + "'");
  if (!V_kinds.count(cfg.V_kind)) bad("potentials.V", "unknown scalar potential '" + cfg.V_kind + "'");
  if (cfg.A_kind == "constant" && static_cast<int>(cfg.A_constant.size()) != cfg.grid.dim) {
    bad("potentials.A_constant", "needs one entry per axis");
  }
  if (cfg.A_kind == "harmonic_gauge" && cfg.grid.dim != 2) {
    bad("potentials.A", "harmonic_gauge requires dim = 2");
  }
  if (cfg.A_kind == "file" && cfg.A_file.empty()) bad("potentials.A_file", "missing");
  if (cfg.V_kind == "file" && cfg.V_file.empty()) bad("potentials.V_file", "missing");
  if (!(cfg.V_p >= 1.0 && cfg.V_p >= 0.5 * cfg.grid.dim)) {
    bad("(V) potentials.V_p", "(V) requires p >= 1 and p >= N/2");
  }

  const Section ev(doc, "evolve");
  ev.number("dt", cfg.evolve.dt);
  ev.number("t_end", cfg.evolve.t_end);
  if (ev.has("integrator")) {
    const std::string s = trim(ev.raw("integrator"));
    if (s == "strang") {
      cfg.evolve.integrator = Integrator::strang;
    } else if (s == "picard" || s == "picard_yosida") {
      cfg.evolve.integrator = Integrator::picard;
    } else {
      bad(ev.where("integrator"), "expected strang or picard");
    }
  }
  ev.integer("n", cfg.evolve.picard.n);
  ev.integer("slab_steps", cfg.evolve.picard.slab_steps);
  ev.number("picard_tol", cfg.evolve.picard.tol);
  ev.integer("picard_max_iter", cfg.evolve.picard.max_iter);
  ev.number("blowup_threshold", cfg.evolve.blowup_threshold);
  ev.integer("snapshot_stride", cfg.evolve.snapshot_stride);
  ev.integer("diagnostics_stride", cfg.evolve.diagnostics_stride);
  ev.integer("krylov_dim", cfg.evolve.propagator.krylov_dim);
  read_initial(ev, cfg.initial, base);
  ev.finish();
  if (!(cfg.evolve.dt > 0.0)) bad("evolve.dt", "must be > 0");
  if (!(cfg.evolve.t_end >= 0.0)) bad("evolve.t_end", "must be >= 0");
  if (!(cfg.evolve.picard.tol > 0.0 && cfg.evolve.picard.tol <= 1e-4)) {
    bad("evolve.picard_tol", "must lie in (0, 1e-4]");
  }
  if (cfg.evolve.diagnostics_stride < 1) bad("evolve.diagnostics_stride", "must be >= 1");
  if (cfg.evolve.snapshot_stride < 0) bad("evolve.snapshot_stride", "must be >= 0");
  if (cfg.evolve.propagator.krylov_dim < 2) bad("evolve.krylov_dim", "must be >= 2");

  const Section gs(doc, "groundstate");
  gs.list("masses", cfg.groundstate.masses);
  gs.number("tau", cfg.groundstate.tau);
  gs.number("tol", cfg.groundstate.tol);
  gs.integer("max_iter", cfg.groundstate.max_iter);
  read_initial(gs, cfg.groundstate_initial, base);
  gs.finish();
  if (cfg.groundstate.masses.empty()) cfg.groundstate.masses.assign(m, 1.0);
  if (static_cast<int>(cfg.groundstate.masses.size()) != m) {
    bad("groundstate.masses", "one mass per component required");
  }
  if (!(cfg.groundstate.tol > 0.0 && cfg.groundstate.tol <= 1e-3)) {
    bad("groundstate.tol", "must lie in (0, 1e-3]");
  }
  for (auto* init : {&cfg.initial, &cfg.groundstate_initial}) {
    if (init->amplitude.size() == 1 && m > 1) init->amplitude.assign(m, init->amplitude[0]);
    if (static_cast<int>(init->amplitude.size()) != m) bad("initial.amplitude", "one entry per component");
    if (!init->center.empty() && static_cast<int>(init->center.size()) != cfg.grid.dim) {
      bad("initial.center", "one entry per axis");
    }
    if (!init->momentum.empty() && static_cast<int>(init->momentum.size()) != cfg.grid.dim) {
      bad("initial.momentum", "one entry per axis");
    }
  }
  // Constructs the grid to surface its own validation errors early.
  Grid probe(cfg.grid);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("config", "cannot open config file " + path.string());
  return config_from_ini(parse_ini(is), path.parent_path());
}

PotentialSet build_potentials(const RunConfig& cfg, const GridPtr& grid) {
  const Grid& g = *grid;
  std::vector<std::vector<double>> A;
  if (cfg.A_kind == "constant") {
    A = potentials::constant_vector(g, cfg.A_constant);
  } else if (cfg.A_kind == "harmonic_gauge") {
    A = potentials::harmonic_gauge(g, cfg.B);
  } else if (cfg.A_kind == "file") {
    const auto v = read_numbers(cfg.A_file, g.dim() * g.size(), "potentials.A_file");
    A.assign(g.dim(), std::vector<double>(g.size()));
    for (int d = 0; d < g.dim(); ++d) {
      std::copy(v.begin() + d * g.size(), v.begin() + (d + 1) * g.size(), A[d].begin());
    }
  }
  std::vector<double> V;
  if (cfg.V_kind == "constant") {
    V = potentials::constant_scalar(g, cfg.V_value);
  } else if (cfg.V_kind == "harmonic") {
    V = potentials::harmonic_scalar(g, cfg.V_omega, cfg.V_offset);
  } else {
    V = read_numbers(cfg.V_file, g.size(), "potentials.V_file");
  }
  return make_potentials(grid, std::move(A), std::move(V));
}

System build_system(const RunConfig& cfg, const GridPtr& grid) {
  return System(build_potentials(cfg, grid), cfg.local, cfg.nonlocal);
}

Field build_initial(const InitialData& init, int m, const GridPtr& grid, std::uint64_t seed) {
  if (init.kind == "file") {
    std::ifstream is(init.file, std::ios::binary);
    if (!is) throw ValidationError("initial", "cannot open initial datum " + init.file.string());
    Field f = read_snapshot(is, grid);
    if (f.components() != m) throw ValidationError("initial", "snapshot has the wrong number of components");
    return f;
  }
  const Grid& g = *grid;
  if (init.kind == "random") {
    Field f = random_field(grid, m, stream_key("initial", seed, 0),
                           {init.width, 0.25 * g.half_width(), false});
    for (int j = 0; j < m; ++j) {
      for (auto& z : f.component(j)) z *= init.amplitude[j];
    }
    return f;
  }
  Field f(grid, m);
  for (std::size_t p = 0; p < g.size(); ++p) {
    double r2 = 0.0, phase = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
      const double x = g.x(d)[p] - (init.center.empty() ? 0.0 : init.center[d]);
      r2 += x * x;
      if (!init.momentum.empty()) phase += init.momentum[d] * g.x(d)[p];
    }
    const double r = std::sqrt(r2) / init.width;
    const double shape = init.kind == "sech" ? 1.0 / std::cosh(r) : std::exp(-0.5 * r * r);
    const cplx value = shape * std::polar(1.0, phase);
    for (int j = 0; j < m; ++j) f.component(j)[p] = init.amplitude[j] * value;
  }
  return f;
}

}  // namespace mnls
