// mnls: evolve, groundstate, verify and decay front end.
//
// Exit codes: 0 success, 1 failed verification check, 2 invalid configuration,
// 3 solver failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mnls/config.hpp"
#include "mnls/evolve.hpp"
#include "mnls/groundstate.hpp"
#include "mnls/snapshot.hpp"
#include "mnls/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool require_global = false;
  std::optional<int> snapshot_stride;
  std::string integrator;
  // verify
  int verify_n = 32;
  unsigned threads = 0;
  // decay
  int decay_dim = 1;
  int decay_n = 4096;
  double decay_L = 400.0;
  double decay_p = mnls::kInf;
  double decay_t_min = 5.0;
  double decay_t_max = 50.0;
  int decay_samples = 10;
  double decay_width = 2.0;
};

json to_json(const mnls::Diagnostics& d) {
  return {{"t", d.t},         {"charge", d.charge},     {"E_kin", d.E_kin},
          {"E_V", d.E_V},     {"E_loc", d.E_loc},       {"E_nonloc", d.E_nonloc},
          {"F_A", d.F_A},     {"H1A_norm", d.H1A_norm}};
}

json to_json(const mnls::CheckReport& r) {
  json j = {{"check", r.name},
            {"samples", r.samples},
            {"worst_margin", r.worst_margin},
            {"witness_seed", r.witness_seed},
            {"pass", r.pass},
            {"details", r.details}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::string snapshot_name(long index) {
  std::ostringstream os;
  os << "snap_" << std::setw(6) << std::setfill('0') << index << ".bin";
  return os.str();
}

mnls::RunConfig load(const Options& o) {
  if (o.config.empty()) throw mnls::ValidationError("config", "--config is required");
  auto cfg = mnls::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.snapshot_stride) {
    if (*o.snapshot_stride < 0) throw mnls::ValidationError("--snapshot-stride", "must be >= 0");
    cfg.evolve.snapshot_stride = *o.snapshot_stride;
  }
  if (o.integrator == "strang") cfg.evolve.integrator = mnls::Integrator::strang;
  if (o.integrator == "picard") cfg.evolve.integrator = mnls::Integrator::picard;
  return cfg;
}

int cmd_evolve(const Options& o) {
  const auto cfg = load(o);
  const auto grid = mnls::make_grid(cfg.grid);
  const auto sys = mnls::build_system(cfg, grid);
  const auto gate = mnls::global_existence_gate(cfg.grid.dim, cfg.local,
                                                cfg.nonlocal ? &*cfg.nonlocal : nullptr,
                                                sys.potentials().infV);
  if (o.require_global && !gate.global) {
    throw mnls::ValidationError("Theorem (solGlobal)", "--require-global: " + gate.verdict);
  }
  const auto phi0 = mnls::build_initial(cfg.initial, cfg.m, grid, cfg.seed);

  fs::create_directories(o.out);
  std::ofstream ndjson(fs::path(o.out) / "diagnostics.ndjson");
  long snap_index = 0;
  mnls::EvolveCallbacks cb;
  cb.keep_snapshots = false;
  cb.on_diagnostics = [&](const mnls::Diagnostics& d) {
    const std::string line = to_json(d).dump();
    std::cout << line << '\n' << std::flush;
    ndjson << line << '\n';
  };
  cb.on_snapshot = [&](double, const mnls::Field& u) {
    mnls::write_snapshot(fs::path(o.out) / snapshot_name(snap_index++), u);
  };
  const auto rec = mnls::evolve(phi0, sys, cfg.evolve, cb);
  mnls::write_snapshot(fs::path(o.out) / "final.bin", rec.final_field);

  std::ostringstream summary;
  summary << "status " << mnls::to_string(rec.status) << '\n';
  if (rec.status == mnls::RunStatus::blowup_detected) summary << "t_star_estimate " << rec.t_star << '\n';
  if (rec.status == mnls::RunStatus::solver_failure) summary << "failure_time " << rec.failure_time << '\n';
  if (!rec.message.empty()) summary << "message " << rec.message << '\n';
  summary << "seed " << cfg.seed << '\n';
  summary << "samples " << rec.diagnostics.size() << '\n';
  summary << "snapshots " << snap_index << '\n';
  summary << "slab_halvings " << rec.slab_halvings << '\n';
  summary << "global_gate " << (gate.global ? "pass" : "fail") << ' ' << gate.verdict << '\n';
  std::ofstream(fs::path(o.out) / "summary.txt") << summary.str();
  std::cerr << summary.str();
  return rec.status == mnls::RunStatus::solver_failure ? kExitSolver : 0;
}

int cmd_groundstate(const Options& o) {
  const auto cfg = load(o);
  const auto grid = mnls::make_grid(cfg.grid);
  const auto sys = mnls::build_system(cfg, grid);
  const auto U0 = mnls::build_initial(cfg.groundstate_initial, cfg.m, grid, cfg.seed);
  const auto res = mnls::solve_groundstate(U0, sys, cfg.groundstate);

  fs::create_directories(o.out);
  mnls::write_snapshot(fs::path(o.out) / "groundstate.bin", res.U);
  const json j = {{"status", mnls::to_string(res.status)},
                  {"label", res.label},
                  {"lambda", res.lambda},
                  {"residual", res.residual},
                  {"F_A", res.energy},
                  {"iterations", res.iterations}};
  std::cout << j.dump() << '\n';
  std::ostringstream summary;
  summary << "status " << mnls::to_string(res.status) << '\n' << "label " << res.label << '\n';
  summary << "lambda";
  for (double l : res.lambda) summary << ' ' << std::setprecision(12) << l;
  summary << "\nresidual " << res.residual << "\nF_A " << res.energy << "\niterations "
          << res.iterations << '\n';
  std::ofstream(fs::path(o.out) / "summary.txt") << summary.str();
  std::cerr << summary.str();
  return res.status == mnls::GroundStateStatus::converged ? 0 : kExitSolver;
}

int cmd_verify(const Options& o) {
  mnls::SuiteOptions so;
  so.n_axis = o.verify_n;
  so.seed = o.seed.value_or(1);
  so.threads = o.threads;
  const auto reports = mnls::run_checks(mnls::default_suite(so), so.threads);
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << to_json(r).dump() << '\n';
    ok &= r.pass;
  }
  return ok ? 0 : kExitCheckFailed;
}

int cmd_decay(const Options& o) {
  mnls::DecayOptions d;
  d.grid = {o.decay_dim, o.decay_n, o.decay_L};
  d.p = o.decay_p;
  d.t_min = o.decay_t_min;
  d.t_max = o.decay_t_max;
  d.samples = o.decay_samples;
  d.width = o.decay_width;
  const auto res = mnls::measure_dispersive_decay(d);
  fs::create_directories(o.out);
  std::ofstream table(fs::path(o.out) / "decay.tsv");
  table << "t\tnorm\n" << std::setprecision(15);
  for (std::size_t i = 0; i < res.t.size(); ++i) table << res.t[i] << '\t' << res.norm[i] << '\n';
  const json j = {{"slope", res.slope}, {"expected", res.expected}, {"boundary_mass", res.boundary_mass}};
  std::cout << j.dump() << '\n';
  std::ofstream(fs::path(o.out) / "summary.txt")
      << "slope " << res.slope << "\nexpected " << res.expected << "\nboundary_mass "
      << res.boundary_mass << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic coupled NLS simulation and verification"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", o.config, "INI configuration file");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* evolve = app.add_subcommand("evolve", "time evolution with diagnostics");
  common(evolve, true);
  evolve->add_flag("--require-global", o.require_global,
                   "refuse configurations without a global-existence guarantee");
  evolve->add_option("--snapshot-stride", o.snapshot_stride, "steps between snapshots (0: none)");
  evolve->add_option("--integrator", o.integrator, "strang or picard")
      ->check(CLI::IsMember({"strang", "picard"}));

  auto* gs = app.add_subcommand("groundstate", "normalized gradient flow for standing waves");
  common(gs, true);

  auto* verify = app.add_subcommand("verify", "randomized audit of the functional inequalities");
  common(verify, false);
  verify->add_option("--n", o.verify_n, "points per axis for the audit grids");
  verify->add_option("--threads", o.threads, "worker threads (0: hardware)");

  auto* decay = app.add_subcommand("decay", "dispersive decay benchmark for the free flow");
  common(decay, false);
  decay->add_option("--dim", o.decay_dim);
  decay->add_option("--n", o.decay_n);
  decay->add_option("--L", o.decay_L);
  decay->add_option("--p", o.decay_p, "Lebesgue exponent (inf allowed)");
  decay->add_option("--t-min", o.decay_t_min);
  decay->add_option("--t-max", o.decay_t_max);
  decay->add_option("--samples", o.decay_samples);
  decay->add_option("--width", o.decay_width, "Gaussian width of the initial datum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*evolve) return cmd_evolve(o);
    if (*gs) return cmd_groundstate(o);
    if (*verify) return cmd_verify(o);
    if (*decay) return cmd_decay(o);
  } catch (const mnls::ValidationError& e) {
    std::cerr << "invalid configuration [" << e.condition() << "]: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mnls::SolverError& e) {
    std::cerr << "solver failure (residual " << e.residual() << "): " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
