// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mnls/evolve.hpp"
#include "mnls/groundstate.hpp"
#include "mnls/magnetic.hpp"
#include "mnls/nonlinear.hpp"
#include "mnls/verify.hpp"

namespace {

using namespace mnls;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Field gaussian(const GridPtr& grid, const std::vector<double>& amp, double width,
               const std::vector<std::vector<double>>& centers = {}, double momentum = 0.0) {
  Field u(grid, static_cast<int>(amp.size()));
  for (int j = 0; j < u.components(); ++j) {
    auto c = u.component(j);
    for (std::size_t i = 0; i < grid->size(); ++i) {
      double r2 = 0.0;
      for (int d = 0; d < grid->dim(); ++d) {
        const double x = grid->x(d)[i] - (centers.empty() ? 0.0 : centers[j][d]);
        r2 += x * x;
      }
      c[i] = amp[j] * std::exp(-r2 / (2.0 * width * width)) *
             std::polar(1.0, momentum * grid->x(0)[i]);
    }
  }
  return u;
}

LocalSpec cubic(int m, double a, double beta, int sign = +1) {
  LocalSpec s;
  s.a.assign(m, a);
  s.l.assign(m, 2.0);
  s.beta.assign(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) s.beta[i][j] = beta;
  s.sign = sign;
  return s;
}

// ---- 1 and 2: the coupled 2D run ---------------------------------------

GridPtr coupled_grid() { return make_grid({2, 64, 8.0}); }

System coupled_system(const GridPtr& g) {
  auto pot = make_potentials(g, potentials::constant_vector(*g, {0.3, -0.2}), {});
  return System(std::move(pot), cubic(2, 1.0, 0.5));
}

Field coupled_datum(const GridPtr& g) {
  return gaussian(g, {1.0, 0.8}, 1.0, {{-1.0, 0.0}, {1.0, 0.5}}, 0.5);
}

TrajectoryRecord coupled_run(double dt, int stride) {
  const auto g = coupled_grid();
  EvolveConfig cfg;
  cfg.dt = dt;
  cfg.t_end = 2.0;
  cfg.diagnostics_stride = stride;
  return evolve(coupled_datum(g), coupled_system(g), cfg);
}

double energy_drift(const TrajectoryRecord& r) {
  double d = 0.0;
  for (const auto& x : r.diagnostics) d = std::max(d, std::abs(x.F_A - r.diagnostics[0].F_A));
  return d;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rec = coupled_run(1e-3, 10);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double drift = 0.0;
  const auto& c0 = rec.diagnostics.front().charge;
  for (const auto& d : rec.diagnostics)
    for (std::size_t j = 0; j < c0.size(); ++j)
      drift = std::max(drift, std::abs(d.charge[j] - c0[j]) / c0[j]);
  const bool ok = rec.status == RunStatus::completed && rec.times.back() > 1.999 &&
                  drift <= 1e-8 && secs < 120.0;
  return {ok, fmt("max relative charge drift %.3e over 2000 steps, %.1f s", drift, secs)};
}

Outcome criterion2() {
  const double d1 = energy_drift(coupled_run(1e-3, 10));
  const double d2 = energy_drift(coupled_run(5e-4, 20));
  const double ratio = d1 / d2;

  const auto g = coupled_grid();
  const System sys = coupled_system(g);
  EvolveConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  cfg.integrator = Integrator::picard;
  cfg.picard.slab_steps = 100;
  const auto rec = evolve(coupled_datum(g), sys, cfg);
  double excess = -kInf;
  for (double e : rec.regularized_energy) excess = std::max(excess, e - rec.regularized_energy[0]);
  const bool ok = ratio >= 3.0 && ratio <= 5.0 && rec.status == RunStatus::completed &&
                  rec.slab_halvings == 0 && excess <= 1e-6;
  return {ok, fmt("drift ratio %.3f (%.3e / %.3e); Picard slab max F_A^n(t) - F_A^n(0) = %.3e",
                  ratio, d1, d2, excess)};
}

// ---- 3 to 5: operator audits --------------------------------------------

Outcome criterion3() {
  const auto r = check_diamagnetic({});
  return {r.pass && r.samples >= 100,
          fmt("%d samples, worst relative gap %.3e, equality defect %.3e", r.samples,
              r.details.at("worst_relative_gap"), r.details.at("equality_defect"))};
}

Outcome criterion4() {
  const auto r = check_yosida({});
  const double slope = r.details.at("slope");
  const double l2 = r.details.at("max_ratio_minus_one_L2");
  const double l4 = r.details.at("max_ratio_minus_one_L4");
  const bool ok = l2 <= 1e-10 && l4 <= 1e-10 && std::abs(slope + 1.0) <= 0.15 && r.samples >= 50;
  return {ok, fmt("contractivity excess L2 %.3e L4 %.3e, convergence slope %.4f", l2, l4, slope)};
}

Outcome criterion5() {
  auto timed = [](const DecayOptions& o, double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = measure_dispersive_decay(o);
    secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  double s1 = 0.0, s2 = 0.0;
  const auto r1 = timed(DecayOptions{}, s1);
  DecayOptions o2;
  o2.grid = {2, 1024, 320.0};
  const auto r2 = timed(o2, s2);
  const bool ok = std::abs(r1.slope + 0.5) <= 0.05 && std::abs(r2.slope + 1.0) <= 0.1 &&
                  r1.boundary_mass <= 1e-8 && r2.boundary_mass <= 1e-8 && s1 < 60.0 && s2 < 60.0;
  return {ok, fmt("N=1 slope %.4f (edge mass %.1e, %.1f s); N=2 slope %.4f (edge mass %.1e, %.1f s)",
                  r1.slope, r1.boundary_mass, s1, r2.slope, r2.boundary_mass, s2)};
}

// ---- 6: Picard construction against Strang -------------------------------

Outcome criterion6() {
  const auto g = make_grid({1, 512, 40.0});
  const System sys(make_potentials(g, {}, {}), cubic(1, 1.0, 0.0));
  const Field phi0 = gaussian(g, {0.5}, 3.0);
  PicardOptions po;
  po.n = 100;
  const int steps = 50;
  const double dt = 0.05 / steps;
  const auto slab = picard_yosida_slab(phi0, dt, steps, sys, po);
  double worst = 0.0;
  const auto& inc = slab.increments;
  for (std::size_t k = 1; k < inc.size(); ++k)
    if (inc[k - 1] > 1e-13) worst = std::max(worst, inc[k] / inc[k - 1]);

  Field u = phi0;
  for (int s = 0; s < 500; ++s) u = strang_step(u, 1e-4, sys);
  const Field diff = slab.nodes.back() - u;
  const double err = std::sqrt(real_inner(diff, diff));
  const bool ok = worst < 0.9 && inc.back() <= po.tol && err <= 1e-4;
  return {ok, fmt("%d iterations, worst contraction ratio %.3e, |Picard - Strang|_2 = %.3e",
                  slab.iterations, worst, err)};
}

// ---- 7: global-existence gate -------------------------------------------

Outcome criterion7() {
  NonlocalSpec ns{{{1.0}}, 1.5, 0.0, 2.0};  // N = 3, gamma = 1.5 gives q = 2
  const auto g3 = global_existence_gate(3, cubic(1, 1.0, 0.0), &ns, 1.0);
  const auto g2 = global_existence_gate(2, cubic(1, 1.0, 0.0), nullptr, 1.0);
  const bool arith = g3.mu_bound == 13.0 / 6.0 && g2.l_bound == 2.0;

  const auto g1 = make_grid({1, 512, 40.0});
  const System defocus(make_potentials(g1, {}, potentials::constant_scalar(*g1, 1.0)),
                       cubic(1, 1.0, 0.0, -1));
  const bool gate_ok = global_existence_gate(1, defocus.local(), nullptr, 1.0).global;
  EvolveConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 10.0;
  cfg.diagnostics_stride = 10;
  const auto rec = evolve(gaussian(g1, {1.5}, 1.0), defocus, cfg);
  double growth = 0.0;
  for (const auto& d : rec.diagnostics)
    growth = std::max(growth, d.H1A_norm / rec.diagnostics[0].H1A_norm);

  const auto gq = make_grid({1, 2048, 8.0});
  LocalSpec quintic = cubic(1, 1.0, 0.0);
  quintic.l = {4.0};
  const System focus(make_potentials(gq, {}, {}), quintic);
  EvolveConfig bc;
  bc.dt = 1e-5;
  bc.t_end = 1.0;
  const auto blow = evolve(gaussian(gq, {2.0}, 1.0), focus, bc);

  const bool ok = arith && gate_ok && rec.status == RunStatus::completed && growth < 1.5 &&
                  blow.status == RunStatus::blowup_detected;
  return {ok, fmt("mu bound %.6f, l bound %g; defocusing H1_A growth %.4f; quintic %s at t* = %.5f",
                  g3.mu_bound, g2.l_bound, growth, to_string(blow.status).c_str(), blow.t_star)};
}

// ---- 8: standing waves ---------------------------------------------------

Eigen::MatrixXd dense_hamiltonian(const Grid& g, const std::vector<double>& V) {
  // Spectral second derivative on n points: D2 = F^{-1} diag(-k^2) F.
  const int n = g.n_axis();
  const auto& k = g.axis_wavenumbers();
  Eigen::MatrixXd H(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int q = 0; q < n; ++q) s += k[q] * k[q] * std::cos(k[q] * (a - b) * g.dx());
      H(a, b) = s / n;
    }
    H(a, a) += V[a];
  }
  return H;
}

Outcome criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = make_grid({1, 256, 20.0});
  const System sys(make_potentials(g, {}, {}), cubic(1, 1.0, 0.0));
  GroundStateConfig cfg;
  cfg.masses = {4.0};
  cfg.tau = 2e-3;
  cfg.tol = 1e-8;
  const auto res = solve_groundstate(gaussian(g, {1.0}, 1.5), sys, cfg);
  // Exact profile sqrt(2) sech(x), lambda = -1 for unit mass density 4.
  cplx overlap = 0.0;
  auto u = res.U.component(0);
  for (std::size_t i = 0; i < g->size(); ++i) overlap += std::conj(u[i]);
  const cplx phase = overlap / std::abs(overlap);
  double prof = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double exact = std::sqrt(2.0) / std::cosh(g->x(0)[i]);
    prof = std::max(prof, std::abs(u[i] * phase - exact));
  }

  const auto V = potentials::harmonic_scalar(*g, 1.0);
  const System lin(make_potentials(g, {}, V), LocalSpec::none(1));
  GroundStateConfig lc;
  lc.masses = {1.0};
  lc.tau = 2e-3;
  const auto lres = solve_groundstate(gaussian(g, {1.0}, 2.0), lin, lc);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(*g, V),
                                                          Eigen::EigenvaluesOnly);
  const double lam_err = std::abs(lres.lambda[0] - es.eigenvalues()(0));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool ok = res.status == GroundStateStatus::converged && res.residual <= 1e-6 &&
                  prof <= 1e-4 && lres.status == GroundStateStatus::converged && lam_err <= 1e-6 &&
                  secs < 60.0;
  return {ok, fmt("sech residual %.2e, profile error %.2e, lambda %.8f; linear lambda error %.2e; "
                  "%.1f s",
                  res.residual, prof, res.lambda[0], lam_err, secs)};
}

// ---- 9: gradient consistency ----------------------------------------------

Outcome criterion9() {
  const auto g = make_grid({2, 32, 6.0});
  NonlocalSpec ns{{{1.0, 0.5}, {0.5, 1.0}}, 1.0, 0.0, 2.0};
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const auto A = random_vector_potential(*g, stream_key("gradient", 7, s), 1.0, 1.5);
    const System sys(make_potentials(g, A, potentials::harmonic_scalar(*g, 0.5)),
                     cubic(2, 1.0, 0.7), ns);
    const RandomFieldOptions ro{kCorrelationFractions[s % 3] * 12.0, 3.0, false};
    const Field phi = 1.5 * random_field(g, 2, stream_key("gradient.phi", 7, s), ro);
    const Field eta = random_field(g, 2, stream_key("gradient.eta", 7, s), ro);
    const double h = 1e-4;
    const double fd =
        (sys.diagnostics(phi + h * eta).F_A - sys.diagnostics(phi - (h * eta)).F_A) / (2.0 * h);
    const double an = real_inner(sys.energy_gradient(phi), eta);
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  return {worst <= 1e-5, fmt("worst relative error %.3e over 20 fields", worst)};
}

// ---- 10: Hoelder continuity ----------------------------------------------

Outcome criterion10() {
  const auto g = make_grid({1, 256, 20.0});
  const System sys(make_potentials(g, potentials::constant_vector(*g, {0.4}),
                                   potentials::harmonic_scalar(*g, 0.3)),
                   cubic(1, 1.0, 0.0));
  const Field phi0 = gaussian(g, {1.2}, 1.0);
  auto run = [&](double dt, int stride) {
    EvolveConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 2.0;
    cfg.snapshot_stride = stride;
    cfg.diagnostics_stride = stride;
    return evolve(phi0, sys, cfg);
  };
  const auto a = run(2e-3, 25);
  const auto b = run(1e-3, 50);
  const auto ha = holder_half_check(a.snapshot_times, a.snapshots, sys);
  const auto hb = holder_half_check(b.snapshot_times, b.snapshots, sys);
  const double change = std::max(ha.worst_ratio / hb.worst_ratio, hb.worst_ratio / ha.worst_ratio);
  const bool ok = a.status == RunStatus::completed && b.status == RunStatus::completed &&
                  std::isfinite(ha.worst_ratio) && change < 2.0 && ha.pass && hb.pass;
  return {ok, fmt("worst ratio %.5f (dt) vs %.5f (dt/2), change %.4f, bound constant %.3f",
                  ha.worst_ratio, hb.worst_ratio, change, hb.bound_constant)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"charge conservation", criterion1},      {"energy conservation order", criterion2},
      {"diamagnetic inequality", criterion3},   {"Yosida properties", criterion4},
      {"dispersive decay", criterion5},         {"Picard construction", criterion6},
      {"global-existence gate", criterion7},    {"ground states", criterion8},
      {"gradient consistency", criterion9},     {"Hoelder continuity", criterion10}};
  // Optional argument: run a single criterion by number.
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all &= o.pass;
    std::cout << "criterion " << i + 1 << " [" << criteria[i].first << "]: "
              << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
