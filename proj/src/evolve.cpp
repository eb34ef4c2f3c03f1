#include "mnls/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mnls {

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed:
      return "completed";
    case RunStatus::blowup_detected:
      return "blowup_detected";
    case RunStatus::solver_failure:
      return "solver_failure";
  }
  return "unknown";
}

namespace {

void rotate_phase(Field& phi, const std::vector<std::vector<double>>& theta, double tau) {
  for (int j = 0; j < phi.components(); ++j) {
    auto c = phi.component(j);
    const auto& th = theta[j];
    for (std::size_t p = 0; p < c.size(); ++p) c[p] *= std::polar(1.0, tau * th[p]);
  }
}

double l2_distance(const Field& a, const Field& b) {
  double s = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) s += std::norm(x[i] - y[i]);
  return std::sqrt(s * a.grid()->cell_volume());
}

}  // namespace

Field strang_step(const Field& phi, double dt, const System& sys, const PropagatorOptions& prop) {
  Field u = phi;
  rotate_phase(u, sys.phase_density(u), 0.5 * dt);
  u = propagate_free(u, dt, sys.potentials(), prop);
  rotate_phase(u, sys.phase_density(u), 0.5 * dt);
  return u;
}

SlabResult picard_yosida_slab(const Field& phi0, double dt, int steps, const System& sys,
                              const PicardOptions& opts, const PropagatorOptions& prop,
                              const YosidaOptions& yosida) {
  if (!(dt > 0.0) || steps < 1) throw ValidationError("picard.slab", "slab needs dt > 0 and >= 1 step");
  const PotentialSet& pot = sys.potentials();
  const cplx idt(0.0, dt);

  // Free part T(t_i) phi0 by composing single steps.
  std::vector<Field> free(steps + 1);
  free[0] = phi0;
  for (int i = 1; i <= steps; ++i) free[i] = propagate_free(free[i - 1], dt, pot, prop);

  SlabResult res;
  std::vector<Field> u = free;
  std::vector<Field> F(steps + 1);
  int slow = 0;
  while (true) {
    if (res.iterations >= opts.max_iter) {
      throw SolverError("Picard iteration did not reach tolerance in " +
                            std::to_string(opts.max_iter) + " iterations",
                        res.increments.empty() ? 0.0 : res.increments.back());
    }
    for (int i = 0; i <= steps; ++i) F[i] = sys.g_tilde_regularized(u[i], opts.n, yosida);

    double inc = 0.0;
    Field Q(phi0.grid(), phi0.components());
    std::vector<Field> next(steps + 1);
    next[0] = phi0;
    for (int i = 1; i <= steps; ++i) {
      Q.axpy(i - 1 == 0 ? 0.5 : 1.0, F[i - 1]);
      Q = propagate_free(Q, dt, pot, prop);
      Field v = free[i];
      v.axpy(idt, Q);
      v.axpy(0.5 * idt, F[i]);
      inc = std::max(inc, l2_distance(v, u[i]));
      next[i] = std::move(v);
    }
    u = std::move(next);
    ++res.iterations;
    if (!std::isfinite(inc)) throw SlabTooLong("Picard iterate is not finite", inc);
    if (!res.increments.empty() && inc >= 0.95 * res.increments.back()) {
      if (++slow >= 3) {
        throw SlabTooLong("Picard iteration is not contracting; halve the slab length", inc);
      }
    } else {
      slow = 0;
    }
    res.increments.push_back(inc);
    if (inc <= opts.tol) break;
  }
  res.nodes = std::move(u);
  return res;
}

bool blowup_detected(const std::vector<double>& norms, double threshold) {
  const std::size_t n = norms.size();
  if (n < 3) return false;
  return norms[n - 1] > threshold && norms[n - 1] > norms[n - 2] && norms[n - 2] > norms[n - 3];
}

TrajectoryRecord evolve(const Field& phi0, const System& sys, const EvolveConfig& cfg,
                        const EvolveCallbacks& cb) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ValidationError("evolve.dt", "dt must be > 0");
  if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) {
    throw ValidationError("evolve.t_end", "t_end must be >= 0");
  }
  if (cfg.diagnostics_stride < 1) {
    throw ValidationError("evolve.diagnostics_stride", "diagnostics stride must be >= 1");
  }
  if (cfg.snapshot_stride < 0) {
    throw ValidationError("evolve.snapshot_stride", "snapshot stride must be >= 0");
  }
  if (cfg.integrator == Integrator::picard) {
    if (!(cfg.picard.tol > 0.0 && cfg.picard.tol <= 1e-4)) {
      throw ValidationError("evolve.picard_tol", "picard_tol must lie in (0, 1e-4]");
    }
    if (cfg.picard.n < 1) throw ValidationError("evolve.n", "Yosida index must be >= 1");
    if (cfg.picard.slab_steps < 1) throw ValidationError("evolve.slab_steps", "slab_steps must be >= 1");
  }
  if (phi0.components() != sys.components()) {
    throw ValidationError("evolve.m", "initial datum and system disagree on m");
  }
  if (!phi0.all_finite()) throw ValidationError("evolve.initial", "initial datum is not finite");

  TrajectoryRecord rec;
  const auto steps_total = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
  const Diagnostics d0 = sys.diagnostics(phi0, 0.0);
  const double threshold = cfg.blowup_threshold > 0.0 ? cfg.blowup_threshold : 10.0 * d0.H1A_norm;
  if (d0.H1A_norm > 0.0 && threshold <= d0.H1A_norm) {
    throw ValidationError("evolve.blowup_threshold",
                          "blow-up threshold must exceed the initial H1_A norm");
  }

  std::vector<double> norms;
  double first_cross = -1.0;
  auto record = [&](const Field& u, long step, double t, bool force) -> bool {
    if (cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0) {
      if (cb.on_snapshot) cb.on_snapshot(t, u);
      if (cb.keep_snapshots) {
        rec.snapshot_times.push_back(t);
        rec.snapshots.push_back(u);
      }
    }
    if (!force && step % cfg.diagnostics_stride != 0) return false;
    Diagnostics d = sys.diagnostics(u, t);
    rec.times.push_back(t);
    if (cfg.integrator == Integrator::picard) {
      rec.regularized_energy.push_back(sys.regularized_energy(u, cfg.picard.n, cfg.yosida));
    }
    norms.push_back(d.H1A_norm);
    if (d.H1A_norm > threshold) {
      if (first_cross < 0.0) first_cross = t;
    } else {
      first_cross = -1.0;
    }
    if (cb.on_diagnostics) cb.on_diagnostics(d);
    rec.diagnostics.push_back(std::move(d));
    if (blowup_detected(norms, threshold)) {
      rec.status = RunStatus::blowup_detected;
      rec.t_star = first_cross;
      std::ostringstream os;
      os << "H1_A norm " << norms.back() << " exceeded threshold " << threshold
         << " with increasing trend; first crossing at t = " << first_cross;
      rec.message = os.str();
      return true;
    }
    return false;
  };
  auto fail = [&](double t, const std::string& why) {
    rec.status = RunStatus::solver_failure;
    rec.failure_time = t;
    rec.message = why;
  };
  auto nonfinite = [&](double t) {
    if (first_cross >= 0.0) {
      rec.status = RunStatus::blowup_detected;
      rec.t_star = first_cross;
      rec.message = "field became non-finite after the norm crossed the threshold";
    } else {
      fail(t, "field became non-finite");
    }
  };

  Field u = phi0;
  if (record(u, 0, 0.0, true)) {
    rec.final_field = u;
    return rec;
  }

  long step = 0;
  if (cfg.integrator == Integrator::strang) {
    while (step < steps_total) {
      const double t = (step + 1) * cfg.dt;
      try {
        u = strang_step(u, cfg.dt, sys, cfg.propagator);
      } catch (const SolverError& e) {
        fail(step * cfg.dt, e.what());
        break;
      }
      ++step;
      if (!u.all_finite()) {
        nonfinite(t);
        break;
      }
      if (record(u, step, t, step == steps_total)) break;
    }
  } else {
    int slab = cfg.picard.slab_steps;
    while (step < steps_total) {
      const int k = static_cast<int>(std::min<long>(slab, steps_total - step));
      SlabResult res;
      try {
        res = picard_yosida_slab(u, cfg.dt, k, sys, cfg.picard, cfg.propagator, cfg.yosida);
      } catch (const SlabTooLong& e) {
        if (slab > 1 && rec.slab_halvings < cfg.picard.max_halvings) {
          slab = std::max(1, slab / 2);
          ++rec.slab_halvings;
          continue;
        }
        fail(step * cfg.dt, e.what());
        break;
      } catch (const SolverError& e) {
        fail(step * cfg.dt, e.what());
        break;
      }
      bool stop = false;
      for (int i = 1; i <= k && !stop; ++i) {
        ++step;
        const double t = step * cfg.dt;
        if (!res.nodes[i].all_finite()) {
          nonfinite(t);
          stop = true;
          break;
        }
        stop = record(res.nodes[i], step, t, step == steps_total);
      }
      u = std::move(res.nodes[k]);
      if (stop) break;
    }
  }
  rec.final_field = std::move(u);
  return rec;
}

GlobalGateReport global_existence_gate(int dim, const LocalSpec& local,
                                       const NonlocalSpec* nonlocal, double infV) {
  GlobalGateReport rep;
  rep.l_bound = 4.0 / dim;
  for (int j = 0; j < local.components(); ++j) {
    GateCondition c;
    c.name = "Theorem (solGlobal): l_" + std::to_string(j) + " < 4/N";
    c.value = local.l[j];
    c.bound = rep.l_bound;
    c.holds = local.l[j] < rep.l_bound;
    rep.conditions.push_back(c);
  }
  if (nonlocal && nonlocal->active()) {
    const double q = nonlocal->q(dim);
    rep.mu_bound = 2.0 - 1.0 / q + 2.0 / dim;
    GateCondition c;
    c.name = "Theorem (solGlobal): mu < 2 - 1/q + 2/N";
    c.value = nonlocal->mu;
    c.bound = rep.mu_bound;
    c.holds = nonlocal->mu < rep.mu_bound;
    rep.conditions.push_back(c);
  }
  GateCondition v;
  v.name = "Theorem (solGlobal): inf V > 0";
  v.value = infV;
  v.bound = 0.0;
  v.holds = infV > 0.0;
  rep.conditions.push_back(v);

  rep.global = std::all_of(rep.conditions.begin(), rep.conditions.end(),
                           [](const GateCondition& c) { return c.holds; });
  if (rep.global) {
    rep.verdict = "global existence guaranteed by Theorem (solGlobal)";
  } else {
    std::ostringstream os;
    os << "violated:";
    for (const auto& c : rep.conditions) {
      if (!c.holds) os << " [" << c.name << ", value " << c.value << "]";
    }
    rep.verdict = os.str();
  }
  return rep;
}

double holder_worst_ratio(const std::vector<double>& times, const std::vector<Field>& snaps) {
  if (times.size() != snaps.size()) {
    throw ValidationError("holder.snapshots", "times and snapshots differ in length");
  }
  if (snaps.size() < 2) throw ValidationError("holder.snapshots", "need at least two snapshots");
  double worst = 0.0;
  for (std::size_t a = 0; a < snaps.size(); ++a) {
    for (std::size_t b = a + 1; b < snaps.size(); ++b) {
      const double gap = std::abs(times[b] - times[a]);
      if (gap == 0.0) continue;
      worst = std::max(worst, l2_distance(snaps[a], snaps[b]) / std::sqrt(gap));
    }
  }
  return worst;
}

HolderReport holder_half_check(const std::vector<double>& times, const std::vector<Field>& snaps,
                               const System& sys, double slack) {
  HolderReport rep;
  rep.slack = slack;
  rep.worst_ratio = holder_worst_ratio(times, snaps);
  for (std::size_t a = 0; a < snaps.size(); ++a) {
    for (std::size_t b = a + 1; b < snaps.size(); ++b) rep.pairs += times[a] != times[b];
  }
  double C = 0.0;
  for (const auto& u : snaps) {
    C = std::max(C, std::sqrt(h1a_norm_squared(u, sys.potentials())));
    const Field f = sys.energy_gradient(u);
    const Field Jf = yosida_apply(f, 1, sys.potentials());
    C = std::max(C, std::sqrt(std::max(0.0, real_inner(Jf, f))));
  }
  rep.bound_constant = C;
  rep.pass = std::isfinite(rep.worst_ratio) && rep.worst_ratio <= slack * C;
  return rep;
}

EnergyBoundReport energy_bound_audit(const System& sys, const std::vector<double>& times,
                                     const std::vector<Field>& snaps) {
  EnergyBoundReport rep;
  if (snaps.empty() || times.size() != snaps.size()) {
    throw ValidationError("energy_bound.snapshots", "need matching, non-empty times and snapshots");
  }
  const Grid& g = *sys.grid();
  const int N = g.dim();
  const int m = sys.components();
  const LocalSpec& loc = sys.local();
  const PotentialSet& pot = sys.potentials();

  bool ok = true;
  std::ostringstream msg;
  for (int j = 0; j < m; ++j) {
    if (loc.l[j] >= 4.0 / N) {
      ok = false;
      msg << "l_" << j << " >= 4/N; ";
    }
  }
  // Defocusing local terms make int G <= 0 and drop out of the chain.
  rep.K = loc.sign > 0 && loc.active() ? loc.K() : 0.0;
  if (!std::isfinite(rep.K)) {
    ok = false;
    msg << "G bound constant K is infinite (coupled component with l_j < 2); ";
  }

  const NonlocalOperator* nl = sys.nonlocal();
  if (nl) {
    const double q = nl->spec().q(N);
    const double mu = nl->spec().mu;
    rep.nonlocal_exponent = 2.0 * N * mu * (0.5 - (2.0 * q - 1.0) / (2.0 * q * mu));
    rep.exponent_ok = rep.nonlocal_exponent < 2.0;
    if (!rep.exponent_ok) {
      ok = false;
      msg << "nonlocal growth exponent " << rep.nonlocal_exponent << " >= 2; ";
    }
  }
  if (!ok) {
    rep.message = msg.str();
    return rep;
  }

  // Empirical GN constants |u|_{l+2} <= c |u|_2^{1-s} |grad|u||_2^{s}, s = N l/(2(l+2)),
  // and the HLS-type constant 2 E_nonloc <= C3 |Phi|_{H1A}^e.
  rep.gn_constants.assign(m, 0.0);
  std::vector<double> X(snaps.size()), mass(snaps.size());
  std::vector<std::vector<double>> mj(snaps.size());
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    const Field& u = snaps[s];
    X[s] = h1a_norm_squared(u, pot);
    mj[s] = charges(u);
    mass[s] = 0.0;
    for (double c : mj[s]) mass[s] += c;
    for (int j = 0; j < m; ++j) {
      const double l = loc.l[j];
      const double sigma = N * l / (2.0 * (l + 2.0));
      const double num = lp_norm(g, u.component(j), l + 2.0);
      const auto dp = diamagnetic_pair(u.component(j), pot);
      const double den = std::pow(std::sqrt(mj[s][j]), 1.0 - sigma) * std::pow(std::sqrt(dp.lhs), sigma);
      if (num > 0.0 && den > 0.0) rep.gn_constants[j] = std::max(rep.gn_constants[j], num / den);
    }
    if (nl && X[s] > 0.0) {
      rep.hls_constant = std::max(rep.hls_constant,
                                  2.0 * nl->energy(u) / std::pow(X[s], 0.5 * rep.nonlocal_exponent));
    }
  }

  // P(eps) = 1 - 2K sum_j (N l_j / 4) eps^{4/(N l_j)}, solved for P = 1/2.
  auto young_sum = [&](double eps) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += 0.25 * N * loc.l[j] * std::pow(eps, 4.0 / (N * loc.l[j]));
    return 2.0 * rep.K * s;
  };
  if (rep.K > 0.0) {
    double lo = 0.0, hi = 1.0;
    while (young_sum(hi) < 0.5) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (young_sum(mid) < 0.5 ? lo : hi) = mid;
    }
    rep.epsilon = lo;
    rep.prefactor = 1.0 - young_sum(lo);
  } else {
    rep.epsilon = 1.0;
    rep.prefactor = 1.0;
  }

  const double F0 = sys.diagnostics(snaps.front(), times.front()).F_A;
  rep.pass = true;
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    double C2 = 0.0;
    if (rep.K > 0.0) {
      for (int j = 0; j < m; ++j) {
        const double l = loc.l[j];
        const double sigma = N * l / (2.0 * (l + 2.0));
        const double pprime = 4.0 / (4.0 - N * l);
        const double b = std::pow(rep.gn_constants[j], l + 2.0) *
                         std::pow(mj[s][j], 0.5 * (1.0 - sigma) * (l + 2.0)) / rep.epsilon;
        C2 += std::pow(b, pprime) / pprime;
      }
      C2 *= 2.0 * rep.K;
    }
    EnergyBoundSample smp;
    smp.t = times[s];
    smp.lhs = rep.prefactor * X[s];
    smp.rhs = 2.0 * F0 + (1.0 - pot.infV + 2.0 * rep.K) * mass[s] + C2 +
              rep.hls_constant * std::pow(X[s], 0.5 * rep.nonlocal_exponent);
    smp.margin = smp.rhs - smp.lhs;
    if (smp.margin < -1e-8 * std::max(1.0, std::abs(smp.rhs))) rep.pass = false;
    rep.samples.push_back(smp);
  }
  rep.message = rep.pass ? "bound holds at every sample" : "bound violated at some sample";
  return rep;
}

}  // namespace mnls
