#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mnls/magnetic.hpp"
#include "mnls/nonlinear.hpp"

namespace mnls {

enum class Integrator { strang, picard };

struct PicardOptions {
  int n = 100;              // Yosida index
  int slab_steps = 50;      // nodes per slab after the initial one
  double tol = 1e-10;       // max_i |u^{k+1}(t_i) - u^k(t_i)|_2
  int max_iter = 200;
  int max_halvings = 8;     // automatic slab halvings inside evolve()
};

struct EvolveConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Integrator integrator = Integrator::strang;
  PicardOptions picard;
  /// H^1_A norm beyond which growth counts as blow-up; 0 selects 10x the
  /// initial norm.
  double blowup_threshold = 0.0;
  int snapshot_stride = 0;      // 0 disables snapshots
  int diagnostics_stride = 1;
  PropagatorOptions propagator;
  YosidaOptions yosida;
};

enum class RunStatus { completed, blowup_detected, solver_failure };
std::string to_string(RunStatus s);

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Diagnostics> diagnostics;
  /// F_A^n along Picard runs (empty for strang).
  std::vector<double> regularized_energy;
  std::vector<double> snapshot_times;
  std::vector<Field> snapshots;
  RunStatus status = RunStatus::completed;
  double t_star = 0.0;        // first threshold crossing when blow-up is flagged
  double failure_time = 0.0;
  std::string message;
  Field final_field;
  int slab_halvings = 0;
};

/// One Strang step: exact phase rotation for dt/2, free flow for dt, phase
/// rotation for dt/2.
Field strang_step(const Field& phi, double dt, const System& sys,
                  const PropagatorOptions& prop = {});

/// Raised when the Picard iteration stops contracting on a slab.
class SlabTooLong : public SolverError {
 public:
  using SolverError::SolverError;
};

struct SlabResult {
  std::vector<Field> nodes;          // u(t_0), ..., u(t_K)
  std::vector<double> increments;    // max_i |u^{k+1}(t_i) - u^k(t_i)|_2 per iteration
  int iterations = 0;
};

/// Fixed-point iteration of the Duhamel form of the regularized problem
///   u(t) = T(t) phi0 + i int_0^t T(t - s) g~_n(u(s)) ds
/// on the nodes t_i = i dt, i = 0..steps, trapezoidal in s.
SlabResult picard_yosida_slab(const Field& phi0, double dt, int steps, const System& sys,
                              const PicardOptions& opts, const PropagatorOptions& prop = {},
                              const YosidaOptions& yosida = {});

struct EvolveCallbacks {
  std::function<void(const Diagnostics&)> on_diagnostics;
  std::function<void(double, const Field&)> on_snapshot;
  /// When false, snapshots are passed to on_snapshot but not stored.
  bool keep_snapshots = true;
};

TrajectoryRecord evolve(const Field& phi0, const System& sys, const EvolveConfig& cfg,
                        const EvolveCallbacks& cb = {});

/// Threshold + positive trend over the last three samples.
bool blowup_detected(const std::vector<double>& norms, double threshold);

struct GateCondition {
  std::string name;
  bool holds = false;
  double value = 0.0;
  double bound = 0.0;
};

struct GlobalGateReport {
  std::vector<GateCondition> conditions;
  bool global = false;
  double l_bound = 0.0;   // 4/N
  double mu_bound = 0.0;  // 2 - 1/q + 2/N
  std::string verdict;
};

/// Purely arithmetic check of the sufficient conditions for global existence.
GlobalGateReport global_existence_gate(int dim, const LocalSpec& local,
                                       const NonlocalSpec* nonlocal, double infV);

struct HolderReport {
  double worst_ratio = 0.0;
  double bound_constant = 0.0;
  double slack = 10.0;
  std::size_t pairs = 0;
  bool pass = false;
};

/// max over snapshot pairs with distinct times of |Phi(t)-Phi(s)|_2/|t-s|^{1/2}.
double holder_worst_ratio(const std::vector<double>& times, const std::vector<Field>& snaps);

/// Worst ratio compared with max(sup |Phi|_{H^1_A}, sup |Phi_t|_{H^-1_A}) times slack.
HolderReport holder_half_check(const std::vector<double>& times, const std::vector<Field>& snaps,
                               const System& sys, double slack = 10.0);

struct EnergyBoundSample {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
};

struct EnergyBoundReport {
  double epsilon = 0.0;
  double prefactor = 1.0;
  double K = 0.0;
  std::vector<double> gn_constants;   // per component, empirical
  double hls_constant = 0.0;          // empirical
  double nonlocal_exponent = 0.0;     // 2 N mu (1/2 - (2q-1)/(2 q mu))
  bool exponent_ok = true;
  std::vector<EnergyBoundSample> samples;
  bool pass = false;
  std::string message;
};

/// Evaluates P(eps) |Phi|^2 <= 2F(0) + (1 - inf V + 2K) M + C2(eps) + C3 |Phi|^e
/// along stored snapshots, with eps chosen so that P(eps) = 1/2.
EnergyBoundReport energy_bound_audit(const System& sys, const std::vector<double>& times,
                                     const std::vector<Field>& snaps);

}  // namespace mnls
