#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mnls/grid.hpp"
#include "mnls/magnetic.hpp"
#include "mnls/nonlinear.hpp"

namespace mnls {

struct CheckReport {
  std::string name;
  int samples = 0;
  /// Signed; positive means satisfied.
  double worst_margin = 0.0;
  std::uint64_t witness_seed = 0;
  bool pass = false;
  /// Named witness values (fitted slopes, empirical constants, ...).
  std::map<std::string, double> details;
  std::string note;
};

// ---------------------------------------------------------------- ensembles

/// Deterministic 64-bit stream key for (check name, seed, sample).
std::uint64_t stream_key(const std::string& check, std::uint64_t seed, std::uint64_t sample);

struct RandomFieldOptions {
  double correlation_length = 1.0;
  /// Gaussian envelope radius; 0 disables localization.
  double envelope = 0.0;
  bool real = false;
};

/// Band-limited Gaussian random field with spectrum exp(-|k|^2 ell^2 / 2),
/// cut at min(4/ell, half Nyquist). Coefficients are drawn per continuum
/// wavenumber, so refining the grid samples the same function whenever the
/// 4/ell cut is the active one. Unit L^2 norm.
std::vector<cplx> random_component(const Grid& grid, std::uint64_t key,
                                   const RandomFieldOptions& opts);
Field random_field(const GridPtr& grid, int m, std::uint64_t key, const RandomFieldOptions& opts);
/// Smooth random vector potential with max |A| = amplitude.
std::vector<std::vector<double>> random_vector_potential(const Grid& grid, std::uint64_t key,
                                                         double amplitude, double ell);

/// Correlation lengths used by the ensembles, as fractions of L.
inline constexpr double kCorrelationFractions[3] = {1.0 / 16, 1.0 / 8, 1.0 / 4};

// ---------------------------------------------------------------- checks

struct DiamagneticOptions {
  GridSpec grid{2, 64, 8.0};
  int samples = 100;
  std::uint64_t seed = 1;
  double A_amplitude = 2.0;
};
/// Margin per sample: (rhs - lhs) / rhs, pass when >= -1e-8. Also checks the
/// equality case A = 0, u > 0 to 1e-10 relative (detail "equality_defect").
CheckReport check_diamagnetic(const DiamagneticOptions& opts);

struct GnOptions {
  int dim = 1;
  int n_axis = 64;
  double L = 16.0;
  double l = 2.0;
  int samples = 30;
  std::uint64_t seed = 2;
};
/// Empirical Gagliardo-Nirenberg constant and its change under n -> 2n.
CheckReport check_gn(const GnOptions& opts);
double gn_ratio(const Grid& grid, std::span<const cplx> u, double l);

struct HlsOptions {
  int dim = 2;
  int n_axis = 32;
  double L = 12.0;
  NonlocalSpec spec{{{1.0}}, 1.0, 0.0, 2.0};
  int samples = 100;
  std::uint64_t seed = 3;
};
/// Passes when the maximum ratio is finite and changes by less than 2x under
/// n -> 2n; the ensemble spread max/min is reported as detail "spread".
/// Empirical constant of E_nonloc <= C sum_ij w_ij m_i^a m_j^a |grad|Phi_i||^b |grad|Phi_j||^b
/// with a = mu/2 (1 - N(1/2 - (2q-1)/(2q mu))), b = N mu (1/2 - (2q-1)/(2q mu)).
CheckReport check_hls_nonlocal(const HlsOptions& opts);
double hls_ratio(const Field& phi, const NonlocalOperator& op);

struct YosidaCheckOptions {
  GridSpec grid{2, 32, 8.0};
  int samples = 50;
  std::vector<int> n_values{1, 10, 100, 1000};
  std::uint64_t seed = 4;
  double A_amplitude = 1.0;
};
/// Contractivity in L^2 and L^4 (with random A), self-adjointness, and the
/// slope of |J_n f - f|_2 against n for A = 0 (detail "slope").
CheckReport check_yosida(const YosidaCheckOptions& opts);

struct DecayOptions {
  GridSpec grid{1, 4096, 400.0};
  double p = kInf;
  double t_min = 5.0;
  double t_max = 50.0;
  int samples = 10;
  /// Initial datum exp(-|x|^2 / (2 width^2)); its spread under exp(it Lap) is
  /// sqrt(width^2 + 4 t^2 / width^2).
  double width = 2.0;
  /// Empty potential set means A = 0 on the given grid.
  std::vector<std::vector<double>> A;
};
struct DecayResult {
  std::vector<double> t;
  std::vector<double> norm;
  double slope = 0.0;
  double expected = 0.0;
  double boundary_mass = 0.0;
};
/// |T(t) v|_p for a Gaussian v; expected slope -N (1/2 - 1/p).
/// The boundary monitor is the mass fraction within L/4 of the box edge at t_max.
DecayResult measure_dispersive_decay(const DecayOptions& opts);
CheckReport check_dispersive_decay(const DecayOptions& opts);

struct LipschitzOptions {
  int dim = 1;
  int n_axis = 64;
  double L = 12.0;
  double M = 4.0;
  int samples = 200;
  std::uint64_t seed = 5;
  double V0 = 1.5;
  LocalSpec local;            // default: m = 1 cubic
  NonlocalSpec nonlocal{{{1.0}}, 0.5, 0.0, 2.0};
};
/// Per class k ratio |g_k(Psi) - g_k(Phi)|_{rho_k'} / |Psi - Phi|_{r_k} over pairs at
/// three proximity scales; fails if the ratio grows by more than 2x as the pairs
/// approach each other.
CheckReport check_lipschitz_gtilde(const LipschitzOptions& opts);

struct SuiteOptions {
  int n_axis = 32;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
};
using Check = std::pair<std::string, std::function<CheckReport()>>;
std::vector<Check> default_suite(const SuiteOptions& opts);
/// Runs checks on a worker pool; result order follows the input order.
std::vector<CheckReport> run_checks(const std::vector<Check>& checks, unsigned threads);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mnls
