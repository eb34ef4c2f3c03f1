#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mnls/grid.hpp"

namespace mnls {

/// Sampled electromagnetic data: vector potential A, electric potential V,
/// and the derived div A and 2-form coefficients B_ij = d_i A_j - d_j A_i.
struct PotentialSet {
  GridPtr grid;
  std::vector<std::vector<double>> A;     // N arrays
  std::vector<double> V;
  std::vector<double> divA;
  std::vector<std::vector<double>> B;     // one array per pair i<j
  double infV = 0.0;

  // Fast paths: A identically zero, or spatially constant.
  bool zero_A = true;
  bool constant_A = true;
  std::array<double, 3> a_const{0.0, 0.0, 0.0};
  /// Grid mean of |A|^2; shifts the Fourier preconditioner of the resolvent.
  double mean_A2 = 0.0;

  int dim() const { return grid->dim(); }
  /// Index into B for the pair (i, j), i < j.
  static int pair_index(int i, int j, int dim);
};

/// Builds a potential set; an empty A means A = 0, an empty V means V = 0.
PotentialSet make_potentials(GridPtr grid, std::vector<std::vector<double>> A,
                             std::vector<double> V);

namespace potentials {
std::vector<std::vector<double>> zero_vector(const Grid& grid);
std::vector<std::vector<double>> constant_vector(const Grid& grid, const std::vector<double>& a);
/// A = B (-y, x) / 2 on a 2D grid: uniform field of strength B. Periodized
/// by the grid, so only meaningful while the field stays away from the edges.
std::vector<std::vector<double>> harmonic_gauge(const Grid& grid, double B);
std::vector<double> constant_scalar(const Grid& grid, double v);
/// V = omega^2 |x|^2 / 2 + offset
std::vector<double> harmonic_scalar(const Grid& grid, double omega, double offset = 0.0);
}  // namespace potentials

/// Measured proxies for the smoothness/decay assumptions on A, B and V.
/// Descriptive only: a finite box cannot certify a supremum over R^N.
struct AssumptionReport {
  double max_dA = 0.0;        // max |d_i A_j|
  double max_d2A = 0.0;       // max |d_i d_k A_j|
  bool A_bounded_derivatives = true;
  double max_dB = 0.0;        // max |d_k B_ij|
  /// Fitted exponent s in  sup_{shell} |dB| ~ <x>^s ; -inf when dB vanishes.
  double B_decay_exponent = 0.0;
  bool B_decays = true;       // s <= -1 (or dB == 0)
  double V_exponent_p = 0.0;
  double V_lp_norm = 0.0;     // |V - V_far|_{L^p} on the box
  double V_sup = 0.0;
  bool V_exponent_admissible = true;  // p >= 1 and p >= N/2
  double infV = 0.0;
};

AssumptionReport assess_assumptions(const PotentialSet& pot, double V_exponent_p);

/// D_d u = -i d_d u - A_d u for each axis d.
std::vector<std::vector<cplx>> covariant_derivative(std::span<const cplx> u,
                                                    const PotentialSet& pot);

/// L_A applied to one component, L_A = sum_d D_d^* D_d.
void apply_LA(std::span<const cplx> u, std::span<cplx> out, const PotentialSet& pot);
Field apply_LA(const Field& phi, const PotentialSet& pot);

/// Literal four-term form -Lap u - (2/i) A.grad u + |A|^2 u - (1/i) div A u.
/// Agrees with apply_LA up to product-rule aliasing; kept as a cross-check.
Field apply_LA_expanded(const Field& phi, const PotentialSet& pot);

/// 1/2 sum_j sum_d |D_d Phi_j|^2.
double kinetic_energy(const Field& phi, const PotentialSet& pot);

/// Squared H^1_A norm |D Phi|^2 + |Phi|^2.
double h1a_norm_squared(const Field& phi, const PotentialSet& pot);

struct DiamagneticPair {
  double lhs = 0.0;  // |grad |u||^2
  double rhs = 0.0;  // |(grad/i - A) u|^2
};
inline constexpr double kModulusEpsilon = 1e-12;
DiamagneticPair diamagnetic_pair(std::span<const cplx> u, const PotentialSet& pot);

struct YosidaOptions {
  double tolerance = 1e-10;
  int max_iterations = 0;  // 0 selects 10 * n_axis
};

struct YosidaStats {
  int iterations = 0;
  double residual = 0.0;
};

/// (I + L_A / n)^{-1} f, componentwise, by preconditioned conjugate gradients.
Field yosida_apply(const Field& f, int n, const PotentialSet& pot,
                   const YosidaOptions& opts = {}, YosidaStats* stats = nullptr);

struct PropagatorOptions {
  int krylov_dim = 30;
  double tolerance = 1e-10;
};

/// T(t) = exp(-i t L_A).
Field propagate_free(const Field& phi, double t, const PotentialSet& pot,
                     const PropagatorOptions& opts = {});

}  // namespace mnls
