#pragma once

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "mnls/grid.hpp"
#include "mnls/magnetic.hpp"

namespace mnls {

/// Local power nonlinearity
///   g_j = s (a_j |Phi_j|^{l_j} + sum_{i != j} beta_ij |Phi_i|^2).
struct LocalSpec {
  std::vector<double> a;
  std::vector<std::vector<double>> beta;
  std::vector<double> l;
  int sign = +1;  // +1 focusing, -1 defocusing

  int components() const { return static_cast<int>(a.size()); }
  bool active() const;
  /// Lipschitz exponent max_j l_j.
  double alpha() const;
  /// Smallest K with 0 <= G <= K (sum s_j + sum s_j^{(l_j+2)/2}) for the
  /// focusing potential. Infinite when a coupled component has l_j < 2.
  double K() const;

  /// m components with every coefficient zero.
  static LocalSpec none(int m);
};

/// Throws ValidationError naming the violated condition.
void validate(const LocalSpec& spec, int dim);

/// Pointwise factor s(a_j |Phi_j|^{l_j} + sum beta_ij |Phi_i|^2) per component.
std::vector<std::vector<double>> local_density(const Field& phi, const LocalSpec& spec);
Field eval_local(const Field& phi, const LocalSpec& spec);
/// Integral of G = s [sum a_j |Phi_j|^{l_j+2}/(l_j+2) + 1/4 sum_{i!=j} beta_ij |Phi_i|^2 |Phi_j|^2].
double eval_local_energy(const Field& phi, const LocalSpec& spec);

/// Hartree term with W_ij(r) = w_ij max(r, r0)^{-gamma} and h(s) = s^mu.
struct NonlocalSpec {
  std::vector<std::vector<double>> w;
  double gamma = 1.0;
  double r0 = 0.0;
  double mu = 2.0;

  int components() const { return static_cast<int>(w.size()); }
  bool active() const;
  /// Weak integrability index N / gamma.
  double q(int dim) const { return dim / gamma; }
  /// Upper end of the admissible mu range (6q-1)/(2q) - (N-2)/N.
  double mu_max(int dim) const;
};

void validate(const NonlocalSpec& spec, int dim);

/// Nonlocal term on a fixed grid; caches the kernel spectrum.
class NonlocalOperator {
 public:
  NonlocalOperator(GridPtr grid, NonlocalSpec spec);

  const NonlocalSpec& spec() const { return spec_; }
  /// Radial profile max(r, r0)^{-gamma} at minimum-image displacements in FFT
  /// order (index 0 is r = 0), with the origin cell replaced by its
  /// 16^N-point subsample average.
  const std::vector<double>& kernel_samples() const { return kernel_; }

  /// U_i = (max(r,r0)^{-gamma}) * |Phi_i|^mu, one array per component.
  std::vector<std::vector<double>> convolutions(const Field& phi) const;
  /// Pointwise factor sum_i w_ij U_i mu |Phi_j|^{mu-2} (0 where Phi_j = 0).
  std::vector<std::vector<double>> density(const Field& phi) const;
  Field eval(const Field& phi) const;
  /// 1/2 sum_ij < W_ij * |Phi_i|^mu, |Phi_j|^mu >.
  double energy(const Field& phi) const;

 private:
  GridPtr grid_;
  NonlocalSpec spec_;
  std::vector<double> kernel_;
  std::vector<cplx> kernel_hat_;
};

/// Energy split and norms reported along a trajectory.
struct Diagnostics {
  double t = 0.0;
  std::vector<double> charge;
  double E_kin = 0.0;
  double E_V = 0.0;
  double E_loc = 0.0;
  double E_nonloc = 0.0;
  double F_A = 0.0;
  double H1A_norm = 0.0;
};

/// Potentials plus nonlinearities: everything needed to evaluate the
/// right-hand side of i Phi_t = L_A Phi - g(Phi).
class System {
 public:
  System(PotentialSet pot, LocalSpec local, std::optional<NonlocalSpec> nonlocal = std::nullopt);

  const GridPtr& grid() const { return pot_.grid; }
  const PotentialSet& potentials() const { return pot_; }
  const LocalSpec& local() const { return local_; }
  const NonlocalOperator* nonlocal() const { return nonlocal_.get(); }
  int components() const { return local_.components(); }

  /// Theta_j with g~_j(Phi) = Theta_j Phi_j; real because g~_j conj(Phi_j) is.
  std::vector<std::vector<double>> phase_density(const Field& phi) const;

  /// g~(Phi) = -V Phi + local + nonlocal.
  Field g_tilde(const Field& phi) const;
  /// J_n g~(J_n Phi).
  Field g_tilde_regularized(const Field& phi, int n, const YosidaOptions& opts = {}) const;
  /// F_A'(Phi) = L_A Phi - g~(Phi).
  Field energy_gradient(const Field& phi) const;

  double potential_energy(const Field& phi) const;
  double local_energy(const Field& phi) const { return eval_local_energy(phi, local_); }
  double nonlocal_energy(const Field& phi) const;

  Diagnostics diagnostics(const Field& phi, double t = 0.0) const;
  /// F_A evaluated as E_kin(Phi) + E_V(J Phi) - E_loc(J Phi) - E_nonloc(J Phi);
  /// the functional conserved by the regularized problem.
  double regularized_energy(const Field& phi, int n, const YosidaOptions& opts = {}) const;

 private:
  PotentialSet pot_;
  LocalSpec local_;
  std::shared_ptr<const NonlocalOperator> nonlocal_;
};

/// Integrability exponents of the three nonlinearity classes.
struct ExponentTable {
  std::array<double, 3> r{};
  std::array<double, 3> rho{};
  std::array<double, 3> alpha{};  // 1 - N(1/2 - 1/r_k)
  std::array<double, 3> beta{};   // 1 - N(1/2 - 1/rho_k)
  double beta_min = 0.0;
  double beta_max = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Critical Sobolev exponent 2N/(N-2), infinite for N <= 2.
double sobolev_exponent(int dim);

/// p: V in L^p + L^inf; alpha: local Lipschitz exponent; mu, q: nonlocal data.
/// Pass nonlocal = false to skip the third class.
ExponentTable exponent_table(int dim, double p, double alpha, double mu, double q,
                             bool nonlocal = true);

}  // namespace mnls
