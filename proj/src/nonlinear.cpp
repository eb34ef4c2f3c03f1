#include "mnls/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mnls {

namespace {

void require(bool ok, const char* condition, const std::string& msg) {
  if (!ok) throw ValidationError(condition, msg);
}

void check_components(const Field& phi, int m, const char* who) {
  if (phi.components() != m) {
    throw ValidationError(who, std::string(who) + ": field has " +
                                   std::to_string(phi.components()) + " components, spec has " +
                                   std::to_string(m));
  }
}

bool square_symmetric(const std::vector<std::vector<double>>& M, std::size_t m) {
  if (M.size() != m) return false;
  for (const auto& row : M) {
    if (row.size() != m) return false;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(M[i][j] - M[j][i]) > 1e-14 * std::max(1.0, std::abs(M[i][j]))) return false;
    }
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- local

LocalSpec LocalSpec::none(int m) {
  LocalSpec s;
  s.a.assign(m, 0.0);
  s.l.assign(m, 2.0);
  s.beta.assign(m, std::vector<double>(m, 0.0));
  return s;
}

bool LocalSpec::active() const {
  const int m = components();
  for (int j = 0; j < m; ++j) {
    if (a[j] != 0.0) return true;
    for (int i = 0; i < m; ++i) {
      if (i != j && beta[i][j] != 0.0) return true;
    }
  }
  return false;
}

double LocalSpec::alpha() const {
  double out = 0.0;
  for (double v : l) out = std::max(out, v);
  return out;
}

double LocalSpec::K() const {
  const int m = components();
  double K = 0.0;
  for (int j = 0; j < m; ++j) {
    double coupling = 0.0;
    for (int i = 0; i < m; ++i) {
      if (i != j) coupling += beta[i][j];
    }
    // s^2 <= s + s^{(l+2)/2} needs l >= 2
    if (coupling > 0.0 && l[j] < 2.0) return kInf;
    K = std::max(K, a[j] / (l[j] + 2.0) + 0.25 * coupling);
  }
  return K;
}

void validate(const LocalSpec& spec, int dim) {
  const auto m = static_cast<std::size_t>(spec.components());
  require(m >= 1, "local.m", "local spec needs at least one component");
  require(spec.l.size() == m, "local.l", "one exponent l_j per component required");
  require(square_symmetric(spec.beta, m), "(W) local.beta",
          "coupling matrix beta must be square and symmetric");
  require(spec.sign == 1 || spec.sign == -1, "local.sign", "sign must be +1 or -1");
  for (std::size_t j = 0; j < m; ++j) {
    require(std::isfinite(spec.a[j]) && spec.a[j] >= 0.0, "(g) local.a",
            "coefficients a_j must be finite and >= 0");
    require(std::isfinite(spec.l[j]) && spec.l[j] > 0.0, "(G) local.l", "exponents l_j must be > 0");
    if (dim >= 3) {
      std::ostringstream os;
      os << "(G) requires l_j < 4/(N-2) = " << 4.0 / (dim - 2) << ", got l_" << j << " = "
         << spec.l[j];
      require(spec.l[j] < 4.0 / (dim - 2), "(G) local.l", os.str());
    }
    for (std::size_t i = 0; i < m; ++i) {
      require(std::isfinite(spec.beta[i][j]) && spec.beta[i][j] >= 0.0, "(g) local.beta",
              "couplings beta_ij must be finite and >= 0");
    }
  }
}

std::vector<std::vector<double>> local_density(const Field& phi, const LocalSpec& spec) {
  const int m = spec.components();
  check_components(phi, m, "local");
  const std::size_t np = phi.points();
  std::vector<std::vector<double>> rho(m, std::vector<double>(np, 0.0));
  std::vector<std::vector<double>> mod2(m, std::vector<double>(np));
  for (int j = 0; j < m; ++j) {
    auto c = phi.component(j);
    for (std::size_t p = 0; p < np; ++p) mod2[j][p] = std::norm(c[p]);
  }
  for (int j = 0; j < m; ++j) {
    auto& r = rho[j];
    if (spec.a[j] != 0.0) {
      const double half_l = 0.5 * spec.l[j];
      for (std::size_t p = 0; p < np; ++p) {
        r[p] += spec.a[j] * (half_l == 1.0 ? mod2[j][p] : std::pow(mod2[j][p], half_l));
      }
    }
    for (int i = 0; i < m; ++i) {
      if (i == j || spec.beta[i][j] == 0.0) continue;
      for (std::size_t p = 0; p < np; ++p) r[p] += spec.beta[i][j] * mod2[i][p];
    }
    if (spec.sign < 0) {
      for (auto& v : r) v = -v;
    }
  }
  return rho;
}

Field eval_local(const Field& phi, const LocalSpec& spec) {
  const auto rho = local_density(phi, spec);
  Field out(phi.grid(), phi.components());
  for (int j = 0; j < phi.components(); ++j) {
    auto in = phi.component(j);
    auto o = out.component(j);
    for (std::size_t p = 0; p < in.size(); ++p) o[p] = rho[j][p] * in[p];
  }
  return out;
}

double eval_local_energy(const Field& phi, const LocalSpec& spec) {
  const int m = spec.components();
  check_components(phi, m, "local");
  const std::size_t np = phi.points();
  double s = 0.0;
  for (int j = 0; j < m; ++j) {
    auto cj = phi.component(j);
    if (spec.a[j] != 0.0) {
      const double e = 0.5 * spec.l[j] + 1.0;
      double acc = 0.0;
      for (std::size_t p = 0; p < np; ++p) acc += std::pow(std::norm(cj[p]), e);
      s += spec.a[j] / (spec.l[j] + 2.0) * acc;
    }
    for (int i = 0; i < m; ++i) {
      if (i == j || spec.beta[i][j] == 0.0) continue;
      auto ci = phi.component(i);
      double acc = 0.0;
      for (std::size_t p = 0; p < np; ++p) acc += std::norm(ci[p]) * std::norm(cj[p]);
      s += 0.25 * spec.beta[i][j] * acc;
    }
  }
  return spec.sign * s * phi.grid()->cell_volume();
}

// ---------------------------------------------------------------- nonlocal

bool NonlocalSpec::active() const {
  for (const auto& row : w) {
    for (double v : row) {
      if (v != 0.0) return true;
    }
  }
  return false;
}

double NonlocalSpec::mu_max(int dim) const {
  const double qq = q(dim);
  return (6.0 * qq - 1.0) / (2.0 * qq) - (dim - 2.0) / dim;
}

void validate(const NonlocalSpec& spec, int dim) {
  const auto m = static_cast<std::size_t>(spec.components());
  require(m >= 1, "nonlocal.w", "nonlocal spec needs a weight matrix");
  require(square_symmetric(spec.w, m), "(W) nonlocal.w",
          "(W) requires W_ij = W_ji: weight matrix must be square and symmetric");
  for (const auto& row : spec.w) {
    for (double v : row) {
      require(std::isfinite(v) && v >= 0.0, "(W) nonlocal.w", "(W) requires W_ij >= 0");
    }
  }
  require(std::isfinite(spec.gamma) && spec.gamma > 0.0, "(W) nonlocal.gamma",
          "kernel exponent gamma must be > 0");
  {
    std::ostringstream os;
    os << "(W) requires gamma < N so that W is locally integrable (q = N/gamma > 1); got gamma = "
       << spec.gamma << ", N = " << dim;
    require(spec.gamma < dim, "(W) nonlocal.gamma", os.str());
  }
  {
    std::ostringstream os;
    os << "(W) requires q = N/gamma > N/4, i.e. gamma < 4; got gamma = " << spec.gamma;
    require(spec.gamma < 4.0, "(W) nonlocal.gamma", os.str());
  }
  require(std::isfinite(spec.r0) && spec.r0 >= 0.0, "(W) nonlocal.r0", "core radius must be >= 0");
  require(std::isfinite(spec.mu), "(h) nonlocal.mu", "mu must be finite");
  {
    std::ostringstream os;
    os << "(restrh-localwp) mu out of range: need 2 <= mu <= " << spec.mu_max(dim) << ", got "
       << spec.mu;
    require(spec.mu >= 2.0 && spec.mu <= spec.mu_max(dim) + 1e-12, "(restrh-localwp) nonlocal.mu",
            os.str());
  }
}

NonlocalOperator::NonlocalOperator(GridPtr grid, NonlocalSpec spec)
    : grid_(std::move(grid)), spec_(std::move(spec)) {
  validate(spec_, grid_->dim());
  const Grid& g = *grid_;
  const int N = g.dim();
  const double gamma = spec_.gamma, r0 = spec_.r0;
  auto W = [&](double r) { return std::pow(std::max(r, r0), -gamma); };

  // FFT layout: index 0 is the zero displacement, so the circular
  // convolution below needs no shift.
  const int n = g.n_axis();
  kernel_.resize(g.size());
  const std::size_t origin = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t rem = i;
    double r2 = 0.0;
    for (int d = 0; d < N; ++d) {
      const int k = static_cast<int>(rem % n);
      rem /= n;
      const double off = std::min(k, n - k) * g.dx();
      r2 += off * off;
    }
    kernel_[i] = r2 > 0.0 ? W(std::sqrt(r2)) : 0.0;
  }
  // Cell average at the origin over 16^N subcell centres (none is at 0).
  constexpr int kSub = 16;
  int total = 1;
  for (int d = 0; d < N; ++d) total *= kSub;
  double acc = 0.0;
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    double r2 = 0.0;
    for (int d = 0; d < N; ++d) {
      const double off = ((rem % kSub) + 0.5) / kSub - 0.5;
      rem /= kSub;
      r2 += off * off;
    }
    acc += W(std::sqrt(r2) * g.dx());
  }
  kernel_[origin] = acc / total;

  std::vector<cplx> tmp(kernel_.begin(), kernel_.end());
  kernel_hat_.resize(g.size());
  g.forward(tmp, kernel_hat_);
  for (auto& z : kernel_hat_) z *= g.cell_volume();
}

std::vector<std::vector<double>> NonlocalOperator::convolutions(const Field& phi) const {
  const int m = spec_.components();
  check_components(phi, m, "nonlocal");
  const Grid& g = *grid_;
  const double half_mu = 0.5 * spec_.mu;
  std::vector<cplx> f(g.size()), fhat(g.size());
  std::vector<std::vector<double>> out(m, std::vector<double>(g.size(), 0.0));
  for (int i = 0; i < m; ++i) {
    auto c = phi.component(i);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double n2 = std::norm(c[p]);
      f[p] = half_mu == 1.0 ? n2 : std::pow(n2, half_mu);
    }
    g.forward(f, fhat);
    for (std::size_t p = 0; p < g.size(); ++p) fhat[p] *= kernel_hat_[p];
    g.inverse(fhat, f);
    for (std::size_t p = 0; p < g.size(); ++p) out[i][p] = f[p].real();
  }
  return out;
}

std::vector<std::vector<double>> NonlocalOperator::density(const Field& phi) const {
  const int m = spec_.components();
  const auto U = convolutions(phi);
  const std::size_t np = phi.points();
  const double mu = spec_.mu;
  std::vector<std::vector<double>> out(m, std::vector<double>(np, 0.0));
  for (int j = 0; j < m; ++j) {
    auto& o = out[j];
    for (int i = 0; i < m; ++i) {
      const double w = spec_.w[i][j];
      if (w == 0.0) continue;
      for (std::size_t p = 0; p < np; ++p) o[p] += w * U[i][p];
    }
    auto c = phi.component(j);
    for (std::size_t p = 0; p < np; ++p) {
      const double n2 = std::norm(c[p]);
      o[p] = n2 == 0.0 ? 0.0 : o[p] * mu * (mu == 2.0 ? 1.0 : std::pow(n2, 0.5 * mu - 1.0));
    }
  }
  return out;
}

Field NonlocalOperator::eval(const Field& phi) const {
  const auto rho = density(phi);
  Field out(phi.grid(), phi.components());
  for (int j = 0; j < phi.components(); ++j) {
    auto in = phi.component(j);
    auto o = out.component(j);
    for (std::size_t p = 0; p < in.size(); ++p) o[p] = rho[j][p] * in[p];
  }
  return out;
}

double NonlocalOperator::energy(const Field& phi) const {
  const int m = spec_.components();
  const auto U = convolutions(phi);
  const double half_mu = 0.5 * spec_.mu;
  double s = 0.0;
  for (int j = 0; j < m; ++j) {
    auto c = phi.component(j);
    for (int i = 0; i < m; ++i) {
      const double w = spec_.w[i][j];
      if (w == 0.0) continue;
      double acc = 0.0;
      for (std::size_t p = 0; p < c.size(); ++p) acc += U[i][p] * std::pow(std::norm(c[p]), half_mu);
      s += w * acc;
    }
  }
  return 0.5 * s * grid_->cell_volume();
}

// ---------------------------------------------------------------- system

System::System(PotentialSet pot, LocalSpec local, std::optional<NonlocalSpec> nonlocal)
    : pot_(std::move(pot)), local_(std::move(local)) {
  validate(local_, pot_.dim());
  if (nonlocal && nonlocal->active()) {
    if (nonlocal->components() != local_.components()) {
      throw ValidationError("nonlocal.w", "nonlocal weight matrix must be m x m");
    }
    nonlocal_ = std::make_shared<NonlocalOperator>(pot_.grid, *nonlocal);
  }
}

std::vector<std::vector<double>> System::phase_density(const Field& phi) const {
  auto theta = local_density(phi, local_);
  if (nonlocal_) {
    const auto nl = nonlocal_->density(phi);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      for (std::size_t p = 0; p < theta[j].size(); ++p) theta[j][p] += nl[j][p];
    }
  }
  for (auto& t : theta) {
    for (std::size_t p = 0; p < t.size(); ++p) t[p] -= pot_.V[p];
  }
  return theta;
}

Field System::g_tilde(const Field& phi) const {
  const auto theta = phase_density(phi);
  Field out(phi.grid(), phi.components());
  for (int j = 0; j < phi.components(); ++j) {
    auto in = phi.component(j);
    auto o = out.component(j);
    for (std::size_t p = 0; p < in.size(); ++p) o[p] = theta[j][p] * in[p];
  }
  return out;
}

Field System::g_tilde_regularized(const Field& phi, int n, const YosidaOptions& opts) const {
  return yosida_apply(g_tilde(yosida_apply(phi, n, pot_, opts)), n, pot_, opts);
}

Field System::energy_gradient(const Field& phi) const {
  Field out = apply_LA(phi, pot_);
  out -= g_tilde(phi);
  return out;
}

double System::potential_energy(const Field& phi) const {
  double s = 0.0;
  for (int j = 0; j < phi.components(); ++j) {
    auto c = phi.component(j);
    for (std::size_t p = 0; p < c.size(); ++p) s += pot_.V[p] * std::norm(c[p]);
  }
  return 0.5 * s * phi.grid()->cell_volume();
}

double System::nonlocal_energy(const Field& phi) const {
  return nonlocal_ ? nonlocal_->energy(phi) : 0.0;
}

Diagnostics System::diagnostics(const Field& phi, double t) const {
  Diagnostics d;
  d.t = t;
  d.charge = charges(phi);
  d.E_kin = kinetic_energy(phi, pot_);
  d.E_V = potential_energy(phi);
  d.E_loc = local_energy(phi);
  d.E_nonloc = nonlocal_energy(phi);
  d.F_A = d.E_kin + d.E_V - d.E_loc - d.E_nonloc;
  double mass = 0.0;
  for (double c : d.charge) mass += c;
  d.H1A_norm = std::sqrt(2.0 * d.E_kin + mass);
  return d;
}

double System::regularized_energy(const Field& phi, int n, const YosidaOptions& opts) const {
  const Field Jphi = yosida_apply(phi, n, pot_, opts);
  return kinetic_energy(phi, pot_) + potential_energy(Jphi) - local_energy(Jphi) -
         nonlocal_energy(Jphi);
}

// ---------------------------------------------------------------- exponents

double sobolev_exponent(int dim) { return dim <= 2 ? kInf : 2.0 * dim / (dim - 2.0); }

ExponentTable exponent_table(int dim, double p, double alpha, double mu, double q,
                             bool nonlocal) {
  const double crit = sobolev_exponent(dim);
  {
    std::ostringstream os;
    os << "(V) requires p >= 1 and p >= N/2; got p = " << p;
    require(p >= 1.0 && p >= 0.5 * dim, "(V) p", os.str());
  }
  require(alpha >= 0.0 && (dim <= 2 || alpha < 4.0 / (dim - 2)), "(g) alpha",
          "(g) requires 0 <= alpha < 4/(N-2)");

  ExponentTable t;
  t.rho[0] = std::isinf(p) ? 2.0 : 2.0 * p / (p - 1.0);
  t.r[0] = t.rho[0];
  t.r[1] = t.rho[1] = alpha + 2.0;
  const int classes = nonlocal ? 3 : 2;
  if (nonlocal) {
    require(q > std::max(1.0, 0.25 * dim), "(W) q", "(W) requires q > max(1, N/4)");
    const double mu_hi = (6.0 * q - 1.0) / (2.0 * q) - (dim - 2.0) / dim;
    std::ostringstream os;
    os << "(restrh-localwp) mu out of range: need 2 <= mu <= " << mu_hi << ", got " << mu;
    require(mu >= 2.0 && mu <= mu_hi + 1e-12, "(restrh-localwp) mu", os.str());
    t.rho[2] = 4.0 * q / (2.0 * q - 1.0);
    // Smallest r_3 compatible with the Hoelder split of |Phi|^{mu-2} into L^{2*}.
    const double lower = std::isinf(crit)
                             ? 4.0 * q / (2.0 * q - 1.0)
                             : 4.0 * q * crit / (crit * (2.0 * q - 1.0) - 4.0 * q * (mu - 2.0));
    t.r[2] = std::max(2.0, lower);
  }

  t.beta_min = kInf;
  t.beta_max = -kInf;
  for (int k = 0; k < classes; ++k) {
    const bool finite_ok = dim == 1 || std::isfinite(t.r[k]);
    std::ostringstream os;
    os << "exponent class " << k + 1 << ": r = " << t.r[k] << ", rho = " << t.rho[k]
       << " must lie in [2, " << crit << ")";
    require(t.r[k] >= 2.0 && t.rho[k] >= 2.0 && finite_ok &&
                (std::isinf(crit) || (t.r[k] < crit && t.rho[k] < crit)),
            "exponent range", os.str());
    t.alpha[k] = 1.0 - dim * (0.5 - 1.0 / t.r[k]);
    t.beta[k] = 1.0 - dim * (0.5 - 1.0 / t.rho[k]);
    require(t.alpha[k] > 0.0 && t.alpha[k] <= 1.0 && t.beta[k] > 0.0 && t.beta[k] <= 1.0,
            "exponent range", "alpha_k and beta_k must lie in (0, 1]");
    t.beta_min = std::min(t.beta_min, t.beta[k]);
    t.beta_max = std::max(t.beta_max, t.beta[k]);
  }
  return t;
}

}  // namespace mnls
