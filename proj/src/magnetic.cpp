#include "mnls/magnetic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mnls {

namespace {

constexpr double kConstantTol = 1e-14;

std::vector<cplx> to_complex(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

// Fourier symbol of L_A when A is constant: |k - a|^2.
void constant_symbol(const PotentialSet& pot, std::vector<double>& sym) {
  const Grid& g = *pot.grid;
  sym.assign(g.size(), 0.0);
  for (int d = 0; d < g.dim(); ++d) {
    const auto kd = g.k(d);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = kd[i] - pot.a_const[d];
      sym[i] += s * s;
    }
  }
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

int PotentialSet::pair_index(int i, int j, int dim) {
  // pairs ordered (0,1), (0,2), (1,2)
  if (i > j) std::swap(i, j);
  if (dim == 2) return 0;
  return i == 0 ? j - 1 : 2;
}

PotentialSet make_potentials(GridPtr grid, std::vector<std::vector<double>> A,
                             std::vector<double> V) {
  PotentialSet pot;
  pot.grid = grid;
  const Grid& g = *grid;
  const int N = g.dim();
  if (A.empty()) A = potentials::zero_vector(g);
  if (static_cast<int>(A.size()) != N) {
    throw ValidationError("potentials.A", "vector potential needs one array per axis");
  }
  for (const auto& a : A) {
    if (a.size() != g.size()) throw ValidationError("potentials.A", "A sample count mismatch");
    for (double v : a) {
      if (!std::isfinite(v)) throw ValidationError("potentials.A", "A must be finite");
    }
  }
  if (V.empty()) V.assign(g.size(), 0.0);
  if (V.size() != g.size()) throw ValidationError("potentials.V", "V sample count mismatch");
  for (double v : V) {
    if (!std::isfinite(v)) throw ValidationError("potentials.V", "V must be finite");
  }

  pot.A = std::move(A);
  pot.V = std::move(V);
  pot.infV = *std::min_element(pot.V.begin(), pot.V.end());

  pot.zero_A = true;
  pot.constant_A = true;
  double a2 = 0.0;
  for (int d = 0; d < N; ++d) {
    const auto& a = pot.A[d];
    const auto [mn, mx] = std::minmax_element(a.begin(), a.end());
    if (*mx - *mn > kConstantTol * std::max(1.0, std::abs(*mx))) pot.constant_A = false;
    if (std::abs(*mn) > 0.0 || std::abs(*mx) > 0.0) pot.zero_A = false;
    pot.a_const[d] = a[0];
    for (double v : a) a2 += v * v;
  }
  pot.mean_A2 = a2 / static_cast<double>(g.size());

  pot.divA.assign(g.size(), 0.0);
  const int npairs = N * (N - 1) / 2;
  pot.B.assign(npairs, std::vector<double>(g.size(), 0.0));
  if (!pot.constant_A) {
    std::vector<std::vector<std::vector<cplx>>> grads(N);
    for (int d = 0; d < N; ++d) grads[d] = spectral_gradient(g, to_complex(pot.A[d]));
    for (int d = 0; d < N; ++d) {
      for (std::size_t i = 0; i < g.size(); ++i) pot.divA[i] += grads[d][d][i].real();
    }
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        auto& b = pot.B[PotentialSet::pair_index(i, j, N)];
        for (std::size_t p = 0; p < g.size(); ++p) {
          b[p] = grads[j][i][p].real() - grads[i][j][p].real();
        }
      }
    }
  }
  return pot;
}

namespace potentials {

std::vector<std::vector<double>> zero_vector(const Grid& grid) {
  return std::vector<std::vector<double>>(grid.dim(), std::vector<double>(grid.size(), 0.0));
}

std::vector<std::vector<double>> constant_vector(const Grid& grid, const std::vector<double>& a) {
  if (static_cast<int>(a.size()) != grid.dim()) {
    throw ValidationError("potentials.A", "constant A needs one entry per axis");
  }
  std::vector<std::vector<double>> out;
  for (double v : a) out.emplace_back(grid.size(), v);
  return out;
}

std::vector<std::vector<double>> harmonic_gauge(const Grid& grid, double B) {
  if (grid.dim() != 2) {
    throw ValidationError("potentials.A", "harmonic_gauge is defined for N = 2 only");
  }
  auto out = zero_vector(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[0][i] = -0.5 * B * grid.x(1)[i];
    out[1][i] = 0.5 * B * grid.x(0)[i];
  }
  return out;
}

std::vector<double> constant_scalar(const Grid& grid, double v) {
  return std::vector<double>(grid.size(), v);
}

std::vector<double> harmonic_scalar(const Grid& grid, double omega, double offset) {
  std::vector<double> V(grid.size(), offset);
  for (int d = 0; d < grid.dim(); ++d) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      V[i] += 0.5 * omega * omega * grid.x(d)[i] * grid.x(d)[i];
    }
  }
  return V;
}

}  // namespace potentials

AssumptionReport assess_assumptions(const PotentialSet& pot, double V_exponent_p) {
  const Grid& g = *pot.grid;
  const int N = g.dim();
  AssumptionReport rep;
  rep.infV = pot.infV;

  if (!pot.constant_A) {
    for (int j = 0; j < N; ++j) {
      const auto first = spectral_gradient(g, to_complex(pot.A[j]));
      for (int i = 0; i < N; ++i) {
        for (const auto& z : first[i]) rep.max_dA = std::max(rep.max_dA, std::abs(z.real()));
        const auto second = spectral_gradient(g, first[i]);
        for (int k = 0; k < N; ++k) {
          for (const auto& z : second[k]) rep.max_d2A = std::max(rep.max_d2A, std::abs(z.real()));
        }
      }
    }
  }
  rep.A_bounded_derivatives = std::isfinite(rep.max_dA) && std::isfinite(rep.max_d2A);

  // |dB| per point, then its maximum over radial shells.
  std::vector<double> dB(g.size(), 0.0);
  for (const auto& b : pot.B) {
    const auto grad = spectral_gradient(g, to_complex(b));
    for (int k = 0; k < N; ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) dB[i] = std::max(dB[i], std::abs(grad[k][i].real()));
    }
  }
  rep.max_dB = dB.empty() ? 0.0 : *std::max_element(dB.begin(), dB.end());
  const double scale = std::max(1.0, rep.max_dB);
  if (rep.max_dB <= 1e-10 * scale || N == 1) {
    rep.B_decay_exponent = -std::numeric_limits<double>::infinity();
    rep.B_decays = true;
  } else {
    const auto r = g.periodic_radius();
    const double rmax = 0.9 * g.half_width();
    const int nshell = std::max(4, static_cast<int>(rmax / g.dx()));
    std::vector<double> shell_max(nshell, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (r[i] < 1.0 || r[i] >= rmax) continue;
      const int s = std::min(nshell - 1, static_cast<int>((r[i] - 1.0) / (rmax - 1.0) * nshell));
      shell_max[s] = std::max(shell_max[s], dB[i]);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int s = 0; s < nshell; ++s) {
      if (shell_max[s] <= 1e-14 * scale) continue;
      const double rc = 1.0 + (s + 0.5) * (rmax - 1.0) / nshell;
      const double lx = 0.5 * std::log(1.0 + rc * rc), ly = std::log(shell_max[s]);
      sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
      ++cnt;
    }
    rep.B_decay_exponent = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx)
                                    : -std::numeric_limits<double>::infinity();
    rep.B_decays = rep.B_decay_exponent <= -1.0;
  }

  // V = V_far + (V - V_far) with V_far the mean over the outer band.
  rep.V_exponent_p = V_exponent_p;
  rep.V_exponent_admissible = V_exponent_p >= 1.0 && V_exponent_p >= 0.5 * N;
  double far = 0.0;
  int nfar = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double dist = std::numeric_limits<double>::infinity();
    for (int d = 0; d < N; ++d) dist = std::min(dist, g.half_width() - std::abs(g.x(d)[i]));
    if (dist <= 2.0 * g.dx()) far += pot.V[i], ++nfar;
    rep.V_sup = std::max(rep.V_sup, std::abs(pot.V[i]));
  }
  far = nfar ? far / nfar : 0.0;
  std::vector<cplx> local(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) local[i] = pot.V[i] - far;
  rep.V_lp_norm = lp_norm(g, local, std::isfinite(V_exponent_p) ? std::max(1.0, V_exponent_p)
                                                                  : V_exponent_p);
  return rep;
}

std::vector<std::vector<cplx>> covariant_derivative(std::span<const cplx> u,
                                                    const PotentialSet& pot) {
  const Grid& g = *pot.grid;
  const std::size_t n = g.size();
  std::vector<cplx> uhat(n), tmp(n);
  g.forward(u, uhat);
  std::vector<std::vector<cplx>> out(g.dim(), std::vector<cplx>(n));
  for (int d = 0; d < g.dim(); ++d) {
    const auto kd = g.k(d);
    // -i * (i k) = k
    for (std::size_t i = 0; i < n; ++i) tmp[i] = kd[i] * uhat[i];
    g.inverse(tmp, out[d]);
    if (!pot.zero_A) {
      const auto& a = pot.A[d];
      for (std::size_t i = 0; i < n; ++i) out[d][i] -= a[i] * u[i];
    }
  }
  return out;
}

void apply_LA(std::span<const cplx> u, std::span<cplx> out, const PotentialSet& pot) {
  const Grid& g = *pot.grid;
  const std::size_t n = g.size();
  std::vector<cplx> uhat(n);
  g.forward(u, uhat);
  if (pot.constant_A) {
    if (pot.zero_A) {
      const auto k2 = g.k2();
      for (std::size_t i = 0; i < n; ++i) uhat[i] *= k2[i];
    } else {
      std::vector<double> sym;
      constant_symbol(pot, sym);
      for (std::size_t i = 0; i < n; ++i) uhat[i] *= sym[i];
    }
    g.inverse(uhat, out);
    return;
  }
  // sum_d (P_d - A_d)(P_d - A_d) u with P_d = -i d_d, exactly Hermitian.
  std::vector<cplx> acc(n, cplx{}), Du(n), Duhat(n), tmp(n);
  std::vector<cplx> correction(n, cplx{});
  for (int d = 0; d < g.dim(); ++d) {
    const auto kd = g.k(d);
    const auto& a = pot.A[d];
    for (std::size_t i = 0; i < n; ++i) tmp[i] = kd[i] * uhat[i];
    g.inverse(tmp, Du);
    for (std::size_t i = 0; i < n; ++i) Du[i] -= a[i] * u[i];
    g.forward(Du, Duhat);
    for (std::size_t i = 0; i < n; ++i) acc[i] += kd[i] * Duhat[i];
    for (std::size_t i = 0; i < n; ++i) correction[i] -= a[i] * Du[i];
  }
  g.inverse(acc, out);
  for (std::size_t i = 0; i < n; ++i) out[i] += correction[i];
}

Field apply_LA(const Field& phi, const PotentialSet& pot) {
  Field out(phi.grid(), phi.components());
  for (int j = 0; j < phi.components(); ++j) apply_LA(phi.component(j), out.component(j), pot);
  return out;
}

Field apply_LA_expanded(const Field& phi, const PotentialSet& pot) {
  const Grid& g = *pot.grid;
  const std::size_t n = g.size();
  const cplx I(0.0, 1.0);
  Field out(phi.grid(), phi.components());
  std::vector<cplx> uhat(n), tmp(n);
  for (int j = 0; j < phi.components(); ++j) {
    auto u = phi.component(j);
    auto o = out.component(j);
    g.forward(u, uhat);
    const auto k2 = g.k2();
    for (std::size_t i = 0; i < n; ++i) tmp[i] = k2[i] * uhat[i];
    g.inverse(tmp, o);
    const auto grad = spectral_gradient(g, u);
    for (std::size_t i = 0; i < n; ++i) {
      cplx adotgrad{};
      double a2 = 0.0;
      for (int d = 0; d < g.dim(); ++d) {
        adotgrad += pot.A[d][i] * grad[d][i];
        a2 += pot.A[d][i] * pot.A[d][i];
      }
      // -(2/i) = 2i, -(1/i) = i
      o[i] += 2.0 * I * adotgrad + a2 * u[i] + I * pot.divA[i] * u[i];
    }
  }
  return out;
}

double kinetic_energy(const Field& phi, const PotentialSet& pot) {
  double s = 0.0;
  for (int j = 0; j < phi.components(); ++j) {
    for (const auto& Dd : covariant_derivative(phi.component(j), pot)) {
      for (const auto& z : Dd) s += std::norm(z);
    }
  }
  return 0.5 * s * phi.grid()->cell_volume();
}

double h1a_norm_squared(const Field& phi, const PotentialSet& pot) {
  double mass = 0.0;
  for (double c : charges(phi)) mass += c;
  return 2.0 * kinetic_energy(phi, pot) + mass;
}

DiamagneticPair diamagnetic_pair(std::span<const cplx> u, const PotentialSet& pot) {
  const Grid& g = *pot.grid;
  std::vector<cplx> modulus(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = std::abs(u[i]);
    modulus[i] = std::sqrt(a * a + kModulusEpsilon * kModulusEpsilon) - kModulusEpsilon;
  }
  DiamagneticPair out;
  for (const auto& d : spectral_gradient(g, modulus)) {
    for (const auto& z : d) out.lhs += std::norm(z);
  }
  for (const auto& d : covariant_derivative(u, pot)) {
    for (const auto& z : d) out.rhs += std::norm(z);
  }
  out.lhs *= g.cell_volume();
  out.rhs *= g.cell_volume();
  return out;
}

Field yosida_apply(const Field& f, int n, const PotentialSet& pot, const YosidaOptions& opts,
                   YosidaStats* stats) {
  if (n < 1) throw ValidationError("yosida.n", "Yosida index n must be >= 1");
  const Grid& g = *pot.grid;
  const std::size_t np = g.size();
  const double inv_n = 1.0 / n;
  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : 10 * g.n_axis();

  // Fourier preconditioner: exact when A is constant.
  std::vector<double> precond(np);
  if (pot.constant_A) {
    std::vector<double> sym;
    constant_symbol(pot, sym);
    for (std::size_t i = 0; i < np; ++i) precond[i] = 1.0 / (1.0 + inv_n * sym[i]);
  } else {
    const auto k2 = g.k2();
    for (std::size_t i = 0; i < np; ++i) precond[i] = 1.0 / (1.0 + inv_n * (k2[i] + pot.mean_A2));
  }
  std::vector<cplx> hat(np), tmp(np);
  auto apply_precond = [&](std::span<const cplx> r, std::span<cplx> z) {
    g.forward(r, hat);
    for (std::size_t i = 0; i < np; ++i) hat[i] *= precond[i];
    g.inverse(hat, z);
  };
  auto apply_op = [&](std::span<const cplx> x, std::span<cplx> y) {
    apply_LA(x, y, pot);
    for (std::size_t i = 0; i < np; ++i) y[i] = x[i] + inv_n * y[i];
  };

  Field out(f.grid(), f.components());
  std::vector<cplx> r(np), z(np), p(np), Ap(np);
  YosidaStats total;
  for (int j = 0; j < f.components(); ++j) {
    auto b = f.component(j);
    auto x = out.component(j);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) continue;
    apply_precond(b, x);
    apply_op(x, Ap);
    for (std::size_t i = 0; i < np; ++i) r[i] = b[i] - Ap[i];
    double res = norm2(r) / bnorm;
    int it = 0;
    if (res > opts.tolerance) {
      apply_precond(r, z);
      p = z;
      cplx rz = dot(r, z);
      while (res > opts.tolerance && it < max_iter) {
        apply_op(p, Ap);
        const cplx alpha = rz / dot(p, Ap);
        for (std::size_t i = 0; i < np; ++i) {
          x[i] += alpha * p[i];
          r[i] -= alpha * Ap[i];
        }
        ++it;
        res = norm2(r) / bnorm;
        if (res <= opts.tolerance) break;
        apply_precond(r, z);
        const cplx rz_new = dot(r, z);
        const cplx beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < np; ++i) p[i] = z[i] + beta * p[i];
      }
    }
    if (res > opts.tolerance) {
      throw SolverError("Yosida resolvent: CG did not converge in " + std::to_string(it) +
                            " iterations",
                        res);
    }
    total.iterations = std::max(total.iterations, it);
    total.residual = std::max(total.residual, res);
  }
  if (stats) *stats = total;
  return out;
}

namespace {

// One Lanczos exponential step exp(-i h L) v. Returns false when the a
// posteriori error estimate exceeds tol * |v|.
bool lanczos_step(std::span<const cplx> v, double h, const PotentialSet& pot,
                  const PropagatorOptions& opts, std::span<cplx> result) {
  const std::size_t np = v.size();
  const int mmax = opts.krylov_dim;
  const double beta0 = norm2(v);
  if (beta0 == 0.0) {
    std::fill(result.begin(), result.end(), cplx{});
    return true;
  }
  std::vector<std::vector<cplx>> Q;
  Q.reserve(mmax + 1);
  Q.emplace_back(v.begin(), v.end());
  for (auto& z : Q[0]) z /= beta0;
  std::vector<double> alpha, beta;
  std::vector<cplx> w(np);
  Eigen::VectorXcd coeffs;
  bool converged = false;

  for (int j = 0; j < mmax; ++j) {
    apply_LA(Q[j], w, pot);
    const double a = dot(Q[j], w).real();
    alpha.push_back(a);
    for (std::size_t i = 0; i < np; ++i) {
      w[i] -= a * Q[j][i];
      if (j > 0) w[i] -= beta[j - 1] * Q[j - 1][i];
    }
    // full reorthogonalization
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k <= j; ++k) {
        const cplx c = dot(Q[k], w);
        for (std::size_t i = 0; i < np; ++i) w[i] -= c * Q[k][i];
      }
    }
    const double b = norm2(w);

    const int m = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) {
      T(k, k) = alpha[k];
      if (k + 1 < m) T(k, k + 1) = T(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const Eigen::MatrixXd& S = es.eigenvectors();
    Eigen::VectorXcd phase(m);
    for (int k = 0; k < m; ++k) phase(k) = std::exp(cplx(0.0, -h * lam(k))) * S(0, k);
    coeffs = S.cast<cplx>() * phase;

    const double scale = std::max(1.0, std::abs(lam(m - 1)));
    if (b <= 1e-13 * scale) {  // invariant subspace: exact
      converged = true;
      break;
    }
    const double err = b * std::abs(coeffs(m - 1));
    if (err <= opts.tolerance) {
      converged = true;
      break;
    }
    if (j + 1 == mmax) break;
    beta.push_back(b);
    Q.emplace_back(w.begin(), w.end());
    for (auto& z : Q.back()) z /= b;
  }
  if (!converged) return false;
  std::fill(result.begin(), result.end(), cplx{});
  for (int k = 0; k < coeffs.size(); ++k) {
    const cplx c = beta0 * coeffs(k);
    for (std::size_t i = 0; i < np; ++i) result[i] += c * Q[k][i];
  }
  const double defect = std::abs(norm2(result) - beta0) / beta0;
  return defect <= opts.tolerance;
}

}  // namespace

Field propagate_free(const Field& phi, double t, const PotentialSet& pot,
                     const PropagatorOptions& opts) {
  if (!std::isfinite(t)) throw ValidationError("propagate.t", "propagation time must be finite");
  const Grid& g = *pot.grid;
  const std::size_t np = g.size();
  Field out(phi.grid(), phi.components());
  if (t == 0.0) {
    out = phi;
    return out;
  }
  if (pot.constant_A) {
    std::vector<double> sym;
    if (pot.zero_A) {
      sym.assign(g.k2().begin(), g.k2().end());
    } else {
      constant_symbol(pot, sym);
    }
    std::vector<cplx> mult(np), hat(np);
    for (std::size_t i = 0; i < np; ++i) mult[i] = std::exp(cplx(0.0, -t * sym[i]));
    for (int j = 0; j < phi.components(); ++j) {
      g.forward(phi.component(j), hat);
      for (std::size_t i = 0; i < np; ++i) hat[i] *= mult[i];
      g.inverse(hat, out.component(j));
    }
    return out;
  }

  std::vector<cplx> cur(np), next(np);
  const double sign = t > 0 ? 1.0 : -1.0;
  const double total = std::abs(t);
  double h_hint = total;
  for (int j = 0; j < phi.components(); ++j) {
    auto src = phi.component(j);
    std::copy(src.begin(), src.end(), cur.begin());
    double done = 0.0;
    double h = h_hint;
    int failures = 0;
    while (done < total) {
      const double step = std::min(h, total - done);
      if (lanczos_step(cur, sign * step, pot, opts, next)) {
        std::swap(cur, next);
        done += step;
        failures = 0;
      } else {
        h = 0.5 * step;
        if (++failures > 60 || h < 1e-14 * total) {
          throw SolverError("Krylov propagator: step size collapsed", h);
        }
      }
    }
    h_hint = h;
    auto dst = out.component(j);
    std::copy(cur.begin(), cur.end(), dst.begin());
  }
  return out;
}

}  // namespace mnls
