#include "mnls/nonlinear.hpp"

#include <cmath>
#include <numbers>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "mnls/verify.hpp"

using testing::HasSubstr;

namespace mnls {
namespace {

LocalSpec coupled_cubic(double a0, double a1, double beta) {
  LocalSpec s;
  s.a = {a0, a1};
  s.l = {2.0, 2.0};
  s.beta = {{0.0, beta}, {beta, 0.0}};
  return s;
}

Field constant_field(const GridPtr& g, std::vector<cplx> values) {
  Field f(g, static_cast<int>(values.size()));
  for (int j = 0; j < f.components(); ++j) {
    std::fill(f.component(j).begin(), f.component(j).end(), values[j]);
  }
  return f;
}

// Minimum-image distance between grid points p and q.
double periodic_distance(const Grid& g, std::size_t p, std::size_t q) {
  double r2 = 0.0;
  const double box = 2.0 * g.half_width();
  for (int d = 0; d < g.dim(); ++d) {
    double dx = std::abs(g.x(d)[p] - g.x(d)[q]);
    dx = std::min(dx, box - dx);
    r2 += dx * dx;
  }
  return std::sqrt(r2);
}

double origin_cell_average(const Grid& g, double gamma, double r0) {
  constexpr int kSub = 16;
  const int total = static_cast<int>(std::pow(kSub, g.dim()));
  double acc = 0.0;
  for (int idx = 0; idx < total; ++idx) {
    double r2 = 0.0;
    int rem = idx;
    for (int d = 0; d < g.dim(); ++d) {
      const double off = ((rem % kSub) + 0.5) / kSub - 0.5;
      rem /= kSub;
      r2 += off * off * g.dx() * g.dx();
    }
    acc += std::pow(std::max(std::sqrt(r2), r0), -gamma);
  }
  return acc / total;
}

TEST(LocalTest, DensityAndEnergyOfConstants) {
  const auto g = make_grid({1, 16, 2.0});
  const LocalSpec s = coupled_cubic(1.0, 2.0, 0.5);
  validate(s, 1);
  const Field f = constant_field(g, {cplx(1.0, 1.0), 3.0});
  const auto rho = local_density(f, s);
  // a_j |Phi_j|^2 + beta |Phi_i|^2
  EXPECT_DOUBLE_EQ(rho[0][3], 1.0 * 2.0 + 0.5 * 9.0);
  EXPECT_DOUBLE_EQ(rho[1][3], 2.0 * 9.0 + 0.5 * 2.0);
  const Field gf = eval_local(f, s);
  EXPECT_EQ(gf.component(1)[7], rho[1][7] * 3.0);
  // G = a_j |Phi_j|^4 / 4 + (1/4) sum_{i != j} beta |Phi_i|^2 |Phi_j|^2, on volume 4.
  const double G = 1.0 * 4.0 / 4.0 + 2.0 * 81.0 / 4.0 + 0.25 * 2.0 * 0.5 * 2.0 * 9.0;
  EXPECT_NEAR(eval_local_energy(f, s), 4.0 * G, 1e-12);

  LocalSpec defocusing = s;
  defocusing.sign = -1;
  EXPECT_NEAR(eval_local_energy(f, defocusing), -4.0 * G, 1e-12);
}

TEST(LocalTest, FractionalExponent) {
  const auto g = make_grid({1, 8, 1.0});
  LocalSpec s;
  s.a = {1.5};
  s.l = {0.5};
  s.beta = {{0.0}};
  const Field f = constant_field(g, {cplx(0.0, 4.0)});
  EXPECT_DOUBLE_EQ(local_density(f, s)[0][0], 1.5 * 2.0);
  EXPECT_NEAR(eval_local_energy(f, s), 2.0 * 1.5 * std::pow(4.0, 2.5) / 2.5, 1e-12);
}

TEST(LocalTest, FocusingConstant) {
  EXPECT_DOUBLE_EQ(coupled_cubic(1.0, 2.0, 0.5).K(), 2.0 / 4.0 + 0.25 * 0.5);
  LocalSpec sub = coupled_cubic(1.0, 1.0, 0.5);
  sub.l = {1.0, 2.0};
  EXPECT_EQ(sub.K(), kInf);
  sub.beta = {{0.0, 0.0}, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(sub.K(), 1.0 / 3.0);
  EXPECT_FALSE(LocalSpec::none(3).active());
  EXPECT_DOUBLE_EQ(sub.alpha(), 2.0);
}

TEST(LocalTest, Validation) {
  LocalSpec s = coupled_cubic(1.0, 1.0, 0.5);
  s.beta[0][1] = 0.7;
  EXPECT_THROW(validate(s, 2), ValidationError);
  s = coupled_cubic(-1.0, 1.0, 0.5);
  EXPECT_THROW(validate(s, 2), ValidationError);
  s = coupled_cubic(1.0, 1.0, 0.5);
  s.l = {4.0, 2.0};
  EXPECT_THROW(validate(s, 3), ValidationError);
  EXPECT_NO_THROW(validate(s, 2));
  const auto g = make_grid({1, 8, 1.0});
  EXPECT_THROW(local_density(constant_field(g, {1.0}), s), ValidationError);
}

TEST(NonlocalTest, Validation) {
  EXPECT_NO_THROW(validate(NonlocalSpec{{{1.0}}, 1.0, 0.0, 2.0}, 2));
  try {
    validate(NonlocalSpec{{{1.0}}, 1.0, 0.0, 1.5}, 2);
    FAIL() << "mu < 2 accepted";
  } catch (const ValidationError& e) {
    EXPECT_THAT(e.what(), HasSubstr("(restrh-localwp)"));
  }
  EXPECT_THROW(validate(NonlocalSpec{{{1.0}}, 2.0, 0.0, 2.0}, 2), ValidationError);
  EXPECT_THROW(validate(NonlocalSpec{{{1.0, 2.0}, {1.0, 1.0}}, 1.0, 0.0, 2.0}, 2), ValidationError);
  EXPECT_THROW(validate(NonlocalSpec{{{-1.0}}, 1.0, 0.0, 2.0}, 2), ValidationError);
  // (6q - 1)/(2q) - (N - 2)/N with N = 3, q = 2.
  EXPECT_DOUBLE_EQ((NonlocalSpec{{{1.0}}, 1.5, 0.0, 2.0}.mu_max(3)), 11.0 / 4.0 - 1.0 / 3.0);
}

class NonlocalConvolutionTest : public testing::TestWithParam<int> {};

TEST_P(NonlocalConvolutionTest, MatchesDirectSum) {
  const int N = GetParam();
  const auto g = make_grid({N, N == 1 ? 64 : 16, 3.0});
  const NonlocalSpec spec{{{1.0, 0.5}, {0.5, 2.0}}, 0.5 * N, N == 1 ? 0.0 : 0.4, 2.5};
  const NonlocalOperator op(g, spec);
  const Field phi = random_field(g, 2, 17, {1.0, 1.0, false});
  const auto U = op.convolutions(phi);
  const double self = origin_cell_average(*g, spec.gamma, spec.r0);
  for (int i = 0; i < 2; ++i) {
    auto c = phi.component(i);
    double worst = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < g->size(); ++p) {
      double s = 0.0;
      for (std::size_t q = 0; q < g->size(); ++q) {
        const double r = periodic_distance(*g, p, q);
        const double w = r == 0.0 ? self : std::pow(std::max(r, spec.r0), -spec.gamma);
        s += w * std::pow(std::abs(c[q]), spec.mu);
      }
      s *= g->cell_volume();
      worst = std::max(worst, std::abs(s - U[i][p]));
      scale = std::max(scale, std::abs(s));
    }
    EXPECT_LT(worst, 1e-12 * scale) << "component " << i;
  }

  // Energy is 1/2 sum_ij w_ij <U_i, |Phi_j|^mu>.
  double E = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < g->size(); ++p)
        E += 0.5 * spec.w[i][j] * U[i][p] * std::pow(std::abs(phi.component(j)[p]), spec.mu);
  EXPECT_NEAR(op.energy(phi), E * g->cell_volume(), 1e-12 * E * g->cell_volume());
}

INSTANTIATE_TEST_SUITE_P(Dimensions, NonlocalConvolutionTest, testing::Values(1, 2));

TEST(NonlocalTest, GaussianWithUnitCore) {
  const auto g = make_grid({1, 128, 8.0});
  const NonlocalOperator op(g, {{{1.0}}, 0.5, 1.0, 2.0});
  Field phi(g, 1);
  for (std::size_t p = 0; p < g->size(); ++p) phi.component(0)[p] = std::exp(-0.5 * std::pow(g->x(0)[p], 2));
  const auto U = op.convolutions(phi);
  for (std::size_t p = 0; p < g->size(); p += 7) {
    double s = 0.0;
    for (std::size_t q = 0; q < g->size(); ++q) {
      s += std::pow(std::max(periodic_distance(*g, p, q), 1.0), -0.5) * std::norm(phi.component(0)[q]);
    }
    EXPECT_NEAR(U[0][p], s * g->dx(), 1e-9);
  }
}

TEST(NonlocalTest, HomogeneityAndZeros) {
  const auto g = make_grid({2, 32, 4.0});
  const NonlocalOperator op(g, {{{1.0}}, 1.0, 0.0, 2.5});
  Field phi = random_field(g, 1, 5, {1.0, 1.0, false});
  const double c = 1.7;
  EXPECT_NEAR(op.energy(c * phi), std::pow(c, 5.0) * op.energy(phi), 1e-12 * op.energy(c * phi));
  phi.component(0)[10] = 0.0;
  const auto rho = op.density(phi);
  EXPECT_EQ(rho[0][10], 0.0);
  EXPECT_DOUBLE_EQ(op.kernel_samples()[0], origin_cell_average(*g, 1.0, 0.0));
  EXPECT_DOUBLE_EQ(op.kernel_samples()[1], 1.0 / g->dx());
}

TEST(SystemTest, GradientMatchesFiniteDifferences) {
  const auto g = make_grid({1, 64, 6.0});
  const auto A = random_vector_potential(*g, 3, 0.8, 1.5);
  LocalSpec local = coupled_cubic(1.0, 0.5, 0.3);
  local.l = {2.0, 3.0};
  const System sys(make_potentials(g, A, potentials::harmonic_scalar(*g, 0.4)), local,
                   NonlocalSpec{{{1.0, 0.2}, {0.2, 0.5}}, 0.5, 0.0, 2.2});
  for (int s = 0; s < 5; ++s) {
    const Field phi = random_field(g, 2, stream_key("fd", 1, s), {1.0, 0.0, false});
    const Field eta = random_field(g, 2, stream_key("fd.eta", 1, s), {1.0, 0.0, false});
    const double h = 1e-5;
    const double fd =
        (sys.diagnostics(phi + h * eta).F_A - sys.diagnostics(phi - (h * eta)).F_A) / (2 * h);
    const double an = real_inner(sys.energy_gradient(phi), eta);
    EXPECT_NEAR(fd, an, 1e-6 * std::abs(an)) << "sample " << s;
  }
}

TEST(SystemTest, PhaseDensityReproducesGTilde) {
  const auto g = make_grid({2, 16, 4.0});
  const System sys(make_potentials(g, {}, potentials::constant_scalar(*g, 0.7)),
                   coupled_cubic(1.0, 1.0, 0.4), NonlocalSpec{{{1.0, 0.0}, {0.0, 1.0}}, 1.0, 0.0, 2.0});
  const Field phi = random_field(g, 2, 8, {1.0, 0.0, false});
  const auto theta = sys.phase_density(phi);
  const Field gt = sys.g_tilde(phi);
  const auto loc = local_density(phi, sys.local());
  const auto nl = sys.nonlocal()->density(phi);
  for (int j = 0; j < 2; ++j) {
    for (std::size_t p = 0; p < g->size(); ++p) {
      EXPECT_NEAR(theta[j][p], -0.7 + loc[j][p] + nl[j][p], 1e-12 * (1.0 + std::abs(theta[j][p])));
      EXPECT_LT(std::abs(gt.component(j)[p] - theta[j][p] * phi.component(j)[p]), 1e-12);
    }
  }
  const auto d = sys.diagnostics(phi, 0.25);
  EXPECT_DOUBLE_EQ(d.t, 0.25);
  EXPECT_NEAR(d.F_A, d.E_kin + d.E_V - d.E_loc - d.E_nonloc, 1e-12 * std::abs(d.F_A));
  EXPECT_NEAR(d.E_V, 0.5 * 0.7 * (d.charge[0] + d.charge[1]), 1e-12);
  EXPECT_NEAR(d.H1A_norm * d.H1A_norm, 2.0 * d.E_kin + d.charge[0] + d.charge[1], 1e-10);
}

TEST(SystemTest, RegularizedEnergyConvergesWithIndex) {
  const auto g = make_grid({1, 64, 6.0});
  const System sys(make_potentials(g, {}, {}), coupled_cubic(1.0, 1.0, 0.0));
  const Field phi = random_field(g, 2, 4, {1.0, 0.0, false});
  const double F = sys.diagnostics(phi).F_A;
  const double e10 = std::abs(sys.regularized_energy(phi, 10) - F);
  const double e1000 = std::abs(sys.regularized_energy(phi, 1000) - F);
  EXPECT_LT(e1000, e10 / 50.0);
}

TEST(ExponentTest, Table) {
  EXPECT_EQ(sobolev_exponent(2), kInf);
  EXPECT_DOUBLE_EQ(sobolev_exponent(3), 6.0);

  const auto t = exponent_table(3, kInf, 1.0, 2.0, 2.0);
  EXPECT_DOUBLE_EQ(t.r[0], 2.0);
  EXPECT_DOUBLE_EQ(t.rho[0], 2.0);
  EXPECT_DOUBLE_EQ(t.r[1], 3.0);
  EXPECT_DOUBLE_EQ(t.rho[2], 8.0 / 3.0);
  // mu = 2 leaves the Hoelder split trivial: r_3 = 4q/(2q-1).
  EXPECT_DOUBLE_EQ(t.r[2], 8.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.alpha[1], 1.0 - 3.0 * (0.5 - 1.0 / 3.0));
  EXPECT_DOUBLE_EQ(t.beta_max, 1.0);

  const auto u = exponent_table(3, 3.0, 1.0, 2.4, 2.0);
  EXPECT_DOUBLE_EQ(u.rho[0], 3.0);
  EXPECT_NEAR(u.r[2], 8.0 * 6.0 / (6.0 * 3.0 - 8.0 * 0.4), 1e-14);

  EXPECT_THROW(exponent_table(3, 1.0, 1.0, 2.0, 2.0), ValidationError);
  EXPECT_THROW(exponent_table(3, kInf, 5.0, 2.0, 2.0), ValidationError);
  EXPECT_THROW(exponent_table(3, kInf, 1.0, 3.0, 2.0), ValidationError);
  EXPECT_NO_THROW(exponent_table(1, kInf, 6.0, 2.0, 2.0, false));
}

TEST(ExponentTest, HlsKineticPower) {
  // 2 N mu (1/2 - (2q-1)/(2 q mu)) at N = 3, q = 2, mu = 2.
  const double N = 3, q = 2, mu = 2;
  EXPECT_DOUBLE_EQ(2 * N * mu * (0.5 - (2 * q - 1) / (2 * q * mu)), 1.5);
  HlsOptions o;
  o.dim = 3;
  o.n_axis = 8;
  o.L = 4.0;
  o.spec = {{{1.0}}, 1.5, 0.0, 2.0};
  o.samples = 3;
  EXPECT_DOUBLE_EQ(check_hls_nonlocal(o).details.at("kinetic_exponent"), 1.5);
}

}  // namespace
}  // namespace mnls
