#include "mnls/evolve.hpp"

#include <cmath>
#include <complex>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

using testing::HasSubstr;

namespace mnls {
namespace {

double l2_distance(const Field& a, const Field& b) {
  double s = 0.0;
  for (double c : charges(a - b)) s += c;
  return std::sqrt(s);
}

LocalSpec cubic(int m, double a = 1.0, int sign = +1) {
  LocalSpec s;
  s.a.assign(m, a);
  s.l.assign(m, 2.0);
  s.beta.assign(m, std::vector<double>(m, 0.0));
  s.sign = sign;
  return s;
}

Field gaussian(const GridPtr& g, double amp, double width, int m = 1) {
  Field u(g, m);
  for (int j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      double r2 = 0.0;
      for (int d = 0; d < g->dim(); ++d) r2 += std::pow(g->x(d)[i], 2);
      u.component(j)[i] = amp * std::exp(-r2 / (2.0 * width * width));
    }
  }
  return u;
}

class EvolveTest : public testing::Test {
 protected:
  GridPtr g_ = make_grid({1, 128, 16.0});
  System cubic_ = System(make_potentials(g_, {}, {}), cubic(1));
  Field datum_ = gaussian(g_, 1.0, 1.5);
};

TEST_F(EvolveTest, StrangIsTimeReversible) {
  const Field fwd = strang_step(datum_, 0.01, cubic_);
  const Field back = strang_step(fwd, -0.01, cubic_);
  EXPECT_LT(l2_distance(back, datum_), 1e-10);
}

TEST_F(EvolveTest, StrangIsExactForConstantPotential) {
  // With V = v the flow is T(t) times the phase exp(-i v t).
  const double v = 0.7;
  const System lin(make_potentials(g_, potentials::constant_vector(*g_, {0.3}),
                                   potentials::constant_scalar(*g_, v)),
                   LocalSpec::none(1));
  Field u = datum_;
  for (int s = 0; s < 10; ++s) u = strang_step(u, 0.05, lin);
  Field expected = propagate_free(datum_, 0.5, lin.potentials());
  for (auto& z : expected.data()) z *= std::polar(1.0, -v * 0.5);
  EXPECT_LT(l2_distance(u, expected), 1e-9);
}

TEST_F(EvolveTest, StrangIsSecondOrder) {
  auto run = [&](int steps) {
    Field u = datum_;
    for (int s = 0; s < steps; ++s) u = strang_step(u, 0.2 / steps, cubic_);
    return u;
  };
  const Field ref = run(640);
  const double e1 = l2_distance(run(20), ref);
  const double e2 = l2_distance(run(40), ref);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
}

TEST_F(EvolveTest, PicardWithoutNonlinearityIsTheFreeFlow) {
  const System lin(make_potentials(g_, potentials::constant_vector(*g_, {0.2}), {}),
                   LocalSpec::none(1));
  const auto res = picard_yosida_slab(datum_, 0.01, 10, lin, {});
  ASSERT_EQ(res.nodes.size(), 11u);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_LT(l2_distance(res.nodes[10], propagate_free(datum_, 0.1, lin.potentials())), 1e-9);
}

TEST_F(EvolveTest, PicardContractsOnShortSlabs) {
  PicardOptions opts;
  opts.n = 10;
  const auto res = picard_yosida_slab(datum_, 1e-3, 20, cubic_, opts);
  ASSERT_GE(res.increments.size(), 2u);
  for (std::size_t k = 1; k < res.increments.size(); ++k) {
    EXPECT_LT(res.increments[k], res.increments[k - 1]);
  }
  EXPECT_LE(res.increments.back(), opts.tol);
}

TEST_F(EvolveTest, LongSlabIsRejectedThenHalved) {
  const Field big = gaussian(g_, 4.0, 0.5);
  PicardOptions opts;
  opts.n = 1000;
  EXPECT_THROW(picard_yosida_slab(big, 0.01, 40, cubic_, opts), SlabTooLong);

  EvolveConfig cfg;
  cfg.integrator = Integrator::picard;
  cfg.dt = 0.01;
  cfg.t_end = 0.4;
  cfg.picard = opts;
  cfg.picard.slab_steps = 40;
  cfg.blowup_threshold = 1e6;
  const auto rec = evolve(big, cubic_, cfg);
  EXPECT_EQ(rec.status, RunStatus::completed) << rec.message;
  EXPECT_GT(rec.slab_halvings, 0);
  EXPECT_NEAR(rec.times.back(), 0.4, 1e-12);
}

TEST(BlowupTest, NeedsThresholdAndRisingTrend) {
  EXPECT_FALSE(blowup_detected({20.0, 30.0}, 10.0));
  EXPECT_TRUE(blowup_detected({5.0, 8.0, 11.0}, 10.0));
  EXPECT_FALSE(blowup_detected({5.0, 12.0, 11.0}, 10.0));
  EXPECT_FALSE(blowup_detected({7.0, 8.0, 9.0}, 10.0));
  EXPECT_FALSE(blowup_detected({12.0, 11.0, 13.0}, 10.0));
}

TEST(GateTest, CubicInOneDimensionIsGlobal) {
  const auto rep = global_existence_gate(1, cubic(1), nullptr, 1.0);
  EXPECT_TRUE(rep.global);
  EXPECT_DOUBLE_EQ(rep.l_bound, 4.0);
  EXPECT_THAT(rep.verdict, HasSubstr("Theorem (solGlobal)"));
}

TEST(GateTest, ViolationsAreNamed) {
  const NonlocalSpec nl{{{1.0}}, 1.0, 0.0, 3.0};
  const auto rep = global_existence_gate(2, cubic(1), &nl, 0.0);
  EXPECT_FALSE(rep.global);
  EXPECT_DOUBLE_EQ(rep.mu_bound, 2.0 - 0.5 + 1.0);
  EXPECT_THAT(rep.verdict, HasSubstr("Theorem (solGlobal)"));
  EXPECT_THAT(rep.verdict, HasSubstr("l_0 < 4/N"));
  EXPECT_THAT(rep.verdict, HasSubstr("mu <"));
  EXPECT_THAT(rep.verdict, HasSubstr("inf V > 0"));
}

TEST_F(EvolveTest, RejectsBadConfigs) {
  EvolveConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(evolve(datum_, cubic_, cfg), ValidationError);
  cfg.dt = -1e-3;
  EXPECT_THROW(evolve(datum_, cubic_, cfg), ValidationError);
  cfg.dt = 1e-3;
  cfg.diagnostics_stride = 0;
  EXPECT_THROW(evolve(datum_, cubic_, cfg), ValidationError);
  cfg.diagnostics_stride = 1;
  EXPECT_THROW(evolve(gaussian(g_, 1.0, 1.0, 2), cubic_, cfg), ValidationError);
}

TEST_F(EvolveTest, SnapshotAndDiagnosticStrides) {
  EvolveConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 0.1;
  cfg.snapshot_stride = 5;
  cfg.diagnostics_stride = 3;
  int seen = 0;
  EvolveCallbacks cb;
  cb.on_snapshot = [&](double, const Field&) { ++seen; };
  cb.keep_snapshots = false;
  const auto rec = evolve(datum_, cubic_, cfg, cb);
  EXPECT_EQ(seen, 3);
  EXPECT_TRUE(rec.snapshots.empty());
  // Steps 0, 3, 6, 9 and the final step 10.
  ASSERT_EQ(rec.times.size(), 5u);
  EXPECT_NEAR(rec.times.back(), 0.1, 1e-12);

  const auto kept = evolve(datum_, cubic_, cfg);
  ASSERT_EQ(kept.snapshots.size(), 3u);
  EXPECT_NEAR(kept.snapshot_times[2], 0.1, 1e-12);
  EXPECT_LT(l2_distance(kept.snapshots[2], kept.final_field), 1e-15);
}

TEST_F(EvolveTest, HolderRatioOfLinearPath) {
  // Phi(t) = t v gives |t - s| |v| / |t - s|^{1/2}, largest at the widest pair.
  const double nv = std::sqrt(charges(datum_)[0]);
  std::vector<double> t{0.0, 0.25, 1.0, 4.0};
  std::vector<Field> snaps;
  for (double s : t) snaps.push_back(s * datum_);
  EXPECT_NEAR(holder_worst_ratio(t, snaps), 2.0 * nv, 1e-12);
  EXPECT_THROW(holder_worst_ratio({0.0}, {datum_}), ValidationError);
}

TEST_F(EvolveTest, EnergyBoundHoldsAlongSubcriticalRun) {
  const System sys(make_potentials(g_, {}, potentials::harmonic_scalar(*g_, 0.3, 1.0)), cubic(1));
  EvolveConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 0.5;
  cfg.snapshot_stride = 10;
  const auto rec = evolve(datum_, sys, cfg);
  const auto rep = energy_bound_audit(sys, rec.snapshot_times, rec.snapshots);
  EXPECT_TRUE(rep.pass) << rep.message;
  EXPECT_NEAR(rep.prefactor, 0.5, 1e-12);
  ASSERT_EQ(rep.samples.size(), rec.snapshots.size());
  for (const auto& s : rep.samples) EXPECT_LE(s.lhs, s.rhs);

  const System quintic(make_potentials(g_, {}, {}),
                       LocalSpec{{1.0}, {{0.0}}, {4.0}, +1});
  const auto bad = energy_bound_audit(quintic, rec.snapshot_times, rec.snapshots);
  EXPECT_FALSE(bad.pass);
  EXPECT_THAT(bad.message, HasSubstr("4/N"));
}

}  // namespace
}  // namespace mnls
