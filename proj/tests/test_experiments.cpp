#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "dcls/experiments.hpp"
#include "dcls/io.hpp"

using namespace dcls;

namespace {

ExperimentConfig small(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.params = JacobiParams::legendre();
  c.n = 2;
  c.d = 2;
  c.trials = 20;
  c.seed = 11;
  c.quadrature_order = 20;
  c.linf_points = 21;
  return c;
}

} // namespace

TEST(TestFunctions, SupBounds) {
  for (std::string name : {"exp_sum", "rational", "exp_half", "exp_quarter", "monomial:2,1"})
    for (std::size_t d : {2u, 3u}) {
      auto u = make_test_function(name, d);
      std::vector<double> y(d);
      double sup = 0.0;
      for (double tail : {-1.0, 1.0})
        for (int a = 0; a < 21; ++a)
          for (int b = 0; b < 21; ++b) {
            y[0] = -1 + 0.1 * a;
            y[1] = -1 + 0.1 * b;
            for (std::size_t j = 2; j < d; ++j) y[j] = tail;
            sup = std::max(sup, std::abs(u.f(y)));
          }
      EXPECT_LE(sup, u.tau0 * (1 + 1e-12)) << name;
      EXPECT_NEAR(sup, u.tau0, 1e-12 * u.tau0) << name; // attained at a corner
    }
  EXPECT_NEAR(make_test_function("exp_half", 2).tau0, std::exp(1.0), 1e-15);
  EXPECT_THROW(make_test_function("bessel", 2), DomainError);
  EXPECT_THROW(make_test_function("monomial:1,1,1", 2), DimensionMismatch);
}

TEST(TestFunctions, PolynomialSupBound) {
  auto p = JacobiParams::legendre();
  IndexSet set{MultiIndex{}, MultiIndex{1}, MultiIndex{0, 2}};
  auto u = make_polynomial_function(p, set, {1.0, -2.0, 0.5});
  std::vector<double> y(2);
  for (int a = 0; a <= 40; ++a)
    for (int b = 0; b <= 40; ++b) {
      y = {-1 + 0.05 * a, -1 + 0.05 * b};
      EXPECT_LE(std::abs(u.f(y)), u.tau0 + 1e-12);
    }
}

TEST(RandomDownwardClosed, Properties) {
  Xoshiro256 rng(4);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 1 + t % 15, d = 1 + t % 4;
    auto s = random_downward_closed(n, d, rng);
    EXPECT_EQ(s.size(), n);
    EXPECT_TRUE(s.is_downward_closed());
    EXPECT_LE(s.max_coordinate(), d);
  }
}

TEST(Threads, Resolve) {
  unsetenv("DCLSQ_THREADS");
  EXPECT_EQ(resolve_threads(3), 3u);
  EXPECT_GE(resolve_threads(0), 1u);
  setenv("DCLSQ_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(1), 5u);
  unsetenv("DCLSQ_THREADS");
}

TEST(Threads, ParallelForPropagatesErrors) {
  std::vector<int> out(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { out[i] = int(i) * 2; });
  for (int i = 0; i < 100; ++i) EXPECT_EQ(out[i], 2 * i);
  EXPECT_THROW(parallel_for(50, 3, [](std::size_t i) {
                 if (i == 17) throw DomainError("boom");
               }),
               DomainError);
}

TEST(Format, RealAndSet) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(2.0), "2");
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(std::stod(format_real(M_PI)), M_PI);
  EXPECT_EQ(format_set(IndexSet{MultiIndex{}, MultiIndex{1}, MultiIndex{0, 1}}, 2), "(0,0)|(0,1)|(1,0)");
}

TEST(StabilityMc, SingleElementNeverFails) {
  auto c = small(ExperimentKind::stability);
  c.n = 1;
  c.trials = 50;
  auto r = run_stability_mc(c);
  EXPECT_EQ(r.summary["failures"].get<std::size_t>(), 0u);
  EXPECT_TRUE(r.pass);
  c.fixed_set = IndexSet{MultiIndex{}};
  c.m = 5;
  r = run_stability_mc(c);
  EXPECT_EQ(r.summary["failures"].get<std::size_t>(), 0u);
}

TEST(StabilityMc, FamilyScanWithinCap) {
  auto c = small(ExperimentKind::stability);
  c.params = JacobiParams::chebyshev();
  c.trials = 200;
  auto r = run_stability_mc(c);
  EXPECT_TRUE(r.pass) << r.summary.dump();
  EXPECT_EQ(r.table.rows.size(), 200u);
}

TEST(Experiments, ThreadCountInvariance) {
  for (auto kind : {ExperimentKind::stability, ExperimentKind::recovery, ExperimentKind::gap, ExperimentKind::accuracy,
                    ExperimentKind::convergence}) {
    auto c = small(kind);
    c.n_max = 3;
    c.threads = 1;
    auto a = to_csv(run_experiment(c).table);
    c.threads = 4;
    auto b = to_csv(run_experiment(c).table);
    EXPECT_EQ(a, b) << to_string(kind);
    c.seed = 12;
    EXPECT_NE(to_csv(run_experiment(c).table), a) << to_string(kind);
  }
}

TEST(AccuracyMc, PolynomialTargetHasNoError) {
  auto c = small(ExperimentKind::accuracy);
  c.function = "monomial:1,1";
  c.n = 4; // y1 y2 = J_(1,1)/3 needs {0, e1, e2, e1+e2}
  c.trials = 10;
  auto r = run_accuracy_mc(c);
  EXPECT_LE(r.summary["sigma_n"].get<double>(), 1e-12);
  for (auto& row : r.table.rows) EXPECT_LE(std::stod(row[5]), 1e-9);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.summary["linf_violations"].get<std::size_t>(), 0u);
}

TEST(AccuracyMc, ExpectationBoundSmallRun) {
  auto c = small(ExperimentKind::accuracy);
  c.function = "exp_half";
  c.n = 3;
  c.trials = 30;
  auto r = run_accuracy_mc(c);
  EXPECT_TRUE(r.pass) << r.summary.dump();
  EXPECT_LE(r.summary["expectation_mean"].get<double>(), r.summary["expectation_bound"].get<double>());
}

TEST(RecoveryMc, StableImpliesRecovered) {
  auto c = small(ExperimentKind::recovery);
  c.trials = 30;
  c.recovery_m_factor = 20.0; // comfortably in the stable regime
  auto r = run_recovery_mc(c);
  EXPECT_EQ(r.summary["stable_but_not_recovered"].get<std::size_t>(), 0u);
  EXPECT_TRUE(r.pass) << r.summary.dump();
}

TEST(GapMc, NoViolations) {
  auto c = small(ExperimentKind::gap);
  c.function = "exp_quarter";
  c.trials = 20;
  auto r = run_gap_mc(c);
  EXPECT_EQ(r.summary["violations"].get<std::size_t>(), 0u);
}

TEST(Convergence, RatioAtLeastOneAndPolynomialExact) {
  auto c = small(ExperimentKind::convergence);
  c.function = "exp_sum";
  c.n_min = 1;
  c.n_max = 4;
  auto r = run_convergence_study(c);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.table.rows.size(), 4u);
  double prev = 1e300;
  for (auto& row : r.table.rows) {
    double sigma = std::stod(row[2]);
    EXPECT_LE(sigma, prev);
    prev = sigma;
  }
  c.function = "monomial:2";
  c.n_min = 3;
  c.n_max = 4;
  auto p = run_convergence_study(c);
  for (auto& row : p.table.rows) {
    EXPECT_LE(std::stod(row[2]), 1e-9);
    EXPECT_LE(std::stod(row[4]), 1e-9);
  }
}

TEST(Config, JsonEcho) {
  auto c = small(ExperimentKind::accuracy);
  auto j = config_to_json(c);
  EXPECT_EQ(j["kind"], "accuracy");
  EXPECT_EQ(j["seed"], 11);
  EXPECT_EQ(j["m_condition"], "enc2_dc");
}
