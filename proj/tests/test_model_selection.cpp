#include <gtest/gtest.h>

#include <cmath>

#include "dcls/experiments.hpp"
#include "dcls/model_selection.hpp"

using namespace dcls;

namespace {

std::vector<double> values(const Function& f, const SampleSet& s) { return evaluate_at_samples(f, s); }

Function y1_pow(int k) {
  return [k](std::span<const double> y) { return std::pow(y[0], k); };
}

} // namespace

TEST(Exhaustive, ExactRepresentability) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 2, 200, 1);
  IndexSet target{MultiIndex{0, 0}, MultiIndex{1, 0}, MultiIndex{0, 1}, MultiIndex{1, 1}};
  std::vector<double> c{0.3, -1.0, 0.5, 2.0};
  auto u = make_polynomial_function(p, target, c);
  auto r = exhaustive_select(Family::downward_closed, 4, p, s, values(u.f, s));
  EXPECT_LE(r.empirical_error, 1e-10);
  EXPECT_EQ(r.chosen_set, target);
  EXPECT_EQ(r.sets_examined, enumerate_downward_closed(4, 2).size());
}

TEST(Exhaustive, SingleElementFamily) {
  auto p = JacobiParams::chebyshev();
  auto s = draw_samples(p, 3, 30, 2);
  auto b = values(make_test_function("exp_sum", 3).f, s);
  auto r = exhaustive_select(Family::downward_closed, 1, p, s, b);
  EXPECT_EQ(r.chosen_set, IndexSet{MultiIndex{}});
  double mean = 0;
  for (double v : b) mean += v;
  EXPECT_NEAR(r.fit.coefficients[0], mean / b.size(), 1e-13);
}

TEST(Exhaustive, LegendreSquareOfFirstCoordinate) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 2, 100, 3);
  auto b = values(y1_pow(2), s);
  auto r = exhaustive_select(Family::downward_closed, 3, p, s, b);
  EXPECT_EQ(r.chosen_set, (IndexSet{MultiIndex{0, 0}, MultiIndex{1, 0}, MultiIndex{2, 0}}));
  EXPECT_LE(r.empirical_error, 1e-12);
  // oracle: brute force over the three members of M_3^2
  double best = 1e300;
  for (auto& set : enumerate_downward_closed(3, 2)) best = std::min(best, solve_projection(p, set, s, b).residual_empirical);
  EXPECT_DOUBLE_EQ(r.empirical_error, best);
}

TEST(Exhaustive, GlobalArgminAndDeterminism) {
  auto p = JacobiParams::chebyshev();
  auto s = draw_samples(p, 3, 150, 4);
  auto b = values(make_test_function("rational", 3).f, s);
  auto r = exhaustive_select(Family::downward_closed, 5, p, s, b);
  for (auto& set : enumerate_downward_closed(5, 3))
    EXPECT_LE(r.empirical_error, solve_projection(p, set, s, b).residual_empirical + 1e-15);
  auto r2 = exhaustive_select(Family::downward_closed, 5, p, s, b);
  EXPECT_EQ(r.chosen_set, r2.chosen_set);
  EXPECT_EQ(r.sets_examined, r2.sets_examined);
  EXPECT_EQ(r.fit.coefficients, r2.fit.coefficients);
}

TEST(Exhaustive, AnchoredFamily) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 4, 200, 5);
  auto b = values(make_test_function("exp_sum", 4).f, s);
  auto r = exhaustive_select(Family::anchored, 5, p, s, b);
  EXPECT_TRUE(r.chosen_set.is_anchored());
  EXPECT_EQ(r.sets_examined, enumerate_anchored(5).size());
  auto dc = exhaustive_select(Family::downward_closed, 5, p, s, b);
  EXPECT_LE(dc.empirical_error, r.empirical_error + 1e-15);
  auto small = draw_samples(p, 2, 50, 5);
  EXPECT_THROW(exhaustive_select(Family::anchored, 5, p, small, values(make_test_function("exp_sum", 2).f, small)),
               DimensionMismatch);
}

TEST(Exhaustive, RankDeficientCandidatesSkipped) {
  auto p = JacobiParams::legendre();
  // every point has y2 = 0.3, so sets with two y2-degrees are singular at m = 3
  SampleSet s{{-0.5, 0.3, 0.1, 0.3, 0.9, 0.3}, p, 0, 3, 2};
  std::vector<double> b{1.0, 2.0, 0.5};
  auto r = exhaustive_select(Family::downward_closed, 3, p, s, b);
  EXPECT_GT(r.rank_deficient_skipped, 0u);
  EXPECT_EQ(r.chosen_set, (IndexSet{MultiIndex{0, 0}, MultiIndex{1, 0}, MultiIndex{2, 0}}));
}

TEST(Greedy, IteratesStayInFamily) {
  auto p = JacobiParams::chebyshev();
  auto s = draw_samples(p, 3, 300, 6);
  auto b = values(make_test_function("exp_sum", 3).f, s);
  for (std::size_t n = 1; n <= 10; ++n) {
    auto g = greedy_select(Family::downward_closed, n, p, s, b);
    EXPECT_TRUE(g.chosen_set.is_downward_closed());
    EXPECT_EQ(g.chosen_set.size(), n);
    auto ga = greedy_select(Family::anchored, n, p, s, b);
    EXPECT_TRUE(ga.chosen_set.is_anchored());
  }
}

TEST(Greedy, FirstPickIsCorrelatedCoordinate) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 2, 100, 7);
  auto b = values(y1_pow(1), s);
  auto g = greedy_select(Family::downward_closed, 3, p, s, b);
  EXPECT_TRUE(g.chosen_set.contains(MultiIndex{1, 0}));
  // y1 is exactly representable after the first pick, so greedy stops early
  EXPECT_EQ(g.chosen_set.size(), 2u);
  EXPECT_LE(g.empirical_error, 1e-12);
}

TEST(Greedy, RecoversRectanglePolynomial) {
  auto p = JacobiParams::legendre();
  IndexSet rect = rectangle(MultiIndex{2, 1});
  std::vector<double> c{1.0, 0.8, 0.6, 0.5, 0.4, 0.3};
  auto u = make_polynomial_function(p, rect, c);
  auto s = draw_samples(p, 2, 400, 8);
  auto g = greedy_select(Family::downward_closed, rect.size(), p, s, values(u.f, s));
  EXPECT_LE(g.empirical_error, 1e-8);
}

TEST(Greedy, ExhaustiveNoWorse) {
  auto p = JacobiParams::legendre();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s = draw_samples(p, 2, 120, seed);
    auto b = values(make_test_function("exp_sum", 2).f, s);
    for (std::size_t n = 2; n <= 6; ++n) {
      auto e = exhaustive_select(Family::downward_closed, n, p, s, b);
      auto g = greedy_select(Family::downward_closed, n, p, s, b);
      EXPECT_LE(e.empirical_error, g.empirical_error + 1e-14);
    }
  }
}

TEST(Relaxed, UnitParametersMatchExhaustive) {
  auto p = JacobiParams::chebyshev();
  auto s = draw_samples(p, 2, 200, 9);
  auto b = values(make_test_function("rational", 2).f, s);
  auto e = exhaustive_select(Family::downward_closed, 6, p, s, b);
  auto r = relaxed_select(Family::downward_closed, 6, p, s, b, 1.0, 1.0);
  EXPECT_EQ(r.chosen_set, e.chosen_set);
  EXPECT_DOUBLE_EQ(r.empirical_error, e.empirical_error);
  EXPECT_FALSE(r.stopped_early);
  ASSERT_TRUE(r.certified_factor);
  EXPECT_DOUBLE_EQ(*r.certified_factor, 1.0);
}

TEST(Relaxed, FactorTwoBound) {
  auto p = JacobiParams::legendre();
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto s = draw_samples(p, 3, 300, seed);
    auto b = values(make_test_function("exp_sum", 3).f, s);
    auto e = exhaustive_select(Family::downward_closed, 5, p, s, b);
    auto r = relaxed_select(Family::downward_closed, 5, p, s, b, 2.0, 1.0);
    EXPECT_LE(r.empirical_error, 2.0 * e.empirical_error + 1e-15);
    EXPECT_LE(r.sets_examined, e.sets_examined + r.sets_examined);
  }
}

TEST(Relaxed, HalfFractionContainsOptimum) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 2, 200, 10);
  IndexSet target{MultiIndex{0, 0}, MultiIndex{1, 0}, MultiIndex{0, 1}};
  auto u = make_polynomial_function(p, target, {1.0, -0.5, 0.25});
  auto r = relaxed_select(Family::downward_closed, 6, p, s, values(u.f, s), 1.0, 0.5);
  EXPECT_LE(r.empirical_error, 1e-10);
  EXPECT_TRUE(target.is_subset_of(r.chosen_set));
  EXPECT_THROW(relaxed_select(Family::downward_closed, 6, p, s, values(u.f, s), 0.5, 1.0), DomainError);
}

TEST(StabilityConstant, Examples) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 2, 50, 11);
  EXPECT_DOUBLE_EQ(compute_stability_constant(Family::downward_closed, 1, p, s), 1.0);
  auto s4 = draw_samples(p, 4, 300, 12);
  for (std::size_t n = 2; n <= 5; ++n)
    EXPECT_LE(compute_stability_constant(Family::anchored, n, p, s4), compute_stability_constant(Family::downward_closed, n, p, s4));
}

TEST(StabilityConstant, RayleighOracle) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 2, 200, 13);
  double C = compute_stability_constant(Family::downward_closed, 2, p, s);
  // ||v||^2 / ||v||_m^2 over random v in each P_Lambda, plus local ascent
  Xoshiro256 rng(14);
  double best = 0.0;
  for (auto& set : enumerate_downward_closed(2, 2)) {
    Matrix G = gramian(design_matrix(p, set, s));
    for (int it = 0; it < 20000; ++it) {
      double a = rng.normal(), b = rng.normal();
      Vector v(2);
      v << a, b;
      best = std::max(best, v.squaredNorm() / (v.transpose() * G * v)(0, 0));
    }
    // refine along the angle
    double th = 0, step = 0.1, cur = 0;
    for (int it = 0; it < 2000; ++it) {
      for (double cand : {th - step, th + step}) {
        Vector v(2);
        v << std::cos(cand), std::sin(cand);
        double q = 1.0 / (v.transpose() * G * v)(0, 0);
        if (q > cur) cur = q, th = cand;
      }
      step *= 0.99;
    }
    best = std::max(best, cur);
  }
  EXPECT_NEAR(best, C, 1e-8 * C);
}

TEST(StabilityConstant, SingularIsInfinite) {
  auto p = JacobiParams::legendre();
  SampleSet s{{0.1, 0.2, 0.1, 0.2}, p, 0, 2, 2};
  EXPECT_TRUE(std::isinf(compute_stability_constant(Family::downward_closed, 2, p, s)));
}

TEST(BestNTerm, PolynomialHasZeroSigma) {
  auto p = JacobiParams::legendre();
  IndexSet target{MultiIndex{0, 0}, MultiIndex{0, 1}, MultiIndex{0, 2}};
  auto u = make_polynomial_function(p, target, {1.0, 2.0, 3.0});
  auto r = best_n_term_oracle(Family::downward_closed, 3, p, u.f, 2, 20);
  EXPECT_LE(r.sigma_n, 1e-12);
  EXPECT_EQ(r.optimal_set, target);
  auto r4 = best_n_term_oracle(Family::downward_closed, 4, p, u.f, 2, 20);
  EXPECT_TRUE(target.is_subset_of(r4.optimal_set));
  EXPECT_LE(r4.sigma_n, 1e-12);
}

TEST(BestNTerm, ExponentialDecreasingAndTailSum) {
  auto p = JacobiParams::legendre();
  Function u = [](std::span<const double> y) { return std::exp(y[0]); };
  double prev = 1e300;
  for (std::size_t n = 1; n <= 8; ++n) {
    auto r = best_n_term_oracle(Family::downward_closed, n, p, u, 1, 40);
    EXPECT_LT(r.sigma_n, prev);
    prev = r.sigma_n;
    // univariate: optimal set is {0..n-1}; sigma^2 = sum_{k>=n} u_k^2
    auto q = quadrature_rule(p, 40);
    double tail = 0.0;
    for (std::size_t k = n; k < 30; ++k) {
      double c = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) c += q.weights[i] * std::exp(q.nodes[i]) * p.eval(k, q.nodes[i]);
      tail += c * c;
    }
    EXPECT_NEAR(r.sigma_n * r.sigma_n, tail, 1e-14 + 1e-9 * tail);
    EXPECT_FALSE(r.tail_warning);
  }
}

TEST(BestNTerm, AnchoredMatchesDownwardClosedInOneDimension) {
  auto p = JacobiParams::chebyshev();
  Function u = [](std::span<const double> y) { return 1.0 / (2.0 + y[0]); };
  for (std::size_t n = 1; n <= 5; ++n) {
    auto a = best_n_term_oracle(Family::anchored, n, p, u, 1, 40);
    auto d = best_n_term_oracle(Family::downward_closed, n, p, u, 1, 40);
    EXPECT_NEAR(a.sigma_n, d.sigma_n, 1e-13);
    EXPECT_EQ(a.optimal_set, d.optimal_set);
  }
}

TEST(GapCheck, TrivialCases) {
  auto p = JacobiParams::legendre();
  auto s = draw_samples(p, 2, 100, 15);
  Function u = [](std::span<const double> y) { return y[0] * y[1]; };
  GapCheckInputs in{&p, u, u, u, 2.0, &s, 2, 20, 21};
  auto c = lemma31_gap_check(in);
  EXPECT_NEAR(c.lhs, 0.0, 1e-14);
  EXPECT_TRUE(c.holds);
  EXPECT_FALSE(c.linf_certified);
}

TEST(GapCheck, HoldsOverSeededTrials) {
  auto p = JacobiParams::legendre();
  auto u = make_test_function("exp_quarter", 2);
  auto oracle = best_n_term_oracle(Family::downward_closed, 2, p, u.f, 2, 30);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = draw_samples(p, 2, 60, seed);
    auto b = values(u.f, s);
    auto w = exhaustive_select(Family::downward_closed, 2, p, s, b);
    double C = compute_stability_constant(Family::downward_closed, 3, p, s);
    GapCheckInputs in{&p, u.f, oracle.as_function(p), w.fit.as_function(), C, &s, 2, 30, 51};
    auto c = lemma31_gap_check(in);
    EXPECT_TRUE(c.holds) << seed << " " << c.lhs << " > " << c.rhs;
  }
}
