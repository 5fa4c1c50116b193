#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dcls/experiments.hpp"
#include "dcls/jacobi.hpp"

using namespace dcls;

namespace {

const double kPi = std::numbers::pi;

// Composite Gauss-Legendre on many panels, independent of the library's rules.
template <class F>
double panel_integral(F f, int panels = 2000) {
  static const double x[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double h = 2.0 / panels, s = 0.0;
  for (int p = 0; p < panels; ++p) {
    double mid = -1.0 + (p + 0.5) * h;
    for (int k = 0; k < 3; ++k) s += w[k] * f(mid + 0.5 * h * x[k]) * 0.5 * h;
  }
  return s;
}

} // namespace

TEST(Normalization, Examples) {
  EXPECT_NEAR(normalization_constant(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(normalization_constant(-0.5, -0.5), 1.0 / kPi, 1e-15);
  EXPECT_NEAR(normalization_constant(1, 0), 1.0 / panel_integral([](double t) { return 1.0 - t; }), 1e-12);
  EXPECT_NEAR(normalization_constant(2, 3), 1.0 / panel_integral([](double t) { return (1 - t) * (1 - t) * std::pow(1 + t, 3); }), 1e-12);
  EXPECT_THROW(normalization_constant(-1.0, 0.0), DomainError);
}

TEST(EvalUnivariate, Examples) {
  for (auto p : {JacobiParams::legendre(), JacobiParams::chebyshev(), JacobiParams(1, 2)})
    EXPECT_DOUBLE_EQ(eval_univariate(p, 0, 0.3), 1.0);
  EXPECT_NEAR(eval_univariate(JacobiParams::legendre(), 1, 1.0), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(eval_univariate(JacobiParams::chebyshev(), 3, std::cos(0.7)), std::sqrt(2.0) * std::cos(2.1), 1e-13);
  EXPECT_THROW(eval_univariate(JacobiParams::legendre(), 2, 1.0000001), DomainError);
}

TEST(EvalUnivariate, ChebyshevClosedForm) {
  auto p = JacobiParams::chebyshev();
  for (int k = 1; k <= 60; ++k)
    for (double phi : {0.1, 0.77, 1.9, 3.0})
      EXPECT_NEAR(p.eval(k, std::cos(phi)), std::sqrt(2.0) * std::cos(k * phi), 1e-11) << k;
}

TEST(EvalUnivariate, LegendreClosedForm) {
  auto p = JacobiParams::legendre();
  for (int k = 0; k <= 40; ++k)
    for (double t : {-0.9, -0.2, 0.35, 0.99})
      EXPECT_NEAR(p.eval(k, t), std::sqrt(2.0 * k + 1.0) * std::legendre(k, t), 1e-11) << k;
}

TEST(EvalTensor, Examples) {
  auto L = JacobiParams::legendre(), C = JacobiParams::chebyshev();
  std::vector<double> y{0.3, -0.4, 0.1};
  EXPECT_DOUBLE_EQ(eval_tensor(L, MultiIndex{}, y), 1.0);
  std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_NEAR(eval_tensor(L, MultiIndex{1, 1}, ones), 3.0, 1e-13);
  std::vector<double> yc{1.0, 0.42, 1.0};
  EXPECT_NEAR(eval_tensor(C, MultiIndex{2, 0, 1}, yc), 2.0, 1e-13);
}

TEST(EvalTensor, ProductConsistency) {
  JacobiParams p(1, 2);
  std::vector<double> y{0.3, -0.7, 0.55, 0.91};
  MultiIndex nu{3, 0, 5, 2};
  double prod = p.eval(3, y[0]) * p.eval(5, y[2]) * p.eval(2, y[3]);
  EXPECT_NEAR(eval_tensor(p, nu, y), prod, 1e-14 * std::abs(prod));
}

TEST(Quadrature, Examples) {
  auto q1 = quadrature_rule(JacobiParams::legendre(), 1);
  ASSERT_EQ(q1.nodes.size(), 1u);
  EXPECT_NEAR(q1.nodes[0], 0.0, 1e-15);
  EXPECT_NEAR(q1.weights[0], 1.0, 1e-15);
  const std::size_t n = 7;
  auto qc = quadrature_rule(JacobiParams::chebyshev(), n);
  for (std::size_t i = 0; i < n; ++i) {
    double expect = std::cos((2.0 * (n - i) - 1.0) * kPi / (2.0 * n)); // ascending order
    EXPECT_NEAR(qc.nodes[i], expect, 1e-13);
    EXPECT_NEAR(qc.weights[i], 1.0 / n, 1e-13);
  }
  for (auto p : {JacobiParams::legendre(), JacobiParams::chebyshev(), JacobiParams(1, 0), JacobiParams(2, 2), JacobiParams(-0.7, 0.4)})
    for (std::size_t order : {1u, 5u, 40u, 150u}) {
      auto q = quadrature_rule(p, order);
      double s = 0.0;
      for (double w : q.weights) s += w;
      EXPECT_NEAR(s, 1.0, 1e-13);
    }
}

TEST(Quadrature, ExactForPolynomials) {
  // integral of t^k against the Legendre measure: 1/(k+1) for even k
  auto q = quadrature_rule(JacobiParams::legendre(), 6);
  for (int k = 0; k <= 11; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], k);
    EXPECT_NEAR(s, k % 2 ? 0.0 : 1.0 / (k + 1), 1e-14);
  }
}

TEST(Orthonormality, Degree20) {
  for (auto p : {JacobiParams::legendre(), JacobiParams::chebyshev(), JacobiParams(1, 0), JacobiParams(2, 2),
                 JacobiParams(1, 1), JacobiParams(0, 2)}) {
    auto q = quadrature_rule(p, 25);
    for (int k = 0; k <= 20; ++k)
      for (int l = 0; l <= 20; ++l) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * p.eval(k, q.nodes[i]) * p.eval(l, q.nodes[i]);
        EXPECT_NEAR(s, k == l ? 1.0 : 0.0, 1e-10) << p.theta1() << "," << p.theta2() << " " << k << " " << l;
      }
  }
}

TEST(Orthonormality, IndependentPanelOracle) {
  JacobiParams p(1, 0);
  double c = normalization_constant(1, 0);
  for (int k = 0; k <= 6; ++k)
    for (int l = 0; l <= 6; ++l) {
      double s = panel_integral([&](double t) { return c * (1 - t) * p.eval(k, t) * p.eval(l, t); });
      EXPECT_NEAR(s, k == l ? 1.0 : 0.0, 1e-10);
    }
}

TEST(KQuantity, Examples) {
  auto L = JacobiParams::legendre(), C = JacobiParams::chebyshev();
  EXPECT_DOUBLE_EQ(k_quantity(L, IndexSet{MultiIndex{}}), 1.0);
  IndexSet s{MultiIndex{}, MultiIndex{1}};
  EXPECT_NEAR(k_quantity(C, s), 3.0, 1e-12);
  EXPECT_NEAR(std::pow(2.0, std::log(3.0) / std::log(2.0)), 3.0, 1e-12);
  EXPECT_NEAR(k_quantity(L, s), 4.0, 1e-12);
  EXPECT_THROW(k_quantity(JacobiParams(-0.7, 0.0), s, KStrategy::endpoint), DomainError);
}

TEST(KQuantity, ChebyshevClosedFormMatchesSup) {
  auto C = JacobiParams::chebyshev();
  IndexSet s = hyperbolic_cross(6, 2);
  double expect = 0.0;
  for (auto& nu : s) expect += std::pow(2.0, double(nu.support_size()));
  EXPECT_NEAR(k_quantity(C, s), expect, 1e-12);
  std::vector<double> one{1.0, 1.0};
  double at_corner = 0.0;
  for (auto& nu : s) at_corner += std::pow(eval_tensor(C, nu, one), 2);
  EXPECT_NEAR(at_corner, expect, 1e-10);
}

TEST(KQuantity, SandwichAndGridBelowEndpoint) {
  Xoshiro256 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 12);
    std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * 3);
    IndexSet s = random_downward_closed(n, d, rng);
    double N = double(s.size());
    double kc = k_quantity(JacobiParams::chebyshev(), s);
    double kl = k_quantity(JacobiParams::legendre(), s);
    double k2 = k_quantity(JacobiParams(2, 1), s);
    EXPECT_GE(kc, N - 1e-9);
    EXPECT_LE(kc, std::pow(N, std::log(3.0) / std::log(2.0)) * (1 + 1e-9));
    EXPECT_GE(kl, N - 1e-9);
    EXPECT_LE(kl, N * N * (1 + 1e-9));
    EXPECT_LE(k2, std::pow(N, 6.0) * (1 + 1e-9));
    if (d <= 2) {
      double g = k_quantity(JacobiParams::legendre(), s, KStrategy::grid_refine);
      EXPECT_LE(g, kl + 1e-9);
      EXPECT_GE(g, N - 1e-9);
    }
  }
}

TEST(KQuantity, GridRefineFallback) {
  JacobiParams p(-0.8, -0.8);
  IndexSet s{MultiIndex{}, MultiIndex{1}, MultiIndex{2}};
  EXPECT_FALSE(k_quantity_is_exact(p));
  double k = k_quantity(p, s);
  EXPECT_GE(k, 3.0 - 1e-9);
  double scan = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    double t = -1.0 + i * 1e-5, v = 0.0;
    for (int deg = 0; deg <= 2; ++deg) v += std::pow(p.eval(deg, std::min(t, 1.0)), 2);
    scan = std::max(scan, v);
  }
  EXPECT_NEAR(k, scan, 1e-6 * scan);
}

TEST(JacobiParams, Parse) {
  EXPECT_EQ(JacobiParams::parse("legendre"), JacobiParams::legendre());
  EXPECT_EQ(JacobiParams::parse("chebyshev"), JacobiParams::chebyshev());
  EXPECT_EQ(JacobiParams::parse("1,0.5"), JacobiParams(1, 0.5));
  EXPECT_THROW(JacobiParams::parse("hermite"), DomainError);
  EXPECT_THROW(JacobiParams(-1.5, 0), DomainError);
}
