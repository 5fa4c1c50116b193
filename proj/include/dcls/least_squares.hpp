#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcls/errors.hpp"
#include "dcls/jacobi.hpp"
#include "dcls/multi_index.hpp"
#include "dcls/sampling.hpp"

namespace dcls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real function on [-1,1]^d.
using Function = std::function<double(std::span<const double>)>;

/// Smallest admissible Gramian eigenvalue before a fit is declared rank deficient.
inline constexpr double kRankThreshold = 1e-12;

namespace detail {
inline std::vector<std::size_t> max_degree_per_coordinate(const IndexSet& set) {
  std::vector<std::size_t> deg(set.max_coordinate(), 0);
  for (auto& nu : set)
    for (auto& [j, e] : nu.entries()) deg[j - 1] = std::max<std::size_t>(deg[j - 1], e);
  return deg;
}

// Per-coordinate univariate value tables at one point, reused across members.
class PointTables {
public:
  PointTables(const JacobiParams& p, const IndexSet& set) : p_(p), deg_(max_degree_per_coordinate(set)) {
    tables_.resize(deg_.size());
    for (std::size_t j = 0; j < deg_.size(); ++j) tables_[j].resize(deg_[j] + 1);
  }

  void load(std::span<const double> y) {
    if (y.size() < deg_.size()) throw DimensionMismatch("point has fewer coordinates than the index set support");
    for (std::size_t j = 0; j < deg_.size(); ++j) p_.eval_all(deg_[j], y[j], tables_[j]);
  }

  double basis(const MultiIndex& nu) const {
    double v = 1.0;
    for (auto& [j, e] : nu.entries()) v *= tables_[j - 1][e];
    return v;
  }

private:
  const JacobiParams& p_;
  std::vector<std::size_t> deg_;
  std::vector<std::vector<double>> tables_;
};
} // namespace detail

/// D_{ik} = J_{nu_k}(y^i), nu_k the k-th member in canonical order.
inline Matrix design_matrix(const JacobiParams& p, const IndexSet& set, const SampleSet& samples) {
  if (set.max_coordinate() > samples.d) throw DimensionMismatch("samples have fewer coordinates than supp(Lambda)");
  Matrix D(static_cast<Eigen::Index>(samples.m), static_cast<Eigen::Index>(set.size()));
  detail::PointTables tab(p, set);
  for (std::size_t i = 0; i < samples.m; ++i) {
    tab.load(samples.point(i));
    for (std::size_t k = 0; k < set.size(); ++k)
      D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = tab.basis(set[k]);
  }
  return D;
}

/// G = m^{-1} D^T D.
inline Matrix gramian(const Matrix& D) {
  if (D.rows() == 0) throw DomainError("gramian of an empty design matrix");
  Matrix G = Matrix::Zero(D.cols(), D.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(D.transpose());
  G = G.selfadjointView<Eigen::Lower>();
  return G / static_cast<double>(D.rows());
}

/// (lambda_min, lambda_max) of a symmetric matrix.
inline std::pair<double, double> extreme_eigenvalues(const Matrix& G) {
  if (G.rows() == 0) return {1.0, 1.0};
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

/// sum_k a_k J_{nu_k}(y).
inline double evaluate_expansion(const JacobiParams& p, const IndexSet& set, std::span<const double> coefficients,
                                 std::span<const double> y) {
  detail::PointTables tab(p, set);
  tab.load(y);
  double s = 0.0;
  for (std::size_t k = 0; k < set.size(); ++k) s += coefficients[k] * tab.basis(set[k]);
  return s;
}

/// Discrete least-squares projection of the data onto P_Lambda.
struct Fit {
  JacobiParams params;
  IndexSet index_set;
  std::vector<double> coefficients; // canonical member order
  double gramian_min_eig = 0.0;
  double gramian_max_eig = 0.0;
  double residual_empirical = 0.0; // ||u - Pi u||_m
  std::size_t m = 0;

  double operator()(std::span<const double> y) const { return evaluate_expansion(params, index_set, coefficients, y); }

  Function as_function() const {
    return [fit = *this](std::span<const double> y) { return fit(y); };
  }
};

struct LeastSquaresSolution {
  std::vector<double> coefficients;
  double min_eig = 0.0, max_eig = 0.0;
  double residual_empirical = 0.0;
};

/// Least squares through a Householder QR of D; the Gramian spectrum is
/// reported from G = D^T D / m. Throws RankDeficient below kRankThreshold.
inline LeastSquaresSolution solve_least_squares(const Matrix& D, std::span<const double> b,
                                                const Matrix* gram = nullptr) {
  if (static_cast<std::size_t>(D.rows()) != b.size()) throw DimensionMismatch("data length differs from design rows");
  if (D.rows() < D.cols()) throw DomainError("least squares requires m >= #(Lambda)");
  LeastSquaresSolution s;
  auto [lo, hi] = extreme_eigenvalues(gram ? *gram : gramian(D));
  s.min_eig = lo;
  s.max_eig = hi;
  if (!(lo >= kRankThreshold)) throw RankDeficient(lo);
  Eigen::Map<const Vector> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  Vector a = D.householderQr().solve(bv);
  s.coefficients.assign(a.data(), a.data() + a.size());
  s.residual_empirical = (bv - D * a).norm() / std::sqrt(static_cast<double>(D.rows()));
  return s;
}

inline Fit solve_projection(const JacobiParams& p, const IndexSet& set, const SampleSet& samples,
                            std::span<const double> b) {
  if (samples.m < set.size()) throw DomainError("solve_projection requires m >= #(Lambda)");
  Matrix D = design_matrix(p, set, samples);
  LeastSquaresSolution s = solve_least_squares(D, b);
  return Fit{p, set, std::move(s.coefficients), s.min_eig, s.max_eig, s.residual_empirical, samples.m};
}

inline std::vector<double> evaluate_at_samples(const Function& u, const SampleSet& samples) {
  std::vector<double> b(samples.m);
  for (std::size_t i = 0; i < samples.m; ++i) b[i] = u(samples.point(i));
  return b;
}

/// T_tau(t) = sign(t) min(tau, |t|).
inline double truncate(double t, double tau) { return std::clamp(t, -tau, tau); }

inline std::vector<double> truncate(std::span<const double> values, double tau) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [tau](double v) { return truncate(v, tau); });
  return out;
}

/// T_tau applied to an evaluator; the result is not a polynomial and is never re-projected.
inline Function truncated(Function f, double tau) {
  if (tau < 0) throw DomainError("truncation level must be non-negative");
  return [f = std::move(f), tau](std::span<const double> y) { return truncate(f(y), tau); };
}

/// (1-delta) I <= G <= (1+delta) I.
inline bool stability_check(double min_eig, double max_eig, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  return min_eig >= 1.0 - delta && max_eig <= 1.0 + delta;
}

inline bool stability_check(const Fit& fit, double delta) {
  return stability_check(fit.gramian_min_eig, fit.gramian_max_eig, delta);
}

inline bool stability_check(const Matrix& G, double delta) {
  auto [lo, hi] = extreme_eigenvalues(G);
  return stability_check(lo, hi, delta);
}

/// Tensor-product Gauss rule for the product measure on [-1,1]^d.
class TensorQuadrature {
public:
  static constexpr double kDefaultNodeBudget = 1e7;

  TensorQuadrature(const JacobiParams& p, std::size_t d, std::size_t order, double node_budget = kDefaultNodeBudget)
      : rule_(quadrature_rule(p, order)), d_(d) {
    double total = std::pow(static_cast<double>(order), static_cast<double>(d));
    if (total > node_budget)
      throw BudgetExceeded("tensor quadrature exceeds node budget", static_cast<std::uint64_t>(std::min(total, 1.8e19)));
    count_ = static_cast<std::size_t>(total);
  }

  std::size_t dimension() const noexcept { return d_; }
  std::size_t size() const noexcept { return count_; }
  const QuadratureRule& rule() const noexcept { return rule_; }

  /// Calls f(point, weight) for every node of the tensor grid.
  template <class F>
  void for_each(F&& f) const {
    const std::size_t q = rule_.nodes.size();
    std::vector<std::size_t> idx(d_, 0);
    std::vector<double> y(d_);
    for (std::size_t j = 0; j < d_; ++j) y[j] = rule_.nodes[0];
    for (std::size_t c = 0; c < count_; ++c) {
      double w = 1.0;
      for (std::size_t j = 0; j < d_; ++j) w *= rule_.weights[idx[j]];
      f(std::span<const double>(y), w);
      for (std::size_t j = 0; j < d_; ++j) {
        if (++idx[j] < q) {
          y[j] = rule_.nodes[idx[j]];
          break;
        }
        idx[j] = 0;
        y[j] = rule_.nodes[0];
      }
    }
  }

  double integrate(const Function& f) const {
    double s = 0.0;
    for_each([&](std::span<const double> y, double w) { s += w * f(y); });
    return s;
  }

private:
  QuadratureRule rule_;
  std::size_t d_;
  std::size_t count_ = 0;
};

/// ||u - v|| in L^2(rho) by tensor Gauss quadrature in d coordinates.
inline double l2_error(const JacobiParams& p, const Function& u, const Function& v, std::size_t d, std::size_t order) {
  TensorQuadrature q(p, d, order);
  double s = 0.0;
  q.for_each([&](std::span<const double> y, double w) {
    double e = u(y) - v(y);
    s += w * e * e;
  });
  return std::sqrt(s);
}

inline double l2_norm(const JacobiParams& p, const Function& u, std::size_t d, std::size_t order) {
  return l2_error(p, u, [](std::span<const double>) { return 0.0; }, d, order);
}

/// ||u - v||_m on the given samples.
inline double empirical_error(const Function& u, const Function& v, const SampleSet& samples) {
  std::vector<double> diff(samples.m);
  for (std::size_t i = 0; i < samples.m; ++i) diff[i] = u(samples.point(i)) - v(samples.point(i));
  return empirical_norm(diff);
}

} // namespace dcls
