#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dcls/errors.hpp"
#include "dcls/multi_index.hpp"

namespace dcls {

/// c = 1 / int_{-1}^{1} (1-t)^theta1 (1+t)^theta2 dt, evaluated in log space.
inline double normalization_constant(double theta1, double theta2) {
  if (!(theta1 > -1.0) || !(theta2 > -1.0)) throw DomainError("Jacobi parameters must exceed -1");
  double log_c = std::lgamma(theta1 + theta2 + 2.0) - (theta1 + theta2 + 1.0) * std::numbers::ln2 -
                 std::lgamma(theta1 + 1.0) - std::lgamma(theta2 + 1.0);
  return std::exp(log_c);
}

/// Beta measure d(beta) = c (1-t)^theta1 (1+t)^theta2 dt on [-1,1] together with
/// the three-term recurrence of its orthonormal polynomials J_0 = 1, J_1, ...
///
/// The recurrence table is filled up to `max_degree` at construction, so a
/// constructed object is immutable and may be shared between threads.
class JacobiParams {
public:
  static constexpr std::size_t kDefaultMaxDegree = 400;

  JacobiParams() : JacobiParams(0.0, 0.0) {}

  JacobiParams(double theta1, double theta2, std::size_t max_degree = kDefaultMaxDegree)
      : theta1_(theta1), theta2_(theta2), c_(normalization_constant(theta1, theta2)) {
    build_recurrence(max_degree);
  }

  static JacobiParams legendre() { return {0.0, 0.0}; }
  static JacobiParams chebyshev() { return {-0.5, -0.5}; }

  /// Accepts "legendre", "chebyshev", or "theta1,theta2".
  static JacobiParams parse(std::string_view name) {
    if (name == "legendre" || name == "uniform") return legendre();
    if (name == "chebyshev") return chebyshev();
    auto comma = name.find(',');
    if (comma == std::string_view::npos) throw DomainError("unknown basis '" + std::string(name) + "'");
    try {
      return {std::stod(std::string(name.substr(0, comma))), std::stod(std::string(name.substr(comma + 1)))};
    } catch (const std::logic_error&) {
      throw DomainError("cannot parse Jacobi parameters '" + std::string(name) + "'");
    }
  }

  double theta1() const noexcept { return theta1_; }
  double theta2() const noexcept { return theta2_; }
  double normalization() const noexcept { return c_; }
  std::size_t max_degree() const noexcept { return diag_.size() - 1; }

  bool is_chebyshev() const noexcept { return theta1_ == -0.5 && theta2_ == -0.5; }
  bool is_legendre() const noexcept { return theta1_ == 0.0 && theta2_ == 0.0; }
  bool integer_parameters() const noexcept {
    return theta1_ >= 0 && theta2_ >= 0 && theta1_ == std::floor(theta1_) && theta2_ == std::floor(theta2_);
  }

  /// Diagonal of the Jacobi matrix (a_k) and its off-diagonal (sqrt b_{k+1}).
  double recurrence_a(std::size_t k) const { return diag_.at(k); }
  double recurrence_sqrt_b(std::size_t k) const { return offdiag_.at(k); }

  /// J_k(t) by forward recurrence. |t| must not exceed 1.
  double eval(std::size_t k, double t) const {
    check_argument(k, t);
    double prev = 0.0, cur = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      double next = ((t - diag_[i]) * cur - (i > 0 ? offdiag_[i - 1] : 0.0) * prev) / offdiag_[i];
      prev = cur;
      cur = next;
    }
    return cur;
  }

  /// Writes J_0(t), ..., J_kmax(t) into `out` (size kmax + 1).
  void eval_all(std::size_t kmax, double t, std::span<double> out) const {
    check_argument(kmax, t);
    out[0] = 1.0;
    if (kmax == 0) return;
    out[1] = (t - diag_[0]) / offdiag_[0];
    for (std::size_t i = 1; i < kmax; ++i)
      out[i + 1] = ((t - diag_[i]) * out[i] - offdiag_[i - 1] * out[i - 1]) / offdiag_[i];
  }

  std::vector<double> eval_all(std::size_t kmax, double t) const {
    std::vector<double> v(kmax + 1);
    eval_all(kmax, t, v);
    return v;
  }

  friend bool operator==(const JacobiParams& a, const JacobiParams& b) {
    return a.theta1_ == b.theta1_ && a.theta2_ == b.theta2_;
  }

private:
  void check_argument(std::size_t k, double t) const {
    if (!(std::abs(t) <= 1.0)) throw DomainError("Jacobi polynomial argument outside [-1,1]");
    if (k > max_degree()) throw DomainError("degree exceeds the precomputed recurrence table");
  }

  // Monic Jacobi recurrence p_{k+1} = (t - a_k) p_k - b_k p_{k-1} for the
  // weight (1-t)^alpha (1+t)^beta; the orthonormal version divides by sqrt(b_{k+1}).
  void build_recurrence(std::size_t max_degree) {
    const double al = theta1_, be = theta2_, s = al + be;
    diag_.resize(max_degree + 1);
    offdiag_.resize(max_degree + 1);
    for (std::size_t k = 0; k <= max_degree; ++k) {
      const double kk = static_cast<double>(k);
      if (k == 0) {
        diag_[k] = (be - al) / (s + 2.0);
      } else {
        diag_[k] = (be * be - al * al) / ((2 * kk + s) * (2 * kk + s + 2.0));
      }
      const double k1 = kk + 1.0; // b_{k+1}
      double b;
      if (k == 0) {
        b = 4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + s) * (2.0 + s) * (3.0 + s));
      } else {
        const double m = 2 * k1 + s;
        b = 4.0 * k1 * (k1 + al) * (k1 + be) * (k1 + s) / (m * m * (m + 1.0) * (m - 1.0));
      }
      offdiag_[k] = std::sqrt(b);
    }
  }

  double theta1_, theta2_, c_;
  std::vector<double> diag_, offdiag_;
};

inline double eval_univariate(const JacobiParams& p, std::size_t k, double t) { return p.eval(k, t); }

/// J_nu(y) = prod_{j in supp(nu)} J_{nu_j}(y_j).
inline double eval_tensor(const JacobiParams& p, const MultiIndex& nu, std::span<const double> y) {
  if (nu.max_coordinate() > y.size()) throw DimensionMismatch("point has fewer coordinates than supp(nu)");
  double v = 1.0;
  for (auto& [j, e] : nu.entries()) v *= p.eval(e, y[j - 1]);
  return v;
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights; // sum to 1
};

/// Gauss rule for the normalized measure, exact up to degree 2*order - 1.
/// Nodes come from the symmetric tridiagonal eigenproblem; weights from the
/// Christoffel function 1 / sum_k J_k(x_i)^2.
inline QuadratureRule quadrature_rule(const JacobiParams& p, std::size_t order) {
  if (order < 1) throw DomainError("quadrature order must be >= 1");
  if (order > p.max_degree()) throw DomainError("quadrature order exceeds recurrence table");
  Eigen::VectorXd diag(order), sub(order > 1 ? order - 1 : 0);
  for (std::size_t i = 0; i < order; ++i) diag[static_cast<Eigen::Index>(i)] = p.recurrence_a(i);
  for (std::size_t i = 0; i + 1 < order; ++i) sub[static_cast<Eigen::Index>(i)] = p.recurrence_sqrt_b(i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("Gauss-Jacobi eigen-solve failed");

  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  std::vector<double> vals(order);
  double total = 0.0;
  for (std::size_t i = 0; i < order; ++i) {
    double x = std::clamp(es.eigenvalues()[static_cast<Eigen::Index>(i)], -1.0, 1.0);
    rule.nodes[i] = x;
    p.eval_all(order - 1, x, vals);
    double s = 0.0;
    for (double v : vals) s += v * v;
    rule.weights[i] = 1.0 / s;
    total += rule.weights[i];
  }
  for (auto& w : rule.weights) w /= total;
  return rule;
}

enum class KStrategy { automatic, endpoint, grid_refine };

struct GridRefineOptions {
  std::size_t max_grid_points = 200'000;
  std::size_t sweeps = 6;
};

namespace detail {

// sum_nu prod_j J_{nu_j}(y_j)^2, with per-coordinate value tables.
class ChristoffelSum {
public:
  ChristoffelSum(const JacobiParams& p, const IndexSet& set) : p_(p), set_(set) {
    dim_ = set.max_coordinate();
    max_deg_.assign(dim_, 0);
    for (auto& nu : set)
      for (auto& [j, e] : nu.entries()) max_deg_[j - 1] = std::max<std::size_t>(max_deg_[j - 1], e);
    tables_.resize(dim_);
    for (std::size_t j = 0; j < dim_; ++j) tables_[j].resize(max_deg_[j] + 1);
  }

  std::size_t dimension() const { return dim_; }

  void set_coordinate(std::size_t j, double t) { p_.eval_all(max_deg_[j], t, tables_[j]); }

  double value() const {
    double s = 0.0;
    for (auto& nu : set_) {
      double v = 1.0;
      for (auto& [j, e] : nu.entries()) v *= tables_[j - 1][e];
      s += v * v;
    }
    return s;
  }

private:
  const JacobiParams& p_;
  const IndexSet& set_;
  std::size_t dim_;
  std::vector<std::size_t> max_deg_;
  std::vector<std::vector<double>> tables_;
};

} // namespace detail

/// Lower bound of K(P_Lambda) from a tensor grid scan plus coordinate-wise refinement.
inline double k_quantity_grid_refine(const JacobiParams& p, const IndexSet& set, GridRefineOptions opt = {}) {
  detail::ChristoffelSum f(p, set);
  const std::size_t dim = f.dimension();
  if (dim == 0) return static_cast<double>(set.size());

  std::size_t per_dim = 3;
  while (per_dim < 1001 &&
         std::pow(static_cast<double>(per_dim + 1), static_cast<double>(dim)) <= static_cast<double>(opt.max_grid_points))
    ++per_dim;
  std::vector<double> grid(per_dim);
  for (std::size_t i = 0; i < per_dim; ++i)
    grid[i] = -std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(per_dim - 1));
  grid.front() = -1.0;
  grid.back() = 1.0;

  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> best_point(dim, grid[0]);
  double best = -1.0;
  for (std::size_t j = 0; j < dim; ++j) f.set_coordinate(j, grid[0]);
  while (true) {
    double v = f.value();
    if (v > best) {
      best = v;
      for (std::size_t j = 0; j < dim; ++j) best_point[j] = grid[idx[j]];
    }
    std::size_t j = 0;
    while (j < dim && ++idx[j] == per_dim) {
      idx[j] = 0;
      f.set_coordinate(j, grid[0]);
      ++j;
    }
    if (j == dim) break;
    f.set_coordinate(j, grid[idx[j]]);
  }

  std::vector<double> y = best_point;
  for (std::size_t j = 0; j < dim; ++j) f.set_coordinate(j, y[j]);
  double h = 2.0 / static_cast<double>(per_dim - 1);
  constexpr int kLocal = 16;
  for (std::size_t sweep = 0; sweep < opt.sweeps; ++sweep) {
    for (std::size_t j = 0; j < dim; ++j) {
      double centre = y[j], best_t = y[j];
      for (int s = -kLocal; s <= kLocal; ++s) {
        double t = std::clamp(centre + h * s / kLocal, -1.0, 1.0);
        f.set_coordinate(j, t);
        double v = f.value();
        if (v > best) {
          best = v;
          best_t = t;
        }
      }
      y[j] = best_t;
      f.set_coordinate(j, best_t);
    }
    h /= 4.0;
  }
  return best;
}

/// K(P_Lambda) = sup_y sum_{nu in Lambda} J_nu(y)^2.
///
/// Chebyshev uses the closed form sum_nu 2^{#supp(nu)}. The endpoint strategy
/// (min(theta) >= -1/2) evaluates at y = (1,1,...) when theta1 >= theta2 and at
/// (-1,-1,...) otherwise, where every |J_k| attains its maximum. grid_refine
/// returns a lower bound of the supremum.
inline double k_quantity(const JacobiParams& p, const IndexSet& set, KStrategy strategy = KStrategy::automatic) {
  if (set.empty()) return 0.0;
  const bool endpoint_valid = std::min(p.theta1(), p.theta2()) >= -0.5;
  if (strategy == KStrategy::grid_refine) return k_quantity_grid_refine(p, set);
  if (strategy == KStrategy::endpoint && !endpoint_valid)
    throw DomainError("endpoint K evaluation requires theta1, theta2 >= -1/2");
  if (!endpoint_valid) return k_quantity_grid_refine(p, set);

  if (p.is_chebyshev()) {
    double s = 0.0;
    for (auto& nu : set) s += std::ldexp(1.0, static_cast<int>(nu.support_size()));
    return s;
  }
  const double t = p.theta1() >= p.theta2() ? 1.0 : -1.0;
  std::size_t max_deg = 0;
  for (auto& nu : set)
    for (auto& [j, e] : nu.entries()) max_deg = std::max<std::size_t>(max_deg, e);
  std::vector<double> sq = p.eval_all(max_deg, t);
  for (auto& v : sq) v *= v;
  double s = 0.0;
  for (auto& nu : set) {
    double v = 1.0;
    for (auto& [j, e] : nu.entries()) v *= sq[e];
    s += v;
  }
  return s;
}

/// Whether k_quantity(p, ., strategy) is the exact supremum rather than a lower bound.
inline bool k_quantity_is_exact(const JacobiParams& p, KStrategy strategy = KStrategy::automatic) {
  if (strategy == KStrategy::grid_refine) return false;
  return std::min(p.theta1(), p.theta2()) >= -0.5;
}

} // namespace dcls
