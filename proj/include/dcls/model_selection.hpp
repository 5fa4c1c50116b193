#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dcls/errors.hpp"
#include "dcls/index_sets.hpp"
#include "dcls/jacobi.hpp"
#include "dcls/least_squares.hpp"
#include "dcls/sampling.hpp"

namespace dcls {

/// Design-matrix columns and Gramian over a fixed universe of indices.
///
/// Every candidate set of a family scan is a subset of the universe, so a
/// candidate solve only gathers columns and a principal Gramian submatrix.
class ColumnCache {
public:
  ColumnCache(const JacobiParams& p, const IndexSet& universe, const SampleSet& samples)
      : universe_(universe), D_(design_matrix(p, universe, samples)), G_(gramian(D_)) {}

  const IndexSet& universe() const noexcept { return universe_; }
  const Matrix& design() const noexcept { return D_; }
  const Matrix& gram() const noexcept { return G_; }

  std::vector<Eigen::Index> columns_of(const IndexSet& set) const {
    std::vector<Eigen::Index> cols;
    cols.reserve(set.size());
    for (auto& nu : set) {
      auto k = universe_.index_of(nu);
      if (!k) throw DimensionMismatch("candidate index outside the cached universe");
      cols.push_back(static_cast<Eigen::Index>(*k));
    }
    return cols;
  }

  Matrix design_of(const std::vector<Eigen::Index>& cols) const { return D_(Eigen::all, cols); }
  Matrix gram_of(const std::vector<Eigen::Index>& cols) const { return G_(cols, cols); }

  double min_eigenvalue(const IndexSet& set) const {
    return extreme_eigenvalues(gram_of(columns_of(set))).first;
  }

  LeastSquaresSolution solve(const IndexSet& set, std::span<const double> b) const {
    auto cols = columns_of(set);
    Matrix G = gram_of(cols);
    return solve_least_squares(design_of(cols), b, &G);
  }

private:
  IndexSet universe_;
  Matrix D_;
  Matrix G_;
};

enum class SelectionMethod { exhaustive, greedy, relaxed };

inline std::string to_string(SelectionMethod m) {
  switch (m) {
  case SelectionMethod::exhaustive: return "exhaustive";
  case SelectionMethod::greedy: return "greedy";
  case SelectionMethod::relaxed: return "relaxed";
  }
  return "?";
}

struct SelectionResult {
  Family family = Family::downward_closed;
  std::size_t n = 0;
  IndexSet chosen_set;
  Fit fit;
  double empirical_error = 0.0; // ||u - w||_m
  std::uint64_t sets_examined = 0;
  std::uint64_t rank_deficient_skipped = 0;
  SelectionMethod method = SelectionMethod::exhaustive;
  double relax_factor = 1.0; // C of the relaxed scan
  double relax_fraction = 1.0; // xi of the relaxed scan
  bool stopped_early = false;
  std::optional<double> certified_factor; // relaxed error / exhaustive optimum, when certified
};

namespace detail {

inline void require_family_dimension(Family family, std::size_t n, const SampleSet& samples) {
  if (family == Family::anchored && n > 1 && samples.d < n - 1)
    throw DimensionMismatch("anchored family of size n needs samples with at least n-1 coordinates");
}

inline Fit make_fit(const JacobiParams& p, const IndexSet& set, LeastSquaresSolution s, std::size_t m) {
  return Fit{p, set, std::move(s.coefficients), s.min_eig, s.max_eig, s.residual_empirical, m};
}

struct ScanState {
  std::optional<IndexSet> best;
  LeastSquaresSolution best_solution;
  double best_error = std::numeric_limits<double>::infinity();
  std::uint64_t examined = 0;
  std::uint64_t skipped = 0;

  void offer(const ColumnCache& cache, const IndexSet& set, std::span<const double> b) {
    ++examined;
    try {
      auto s = cache.solve(set, b);
      if (s.residual_empirical < best_error) {
        best_error = s.residual_empirical;
        best = set;
        best_solution = std::move(s);
      }
    } catch (const RankDeficient&) {
      ++skipped;
    }
  }
};

inline SelectionResult finish(Family family, std::size_t n, const JacobiParams& p, const SampleSet& samples,
                              ScanState& st, SelectionMethod method) {
  if (!st.best) throw RankDeficient(0.0);
  SelectionResult r;
  r.family = family;
  r.n = n;
  r.chosen_set = *st.best;
  r.fit = make_fit(p, *st.best, std::move(st.best_solution), samples.m);
  r.empirical_error = st.best_error;
  r.sets_examined = st.examined;
  r.rank_deficient_skipped = st.skipped;
  r.method = method;
  return r;
}

} // namespace detail

/// Global minimizer of ||u - Pi_Lambda^m u||_m over M_n^d or A_n; the first
/// minimizer in enumeration order wins ties. Rank-deficient candidates are
/// skipped and counted.
inline SelectionResult exhaustive_select(Family family, std::size_t n, const JacobiParams& p,
                                         const SampleSet& samples, std::span<const double> b,
                                         EnumerationBudget budget = {}) {
  detail::require_family_dimension(family, n, samples);
  ColumnCache cache(p, family_union(family, n, samples.d), samples);
  detail::ScanState st;
  for_each_in_family(family, n, samples.d, [&](const IndexSet& s) { st.offer(cache, s, b); }, budget);
  return detail::finish(family, n, p, samples, st, SelectionMethod::exhaustive);
}

/// Orthogonal matching pursuit restricted to the family: from {0}, repeatedly
/// add the admissible index whose normalized column has the largest
/// correlation with the current residual, then re-solve on the enlarged set.
inline SelectionResult greedy_select(Family family, std::size_t n, const JacobiParams& p, const SampleSet& samples,
                                     std::span<const double> b) {
  if (n < 1) throw DomainError("greedy_select requires n >= 1");
  if (samples.m < n) throw DomainError("greedy_select requires m >= n");
  if (b.size() != samples.m) throw DimensionMismatch("data length differs from sample count");
  const std::size_t dim = samples.d;
  const Eigen::Index m = static_cast<Eigen::Index>(samples.m);
  Eigen::Map<const Vector> bv(b.data(), m);

  std::map<MultiIndex, Vector> columns;
  auto column = [&](const MultiIndex& nu) -> const Vector& {
    auto it = columns.find(nu);
    if (it == columns.end()) {
      Vector c(m);
      for (Eigen::Index i = 0; i < m; ++i) c[i] = eval_tensor(p, nu, samples.point(static_cast<std::size_t>(i)));
      it = columns.emplace(nu, std::move(c)).first;
    }
    return it->second;
  };

  std::vector<MultiIndex> members{MultiIndex{}};
  std::set<MultiIndex> frontier;
  IndexSet current{MultiIndex{}};

  auto admissible = [&](const MultiIndex& c) {
    if (current.contains(c)) return false;
    for (auto& [j, v] : c.entries())
      if (!current.contains(c.minus_unit(j))) return false;
    if (family == Family::anchored && c.support_size() == 1 && c.entries()[0].second == 1) {
      std::uint32_t j = c.entries()[0].first;
      if (j > 1 && !current.contains(MultiIndex::unit(j - 1))) return false;
    }
    return true;
  };
  auto grow_frontier = [&](const MultiIndex& added) {
    for (std::uint32_t j = 1; j <= dim; ++j) {
      MultiIndex c = added.plus_unit(j);
      if (admissible(c)) frontier.insert(c);
    }
    if (family == Family::anchored && added.support_size() == 1 && added.entries()[0].second == 1) {
      std::uint32_t j = added.entries()[0].first + 1;
      if (j <= dim && admissible(MultiIndex::unit(j))) frontier.insert(MultiIndex::unit(j));
    }
  };
  if (family == Family::anchored) {
    frontier.insert(MultiIndex::unit(1));
  } else {
    grow_frontier(MultiIndex{});
  }

  auto solve_current = [&]() {
    Matrix D(m, static_cast<Eigen::Index>(current.size()));
    for (std::size_t k = 0; k < current.size(); ++k) D.col(static_cast<Eigen::Index>(k)) = column(current[k]);
    return solve_least_squares(D, b);
  };

  LeastSquaresSolution sol = solve_current();
  std::uint64_t examined = 1;
  while (current.size() < n && sol.residual_empirical > 1e-12) {
    if (frontier.empty()) throw Error("greedy selection stalled: empty admissible frontier");
    Vector coeffs = Eigen::Map<const Vector>(sol.coefficients.data(), static_cast<Eigen::Index>(sol.coefficients.size()));
    Matrix D(m, static_cast<Eigen::Index>(current.size()));
    for (std::size_t k = 0; k < current.size(); ++k) D.col(static_cast<Eigen::Index>(k)) = column(current[k]);
    Vector residual = bv - D * coeffs;

    const MultiIndex* pick = nullptr;
    double best = -1.0;
    for (auto& c : frontier) {
      const Vector& col = column(c);
      double nrm = col.norm();
      double score = nrm > 0 ? std::abs(col.dot(residual)) / nrm : 0.0;
      if (score > best) {
        best = score;
        pick = &c;
      }
    }
    MultiIndex chosen = *pick;
    frontier.erase(frontier.find(chosen));
    members.push_back(chosen);
    current = IndexSet(members);
    grow_frontier(chosen);
    sol = solve_current();
    ++examined;
  }

  SelectionResult r;
  r.family = family;
  r.n = n;
  r.chosen_set = current;
  r.empirical_error = sol.residual_empirical;
  r.fit = detail::make_fit(p, current, std::move(sol), samples.m);
  r.sets_examined = examined;
  r.method = SelectionMethod::greedy;
  return r;
}

/// Near-optimal selection. With xi < 1 the scan is restricted to members of
/// the family that contain the exhaustive optimum at size ceil(xi n); with
/// C > 1 the scan stops as soon as the incumbent is within a factor C of the
/// residual on the family union, a lower bound for every candidate. When
/// `certify` is set the achieved factor against the full exhaustive scan is
/// reported.
inline SelectionResult relaxed_select(Family family, std::size_t n, const JacobiParams& p, const SampleSet& samples,
                                      std::span<const double> b, double C, double xi, bool certify = true,
                                      EnumerationBudget budget = {}) {
  if (!(C >= 1.0)) throw DomainError("relaxation factor C must be >= 1");
  if (!(xi > 0.0 && xi <= 1.0)) throw DomainError("relaxation fraction xi must lie in (0,1]");
  detail::require_family_dimension(family, n, samples);

  const std::size_t core_size = static_cast<std::size_t>(std::ceil(xi * static_cast<double>(n) - 1e-12));
  std::optional<IndexSet> core;
  std::uint64_t core_examined = 0;
  if (core_size < n) {
    auto sub = exhaustive_select(family, std::max<std::size_t>(core_size, 1), p, samples, b, budget);
    core = sub.chosen_set;
    core_examined = sub.sets_examined;
  }

  ColumnCache cache(p, family_union(family, n, samples.d), samples);
  double lower = 0.0;
  if (samples.m >= cache.universe().size()) {
    try {
      lower = cache.solve(cache.universe(), b).residual_empirical;
    } catch (const RankDeficient&) {
      lower = 0.0;
    }
  }

  detail::ScanState st;
  bool early = false;
  for_each_in_family(family, n, samples.d, [&](const IndexSet& s) {
    if (core && !core->is_subset_of(s)) return true;
    st.offer(cache, s, b);
    if (C > 1.0 && st.best_error <= C * lower) {
      early = true;
      return false;
    }
    return true;
  }, budget);

  SelectionResult r = detail::finish(family, n, p, samples, st, SelectionMethod::relaxed);
  r.sets_examined += core_examined;
  r.relax_factor = C;
  r.relax_fraction = xi;
  r.stopped_early = early;
  if (certify) {
    double opt = exhaustive_select(family, n, p, samples, b, budget).empirical_error;
    r.certified_factor = opt > 0 ? r.empirical_error / opt
                                 : (r.empirical_error <= 1e-14 ? 1.0 : std::numeric_limits<double>::infinity());
  }
  return r;
}

/// C_n^d (or the anchored analogue): max over the family of 1/lambda_min(G_Lambda).
/// Returns +infinity when some Gramian is singular to kRankThreshold.
inline double compute_stability_constant(Family family, std::size_t n, const JacobiParams& p,
                                         const SampleSet& samples, EnumerationBudget budget = {}) {
  detail::require_family_dimension(family, n, samples);
  ColumnCache cache(p, family_union(family, n, samples.d), samples);
  double worst = 0.0;
  for_each_in_family(family, n, samples.d, [&](const IndexSet& s) {
    double lo = cache.min_eigenvalue(s);
    if (!(lo >= kRankThreshold)) {
      worst = std::numeric_limits<double>::infinity();
      return false;
    }
    worst = std::max(worst, 1.0 / lo);
    return true;
  }, budget);
  return worst;
}

/// Coefficients u_nu = int u J_nu d(rho) for every member of `indices`, by
/// tensor quadrature in the first `d` coordinates. Indices using coordinates
/// beyond d get coefficient 0 (u does not depend on them).
inline std::vector<double> projection_coefficients(const JacobiParams& p, const Function& u, std::size_t d,
                                                   const IndexSet& indices, std::size_t order) {
  TensorQuadrature quad(p, d, order);
  std::vector<std::size_t> deg(d, 0);
  for (auto& nu : indices)
    for (auto& [j, e] : nu.entries())
      if (j <= d) deg[j - 1] = std::max<std::size_t>(deg[j - 1], e);
  const auto& nodes = quad.rule().nodes;
  // tables[j][q][k] = J_k(node_q)
  std::vector<std::vector<std::vector<double>>> tables(d);
  for (std::size_t j = 0; j < d; ++j)
    for (double x : nodes) tables[j].push_back(p.eval_all(deg[j], x));

  std::vector<double> coeff(indices.size(), 0.0);
  std::vector<bool> active(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) active[k] = indices[k].max_coordinate() <= d;

  const std::size_t q = nodes.size();
  std::vector<std::size_t> idx(d, 0);
  quad.for_each([&](std::span<const double> y, double w) {
    double uw = u(y) * w;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (!active[k]) continue;
      double v = 1.0;
      for (auto& [j, e] : indices[k].entries()) v *= tables[j - 1][idx[j - 1]][e];
      coeff[k] += uw * v;
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < q) break;
      idx[j] = 0;
    }
  });
  return coeff;
}

struct BestNTermResult {
  Family family = Family::downward_closed;
  std::size_t n = 0;
  IndexSet optimal_set;
  std::vector<double> projection_coefficients; // u_n (or u~_n) in optimal_set order
  double sigma_n = 0.0;                         // ||u - u_n|| by quadrature
  IndexSet working_superset;
  std::vector<double> coefficient_table;        // u_nu for nu in working_superset
  double retained_tail = 0.0;                   // sum of u_nu^2 over superset \ optimal_set
  double tail_estimate = 0.0;                   // sigma_n^2 - retained_tail, energy outside the superset
  double shell_energy = 0.0;                    // energy of the last shell, superset \ H_{3n}
  bool tail_warning = false;
  std::uint64_t sets_examined = 0;

  Function as_function(const JacobiParams& p) const {
    return [p, set = optimal_set, c = projection_coefficients](std::span<const double> y) {
      return evaluate_expansion(p, set, c, y);
    };
  }
};

/// Best n-term L^2 approximation over the family: coefficients by quadrature,
/// then the family member retaining the most energy (first in enumeration
/// order on ties). `d` is the number of coordinates u depends on.
inline BestNTermResult best_n_term_oracle(Family family, std::size_t n, const JacobiParams& p, const Function& u,
                                          std::size_t d, std::size_t quadrature_order,
                                          std::optional<IndexSet> working_superset = std::nullopt,
                                          EnumerationBudget budget = {}) {
  if (n < 1 || d < 1) throw DomainError("best_n_term_oracle requires n >= 1 and d >= 1");
  const std::size_t fdim = std::max(d, family_dimension(family, n, d));
  IndexSet universe = family_union(family, n, d);
  IndexSet superset = working_superset ? set_union(*working_superset, universe)
                                       : set_union(hyperbolic_cross(4 * n, d), universe);

  BestNTermResult r;
  r.family = family;
  r.n = n;
  r.working_superset = superset;
  r.coefficient_table = projection_coefficients(p, u, d, superset, quadrature_order);

  double best_energy = -1.0;
  r.sets_examined = for_each_in_family(family, n, fdim, [&](const IndexSet& s) {
    double e = 0.0;
    for (auto& nu : s) {
      double c = r.coefficient_table[*superset.index_of(nu)];
      e += c * c;
    }
    if (e > best_energy) {
      best_energy = e;
      r.optimal_set = s;
    }
  }, budget);

  r.projection_coefficients.reserve(n);
  for (auto& nu : r.optimal_set) r.projection_coefficients.push_back(r.coefficient_table[*superset.index_of(nu)]);

  Function un = r.as_function(p);
  // u and u_n only depend on coordinates 1..fdim; quadrature over d suffices
  // because members beyond d carry zero coefficients.
  r.sigma_n = l2_error(p, u, un, d, quadrature_order);

  IndexSet inner = hyperbolic_cross(3 * n, d);
  for (std::size_t k = 0; k < superset.size(); ++k) {
    double c2 = r.coefficient_table[k] * r.coefficient_table[k];
    if (!r.optimal_set.contains(superset[k])) r.retained_tail += c2;
    if (superset[k].max_coordinate() <= d && !inner.contains(superset[k])) r.shell_energy += c2;
  }
  r.tail_estimate = std::max(0.0, r.sigma_n * r.sigma_n - r.retained_tail);
  r.tail_warning = r.shell_energy > 1e-2 * r.sigma_n * r.sigma_n && r.shell_energy > 1e-28;
  return r;
}

/// Sup-norm of f on a uniform tensor grid with `points_per_dim` nodes per
/// coordinate. A lower bound of the true supremum.
inline double grid_sup_norm(const Function& f, std::size_t d, std::size_t points_per_dim) {
  if (points_per_dim < 2) throw DomainError("grid needs at least two points per coordinate");
  double total = std::pow(static_cast<double>(points_per_dim), static_cast<double>(d));
  if (total > 1e7) throw BudgetExceeded("L-infinity grid exceeds budget", static_cast<std::uint64_t>(std::min(total, 1.8e19)));
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> y(d, -1.0);
  const double h = 2.0 / static_cast<double>(points_per_dim - 1);
  double best = 0.0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(total); ++c) {
    best = std::max(best, std::abs(f(y)));
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < points_per_dim) {
        y[j] = std::min(1.0, -1.0 + h * static_cast<double>(idx[j]));
        break;
      }
      idx[j] = 0;
      y[j] = -1.0;
    }
  }
  return best;
}

/// Both sides of ||u - w|| <= ||u - v|| + 2 sqrt(C) ||u - v||_m and of the
/// sup-norm corollary ||u - w|| <= (1 + 2 sqrt(C)) ||u - v||_inf.
struct GapCheck {
  double lhs = 0.0;            // ||u - w||
  double rhs = 0.0;            // ||u - v|| + 2 sqrt(C) ||u - v||_m
  bool holds = false;
  double rhs_linf = 0.0;       // (1 + 2 sqrt(C)) * grid max |u - v|
  bool holds_linf = false;
  bool linf_certified = false; // grid max is a lower bound of the sup, so the L-inf check is not certified
};

struct GapCheckInputs {
  const JacobiParams* params;
  Function u, v, w;
  double stability_constant;
  const SampleSet* samples;
  std::size_t d;                    // coordinates u, v, w depend on
  std::size_t quadrature_order = 40;
  std::size_t linf_points = 101;
  double slack = 1e-9;
};

inline GapCheck lemma31_gap_check(const GapCheckInputs& in) {
  GapCheck c;
  c.lhs = l2_error(*in.params, in.u, in.w, in.d, in.quadrature_order);
  double uv = l2_error(*in.params, in.u, in.v, in.d, in.quadrature_order);
  double uv_m = empirical_error(in.u, in.v, *in.samples);
  double root = std::sqrt(in.stability_constant);
  c.rhs = uv + 2.0 * root * uv_m;
  c.holds = c.lhs <= c.rhs + in.slack;
  Function diff = [&](std::span<const double> y) { return in.u(y) - in.v(y); };
  double linf = grid_sup_norm(diff, in.d, in.d <= 3 ? in.linf_points : 11);
  c.rhs_linf = (1.0 + 2.0 * root) * linf;
  c.holds_linf = c.lhs <= c.rhs_linf + in.slack;
  c.linf_certified = false;
  return c;
}

} // namespace dcls
