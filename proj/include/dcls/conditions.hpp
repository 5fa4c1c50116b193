#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcls/errors.hpp"
#include "dcls/index_sets.hpp"
#include "dcls/jacobi.hpp"

namespace dcls {

/// zeta(delta) = delta + (1 - delta) ln(1 - delta).
inline double zeta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("zeta requires delta in (0,1)");
  return delta + (1.0 - delta) * std::log1p(-delta);
}

enum class BasisCase { chebyshev, jacobi_integer, explicit_K };

/// Upper bound on K(P_Lambda) for #(Lambda) = n: n^{ln 3 / ln 2} for Chebyshev,
/// n^{2 max(theta) + 2} for non-negative integer Jacobi parameters.
inline double k_bound(double n, double theta1, double theta2) {
  if (theta1 == -0.5 && theta2 == -0.5) return std::pow(n, std::log(3.0) / std::numbers::ln2);
  auto is_nat = [](double t) { return t >= 0 && t == std::floor(t); };
  if (is_nat(theta1) && is_nat(theta2)) return std::pow(n, 2.0 * std::max(theta1, theta2) + 2.0);
  throw DomainError("no closed-form K bound for these Jacobi parameters; supply K explicitly");
}

inline double k_bound(double n, const JacobiParams& p) { return k_bound(n, p.theta1(), p.theta2()); }

enum class ConditionKind {
  thm21,         // m/ln m >= (1+r)/zeta K(P_Lambda)
  hc_dc,         // K replaced through #(H_n^d)
  hc_anchored,   // through #(H_n^{n-1})
  enc1_dc,       // (1 + r + n d ln2 / ln m) K_n / zeta
  enc1_anchored, // (1 + r + n^2 ln2 / ln m) K~_n / zeta
  enc1_explicit, // enc1 with the closed-form K bound
  enc2_dc,       // (1 + r + n ln(dn) / ln m) K_n / zeta
  enc2_anchored, // (1 + r + 2 n ln n / ln m) K~_n / zeta
  enc2_explicit, // enc2 with the closed-form K bound
  rip_regime,    // sample bound for the restricted isometry property, threshold on m itself
  rip_ours,      // (1 + ln(2/gamma)/ln m + n ln(dn)/ln m) K_n / zeta(delta)
};

inline constexpr ConditionKind kAllConditionKinds[] = {
    ConditionKind::thm21,         ConditionKind::hc_dc,      ConditionKind::hc_anchored,
    ConditionKind::enc1_dc,       ConditionKind::enc1_anchored, ConditionKind::enc1_explicit,
    ConditionKind::enc2_dc,       ConditionKind::enc2_anchored, ConditionKind::enc2_explicit,
    ConditionKind::rip_regime,    ConditionKind::rip_ours};

inline std::string to_string(ConditionKind k) {
  switch (k) {
  case ConditionKind::thm21: return "thm21";
  case ConditionKind::hc_dc: return "hc_dc";
  case ConditionKind::hc_anchored: return "hc_anchored";
  case ConditionKind::enc1_dc: return "enc1_dc";
  case ConditionKind::enc1_anchored: return "enc1_anchored";
  case ConditionKind::enc1_explicit: return "enc1_explicit";
  case ConditionKind::enc2_dc: return "enc2_dc";
  case ConditionKind::enc2_anchored: return "enc2_anchored";
  case ConditionKind::enc2_explicit: return "enc2_explicit";
  case ConditionKind::rip_regime: return "rip_regime";
  case ConditionKind::rip_ours: return "rip_ours";
  }
  return "?";
}

inline ConditionKind parse_condition_kind(std::string_view s) {
  for (auto k : kAllConditionKinds)
    if (to_string(k) == s) return k;
  throw DomainError("unknown condition kind '" + std::string(s) + "'");
}

/// True for kinds whose right-hand side has no dependence on d.
inline bool is_dimension_free(ConditionKind k, Family family) {
  switch (k) {
  case ConditionKind::hc_anchored:
  case ConditionKind::enc1_anchored:
  case ConditionKind::enc2_anchored: return true;
  case ConditionKind::enc1_explicit:
  case ConditionKind::enc2_explicit: return family == Family::anchored;
  default: return false;
  }
}

struct ConditionSpec {
  ConditionKind kind = ConditionKind::enc2_dc;
  std::uint64_t n = 1;
  std::uint64_t d = 1;
  double r = 1.0;
  double delta = 0.5;
  double gamma = 0.01; // failure probability for the rip kinds
  BasisCase basis = BasisCase::chebyshev;
  double theta1 = -0.5, theta2 = -0.5; // used by jacobi_integer
  Family family = Family::downward_closed; // selects the variant for *_explicit and rip kinds

  static ConditionSpec for_params(ConditionKind kind, std::uint64_t n, std::uint64_t d, double r,
                                  const JacobiParams& p) {
    ConditionSpec s;
    s.kind = kind;
    s.n = n;
    s.d = d;
    s.r = r;
    s.theta1 = p.theta1();
    s.theta2 = p.theta2();
    s.basis = p.is_chebyshev() ? BasisCase::chebyshev
              : p.integer_parameters() ? BasisCase::jacobi_integer
                                       : BasisCase::explicit_K;
    return s;
  }
};

namespace detail {

inline double closed_form_k(const ConditionSpec& s, double n) {
  switch (s.basis) {
  case BasisCase::chebyshev: return k_bound(n, -0.5, -0.5);
  case BasisCase::jacobi_integer: return k_bound(n, s.theta1, s.theta2);
  case BasisCase::explicit_K: break;
  }
  throw DomainError("condition needs an explicit K for this basis");
}

inline double resolve_k(const ConditionSpec& s, std::optional<double> k_input, double n) {
  if (k_input) return *k_input;
  return closed_form_k(s, n);
}

inline void validate(const ConditionSpec& s) {
  if (s.n < 1 || s.d < 1) throw DomainError("condition requires n >= 1 and d >= 1");
  if (!(s.r > 0)) throw DomainError("condition requires r > 0");
  if (!(s.gamma > 0 && s.gamma < 1)) throw DomainError("gamma must lie in (0,1)");
  zeta(s.delta);
}

inline double hc_size(const ConditionSpec& s, bool anchored) {
  return static_cast<double>(hyperbolic_cross_size(s.n, anchored ? s.n - 1 : s.d));
}

} // namespace detail

/// True when the condition compares m itself (not m / ln m) with the right-hand side.
inline bool threshold_on_m(ConditionKind k) { return k == ConditionKind::rip_regime; }

/// Right-hand side that m / ln m (or m, for rip_regime) must reach at trial value m.
inline double condition_rhs(const ConditionSpec& s, double m, std::optional<double> k_input = std::nullopt) {
  detail::validate(s);
  const double n = static_cast<double>(s.n), d = static_cast<double>(s.d);
  const double z = zeta(s.delta), lm = std::log(m);
  const bool anchored_variant = s.family == Family::anchored;
  switch (s.kind) {
  case ConditionKind::thm21:
    return (1.0 + s.r) / z * detail::resolve_k(s, k_input, n);
  case ConditionKind::hc_dc:
  case ConditionKind::hc_anchored: {
    double h = detail::hc_size(s, s.kind == ConditionKind::hc_anchored);
    double k = k_input ? *k_input : detail::closed_form_k(s, h);
    return (1.0 + s.r) / z * k;
  }
  case ConditionKind::enc1_dc:
    return (1.0 + s.r + n * d * std::numbers::ln2 / lm) * detail::resolve_k(s, k_input, n) / z;
  case ConditionKind::enc1_anchored:
    return (1.0 + s.r + n * n * std::numbers::ln2 / lm) * detail::resolve_k(s, k_input, n) / z;
  case ConditionKind::enc1_explicit: {
    double extra = anchored_variant ? n * n * std::numbers::ln2 : n * d * std::numbers::ln2;
    return (1.0 + s.r + extra / lm) * detail::closed_form_k(s, n) / z;
  }
  case ConditionKind::enc2_dc:
    return (1.0 + s.r + n * std::log(d * n) / lm) * detail::resolve_k(s, k_input, n) / z;
  case ConditionKind::enc2_anchored:
    return (1.0 + s.r + 2.0 * n * std::log(n) / lm) * detail::resolve_k(s, k_input, n) / z;
  case ConditionKind::enc2_explicit: {
    double extra = anchored_variant ? 2.0 * n * std::log(n) : n * std::log(d * n);
    return (1.0 + s.r + extra / lm) * detail::closed_form_k(s, n) / z;
  }
  case ConditionKind::rip_regime: {
    const double k = detail::resolve_k(s, k_input, n);
    const double dt = s.delta / 13.0;
    const double q = k / (dt * dt);
    const double big_n = detail::hc_size(s, anchored_variant);
    const double a = 32.0 / std::pow(dt, 4) * std::log(40.0 * q * std::log(q)) * std::log(4.0 * big_n);
    const double b = 1.0 / dt * std::log(1.0 / (s.gamma * dt) * std::log(q));
    return 64.0 * std::numbers::e * q * std::log(q) * std::max(a, b);
  }
  case ConditionKind::rip_ours: {
    double extra = anchored_variant ? 2.0 * n * std::log(n) : n * std::log(d * n);
    return (1.0 + std::log(2.0 / s.gamma) / lm + extra / lm) * detail::resolve_k(s, k_input, n) / z;
  }
  }
  throw DomainError("unhandled condition kind");
}

/// Whether the condition holds at integer m (right-hand side rounded upward).
inline bool condition_holds(const ConditionSpec& s, std::uint64_t m, std::optional<double> k_input = std::nullopt) {
  const double md = static_cast<double>(m);
  const double rhs = std::nextafter(condition_rhs(s, md, k_input), std::numeric_limits<double>::infinity());
  if (threshold_on_m(s.kind)) return md >= rhs;
  return md / std::log(md) >= rhs;
}

struct SampleSize {
  std::uint64_t m = 0;     // smallest m >= 3 satisfying the condition
  bool overflow = false;   // m* exceeds 2^63 - 1; `rhs` then carries the value
  double rhs = 0.0;        // right-hand side at m (or at the overflow point)
};

inline constexpr std::uint64_t kMaxSampleSize = std::numeric_limits<std::int64_t>::max();

/// Smallest integer m >= 3 satisfying the condition: fixed-point iteration
/// m <- ceil(rhs(m) ln m) followed by a linear scan to minimality. On m >= 3
/// the set of admissible m is an interval [m*, inf), so the scan terminates.
inline SampleSize min_sample_size(const ConditionSpec& s, std::optional<double> k_input = std::nullopt) {
  constexpr double kLimit = static_cast<double>(kMaxSampleSize);
  SampleSize out;
  if (threshold_on_m(s.kind)) {
    double rhs = std::nextafter(condition_rhs(s, 3.0, k_input), std::numeric_limits<double>::infinity());
    out.rhs = rhs;
    if (!(std::ceil(rhs) < kLimit)) {
      out.overflow = true;
      return out;
    }
    out.m = std::max<std::uint64_t>(3, static_cast<std::uint64_t>(std::ceil(rhs)));
    while (out.m > 3 && condition_holds(s, out.m - 1, k_input)) --out.m;
    while (!condition_holds(s, out.m, k_input)) ++out.m;
    return out;
  }

  double start = std::ceil(condition_rhs(s, std::numbers::e, k_input));
  if (!(start < kLimit)) {
    out.overflow = true;
    out.rhs = start;
    return out;
  }
  std::uint64_t m = std::max<std::uint64_t>(3, static_cast<std::uint64_t>(start));
  for (int it = 0; it < 200; ++it) {
    double next = std::ceil(condition_rhs(s, static_cast<double>(m), k_input) * std::log(static_cast<double>(m)));
    if (!(next < kLimit)) {
      out.overflow = true;
      out.rhs = condition_rhs(s, static_cast<double>(m), k_input);
      return out;
    }
    std::uint64_t nm = std::max<std::uint64_t>(3, static_cast<std::uint64_t>(next));
    if (nm == m) break;
    m = nm;
  }
  while (!condition_holds(s, m, k_input)) ++m;
  while (m > 3 && condition_holds(s, m - 1, k_input)) --m;
  out.m = m;
  out.rhs = condition_rhs(s, static_cast<double>(m), k_input);
  return out;
}

struct ProbabilityBound {
  double fine = 0.0;   // 2 n m^{-(r+1)}
  double coarse = 0.0; // 2 m^{-r}
};

inline ProbabilityBound probability_bound(double m, double r, double n = 1.0) {
  if (!(m >= 1.0) || !(r > 0.0)) throw DomainError("probability_bound requires m >= 1 and r > 0");
  return {2.0 * n * std::pow(m, -(r + 1.0)), 2.0 * std::pow(m, -r)};
}

} // namespace dcls
