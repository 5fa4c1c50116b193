#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dcls/errors.hpp"
#include "dcls/multi_index.hpp"

namespace dcls {

enum class Family { downward_closed, anchored };

inline std::string_view to_string(Family f) { return f == Family::anchored ? "anchored" : "dc"; }

inline Family parse_family(std::string_view s) {
  if (s == "dc" || s == "downward_closed") return Family::downward_closed;
  if (s == "anchored" || s == "an") return Family::anchored;
  throw DomainError("unknown family '" + std::string(s) + "'");
}

struct EnumerationBudget {
  std::uint64_t max_sets = 10'000'000;
};

/// Default cap on the number of members of a constructed hyperbolic cross.
inline constexpr std::uint64_t kDefaultMemberCap = 10'000'000;

/// R_nu = { mu : mu <= nu }.
inline IndexSet rectangle(const MultiIndex& nu) {
  std::vector<MultiIndex> out{MultiIndex{}};
  for (auto& [j, v] : nu.entries()) {
    std::vector<MultiIndex> next;
    next.reserve(out.size() * (v + 1));
    for (auto& mu : out)
      for (std::uint32_t e = 0; e <= v; ++e) {
        MultiIndex t = mu;
        t.set(j, e);
        next.push_back(std::move(t));
      }
    out = std::move(next);
  }
  return IndexSet(std::move(out), nu.max_coordinate());
}

/// H_n^d = { mu : prod_j (mu_j + 1) <= n } in coordinates 1..d.
inline IndexSet hyperbolic_cross(std::uint64_t n, std::size_t d, std::uint64_t member_cap = kDefaultMemberCap) {
  if (n < 1) throw DomainError("hyperbolic_cross requires n >= 1");
  std::vector<MultiIndex> out;
  std::vector<std::uint32_t> cur(d, 0u);
  std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t j, std::uint64_t prod) {
    if (j == d) {
      if (out.size() >= member_cap) throw BudgetExceeded("hyperbolic cross exceeds member cap", out.size());
      out.push_back(MultiIndex::from_dense(cur));
      return;
    }
    for (std::uint32_t v = 0; prod * (v + 1) <= n; ++v) {
      cur[j] = v;
      rec(j + 1, prod * (v + 1));
    }
    cur[j] = 0;
  };
  rec(0, 1);
  return IndexSet(std::move(out), d);
}

/// #(H_n^d) without materializing the set.
inline std::uint64_t hyperbolic_cross_size(std::uint64_t n, std::size_t d) {
  if (n < 1) throw DomainError("hyperbolic_cross requires n >= 1");
  // count(j, budget) = number of (mu_j..mu_d) with prod (mu_i + 1) <= budget
  std::function<std::uint64_t(std::size_t, std::uint64_t)> count = [&](std::size_t j, std::uint64_t budget) {
    if (j == d || budget < 2) return std::uint64_t{1};
    std::uint64_t total = 0;
    for (std::uint64_t f = 1; f <= budget; ++f) total += count(j + 1, budget / f);
    return total;
  };
  return count(0, n);
}

/// Smallest downward closed set containing every given index.
inline IndexSet downward_closure(const std::vector<MultiIndex>& indices) {
  std::set<MultiIndex> seen;
  std::vector<MultiIndex> stack(indices.begin(), indices.end());
  stack.emplace_back();
  while (!stack.empty()) {
    MultiIndex nu = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(nu).second) continue;
    for (auto& [j, v] : nu.entries()) stack.push_back(nu.minus_unit(j));
  }
  return IndexSet(std::vector<MultiIndex>(seen.begin(), seen.end()));
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  std::vector<MultiIndex> m(a.members());
  m.insert(m.end(), b.members().begin(), b.members().end());
  return IndexSet(std::move(m), std::max(a.dimension(), b.dimension()));
}

namespace detail {

// Dense working representation for the enumerators: k members of width d
// stored contiguously, appended in strictly increasing lexicographic order.
class DenseSequence {
public:
  DenseSequence(std::size_t d, std::size_t capacity) : d_(d) { data_.reserve(d * capacity); }

  std::size_t size() const { return count_; }
  const std::uint32_t* at(std::size_t i) const { return data_.data() + i * d_; }

  void push(const std::vector<std::uint32_t>& v) {
    data_.insert(data_.end(), v.begin(), v.end());
    ++count_;
  }
  void pop() {
    data_.resize(data_.size() - d_);
    --count_;
  }

  bool contains(const std::uint32_t* v) const {
    for (std::size_t i = 0; i < size(); ++i)
      if (std::equal(v, v + d_, at(i))) return true;
    return false;
  }

  static bool less(const std::uint32_t* a, const std::uint32_t* b, std::size_t d) {
    return std::lexicographical_compare(a, a + d, b, b + d);
  }

  IndexSet to_index_set(std::size_t ambient) const {
    std::vector<MultiIndex> m;
    m.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
      m.push_back(MultiIndex::from_dense(std::span<const std::uint32_t>(at(i), d_)));
    return IndexSet(std::move(m), ambient);
  }

private:
  std::size_t d_;
  std::size_t count_ = 0;
  std::vector<std::uint32_t> data_;
};

template <class Visitor>
bool invoke_visitor(Visitor& visit, const IndexSet& s) {
  if constexpr (std::is_same_v<std::invoke_result_t<Visitor&, const IndexSet&>, bool>) {
    return visit(s);
  } else {
    visit(s);
    return true;
  }
}

// Depth-first extension nu^k = nu^{l_k} + e_{j_k}. A child is accepted only
// when it is lexicographically larger than every current member and j_k is
// the smallest coordinate of its support, so each set is produced exactly
// once, along its canonical (sorted) pointer tuple.
template <class Visitor>
class DownwardClosedEnumerator {
public:
  DownwardClosedEnumerator(std::size_t n, std::size_t d, bool anchored_only, EnumerationBudget budget,
                           Visitor& visit)
      : n_(n), d_(d), anchored_(anchored_only), budget_(budget), visit_(visit), seq_(d, n) {}

  std::uint64_t run() {
    seq_.push(std::vector<std::uint32_t>(d_, 0u));
    extend();
    return yielded_;
  }

private:
  bool extend() {
    std::size_t k = seq_.size();
    if (k == n_) {
      IndexSet s = seq_.to_index_set(d_);
      if (anchored_ && !s.is_anchored()) return true;
      if (yielded_ >= budget_.max_sets) throw BudgetExceeded("enumeration budget exceeded", yielded_);
      ++yielded_;
      return invoke_visitor(visit_, s);
    }
    if (anchored_ && missing_units() > n_ - k) return true;

    std::vector<std::vector<std::uint32_t>> children;
    const std::uint32_t* last = seq_.at(k - 1);
    std::vector<std::uint32_t> c(d_);
    for (std::size_t i = 0; i < k; ++i) {
      const std::uint32_t* base = seq_.at(i);
      for (std::size_t j = 0; j < d_; ++j) {
        if (j > 0 && base[j - 1] != 0) break; // j must be the first nonzero coordinate of the child
        std::copy(base, base + d_, c.begin());
        ++c[j];
        if (!DenseSequence::less(last, c.data(), d_)) continue;
        if (!predecessors_present(c)) continue;
        children.push_back(c);
      }
    }
    std::sort(children.begin(), children.end());
    for (auto& child : children) {
      seq_.push(child);
      bool go_on = extend();
      seq_.pop();
      if (!go_on) return false;
    }
    return true;
  }

  bool predecessors_present(std::vector<std::uint32_t>& c) const {
    for (std::size_t j = 0; j < d_; ++j) {
      if (c[j] == 0) continue;
      --c[j];
      bool ok = seq_.contains(c.data());
      ++c[j];
      if (!ok) return false;
    }
    return true;
  }

  // Units e_j' that an anchored completion still has to add.
  std::size_t missing_units() const {
    std::vector<bool> has(d_, false);
    for (std::size_t i = 0; i < seq_.size(); ++i) {
      const std::uint32_t* v = seq_.at(i);
      std::size_t nz = 0, pos = 0;
      for (std::size_t j = 0; j < d_; ++j)
        if (v[j] != 0) {
          ++nz;
          pos = j;
        }
      if (nz == 1 && v[pos] == 1) has[pos] = true;
    }
    std::size_t top = 0;
    for (std::size_t j = 0; j < d_; ++j)
      if (has[j]) top = j + 1;
    std::size_t missing = 0;
    for (std::size_t j = 0; j < top; ++j)
      if (!has[j]) ++missing;
    return missing;
  }

  std::size_t n_, d_;
  bool anchored_;
  EnumerationBudget budget_;
  Visitor& visit_;
  DenseSequence seq_;
  std::uint64_t yielded_ = 0;
};

} // namespace detail

/// Visits every member of M_n^d exactly once in deterministic order. The visitor
/// may return `false` to stop early. Returns the number of sets visited.
template <class Visitor>
std::uint64_t for_each_downward_closed(std::size_t n, std::size_t d, Visitor&& visit,
                                       EnumerationBudget budget = {}) {
  if (n < 1 || d < 1) throw DomainError("enumeration requires n >= 1 and d >= 1");
  detail::DownwardClosedEnumerator<std::remove_reference_t<Visitor>> e(n, d, false, budget, visit);
  return e.run();
}

/// Visits every member of A_n (support within coordinates 1..n-1).
template <class Visitor>
std::uint64_t for_each_anchored(std::size_t n, Visitor&& visit, EnumerationBudget budget = {}) {
  if (n < 1) throw DomainError("enumeration requires n >= 1");
  if (n == 1) {
    if (budget.max_sets < 1) throw BudgetExceeded("enumeration budget exceeded", 0);
    detail::invoke_visitor(visit, IndexSet{MultiIndex{}});
    return 1;
  }
  detail::DownwardClosedEnumerator<std::remove_reference_t<Visitor>> e(n, n - 1, true, budget, visit);
  return e.run();
}

/// Family dispatch: M_n^d for downward closed, A_n (d ignored) for anchored.
template <class Visitor>
std::uint64_t for_each_in_family(Family family, std::size_t n, std::size_t d, Visitor&& visit,
                                 EnumerationBudget budget = {}) {
  if (family == Family::anchored) return for_each_anchored(n, std::forward<Visitor>(visit), budget);
  return for_each_downward_closed(n, d, std::forward<Visitor>(visit), budget);
}

inline std::vector<IndexSet> enumerate_downward_closed(std::size_t n, std::size_t d, EnumerationBudget budget = {}) {
  std::vector<IndexSet> out;
  for_each_downward_closed(n, d, [&](const IndexSet& s) { out.push_back(s); }, budget);
  return out;
}

inline std::vector<IndexSet> enumerate_anchored(std::size_t n, EnumerationBudget budget = {}) {
  std::vector<IndexSet> out;
  for_each_anchored(n, [&](const IndexSet& s) { out.push_back(s); }, budget);
  return out;
}

inline std::vector<IndexSet> enumerate_family(Family family, std::size_t n, std::size_t d,
                                              EnumerationBudget budget = {}) {
  std::vector<IndexSet> out;
  for_each_in_family(family, n, d, [&](const IndexSet& s) { out.push_back(s); }, budget);
  return out;
}

/// Coordinates spanned by a family: d for M_n^d, n-1 for A_n.
inline std::size_t family_dimension(Family family, std::size_t n, std::size_t d) {
  return family == Family::anchored ? (n > 1 ? n - 1 : 0) : d;
}

/// Union of all members of the family; equals H_n^d for the downward closed family.
inline IndexSet family_union(Family family, std::size_t n, std::size_t d) {
  return hyperbolic_cross(n, family_dimension(family, n, d));
}

// ---------------------------------------------------------------------------
// Encodings

enum class EncodingKind { bitstream, pointer };

struct BitstreamEncoding {
  std::vector<std::uint8_t> bits; // one 0/1 value per entry
  std::size_t d = 0;
};

/// Tuple (j_2, l_3, j_3, ..., l_n, j_n), all 1-based.
struct PointerEncoding {
  std::vector<std::uint32_t> tuple;
  std::size_t d = 0;
};

using Encoding = std::variant<BitstreamEncoding, PointerEncoding>;

namespace detail {
inline void require_encodable(const IndexSet& set, std::size_t d) {
  if (set.empty() || !set.is_downward_closed()) throw DomainError("encoding requires a non-empty downward closed set");
  if (set.max_coordinate() > d) throw DimensionMismatch("set support exceeds the encoding dimension");
}
} // namespace detail

/// Bit (nu, j) is 1 iff nu + e_j belongs to the set; blocks follow the canonical member order.
inline BitstreamEncoding encode_bitstream(const IndexSet& set, std::size_t d) {
  detail::require_encodable(set, d);
  BitstreamEncoding e{{}, d};
  e.bits.reserve(set.size() * d);
  for (auto& nu : set)
    for (std::uint32_t j = 1; j <= d; ++j) e.bits.push_back(set.contains(nu.plus_unit(j)) ? 1 : 0);
  return e;
}

inline IndexSet decode_bitstream(const BitstreamEncoding& e, std::size_t n) {
  const std::size_t d = e.d;
  if (n < 1 || e.bits.size() != n * d) throw MalformedEncoding("bitstream length must equal n*d");
  std::vector<MultiIndex> order{MultiIndex{}};
  std::set<MultiIndex> announced;
  for (std::size_t k = 0; k < n; ++k) {
    const MultiIndex& nu = order[k];
    for (std::uint32_t j = 1; j <= d; ++j) {
      std::uint8_t b = e.bits[k * d + (j - 1)];
      if (b > 1) throw MalformedEncoding("bitstream entries must be 0 or 1");
      if (b) announced.insert(nu.plus_unit(j));
    }
    if (k + 1 < n) {
      auto it = std::find_if(announced.begin(), announced.end(), [&](const MultiIndex& c) {
        return std::find(order.begin(), order.end(), c) == order.end();
      });
      if (it == announced.end()) throw MalformedEncoding("bitstream announces fewer than n indices");
      order.push_back(*it);
    }
  }
  IndexSet out(std::move(order), d);
  if (out.size() != n || !out.is_downward_closed() || encode_bitstream(out, d).bits != e.bits)
    throw MalformedEncoding("bitstream does not describe a downward closed set of size n");
  return out;
}

/// Canonical pointer tuple: members in lexicographic order, j_k the smallest
/// coordinate with nu^k - e_{j_k} in the set, l_k the position of that predecessor.
inline PointerEncoding encode_pointer(const IndexSet& set, std::size_t d) {
  detail::require_encodable(set, d);
  PointerEncoding e{{}, d};
  for (std::size_t k = 1; k < set.size(); ++k) {
    const MultiIndex& nu = set[k];
    std::uint32_t j = nu.entries().front().first;
    auto l = set.index_of(nu.minus_unit(j));
    if (k >= 2) e.tuple.push_back(static_cast<std::uint32_t>(*l + 1));
    e.tuple.push_back(j);
  }
  return e;
}

inline IndexSet decode_pointer(const PointerEncoding& e, std::size_t n) {
  if (n < 1) throw MalformedEncoding("n must be positive");
  std::size_t expected = n == 1 ? 0 : 2 * (n - 1) - 1;
  if (e.tuple.size() != expected) throw MalformedEncoding("pointer tuple has wrong length");
  std::vector<MultiIndex> seq{MultiIndex{}};
  std::size_t pos = 0;
  for (std::size_t k = 2; k <= n; ++k) {
    std::uint32_t l = (k == 2) ? 1 : e.tuple[pos++];
    std::uint32_t j = e.tuple[pos++];
    if (l < 1 || l > k - 1) throw MalformedEncoding("pointer l_k out of range");
    if (j < 1 || j > e.d) throw MalformedEncoding("pointer j_k out of range");
    seq.push_back(seq[l - 1].plus_unit(j));
  }
  IndexSet out(seq, e.d);
  if (out.size() != n || !out.is_downward_closed())
    throw MalformedEncoding("pointer tuple does not describe a downward closed set of size n");
  return out;
}

inline Encoding encode(const IndexSet& set, EncodingKind kind, std::size_t d) {
  if (kind == EncodingKind::bitstream) return encode_bitstream(set, d);
  return encode_pointer(set, d);
}

inline IndexSet decode(const Encoding& e, std::size_t n) {
  return std::visit([n](const auto& x) {
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, BitstreamEncoding>) return decode_bitstream(x, n);
    else return decode_pointer(x, n);
  }, e);
}

/// Hex string, most significant bit first, zero padded to a whole nibble.
inline std::string bits_to_hex(const std::vector<std::uint8_t>& bits) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned v = 0;
    for (std::size_t b = 0; b < 4; ++b) v = (v << 1) | (i + b < bits.size() ? bits[i + b] : 0u);
    out.push_back(digits[v]);
  }
  return out;
}

inline std::vector<std::uint8_t> hex_to_bits(std::string_view hex, std::size_t nbits) {
  if (hex.size() != (nbits + 3) / 4) throw MalformedEncoding("hex bitstring has wrong length");
  std::vector<std::uint8_t> bits;
  bits.reserve(hex.size() * 4);
  for (char ch : hex) {
    unsigned v;
    if (ch >= '0' && ch <= '9') v = static_cast<unsigned>(ch - '0');
    else if (ch >= 'a' && ch <= 'f') v = static_cast<unsigned>(ch - 'a' + 10);
    else if (ch >= 'A' && ch <= 'F') v = static_cast<unsigned>(ch - 'A' + 10);
    else throw MalformedEncoding("invalid hex digit");
    for (int b = 3; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((v >> b) & 1u));
  }
  for (std::size_t i = nbits; i < bits.size(); ++i)
    if (bits[i]) throw MalformedEncoding("nonzero padding in hex bitstring");
  bits.resize(nbits);
  return bits;
}

// ---------------------------------------------------------------------------
// Cardinality bounds

using BigInt = boost::multiprecision::cpp_int;

struct CardinalityBounds {
  BigInt first_dc;        // 2^(n d)
  BigInt first_anchored;  // 2^(n (n-1))
  BigInt second_dc;       // d^(n-1) (n-1)!
  BigInt second_anchored; // ((n-1)!)^2
  BigInt lower_dc;        // binom(d, n-1) when n-1 <= d, else 1
};

inline CardinalityBounds cardinality_bounds(std::uint64_t n, std::uint64_t d) {
  if (n < 1 || d < 1) throw DomainError("cardinality bounds require n >= 1 and d >= 1");
  CardinalityBounds b;
  b.first_dc = BigInt(1) << static_cast<unsigned>(n * d);
  b.first_anchored = BigInt(1) << static_cast<unsigned>(n * (n - 1));
  BigInt fact = 1;
  for (std::uint64_t i = 2; i + 1 <= n; ++i) fact *= i;
  b.second_dc = boost::multiprecision::pow(BigInt(d), static_cast<unsigned>(n - 1)) * fact;
  b.second_anchored = fact * fact;
  if (n - 1 <= d) {
    BigInt c = 1;
    for (std::uint64_t i = 0; i < n - 1; ++i) c = c * (d - i) / (i + 1);
    b.lower_dc = c;
  } else {
    b.lower_dc = 1;
  }
  return b;
}

} // namespace dcls
