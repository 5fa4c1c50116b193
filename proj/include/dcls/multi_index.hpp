#pragma once

#include <algorithm>
#include <atomic>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dcls/errors.hpp"

namespace dcls {

/// Finitely supported exponent sequence nu = (nu_1, nu_2, ...).
///
/// Stored sparsely as (coordinate, exponent) pairs sorted by coordinate, with
/// 1-based coordinates and no zero exponents. Absent coordinates are 0, so the
/// same value represents nu in any ambient dimension d >= max_coordinate().
///
/// Ordering is lexicographic on the dense sequence, coordinate 1 most
/// significant. Removing a unit from any coordinate always yields a smaller
/// index, which the encodings and enumerators rely on.
class MultiIndex {
public:
  using Entry = std::pair<std::uint32_t, std::uint32_t>; // (coordinate, exponent)

  MultiIndex() = default;

  /// Dense exponents, position 0 is coordinate 1.
  MultiIndex(std::initializer_list<std::uint32_t> dense)
      : MultiIndex(std::span<const std::uint32_t>(dense.begin(), dense.size())) {}

  explicit MultiIndex(std::span<const std::uint32_t> dense) {
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i] != 0) entries_.emplace_back(static_cast<std::uint32_t>(i + 1), dense[i]);
  }

  static MultiIndex from_dense(std::span<const std::uint32_t> dense) { return MultiIndex(dense); }

  static MultiIndex from_dense(const std::vector<std::uint32_t>& dense) {
    return MultiIndex(std::span<const std::uint32_t>(dense));
  }

  /// Kronecker sequence e_j.
  static MultiIndex unit(std::uint32_t j) {
    if (j == 0) throw DomainError("MultiIndex coordinates are 1-based");
    MultiIndex e;
    e.entries_.emplace_back(j, 1u);
    return e;
  }

  std::uint32_t operator[](std::uint32_t j) const noexcept {
    auto it = find(j);
    return (it != entries_.end() && it->first == j) ? it->second : 0u;
  }

  void set(std::uint32_t j, std::uint32_t value) {
    if (j == 0) throw DomainError("MultiIndex coordinates are 1-based");
    auto it = find(j);
    bool present = it != entries_.end() && it->first == j;
    if (value == 0) {
      if (present) entries_.erase(it);
    } else if (present) {
      it->second = value;
    } else {
      entries_.insert(it, Entry{j, value});
    }
  }

  MultiIndex plus_unit(std::uint32_t j) const {
    MultiIndex r = *this;
    r.set(j, (*this)[j] + 1);
    return r;
  }

  /// nu - e_j; requires j in supp(nu).
  MultiIndex minus_unit(std::uint32_t j) const {
    std::uint32_t v = (*this)[j];
    if (v == 0) throw DomainError("minus_unit outside the support");
    MultiIndex r = *this;
    r.set(j, v - 1);
    return r;
  }

  std::span<const Entry> entries() const noexcept { return entries_; }
  bool is_zero() const noexcept { return entries_.empty(); }
  std::size_t support_size() const noexcept { return entries_.size(); }
  std::uint32_t max_coordinate() const noexcept { return entries_.empty() ? 0u : entries_.back().first; }

  std::vector<std::uint32_t> support() const {
    std::vector<std::uint32_t> s;
    s.reserve(entries_.size());
    for (auto& [j, v] : entries_) s.push_back(j);
    return s;
  }

  std::vector<std::uint32_t> dense(std::size_t d) const {
    if (max_coordinate() > d) throw DimensionMismatch("multi-index support exceeds requested dimension");
    std::vector<std::uint32_t> out(d, 0u);
    for (auto& [j, v] : entries_) out[j - 1] = v;
    return out;
  }

  /// prod_j (nu_j + 1), the cardinality of the rectangle R_nu. Saturates at UINT64_MAX.
  std::uint64_t rectangle_size() const noexcept {
    std::uint64_t p = 1;
    for (auto& [j, v] : entries_) {
      std::uint64_t f = std::uint64_t{v} + 1;
      if (p > UINT64_MAX / f) return UINT64_MAX;
      p *= f;
    }
    return p;
  }

  std::uint64_t total_degree() const noexcept {
    std::uint64_t s = 0;
    for (auto& [j, v] : entries_) s += v;
    return s;
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) noexcept {
    auto ia = a.entries_.begin(), ea = a.entries_.end();
    auto ib = b.entries_.begin(), eb = b.entries_.end();
    while (ia != ea || ib != eb) {
      if (ib == eb || (ia != ea && ia->first < ib->first)) return std::strong_ordering::greater;
      if (ia == ea || ib->first < ia->first) return std::strong_ordering::less;
      if (ia->second != ib->second) return ia->second <=> ib->second;
      ++ia;
      ++ib;
    }
    return std::strong_ordering::equal;
  }

private:
  std::vector<Entry>::iterator find(std::uint32_t j) {
    return std::lower_bound(entries_.begin(), entries_.end(), j,
                            [](const Entry& e, std::uint32_t c) { return e.first < c; });
  }
  std::vector<Entry>::const_iterator find(std::uint32_t j) const {
    return std::lower_bound(entries_.begin(), entries_.end(), j,
                            [](const Entry& e, std::uint32_t c) { return e.first < c; });
  }

  std::vector<Entry> entries_;
};

/// Component-wise partial order mu <= nu.
inline bool componentwise_leq(const MultiIndex& mu, const MultiIndex& nu) noexcept {
  for (auto& [j, v] : mu.entries())
    if (v > nu[j]) return false;
  return true;
}

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& nu) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (auto& [j, v] : nu.entries()) {
      h ^= (std::uint64_t{j} << 32 | v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Finite set of multi-indices kept in canonical (lexicographic) order.
///
/// The structural flags are computed on first query and cached; the cache is
/// written idempotently so concurrent readers are safe.
class IndexSet {
public:
  IndexSet() = default;

  /// Sorts and removes duplicates. `ambient_dim` is raised to the largest coordinate in use.
  explicit IndexSet(std::vector<MultiIndex> members, std::size_t ambient_dim = 0)
      : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    dim_ = ambient_dim;
    for (auto& m : members_) dim_ = std::max<std::size_t>(dim_, m.max_coordinate());
  }

  IndexSet(std::initializer_list<MultiIndex> members, std::size_t ambient_dim = 0)
      : IndexSet(std::vector<MultiIndex>(members), ambient_dim) {}

  IndexSet(const IndexSet& o) : members_(o.members_), dim_(o.dim_), dc_(o.dc_.load()), anchored_(o.anchored_.load()) {}
  IndexSet(IndexSet&& o) noexcept
      : members_(std::move(o.members_)), dim_(o.dim_), dc_(o.dc_.load()), anchored_(o.anchored_.load()) {}
  IndexSet& operator=(const IndexSet& o) {
    if (this != &o) {
      members_ = o.members_;
      dim_ = o.dim_;
      dc_ = o.dc_.load();
      anchored_ = o.anchored_.load();
    }
    return *this;
  }
  IndexSet& operator=(IndexSet&& o) noexcept {
    members_ = std::move(o.members_);
    dim_ = o.dim_;
    dc_ = o.dc_.load();
    anchored_ = o.anchored_.load();
    return *this;
  }

  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  const std::vector<MultiIndex>& members() const noexcept { return members_; }
  const MultiIndex& operator[](std::size_t k) const { return members_[k]; }
  auto begin() const noexcept { return members_.begin(); }
  auto end() const noexcept { return members_.end(); }

  /// Effective dimension: declared ambient dimension or largest used coordinate.
  std::size_t dimension() const noexcept { return dim_; }

  std::uint32_t max_coordinate() const noexcept {
    std::uint32_t c = 0;
    for (auto& m : members_) c = std::max(c, m.max_coordinate());
    return c;
  }

  bool contains(const MultiIndex& nu) const noexcept {
    return std::binary_search(members_.begin(), members_.end(), nu);
  }

  std::optional<std::size_t> index_of(const MultiIndex& nu) const noexcept {
    auto it = std::lower_bound(members_.begin(), members_.end(), nu);
    if (it == members_.end() || *it != nu) return std::nullopt;
    return static_cast<std::size_t>(it - members_.begin());
  }

  bool is_downward_closed() const {
    auto s = dc_.load(std::memory_order_acquire);
    if (s < 0) {
      s = compute_downward_closed() ? 1 : 0;
      dc_.store(s, std::memory_order_release);
    }
    return s == 1;
  }

  bool is_anchored() const {
    auto s = anchored_.load(std::memory_order_acquire);
    if (s < 0) {
      s = (is_downward_closed() && compute_units_contiguous()) ? 1 : 0;
      anchored_.store(s, std::memory_order_release);
    }
    return s == 1;
  }

  bool is_subset_of(const IndexSet& other) const {
    return std::includes(other.members_.begin(), other.members_.end(), members_.begin(), members_.end());
  }

  friend bool operator==(const IndexSet& a, const IndexSet& b) { return a.members_ == b.members_; }

private:
  // One-step predecessors suffice: if every nu - e_j is present, induction
  // gives every mu <= nu.
  bool compute_downward_closed() const {
    for (auto& nu : members_)
      for (auto& [j, v] : nu.entries())
        if (!contains(nu.minus_unit(j))) return false;
    return true;
  }

  bool compute_units_contiguous() const {
    std::vector<std::uint32_t> units;
    for (auto& nu : members_)
      if (nu.support_size() == 1 && nu.entries()[0].second == 1) units.push_back(nu.entries()[0].first);
    std::sort(units.begin(), units.end());
    for (std::size_t i = 0; i < units.size(); ++i)
      if (units[i] != i + 1) return false;
    return true;
  }

  std::vector<MultiIndex> members_;
  std::size_t dim_ = 0;
  mutable std::atomic<std::int8_t> dc_{-1};
  mutable std::atomic<std::int8_t> anchored_{-1};
};

inline bool is_downward_closed(const IndexSet& set) { return set.is_downward_closed(); }
inline bool is_anchored(const IndexSet& set) { return set.is_anchored(); }

} // namespace dcls
