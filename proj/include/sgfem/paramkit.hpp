#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sgfem::param {

/// Finitely supported multi-index, stored sparsely as (dimension, degree)
/// pairs with strictly increasing dimensions (>= 1) and degrees >= 1.
/// The default-constructed index is the zero index.
class MultiIndex {
 public:
  using Entry = std::pair<std::uint32_t, std::uint32_t>;

  MultiIndex() = default;
  /// Accepts entries in any order; zero degrees are dropped. Repeated
  /// dimensions or dimension 0 are rejected.
  explicit MultiIndex(std::vector<Entry> entries);

  static MultiIndex unit(std::uint32_t dimension, std::uint32_t degree = 1);

  std::span<const Entry> entries() const { return entries_; }
  bool is_zero() const { return entries_.empty(); }
  std::uint32_t degree(std::uint32_t dimension) const;
  std::uint32_t total_degree() const;
  /// Largest dimension in the support; 0 for the zero index.
  std::uint32_t max_dimension() const { return entries_.empty() ? 0 : entries_.back().first; }

  /// this ± e_m, or nullopt when a component would turn negative.
  std::optional<MultiIndex> shifted(std::uint32_t dimension, int delta) const;

  std::string to_string() const;
  static MultiIndex parse(std::string_view text);

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<Entry> entries_;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& nu) const noexcept;
};

/// Total degree first, then lexicographic over the (dimension, degree) pairs.
bool canonical_less(const MultiIndex& a, const MultiIndex& b);

/// Ordered set of distinct multi-indices. Order is creation order; members
/// added later are appended in canonical order. Active index sets contain the
/// zero index in front; detail sets never contain it.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<MultiIndex> members);

  /// {0}
  static IndexSet initial();

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const MultiIndex& operator[](std::size_t i) const { return members_[i]; }
  std::span<const MultiIndex> members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  std::optional<std::size_t> find(const MultiIndex& nu) const;
  bool contains(const MultiIndex& nu) const { return find(nu).has_value(); }
  bool has_zero() const { return contains(MultiIndex{}); }

  /// This set followed by the members of `added` not already present, in
  /// canonical order.
  IndexSet united(std::span<const MultiIndex> added) const;
  bool includes(const IndexSet& other) const;

  friend bool operator==(const IndexSet& a, const IndexSet& b) { return a.members_ == b.members_; }

 private:
  std::vector<MultiIndex> members_;
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> position_;
};

/// 0 for {0}, otherwise the largest active dimension.
std::uint32_t active_dimension(const IndexSet& indices);

/// Neighbours ν ± e_m (m <= active_dimension + 1) of members that lie outside
/// the set, in canonical order.
IndexSet detail_index_set(const IndexSet& indices);

/// Orthonormal Legendre polynomial for the measure dy/2 on [-1,1].
double legendre(std::uint32_t n, double y);

/// c_n = ∫ y P_n P_{n-1} dy/2 = n / sqrt(4n^2 - 1); y P_n = c_{n+1} P_{n+1} + c_n P_{n-1}.
double coupling_coefficient(std::uint32_t n);

/// One index per line: "m1:d1 m2:d2 ...", the zero index as "-".
std::string dump(const IndexSet& indices);
IndexSet parse_dump(std::string_view text);

}  // namespace sgfem::param
