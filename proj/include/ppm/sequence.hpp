#ifndef PPM_SEQUENCE_HPP
#define PPM_SEQUENCE_HPP

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <vector>

namespace ppm {

/// First min(k, |s|) elements of a sequence.
template <typename T>
std::span<const T> hd(std::span<const T> s, std::size_t k) {
  return s.first(std::min(k, s.size()));
}

/// Last min(k, |s|) elements of a sequence.
template <typename T>
std::span<const T> tl(std::span<const T> s, std::size_t k) {
  return s.last(std::min(k, s.size()));
}

/// Keeps the elements of `s` that belong to `keep`, in order.
template <typename T>
std::vector<T> project(std::span<const T> s, const std::set<T>& keep) {
  std::vector<T> out;
  for (const auto& x : s)
    if (keep.contains(x)) out.push_back(x);
  return out;
}

/// Bag over T: every stored element has a strictly positive multiplicity.
template <typename T>
class Multiset {
public:
  using Map = std::map<T, std::size_t>;

  Multiset() = default;

  template <typename Range>
  static Multiset from(const Range& r) {
    Multiset m;
    for (const auto& x : r) m.add(x);
    return m;
  }

  void add(const T& x, std::size_t n = 1) {
    if (n > 0) counts_[x] += n;
  }

  std::size_t count(const T& x) const {
    auto it = counts_.find(x);
    return it == counts_.end() ? 0 : it->second;
  }

  /// #M: sum of multiplicities.
  std::size_t cardinality() const {
    std::size_t n = 0;
    for (const auto& [_, c] : counts_) n += c;
    return n;
  }

  bool empty() const { return counts_.empty(); }
  std::size_t distinct() const { return counts_.size(); }
  const Map& counts() const { return counts_; }
  auto begin() const { return counts_.begin(); }
  auto end() const { return counts_.end(); }

  /// Per-element minimum.
  Multiset intersection(const Multiset& other) const {
    Multiset out;
    for (const auto& [x, c] : counts_) {
      std::size_t m = std::min(c, other.count(x));
      if (m > 0) out.counts_.emplace(x, m);
    }
    return out;
  }

  /// Per-element maximum.
  Multiset union_with(const Multiset& other) const {
    Multiset out = *this;
    for (const auto& [x, c] : other.counts_) {
      auto& slot = out.counts_[x];
      slot = std::max(slot, c);
    }
    return out;
  }

  /// Disjoint union: per-element sum.
  Multiset sum(const Multiset& other) const {
    Multiset out = *this;
    for (const auto& [x, c] : other.counts_) out.counts_[x] += c;
    return out;
  }

  /// Elements expanded by multiplicity, in ascending order.
  std::vector<T> elements() const {
    std::vector<T> out;
    for (const auto& [x, c] : counts_) out.insert(out.end(), c, x);
    return out;
  }

  friend bool operator==(const Multiset&, const Multiset&) = default;
  friend auto operator<=>(const Multiset& a, const Multiset& b) {
    return a.counts_ <=> b.counts_;
  }

private:
  Map counts_;
};

} // namespace ppm

#endif // PPM_SEQUENCE_HPP
