#ifndef PPM_ABSTRACTION_HPP
#define PPM_ABSTRACTION_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ppm/error.hpp"
#include "ppm/event_log.hpp"
#include "ppm/sequence.hpp"

namespace ppm {

enum class EventAbstraction { activity_name };

inline std::string represent_event(EventAbstraction, const Event& e) { return e.activity; }

enum class StateKind { set, multiset, sequence };

/// State representation function: kind plus an optional horizon (last h events).
struct StateAbstraction {
  StateKind kind = StateKind::set;
  std::optional<std::size_t> horizon;

  /// `set | multiset | seq` with an optional `:h` suffix.
  static StateAbstraction parse(std::string_view text) {
    StateAbstraction a;
    auto colon = text.find(':');
    std::string_view name = text.substr(0, colon);
    if (name == "set")
      a.kind = StateKind::set;
    else if (name == "multiset" || name == "bag")
      a.kind = StateKind::multiset;
    else if (name == "seq" || name == "sequence" || name == "list")
      a.kind = StateKind::sequence;
    else
      throw InvalidArgument("unknown abstraction '" + std::string(text) + "'");
    if (colon != std::string_view::npos) {
      int h = 0;
      if (!detail::parse_int(text.substr(colon + 1), h) || h < 1)
        throw InvalidArgument("horizon must be a positive integer in '" + std::string(text) + "'");
      a.horizon = static_cast<std::size_t>(h);
    }
    return a;
  }

  std::string to_string() const {
    std::string s = kind == StateKind::set ? "set" : kind == StateKind::multiset ? "multiset" : "seq";
    if (horizon) s += ":" + std::to_string(*horizon);
    return s;
  }

  friend bool operator==(const StateAbstraction&, const StateAbstraction&) = default;
};

using ActivitySet = std::set<std::string>;
using ActivityBag = Multiset<std::string>;
using ActivitySequence = std::vector<std::string>;

/// Canonical, ordered, hashable state value.
class StateRepr {
public:
  using Value = std::variant<ActivitySet, ActivityBag, ActivitySequence>;

  StateRepr() = default;
  explicit StateRepr(ActivitySet s) : value_(std::move(s)) {}
  explicit StateRepr(ActivityBag b) : value_(std::move(b)) {}
  explicit StateRepr(ActivitySequence q) : value_(std::move(q)) {}

  StateKind kind() const { return static_cast<StateKind>(value_.index()); }
  const Value& value() const { return value_; }
  const ActivitySet& as_set() const { return std::get<ActivitySet>(value_); }
  const ActivityBag& as_bag() const { return std::get<ActivityBag>(value_); }
  const ActivitySequence& as_sequence() const { return std::get<ActivitySequence>(value_); }

  bool empty() const {
    return std::visit([](const auto& v) { return v.empty(); }, value_);
  }

  /// Activity names with repetition (sorted for set/bag, in order for sequences).
  std::vector<std::string> items() const {
    switch (kind()) {
      case StateKind::set: return {as_set().begin(), as_set().end()};
      case StateKind::multiset: return as_bag().elements();
      case StateKind::sequence: return as_sequence();
    }
    return {};
  }

  /// `{A,B}`, `[A:1,B:2]` or `<A,B>`.
  std::string to_string() const {
    std::string out;
    auto join = [&](const auto& range, auto fmt) {
      bool first = true;
      for (const auto& x : range) {
        if (!first) out += ',';
        first = false;
        fmt(x);
      }
    };
    switch (kind()) {
      case StateKind::set:
        out = "{";
        join(as_set(), [&](const std::string& a) { out += a; });
        out += "}";
        break;
      case StateKind::multiset:
        out = "[";
        join(as_bag().counts(), [&](const auto& kv) { out += kv.first + ":" + std::to_string(kv.second); });
        out += "]";
        break;
      case StateKind::sequence:
        out = "<";
        join(as_sequence(), [&](const std::string& a) { out += a; });
        out += ">";
        break;
    }
    return out;
  }

  friend bool operator==(const StateRepr&, const StateRepr&) = default;
  friend bool operator<(const StateRepr& a, const StateRepr& b) { return a.value_ < b.value_; }

private:
  Value value_;
};

/// Representation of a trace prefix; the horizon keeps the last h events first.
inline StateRepr represent_state(const StateAbstraction& abs, std::span<const Event> prefix) {
  if (abs.horizon) prefix = tl(prefix, *abs.horizon);
  switch (abs.kind) {
    case StateKind::set: {
      ActivitySet s;
      for (const auto& e : prefix) s.insert(e.activity);
      return StateRepr(std::move(s));
    }
    case StateKind::multiset: {
      ActivityBag b;
      for (const auto& e : prefix) b.add(e.activity);
      return StateRepr(std::move(b));
    }
    case StateKind::sequence: {
      ActivitySequence q;
      q.reserve(prefix.size());
      for (const auto& e : prefix) q.push_back(e.activity);
      return StateRepr(std::move(q));
    }
  }
  throw InvalidArgument("unknown state abstraction");
}

inline StateRepr represent_state(const StateAbstraction& abs, const Trace& prefix) {
  return represent_state(abs, prefix.view());
}

// ---------------------------------------------------------------------------
// Similarities

/// Bijective activity-name <-> integer code dictionary.
class ActivityCodec {
public:
  std::uint32_t encode(const std::string& name) {
    auto [it, inserted] = codes_.try_emplace(name, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::vector<std::uint32_t> encode(std::span<const std::string> names) {
    std::vector<std::uint32_t> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(encode(n));
    return out;
  }

  const std::string& decode(std::uint32_t code) const { return names_.at(code); }
  std::size_t size() const { return names_.size(); }

private:
  std::unordered_map<std::string, std::uint32_t> codes_;
  std::vector<std::string> names_;
};

/// Unrestricted Damerau-Levenshtein distance (insertions, deletions,
/// substitutions and transpositions of adjacent symbols, which may be edited
/// further). Satisfies the triangle inequality.
template <typename T>
std::size_t damerau_levenshtein(std::span<const T> a, std::span<const T> b) {
  const std::size_t n = a.size(), m = b.size();
  const std::size_t inf = n + m;
  // d has a sentinel row/column; cell (i+1, j+1) is the distance of a[:i], b[:j].
  std::vector<std::size_t> d((n + 2) * (m + 2));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 2) + j]; };
  at(0, 0) = inf;
  for (std::size_t i = 0; i <= n; ++i) {
    at(i + 1, 0) = inf;
    at(i + 1, 1) = i;
  }
  for (std::size_t j = 0; j <= m; ++j) {
    at(0, j + 1) = inf;
    at(1, j + 1) = j;
  }
  std::map<T, std::size_t> last_row;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t last_col = 0;
    for (std::size_t j = 1; j <= m; ++j) {
      auto it = last_row.find(b[j - 1]);
      std::size_t i1 = it == last_row.end() ? 0 : it->second;
      std::size_t j1 = last_col;
      std::size_t cost = 1;
      if (a[i - 1] == b[j - 1]) {
        cost = 0;
        last_col = j;
      }
      at(i + 1, j + 1) = std::min({at(i, j) + cost, at(i + 1, j) + 1, at(i, j + 1) + 1,
                                   at(i1, j1) + (i - i1 - 1) + 1 + (j - j1 - 1)});
    }
    last_row[a[i - 1]] = i;
  }
  return at(n + 1, m + 1);
}

/// Jaccard similarity; 1 when both sets are empty.
inline double sim_set(const ActivitySet& x1, const ActivitySet& x2) {
  if (x1.empty() && x2.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& a : x1) common += x2.contains(a) ? 1 : 0;
  return static_cast<double>(common) / static_cast<double>(x1.size() + x2.size() - common);
}

/// Multiset Jaccard: sum of per-element minima over sum of per-element maxima.
inline double sim_bag(const ActivityBag& x1, const ActivityBag& x2) {
  if (x1.empty() && x2.empty()) return 1.0;
  return static_cast<double>(x1.intersection(x2).cardinality()) /
         static_cast<double>(x1.union_with(x2).cardinality());
}

/// 1 - DL(x1, x2) / max(|x1|, |x2|); 1 when both are empty.
inline double sim_list(std::span<const std::string> x1, std::span<const std::string> x2) {
  if (x1.empty() && x2.empty()) return 1.0;
  ActivityCodec codec;
  auto c1 = codec.encode(x1);
  auto c2 = codec.encode(x2);
  auto dist = damerau_levenshtein<std::uint32_t>(c1, c2);
  return 1.0 - static_cast<double>(dist) / static_cast<double>(std::max(x1.size(), x2.size()));
}

using SimilarityFn = std::function<double(const StateRepr&, const StateRepr&)>;

inline SimilarityFn similarity_for(StateKind kind) {
  switch (kind) {
    case StateKind::set:
      return [](const StateRepr& a, const StateRepr& b) { return sim_set(a.as_set(), b.as_set()); };
    case StateKind::multiset:
      return [](const StateRepr& a, const StateRepr& b) { return sim_bag(a.as_bag(), b.as_bag()); };
    case StateKind::sequence:
      return [](const StateRepr& a, const StateRepr& b) {
        return sim_list(a.as_sequence(), b.as_sequence());
      };
  }
  throw InvalidArgument("no similarity for this abstraction kind");
}

inline SimilarityFn similarity_for(const StateAbstraction& abs) { return similarity_for(abs.kind); }

} // namespace ppm

#endif // PPM_ABSTRACTION_HPP
