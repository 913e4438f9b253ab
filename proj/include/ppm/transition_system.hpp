#ifndef PPM_TRANSITION_SYSTEM_HPP
#define PPM_TRANSITION_SYSTEM_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ppm/abstraction.hpp"
#include "ppm/error.hpp"
#include "ppm/event_log.hpp"

namespace ppm {

using StateId = std::size_t;

struct Transition {
  StateId source = 0;
  std::string label;
  StateId target = 0;
  /// Number of log positions that fired this transition.
  std::size_t frequency = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Labeled transition system mined from a log. State 0 is the unique start
/// state; states 1..n are enumerated in first-construction order and index
/// the state encoding block (state s -> slot s - 1).
class TransitionSystem {
public:
  TransitionSystem() = default;

  /// Assembles a system from explicit parts. `states[0]` must be the start state.
  TransitionSystem(StateAbstraction abs, std::vector<StateRepr> states,
                   std::vector<Transition> transitions, std::vector<std::size_t> end_counts)
      : abstraction_(abs), states_(std::move(states)), transitions_(std::move(transitions)),
        end_counts_(std::move(end_counts)) {
    if (states_.empty()) throw InvalidArgument("a transition system needs a start state");
    if (end_counts_.size() != states_.size())
      throw InvalidArgument("end counts must cover every state");
    for (StateId s = 0; s < states_.size(); ++s)
      if (!index_.emplace(states_[s], s).second)
        throw InvalidArgument("duplicate state " + states_[s].to_string());
    outgoing_.resize(states_.size());
    incoming_.resize(states_.size());
    for (std::size_t t = 0; t < transitions_.size(); ++t) {
      const auto& tr = transitions_[t];
      if (tr.source >= states_.size() || tr.target >= states_.size())
        throw InvalidArgument("transition endpoint outside the state space");
      if (!transition_index_.emplace(std::tuple{tr.source, tr.label, tr.target}, t).second)
        throw InvalidArgument("duplicate transition");
      outgoing_[tr.source].push_back(t);
      incoming_[tr.target].push_back(t);
      labels_.insert(tr.label);
    }
  }

  const StateAbstraction& abstraction() const { return abstraction_; }
  std::size_t state_count() const { return states_.size(); }
  static constexpr StateId start_state() { return 0; }
  const StateRepr& state(StateId s) const { return states_.at(s); }
  const std::vector<StateRepr>& states() const { return states_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const Transition& transition(std::size_t t) const { return transitions_.at(t); }
  const std::set<std::string>& event_labels() const { return labels_; }

  /// Transition indices leaving / entering a state.
  const std::vector<std::size_t>& outgoing(StateId s) const { return outgoing_.at(s); }
  const std::vector<std::size_t>& incoming(StateId s) const { return incoming_.at(s); }

  /// s•: distinct successor states.
  std::vector<StateId> successors(StateId s) const {
    std::set<StateId> out;
    for (auto t : outgoing_.at(s)) out.insert(transitions_[t].target);
    return {out.begin(), out.end()};
  }

  bool is_accepting(StateId s) const { return end_counts_.at(s) > 0; }
  /// Number of log traces that end in `s`.
  std::size_t end_count(StateId s) const { return end_counts_.at(s); }
  const std::vector<std::size_t>& end_counts() const { return end_counts_; }

  std::size_t accepting_count() const {
    std::size_t n = 0;
    for (auto c : end_counts_) n += c > 0 ? 1 : 0;
    return n;
  }

  std::optional<StateId> find(const StateRepr& r) const {
    auto it = index_.find(r);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find_transition(StateId from, const std::string& label, StateId to) const {
    auto it = transition_index_.find(std::tuple{from, label, to});
    if (it == transition_index_.end()) return std::nullopt;
    return it->second;
  }

  /// |S \ S_start|: size of the state encoding block.
  std::size_t encoding_size() const { return states_.empty() ? 0 : states_.size() - 1; }

private:
  StateAbstraction abstraction_;
  std::vector<StateRepr> states_;
  std::vector<Transition> transitions_;
  std::vector<std::size_t> end_counts_;
  std::map<StateRepr, StateId> index_;
  std::map<std::tuple<StateId, std::string, StateId>, std::size_t> transition_index_;
  std::vector<std::vector<std::size_t>> outgoing_, incoming_;
  std::set<std::string> labels_;
};

/// Two passes over the log: states from every non-empty prefix, then the
/// transitions between consecutive prefixes.
inline TransitionSystem build_ts(const EventLog& log, const StateAbstraction& abs,
                                 EventAbstraction ev_abs = EventAbstraction::activity_name) {
  if (log.empty()) throw InvalidArgument("cannot build a transition system from an empty log");
  std::vector<StateRepr> states{represent_state(abs, std::span<const Event>{})};
  std::map<StateRepr, StateId> index{{states[0], 0}};
  auto intern = [&](StateRepr r) {
    auto [it, inserted] = index.try_emplace(r, states.size());
    if (inserted) states.push_back(std::move(r));
    return it->second;
  };
  for (const auto& t : log.traces())
    for (std::size_t k = 1; k <= t.size(); ++k) intern(represent_state(abs, hd(t.view(), k)));

  std::vector<Transition> transitions;
  std::map<std::tuple<StateId, std::string, StateId>, std::size_t> tindex;
  std::vector<std::size_t> end_counts(states.size(), 0);
  for (const auto& t : log.traces()) {
    StateId s = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      std::string e = represent_event(ev_abs, t.events[k]);
      StateId next = index.at(represent_state(abs, hd(t.view(), k + 1)));
      auto [it, inserted] = tindex.try_emplace(std::tuple{s, e, next}, transitions.size());
      if (inserted) transitions.push_back(Transition{s, e, next, 0});
      ++transitions[it->second].frequency;
      s = next;
    }
    ++end_counts[s];
  }
  return TransitionSystem(abs, std::move(states), std::move(transitions), std::move(end_counts));
}

struct MappedState {
  StateRepr repr;
  std::optional<StateId> state;
  bool fitting() const { return state.has_value(); }
};

inline MappedState map_state(const TransitionSystem& ts, std::span<const Event> trace) {
  MappedState m{represent_state(ts.abstraction(), trace), std::nullopt};
  m.state = ts.find(m.repr);
  return m;
}

struct StateEncoding {
  std::vector<double> values;
  bool fitting = true;
  /// Every similarity was zero; the vector is uniform.
  bool degenerate = false;
};

/// One-hot over S \ S_start for fitting traces, normalized similarity to
/// every non-start state otherwise, zero vector for the empty trace.
inline StateEncoding encode_state(const TransitionSystem& ts, std::span<const Event> trace,
                                  const SimilarityFn& sim) {
  const std::size_t n = ts.encoding_size();
  if (n == 0) throw InvalidArgument("transition system has no non-start state");
  StateEncoding out{std::vector<double>(n, 0.0), true, false};
  if (trace.empty()) return out;
  auto m = map_state(ts, trace);
  if (m.state) {
    out.values[*m.state - 1] = 1.0;
    return out;
  }
  out.fitting = false;
  double den = 0.0;
  for (StateId s = 1; s < ts.state_count(); ++s) {
    double v = sim(m.repr, ts.state(s));
    out.values[s - 1] = v;
    den += v;
  }
  if (den <= 0.0) {
    out.degenerate = true;
    std::fill(out.values.begin(), out.values.end(), 1.0 / static_cast<double>(n));
    return out;
  }
  for (auto& v : out.values) v /= den;
  return out;
}

struct SafetyResult {
  StateId state = 0;
  /// Length of the prefix that mapped onto `state`.
  std::size_t prefix_length = 0;
  /// At least one trailing event had to be dropped.
  bool truncated = false;
  /// Only the empty prefix fits; callers use the global average.
  bool fallback = false;
};

/// Drops trailing events until the prefix maps onto a known state.
inline SafetyResult safety_prefix(const TransitionSystem& ts, std::span<const Event> trace) {
  for (std::size_t i = trace.size(); i > 0; --i) {
    if (auto s = ts.find(represent_state(ts.abstraction(), trace.first(i))))
      return SafetyResult{*s, i, i < trace.size(), false};
  }
  return SafetyResult{TransitionSystem::start_state(), 0, !trace.empty(), true};
}

/// Graphviz rendering; accepting states are drawn with a double circle.
inline std::string to_dot(const TransitionSystem& ts) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out + "\"";
  };
  std::ostringstream out;
  out << "digraph ts {\n  rankdir=LR;\n";
  for (StateId s = 0; s < ts.state_count(); ++s) {
    out << "  s" << s << " [label=" << quote("s" + std::to_string(s) + " " + ts.state(s).to_string())
        << ", shape=" << (ts.is_accepting(s) ? "doublecircle" : "circle")
        << (s == 0 ? ", style=bold" : "") << "];\n";
  }
  for (const auto& t : ts.transitions())
    out << "  s" << t.source << " -> s" << t.target << " [label=" << quote(t.label) << "];\n";
  out << "}\n";
  return out.str();
}

} // namespace ppm

#endif // PPM_TRANSITION_SYSTEM_HPP
