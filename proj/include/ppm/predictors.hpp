#ifndef PPM_PREDICTORS_HPP
#define PPM_PREDICTORS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ppm/abstraction.hpp"
#include "ppm/encoding.hpp"
#include "ppm/error.hpp"
#include "ppm/event_log.hpp"
#include "ppm/naive_bayes.hpp"
#include "ppm/svr.hpp"
#include "ppm/transition_system.hpp"

namespace ppm {

enum class PredictorKind { vda, svr, svr_ts, dats };

inline std::string to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::vda: return "vda";
    case PredictorKind::svr: return "svr";
    case PredictorKind::svr_ts: return "svr_ts";
    case PredictorKind::dats: return "dats";
  }
  return "?";
}

inline PredictorKind parse_predictor_kind(std::string_view s) {
  if (s == "vda") return PredictorKind::vda;
  if (s == "svr") return PredictorKind::svr;
  if (s == "svr_ts" || s == "svr+ts" || s == "svr-ts") return PredictorKind::svr_ts;
  if (s == "dats") return PredictorKind::dats;
  throw InvalidArgument("unknown predictor '" + std::string(s) + "' (expected vda, svr, svr_ts or dats)");
}

enum class VdaStatistic { mean, median };

inline std::string to_string(VdaStatistic s) { return s == VdaStatistic::mean ? "mean" : "median"; }

inline VdaStatistic parse_vda_statistic(std::string_view s) {
  if (s == "mean") return VdaStatistic::mean;
  if (s == "median") return VdaStatistic::median;
  throw InvalidArgument("unknown statistic '" + std::string(s) + "' (expected mean or median)");
}

struct RegressorOptions {
  /// Pick C and gamma by inner-fold grid search; otherwise use `C` and `gamma`.
  bool grid = true;
  std::size_t folds = 3;
  std::vector<double> C_grid{0.1, 1, 10, 100};
  std::vector<double> gamma_grid{0.01, 0.1, 1};
  double C = 10.0;
  double gamma = 0.1;
  /// epsilon as a fraction of the target standard deviation.
  double epsilon_fraction = 0.01;
  double tolerance = 1e-3;
  std::size_t max_iterations = 100'000;
  /// Larger training sets are subsampled (seeded) down to this size.
  std::size_t max_examples = 600;

  friend bool operator==(const RegressorOptions&, const RegressorOptions&) = default;
};

struct TrainOptions {
  PredictorKind kind = PredictorKind::dats;
  StateAbstraction abstraction{StateKind::set, std::nullopt};
  VdaStatistic statistic = VdaStatistic::mean;
  bool scale_numeric = true;
  double nb_alpha = 1.0;
  RegressorOptions svr;
  RegressorOptions transition_svr{false, 3, {0.1, 1, 10, 100}, {0.01, 0.1, 1}, 10.0, 0.5, 0.01, 1e-3, 100'000, 600};
  std::uint64_t seed = 42;
  /// Keep training traces (ids, activities, timestamps) for similar-trace lookup.
  bool keep_history = true;

  friend bool operator==(const TrainOptions&, const TrainOptions&) = default;
};

/// Remaining-time regressor: a constant or an SVR on targets divided by their standard deviation.
struct TimeRegressor {
  bool constant = true;
  double value = 0.0;
  /// y = offset + scale * f(x).
  double offset = 0.0;
  double scale = 1.0;
  SvrModel model;
  std::size_t examples = 0;

  double predict(std::span<const double> x) const {
    if (constant) return value;
    return offset + scale * model.predict(x);
  }
};

namespace detail {

/// Seeded subsample without replacement; keeps the original order.
inline TrainingSet subsample(const TrainingSet& tr, std::size_t n, std::uint64_t seed) {
  if (tr.size() <= n) return tr;
  std::vector<std::size_t> idx(tr.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  TrainingSet out;
  for (auto i : idx) out.add(tr.x[i], tr.y[i]);
  return out;
}

inline double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace detail

/// Fewer than two examples, or constant targets, give a constant regressor
/// (`fallback` when there are none at all).
inline TimeRegressor train_regressor(const TrainingSet& full, const RegressorOptions& opt, double fallback,
                                     std::uint64_t seed) {
  TimeRegressor r;
  r.examples = full.size();
  if (full.size() < 2) {
    r.value = full.empty() ? fallback : full.y.front();
    return r;
  }
  TrainingSet tr = detail::subsample(full, opt.max_examples, seed);
  const double mean = detail::mean_of(tr.y);
  double var = 0.0;
  for (double y : tr.y) var += (y - mean) * (y - mean);
  const double sd = std::sqrt(var / static_cast<double>(tr.size()));
  if (!(sd > 0.0)) {
    r.value = mean;
    return r;
  }
  for (auto& y : tr.y) y /= sd;
  r.constant = false;
  r.offset = 0.0;
  r.scale = sd;
  const double eps = opt.epsilon_fraction;
  if (opt.grid && tr.size() >= 2 * opt.folds) {
    GridSearchOptions g;
    g.folds = opt.folds;
    g.C_grid = opt.C_grid;
    g.gamma_grid = opt.gamma_grid;
    g.epsilon = eps;
    g.tolerance = opt.tolerance;
    g.max_iterations = opt.max_iterations;
    g.seed = seed;
    r.model = grid_search(tr, g).model;
  } else {
    SvrParams p;
    p.C = opt.C;
    p.epsilon = eps;
    p.tolerance = opt.tolerance;
    p.max_iterations = opt.max_iterations;
    r.model = svr_train(tr, Kernel::rbf(opt.gamma), p);
  }
  return r;
}

struct HistoryTrace {
  std::string case_id;
  std::vector<std::string> activities;
  std::vector<Timestamp> timestamps;

  friend bool operator==(const HistoryTrace&, const HistoryTrace&) = default;
};

/// One of the four remaining-time predictors. Fields not used by `kind`
/// stay empty.
struct PredictorModel {
  PredictorKind kind = PredictorKind::dats;
  TrainOptions options;
  EncodingSchema schema;
  /// Absent for plain svr.
  std::optional<TransitionSystem> ts;
  double global_mean = 0.0;

  // vda: remaining-time measurements per state and their statistic
  std::vector<std::vector<double>> measurements;
  std::vector<std::optional<double>> state_value;

  // svr, svr_ts
  TimeRegressor regressor;

  // dats: NB per state with at least two successors, a regressor per transition
  std::map<StateId, NaiveBayes> nb;
  std::vector<TimeRegressor> transition_regressors;

  std::vector<HistoryTrace> history;

  StateContext state_context() const { return StateContext{*ts, similarity_for(ts->abstraction())}; }
};

inline double statistic_of(std::vector<double> values, VdaStatistic stat) {
  if (values.empty()) throw InvalidArgument("statistic of an empty multiset");
  if (stat == VdaStatistic::mean) return detail::mean_of(values);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

/// Caches the per-state statistic from the stored measurements.
inline void refresh_state_values(PredictorModel& m) {
  m.state_value.assign(m.measurements.size(), std::nullopt);
  for (std::size_t s = 0; s < m.measurements.size(); ++s)
    if (!m.measurements[s].empty()) m.state_value[s] = statistic_of(m.measurements[s], m.options.statistic);
}

namespace detail {

inline double global_mean_remaining(const EventLog& log) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : log.traces())
    for (std::size_t k = 1; k <= t.size(); ++k) {
      sum += static_cast<double>(rem(t, k));
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline std::vector<HistoryTrace> history_of(const EventLog& log) {
  std::vector<HistoryTrace> h;
  for (const auto& t : log.traces()) {
    HistoryTrace ht{t.case_id, t.activities(), {}};
    for (const auto& e : t.events) ht.timestamps.push_back(e.timestamp);
    h.push_back(std::move(ht));
  }
  return h;
}

inline PredictorModel base_model(const EventLog& log, const TrainOptions& opt) {
  if (log.empty()) throw InvalidArgument("cannot train on an empty log");
  PredictorModel m;
  m.kind = opt.kind;
  m.options = opt;
  m.global_mean = global_mean_remaining(log);
  if (opt.keep_history) m.history = history_of(log);
  return m;
}

} // namespace detail

/// Annotated transition system: every state collects the remaining times of
/// the log prefixes that map onto it.
inline PredictorModel train_vda(const EventLog& log, TrainOptions opt) {
  opt.kind = PredictorKind::vda;
  auto m = detail::base_model(log, opt);
  m.ts = build_ts(log, opt.abstraction);
  m.schema = fit_schema(log, nullptr, opt.scale_numeric);
  m.measurements.assign(m.ts->state_count(), {});
  for (const auto& t : log.traces())
    for (std::size_t k = 1; k <= t.size(); ++k) {
      StateId s = *m.ts->find(represent_state(opt.abstraction, hd(t.view(), k)));
      m.measurements[s].push_back(static_cast<double>(rem(t, k)));
    }
  refresh_state_values(m);
  return m;
}

inline PredictorModel train_svr(const EventLog& log, TrainOptions opt) {
  opt.kind = PredictorKind::svr;
  auto m = detail::base_model(log, opt);
  m.schema = fit_schema(log, nullptr, opt.scale_numeric);
  auto tr = build_training_set(log, m.schema);
  m.regressor = train_regressor(tr, opt.svr, m.global_mean, opt.seed);
  return m;
}

inline PredictorModel train_svr_ts(const EventLog& log, TrainOptions opt) {
  opt.kind = PredictorKind::svr_ts;
  auto m = detail::base_model(log, opt);
  m.ts = build_ts(log, opt.abstraction);
  m.schema = fit_schema(log, &*m.ts, opt.scale_numeric);
  auto ctx = m.state_context();
  auto tr = build_training_set(log, m.schema, &ctx);
  m.regressor = train_regressor(tr, opt.svr, m.global_mean, opt.seed);
  return m;
}

/// Per-transition training sets: the transition fired after prefix i gets
/// (features of prefix i, rem(trace, i)). The transition out of the start
/// state is trained on the empty prefix with target rem(trace, 1).
inline std::vector<TrainingSet> transition_training_sets(const EventLog& log, const TransitionSystem& ts,
                                                         const EncodingSchema& schema) {
  std::vector<TrainingSet> sets(ts.transitions().size());
  for (const auto& t : log.traces()) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto prefix = hd(t.view(), i);
      StateId s = *ts.find(represent_state(ts.abstraction(), prefix));
      StateId s2 = *ts.find(represent_state(ts.abstraction(), hd(t.view(), i + 1)));
      auto tr = *ts.find_transition(s, represent_event(EventAbstraction::activity_name, t.events[i]), s2);
      double y = static_cast<double>(i == 0 ? rem(t, 1) : rem(t, i));
      sets[tr].add(encode(schema, prefix), y);
    }
  }
  return sets;
}

inline PredictorModel train_dats(const EventLog& log, TrainOptions opt) {
  opt.kind = PredictorKind::dats;
  auto m = detail::base_model(log, opt);
  m.ts = build_ts(log, opt.abstraction);
  m.schema = fit_schema(log, nullptr, opt.scale_numeric);
  const auto& ts = *m.ts;
  const auto slots = m.schema.slot_kinds();
  for (StateId s = 0; s < ts.state_count(); ++s)
    if (ts.successors(s).size() >= 2) m.nb.emplace(s, NaiveBayes(slots, opt.nb_alpha));

  for (const auto& t : log.traces()) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      auto prefix = hd(t.view(), i);
      StateId s = *ts.find(represent_state(ts.abstraction(), prefix));
      auto it = m.nb.find(s);
      if (it == m.nb.end()) continue;
      StateId s2 = *ts.find(represent_state(ts.abstraction(), hd(t.view(), i + 1)));
      it->second.update(encode(m.schema, prefix), s2);
    }
  }
  auto sets = transition_training_sets(log, ts, m.schema);
  m.transition_regressors.reserve(sets.size());
  for (std::size_t t = 0; t < sets.size(); ++t)
    m.transition_regressors.push_back(train_regressor(sets[t], opt.transition_svr, m.global_mean, opt.seed + t));
  return m;
}

inline PredictorModel train(const EventLog& log, const TrainOptions& opt) {
  switch (opt.kind) {
    case PredictorKind::vda: return train_vda(log, opt);
    case PredictorKind::svr: return train_svr(log, opt);
    case PredictorKind::svr_ts: return train_svr_ts(log, opt);
    case PredictorKind::dats: return train_dats(log, opt);
  }
  throw InvalidArgument("unknown predictor kind");
}

struct RemainingPrediction {
  double seconds = 0.0;
  /// Trace mapped onto a state as is (always true for plain svr).
  bool fitting = true;
  /// Trailing events were dropped to reach a known state.
  bool safety_used = false;
  /// Not even a non-empty prefix fits; the global mean was returned.
  bool fallback = false;
  /// The similarity encoding had no overlap with any state.
  bool degenerate_encoding = false;
  std::optional<StateId> state;
  std::size_t prefix_length = 0;
};

namespace detail {

/// Successor distribution at `s` for DATS: NB posterior at branching
/// states, 1 on the only successor otherwise.
inline std::vector<std::pair<StateId, double>> successor_distribution(const PredictorModel& m, StateId s,
                                                                      std::span<const double> x) {
  auto it = m.nb.find(s);
  if (it != m.nb.end()) return it->second.predict(x);
  std::vector<std::pair<StateId, double>> out;
  for (auto s2 : m.ts->successors(s)) out.emplace_back(s2, 1.0);
  return out;
}

/// Frequency-weighted average over the (possibly parallel) transitions s -> s2.
inline double transition_estimate(const PredictorModel& m, StateId s, StateId s2, std::span<const double> x) {
  double num = 0.0, den = 0.0;
  for (auto t : m.ts->outgoing(s)) {
    const auto& tr = m.ts->transition(t);
    if (tr.target != s2) continue;
    double w = static_cast<double>(std::max<std::size_t>(tr.frequency, 1));
    num += w * m.transition_regressors[t].predict(x);
    den += w;
  }
  return den > 0.0 ? num / den : m.global_mean;
}

} // namespace detail

/// Weighted DATS estimate sum p(s2) * tau(s -> s2), unclamped.
inline double dats_estimate(const PredictorModel& m, StateId s, std::span<const double> x) {
  double p = 0.0;
  for (const auto& [s2, prob] : detail::successor_distribution(m, s, x))
    p += prob * detail::transition_estimate(m, s, s2, x);
  return p;
}

inline RemainingPrediction predict_remaining(const PredictorModel& m, std::span<const Event> trace) {
  RemainingPrediction out;
  out.prefix_length = trace.size();
  switch (m.kind) {
    case PredictorKind::svr: {
      out.seconds = m.regressor.predict(encode(m.schema, trace));
      break;
    }
    case PredictorKind::svr_ts: {
      auto ctx = m.state_context();
      auto mapped = map_state(*m.ts, trace);
      out.fitting = mapped.fitting();
      out.state = mapped.state;
      if (!out.fitting) out.degenerate_encoding = encode_state(*m.ts, trace, ctx.similarity).degenerate;
      out.seconds = m.regressor.predict(encode(m.schema, trace, &ctx));
      break;
    }
    case PredictorKind::vda:
    case PredictorKind::dats: {
      if (!m.ts) throw ModelError("model has no transition system");
      auto safety = safety_prefix(*m.ts, trace);
      out.fitting = !safety.truncated;
      out.safety_used = safety.truncated;
      out.fallback = safety.fallback && !trace.empty();
      out.prefix_length = safety.prefix_length;
      out.state = safety.state;
      if (out.fallback) {
        out.seconds = m.global_mean;
        break;
      }
      if (m.kind == PredictorKind::vda) {
        const auto& v = m.state_value.at(safety.state);
        out.seconds = v ? *v : m.global_mean;
      } else {
        if (m.ts->outgoing(safety.state).empty()) {
          out.seconds = 0.0;
          break;
        }
        auto x = encode(m.schema, trace.first(safety.prefix_length));
        out.seconds = dats_estimate(m, safety.state, x);
      }
      break;
    }
  }
  out.seconds = std::max(0.0, out.seconds);
  return out;
}

inline RemainingPrediction predict_remaining(const PredictorModel& m, const Trace& trace) {
  return predict_remaining(m, trace.view());
}

// ---------------------------------------------------------------------------
// Most likely continuation

struct PathPrediction {
  std::vector<std::string> activities;
  std::vector<StateId> states;
  /// Product of the transition probabilities along the walk.
  double probability = 1.0;
  bool reachable = true;
  /// Sum of -ln(clamped p) along the walk.
  double cost = 0.0;
};

/// Outgoing edge probabilities of a state, as (transition index, p).
using EdgeProbabilities = std::function<std::vector<std::pair<std::size_t, double>>(StateId)>;

constexpr double min_edge_probability = 1e-12;

inline double edge_cost(double p) {
  return -std::log(std::clamp(p, min_edge_probability, 1.0 - min_edge_probability));
}

/// Cheapest walk from `from` to any accepting state under -ln p edge costs.
/// Costs are strictly positive, so the first accepting state settled by
/// Dijkstra ends the optimal walk; walks longer than 10 |S| edges are cut.
inline PathPrediction most_likely_walk(const TransitionSystem& ts, StateId from, const EdgeProbabilities& probs) {
  PathPrediction out;
  out.states.push_back(from);
  if (ts.is_accepting(from)) return out;
  const std::size_t n = ts.state_count();
  const std::size_t max_edges = 10 * n;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<std::size_t> depth(n, 0);
  std::vector<std::optional<std::pair<std::size_t, double>>> via(n);
  std::vector<bool> done(n, false);
  using Item = std::tuple<double, StateId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[from] = 0.0;
  pq.emplace(0.0, from);
  std::optional<StateId> goal;
  while (!pq.empty()) {
    auto [d, s] = pq.top();
    pq.pop();
    if (done[s]) continue;
    done[s] = true;
    if (s != from && ts.is_accepting(s)) {
      goal = s;
      break;
    }
    if (depth[s] >= max_edges) continue;
    for (const auto& [t, p] : probs(s)) {
      if (!(p > 0.0)) continue;
      StateId s2 = ts.transition(t).target;
      double nd = d + edge_cost(p);
      if (nd < dist[s2] && !done[s2]) {
        dist[s2] = nd;
        depth[s2] = depth[s] + 1;
        via[s2] = std::pair{t, p};
        pq.emplace(nd, s2);
      }
    }
  }
  if (!goal) {
    out.reachable = false;
    out.probability = 0.0;
    return out;
  }
  std::vector<std::pair<std::size_t, double>> edges;
  for (StateId s = *goal; s != from;) {
    edges.push_back(*via[s]);
    s = ts.transition(via[s]->first).source;
  }
  std::reverse(edges.begin(), edges.end());
  for (const auto& [t, p] : edges) {
    out.activities.push_back(ts.transition(t).label);
    out.states.push_back(ts.transition(t).target);
    out.probability *= p;
    out.cost += edge_cost(p);
  }
  return out;
}

namespace detail {

/// Spreads a per-successor probability over parallel transitions by frequency.
inline std::vector<std::pair<std::size_t, double>> split_over_transitions(
    const TransitionSystem& ts, StateId s, const std::vector<std::pair<StateId, double>>& dist) {
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& [s2, p] : dist) {
    double total = 0.0;
    for (auto t : ts.outgoing(s))
      if (ts.transition(t).target == s2) total += static_cast<double>(ts.transition(t).frequency);
    for (auto t : ts.outgoing(s))
      if (ts.transition(t).target == s2)
        out.emplace_back(t, total > 0 ? p * static_cast<double>(ts.transition(t).frequency) / total : p);
  }
  return out;
}

} // namespace detail

/// Edge probabilities proportional to observed transition frequencies.
inline EdgeProbabilities frequency_probabilities(const TransitionSystem& ts) {
  return [&ts](StateId s) {
    std::vector<std::pair<std::size_t, double>> out;
    double total = 0.0;
    for (auto t : ts.outgoing(s)) total += static_cast<double>(ts.transition(t).frequency);
    for (auto t : ts.outgoing(s))
      out.emplace_back(t, total > 0 ? static_cast<double>(ts.transition(t).frequency) / total : 0.0);
    return out;
  };
}

/// Most likely future activity sequence. DATS scores the branches of the
/// current state with its NB annotation on the prefix features; further
/// ahead those features no longer describe the case, so the NB class priors
/// are used. Other models with a transition system use transition frequencies.
inline PathPrediction predict_path(const PredictorModel& m, std::span<const Event> trace) {
  if (!m.ts) {
    PathPrediction out;
    return out;
  }
  auto safety = safety_prefix(*m.ts, trace);
  if (m.kind != PredictorKind::dats) return most_likely_walk(*m.ts, safety.state, frequency_probabilities(*m.ts));
  auto x = encode(m.schema, trace.first(safety.prefix_length));
  const StateId here = safety.state;
  EdgeProbabilities probs = [&](StateId s) {
    if (s != here)
      if (auto it = m.nb.find(s); it != m.nb.end()) return detail::split_over_transitions(*m.ts, s, it->second.prior());
    return detail::split_over_transitions(*m.ts, s, detail::successor_distribution(m, s, x));
  };
  return most_likely_walk(*m.ts, safety.state, probs);
}

inline PathPrediction predict_path(const PredictorModel& m, const Trace& trace) {
  return predict_path(m, trace.view());
}

} // namespace ppm

#endif // PPM_PREDICTORS_HPP
