#ifndef PPM_EVALUATION_HPP
#define PPM_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppm/abstraction.hpp"
#include "ppm/error.hpp"
#include "ppm/event_log.hpp"
#include "ppm/predictors.hpp"
#include "ppm/svr.hpp"
#include "ppm/transition_system.hpp"

namespace ppm {

// ---------------------------------------------------------------------------
// Metrics

struct PercentageError {
  double value = 0.0;
  std::size_t used = 0;
  /// Samples with a zero actual value, left out of the average.
  std::size_t excluded = 0;
};

namespace detail {

inline void check_lengths(const std::vector<double>& a, const std::vector<double>& f) {
  if (a.size() != f.size()) throw InvalidArgument("actual and predicted lists differ in length");
}

} // namespace detail

inline PercentageError mape_detail(const std::vector<double>& actual, const std::vector<double>& predicted) {
  detail::check_lengths(actual, predicted);
  PercentageError r;
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      ++r.excluded;
      continue;
    }
    s += std::abs((actual[i] - predicted[i]) / actual[i]);
    ++r.used;
  }
  if (r.used == 0) throw InvalidArgument("every sample has a zero actual value");
  r.value = 100.0 * s / static_cast<double>(r.used);
  return r;
}

inline PercentageError rmspe_detail(const std::vector<double>& actual, const std::vector<double>& predicted) {
  detail::check_lengths(actual, predicted);
  PercentageError r;
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      ++r.excluded;
      continue;
    }
    double e = (actual[i] - predicted[i]) / actual[i];
    s += e * e;
    ++r.used;
  }
  if (r.used == 0) throw InvalidArgument("every sample has a zero actual value");
  r.value = 100.0 * std::sqrt(s / static_cast<double>(r.used));
  return r;
}

inline double mape(const std::vector<double>& actual, const std::vector<double>& predicted) {
  return mape_detail(actual, predicted).value;
}

inline double rmspe(const std::vector<double>& actual, const std::vector<double>& predicted) {
  return rmspe_detail(actual, predicted).value;
}

struct PathScore {
  double dam = 0.0;
  double pre = 0.0;
};

inline std::size_t common_prefix(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

/// DAM and PRE of the first `horizon` activities of both sequences.
inline PathScore path_metrics(const std::vector<std::string>& predicted, const std::vector<std::string>& actual,
                              std::size_t horizon) {
  if (horizon == 0) throw InvalidArgument("horizon must be at least 1");
  std::vector<std::string> p(predicted.begin(), predicted.begin() + static_cast<std::ptrdiff_t>(std::min(horizon, predicted.size())));
  std::vector<std::string> a(actual.begin(), actual.begin() + static_cast<std::ptrdiff_t>(std::min(horizon, actual.size())));
  return {sim_list(p, a), static_cast<double>(common_prefix(p, a)) / static_cast<double>(horizon)};
}

/// Whole-continuation score: DAM on the full sequences, PRE over the longer one.
inline PathScore path_metrics_full(const std::vector<std::string>& predicted, const std::vector<std::string>& actual) {
  std::size_t len = std::max(predicted.size(), actual.size());
  if (len == 0) return {1.0, 1.0};
  return {sim_list(predicted, actual), static_cast<double>(common_prefix(predicted, actual)) / static_cast<double>(len)};
}

// ---------------------------------------------------------------------------
// Random continuation baseline

/// Walk sampled from observed transition frequencies. At an accepting state
/// the walk stops with probability end_count / (end_count + outgoing count).
inline PathPrediction random_path(const TransitionSystem& ts, StateId from, std::mt19937_64& rng) {
  PathPrediction out;
  out.states.push_back(from);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StateId s = from;
  const std::size_t cap = 10 * ts.state_count();
  for (std::size_t step = 0; step < cap; ++step) {
    double out_freq = 0.0;
    for (auto t : ts.outgoing(s)) out_freq += static_cast<double>(ts.transition(t).frequency);
    double stop = static_cast<double>(ts.end_count(s));
    if (out_freq + stop <= 0.0) break;
    double r = u(rng) * (out_freq + stop);
    if (r < stop) {
      out.probability *= stop / (out_freq + stop);
      break;
    }
    r -= stop;
    std::size_t chosen = ts.outgoing(s).back();
    for (auto t : ts.outgoing(s)) {
      double f = static_cast<double>(ts.transition(t).frequency);
      if (r < f) {
        chosen = t;
        break;
      }
      r -= f;
    }
    const auto& tr = ts.transition(chosen);
    out.probability *= static_cast<double>(tr.frequency) / (out_freq + stop);
    out.activities.push_back(tr.label);
    out.states.push_back(tr.target);
    s = tr.target;
  }
  out.cost = -std::log(std::max(out.probability, min_edge_probability));
  return out;
}

inline PathPrediction random_path_baseline(const TransitionSystem& ts, std::span<const Event> trace,
                                           std::mt19937_64& rng) {
  return random_path(ts, safety_prefix(ts, trace).state, rng);
}

// ---------------------------------------------------------------------------
// Variant removal

struct VariantRemoval {
  /// Fraction of distinct variants to drop (rounded down).
  double fraction = 0.0;
  /// Drop every trace containing this activity.
  std::optional<std::string> activity;
  std::uint64_t seed = 0;
};

struct RemovalResult {
  EventLog train;
  std::vector<std::vector<std::string>> removed_variants;
  std::vector<std::string> removed_cases;
};

inline RemovalResult remove_variants(const EventLog& log, const VariantRemoval& spec) {
  if (spec.fraction < 0.0 || spec.fraction > 1.0) throw InvalidArgument("removal fraction must lie in [0, 1]");
  std::set<std::vector<std::string>> drop;
  auto vars = variants(log);
  if (spec.fraction > 0.0) {
    std::vector<std::vector<std::string>> keys;
    for (const auto& [k, _] : vars) keys.push_back(k);
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = keys.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(keys[i - 1], keys[pick(rng)]);
    }
    auto n = static_cast<std::size_t>(std::floor(static_cast<double>(keys.size()) * spec.fraction));
    drop.insert(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n));
  }
  if (spec.activity)
    for (const auto& [k, _] : vars)
      if (std::find(k.begin(), k.end(), *spec.activity) != k.end()) drop.insert(k);

  RemovalResult r;
  r.removed_variants.assign(drop.begin(), drop.end());
  r.train = log.filter([&](const Trace& t) {
    bool keep = !drop.contains(t.activities());
    if (!keep) r.removed_cases.push_back(t.case_id);
    return keep;
  });
  if (r.train.empty() && !log.empty()) throw InvalidArgument("variant removal would empty the training set");
  return r;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct MetricSummary {
  std::vector<double> folds;
  double mean = 0.0;
  /// Sample standard deviation over folds (0 with a single fold).
  double sd = 0.0;

  void finish() {
    if (folds.empty()) return;
    mean = std::accumulate(folds.begin(), folds.end(), 0.0) / static_cast<double>(folds.size());
    double v = 0.0;
    for (double f : folds) v += (f - mean) * (f - mean);
    sd = folds.size() > 1 ? std::sqrt(v / static_cast<double>(folds.size() - 1)) : 0.0;
  }
};

struct PathRow {
  /// 1..5, 0 for the whole-continuation row.
  std::size_t horizon = 0;
  MetricSummary dam, pre;
  std::size_t samples = 0;
};

struct EvaluationOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  bool time_metrics = true;
  bool path_metrics = false;
  bool random_baseline = false;
  /// Total random-walk draws spread over every evaluation point.
  std::size_t random_draws = 100000;
  std::size_t max_horizon = 5;
  std::optional<VariantRemoval> removal;
};

struct EvaluationReport {
  std::string predictor;
  std::string abstraction;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::string removal;
  MetricSummary mape, rmspe;
  std::size_t samples = 0;
  std::size_t excluded = 0;
  std::size_t safety_used = 0;
  std::size_t fallbacks = 0;
  std::size_t non_fitting = 0;
  std::vector<PathRow> paths;
  std::vector<PathRow> random_paths;
};

namespace detail {

struct PathAccumulator {
  std::vector<double> dam, pre;
  std::size_t n = 0;
  void add(PathScore s) {
    dam.push_back(s.dam);
    pre.push_back(s.pre);
    ++n;
  }
};

inline double mean_or_zero(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline std::vector<PathRow> make_rows(std::size_t max_h) {
  std::vector<PathRow> rows;
  for (std::size_t h = 1; h <= max_h; ++h) rows.push_back(PathRow{h, {}, {}, 0});
  rows.push_back(PathRow{0, {}, {}, 0});
  return rows;
}

inline void fold_rows(std::vector<PathRow>& rows, std::vector<PathAccumulator>& acc) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (acc[i].n == 0) continue;
    rows[i].dam.folds.push_back(mean_or_zero(acc[i].dam));
    rows[i].pre.folds.push_back(mean_or_zero(acc[i].pre));
    rows[i].samples += acc[i].n;
  }
}

inline std::string describe(const std::optional<VariantRemoval>& r) {
  if (!r) return "none";
  std::ostringstream s;
  if (r->fraction > 0) s << "fraction=" << r->fraction << ";seed=" << r->seed;
  if (r->activity) s << (r->fraction > 0 ? ";" : "") << "activity=" << *r->activity;
  return s.str().empty() ? "none" : s.str();
}

} // namespace detail

/// Scores one trained model on the test traces and appends the fold values.
inline void evaluate_fold(const PredictorModel& model, const std::vector<const Trace*>& test,
                          const EvaluationOptions& opt, std::uint64_t fold_seed, EvaluationReport& rep) {
  std::vector<double> actual, predicted;
  std::vector<detail::PathAccumulator> acc(opt.max_horizon + 1), racc(opt.max_horizon + 1);
  std::mt19937_64 rng(fold_seed);

  std::size_t points = 0;
  if (opt.random_baseline)
    for (const auto* t : test) points += t->size() > 0 ? t->size() - 1 : 0;
  const std::size_t draws = points ? std::max<std::size_t>(1, (opt.random_draws + points - 1) / points) : 0;

  for (const auto* t : test) {
    for (std::size_t k = 1; k < t->size(); ++k) {
      auto prefix = hd(t->view(), k);
      if (opt.time_metrics) {
        auto p = predict_remaining(model, prefix);
        double a = static_cast<double>(rem(*t, k));
        if (a == 0.0) {
          ++rep.excluded;
        } else {
          actual.push_back(a);
          predicted.push_back(p.seconds);
        }
        rep.safety_used += p.safety_used;
        rep.fallbacks += p.fallback;
        rep.non_fitting += !p.fitting;
      }
      if (opt.path_metrics || opt.random_baseline) {
        std::vector<std::string> future;
        for (std::size_t i = k; i < t->size(); ++i) future.push_back(t->events[i].activity);
        auto score_into = [&](std::vector<detail::PathAccumulator>& into, const std::vector<std::string>& pred) {
          for (std::size_t h = 1; h <= opt.max_horizon; ++h)
            if (future.size() >= h) into[h - 1].add(path_metrics(pred, future, h));
          into[opt.max_horizon].add(path_metrics_full(pred, future));
        };
        if (opt.path_metrics) score_into(acc, predict_path(model, prefix).activities);
        if (opt.random_baseline && model.ts) {
          auto start = safety_prefix(*model.ts, prefix).state;
          for (std::size_t d = 0; d < draws; ++d) score_into(racc, random_path(*model.ts, start, rng).activities);
        }
      }
    }
  }
  if (opt.time_metrics && !actual.empty()) {
    rep.mape.folds.push_back(mape(actual, predicted));
    rep.rmspe.folds.push_back(rmspe(actual, predicted));
    rep.samples += actual.size();
  }
  if (opt.path_metrics) detail::fold_rows(rep.paths, acc);
  if (opt.random_baseline) detail::fold_rows(rep.random_paths, racc);
}

inline void finish_report(EvaluationReport& rep) {
  rep.mape.finish();
  rep.rmspe.finish();
  for (auto* rows : {&rep.paths, &rep.random_paths})
    for (auto& r : *rows) {
      r.dam.finish();
      r.pre.finish();
    }
}

/// Trace-level k-fold cross-validation. Variant removal, when requested,
/// is applied to each training split only.
inline EvaluationReport cross_validate(const EventLog& log, const TrainOptions& train_opt,
                                       const EvaluationOptions& opt) {
  if (opt.folds < 2) throw InvalidArgument("cross-validation needs at least two folds");
  if (log.size() < opt.folds)
    throw InvalidArgument("log has " + std::to_string(log.size()) + " traces, fewer than " +
                          std::to_string(opt.folds) + " folds");
  EvaluationReport rep;
  rep.predictor = to_string(train_opt.kind);
  rep.abstraction = train_opt.abstraction.to_string();
  rep.folds = opt.folds;
  rep.seed = opt.seed;
  rep.removal = detail::describe(opt.removal);
  if (opt.path_metrics) rep.paths = detail::make_rows(opt.max_horizon);
  if (opt.random_baseline) rep.random_paths = detail::make_rows(opt.max_horizon);

  const auto fold = fold_assignment(log.size(), opt.folds, opt.seed);
  for (std::size_t f = 0; f < opt.folds; ++f) {
    std::set<std::string> test_ids;
    std::vector<const Trace*> test;
    for (std::size_t i = 0; i < log.size(); ++i)
      if (fold[i] == f) {
        test.push_back(&log.traces()[i]);
        test_ids.insert(log.traces()[i].case_id);
      }
    EventLog train_log = log.filter([&](const Trace& t) { return !test_ids.contains(t.case_id); });
    if (opt.removal) train_log = remove_variants(train_log, *opt.removal).train;
    for (const auto& t : train_log.traces())
      if (test_ids.contains(t.case_id)) throw Error("test trace leaked into training");
    TrainOptions fold_opt = train_opt;
    fold_opt.seed = train_opt.seed + f;
    fold_opt.keep_history = false;
    auto model = train(train_log, fold_opt);
    evaluate_fold(model, test, opt, opt.seed * 1000003 + f, rep);
  }
  finish_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Report output

inline std::string format_fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string horizon_label(std::size_t h) { return h == 0 ? "E#" : std::to_string(h); }

/// Plain-text tables: one time-metric row per report, then path rows.
inline std::string format_time_table(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "predictor" << std::setw(12) << "abstraction" << std::setw(22) << "MAPE"
      << std::setw(22) << "RMSPE" << "samples\n";
  for (const auto& r : reports)
    out << std::left << std::setw(10) << r.predictor << std::setw(12) << r.abstraction << std::setw(22)
        << (format_fixed(r.mape.mean, 2) + "% +- " + format_fixed(r.mape.sd, 2)) << std::setw(22)
        << (format_fixed(r.rmspe.mean, 2) + "% +- " + format_fixed(r.rmspe.sd, 2)) << r.samples << "\n";
  return out.str();
}

inline std::string format_path_table(const EvaluationReport& r) {
  std::ostringstream out;
  bool rnd = !r.random_paths.empty();
  out << std::left << std::setw(5) << "#" << std::setw(20) << "DAM" << std::setw(20) << "PRE";
  if (rnd) out << std::setw(20) << "DAM(random)" << std::setw(20) << "PRE(random)";
  out << "\n";
  for (std::size_t i = 0; i < r.paths.size(); ++i) {
    const auto& p = r.paths[i];
    out << std::left << std::setw(5) << horizon_label(p.horizon) << std::setw(20)
        << (format_fixed(p.dam.mean, 4) + " +- " + format_fixed(p.dam.sd, 3)) << std::setw(20)
        << (format_fixed(p.pre.mean, 4) + " +- " + format_fixed(p.pre.sd, 3));
    if (rnd && i < r.random_paths.size()) {
      const auto& q = r.random_paths[i];
      out << std::setw(20) << (format_fixed(q.dam.mean, 4) + " +- " + format_fixed(q.dam.sd, 3)) << std::setw(20)
          << (format_fixed(q.pre.mean, 4) + " +- " + format_fixed(q.pre.sd, 3));
    }
    out << "\n";
  }
  return out.str();
}

inline nlohmann::json summary_json(const MetricSummary& m) {
  return {{"mean", m.mean}, {"sd", m.sd}, {"folds", m.folds}};
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["predictor"] = r.predictor;
  j["abstraction"] = r.abstraction;
  j["folds"] = r.folds;
  j["seed"] = r.seed;
  j["removal"] = r.removal;
  j["mape"] = summary_json(r.mape);
  j["rmspe"] = summary_json(r.rmspe);
  j["samples"] = r.samples;
  j["excluded_zero_actual"] = r.excluded;
  j["safety_used"] = r.safety_used;
  j["fallbacks"] = r.fallbacks;
  j["non_fitting"] = r.non_fitting;
  auto rows = [](const std::vector<PathRow>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v)
      a.push_back({{"horizon", horizon_label(p.horizon)},
                   {"dam", summary_json(p.dam)},
                   {"pre", summary_json(p.pre)},
                   {"samples", p.samples}});
    return a;
  };
  j["paths"] = rows(r.paths);
  j["random_paths"] = rows(r.random_paths);
  return j;
}

/// Tab-separated plot series: horizon, DAM, PRE (and the random columns).
inline std::string path_series_tsv(const EvaluationReport& r) {
  std::ostringstream out;
  out << "horizon\tdam\tpre";
  bool rnd = !r.random_paths.empty();
  if (rnd) out << "\tdam_random\tpre_random";
  out << "\n";
  for (std::size_t i = 0; i < r.paths.size(); ++i) {
    out << horizon_label(r.paths[i].horizon) << "\t" << format_fixed(r.paths[i].dam.mean, 6) << "\t"
        << format_fixed(r.paths[i].pre.mean, 6);
    if (rnd && i < r.random_paths.size())
      out << "\t" << format_fixed(r.random_paths[i].dam.mean, 6) << "\t" << format_fixed(r.random_paths[i].pre.mean, 6);
    out << "\n";
  }
  return out.str();
}

} // namespace ppm

#endif // PPM_EVALUATION_HPP
