#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "ppm/event_log.hpp"
#include "ppm/predictors.hpp"

namespace fixtures {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string sample_path(const std::string& name) { return std::string(PPM_SOURCE_DIR) + "/samples/" + name; }

inline ppm::EventLog loans() { return ppm::parse_log_string(read_file(sample_path("loans.csv"))); }

/// Control flow only: one event per activity, one hour apart.
inline ppm::EventLog control_flow(const std::vector<std::vector<std::string>>& traces) {
  std::string csv = "case_id,activity,timestamp\n";
  int c = 0;
  for (const auto& t : traces) {
    ++c;
    for (std::size_t i = 0; i < t.size(); ++i)
      csv += "c" + std::to_string(c) + "," + t[i] + "," + std::to_string(1000 + 3600 * (long)i) + "\n";
  }
  return ppm::parse_log_string(csv);
}

/// Events one hour apart, each carrying amount = 0.5.
inline std::vector<ppm::Event> events_of(std::initializer_list<const char*> acts) {
  std::vector<ppm::Event> out;
  ppm::Timestamp t = 1000;
  for (const char* a : acts) {
    out.push_back(ppm::Event{a, "q", t, {ppm::AttributeValue(0.5)}});
    t += 3600;
  }
  return out;
}

/// start -> {B} -> {C} | {D} | {E}, each an accepting leaf. Branch counts
/// 11/1/5 and constant transition regressors of `hours`.
inline ppm::PredictorModel branching_fixture(std::vector<double> hours) {
  using namespace ppm;
  std::vector<StateRepr> states{StateRepr(ActivitySet{}), StateRepr(ActivitySet{"B"}), StateRepr(ActivitySet{"C"}),
                                StateRepr(ActivitySet{"D"}), StateRepr(ActivitySet{"E"})};
  std::vector<Transition> tr{{0, "B", 1, 17}, {1, "C", 2, 11}, {1, "D", 3, 1}, {1, "E", 4, 5}};
  PredictorModel m;
  m.kind = PredictorKind::dats;
  m.options.abstraction = StateAbstraction::parse("set:1");
  m.ts = TransitionSystem(m.options.abstraction, states, tr, {0, 0, 11, 1, 5});
  // one constant numeric feature: the class posterior is the smoothed prior
  m.schema.attributes = {AttributeEncoder{"amount", AttributeKind::numeric, {}, 0.0, 1.0}};
  NaiveBayes nb(m.schema.slot_kinds());
  std::vector<double> x{0.5};
  for (int i = 0; i < 11; ++i) nb.update(x, 2);
  nb.update(x, 3);
  for (int i = 0; i < 5; ++i) nb.update(x, 4);
  m.nb.emplace(1, nb);
  m.transition_regressors.resize(4);
  m.transition_regressors[0].value = 4 * 3600.0;
  for (std::size_t i = 0; i < 3; ++i) m.transition_regressors[i + 1].value = hours[i] * 3600.0;
  return m;
}

using Instance = std::pair<std::vector<double>, std::size_t>;

/// P(y | x) from raw counts: smoothed prior times smoothed per-feature
/// Bernoulli frequencies, normalized over the observed classes.
inline std::map<std::size_t, double> bernoulli_oracle(const std::vector<Instance>& data, const std::vector<double>& x,
                                                      double alpha) {
  std::map<std::size_t, std::size_t> n;
  for (const auto& [_, y] : data) ++n[y];
  std::map<std::size_t, double> post;
  double z = 0.0;
  for (const auto& [y, ny] : n) {
    double p = (ny + alpha) / (data.size() + alpha * n.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      std::size_t ones = 0;
      for (const auto& [v, c] : data) ones += c == y && v[k] == 1.0;
      double p1 = (ones + alpha) / (ny + 2 * alpha);
      p *= x[k] == 1.0 ? p1 : 1 - p1;
    }
    post[y] = p;
    z += p;
  }
  for (auto& [_, p] : post) p /= z;
  return post;
}

/// Remaining times of every prefix of `log` whose state is `s`, sorted.
inline std::vector<double> state_measurements(const ppm::EventLog& log, const ppm::StateAbstraction& abs,
                                              const ppm::StateRepr& s) {
  std::vector<double> out;
  for (const auto& t : log.traces())
    for (std::size_t k = 1; k <= t.size(); ++k)
      if (ppm::represent_state(abs, ppm::hd(t.view(), k)) == s) out.push_back(static_cast<double>(ppm::rem(t, k)));
  std::sort(out.begin(), out.end());
  return out;
}

struct RandomTs {
  ppm::TransitionSystem ts;
  std::map<ppm::StateId, std::vector<std::pair<std::size_t, double>>> probs;
};

/// 3 to `max_states` states, 1 to 3 successors each, random edge probabilities.
inline RandomTs random_ts(std::mt19937& rng, std::size_t max_states) {
  using namespace ppm;
  std::size_t n = 3 + rng() % (max_states - 2);
  std::vector<StateRepr> states;
  states.emplace_back(ActivitySet{});
  for (std::size_t i = 1; i < n; ++i) states.emplace_back(ActivitySet{"s" + std::to_string(i)});
  std::vector<Transition> trs;
  std::vector<std::size_t> ends(n, 0);
  for (std::size_t i = 1; i < n; ++i)
    if (rng() % 3 == 0) ends[i] = 1;
  ends[n - 1] = 1;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RandomTs out;
  for (StateId s = 0; s < n; ++s) {
    std::size_t k = 1 + rng() % 3;
    std::vector<StateId> targets;
    for (std::size_t j = 0; j < k; ++j) {
      StateId t = rng() % n;
      if (t == 0 || std::find(targets.begin(), targets.end(), t) != targets.end()) continue;
      targets.push_back(t);
    }
    if (targets.empty()) targets.push_back(1 + rng() % (n - 1));
    std::vector<double> w;
    for (std::size_t j = 0; j < targets.size(); ++j) w.push_back(u(rng));
    double z = 0.0;
    for (double x : w) z += x;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      out.probs[s].emplace_back(trs.size(), w[j] / z);
      trs.push_back({s, "a" + std::to_string(targets[j]), targets[j], 1});
    }
  }
  out.ts = TransitionSystem(StateAbstraction::parse("set:1"), states, trs, ends);
  return out;
}

/// Best walk to an accepting state among all walks of at most `max_len` edges.
/// Ties go to the shorter walk. Probability -1 when none exists.
inline std::pair<double, std::vector<std::size_t>> exhaustive_best(const RandomTs& r, ppm::StateId from,
                                                                   std::size_t max_len) {
  std::pair<double, std::vector<std::size_t>> best{-1.0, {}};
  std::vector<std::size_t> walk;
  std::function<void(ppm::StateId, double)> go = [&](ppm::StateId s, double p) {
    if (!walk.empty() && r.ts.is_accepting(s)) {
      if (p > best.first * (1 + 1e-12) || (std::abs(p - best.first) <= 1e-12 * p && walk.size() < best.second.size()))
        best = {p, walk};
      return;
    }
    if (walk.size() == max_len) return;
    for (const auto& [t, q] : r.probs.at(s)) {
      walk.push_back(t);
      go(r.ts.transition(t).target, p * q);
      walk.pop_back();
    }
  };
  go(from, 1.0);
  return best;
}

} // namespace fixtures
