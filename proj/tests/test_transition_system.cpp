#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "ppm/transition_system.hpp"

using namespace ppm;

namespace {

EventLog three_variants() { return fixtures::control_flow({{"A", "B", "C", "F"}, {"A", "B", "D", "F"}, {"A", "B", "E", "F"}}); }

std::vector<Event> events_of(std::initializer_list<const char*> acts) {
  std::vector<Event> out;
  Timestamp t = 0;
  for (const char* a : acts) out.push_back(Event{a, "c", t++, {}});
  return out;
}

} // namespace

TEST(BuildTs, LastEventSet) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("set:1"));
  EXPECT_EQ(ts.state_count(), 7u);
  EXPECT_EQ(ts.transitions().size(), 8u);
  EXPECT_EQ(ts.accepting_count(), 1u);
  auto b = ts.find(StateRepr(ActivitySet{"B"}));
  ASSERT_TRUE(b);
  EXPECT_EQ(ts.successors(*b).size(), 3u);
}

TEST(BuildTs, FullSet) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("set"));
  EXPECT_EQ(ts.state_count(), 9u);
  EXPECT_EQ(ts.transitions().size(), 8u);
  EXPECT_EQ(ts.accepting_count(), 3u);
  // enumeration follows first construction: s1={A}, s2={A,B}, s3={A,B,C}, s4={A,B,D} ...
  EXPECT_EQ(ts.state(0).to_string(), "{}");
  EXPECT_EQ(ts.state(1).to_string(), "{A}");
  EXPECT_EQ(ts.state(2).to_string(), "{A,B}");
  EXPECT_EQ(ts.state(3).to_string(), "{A,B,C}");
  EXPECT_EQ(ts.state(4).to_string(), "{A,B,C,F}");
  for (StateId s : {4u, 6u, 8u}) EXPECT_TRUE(ts.is_accepting(s)) << s;
}

TEST(BuildTs, SingleEvent) {
  auto ts = build_ts(fixtures::control_flow({{"X"}}), StateAbstraction::parse("seq"));
  EXPECT_EQ(ts.state_count(), 2u);
  EXPECT_EQ(ts.transitions().size(), 1u);
  EXPECT_EQ(ts.transitions()[0].frequency, 1u);
}

TEST(BuildTs, Invariants) {
  std::mt19937 rng(4);
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<std::vector<std::string>> traces;
    for (int c = 0, n = 1 + static_cast<int>(rng() % 8); c < n; ++c) {
      std::vector<std::string> t;
      for (int i = 0, m = 1 + static_cast<int>(rng() % 6); i < m; ++i) t.push_back(std::string(1, char('a' + rng() % 4)));
      traces.push_back(t);
    }
    auto log = fixtures::control_flow(traces);
    for (auto abs : {"set", "multiset", "seq", "set:2", "seq:1"}) {
      auto ts = build_ts(log, StateAbstraction::parse(abs));
      EXPECT_TRUE(ts.state(0).empty());
      for (const auto& t : ts.transitions()) {
        EXPECT_LT(t.source, ts.state_count());
        EXPECT_LT(t.target, ts.state_count());
        EXPECT_GT(t.frequency, 0u);
      }
      std::size_t fired = 0;
      for (const auto& t : ts.transitions()) fired += t.frequency;
      EXPECT_EQ(fired, log.event_count());
      std::size_t ends = std::accumulate(ts.end_counts().begin(), ts.end_counts().end(), std::size_t{0});
      EXPECT_EQ(ends, log.size());
      for (const auto& tr : log.traces()) EXPECT_TRUE(ts.is_accepting(*ts.find(represent_state(ts.abstraction(), tr))));
    }
  }
}

TEST(MapState, FittingAndNot) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("set"));
  auto ab = events_of({"A", "B"});
  auto m = map_state(ts, ab);
  EXPECT_TRUE(m.fitting());
  EXPECT_EQ(m.repr.to_string(), "{A,B}");
  auto ad = events_of({"A", "D"});
  auto n = map_state(ts, ad);
  EXPECT_FALSE(n.fitting());
  EXPECT_EQ(n.repr.to_string(), "{A,D}");
  auto e = map_state(ts, std::span<const Event>{});
  EXPECT_TRUE(e.fitting());
  EXPECT_EQ(*e.state, 0u);
}

TEST(EncodeState, NonFittingWorkedExample) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("set"));
  // s1..s8 in first-construction order -> our ids
  std::vector<ActivitySet> order{{"A"},           {"A", "B"},      {"A", "B", "C"},      {"A", "B", "D"},
                                 {"A", "B", "E"}, {"A", "B", "C", "F"}, {"A", "B", "D", "F"}, {"A", "B", "E", "F"}};
  const std::vector<double> numerators{0.5, 1.0 / 3, 0.25, 2.0 / 3, 0.25, 0.2, 0.5, 0.2};
  auto ad = events_of({"A", "D"});
  auto sim = similarity_for(StateKind::set);
  auto enc = encode_state(ts, ad, sim);
  EXPECT_FALSE(enc.fitting);
  EXPECT_FALSE(enc.degenerate);
  double sum = std::accumulate(numerators.begin(), numerators.end(), 0.0);
  EXPECT_NEAR(sum, 2.9, 1e-12);
  auto rep = map_state(ts, ad).repr;
  for (std::size_t i = 0; i < order.size(); ++i) {
    StateId s = *ts.find(StateRepr(order[i]));
    EXPECT_NEAR(sim(rep, ts.state(s)), numerators[i], 1e-12);
    EXPECT_NEAR(enc.values[s - 1], numerators[i] / 2.9, 1e-9);
  }
  EXPECT_NEAR(std::accumulate(enc.values.begin(), enc.values.end(), 0.0), 1.0, 1e-9);
}

TEST(EncodeState, FittingOneHotAndEmpty) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("set"));
  auto sim = similarity_for(StateKind::set);
  auto ab = events_of({"A", "B"});
  auto enc = encode_state(ts, ab, sim);
  EXPECT_TRUE(enc.fitting);
  StateId s = *ts.find(StateRepr(ActivitySet{"A", "B"}));
  for (std::size_t i = 0; i < enc.values.size(); ++i) EXPECT_EQ(enc.values[i], i == s - 1 ? 1.0 : 0.0);
  auto empty = encode_state(ts, std::span<const Event>{}, sim);
  for (double v : empty.values) EXPECT_EQ(v, 0.0);
}

TEST(EncodeState, DegenerateIsUniform) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("set"));
  auto zz = events_of({"Z"});
  auto enc = encode_state(ts, zz, similarity_for(StateKind::set));
  EXPECT_TRUE(enc.degenerate);
  for (double v : enc.values) EXPECT_DOUBLE_EQ(v, 1.0 / 8);
}

TEST(EncodeState, NonFittingSumsToOne) {
  auto log = three_variants();
  std::mt19937 rng(8);
  const char* names[] = {"A", "B", "C", "D", "E", "F", "G"};
  for (auto abs : {"set", "multiset", "seq", "seq:2"}) {
    auto ts = build_ts(log, StateAbstraction::parse(abs));
    auto sim = similarity_for(ts.abstraction());
    for (int rep = 0; rep < 300; ++rep) {
      std::vector<Event> ev;
      for (int i = 0, n = 1 + static_cast<int>(rng() % 6); i < n; ++i) ev.push_back(Event{names[rng() % 7], "c", i, {}});
      auto enc = encode_state(ts, ev, sim);
      double total = std::accumulate(enc.values.begin(), enc.values.end(), 0.0);
      for (double v : enc.values) EXPECT_GE(v, 0.0);
      if (enc.fitting)
        EXPECT_EQ(std::count(enc.values.begin(), enc.values.end(), 1.0), 1);
      else
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(SafetyPrefix, DropsTrailingEvents) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("seq"));
  auto ok = events_of({"A", "B", "C"});
  auto r = safety_prefix(ts, ok);
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(r.prefix_length, 3u);

  auto bad = events_of({"A", "B", "X", "Y"});
  auto s = safety_prefix(ts, bad);
  EXPECT_TRUE(s.truncated);
  EXPECT_FALSE(s.fallback);
  EXPECT_EQ(s.prefix_length, 2u);
  EXPECT_EQ(ts.state(s.state).to_string(), "<A,B>");

  auto none = events_of({"Q", "A"});
  auto f = safety_prefix(ts, none);
  EXPECT_TRUE(f.fallback);
  EXPECT_EQ(f.state, 0u);
}

TEST(ToDot, MarksAccepting) {
  auto ts = build_ts(three_variants(), StateAbstraction::parse("set:1"));
  auto dot = to_dot(ts);
  EXPECT_NE(dot.find("doublecircle"), std::string::npos);
  EXPECT_NE(dot.find("s0 -> s1"), std::string::npos);
}
