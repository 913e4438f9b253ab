#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ppm/evaluation.hpp"
#include "ppm/generator.hpp"

using namespace ppm;

TEST(Metrics, HandArithmetic) {
  EXPECT_DOUBLE_EQ(mape({100, 200}, {110, 180}), 10.0);
  EXPECT_DOUBLE_EQ(rmspe({100, 200}, {110, 180}), 10.0);
  EXPECT_DOUBLE_EQ(mape({50}, {100}), 100.0);
  EXPECT_DOUBLE_EQ(rmspe({50}, {100}), 100.0);
  EXPECT_DOUBLE_EQ(mape({100, 100}, {100, 100}), 0.0);
}

TEST(Metrics, ZeroActualsExcluded) {
  auto m = mape_detail({0, 100}, {5, 150});
  EXPECT_DOUBLE_EQ(m.value, 50.0);
  EXPECT_EQ(m.used, 1u);
  EXPECT_EQ(m.excluded, 1u);
  EXPECT_THROW(mape({0, 0}, {1, 2}), InvalidArgument);
  EXPECT_THROW(mape({1, 2}, {1}), InvalidArgument);
}

TEST(Metrics, RmspeDominatesMape) {
  std::mt19937 rng(1000);
  std::uniform_real_distribution<double> a(1, 1e6), f(0, 2e6);
  for (int rep = 0; rep < 1000; ++rep) {
    std::size_t n = 1 + rng() % 30;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(a(rng));
      y.push_back(f(rng));
    }
    EXPECT_GE(rmspe(x, y), mape(x, y) - 1e-9);
    EXPECT_GE(mape(x, y), 0.0);
  }
}

TEST(PathMetrics, HandArithmetic) {
  auto s = path_metrics({"a", "b", "c"}, {"a", "c", "b"}, 3);
  EXPECT_NEAR(s.dam, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.pre, 1.0 / 3.0, 1e-12);
  auto same = path_metrics({"a", "b", "c", "d"}, {"a", "b", "c", "x"}, 2);
  EXPECT_DOUBLE_EQ(same.dam, 1.0);
  EXPECT_DOUBLE_EQ(same.pre, 1.0);
  auto none = path_metrics({"x"}, {"a"}, 1);
  EXPECT_DOUBLE_EQ(none.dam, 0.0);
  EXPECT_DOUBLE_EQ(none.pre, 0.0);
  EXPECT_THROW(path_metrics({"a"}, {"a"}, 0), InvalidArgument);
}

TEST(PathMetrics, FullContinuation) {
  auto e = path_metrics_full({}, {});
  EXPECT_DOUBLE_EQ(e.dam, 1.0);
  EXPECT_DOUBLE_EQ(e.pre, 1.0);
  auto s = path_metrics_full({"a", "b"}, {"a", "b", "c", "d"});
  EXPECT_DOUBLE_EQ(s.dam, 0.5);
  EXPECT_DOUBLE_EQ(s.pre, 0.5);
}

TEST(PathMetrics, Bounds) {
  std::mt19937 rng(3);
  const std::vector<std::string> al{"a", "b", "c"};
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<std::string> p, a;
    for (std::size_t i = rng() % 7; i > 0; --i) p.push_back(al[rng() % 3]);
    for (std::size_t i = 1 + rng() % 7; i > 0; --i) a.push_back(al[rng() % 3]);
    for (std::size_t h = 1; h <= 5; ++h) {
      auto s = path_metrics(p, a, h);
      EXPECT_GE(s.dam, 0.0);
      EXPECT_LE(s.dam, 1.0);
      EXPECT_GE(s.pre, 0.0);
      EXPECT_LE(s.pre, 1.0);
    }
  }
}

TEST(RandomBaseline, FollowsTransitionFrequencies) {
  auto log = fixtures::control_flow({{"A", "B", "C"}, {"A", "B", "C"}, {"A", "B", "D"}, {"A", "B", "E"}});
  auto ts = build_ts(log, StateAbstraction::parse("set"));
  auto from = *ts.find(StateRepr(ActivitySet{"A", "B"}));
  std::mt19937_64 rng(5);
  std::map<std::string, double> freq;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto p = random_path(ts, from, rng);
    ASSERT_EQ(p.activities.size(), 1u);
    freq[p.activities[0]] += 1.0 / draws;
  }
  EXPECT_NEAR(freq["C"], 0.5, 0.01);
  EXPECT_NEAR(freq["D"], 0.25, 0.01);
  EXPECT_NEAR(freq["E"], 0.25, 0.01);
}

TEST(RandomBaseline, StopsAtAcceptingStatesByEndShare) {
  // {A,B} ends 1 trace and continues 3 times
  auto log = fixtures::control_flow({{"A", "B"}, {"A", "B", "C"}, {"A", "B", "C"}, {"A", "B", "C"}});
  auto ts = build_ts(log, StateAbstraction::parse("set"));
  auto from = *ts.find(StateRepr(ActivitySet{"A", "B"}));
  std::mt19937_64 rng(9);
  int stopped = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) stopped += random_path(ts, from, rng).activities.empty();
  EXPECT_NEAR(stopped / double(draws), 0.25, 0.01);
}

TEST(RemoveVariants, Fractions) {
  auto log = fixtures::control_flow(
      {{"a", "b"}, {"a", "b"}, {"a", "c"}, {"a", "d"}, {"a", "e"}, {"a", "c"}, {"a", "f", "b"}});
  auto none = remove_variants(log, {0.0, std::nullopt, 1});
  EXPECT_EQ(none.train.size(), log.size());
  EXPECT_TRUE(none.removed_variants.empty());

  auto half = remove_variants(log, {0.5, std::nullopt, 1});
  EXPECT_EQ(half.removed_variants.size(), 2u);  // floor(5 * 0.5)
  EXPECT_EQ(variants(half.train).size(), 3u);
  EXPECT_EQ(half.train.size() + half.removed_cases.size(), log.size());
  for (const auto& t : half.train.traces())
    for (const auto& v : half.removed_variants) EXPECT_NE(t.activities(), v);
  auto again = remove_variants(log, {0.5, std::nullopt, 1});
  EXPECT_EQ(again.removed_cases, half.removed_cases);

  auto by_activity = remove_variants(log, {0.0, std::string("b"), 1});
  EXPECT_EQ(by_activity.removed_variants.size(), 2u);
  for (const auto& t : by_activity.train.traces())
    for (const auto& e : t.events) EXPECT_NE(e.activity, "b");

  EXPECT_THROW(remove_variants(log, {1.0, std::nullopt, 1}), InvalidArgument);
  EXPECT_THROW(remove_variants(log, {1.5, std::nullopt, 1}), InvalidArgument);
}

TEST(CrossValidate, DeterministicAndComplete) {
  auto log = fixtures::loans();
  TrainOptions o;
  o.kind = PredictorKind::vda;
  EvaluationOptions e;
  e.folds = 3;
  e.path_metrics = true;
  e.random_baseline = true;
  e.random_draws = 300;
  auto a = cross_validate(log, o, e);
  auto b = cross_validate(log, o, e);
  EXPECT_EQ(a.mape.folds, b.mape.folds);
  EXPECT_EQ(a.random_paths[0].dam.folds, b.random_paths[0].dam.folds);
  // every prefix 1..|s|-1 of every trace is scored exactly once
  EXPECT_EQ(a.samples + a.excluded, 9u);
  EXPECT_EQ(a.mape.folds.size(), 3u);
  EXPECT_EQ(a.paths.size(), 6u);
  EXPECT_EQ(a.paths.back().horizon, 0u);
  EXPECT_EQ(a.paths.back().samples, 9u);
}

TEST(CrossValidate, LeaveOneOutSeesUnseenBehaviour) {
  // each variant occurs once, so the held-out trace never fits
  auto log = fixtures::control_flow({{"A", "B", "C"}, {"A", "D", "C"}, {"A", "E", "C"}});
  TrainOptions o;
  o.kind = PredictorKind::vda;
  EvaluationOptions e;
  e.folds = 3;
  auto r = cross_validate(log, o, e);
  EXPECT_EQ(r.safety_used, 3u);
  EXPECT_EQ(r.samples, 6u);
}

TEST(CrossValidate, Errors) {
  auto log = fixtures::loans();
  TrainOptions o;
  EvaluationOptions e;
  e.folds = 5;
  EXPECT_THROW(cross_validate(log, o, e), InvalidArgument);
  e.folds = 1;
  EXPECT_THROW(cross_validate(log, o, e), InvalidArgument);
}

TEST(Reports, TablesAndJson) {
  auto log = fixtures::loans();
  TrainOptions o;
  o.kind = PredictorKind::vda;
  EvaluationOptions e;
  e.folds = 3;
  e.path_metrics = true;
  auto r = cross_validate(log, o, e);
  auto table = format_time_table({r});
  EXPECT_NE(table.find("vda"), std::string::npos);
  EXPECT_NE(table.find("MAPE"), std::string::npos);
  auto paths = format_path_table(r);
  EXPECT_NE(paths.find("E#"), std::string::npos);
  auto j = to_json(r);
  EXPECT_EQ(j.at("predictor"), "vda");
  EXPECT_EQ(j.at("folds"), 3);
  auto tsv = path_series_tsv(r);
  EXPECT_EQ(tsv.rfind("horizon\tdam\tpre", 0), 0u);
}

namespace {

GeneratorSpec small_spec() {
  GeneratorSpec s;
  s.seed = 99;
  s.cases = 10000;
  s.attributes.push_back({"tier", AttributeKind::nominal, {"gold", "basic"}, {0.4, 0.6}, 0, 0, 0});
  s.variants.push_back({{"a", "b", "c"}, 0.5, {{"tier=gold", 2.0}}});
  s.variants.push_back({{"a", "c"}, 0.3, {}});
  s.variants.push_back({{"a", "d", "c"}, 0.2, {}});
  s.activities["b"] = {7200, 0.1, {{"tier=gold", 0.5}}, {}};
  return s;
}

} // namespace

TEST(Generator, Deterministic) {
  auto s = small_spec();
  s.cases = 200;
  auto a = serialize_log(generate_log(s));
  EXPECT_EQ(a, serialize_log(generate_log(s)));
  s.seed = 100;
  EXPECT_NE(a, serialize_log(generate_log(s)));
}

TEST(Generator, VariantFrequencies) {
  auto log = generate_log(small_spec());
  ASSERT_EQ(log.size(), 10000u);
  // gold: weights 1.0/0.3/0.2; basic: 0.5/0.3/0.2
  const double gold = 0.4, basic = 0.6;
  std::map<std::vector<std::string>, double> expect{
      {{"a", "b", "c"}, gold * 1.0 / 1.5 + basic * 0.5},
      {{"a", "c"}, gold * 0.3 / 1.5 + basic * 0.3},
      {{"a", "d", "c"}, gold * 0.2 / 1.5 + basic * 0.2},
  };
  auto vars = variants(log);
  ASSERT_EQ(vars.size(), 3u);
  for (const auto& [v, ids] : vars) EXPECT_NEAR(static_cast<double>(ids.size()) / 10000.0, expect.at(v), 0.02);
}

TEST(Generator, DurationsFollowFactors) {
  auto s = small_spec();
  s.activities["b"].jitter = 0.0;
  auto log = generate_log(s);
  for (const auto& t : log.traces()) {
    if (t.size() != 3 || t.events[1].activity != "b") continue;
    bool gold = std::get<std::string>(t.events[1].attributes[0]) == "gold";
    EXPECT_EQ(t.events[1].timestamp - t.events[0].timestamp, gold ? 3600 : 7200);
  }
}

TEST(Generator, RejectsBadSpecs) {
  auto s = small_spec();
  s.variants[0].probability = 0.9;
  EXPECT_THROW(generate_log(s), InvalidArgument);
  EXPECT_THROW(generator_spec_from_json(nlohmann::json::parse(R"({"variants": 3})")), InvalidArgument);
  auto j = nlohmann::json::parse(fixtures::read_file(fixtures::sample_path("stationary.json")));
  EXPECT_NO_THROW(generator_spec_from_json(j));
}
