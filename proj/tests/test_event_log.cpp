#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "ppm/event_log.hpp"
#include "ppm/sequence.hpp"

using namespace ppm;

namespace {
std::pair<std::string, Timestamp> split_csv_line_for_test(const std::string& row) {
  auto cols = detail::split_csv_line(row, 1);
  return {cols[0], *parse_timestamp(cols[2])};
}
} // namespace

TEST(EventLog, LoansGroupsIntoThreeTraces) {
  auto log = fixtures::loans();
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log.event_count(), 12u);
  const auto* t = log.find("65923");
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->activities(), (std::vector<std::string>{"A", "B", "C", "F"}));
  EXPECT_EQ(log.activity_alphabet(), (std::set<std::string>{"A", "B", "C", "D", "E", "F"}));
  for (const auto& tr : log.traces()) EXPECT_EQ(tr.size(), 4u);
}

TEST(EventLog, EmptySourceWithHeader) {
  auto log = parse_log_string("case_id,activity,timestamp,attr:x:numeric\n");
  EXPECT_TRUE(log.empty());
  EXPECT_EQ(log.schema().size(), 1u);
}

TEST(EventLog, ShuffledRowsMatchPresortedInput) {
  auto text = fixtures::read_file(fixtures::sample_path("loans.csv"));
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  auto header = lines.front();
  std::vector<std::string> rows(lines.begin() + 1, lines.end());

  // oracle: sort rows by (case, timestamp) outside the parser
  auto sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), [](const std::string& a, const std::string& b) {
    auto ka = split_csv_line_for_test(a), kb = split_csv_line_for_test(b);
    return std::tie(ka.first, ka.second) < std::tie(kb.first, kb.second);
  });
  std::string sorted_csv = header + "\n";
  for (auto& r : sorted) sorted_csv += r + "\n";
  auto expected = parse_log_string(sorted_csv);

  std::mt19937 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(rows.begin(), rows.end(), rng);
    std::string csv = header + "\n";
    for (auto& r : rows) csv += r + "\n";
    EXPECT_EQ(serialize_log(parse_log_string(csv)), serialize_log(expected));
  }
}

TEST(EventLog, RejectsWrongArityWithRow) {
  try {
    parse_log_string("case_id,activity,timestamp\nc,A,2020-01-01\nc,B\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(EventLog, RejectsBadTimestampWithRow) {
  try {
    parse_log_string("case_id,activity,timestamp\nc,A,yesterday\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(EventLog, RejectsNonNumericText) {
  EXPECT_THROW(parse_log_string("case_id,activity,timestamp,attr:a:numeric\nc,A,2020-01-01,abc\n"), ParseError);
}

TEST(EventLog, ToleratesCrlf) {
  auto log = parse_log_string("case_id,activity,timestamp\r\nc,A,2020-01-01T00:00:00Z\r\nc,B,2020-01-01T00:01:00Z\r\n");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(rem(log.traces()[0], 1), 60);
}

TEST(EventLog, EqualTimestampsKeepFileOrder) {
  auto log = parse_log_string("case_id,activity,timestamp\nc,X,5\nc,A,5\nc,M,5\n");
  EXPECT_EQ(log.traces()[0].activities(), (std::vector<std::string>{"X", "A", "M"}));
}

TEST(Timestamp, Formats) {
  EXPECT_EQ(parse_timestamp("1970-01-01T00:00:00Z"), 0);
  EXPECT_EQ(parse_timestamp("1970-01-02"), 86400);
  EXPECT_EQ(parse_timestamp("1970-01-01T01:00:00+01:00"), 0);
  EXPECT_EQ(parse_timestamp("02-01-1970:00.01"), 86460);
  EXPECT_EQ(parse_timestamp("1970-01-01 00:00:07.25"), 7);
  EXPECT_FALSE(parse_timestamp("1970-13-01").has_value());
  EXPECT_EQ(format_timestamp(1700000000), "2023-11-14T22:13:20Z");
  EXPECT_EQ(parse_timestamp(format_timestamp(1700000000)), 1700000000);
}

TEST(Rem, Loans) {
  auto log = fixtures::loans();
  const auto& t = *log.find("65923");
  EXPECT_EQ(rem(t, 1), 189600);
  EXPECT_EQ(rem(t, 4), 0);
  EXPECT_EQ(rem(t, 0), 0);
  EXPECT_EQ(rem(t, 5), 0);
  EXPECT_EQ(rem(std::span<const Event>{}, 3), 0);
}

TEST(Rem, MonotoneAndTelescoping) {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    Trace t{"c", {}};
    Timestamp ts = 0;
    int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      ts += rng() % 5000;
      t.events.push_back(Event{"a", "c", ts, {}});
    }
    for (std::size_t i = 1; i <= t.size(); ++i) {
      for (std::size_t j = i; j <= t.size(); ++j) EXPECT_GE(rem(t, i), rem(t, j));
      if (i < t.size()) {
        EXPECT_EQ(rem(t, i), rem(t, i + 1) + (t.events[i].timestamp - t.events[i - 1].timestamp));
      }
    }
  }
}

TEST(Last, Loans) {
  auto log = fixtures::loans();
  auto cat = *log.attribute_index("Category");
  auto amount = *log.attribute_index("Amount");
  const auto& t1 = *log.find("65923");
  EXPECT_EQ(std::get<std::string>(last(t1, cat)), "Gold");
  EXPECT_TRUE(is_missing(last(t1.prefix(1), cat)));
  EXPECT_DOUBLE_EQ(std::get<double>(last(*log.find("65925"), amount)), 500.0);
}

TEST(Variants, Grouping) {
  auto log = fixtures::loans();
  auto v = variants(log);
  EXPECT_EQ(v.size(), 3u);
  for (const auto& [seq, ids] : v) EXPECT_EQ(ids.size(), 1u);

  auto one = parse_log_string("case_id,activity,timestamp\nx,A,1\n");
  EXPECT_EQ(variants(one).size(), 1u);

  auto dup = parse_log_string(
      "case_id,activity,timestamp,attr:k:nominal\na,A,1,p\na,B,2,p\nb,A,1,q\nb,B,2,q\n");
  auto dv = variants(dup);
  ASSERT_EQ(dv.size(), 1u);
  EXPECT_EQ(dv.begin()->second, (std::vector<std::string>{"a", "b"}));
}

TEST(EventLog, SerializeRoundTrip) {
  auto log = fixtures::loans();
  auto text = serialize_log(log);
  auto again = parse_log_string(text);
  EXPECT_EQ(serialize_log(again), text);
  EXPECT_EQ(again.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& a = log.traces()[i];
    const auto& b = again.traces()[i];
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a.events[k].activity, b.events[k].activity);
      EXPECT_EQ(a.events[k].timestamp, b.events[k].timestamp);
      EXPECT_EQ(a.events[k].attributes, b.events[k].attributes);
    }
  }
}

TEST(EventLog, SerializeRoundTripRandom) {
  std::mt19937 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    std::string csv = "case_id,activity,timestamp,attr:n:nominal,attr:v:numeric\n";
    int cases = 1 + static_cast<int>(rng() % 6);
    for (int c = 0; c < cases; ++c) {
      long ts = 1000;
      for (int e = 0, n = 1 + static_cast<int>(rng() % 5); e < n; ++e) {
        ts += rng() % 100000;
        std::string nom = rng() % 3 == 0 ? "" : (rng() % 2 ? "x,y" : "plain");
        std::string num = rng() % 4 == 0 ? "-" : std::to_string((rng() % 100000) / 7.0);
        csv += "case" + std::to_string(c) + "," + std::string(1, char('a' + rng() % 4)) + "," + std::to_string(ts) +
               "," + (nom.find(',') != std::string::npos ? "\"" + nom + "\"" : nom) + "," + num + "\n";
      }
    }
    auto log = parse_log_string(csv);
    auto text = serialize_log(log);
    auto again = parse_log_string(text);
    ASSERT_EQ(again.size(), log.size());
    for (std::size_t i = 0; i < log.size(); ++i)
      for (std::size_t k = 0; k < log.traces()[i].size(); ++k)
        EXPECT_EQ(log.traces()[i].events[k].attributes, again.traces()[i].events[k].attributes);
    EXPECT_EQ(serialize_log(again), text);
  }
}

TEST(Multiset, LawsOnSmallUniverse) {
  // every multiset over {a,b,c} with multiplicities 0..2
  std::vector<Multiset<char>> all;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        Multiset<char> m;
        if (a) m.add('a', a);
        if (b) m.add('b', b);
        if (c) m.add('c', c);
        all.push_back(m);
      }
  for (const auto& x : all)
    for (const auto& y : all) {
      EXPECT_EQ(x.sum(y).cardinality(), x.cardinality() + y.cardinality());
      auto i = x.intersection(y);
      for (char e : {'a', 'b', 'c'}) {
        EXPECT_LE(i.count(e), std::min(x.count(e), y.count(e)));
        EXPECT_EQ(i.count(e), std::min(x.count(e), y.count(e)));
        EXPECT_EQ(x.sum(y).count(e), x.count(e) + y.count(e));
      }
    }
}

TEST(Sequence, HeadAndTail) {
  std::vector<int> v{1, 2, 3, 4};
  std::span<const int> s(v);
  EXPECT_EQ(hd(s, 2).size(), 2u);
  EXPECT_EQ(hd(s, 9).size(), 4u);
  EXPECT_EQ(hd(s, 0).size(), 0u);
  EXPECT_EQ(tl(s, 1).front(), 4);
  EXPECT_EQ(tl(s, 9).size(), 4u);
}
