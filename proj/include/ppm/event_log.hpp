#ifndef PPM_EVENT_LOG_HPP
#define PPM_EVENT_LOG_HPP

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ppm/error.hpp"

namespace ppm {

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;
/// Durations are kept in whole seconds everywhere.
using Duration = std::int64_t;

enum class AttributeKind { nominal, numeric };

struct AttributeDecl {
  std::string name;
  AttributeKind kind = AttributeKind::nominal;

  friend bool operator==(const AttributeDecl&, const AttributeDecl&) = default;
};

using AttributeSchema = std::vector<AttributeDecl>;

/// monostate is the missing value.
using AttributeValue = std::variant<std::monostate, std::string, double>;

inline bool is_missing(const AttributeValue& v) {
  return std::holds_alternative<std::monostate>(v);
}

struct Event {
  std::string activity;
  std::string case_id;
  Timestamp timestamp = 0;
  std::vector<AttributeValue> attributes;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  std::span<const Event> view() const { return events; }

  /// The first min(k, size) events.
  Trace prefix(std::size_t k) const {
    Trace t{case_id, {}};
    t.events.assign(events.begin(),
                    events.begin() + static_cast<std::ptrdiff_t>(std::min(k, events.size())));
    return t;
  }

  std::vector<std::string> activities() const {
    std::vector<std::string> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.activity);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Timestamps

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline std::optional<Timestamp> civil_to_epoch(int y, int mo, int d, int h, int mi, int sec) {
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60) return std::nullopt;
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + sec;
}

} // namespace detail

/// Accepts ISO-8601 (`YYYY-MM-DD[THH:MM[:SS[.fff]]][Z|±HH:MM]`, a space may
/// replace `T`), the `DD-MM-YYYY:HH.MM` form and bare epoch seconds. Naive
/// times are UTC.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;

  // plain epoch seconds
  if (!s.empty() && s.size() <= 12 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    Timestamp v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
  }

  // DD-MM-YYYY:HH.MM
  if (s.size() == 16 && s[2] == '-' && s[5] == '-' && s[10] == ':' && s[13] == '.') {
    if (!detail::parse_int(s.substr(0, 2), d) || !detail::parse_int(s.substr(3, 2), mo) ||
        !detail::parse_int(s.substr(6, 4), y) || !detail::parse_int(s.substr(11, 2), h) ||
        !detail::parse_int(s.substr(14, 2), mi))
      return std::nullopt;
    return detail::civil_to_epoch(y, mo, d, h, mi, 0);
  }

  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), mo) ||
      !detail::parse_int(s.substr(8, 2), d))
    return std::nullopt;
  std::string_view rest = s.substr(10);
  int offset = 0;
  if (!rest.empty()) {
    if (rest[0] != 'T' && rest[0] != ' ') return std::nullopt;
    rest.remove_prefix(1);
    if (rest.size() < 5 || rest[2] != ':') return std::nullopt;
    if (!detail::parse_int(rest.substr(0, 2), h) || !detail::parse_int(rest.substr(3, 2), mi))
      return std::nullopt;
    rest.remove_prefix(5);
    if (!rest.empty() && rest[0] == ':') {
      if (rest.size() < 3 || !detail::parse_int(rest.substr(1, 2), sec)) return std::nullopt;
      rest.remove_prefix(3);
      if (!rest.empty() && rest[0] == '.') {
        std::size_t i = 1;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
        if (i == 1) return std::nullopt;
        rest.remove_prefix(i);
      }
    }
    if (rest == "Z" || rest == "z") {
      rest = {};
    } else if (!rest.empty()) {
      if ((rest[0] != '+' && rest[0] != '-') || rest.size() != 6 || rest[3] != ':')
        return std::nullopt;
      int oh = 0, om = 0;
      if (!detail::parse_int(rest.substr(1, 2), oh) || !detail::parse_int(rest.substr(4, 2), om))
        return std::nullopt;
      offset = (oh * 3600 + om * 60) * (rest[0] == '-' ? -1 : 1);
    }
  }
  auto t = detail::civil_to_epoch(y, mo, d, h, mi, sec);
  if (!t) return std::nullopt;
  return *t - offset;
}

/// `YYYY-MM-DDTHH:MM:SSZ`.
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  Timestamp days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  Timestamp secs = t - days * 86400;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(secs / 3600), static_cast<int>((secs / 60) % 60),
                static_cast<int>(secs % 60));
  return buf;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// Event log

/// Immutable set of traces keyed (and ordered) by case id.
class EventLog {
public:
  EventLog() = default;

  /// Validates every trace against the schema; traces are reordered by case id.
  EventLog(AttributeSchema schema, std::vector<Trace> traces)
      : schema_(std::move(schema)), traces_(std::move(traces)) {
    std::stable_sort(traces_.begin(), traces_.end(),
                     [](const Trace& a, const Trace& b) { return a.case_id < b.case_id; });
    nominal_values_.resize(schema_.size());
    for (std::size_t i = 0; i < traces_.size(); ++i) {
      const auto& t = traces_[i];
      if (i > 0 && traces_[i - 1].case_id == t.case_id)
        throw InvalidArgument("duplicate case id '" + t.case_id + "'");
      for (std::size_t k = 0; k < t.events.size(); ++k) {
        const auto& e = t.events[k];
        if (e.case_id != t.case_id)
          throw InvalidArgument("event of case '" + e.case_id + "' inside trace '" + t.case_id + "'");
        if (e.timestamp < 0) throw InvalidArgument("negative timestamp in case '" + t.case_id + "'");
        if (k > 0 && e.timestamp < t.events[k - 1].timestamp)
          throw InvalidArgument("timestamps decrease in case '" + t.case_id + "'");
        if (e.attributes.size() != schema_.size())
          throw InvalidArgument("attribute arity mismatch in case '" + t.case_id + "'");
        for (std::size_t a = 0; a < schema_.size(); ++a) {
          const auto& v = e.attributes[a];
          if (is_missing(v)) continue;
          bool nominal = schema_[a].kind == AttributeKind::nominal;
          if (nominal != std::holds_alternative<std::string>(v))
            throw InvalidArgument("attribute '" + schema_[a].name + "' has the wrong kind");
          if (nominal) nominal_values_[a].insert(std::get<std::string>(v));
        }
        alphabet_.insert(e.activity);
      }
    }
  }

  const AttributeSchema& schema() const { return schema_; }
  const std::vector<Trace>& traces() const { return traces_; }
  std::size_t size() const { return traces_.size(); }
  bool empty() const { return traces_.empty(); }
  const std::set<std::string>& activity_alphabet() const { return alphabet_; }

  /// Observed values of a nominal attribute (empty for numeric slots).
  const std::set<std::string>& nominal_values(std::size_t attr) const {
    return nominal_values_.at(attr);
  }

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& t : traces_) n += t.size();
    return n;
  }

  const Trace* find(std::string_view case_id) const {
    auto it = std::lower_bound(traces_.begin(), traces_.end(), case_id,
                               [](const Trace& t, std::string_view id) { return t.case_id < id; });
    return it != traces_.end() && it->case_id == case_id ? &*it : nullptr;
  }

  std::optional<std::size_t> attribute_index(std::string_view name) const {
    for (std::size_t i = 0; i < schema_.size(); ++i)
      if (schema_[i].name == name) return i;
    return std::nullopt;
  }

  /// Log restricted to the traces selected by `keep`.
  template <typename Pred>
  EventLog filter(Pred keep) const {
    std::vector<Trace> out;
    for (const auto& t : traces_)
      if (keep(t)) out.push_back(t);
    return EventLog(schema_, std::move(out));
  }

private:
  AttributeSchema schema_;
  std::vector<Trace> traces_;
  std::set<std::string> alphabet_;
  std::vector<std::set<std::string>> nominal_values_;
};

// ---------------------------------------------------------------------------
// Trace primitives

/// Remaining time after the i-th event (1-based). 0 outside [1, |trace|].
inline Duration rem(std::span<const Event> trace, std::size_t i) {
  if (trace.empty() || i < 1 || i > trace.size()) return 0;
  return trace.back().timestamp - trace[i - 1].timestamp;
}

inline Duration rem(const Trace& trace, std::size_t i) { return rem(trace.view(), i); }

/// Latest non-missing value of attribute slot `attr`, missing if never set.
inline AttributeValue last(std::span<const Event> trace, std::size_t attr) {
  for (auto it = trace.rbegin(); it != trace.rend(); ++it)
    if (attr < it->attributes.size() && !is_missing(it->attributes[attr]))
      return it->attributes[attr];
  return std::monostate{};
}

inline AttributeValue last(const Trace& trace, std::size_t attr) { return last(trace.view(), attr); }

/// Case ids grouped by activity sequence.
inline std::map<std::vector<std::string>, std::vector<std::string>> variants(const EventLog& log) {
  std::map<std::vector<std::string>, std::vector<std::string>> out;
  for (const auto& t : log.traces()) out[t.activities()].push_back(t.case_id);
  return out;
}

// ---------------------------------------------------------------------------
// CSV format

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row);
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline AttributeSchema parse_header(const std::vector<std::string>& cols) {
  if (cols.size() < 3 || cols[0] != "case_id" || cols[1] != "activity" || cols[2] != "timestamp")
    throw ParseError("header must start with case_id,activity,timestamp", 1);
  AttributeSchema schema;
  for (std::size_t i = 3; i < cols.size(); ++i) {
    std::string_view c = cols[i];
    auto first = c.find(':');
    auto second = c.rfind(':');
    if (!c.starts_with("attr:") || first == second)
      throw ParseError("bad attribute column '" + cols[i] + "'", 1);
    std::string name(c.substr(first + 1, second - first - 1));
    std::string_view kind = c.substr(second + 1);
    if (name.empty()) throw ParseError("empty attribute name", 1);
    if (kind == "nominal")
      schema.push_back({name, AttributeKind::nominal});
    else if (kind == "numeric")
      schema.push_back({name, AttributeKind::numeric});
    else
      throw ParseError("unknown attribute kind '" + std::string(kind) + "'", 1);
  }
  return schema;
}

inline AttributeValue parse_attribute(const std::string& text, AttributeKind kind, std::size_t row) {
  if (text.empty() || text == "-") return std::monostate{};
  if (kind == AttributeKind::nominal) return text;
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size())
    throw ParseError("non-numeric value '" + text + "' in numeric attribute", row);
  return v;
}

} // namespace detail

/// Reads the CSV event-log format: header
/// `case_id,activity,timestamp[,attr:<name>:<nominal|numeric>...]`, one event per row.
/// Events are grouped by case and stably sorted by timestamp.
inline EventLog parse_log(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  AttributeSchema schema;
  bool have_header = false;
  std::map<std::string, std::vector<Event>> cases;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!have_header) {
      schema = detail::parse_header(detail::split_csv_line(line, row));
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line, row);
    if (f.size() != 3 + schema.size())
      throw ParseError("expected " + std::to_string(3 + schema.size()) + " fields, got " +
                           std::to_string(f.size()),
                       row);
    if (f[0].empty()) throw ParseError("empty case id", row);
    if (f[1].empty()) throw ParseError("empty activity", row);
    auto ts = parse_timestamp(f[2]);
    if (!ts) throw ParseError("unparseable timestamp '" + f[2] + "'", row);
    if (*ts < 0) throw ParseError("timestamp before 1970", row);
    Event e{f[1], f[0], *ts, {}};
    e.attributes.reserve(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i)
      e.attributes.push_back(detail::parse_attribute(f[3 + i], schema[i].kind, row));
    cases[e.case_id].push_back(std::move(e));
  }
  if (!have_header) throw ParseError("missing header");
  std::vector<Trace> traces;
  traces.reserve(cases.size());
  for (auto& [id, events] : cases) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    traces.push_back(Trace{id, std::move(events)});
  }
  return EventLog(std::move(schema), std::move(traces));
}

/// Parses and additionally requires the header to declare exactly `expected`.
inline EventLog parse_log(std::istream& in, const AttributeSchema& expected) {
  EventLog log = parse_log(in);
  if (log.schema() != expected) throw ParseError("attribute columns do not match the expected schema", 1);
  return log;
}

inline EventLog parse_log_string(const std::string& csv) {
  std::istringstream in(csv);
  return parse_log(in);
}

inline std::string csv_header(const AttributeSchema& schema) {
  std::string h = "case_id,activity,timestamp";
  for (const auto& a : schema)
    h += ",attr:" + a.name + (a.kind == AttributeKind::nominal ? ":nominal" : ":numeric");
  return h;
}

/// Deterministic: traces by case id, events by position, ISO-8601 UTC timestamps.
inline void serialize_log(const EventLog& log, std::ostream& out) {
  out << csv_header(log.schema()) << '\n';
  for (const auto& t : log.traces()) {
    for (const auto& e : t.events) {
      out << detail::csv_escape(e.case_id) << ',' << detail::csv_escape(e.activity) << ','
          << format_timestamp(e.timestamp);
      for (const auto& v : e.attributes) {
        out << ',';
        if (const auto* s = std::get_if<std::string>(&v))
          out << detail::csv_escape(*s);
        else if (const auto* d = std::get_if<double>(&v))
          out << format_number(*d);
      }
      out << '\n';
    }
  }
}

inline std::string serialize_log(const EventLog& log) {
  std::ostringstream out;
  serialize_log(log, out);
  return out.str();
}

} // namespace ppm

#endif // PPM_EVENT_LOG_HPP
