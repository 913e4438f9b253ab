#ifndef PPM_SERVICE_HPP
#define PPM_SERVICE_HPP

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppm/archive.hpp"
#include "ppm/error.hpp"
#include "ppm/predictors.hpp"

namespace ppm {

/// Request rejected before prediction; maps to a 400 response.
class QueryError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

struct Query {
  std::vector<Event> events;
  std::optional<Timestamp> deadline;
  std::optional<std::string> model;
};

namespace detail {

inline Timestamp query_timestamp(const nlohmann::json& j, const std::string& what) {
  if (!j.is_string()) throw QueryError(what + " must be an ISO-8601 string");
  auto t = parse_timestamp(j.get<std::string>());
  if (!t) throw QueryError(what + " '" + j.get<std::string>() + "' is not a valid timestamp");
  return *t;
}

} // namespace detail

/// Validates a `POST /predict` body against the model's attribute schema.
/// Attributes not named in an event are missing for that event.
inline Query parse_query(const nlohmann::json& body, const EncodingSchema& schema) {
  if (!body.is_object()) throw QueryError("request body must be a JSON object");
  for (auto it = body.begin(); it != body.end(); ++it)
    if (it.key() != "events" && it.key() != "deadline" && it.key() != "model")
      throw QueryError("unknown request field '" + it.key() + "'");
  Query q;
  if (!body.contains("events") || !body.at("events").is_array()) throw QueryError("'events' must be an array");
  const auto& events = body.at("events");
  if (events.empty()) throw QueryError("'events' must not be empty");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string where = "events[" + std::to_string(i) + "]";
    if (!e.is_object()) throw QueryError(where + " must be an object");
    if (!e.contains("activity") || !e.at("activity").is_string() || e.at("activity").get<std::string>().empty())
      throw QueryError(where + ".activity must be a non-empty string");
    if (!e.contains("timestamp")) throw QueryError(where + ".timestamp is required");
    Event ev;
    ev.activity = e.at("activity").get<std::string>();
    ev.case_id = "query";
    ev.timestamp = detail::query_timestamp(e.at("timestamp"), where + ".timestamp");
    ev.attributes.assign(schema.attributes.size(), AttributeValue{});
    if (e.contains("attributes")) {
      const auto& attrs = e.at("attributes");
      if (!attrs.is_object()) throw QueryError(where + ".attributes must be an object");
      for (auto it = attrs.begin(); it != attrs.end(); ++it) {
        auto pos = std::find_if(schema.attributes.begin(), schema.attributes.end(),
                                [&](const AttributeEncoder& a) { return a.name == it.key(); });
        if (pos == schema.attributes.end()) throw QueryError(where + ": unknown attribute '" + it.key() + "'");
        auto& slot = ev.attributes[static_cast<std::size_t>(pos - schema.attributes.begin())];
        const auto& v = it.value();
        if (v.is_null()) continue;
        if (pos->kind == AttributeKind::nominal) {
          if (!v.is_string()) throw QueryError(where + ": attribute '" + it.key() + "' must be a string");
          slot = v.get<std::string>();
        } else {
          if (!v.is_number()) throw QueryError(where + ": attribute '" + it.key() + "' must be a number");
          slot = v.get<double>();
        }
      }
    }
    if (!q.events.empty() && ev.timestamp < q.events.back().timestamp)
      throw QueryError(where + " is earlier than the event before it");
    q.events.push_back(std::move(ev));
  }
  if (body.contains("deadline") && !body.at("deadline").is_null())
    q.deadline = detail::query_timestamp(body.at("deadline"), "deadline");
  if (body.contains("model") && !body.at("model").is_null()) {
    if (!body.at("model").is_string()) throw QueryError("'model' must be a string");
    q.model = body.at("model").get<std::string>();
  }
  return q;
}

struct SimilarTrace {
  enum class Slot { fastest_with_prefix, fastest_on_path };
  Slot slot = Slot::fastest_with_prefix;
  std::string case_id;
  std::vector<std::string> activities;
  /// Time the historical case still needed after the matched prefix.
  Duration remaining_seconds = 0;
};

/// Up to two historical cases: the fastest that starts with the running
/// activity sequence, and the fastest of those whose continuation is the
/// predicted path.
inline std::vector<SimilarTrace> find_similar(const std::vector<HistoryTrace>& history,
                                              const std::vector<std::string>& running,
                                              const std::vector<std::string>& predicted) {
  const HistoryTrace* best_prefix = nullptr;
  const HistoryTrace* best_path = nullptr;
  Duration prefix_rem = 0, path_rem = 0;
  const std::size_t k = running.size();
  for (const auto& h : history) {
    if (h.activities.size() < k || h.timestamps.empty()) continue;
    if (!std::equal(running.begin(), running.end(), h.activities.begin())) continue;
    Duration r = h.timestamps.back() - h.timestamps[k == 0 ? 0 : k - 1];
    auto better = [&](const HistoryTrace* cur, Duration cur_rem) {
      return !cur || r < cur_rem || (r == cur_rem && h.case_id < cur->case_id);
    };
    if (better(best_prefix, prefix_rem)) {
      best_prefix = &h;
      prefix_rem = r;
    }
    bool on_path = h.activities.size() == k + predicted.size() &&
                   std::equal(predicted.begin(), predicted.end(), h.activities.begin() + static_cast<std::ptrdiff_t>(k));
    if (on_path && better(best_path, path_rem)) {
      best_path = &h;
      path_rem = r;
    }
  }
  std::vector<SimilarTrace> out;
  if (best_prefix)
    out.push_back({SimilarTrace::Slot::fastest_with_prefix, best_prefix->case_id, best_prefix->activities, prefix_rem});
  if (best_path)
    out.push_back({SimilarTrace::Slot::fastest_on_path, best_path->case_id, best_path->activities, path_rem});
  return out;
}

struct QueryAnswer {
  RemainingPrediction remaining;
  Timestamp predicted_completion = 0;
  bool alarm = false;
  PathPrediction path;
  std::vector<SimilarTrace> similar;
};

inline QueryAnswer answer_query(const PredictorModel& m, const Query& q) {
  QueryAnswer a;
  a.remaining = predict_remaining(m, q.events);
  const auto secs = static_cast<Timestamp>(std::llround(a.remaining.seconds));
  a.predicted_completion = (q.events.empty() ? 0 : q.events.back().timestamp) + secs;
  a.alarm = q.deadline && a.predicted_completion > *q.deadline;
  a.path = predict_path(m, q.events);
  std::vector<std::string> running;
  for (const auto& e : q.events) running.push_back(e.activity);
  a.similar = find_similar(m.history, running, a.path.activities);
  return a;
}

inline nlohmann::json answer_json(const QueryAnswer& a, const std::string& model_id, const PredictorModel& m) {
  using nlohmann::json;
  json similar = json::array();
  for (const auto& s : a.similar)
    similar.push_back({{"kind", s.slot == SimilarTrace::Slot::fastest_with_prefix ? "fastest_with_prefix" : "fastest_on_path"},
                       {"case_id", s.case_id},
                       {"activities", s.activities},
                       {"remaining_seconds", s.remaining_seconds}});
  return {{"remaining_seconds", static_cast<std::int64_t>(std::llround(a.remaining.seconds))},
          {"predicted_completion", format_timestamp(a.predicted_completion)},
          {"alarm", a.alarm},
          {"path", {{"activities", a.path.activities}, {"probability", a.path.probability}}},
          {"similar", similar},
          {"fitting", a.remaining.fitting},
          {"safety_used", a.remaining.safety_used},
          {"model", {{"id", model_id}, {"kind", to_string(m.kind)}, {"abstraction", m.options.abstraction.to_string()}}}};
}

/// Named models behind shared pointers; a swap replaces a whole model and
/// requests already holding the old one finish on it.
class ModelRegistry {
public:
  using Handle = std::shared_ptr<const PredictorModel>;

  void put(const std::string& id, PredictorModel m) {
    auto h = std::make_shared<const PredictorModel>(std::move(m));
    std::lock_guard lock(mutex_);
    models_[id] = std::move(h);
    if (default_id_.empty()) default_id_ = id;
  }

  /// The default model when `id` is empty.
  std::pair<std::string, Handle> get(const std::string& id = {}) const {
    std::lock_guard lock(mutex_);
    const std::string& key = id.empty() ? default_id_ : id;
    auto it = models_.find(key);
    if (it == models_.end()) return {key, nullptr};
    return {key, it->second};
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : models_) out.push_back(id);
    return out;
  }

  std::string default_id() const {
    std::lock_guard lock(mutex_);
    return default_id_;
  }

private:
  mutable std::mutex mutex_;
  std::map<std::string, Handle> models_;
  std::string default_id_;
};

struct HttpReply {
  int status = 200;
  std::string body;
};

namespace detail {

inline HttpReply error_reply(int status, const std::string& message) {
  return {status, nlohmann::json{{"error", {{"status", status}, {"message", message}}}}.dump() + "\n"};
}

} // namespace detail

/// `POST /predict`.
inline HttpReply handle_predict(const ModelRegistry& registry, const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return detail::error_reply(400, "request body is not valid JSON");
  }
  std::string requested;
  if (j.is_object() && j.contains("model") && j.at("model").is_string()) requested = j.at("model").get<std::string>();
  auto [id, model] = registry.get(requested);
  if (!model) return detail::error_reply(404, requested.empty() ? "no model loaded" : "unknown model '" + requested + "'");
  try {
    auto q = parse_query(j, model->schema);
    return {200, answer_json(answer_query(*model, q), id, *model).dump(2) + "\n"};
  } catch (const QueryError& e) {
    return detail::error_reply(400, e.what());
  } catch (const std::exception& e) {
    return detail::error_reply(500, e.what());
  }
}

/// `GET /models`.
inline HttpReply handle_models(const ModelRegistry& registry) {
  nlohmann::json list = nlohmann::json::array();
  const auto def = registry.default_id();
  for (const auto& id : registry.ids()) {
    auto [_, m] = registry.get(id);
    if (!m) continue;
    list.push_back({{"id", id},
                    {"kind", to_string(m->kind)},
                    {"abstraction", m->options.abstraction.to_string()},
                    {"states", m->ts ? m->ts->state_count() : 0},
                    {"transitions", m->ts ? m->ts->transitions().size() : 0},
                    {"history", m->history.size()},
                    {"default", id == def}});
  }
  return {200, nlohmann::json{{"models", list}}.dump(2) + "\n"};
}

inline HttpReply handle_health(const ModelRegistry& registry) {
  return {200, nlohmann::json{{"status", "ok"}, {"models", registry.ids().size()}}.dump() + "\n"};
}

} // namespace ppm

#endif // PPM_SERVICE_HPP
