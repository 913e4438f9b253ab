#ifndef PPM_ARCHIVE_HPP
#define PPM_ARCHIVE_HPP

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ppm/error.hpp"
#include "ppm/predictors.hpp"

namespace ppm {

/// Versioned JSON model archive. Keys are written in sorted order and doubles
/// in shortest round-trip form, so equal models give byte-identical files.
inline constexpr const char* archive_format = "ppm-model";
inline constexpr int archive_version = 1;

namespace detail {

using nlohmann::json;

inline json regressor_options_json(const RegressorOptions& o) {
  return {{"grid", o.grid},
          {"folds", o.folds},
          {"C_grid", o.C_grid},
          {"gamma_grid", o.gamma_grid},
          {"C", o.C},
          {"gamma", o.gamma},
          {"epsilon_fraction", o.epsilon_fraction},
          {"tolerance", o.tolerance},
          {"max_iterations", o.max_iterations},
          {"max_examples", o.max_examples}};
}

inline RegressorOptions regressor_options_from(const json& j) {
  RegressorOptions o;
  o.grid = j.at("grid").get<bool>();
  o.folds = j.at("folds").get<std::size_t>();
  o.C_grid = j.at("C_grid").get<std::vector<double>>();
  o.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
  o.C = j.at("C").get<double>();
  o.gamma = j.at("gamma").get<double>();
  o.epsilon_fraction = j.at("epsilon_fraction").get<double>();
  o.tolerance = j.at("tolerance").get<double>();
  o.max_iterations = j.at("max_iterations").get<std::size_t>();
  o.max_examples = j.at("max_examples").get<std::size_t>();
  return o;
}

inline json train_options_json(const TrainOptions& o) {
  return {{"kind", to_string(o.kind)},
          {"abstraction", o.abstraction.to_string()},
          {"statistic", to_string(o.statistic)},
          {"scale_numeric", o.scale_numeric},
          {"nb_alpha", o.nb_alpha},
          {"svr", regressor_options_json(o.svr)},
          {"transition_svr", regressor_options_json(o.transition_svr)},
          {"seed", o.seed},
          {"keep_history", o.keep_history}};
}

inline TrainOptions train_options_from(const json& j) {
  TrainOptions o;
  o.kind = parse_predictor_kind(j.at("kind").get<std::string>());
  o.abstraction = StateAbstraction::parse(j.at("abstraction").get<std::string>());
  o.statistic = parse_vda_statistic(j.at("statistic").get<std::string>());
  o.scale_numeric = j.at("scale_numeric").get<bool>();
  o.nb_alpha = j.at("nb_alpha").get<double>();
  o.svr = regressor_options_from(j.at("svr"));
  o.transition_svr = regressor_options_from(j.at("transition_svr"));
  o.seed = j.at("seed").get<std::uint64_t>();
  o.keep_history = j.at("keep_history").get<bool>();
  return o;
}

inline std::string kind_name(AttributeKind k) { return k == AttributeKind::nominal ? "nominal" : "numeric"; }

inline AttributeKind attribute_kind_from(const std::string& s) {
  if (s == "nominal") return AttributeKind::nominal;
  if (s == "numeric") return AttributeKind::numeric;
  throw ModelError("unknown attribute kind '" + s + "' in archive");
}

inline json schema_json(const EncodingSchema& s) {
  json attrs = json::array();
  for (const auto& a : s.attributes)
    attrs.push_back({{"name", a.name}, {"kind", kind_name(a.kind)}, {"values", a.values}, {"min", a.min}, {"max", a.max}});
  return {{"activities", s.activities}, {"attributes", attrs}, {"state_block", s.state_block},
          {"scale_numeric", s.scale_numeric}};
}

inline EncodingSchema schema_from(const json& j) {
  EncodingSchema s;
  s.activities = j.at("activities").get<std::vector<std::string>>();
  for (const auto& a : j.at("attributes"))
    s.attributes.push_back({a.at("name").get<std::string>(), attribute_kind_from(a.at("kind").get<std::string>()),
                            a.at("values").get<std::vector<std::string>>(), a.at("min").get<double>(),
                            a.at("max").get<double>()});
  s.state_block = j.at("state_block").get<std::size_t>();
  s.scale_numeric = j.at("scale_numeric").get<bool>();
  return s;
}

inline json ts_json(const TransitionSystem& ts) {
  json states = json::array();
  for (const auto& s : ts.states()) states.push_back(s.items());
  json transitions = json::array();
  for (const auto& t : ts.transitions()) transitions.push_back(json::array({t.source, t.label, t.target, t.frequency}));
  return {{"abstraction", ts.abstraction().to_string()}, {"states", states}, {"transitions", transitions},
          {"end_counts", ts.end_counts()}};
}

inline TransitionSystem ts_from(const json& j) {
  auto abs = StateAbstraction::parse(j.at("abstraction").get<std::string>());
  std::vector<StateRepr> states;
  for (const auto& s : j.at("states")) {
    auto items = s.get<std::vector<std::string>>();
    switch (abs.kind) {
      case StateKind::set: states.emplace_back(ActivitySet(items.begin(), items.end())); break;
      case StateKind::multiset: states.emplace_back(ActivityBag::from(items)); break;
      case StateKind::sequence: states.emplace_back(std::move(items)); break;
    }
  }
  std::vector<Transition> transitions;
  for (const auto& t : j.at("transitions"))
    transitions.push_back({t.at(0).get<StateId>(), t.at(1).get<std::string>(), t.at(2).get<StateId>(),
                           t.at(3).get<std::size_t>()});
  return TransitionSystem(abs, std::move(states), std::move(transitions),
                          j.at("end_counts").get<std::vector<std::size_t>>());
}

inline json svr_json(const SvrModel& m) {
  return {{"kernel", m.kernel.type == Kernel::Type::linear ? "linear" : "rbf"},
          {"gamma", m.kernel.gamma},
          {"support_vectors", m.support_vectors},
          {"coefficients", m.coefficients},
          {"bias", m.bias},
          {"C", m.C},
          {"epsilon", m.epsilon},
          {"dimension", m.dimension},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"kkt_gap", m.kkt_gap}};
}

inline SvrModel svr_from(const json& j) {
  SvrModel m;
  auto k = j.at("kernel").get<std::string>();
  if (k == "linear") m.kernel = Kernel::linear();
  else if (k == "rbf") m.kernel = Kernel::rbf(j.at("gamma").get<double>());
  else throw ModelError("unknown kernel '" + k + "' in archive");
  m.support_vectors = j.at("support_vectors").get<std::vector<FeatureVector>>();
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  if (m.coefficients.size() != m.support_vectors.size())
    throw ModelError("archive has " + std::to_string(m.support_vectors.size()) + " support vectors but " +
                     std::to_string(m.coefficients.size()) + " coefficients");
  m.bias = j.at("bias").get<double>();
  m.C = j.at("C").get<double>();
  m.epsilon = j.at("epsilon").get<double>();
  m.dimension = j.at("dimension").get<std::size_t>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.converged = j.at("converged").get<bool>();
  m.kkt_gap = j.at("kkt_gap").get<double>();
  for (const auto& sv : m.support_vectors)
    if (sv.size() != m.dimension) throw ModelError("support vector dimension does not match the model");
  return m;
}

inline json regressor_json(const TimeRegressor& r) {
  json j{{"constant", r.constant}, {"value", r.value}, {"offset", r.offset}, {"scale", r.scale},
         {"examples", r.examples}};
  j["svr"] = r.constant ? json(nullptr) : svr_json(r.model);
  return j;
}

inline TimeRegressor regressor_from(const json& j) {
  TimeRegressor r;
  r.constant = j.at("constant").get<bool>();
  r.value = j.at("value").get<double>();
  r.offset = j.at("offset").get<double>();
  r.scale = j.at("scale").get<double>();
  r.examples = j.at("examples").get<std::size_t>();
  if (!r.constant) r.model = svr_from(j.at("svr"));
  return r;
}

inline json nb_json(const NaiveBayes& nb) {
  json slots = json::array();
  for (auto s : nb.slots()) slots.push_back(s == SlotKind::binary ? "binary" : "numeric");
  json classes = json::array();
  for (const auto& [y, c] : nb.classes())
    classes.push_back({{"label", y}, {"count", c.count}, {"ones", c.ones}, {"sum", c.sum}, {"sum_sq", c.sum_sq}});
  return {{"alpha", nb.alpha()}, {"slots", slots}, {"classes", classes}};
}

inline NaiveBayes nb_from(const json& j) {
  std::vector<SlotKind> slots;
  for (const auto& s : j.at("slots")) {
    auto name = s.get<std::string>();
    if (name == "binary") slots.push_back(SlotKind::binary);
    else if (name == "numeric") slots.push_back(SlotKind::numeric);
    else throw ModelError("unknown slot kind '" + name + "' in archive");
  }
  std::map<NaiveBayes::Label, NaiveBayes::ClassStats> classes;
  for (const auto& c : j.at("classes")) {
    NaiveBayes::ClassStats st;
    st.count = c.at("count").get<std::size_t>();
    st.ones = c.at("ones").get<std::vector<std::size_t>>();
    st.sum = c.at("sum").get<std::vector<double>>();
    st.sum_sq = c.at("sum_sq").get<std::vector<double>>();
    classes.emplace(c.at("label").get<NaiveBayes::Label>(), std::move(st));
  }
  return NaiveBayes::restore(std::move(slots), j.at("alpha").get<double>(), std::move(classes));
}

} // namespace detail

inline nlohmann::json model_to_json(const PredictorModel& m) {
  using nlohmann::json;
  json j;
  j["format"] = archive_format;
  j["version"] = archive_version;
  j["kind"] = to_string(m.kind);
  j["options"] = detail::train_options_json(m.options);
  j["schema"] = detail::schema_json(m.schema);
  j["transition_system"] = m.ts ? detail::ts_json(*m.ts) : json(nullptr);
  j["global_mean"] = m.global_mean;
  j["measurements"] = m.measurements;
  j["regressor"] = detail::regressor_json(m.regressor);
  json nb = json::array();
  for (const auto& [s, model] : m.nb) {
    auto e = detail::nb_json(model);
    e["state"] = s;
    nb.push_back(std::move(e));
  }
  j["naive_bayes"] = nb;
  json regs = json::array();
  for (const auto& r : m.transition_regressors) regs.push_back(detail::regressor_json(r));
  j["transition_regressors"] = regs;
  json hist = json::array();
  for (const auto& h : m.history)
    hist.push_back({{"case_id", h.case_id}, {"activities", h.activities}, {"timestamps", h.timestamps}});
  j["history"] = hist;
  return j;
}

inline PredictorModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string()) != archive_format)
    throw ModelError("not a ppm model archive");
  const int version = j.at("version").get<int>();
  if (version != archive_version)
    throw ModelError("model archive version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(archive_version) + ")");
  try {
    PredictorModel m;
    m.kind = parse_predictor_kind(j.at("kind").get<std::string>());
    m.options = detail::train_options_from(j.at("options"));
    m.schema = detail::schema_from(j.at("schema"));
    if (!j.at("transition_system").is_null()) m.ts = detail::ts_from(j.at("transition_system"));
    m.global_mean = j.at("global_mean").get<double>();
    m.measurements = j.at("measurements").get<std::vector<std::vector<double>>>();
    m.regressor = detail::regressor_from(j.at("regressor"));
    for (const auto& e : j.at("naive_bayes")) m.nb.emplace(e.at("state").get<StateId>(), detail::nb_from(e));
    for (const auto& r : j.at("transition_regressors")) m.transition_regressors.push_back(detail::regressor_from(r));
    for (const auto& h : j.at("history"))
      m.history.push_back({h.at("case_id").get<std::string>(), h.at("activities").get<std::vector<std::string>>(),
                           h.at("timestamps").get<std::vector<Timestamp>>()});

    if (m.kind != PredictorKind::svr && !m.ts) throw ModelError("archive lacks the transition system");
    if (m.ts) {
      if (m.kind == PredictorKind::dats && m.transition_regressors.size() != m.ts->transitions().size())
        throw ModelError("archive has a regressor count that does not match the transitions");
      for (const auto& [s, _] : m.nb)
        if (s >= m.ts->state_count()) throw ModelError("naive Bayes annotation on an unknown state");
    }
    refresh_state_values(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model archive: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ModelError(std::string("malformed model archive: ") + e.what());
  }
}

inline std::string serialize_model(const PredictorModel& m) { return model_to_json(m).dump(1) + "\n"; }

inline PredictorModel deserialize_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(std::string("model archive is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const PredictorModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model archive '" + path + "'");
  out << serialize_model(m);
  if (!out) throw Error("failed writing model archive '" + path + "'");
}

inline PredictorModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model archive '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

} // namespace ppm

#endif // PPM_ARCHIVE_HPP
