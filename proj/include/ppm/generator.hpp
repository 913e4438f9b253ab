#ifndef PPM_GENERATOR_HPP
#define PPM_GENERATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppm/error.hpp"
#include "ppm/event_log.hpp"

namespace ppm {

/// Synthetic log description. Every case draws its attributes first, then a
/// variant (probability times any matching attribute multipliers), then a
/// duration per event:
///   base * prod(nominal factors) * prod(1 + slope * u) * exp(N(0, jitter))
/// where u is a numeric attribute rescaled to [0, 1].
struct GeneratorSpec {
  struct Attribute {
    std::string name;
    AttributeKind kind = AttributeKind::nominal;
    std::vector<std::string> values;
    std::vector<double> weights;
    double min = 0.0;
    double max = 1.0;
    /// Index of the first event carrying the value; earlier events get the missing value.
    std::size_t from_event = 0;
  };
  struct Variant {
    std::vector<std::string> activities;
    double probability = 0.0;
    /// "attr=value" -> multiplier on the variant probability.
    std::map<std::string, double> attribute_weights;
  };
  struct Activity {
    double duration = 3600.0;
    double jitter = 0.0;
    /// "attr=value" -> duration factor.
    std::map<std::string, double> nominal_factors;
    /// numeric attribute name -> slope.
    std::map<std::string, double> numeric_slopes;
  };

  std::uint64_t seed = 1;
  std::size_t cases = 100;
  Timestamp start = 1'577'836'800;  // 2020-01-01
  double interarrival_seconds = 3600.0;
  std::vector<Attribute> attributes;
  std::vector<Variant> variants;
  std::map<std::string, Activity> activities;

  void validate() const {
    if (cases == 0) throw InvalidArgument("generator needs at least one case");
    if (variants.empty()) throw InvalidArgument("generator needs at least one variant");
    double total = 0.0;
    for (const auto& v : variants) {
      if (v.activities.empty()) throw InvalidArgument("variant without activities");
      if (v.probability < 0.0) throw InvalidArgument("negative variant probability");
      total += v.probability;
      for (const auto& [k, w] : v.attribute_weights) {
        if (k.find('=') == std::string::npos) throw InvalidArgument("attribute weight key must be attr=value: " + k);
        if (w < 0.0) throw InvalidArgument("negative attribute weight");
      }
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("variant probabilities must sum to 1");
    for (const auto& a : attributes) {
      if (a.name.empty()) throw InvalidArgument("attribute without a name");
      if (a.kind == AttributeKind::nominal) {
        if (a.values.empty()) throw InvalidArgument("nominal attribute '" + a.name + "' has no values");
        if (!a.weights.empty() && a.weights.size() != a.values.size())
          throw InvalidArgument("attribute '" + a.name + "' weights do not match its values");
      } else if (!(a.max >= a.min)) {
        throw InvalidArgument("numeric attribute '" + a.name + "' has max < min");
      }
    }
    for (const auto& [name, act] : activities) {
      if (!(act.duration > 0.0)) throw InvalidArgument("activity '" + name + "' needs a positive duration");
      if (act.jitter < 0.0) throw InvalidArgument("activity '" + name + "' has a negative jitter");
      for (const auto& [_, f] : act.nominal_factors)
        if (!(f > 0.0)) throw InvalidArgument("duration factors must be positive");
    }
  }
};

inline GeneratorSpec::Attribute attribute_from_json(const nlohmann::json& j) {
  GeneratorSpec::Attribute a;
  a.name = j.at("name").get<std::string>();
  auto kind = j.value("kind", std::string("nominal"));
  if (kind == "nominal") {
    a.kind = AttributeKind::nominal;
    a.values = j.at("values").get<std::vector<std::string>>();
    a.weights = j.value("weights", std::vector<double>{});
  } else if (kind == "numeric") {
    a.kind = AttributeKind::numeric;
    a.min = j.at("min").get<double>();
    a.max = j.at("max").get<double>();
  } else {
    throw InvalidArgument("attribute kind must be nominal or numeric");
  }
  a.from_event = j.value("from_event", std::size_t{0});
  return a;
}

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  try {
    GeneratorSpec s;
    s.seed = j.value("seed", std::uint64_t{1});
    s.cases = j.value("cases", std::size_t{100});
    if (j.contains("start")) {
      auto t = parse_timestamp(j.at("start").get<std::string>());
      if (!t) throw InvalidArgument("unparseable start timestamp");
      s.start = *t;
    }
    s.interarrival_seconds = j.value("interarrival_seconds", 3600.0);
    for (const auto& a : j.value("attributes", nlohmann::json::array())) s.attributes.push_back(attribute_from_json(a));
    for (const auto& v : j.at("variants")) {
      GeneratorSpec::Variant var;
      var.activities = v.at("activities").get<std::vector<std::string>>();
      var.probability = v.at("probability").get<double>();
      var.attribute_weights = v.value("attribute_weights", std::map<std::string, double>{});
      s.variants.push_back(std::move(var));
    }
    const auto acts = j.value("activities", nlohmann::json::object());
    for (auto it = acts.begin(); it != acts.end(); ++it) {
      const auto& name = it.key();
      const auto& a = it.value();
      GeneratorSpec::Activity act;
      act.duration = a.value("duration", 3600.0);
      act.jitter = a.value("jitter", 0.0);
      act.nominal_factors = a.value("nominal_factors", std::map<std::string, double>{});
      act.numeric_slopes = a.value("numeric_slopes", std::map<std::string, double>{});
      s.activities[name] = act;
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("invalid generator spec: ") + e.what());
  }
}

inline EventLog generate_log(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> arrival(1.0 / std::max(spec.interarrival_seconds, 1e-9));

  AttributeSchema schema;
  for (const auto& a : spec.attributes) schema.push_back({a.name, a.kind});
  const std::size_t width = std::to_string(spec.cases).size();

  std::vector<Trace> traces;
  double clock = static_cast<double>(spec.start);
  for (std::size_t c = 0; c < spec.cases; ++c) {
    clock += arrival(rng);
    std::string id = std::to_string(c + 1);
    id = "case" + std::string(width - id.size(), '0') + id;

    // attributes
    std::vector<AttributeValue> values;
    std::map<std::string, std::string> nominal;
    std::map<std::string, double> unit_numeric;
    for (const auto& a : spec.attributes) {
      if (a.kind == AttributeKind::nominal) {
        std::size_t pick = 0;
        if (a.weights.empty()) {
          pick = std::uniform_int_distribution<std::size_t>(0, a.values.size() - 1)(rng);
        } else {
          std::discrete_distribution<std::size_t> d(a.weights.begin(), a.weights.end());
          pick = d(rng);
        }
        values.emplace_back(a.values[pick]);
        nominal[a.name] = a.values[pick];
      } else {
        double u = unit(rng);
        double v = std::round(a.min + u * (a.max - a.min));
        values.emplace_back(v);
        unit_numeric[a.name] = a.max > a.min ? (v - a.min) / (a.max - a.min) : 0.0;
      }
    }

    // variant
    std::vector<double> w;
    for (const auto& v : spec.variants) {
      double p = v.probability;
      for (const auto& [key, mult] : v.attribute_weights) {
        auto eq = key.find('=');
        auto it = nominal.find(key.substr(0, eq));
        if (it != nominal.end() && it->second == key.substr(eq + 1)) p *= mult;
      }
      w.push_back(p);
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) w.assign(w.size(), 1.0);
    const auto& variant = spec.variants[std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng)];

    Trace t{id, {}};
    double now = clock;
    for (std::size_t i = 0; i < variant.activities.size(); ++i) {
      const auto& name = variant.activities[i];
      if (i > 0) {
        GeneratorSpec::Activity act;
        if (auto it = spec.activities.find(name); it != spec.activities.end()) act = it->second;
        double d = act.duration;
        for (const auto& [key, f] : act.nominal_factors) {
          auto eq = key.find('=');
          auto it = nominal.find(key.substr(0, eq));
          if (it != nominal.end() && it->second == key.substr(eq + 1)) d *= f;
        }
        for (const auto& [attr, slope] : act.numeric_slopes)
          if (auto it = unit_numeric.find(attr); it != unit_numeric.end()) d *= std::max(0.05, 1.0 + slope * it->second);
        if (act.jitter > 0.0) d *= std::exp(act.jitter * normal(rng));
        now += std::max(1.0, d);
      }
      Event e{name, id, static_cast<Timestamp>(std::llround(now)), {}};
      for (std::size_t k = 0; k < spec.attributes.size(); ++k)
        e.attributes.push_back(i >= spec.attributes[k].from_event ? values[k] : AttributeValue{});
      t.events.push_back(std::move(e));
    }
    traces.push_back(std::move(t));
  }
  return EventLog(std::move(schema), std::move(traces));
}

} // namespace ppm

#endif // PPM_GENERATOR_HPP
