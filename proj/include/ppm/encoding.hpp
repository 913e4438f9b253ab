#ifndef PPM_ENCODING_HPP
#define PPM_ENCODING_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppm/abstraction.hpp"
#include "ppm/error.hpp"
#include "ppm/event_log.hpp"
#include "ppm/transition_system.hpp"

namespace ppm {

using FeatureVector = std::vector<double>;

/// How a feature slot is distributed; Naive Bayes picks its likelihood from it.
enum class SlotKind { binary, numeric };

struct AttributeEncoder {
  std::string name;
  AttributeKind kind = AttributeKind::nominal;
  /// Nominal dictionary, in slot order.
  std::vector<std::string> values;
  /// Numeric training bounds.
  double min = 0.0;
  double max = 0.0;

  std::size_t width() const { return kind == AttributeKind::nominal ? values.size() : 1; }

  friend bool operator==(const AttributeEncoder&, const AttributeEncoder&) = default;
};

/// Frozen dictionaries. Slot order: activity one-hot, attribute blocks in
/// schema order, then the optional state block.
struct EncodingSchema {
  std::vector<std::string> activities;
  std::vector<AttributeEncoder> attributes;
  std::size_t state_block = 0;
  /// Min-max scale numeric slots to [0, 1] using the training bounds.
  bool scale_numeric = true;

  std::size_t dimension() const {
    std::size_t d = activities.size() + state_block;
    for (const auto& a : attributes) d += a.width();
    return d;
  }

  /// Offset of the first slot of the state block.
  std::size_t state_offset() const { return dimension() - state_block; }

  std::vector<SlotKind> slot_kinds() const {
    std::vector<SlotKind> k(activities.size(), SlotKind::binary);
    for (const auto& a : attributes)
      k.insert(k.end(), a.width(), a.kind == AttributeKind::nominal ? SlotKind::binary : SlotKind::numeric);
    k.insert(k.end(), state_block, SlotKind::numeric);
    return k;
  }

  friend bool operator==(const EncodingSchema&, const EncodingSchema&) = default;
};

/// Dictionaries in sorted order so they do not depend on trace order.
inline EncodingSchema fit_schema(const EventLog& log, const TransitionSystem* state_block = nullptr,
                                 bool scale_numeric = true) {
  if (log.empty()) throw InvalidArgument("cannot fit an encoding schema on an empty log");
  EncodingSchema schema;
  schema.scale_numeric = scale_numeric;
  schema.activities.assign(log.activity_alphabet().begin(), log.activity_alphabet().end());
  for (std::size_t i = 0; i < log.schema().size(); ++i) {
    const auto& decl = log.schema()[i];
    AttributeEncoder enc{decl.name, decl.kind, {}, 0.0, 0.0};
    if (decl.kind == AttributeKind::nominal) {
      enc.values.assign(log.nominal_values(i).begin(), log.nominal_values(i).end());
    } else {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& t : log.traces())
        for (const auto& e : t.events)
          if (const auto* v = std::get_if<double>(&e.attributes[i])) {
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
          }
      if (lo <= hi) {
        enc.min = lo;
        enc.max = hi;
      }
    }
    schema.attributes.push_back(std::move(enc));
  }
  if (state_block) schema.state_block = state_block->encoding_size();
  return schema;
}

/// Transition system plus similarity used to fill the state block.
struct StateContext {
  const TransitionSystem& ts;
  SimilarityFn similarity;
};

namespace detail {

inline void encode_numeric(const AttributeEncoder& enc, bool scale, double v, double* slot) {
  if (!scale) {
    *slot = v;
    return;
  }
  if (enc.max > enc.min)
    *slot = std::clamp((v - enc.min) / (enc.max - enc.min), 0.0, 1.0);
  else
    *slot = 0.0;
}

} // namespace detail

/// Feature vector of a (partial) trace: one-hot of the last activity, the
/// last observed value of each attribute (missing or unseen nominal values
/// give an all-zero block, missing numeric gives 0), and the state block
/// when a context is supplied.
inline FeatureVector encode(const EncodingSchema& schema, std::span<const Event> trace,
                            const StateContext* ctx = nullptr) {
  if (schema.state_block > 0 && !ctx)
    throw InvalidArgument("schema has a state block but no transition system was given");
  FeatureVector x(schema.dimension(), 0.0);
  std::size_t off = 0;
  if (!trace.empty()) {
    const auto& act = trace.back().activity;
    auto it = std::lower_bound(schema.activities.begin(), schema.activities.end(), act);
    if (it != schema.activities.end() && *it == act)
      x[static_cast<std::size_t>(it - schema.activities.begin())] = 1.0;
  }
  off += schema.activities.size();
  for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
    const auto& enc = schema.attributes[i];
    AttributeValue v = last(trace, i);
    if (enc.kind == AttributeKind::nominal) {
      if (const auto* s = std::get_if<std::string>(&v)) {
        auto it = std::lower_bound(enc.values.begin(), enc.values.end(), *s);
        if (it != enc.values.end() && *it == *s)
          x[off + static_cast<std::size_t>(it - enc.values.begin())] = 1.0;
      }
    } else if (const auto* d = std::get_if<double>(&v)) {
      detail::encode_numeric(enc, schema.scale_numeric, *d, &x[off]);
    }
    off += enc.width();
  }
  if (ctx && schema.state_block > 0) {
    if (ctx->ts.encoding_size() != schema.state_block)
      throw InvalidArgument("transition system does not match the schema's state block");
    auto st = encode_state(ctx->ts, trace, ctx->similarity);
    std::copy(st.values.begin(), st.values.end(), x.begin() + static_cast<std::ptrdiff_t>(off));
  }
  return x;
}

struct TrainingSet {
  std::vector<FeatureVector> x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }

  void add(FeatureVector features, double target) {
    x.push_back(std::move(features));
    y.push_back(target);
  }
};

/// One example per trace position: (encode(prefix k), rem(trace, k)).
inline TrainingSet build_training_set(const EventLog& log, const EncodingSchema& schema,
                                      const StateContext* ctx = nullptr) {
  TrainingSet tr;
  for (const auto& t : log.traces())
    for (std::size_t k = 1; k <= t.size(); ++k)
      tr.add(encode(schema, hd(t.view(), k), ctx), static_cast<double>(rem(t, k)));
  return tr;
}

} // namespace ppm

#endif // PPM_ENCODING_HPP
