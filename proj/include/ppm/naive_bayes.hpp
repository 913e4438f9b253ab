#ifndef PPM_NAIVE_BAYES_HPP
#define PPM_NAIVE_BAYES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "ppm/encoding.hpp"
#include "ppm/error.hpp"

namespace ppm {

/// Incremental Naive Bayes over feature vectors. Binary slots use
/// Laplace-smoothed Bernoulli likelihoods, numeric slots a Gaussian with a
/// variance floor. Priors are smoothed with the same constant.
class NaiveBayes {
public:
  using Label = std::size_t;

  struct ClassStats {
    std::size_t count = 0;
    /// Per binary slot: instances with the slot set.
    std::vector<std::size_t> ones;
    /// Per numeric slot: running sum and sum of squares.
    std::vector<double> sum;
    std::vector<double> sum_sq;

    friend bool operator==(const ClassStats&, const ClassStats&) = default;
  };

  static constexpr double variance_floor = 1e-9;

  NaiveBayes() = default;

  explicit NaiveBayes(std::vector<SlotKind> slots, double alpha = 1.0)
      : slots_(std::move(slots)), alpha_(alpha) {
    if (!(alpha_ > 0.0)) throw InvalidArgument("smoothing constant must be positive");
    for (std::size_t i = 0; i < slots_.size(); ++i)
      (slots_[i] == SlotKind::binary ? binary_ : numeric_).push_back(i);
  }

  void update(std::span<const double> x, Label label) {
    if (x.size() != slots_.size())
      throw InvalidArgument("feature vector has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(slots_.size()));
    auto& c = classes_[label];
    if (c.count == 0) {
      c.ones.assign(binary_.size(), 0);
      c.sum.assign(numeric_.size(), 0.0);
      c.sum_sq.assign(numeric_.size(), 0.0);
    }
    ++c.count;
    ++total_;
    for (std::size_t b = 0; b < binary_.size(); ++b)
      if (x[binary_[b]] > 0.5) ++c.ones[b];
    for (std::size_t n = 0; n < numeric_.size(); ++n) {
      double v = x[numeric_[n]];
      c.sum[n] += v;
      c.sum_sq[n] += v * v;
    }
  }

  /// Unnormalized log-posteriors log P(y) + sum_k log P(x_k | y).
  std::vector<std::pair<Label, double>> log_scores(std::span<const double> x) const {
    if (classes_.empty()) throw ModelError("naive Bayes model has no classes");
    if (x.size() != slots_.size())
      throw InvalidArgument("feature vector has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(slots_.size()));
    const double k = static_cast<double>(classes_.size());
    std::vector<std::pair<Label, double>> out;
    out.reserve(classes_.size());
    for (const auto& [label, c] : classes_) {
      const double n = static_cast<double>(c.count);
      double s = std::log((n + alpha_) / (static_cast<double>(total_) + k * alpha_));
      for (std::size_t b = 0; b < binary_.size(); ++b) {
        double p1 = (static_cast<double>(c.ones[b]) + alpha_) / (n + 2.0 * alpha_);
        s += std::log(x[binary_[b]] > 0.5 ? p1 : 1.0 - p1);
      }
      for (std::size_t m = 0; m < numeric_.size(); ++m) {
        double mean = c.sum[m] / n;
        double var = std::max(c.sum_sq[m] / n - mean * mean, variance_floor);
        double d = x[numeric_[m]] - mean;
        s += -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
      }
      out.emplace_back(label, s);
    }
    return out;
  }

  /// Normalized class distribution, ordered by label.
  std::vector<std::pair<Label, double>> predict(std::span<const double> x) const {
    auto scores = log_scores(x);
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& [_, s] : scores) mx = std::max(mx, s);
    double z = 0.0;
    for (auto& [_, s] : scores) {
      s = std::exp(s - mx);
      z += s;
    }
    for (auto& [_, s] : scores) s /= z;
    return scores;
  }

  /// Smoothed class priors, ordered by label.
  std::vector<std::pair<Label, double>> prior() const {
    if (classes_.empty()) throw ModelError("naive Bayes model has no training data");
    std::vector<std::pair<Label, double>> out;
    const double z = static_cast<double>(total_) + alpha_ * static_cast<double>(classes_.size());
    for (const auto& [y, c] : classes_) out.emplace_back(y, (static_cast<double>(c.count) + alpha_) / z);
    return out;
  }

  Label predict_map(std::span<const double> x) const {
    auto scores = log_scores(x);
    return std::max_element(scores.begin(), scores.end(),
                            [](const auto& a, const auto& b) { return a.second < b.second; })
        ->first;
  }

  const std::vector<SlotKind>& slots() const { return slots_; }
  double alpha() const { return alpha_; }
  std::size_t total() const { return total_; }
  std::size_t class_count() const { return classes_.size(); }
  const std::map<Label, ClassStats>& classes() const { return classes_; }

  /// Rebuilds a model from stored statistics.
  static NaiveBayes restore(std::vector<SlotKind> slots, double alpha, std::map<Label, ClassStats> classes) {
    NaiveBayes nb(std::move(slots), alpha);
    for (const auto& [label, c] : classes) {
      if (c.ones.size() != nb.binary_.size() || c.sum.size() != nb.numeric_.size() ||
          c.sum_sq.size() != nb.numeric_.size())
        throw ParseError("naive Bayes statistics do not match the slot layout");
      nb.total_ += c.count;
    }
    nb.classes_ = std::move(classes);
    return nb;
  }

  friend bool operator==(const NaiveBayes& a, const NaiveBayes& b) {
    return a.slots_ == b.slots_ && a.alpha_ == b.alpha_ && a.total_ == b.total_ && a.classes_ == b.classes_;
  }

private:
  std::vector<SlotKind> slots_;
  std::vector<std::size_t> binary_, numeric_;
  double alpha_ = 1.0;
  std::size_t total_ = 0;
  std::map<Label, ClassStats> classes_;
};

} // namespace ppm

#endif // PPM_NAIVE_BAYES_HPP
