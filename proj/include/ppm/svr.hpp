#ifndef PPM_SVR_HPP
#define PPM_SVR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ppm/encoding.hpp"
#include "ppm/error.hpp"

namespace ppm {

struct Kernel {
  enum class Type { linear, rbf };

  Type type = Type::rbf;
  double gamma = 0.1;

  static Kernel linear() { return {Type::linear, 0.0}; }
  static Kernel rbf(double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("rbf gamma must be positive");
    return {Type::rbf, gamma};
  }

  double operator()(std::span<const double> a, std::span<const double> b) const {
    if (type == Type::linear) return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double t = a[i] - b[i];
      d += t * t;
    }
    return std::exp(-gamma * d);
  }

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

struct SvrParams {
  double C = 1.0;
  double epsilon = 0.1;
  /// Stopping tolerance on the maximal KKT violation.
  double tolerance = 1e-3;
  std::size_t max_iterations = 1'000'000;
  /// Keep the dual objective after every step (diagnostics only).
  bool record_objective = false;
};

/// f(x) = sum_i coef_i k(sv_i, x) + bias, with coef_i = alpha_i - alpha*_i.
struct SvrModel {
  Kernel kernel;
  std::vector<FeatureVector> support_vectors;
  std::vector<double> coefficients;
  double bias = 0.0;
  double C = 1.0;
  double epsilon = 0.0;
  std::size_t dimension = 0;
  std::size_t iterations = 0;
  bool converged = true;
  /// Maximal KKT violation when the solver stopped.
  double kkt_gap = 0.0;
  /// Dual objective (maximization form) after each step when recorded.
  std::vector<double> objective_trace;

  double predict(std::span<const double> x) const {
    if (x.size() != dimension)
      throw InvalidArgument("feature vector has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dimension));
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
      f += coefficients[i] * kernel(support_vectors[i], x);
    return f;
  }
};

inline double svr_predict(const SvrModel& m, std::span<const double> x) { return m.predict(x); }

namespace detail {

/// SMO over the 2l-variable form: beta = [alpha; alpha*], sign s = [+1; -1],
/// minimize 1/2 beta'Q beta + p'beta, s'beta = 0, 0 <= beta <= C.
class SmoSolver {
public:
  SmoSolver(const TrainingSet& tr, const Kernel& kernel, const SvrParams& p)
      : tr_(tr), kernel_(kernel), params_(p), l_(tr.size()) {
    if (l_ <= max_cached_) {
      cache_.resize(l_ * l_);
      for (std::size_t i = 0; i < l_; ++i)
        for (std::size_t j = i; j < l_; ++j) cache_[i * l_ + j] = cache_[j * l_ + i] = kernel_(tr.x[i], tr.x[j]);
    }
    diag_.resize(l_);
    for (std::size_t i = 0; i < l_; ++i) diag_[i] = kernel_(tr.x[i], tr.x[i]);
  }

  SvrModel solve() {
    const std::size_t n = 2 * l_;
    const double C = params_.C;
    beta_.assign(n, 0.0);
    grad_.resize(n);
    for (std::size_t t = 0; t < n; ++t) grad_[t] = linear_term(t);

    SvrModel model;
    model.kernel = kernel_;
    model.C = C;
    model.epsilon = params_.epsilon;
    model.dimension = tr_.x.front().size();
    if (params_.record_objective) model.objective_trace.push_back(-objective());

    std::vector<double> row_i(l_), row_j(l_);
    std::size_t iter = 0;
    double gap = 0.0;
    for (;; ++iter) {
      // Maximal violating pair.
      double gmax = -std::numeric_limits<double>::infinity();
      double gmin = std::numeric_limits<double>::infinity();
      std::size_t i = n, j = n;
      for (std::size_t t = 0; t < n; ++t) {
        double s = sign(t);
        double v = -s * grad_[t];
        bool up = s > 0 ? beta_[t] < C : beta_[t] > 0;
        bool low = s > 0 ? beta_[t] > 0 : beta_[t] < C;
        if (up && v > gmax) {
          gmax = v;
          i = t;
        }
        if (low && v < gmin) {
          gmin = v;
          j = t;
        }
      }
      gap = gmax - gmin;
      if (i == n || j == n || gap < params_.tolerance) break;
      if (iter >= params_.max_iterations) {
        model.converged = false;
        break;
      }
      kernel_row(i % l_, row_i);
      kernel_row(j % l_, row_j);
      const double si = sign(i), sj = sign(j);
      const double qij = si * sj * row_i[j % l_];
      const double qii = diag_[i % l_], qjj = diag_[j % l_];
      const double old_i = beta_[i], old_j = beta_[j];
      double& ai = beta_[i];
      double& aj = beta_[j];
      if (si != sj) {
        double quad = qii + qjj + 2.0 * qij;
        if (quad <= 0) quad = tau;
        double delta = (-grad_[i] - grad_[j]) / quad;
        double diff = ai - aj;
        ai += delta;
        aj += delta;
        if (diff > 0) {
          if (aj < 0) {
            aj = 0;
            ai = diff;
          }
        } else if (ai < 0) {
          ai = 0;
          aj = -diff;
        }
        if (diff > 0) {
          if (ai > C) {
            ai = C;
            aj = C - diff;
          }
        } else if (aj > C) {
          aj = C;
          ai = C + diff;
        }
      } else {
        double quad = qii + qjj - 2.0 * qij;
        if (quad <= 0) quad = tau;
        double delta = (grad_[i] - grad_[j]) / quad;
        double sum = ai + aj;
        ai -= delta;
        aj += delta;
        if (sum > C) {
          if (ai > C) {
            ai = C;
            aj = sum - C;
          }
        } else if (aj < 0) {
          aj = 0;
          ai = sum;
        }
        if (sum > C) {
          if (aj > C) {
            aj = C;
            ai = sum - C;
          }
        } else if (ai < 0) {
          ai = 0;
          aj = sum;
        }
      }
      const double di = ai - old_i, dj = aj - old_j;
      for (std::size_t t = 0; t < n; ++t) {
        double st = sign(t);
        grad_[t] += st * (si * row_i[t % l_] * di + sj * row_j[t % l_] * dj);
      }
      if (params_.record_objective) model.objective_trace.push_back(-objective());
    }
    model.iterations = iter;
    model.kkt_gap = gap;

    model.bias = -rho();
    for (std::size_t k = 0; k < l_; ++k) {
      double c = beta_[k] - beta_[k + l_];
      if (c != 0.0) {
        model.support_vectors.push_back(tr_.x[k]);
        model.coefficients.push_back(c);
      }
    }
    return model;
  }

private:
  static constexpr double tau = 1e-12;
  static constexpr std::size_t max_cached_ = 4000;

  double sign(std::size_t t) const { return t < l_ ? 1.0 : -1.0; }

  double linear_term(std::size_t t) const {
    return t < l_ ? params_.epsilon - tr_.y[t] : params_.epsilon + tr_.y[t - l_];
  }

  void kernel_row(std::size_t i, std::vector<double>& row) const {
    if (!cache_.empty()) {
      std::copy_n(cache_.begin() + static_cast<std::ptrdiff_t>(i * l_), l_, row.begin());
      return;
    }
    for (std::size_t j = 0; j < l_; ++j) row[j] = kernel_(tr_.x[i], tr_.x[j]);
  }

  /// 1/2 beta'(grad + p): the minimization objective.
  double objective() const {
    double f = 0.0;
    for (std::size_t t = 0; t < beta_.size(); ++t) f += beta_[t] * (grad_[t] + linear_term(t));
    return 0.5 * f;
  }

  double rho() const {
    const double C = params_.C;
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < beta_.size(); ++t) {
      double s = sign(t);
      double yg = s * grad_[t];
      if (beta_[t] >= C) {
        if (s < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (beta_[t] <= 0) {
        if (s > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++free;
        sum_free += yg;
      }
    }
    return free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
  }

  const TrainingSet& tr_;
  Kernel kernel_;
  SvrParams params_;
  std::size_t l_;
  std::vector<double> cache_, diag_, beta_, grad_;
};

} // namespace detail

/// Trains an epsilon-SVR by sequential minimal optimization.
inline SvrModel svr_train(const TrainingSet& tr, const Kernel& kernel, const SvrParams& params) {
  if (tr.empty()) throw InvalidArgument("empty training set");
  if (!(params.C > 0.0)) throw InvalidArgument("C must be positive");
  if (!(params.epsilon >= 0.0)) throw InvalidArgument("epsilon must be non-negative");
  if (!(params.tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  const std::size_t d = tr.x.front().size();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.x[i].size() != d) throw InvalidArgument("training vectors differ in dimension");
    if (!std::isfinite(tr.y[i])) throw InvalidArgument("non-finite target value");
    for (double v : tr.x[i])
      if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
  }
  return detail::SmoSolver(tr, kernel, params).solve();
}

/// Fold assignment of `n` items: a seeded shuffle dealt round-robin, so fold
/// sizes differ by at most one.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<std::size_t> fold(n);
  for (std::size_t k = 0; k < n; ++k) fold[order[k]] = k % folds;
  return fold;
}

struct GridPoint {
  double C = 0.0;
  double gamma = 0.0;
  /// Mean validation MAPE (percent).
  double score = 0.0;
};

struct GridSearchResult {
  double C = 0.0;
  double gamma = 0.0;
  double score = 0.0;
  SvrModel model;
  std::vector<GridPoint> table;
};

struct GridSearchOptions {
  std::size_t folds = 3;
  std::vector<double> C_grid{0.1, 1, 10, 100};
  std::vector<double> gamma_grid{0.01, 0.1, 1};
  double epsilon = 0.1;
  double tolerance = 1e-3;
  std::size_t max_iterations = 1'000'000;
  std::uint64_t seed = 0;
};

namespace detail {

/// Validation error: MAPE over nonzero targets, mean absolute error when
/// every target is zero.
inline double validation_error(const std::vector<double>& actual, const std::vector<double>& predicted) {
  double pct = 0.0, abs_err = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    abs_err += std::abs(actual[i] - predicted[i]);
    if (actual[i] != 0.0) {
      pct += std::abs((actual[i] - predicted[i]) / actual[i]);
      ++n;
    }
  }
  if (n > 0) return 100.0 * pct / static_cast<double>(n);
  return actual.empty() ? 0.0 : abs_err / static_cast<double>(actual.size());
}

} // namespace detail

/// RBF grid search by k-fold validation MAPE; ties go to the smaller C, then
/// the smaller gamma. The winner is refit on the whole set.
inline GridSearchResult grid_search(const TrainingSet& tr, const GridSearchOptions& opt) {
  if (opt.folds < 2) throw InvalidArgument("grid search needs at least two folds");
  if (opt.C_grid.empty() || opt.gamma_grid.empty()) throw InvalidArgument("empty hyperparameter grid");
  if (tr.size() < opt.folds) throw InvalidArgument("training set is smaller than the number of folds");
  auto Cs = opt.C_grid;
  auto gammas = opt.gamma_grid;
  std::sort(Cs.begin(), Cs.end());
  std::sort(gammas.begin(), gammas.end());
  const auto fold = fold_assignment(tr.size(), opt.folds, opt.seed);

  std::vector<TrainingSet> train(opt.folds), valid(opt.folds);
  for (std::size_t i = 0; i < tr.size(); ++i)
    for (std::size_t f = 0; f < opt.folds; ++f)
      (fold[i] == f ? valid[f] : train[f]).add(tr.x[i], tr.y[i]);

  GridSearchResult best;
  best.score = std::numeric_limits<double>::infinity();
  for (double C : Cs) {
    for (double g : gammas) {
      double total = 0.0;
      for (std::size_t f = 0; f < opt.folds; ++f) {
        auto m = svr_train(train[f], Kernel::rbf(g), SvrParams{C, opt.epsilon, opt.tolerance, opt.max_iterations});
        std::vector<double> pred;
        pred.reserve(valid[f].size());
        for (const auto& x : valid[f].x) pred.push_back(m.predict(x));
        total += detail::validation_error(valid[f].y, pred);
      }
      double score = total / static_cast<double>(opt.folds);
      best.table.push_back({C, g, score});
      if (score < best.score) {
        best.score = score;
        best.C = C;
        best.gamma = g;
      }
    }
  }
  best.model = svr_train(tr, Kernel::rbf(best.gamma), SvrParams{best.C, opt.epsilon, opt.tolerance, opt.max_iterations});
  return best;
}

} // namespace ppm

#endif // PPM_SVR_HPP
