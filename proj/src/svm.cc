#include "repbias/svm.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <list>
#include <sstream>
#include <thread>

#include "repbias/csv.h"
#include "repbias/error.h"
#include "repbias/stratify.h"

namespace repbias {
namespace {

// LRU cache of Q rows, Q_ij = y_i y_j K(x_i, x_j).
class KernelRowCache {
 public:
  KernelRowCache(const Matrix& x, std::span<const int> y, double gamma,
                 std::size_t budget_bytes)
      : x_(x), y_(y), gamma_(gamma), slots_(x.rows(), lru_.end()) {
    const std::size_t row_bytes = std::max<std::size_t>(1, x.rows() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  const std::vector<double>& Row(std::size_t i) {
    auto& slot = slots_[i];
    if (slot != lru_.end()) {
      lru_.splice(lru_.begin(), lru_, slot);
      return slot->values;
    }
    if (lru_.size() >= capacity_) {
      slots_[lru_.back().index] = lru_.end();
      lru_.pop_back();
    }
    lru_.push_front({i, {}});
    slot = lru_.begin();
    auto& values = slot->values;
    values.resize(x_.rows());
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < x_.rows(); ++j) {
      values[j] = static_cast<double>(y_[i] * y_[j]) * RbfKernel(xi, x_.row(j), gamma_);
    }
    return values;
  }

 private:
  struct Entry {
    std::size_t index;
    std::vector<double> values;
  };
  const Matrix& x_;
  std::span<const int> y_;
  double gamma_;
  std::size_t capacity_;
  std::list<Entry> lru_;
  std::vector<std::list<Entry>::iterator> slots_;
};

void CheckTrainingInputs(const Matrix& x, std::span<const int> y, const SvmHyperparams& hp) {
  if (x.rows() < 2) throw UsageError("SVM training needs at least 2 rows");
  if (y.size() != x.rows()) throw UsageError("label count does not match row count");
  if (!(hp.c > 0.0) || !(hp.gamma > 0.0)) throw UsageError("C and gamma must be positive");
  bool pos = false;
  bool neg = false;
  for (int v : y) {
    if (v == 1) {
      pos = true;
    } else if (v == -1) {
      neg = true;
    } else {
      throw UsageError("SVM labels must be +1 or -1");
    }
  }
  if (!pos || !neg) throw UsageError("SVM training needs both classes");
}

}  // namespace

double RbfKernel(std::span<const double> a, std::span<const double> b, double gamma) {
  return std::exp(-gamma * SquaredDistance(a, b));
}

DualSolution SolveDual(const Matrix& features, std::span<const int> labels,
                       const SvmHyperparams& hp, const SmoOptions& options) {
  CheckTrainingInputs(features, labels, hp);
  const std::size_t n = features.rows();
  const double c = hp.c;
  const double tau = 1e-12;
  KernelRowCache cache(features, labels, hp.gamma, options.cache_megabytes << 20);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  const double qd = 1.0;              // K(x, x) = 1 for the RBF kernel
  auto y = [&](std::size_t t) { return static_cast<double>(labels[t]); };
  auto at_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  std::uint64_t iter = 0;
  double last_violation = std::numeric_limits<double>::infinity();
  for (;;) {
    // i: maximal violating index among I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (labels[t] == 1) {
        if (!at_upper(t) && -grad[t] > gmax) {
          gmax = -grad[t];
          i = t;
        }
      } else if (!at_lower(t) && grad[t] > gmax) {
        gmax = grad[t];
        i = t;
      }
    }
    // j: second-order choice among I_low.
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    if (i < n) {
      const auto& qi = cache.Row(i);
      for (std::size_t t = 0; t < n; ++t) {
        double grad_diff;
        double quad;
        if (labels[t] == 1) {
          if (at_lower(t)) continue;
          gmax2 = std::max(gmax2, grad[t]);
          grad_diff = gmax + grad[t];
          quad = qd + qd - 2.0 * y(i) * qi[t];
        } else {
          if (at_upper(t)) continue;
          gmax2 = std::max(gmax2, -grad[t]);
          grad_diff = gmax - grad[t];
          quad = qd + qd + 2.0 * y(i) * qi[t];
        }
        if (grad_diff <= 0.0) continue;
        const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : tau);
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    last_violation = gmax + gmax2;
    if (i == n || j == n || last_violation < options.tolerance) break;
    if (iter >= options.max_iterations) {
      std::ostringstream msg;
      msg << "SMO did not converge after " << iter << " pair updates (C=" << FormatDouble(c)
          << ", gamma=" << FormatDouble(hp.gamma) << ", n=" << n
          << ", KKT violation=" << FormatDouble(last_violation) << ")";
      throw NumericError(msg.str());
    }
    ++iter;

    const auto& qi = cache.Row(i);
    const auto& qj = cache.Row(j);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    double ai = old_ai;
    double aj = old_aj;
    if (labels[i] != labels[j]) {
      double quad = qd + qd + 2.0 * qi[j];
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c) {
          ai = c;
          aj = c - diff;
        }
      } else if (aj > c) {
        aj = c;
        ai = c + diff;
      }
    } else {
      double quad = qd + qd - 2.0 * qi[j];
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) {
          ai = c;
          aj = sum - c;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c) {
        if (aj > c) {
          aj = c;
          ai = sum - c;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    alpha[i] = ai;
    alpha[j] = aj;
    const double dai = ai - old_ai;
    const double daj = aj - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * dai + qj[t] * daj;
  }

  // rho as in libsvm: mean of y_i * grad_i over free vectors, else midpoint.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y(t) * grad[t];
    if (at_upper(t)) {
      if (labels[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (labels[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  DualSolution sol;
  sol.iterations = iter;
  sol.bias = -rho;
  // grad = Qa - e, so a'Qa = sum a_t (grad_t + 1).
  double quad_term = 0.0;
  double linear = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    quad_term += alpha[t] * (grad[t] + 1.0);
    linear += alpha[t];
  }
  sol.dual_objective = linear - 0.5 * quad_term;
  sol.alpha = std::move(alpha);
  return sol;
}

SvmModel TrainSvm(const Matrix& features, std::span<const int> labels,
                  const SvmHyperparams& hp, const SmoOptions& options) {
  const DualSolution sol = SolveDual(features, labels, hp, options);
  std::vector<std::size_t> support;
  for (std::size_t t = 0; t < sol.alpha.size(); ++t) {
    if (sol.alpha[t] > 0.0) support.push_back(t);
  }
  SvmModel model;
  model.support_rows = features.SelectRows(support);
  for (std::size_t t : support) model.dual_coeffs.push_back(sol.alpha[t] * labels[t]);
  model.bias = sol.bias;
  model.hyperparams = hp;
  model.feature_dim = features.cols();
  model.dual_objective = sol.dual_objective;
  model.iterations = sol.iterations;
  return model;
}

double DecisionValue(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.feature_dim) throw UsageError("feature dimension mismatch");
  double f = model.bias;
  for (std::size_t s = 0; s < model.dual_coeffs.size(); ++s) {
    f += model.dual_coeffs[s] *
         RbfKernel(model.support_rows.row(s), x, model.hyperparams.gamma);
  }
  return f;
}

int Predict(const SvmModel& model, std::span<const double> x) {
  return DecisionValue(model, x) >= 0.0 ? 1 : -1;
}

double EvaluateAccuracy(const SvmModel& model, const Matrix& features,
                        std::span<const int> labels) {
  if (features.rows() == 0) throw UsageError("accuracy of an empty set");
  if (labels.size() != features.rows()) throw UsageError("label count mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    if (Predict(model, features.row(i)) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(features.rows());
}

std::vector<int> ToSignedLabels(std::span<const int> labels01) {
  std::vector<int> out;
  out.reserve(labels01.size());
  for (int v : labels01) out.push_back(v == 1 ? 1 : -1);
  return out;
}

Standardizer Standardizer::Fit(const Matrix& rows) {
  Standardizer s;
  const std::size_t d = rows.cols();
  s.mean.assign(d, 0.0);
  s.sd.assign(d, 0.0);
  if (rows.rows() == 0) {
    s.sd.assign(d, 1.0);
    return s;
  }
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += rows(i, j);
  }
  for (double& m : s.mean) m /= static_cast<double>(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double t = rows(i, j) - s.mean[j];
      s.sd[j] += t * t;
    }
  }
  for (double& v : s.sd) {
    v = std::sqrt(v / static_cast<double>(rows.rows()));
    if (v <= 0.0) v = 1.0;
  }
  return s;
}

Matrix Standardizer::Apply(const Matrix& rows) const {
  Matrix out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - mean[j]) / sd[j];
  }
  return out;
}

GridSpec GridSpec::Exponential(int c_lo, int c_hi, int c_step, int gamma_lo, int gamma_hi,
                               int gamma_step) {
  if (c_step <= 0 || gamma_step <= 0 || c_hi < c_lo || gamma_hi < gamma_lo) {
    throw UsageError("bad grid bounds");
  }
  GridSpec g;
  for (int e = c_lo; e <= c_hi; e += c_step) g.c_values.push_back(std::ldexp(1.0, e));
  for (int e = gamma_lo; e <= gamma_hi; e += gamma_step) {
    g.gamma_values.push_back(std::ldexp(1.0, e));
  }
  return g;
}

GridSpec GridSpec::Default() { return Exponential(-3, 11, 2, -11, 3, 2); }

ValidationScheme ValidationScheme::KFold(int folds) {
  ValidationScheme s;
  s.kind = Kind::kKFold;
  s.folds = folds;
  return s;
}

ValidationScheme ValidationScheme::Holdout(double fraction) {
  ValidationScheme s;
  s.kind = Kind::kHoldout;
  s.holdout_fraction = fraction;
  return s;
}

ValidationScheme ValidationScheme::ForSize(std::size_t n) {
  return n < 2000 ? KFold(5) : Holdout(0.2);
}

std::string ValidationScheme::Label() const {
  if (kind == Kind::kKFold) return "kfold(" + std::to_string(folds) + ")";
  return "holdout(" + FormatDouble(holdout_fraction) + ")";
}

std::vector<int> ValidationPartitions(std::span<const int> labels, std::span<const int> strata,
                                      const ValidationScheme& scheme, std::uint64_t seed) {
  const std::span<const int> keys = strata.empty() ? labels : strata;
  if (keys.size() != labels.size()) throw UsageError("strata size mismatch");
  if (scheme.kind == ValidationScheme::Kind::kKFold) {
    return StratifiedFolds(keys, scheme.folds, seed);
  }
  const auto is_test = StratifiedHoldout(keys, 1.0 - scheme.holdout_fraction, seed);
  std::vector<int> out(is_test.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = is_test[i] ? 1 : 0;
  return out;
}

GridSearchResult GridSearch(const Matrix& features, std::span<const int> labels,
                            std::span<const int> strata, const GridSpec& grid,
                            const ValidationScheme& scheme, std::uint64_t seed,
                            const GridSearchOptions& options) {
  if (grid.c_values.empty() || grid.gamma_values.empty()) throw UsageError("empty grid");
  if (labels.size() != features.rows()) throw UsageError("label count mismatch");
  const auto partition = ValidationPartitions(labels, strata, scheme, seed);
  const bool kfold = scheme.kind == ValidationScheme::Kind::kKFold;
  const int n_parts = kfold ? scheme.folds : 1;

  struct Fold {
    Matrix train_x, valid_x;
    std::vector<int> train_y, valid_y;
  };
  std::vector<Fold> folds(static_cast<std::size_t>(n_parts));
  for (int p = 0; p < n_parts; ++p) {
    const int valid_id = kfold ? p : 1;
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (partition[i] == valid_id ? va : tr).push_back(i);
    }
    Fold& f = folds[static_cast<std::size_t>(p)];
    f.train_x = features.SelectRows(tr);
    f.valid_x = features.SelectRows(va);
    for (std::size_t i : tr) f.train_y.push_back(labels[i]);
    for (std::size_t i : va) f.valid_y.push_back(labels[i]);
    const bool has_pos = std::count(f.train_y.begin(), f.train_y.end(), 1) > 0;
    const bool has_neg = std::count(f.train_y.begin(), f.train_y.end(), -1) > 0;
    if (!has_pos || !has_neg) {
      throw DataError("validation partition " + std::to_string(p) +
                      " leaves a training set with a single class");
    }
    if (va.empty()) throw DataError("validation partition " + std::to_string(p) + " is empty");
  }

  GridSearchResult result;
  result.scheme = scheme;
  for (double c : grid.c_values) {
    for (double g : grid.gamma_values) result.table.push_back({{c, g}, 0.0});
  }

  std::vector<std::exception_ptr> errors(result.table.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t cell = next.fetch_add(1);
      if (cell >= result.table.size()) return;
      try {
        double sum = 0.0;
        for (const Fold& f : folds) {
          const SvmModel m = TrainSvm(f.train_x, f.train_y, result.table[cell].hyperparams,
                                      options.smo);
          sum += EvaluateAccuracy(m, f.valid_x, f.valid_y);
        }
        result.table[cell].accuracy = sum / static_cast<double>(folds.size());
      } catch (...) {
        errors[cell] = std::current_exception();
      }
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(options.threads,
                                      static_cast<unsigned>(result.table.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Table is ordered by C then gamma ascending only if the grid lists are;
  // the tie rule is applied on values.
  const GridCell* best = &result.table.front();
  for (const auto& cell : result.table) {
    const auto& b = best->hyperparams;
    const auto& h = cell.hyperparams;
    if (cell.accuracy > best->accuracy ||
        (cell.accuracy == best->accuracy &&
         (h.c < b.c || (h.c == b.c && h.gamma < b.gamma)))) {
      best = &cell;
    }
  }
  result.best = best->hyperparams;
  result.best_accuracy = best->accuracy;
  return result;
}

}  // namespace repbias
