#ifndef REPBIAS_SVM_H_
#define REPBIAS_SVM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "repbias/matrix.h"

namespace repbias {

struct SvmHyperparams {
  double c = 1.0;
  double gamma = 1.0;
  bool operator==(const SvmHyperparams&) const = default;
};

// exp(-gamma * ||a - b||^2)
double RbfKernel(std::span<const double> a, std::span<const double> b, double gamma);

struct SmoOptions {
  double tolerance = 1e-3;  // stop when the maximal KKT violation drops below
  std::uint64_t max_iterations = 10'000'000;
  std::size_t cache_megabytes = 256;
};

// Raw solution of the soft-margin dual
//   max sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
//   s.t. 0 <= alpha_i <= C, sum_i alpha_i y_i = 0.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;            // b in f(x) = sum alpha_i y_i K(x_i, x) + b
  double dual_objective = 0.0;  // value of the maximized objective above
  std::uint64_t iterations = 0;
};

// Sequential minimal optimization with second-order working-set selection.
// Ties in the selection go to the lowest index, so the result is a pure
// function of the inputs. labels are +1/-1. Throws UsageError for bad
// inputs (fewer than 2 rows, a missing class, non-positive C or gamma) and
// NumericError when the iteration cap is hit.
DualSolution SolveDual(const Matrix& features, std::span<const int> labels,
                       const SvmHyperparams& hp, const SmoOptions& options = {});

struct SvmModel {
  Matrix support_rows;
  std::vector<double> dual_coeffs;  // alpha_i * y_i
  double bias = 0.0;
  SvmHyperparams hyperparams;
  std::size_t feature_dim = 0;
  double dual_objective = 0.0;
  std::uint64_t iterations = 0;
};

SvmModel TrainSvm(const Matrix& features, std::span<const int> labels,
                  const SvmHyperparams& hp, const SmoOptions& options = {});

double DecisionValue(const SvmModel& model, std::span<const double> x);
// +1 when the decision value is >= 0, else -1.
int Predict(const SvmModel& model, std::span<const double> x);
double EvaluateAccuracy(const SvmModel& model, const Matrix& features,
                        std::span<const int> labels);

// {0, 1} class ids to {-1, +1}.
std::vector<int> ToSignedLabels(std::span<const int> labels01);

// Column standardization fitted on training rows; constant columns keep sd 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;
  static Standardizer Fit(const Matrix& rows);
  Matrix Apply(const Matrix& rows) const;
};

struct GridSpec {
  std::vector<double> c_values;
  std::vector<double> gamma_values;

  // Powers of two: C = 2^c_lo, 2^(c_lo+c_step), ..., 2^c_hi; same for gamma.
  static GridSpec Exponential(int c_lo, int c_hi, int c_step, int gamma_lo, int gamma_hi,
                              int gamma_step);
  // C in 2^{-3,-1,...,11}, gamma in 2^{-11,-9,...,3}.
  static GridSpec Default();
};

struct ValidationScheme {
  enum class Kind { kKFold, kHoldout };
  Kind kind = Kind::kKFold;
  int folds = 5;
  double holdout_fraction = 0.2;

  static ValidationScheme KFold(int folds = 5);
  static ValidationScheme Holdout(double fraction = 0.2);
  // 5-fold CV below 2000 rows, a 20% holdout otherwise.
  static ValidationScheme ForSize(std::size_t n);
  // "kfold(5)" or "holdout(0.2)".
  std::string Label() const;
};

struct GridCell {
  SvmHyperparams hyperparams;
  double accuracy = 0.0;  // mean validation accuracy over partitions
};

struct GridSearchResult {
  SvmHyperparams best;
  double best_accuracy = 0.0;
  std::vector<GridCell> table;  // C-major, then gamma, ascending
  ValidationScheme scheme;
};

struct GridSearchOptions {
  SmoOptions smo;
  unsigned threads = 1;
};

// Validation partitions for the scheme, stratified by `strata` (labels are
// used when strata is empty). Returns the partition index of each row; under
// holdout, 1 marks validation rows and 0 training rows.
std::vector<int> ValidationPartitions(std::span<const int> labels, std::span<const int> strata,
                                      const ValidationScheme& scheme, std::uint64_t seed);

// Evaluates every (C, gamma) cell. The best cell has the highest accuracy,
// ties going to the smaller C, then the smaller gamma. Throws DataError when a
// training partition lacks a class. Results do not depend on `threads`.
GridSearchResult GridSearch(const Matrix& features, std::span<const int> labels,
                            std::span<const int> strata, const GridSpec& grid,
                            const ValidationScheme& scheme, std::uint64_t seed,
                            const GridSearchOptions& options = {});

}  // namespace repbias

#endif  // REPBIAS_SVM_H_
