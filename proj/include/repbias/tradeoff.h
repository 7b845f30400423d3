#ifndef REPBIAS_TRADEOFF_H_
#define REPBIAS_TRADEOFF_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repbias/audit.h"
#include "repbias/corpus.h"
#include "repbias/embedding_store.h"
#include "repbias/encoder.h"
#include "repbias/pca.h"
#include "repbias/svm.h"

namespace repbias {

struct PipelineOptions {
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  OovPolicy oov = OovPolicy::kSkip;
  GridSpec grid = GridSpec::Default();
  // Unset: 5-fold CV below 2000 training rows, else a 20% holdout.
  std::optional<ValidationScheme> scheme;
  // Fit PCA on training rows only instead of the whole corpus.
  bool pca_train_only = false;
  bool standardize = false;
  GridSearchOptions search;
};

// Result of encoding, fitting PCA and training one classifier on k-dim
// component scores (or on the raw encodings when k is unset).
struct PipelineRun {
  EncodingMatrix encodings;
  PcaModel pca;
  SplitPlan split;
  std::optional<std::size_t> k;
  std::optional<double> err_group0, err_group1, gap;  // set when k is set
  GridSearchResult search;
  SvmModel model;
  double test_accuracy = 0.0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

// Split seed is DeriveSeed(seed, "split"), fold seed DeriveSeed(seed, "folds").
// Neither depends on the strategy, so every strategy sees the same partitions.
// When `fixed` is given, grid search is skipped and those hyperparameters are
// used directly (search is left empty).
PipelineRun RunPipeline(const Corpus& corpus, const EmbeddingTable& table,
                        const EncodingStrategy& strategy, std::optional<std::size_t> k,
                        const PipelineOptions& options,
                        const std::optional<SvmHyperparams>& fixed = std::nullopt);

struct TradeoffRecord {
  double lambda = 0.0;
  std::size_t k = 0;
  double err_group0 = 0.0;
  double err_group1 = 0.0;
  double gap = 0.0;
  double test_accuracy = 0.0;
  SvmHyperparams hyperparams;

  bool operator==(const TradeoffRecord&) const = default;
};

// Nearest double to the value rounded at 12 decimals, so that grid arithmetic
// such as 0.4 + 17 * 0.01 lands on the same key as the literal 0.57.
double CanonicalLambda(double lambda);

// start, start + step, ..., up to stop (inclusive within 1e-9 steps).
std::vector<double> LambdaGrid(double start, double stop, double step);

// [around - coarse_step, around + coarse_step] intersected with [0, 1], at `step`.
std::vector<double> RefineGrid(double around, double step, double coarse_step);

// One record per k for a single strategy. The strategy's lambda is 1 for
// average, 0 for extrema. The PCA model is fitted once for the strategy.
// With `fixed`, the per-k hyperparameters are taken from it.
std::vector<TradeoffRecord> EvaluateStrategy(
    const Corpus& corpus, const EmbeddingTable& table, const EncodingStrategy& strategy,
    std::span<const std::size_t> k_set, const PipelineOptions& options,
    const std::map<std::size_t, SvmHyperparams>* fixed = nullptr);

struct SweepOptions {
  PipelineOptions pipeline;
  // Reuse the lambda = 1 best hyperparameters for every lambda.
  bool fast = false;
};

// Records ordered by lambda then k. lambda_grid must be sorted, distinct and
// inside [0, 1]; each k must be <= d.
std::vector<TradeoffRecord> Sweep(const Corpus& corpus, const EmbeddingTable& table,
                                  std::span<const double> lambda_grid,
                                  std::span<const std::size_t> k_set,
                                  const SweepOptions& options);

// Evaluates RefineGrid(around, step, coarse_step) points that are not yet in
// `records` and merges them in. Existing records are kept unchanged.
std::vector<TradeoffRecord> Refine(const std::vector<TradeoffRecord>& records, double around,
                                   double step, double coarse_step, const Corpus& corpus,
                                   const EmbeddingTable& table,
                                   std::span<const std::size_t> k_set,
                                   const SweepOptions& options);

struct Recommendation {
  std::string rule;  // "epsilon" or "gap_budget"
  double lambda_star = 0.0;
  double epsilon = 0.0;
  std::optional<double> gap_budget;
  std::vector<std::size_t> k_set;
  double best_accuracy = 0.0;
  double achieved_accuracy = 0.0;
  double achieved_max_abs_gap = 0.0;
  bool feasible = false;
};

// Among lambdas whose mean accuracy over k_set is within epsilon of the best,
// picks the one minimizing max_k |gap|; ties go to higher accuracy, then to
// larger lambda. Throws DataError when some (lambda, k) pair is missing or
// when duplicated records disagree.
Recommendation Recommend(std::span<const TradeoffRecord> records, double epsilon,
                         std::span<const std::size_t> k_set);

// Inverse rule: among lambdas with max_k |gap| <= gap_budget, maximize mean
// accuracy; ties go to smaller gap, then larger lambda. When nothing fits the
// budget, returns the smallest-gap lambda with feasible = false.
Recommendation RecommendWithGapBudget(std::span<const TradeoffRecord> records,
                                      double gap_budget, std::span<const std::size_t> k_set);

}  // namespace repbias

#endif  // REPBIAS_TRADEOFF_H_
