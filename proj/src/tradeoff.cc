#include "repbias/tradeoff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include "repbias/error.h"
#include "repbias/random.h"

namespace repbias {
namespace {

struct TrainTestRows {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

TrainTestRows PartitionRows(const EncodingMatrix& enc, const SplitPlan& split) {
  const std::unordered_set<std::string> test_ids(split.test_ids.begin(),
                                                 split.test_ids.end());
  TrainTestRows rows;
  for (std::size_t i = 0; i < enc.sample_ids.size(); ++i) {
    (test_ids.count(enc.sample_ids[i]) ? rows.test : rows.train).push_back(i);
  }
  if (rows.train.empty() || rows.test.empty()) {
    throw DataError("train/test split leaves an empty side after encoding");
  }
  return rows;
}

double RecordLambda(const EncodingStrategy& s) {
  switch (s.kind) {
    case EncodingKind::kAverage:
      return 1.0;
    case EncodingKind::kExtrema:
      return 0.0;
    case EncodingKind::kConvex:
      return s.lambda;
  }
  return s.lambda;
}

void CheckKSet(std::span<const std::size_t> k_set, std::size_t dim) {
  if (k_set.empty()) throw UsageError("k set is empty");
  for (std::size_t i = 0; i < k_set.size(); ++i) {
    if (k_set[i] == 0 || k_set[i] > dim) {
      throw UsageError("k = " + std::to_string(k_set[i]) + " outside [1, " +
                       std::to_string(dim) + "]");
    }
    if (i > 0 && k_set[i] <= k_set[i - 1]) {
      throw UsageError("k set must be strictly increasing");
    }
  }
}

// Fits PCA, then trains/evaluates one classifier per k.
struct StrategyEvaluation {
  EncodingMatrix encodings;
  PcaModel pca;
  SplitPlan split;
  TrainTestRows rows;
};

StrategyEvaluation PrepareStrategy(const Corpus& corpus, const EmbeddingTable& table,
                                   const EncodingStrategy& strategy,
                                   const PipelineOptions& options) {
  StrategyEvaluation ev;
  ev.split = MakeSplit(corpus, options.train_fraction, DeriveSeed(options.seed, "split"));
  ev.encodings = EncodeCorpus(corpus, table, strategy);
  ev.rows = PartitionRows(ev.encodings, ev.split);
  ev.pca = options.pca_train_only ? FitPca(ev.encodings.rows, ev.rows.train)
                                  : FitPca(ev.encodings.rows);
  return ev;
}

void TrainAndTest(const StrategyEvaluation& ev, std::optional<std::size_t> k,
                  const PipelineOptions& options, const std::optional<SvmHyperparams>& fixed,
                  PipelineRun& run) {
  const EncodingMatrix& enc = ev.encodings;
  Matrix train_x = enc.rows.SelectRows(ev.rows.train);
  Matrix test_x = enc.rows.SelectRows(ev.rows.test);
  if (k) {
    train_x = ProjectRows(ev.pca, train_x, *k);
    test_x = ProjectRows(ev.pca, test_x, *k);
  }
  if (options.standardize) {
    const Standardizer s = Standardizer::Fit(train_x);
    train_x = s.Apply(train_x);
    test_x = s.Apply(test_x);
  }
  std::vector<int> train_y, test_y, strata;
  for (std::size_t i : ev.rows.train) {
    train_y.push_back(enc.labels[i] == 1 ? 1 : -1);
    strata.push_back(enc.labels[i] * 2 + enc.groups[i]);
  }
  for (std::size_t i : ev.rows.test) test_y.push_back(enc.labels[i] == 1 ? 1 : -1);

  SvmHyperparams hp;
  if (fixed) {
    hp = *fixed;
  } else {
    const ValidationScheme scheme =
        options.scheme.value_or(ValidationScheme::ForSize(train_x.rows()));
    run.search = GridSearch(train_x, train_y, strata, options.grid, scheme,
                            DeriveSeed(options.seed, "folds"), options.search);
    hp = run.search.best;
  }
  run.model = TrainSvm(train_x, train_y, hp, options.search.smo);
  run.test_accuracy = EvaluateAccuracy(run.model, test_x, test_y);
  run.train_rows = train_x.rows();
  run.test_rows = test_x.rows();
}

struct Aggregate {
  double lambda;
  double mean_accuracy;
  double max_abs_gap;
};

std::vector<Aggregate> AggregateByLambda(std::span<const TradeoffRecord> records,
                                         std::span<const std::size_t> k_set) {
  if (records.empty()) throw DataError("no tradeoff records");
  if (k_set.empty()) throw UsageError("k set is empty");
  std::map<double, std::map<std::size_t, const TradeoffRecord*>> by_lambda;
  for (const auto& r : records) {
    auto& slot = by_lambda[CanonicalLambda(r.lambda)][r.k];
    if (slot && !(*slot == r)) {
      throw DataError("conflicting duplicate records at lambda " + std::to_string(r.lambda));
    }
    slot = &r;
  }
  std::vector<Aggregate> out;
  for (const auto& [lambda, per_k] : by_lambda) {
    double acc = 0.0;
    double gap = 0.0;
    for (std::size_t k : k_set) {
      auto it = per_k.find(k);
      if (it == per_k.end()) {
        throw DataError("missing record for lambda " + std::to_string(lambda) + ", k " +
                        std::to_string(k));
      }
      acc += it->second->test_accuracy;
      gap = std::max(gap, std::fabs(it->second->gap));
    }
    out.push_back({lambda, acc / static_cast<double>(k_set.size()), gap});
  }
  return out;
}

}  // namespace

PipelineRun RunPipeline(const Corpus& corpus, const EmbeddingTable& table,
                        const EncodingStrategy& strategy, std::optional<std::size_t> k,
                        const PipelineOptions& options,
                        const std::optional<SvmHyperparams>& fixed) {
  StrategyEvaluation ev = PrepareStrategy(corpus, table, strategy, options);
  PipelineRun run;
  run.k = k;
  if (k) {
    const std::size_t ks[] = {*k};
    const auto profile = ComputeGroupErrorProfile(ev.pca, ev.encodings, ks);
    run.err_group0 = profile.err_group0[0];
    run.err_group1 = profile.err_group1[0];
    run.gap = profile.gap[0];
  }
  TrainAndTest(ev, k, options, fixed, run);
  run.encodings = std::move(ev.encodings);
  run.pca = std::move(ev.pca);
  run.split = std::move(ev.split);
  return run;
}

double CanonicalLambda(double lambda) { return std::round(lambda * 1e12) / 1e12; }

std::vector<double> LambdaGrid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw UsageError("bad lambda grid");
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> out;
  for (long long i = 0; i <= n; ++i) {
    out.push_back(CanonicalLambda(start + static_cast<double>(i) * step));
  }
  for (double v : out) {
    if (v < 0.0 || v > 1.0) throw UsageError("lambda grid leaves [0, 1]");
  }
  return out;
}

std::vector<double> RefineGrid(double around, double step, double coarse_step) {
  if (!(step > 0.0 && step < coarse_step)) {
    throw UsageError("refine step must satisfy 0 < step < coarse step");
  }
  const auto n = static_cast<long long>(std::llround(2.0 * coarse_step / step));
  std::vector<double> out;
  for (long long i = 0; i <= n; ++i) {
    const double v = CanonicalLambda(around - coarse_step + static_cast<double>(i) * step);
    if (v >= 0.0 && v <= 1.0) out.push_back(v);
  }
  return out;
}

std::vector<TradeoffRecord> EvaluateStrategy(const Corpus& corpus,
                                             const EmbeddingTable& table,
                                             const EncodingStrategy& strategy,
                                             std::span<const std::size_t> k_set,
                                             const PipelineOptions& options,
                                             const std::map<std::size_t, SvmHyperparams>* fixed) {
  CheckKSet(k_set, table.dim());
  const StrategyEvaluation ev = PrepareStrategy(corpus, table, strategy, options);
  const auto profile = ComputeGroupErrorProfile(ev.pca, ev.encodings, k_set);
  std::vector<TradeoffRecord> records;
  for (std::size_t i = 0; i < k_set.size(); ++i) {
    std::optional<SvmHyperparams> hp;
    if (fixed) {
      auto it = fixed->find(k_set[i]);
      if (it == fixed->end()) throw UsageError("no fixed hyperparameters for k");
      hp = it->second;
    }
    PipelineRun run;
    TrainAndTest(ev, k_set[i], options, hp, run);
    TradeoffRecord r;
    r.lambda = RecordLambda(strategy);
    r.k = k_set[i];
    r.err_group0 = profile.err_group0[i];
    r.err_group1 = profile.err_group1[i];
    r.gap = profile.gap[i];
    r.test_accuracy = run.test_accuracy;
    r.hyperparams = run.model.hyperparams;
    records.push_back(r);
  }
  return records;
}

std::vector<TradeoffRecord> Sweep(const Corpus& corpus, const EmbeddingTable& table,
                                  std::span<const double> lambda_grid,
                                  std::span<const std::size_t> k_set,
                                  const SweepOptions& options) {
  if (lambda_grid.empty()) throw UsageError("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0 && lambda_grid[i] <= 1.0)) {
      throw UsageError("lambda outside [0, 1]");
    }
    if (i > 0 && lambda_grid[i] <= lambda_grid[i - 1]) {
      throw UsageError("lambda grid must be sorted and distinct");
    }
  }
  CheckKSet(k_set, table.dim());

  std::map<std::size_t, SvmHyperparams> fixed;
  std::vector<TradeoffRecord> at_one;
  if (options.fast) {
    at_one = EvaluateStrategy(corpus, table, EncodingStrategy::Convex(1.0, options.pipeline.oov),
                              k_set, options.pipeline);
    for (const auto& r : at_one) fixed[r.k] = r.hyperparams;
  }
  std::vector<TradeoffRecord> records;
  for (double lambda : lambda_grid) {
    if (options.fast && lambda == 1.0) {
      records.insert(records.end(), at_one.begin(), at_one.end());
      continue;
    }
    const auto part = EvaluateStrategy(corpus, table,
                                       EncodingStrategy::Convex(lambda, options.pipeline.oov),
                                       k_set, options.pipeline, options.fast ? &fixed : nullptr);
    records.insert(records.end(), part.begin(), part.end());
  }
  return records;
}

std::vector<TradeoffRecord> Refine(const std::vector<TradeoffRecord>& records, double around,
                                   double step, double coarse_step, const Corpus& corpus,
                                   const EmbeddingTable& table,
                                   std::span<const std::size_t> k_set,
                                   const SweepOptions& options) {
  const auto grid = RefineGrid(around, step, coarse_step);
  std::set<double> have;
  for (const auto& r : records) have.insert(CanonicalLambda(r.lambda));
  std::vector<double> missing;
  for (double v : grid) {
    if (!have.count(v)) missing.push_back(v);
  }
  std::vector<TradeoffRecord> merged = records;
  if (!missing.empty()) {
    const auto added = Sweep(corpus, table, missing, k_set, options);
    merged.insert(merged.end(), added.begin(), added.end());
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const TradeoffRecord& a, const TradeoffRecord& b) {
                     if (a.lambda != b.lambda) return a.lambda < b.lambda;
                     return a.k < b.k;
                   });
  return merged;
}

Recommendation Recommend(std::span<const TradeoffRecord> records, double epsilon,
                         std::span<const std::size_t> k_set) {
  if (!(epsilon >= 0.0)) throw UsageError("epsilon must be non-negative");
  const auto agg = AggregateByLambda(records, k_set);
  double best_acc = -std::numeric_limits<double>::infinity();
  for (const auto& a : agg) best_acc = std::max(best_acc, a.mean_accuracy);

  const Aggregate* pick = nullptr;
  for (const auto& a : agg) {
    if (a.mean_accuracy < best_acc - epsilon - 1e-12) continue;
    if (!pick || a.max_abs_gap < pick->max_abs_gap ||
        (a.max_abs_gap == pick->max_abs_gap &&
         (a.mean_accuracy > pick->mean_accuracy ||
          (a.mean_accuracy == pick->mean_accuracy && a.lambda > pick->lambda)))) {
      pick = &a;
    }
  }
  Recommendation rec;
  rec.rule = "epsilon";
  rec.epsilon = epsilon;
  rec.k_set.assign(k_set.begin(), k_set.end());
  rec.best_accuracy = best_acc;
  rec.lambda_star = pick->lambda;
  rec.achieved_accuracy = pick->mean_accuracy;
  rec.achieved_max_abs_gap = pick->max_abs_gap;
  rec.feasible = true;
  return rec;
}

Recommendation RecommendWithGapBudget(std::span<const TradeoffRecord> records,
                                      double gap_budget, std::span<const std::size_t> k_set) {
  if (!(gap_budget >= 0.0)) throw UsageError("gap budget must be non-negative");
  const auto agg = AggregateByLambda(records, k_set);
  double best_acc = -std::numeric_limits<double>::infinity();
  for (const auto& a : agg) best_acc = std::max(best_acc, a.mean_accuracy);

  const Aggregate* pick = nullptr;
  for (const auto& a : agg) {
    if (a.max_abs_gap > gap_budget) continue;
    if (!pick || a.mean_accuracy > pick->mean_accuracy ||
        (a.mean_accuracy == pick->mean_accuracy &&
         (a.max_abs_gap < pick->max_abs_gap ||
          (a.max_abs_gap == pick->max_abs_gap && a.lambda > pick->lambda)))) {
      pick = &a;
    }
  }
  const bool feasible = pick != nullptr;
  if (!feasible) {
    for (const auto& a : agg) {
      if (!pick || a.max_abs_gap < pick->max_abs_gap ||
          (a.max_abs_gap == pick->max_abs_gap &&
           (a.mean_accuracy > pick->mean_accuracy ||
            (a.mean_accuracy == pick->mean_accuracy && a.lambda > pick->lambda)))) {
        pick = &a;
      }
    }
  }
  Recommendation rec;
  rec.rule = "gap_budget";
  rec.gap_budget = gap_budget;
  rec.k_set.assign(k_set.begin(), k_set.end());
  rec.best_accuracy = best_acc;
  rec.lambda_star = pick->lambda;
  rec.achieved_accuracy = pick->mean_accuracy;
  rec.achieved_max_abs_gap = pick->max_abs_gap;
  rec.feasible = feasible;
  return rec;
}

}  // namespace repbias
