#ifndef REPBIAS_AUDIT_H_
#define REPBIAS_AUDIT_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repbias/encoder.h"
#include "repbias/pca.h"

namespace repbias {

// Per-group PCA reconstruction errors over a list of component counts.
// gap = err_group0 - err_group1.
struct GroupErrorProfile {
  std::vector<std::size_t> k_values;
  std::vector<double> err_group0;
  std::vector<double> err_group1;
  std::vector<double> gap;
  EncodingStrategy strategy;
};

// Throws UsageError when k_values is not strictly increasing within
// [1, d_max], DataError when a group has no encoded rows.
GroupErrorProfile ComputeGroupErrorProfile(const PcaModel& model,
                                           const EncodingMatrix& encodings,
                                           std::span<const std::size_t> k_values);

// Intra-group gaps from random halvings of each group, used to judge whether
// the inter-group gap could arise by chance. The global model is reused; only
// rows are partitioned.
struct SplitBaseline {
  int repetitions = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> k_values;
  // intra_gaps[group][k index][repetition] = |err(half A) - err(half B)|
  std::array<std::vector<std::vector<double>>, 2> intra_gaps;
  std::vector<double> inter_gap;       // signed, from the group profile
  std::vector<double> mean_intra_gap;  // over both groups and all repetitions
  std::vector<double> max_intra_gap;
  // |inter_gap| / mean_intra_gap; absent when mean_intra_gap < 1e-15.
  std::vector<std::optional<double>> inter_intra_ratio;
};

// Repetition r shuffles each group's rows with a stream seeded by
// DeriveSeed(seed, "baseline", r) and halves them (first floor(m/2) rows vs
// the rest). Both groups use the same per-repetition stream, so swapping the
// group labels leaves every aggregate unchanged. Needs >= 4 rows per group.
SplitBaseline RandomSplitBaseline(const PcaModel& model, const EncodingMatrix& encodings,
                                  std::span<const std::size_t> k_values, int repetitions,
                                  std::uint64_t seed);

struct NormSummary {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  std::size_t count = 0;
};

struct StrategyNorms {
  std::string strategy;
  std::array<NormSummary, 2> group;
  NormSummary all;
};

using NormStats = std::vector<StrategyNorms>;

// L2-norm statistics of the encoding rows, per group and overall.
NormSummary SummarizeNorms(const Matrix& rows, std::span<const std::size_t> subset);
StrategyNorms ComputeStrategyNorms(const EncodingMatrix& encodings);
NormStats ComputeNormStats(std::span<const EncodingMatrix> encodings);

// True iff |mean0 - mean1| <= pooled sd, where the pooled variance is the
// count-weighted mean of the two group variances.
bool NormsOverlap(const NormSummary& group0, const NormSummary& group1);
std::vector<bool> OverlapVerdict(const NormStats& stats);

}  // namespace repbias

#endif  // REPBIAS_AUDIT_H_
