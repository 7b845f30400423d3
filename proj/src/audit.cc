#include "repbias/audit.h"

#include <algorithm>
#include <cmath>

#include "repbias/error.h"
#include "repbias/random.h"

namespace repbias {
namespace {

void CheckKValues(const PcaModel& model, std::span<const std::size_t> k_values) {
  if (k_values.empty()) throw UsageError("k_values is empty");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] == 0 || k_values[i] > model.max_components()) {
      throw UsageError("k = " + std::to_string(k_values[i]) + " outside [1, " +
                       std::to_string(model.max_components()) + "]");
    }
    if (i > 0 && k_values[i] <= k_values[i - 1]) {
      throw UsageError("k_values must be strictly increasing");
    }
  }
}

}  // namespace

GroupErrorProfile ComputeGroupErrorProfile(const PcaModel& model,
                                           const EncodingMatrix& encodings,
                                           std::span<const std::size_t> k_values) {
  CheckKValues(model, k_values);
  const auto rows0 = encodings.RowsOfGroup(0);
  const auto rows1 = encodings.RowsOfGroup(1);
  if (rows0.empty() || rows1.empty()) {
    throw DataError("group error profile needs encoded rows in both groups");
  }
  GroupErrorProfile profile;
  profile.strategy = encodings.strategy;
  profile.k_values.assign(k_values.begin(), k_values.end());
  profile.err_group0 = ReconstructionErrors(model, encodings.rows, rows0, k_values);
  profile.err_group1 = ReconstructionErrors(model, encodings.rows, rows1, k_values);
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    profile.gap.push_back(profile.err_group0[i] - profile.err_group1[i]);
  }
  return profile;
}

SplitBaseline RandomSplitBaseline(const PcaModel& model, const EncodingMatrix& encodings,
                                  std::span<const std::size_t> k_values, int repetitions,
                                  std::uint64_t seed) {
  if (repetitions < 1) throw UsageError("repetitions must be positive");
  const GroupErrorProfile profile = ComputeGroupErrorProfile(model, encodings, k_values);
  const std::array<std::vector<std::size_t>, 2> members = {encodings.RowsOfGroup(0),
                                                           encodings.RowsOfGroup(1)};
  for (int g = 0; g < 2; ++g) {
    if (members[g].size() < 4) {
      throw DataError("random split baseline needs at least 4 rows per group");
    }
  }

  const std::size_t nk = k_values.size();
  SplitBaseline out;
  out.repetitions = repetitions;
  out.seed = seed;
  out.k_values = profile.k_values;
  out.inter_gap = profile.gap;
  for (auto& per_group : out.intra_gaps) {
    per_group.assign(nk, std::vector<double>(static_cast<std::size_t>(repetitions), 0.0));
  }

  for (int r = 0; r < repetitions; ++r) {
    const std::uint64_t rep_seed = DeriveSeed(seed, "baseline", static_cast<std::uint64_t>(r));
    for (int g = 0; g < 2; ++g) {
      std::vector<std::size_t> shuffled = members[g];
      Rng rng(rep_seed);
      rng.Shuffle(std::span(shuffled));
      const std::size_t half = shuffled.size() / 2;
      const std::span<const std::size_t> a(shuffled.data(), half);
      const std::span<const std::size_t> b(shuffled.data() + half, shuffled.size() - half);
      const auto err_a = ReconstructionErrors(model, encodings.rows, a, k_values);
      const auto err_b = ReconstructionErrors(model, encodings.rows, b, k_values);
      for (std::size_t ki = 0; ki < nk; ++ki) {
        out.intra_gaps[g][ki][static_cast<std::size_t>(r)] = std::fabs(err_a[ki] - err_b[ki]);
      }
    }
  }

  for (std::size_t ki = 0; ki < nk; ++ki) {
    double sum = 0.0;
    double max = 0.0;
    for (int g = 0; g < 2; ++g) {
      for (double v : out.intra_gaps[g][ki]) {
        sum += v;
        max = std::max(max, v);
      }
    }
    const double mean = sum / (2.0 * repetitions);
    out.mean_intra_gap.push_back(mean);
    out.max_intra_gap.push_back(max);
    if (mean < 1e-15) {
      out.inter_intra_ratio.push_back(std::nullopt);
    } else {
      out.inter_intra_ratio.push_back(std::fabs(profile.gap[ki]) / mean);
    }
  }
  return out;
}

NormSummary SummarizeNorms(const Matrix& rows, std::span<const std::size_t> subset) {
  NormSummary s;
  s.count = subset.size();
  if (subset.empty()) return s;
  std::vector<double> norms;
  norms.reserve(subset.size());
  for (std::size_t i : subset) norms.push_back(Norm(rows.row(i)));
  double sum = 0.0;
  for (double v : norms) sum += v;
  s.mean = sum / static_cast<double>(norms.size());
  double ss = 0.0;
  for (double v : norms) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(norms.size()));
  return s;
}

StrategyNorms ComputeStrategyNorms(const EncodingMatrix& encodings) {
  StrategyNorms out;
  out.strategy = encodings.strategy.Label();
  for (int g = 0; g < 2; ++g) {
    out.group[g] = SummarizeNorms(encodings.rows, encodings.RowsOfGroup(g));
  }
  std::vector<std::size_t> all(encodings.rows.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  out.all = SummarizeNorms(encodings.rows, all);
  return out;
}

NormStats ComputeNormStats(std::span<const EncodingMatrix> encodings) {
  NormStats stats;
  for (const auto& e : encodings) stats.push_back(ComputeStrategyNorms(e));
  return stats;
}

bool NormsOverlap(const NormSummary& group0, const NormSummary& group1) {
  const double n0 = static_cast<double>(group0.count);
  const double n1 = static_cast<double>(group1.count);
  double pooled_var;
  if (n0 + n1 > 0.0) {
    pooled_var = (n0 * group0.sd * group0.sd + n1 * group1.sd * group1.sd) / (n0 + n1);
  } else {
    pooled_var = 0.5 * (group0.sd * group0.sd + group1.sd * group1.sd);
  }
  return std::fabs(group0.mean - group1.mean) <= std::sqrt(pooled_var);
}

std::vector<bool> OverlapVerdict(const NormStats& stats) {
  std::vector<bool> out;
  for (const auto& s : stats) out.push_back(NormsOverlap(s.group[0], s.group[1]));
  return out;
}

}  // namespace repbias
