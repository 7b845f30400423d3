#include "repbias/stratify.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "repbias/error.h"
#include "repbias/random.h"

namespace repbias {
namespace {

std::map<int, std::vector<std::size_t>> GroupByStratum(std::span<const int> strata) {
  std::map<int, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < strata.size(); ++i) cells[strata[i]].push_back(i);
  return cells;
}

}  // namespace

std::vector<bool> StratifiedHoldout(std::span<const int> strata, double train_fraction,
                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("train_fraction must lie in (0, 1)");
  }
  auto cells = GroupByStratum(strata);
  const double test_fraction = 1.0 - train_fraction;
  const auto target =
      static_cast<std::int64_t>(std::llround(test_fraction * static_cast<double>(strata.size())));

  struct Quota {
    std::vector<std::size_t>* members;
    std::int64_t count;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::int64_t assigned = 0;
  for (auto& [stratum, members] : cells) {
    const double q = test_fraction * static_cast<double>(members.size());
    Quota quota{&members, 0, 0.0};
    if (members.size() >= 2) {
      quota.count = static_cast<std::int64_t>(std::floor(q));
      quota.remainder = q - std::floor(q);
    }
    assigned += quota.count;
    quotas.push_back(quota);
  }

  std::vector<std::size_t> order(quotas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder;
  });
  for (std::size_t idx : order) {
    if (assigned >= target) break;
    if (quotas[idx].members->size() < 2) continue;
    ++quotas[idx].count;
    ++assigned;
  }

  std::vector<bool> is_test(strata.size(), false);
  Rng rng(seed);
  for (auto& quota : quotas) {
    auto& members = *quota.members;
    if (members.size() < 2) continue;
    const auto n_test = std::clamp<std::int64_t>(
        quota.count, 1, static_cast<std::int64_t>(members.size()) - 1);
    rng.Shuffle(std::span(members));
    for (std::int64_t i = 0; i < n_test; ++i) is_test[members[i]] = true;
  }
  return is_test;
}

std::vector<int> StratifiedFolds(std::span<const int> strata, int folds,
                                 std::uint64_t seed) {
  if (folds < 2) throw UsageError("need at least 2 folds");
  auto cells = GroupByStratum(strata);
  std::vector<int> fold_of(strata.size(), 0);
  Rng rng(seed);
  std::size_t deal = 0;
  for (auto& [stratum, members] : cells) {
    rng.Shuffle(std::span(members));
    for (std::size_t idx : members) {
      fold_of[idx] = static_cast<int>(deal % static_cast<std::size_t>(folds));
      ++deal;
    }
  }
  return fold_of;
}

}  // namespace repbias
