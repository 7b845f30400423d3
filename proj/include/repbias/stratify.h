#ifndef REPBIAS_STRATIFY_H_
#define REPBIAS_STRATIFY_H_

#include <cstdint>
#include <span>
#include <vector>

namespace repbias {

// Stratified train/test assignment. Returns is_test[i] for each item.
//
// The test total is round((1 - train_fraction) * n), apportioned over strata
// by largest remainder (ties go to the lower stratum id), so every stratum's
// train share lands within one item of train_fraction. Strata of size 1 go
// entirely to train; strata of size >= 2 keep at least one item on each side.
std::vector<bool> StratifiedHoldout(std::span<const int> strata, double train_fraction,
                                    std::uint64_t seed);

// Stratified k-fold assignment: within each stratum (ascending id) items are
// shuffled and dealt round-robin, continuing the deal across strata so fold
// sizes differ by at most one. Returns the fold index of each item.
std::vector<int> StratifiedFolds(std::span<const int> strata, int folds,
                                 std::uint64_t seed);

}  // namespace repbias

#endif  // REPBIAS_STRATIFY_H_
