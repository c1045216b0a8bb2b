#ifndef ASMFS_FOLDS_HPP
#define ASMFS_FOLDS_HPP

#include "asmfs/common.hpp"

#include <string>
#include <vector>

namespace asmfs {

/// Assigns each subject a fold in [0, folds). Each class is shuffled and dealt
/// round-robin, continuing across classes, so fold sizes and per-class counts
/// per fold both differ by at most one.
inline std::vector<int> stratified_kfold(const Vector& labels, int folds, std::uint64_t seed) {
    const Index n = labels.size();
    if (folds < 2) throw ValidationError("folds must be >= 2, got " + std::to_string(folds));
    if (n < folds)
        throw ValidationError("cannot split " + std::to_string(n) + " subjects into " + std::to_string(folds) + " folds");
    std::vector<Index> pos;
    std::vector<Index> neg;
    for (Index i = 0; i < n; ++i) (labels(i) > 0 ? pos : neg).push_back(i);
    if (static_cast<Index>(pos.size()) < folds || static_cast<Index>(neg.size()) < folds)
        warn("a class has fewer members than the " + std::to_string(folds) +
             " folds; some folds will miss that class");
    Rng rng(derive_seed(seed, {0x5f01d}));
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<int> assignment(static_cast<std::size_t>(n), 0);
    std::size_t slot = 0;
    for (const auto* group : {&pos, &neg})
        for (Index i : *group) assignment[static_cast<std::size_t>(i)] = static_cast<int>(slot++ % static_cast<std::size_t>(folds));
    return assignment;
}

struct FoldSplit {
    std::vector<Index> train;
    std::vector<Index> test;
};

inline FoldSplit fold_split(const std::vector<int>& assignment, int fold) {
    FoldSplit s;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        (assignment[i] == fold ? s.test : s.train).push_back(static_cast<Index>(i));
    return s;
}

inline int fold_count(const std::vector<int>& assignment) {
    int f = 0;
    for (int a : assignment) f = std::max(f, a + 1);
    return f;
}

}  // namespace asmfs

#endif  // ASMFS_FOLDS_HPP
