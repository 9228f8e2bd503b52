#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dataset.hpp"

namespace srkit {

constexpr int kFsAbsent = -1;

// One allele per group, selecting a member by position within the group.
// kFsAbsent (only legal outside strict mode) opts the group out entirely.
struct FsChromosome {
  std::vector<int> alleles;
  bool operator==(const FsChromosome&) const = default;
  bool operator<(const FsChromosome& o) const { return alleles < o.alleles; }
};

struct FsConfig {
  double omega_fs = 0.9;  // accuracy weight in the combined objective
  double delta = 0.05;    // royalty fraction in selection
  int population = 50;
  int generations = 20;
  bool strict = true;     // exactly one feature per group
  int folds = 3;          // wrapper CV folds
  int oracle_trees = 50;  // the wrapper oracle is a single random forest
  int oracle_depth = 6;
  std::uint64_t seed = 0;
};

struct FsResult {
  FsChromosome best;
  std::vector<int> selected;  // decoded columns, ascending
  double fitness = 0.0;
  std::vector<double> trace;      // best-ever fitness after each generation (index 0 = init)
  std::size_t oracle_evals = 0;   // distinct chromosomes actually scored
};

// omega*model_error + (1-omega)*|S|/|F|, minimized. model_error is expected in
// [0,1] (fold-mean normalized MAE).
double fs_combine(double omega_fs, double m_fitness, std::size_t n_selected,
                  std::size_t n_total);

std::vector<int> fs_decode(const FsChromosome& c, const FeatureGroups& groups);

FsChromosome fs_random(Rng& g, const FeatureGroups& groups, bool strict);

// Tournament with royalty: the best ceil(delta*P) chromosomes are kept as
// parents at least once; remaining slots are sampled with probability
// proportional to inverted normalized fitness. Lower fitness is better.
std::vector<FsChromosome> fs_select(const std::vector<FsChromosome>& pop,
                                    const std::vector<double>& fitness, double delta, Rng& g);

// Single point i in [0, l): child1 = a[0..i) ++ b[i..), child2 symmetric.
std::pair<FsChromosome, FsChromosome> fs_crossover(const FsChromosome& a, const FsChromosome& b,
                                                   Rng& g);

// Allele i flips with probability |group_i|/total_features to a uniformly
// chosen different value. Outside strict mode the value domain includes
// kFsAbsent; in strict mode singleton groups have nothing to flip to.
FsChromosome fs_mutate(const FsChromosome& c, const FeatureGroups& groups,
                       std::size_t total_features, bool strict, Rng& g);

// GA wrapper selection over d.groups. The per-chromosome oracle is a k-fold CV
// of one forest restricted to the decoded columns (the full model search is
// reserved for the winning subset, downstream); scores are memoized per
// chromosome. Uses train rows when a split is present.
FsResult run_feature_selection(const Dataset& d, const FsConfig& cfg);

}  // namespace srkit
