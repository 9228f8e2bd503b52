#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "expr.hpp"
#include "metrics.hpp"

namespace srkit {

// Full-binary-tree shape in prefix order: 1 = internal, 0 = leaf.
struct FbtTopology {
  std::vector<std::uint8_t> shape;
  std::size_t size() const { return shape.size(); }
  std::size_t internals() const { return (shape.size() - 1) / 2; }
  std::size_t leaf_count() const { return (shape.size() + 1) / 2; }
};

// Every shape with an odd node count in [xi1, xi2], in deterministic order
// (size ascending, then left-subtree-size-major recursion order).
std::vector<FbtTopology> enumerate_topologies(int xi1, int xi2);

struct SamplingStrategy {
  // (feature, x): exactly x of the emitted candidates contain the feature;
  // the rest avoid it, so the long-run fraction equals x
  std::optional<std::pair<int, double>> feature_quota;
  // (sizes, x): candidates come from the listed sizes x of the time
  std::optional<std::pair<std::vector<int>, double>> size_focus;
  int knn = 5;               // neighbors in the adaptive update
  std::size_t theta = 1000;  // evaluations between updates
  std::size_t rho = 10000000;  // evaluation cap
  // extends the adaptive update from the size table to function and leaf
  // propensities (frequencies inside the lowest-loss decile of the history)
  bool adaptive_alloc = true;
};

struct StructureConstraint {
  std::vector<int> required_features;        // every candidate must use these
  std::optional<ExprTree> required_subtree;  // exact sub-tree every candidate embeds
};

struct LvConfig {
  int xi1 = 3;
  int xi2 = 13;
  LossSpec loss;
  FunctionSet functions = FunctionSet::standard();
  // stop as soon as the best loss reaches this (losses are positive whenever
  // psi > 0, so the 0 default effectively keeps searching)
  double stop_loss = 0.0;
  // minimum held-out r2 at which the fitted pair is trusted; below it the raw
  // structure is reported with raw-scale metrics, so a search that found
  // nothing shows up as a failure instead of a mean-matched constant
  double fit_r2_floor = 0.5;
  std::uint64_t wall_ms = 0;             // optional wall-clock budget, 0 = none
  std::size_t exhaustive_cap = 1000000;  // enumerate the whole space when it fits
  bool keep_log = false;
  std::uint64_t seed = 0;
};

struct LvCandidate {
  ExprTree tree;  // raw T(x): function nodes over variable / unit-constant leaves
  double a = 0.0, b = 0.0;
  double loss = std::numeric_limits<double>::infinity();
  std::string key;  // canonical allocation key (dedup identity)
};

// OLS of y against T(x) (slope + intercept); a constant or non-finite T falls
// back to a = 0, b = mean(y). The parsimony term counts |g| = size + 2 so the
// fitted pair cannot hide complexity.
LvCandidate fit_and_score(ExprTree tree, const Matrix& X, const std::vector<double>& y,
                          const std::vector<std::size_t>& rows, const LossSpec& loss);

// Constrained candidate generator with the adaptive probability tables.
// Exposed separately from the run loop so the distributional contracts are
// testable in isolation.
class LvSampler {
 public:
  LvSampler(std::vector<FbtTopology> topologies, std::size_t n_features, FunctionSet fs,
            SamplingStrategy strategy, StructureConstraint constraints);

  // one allocated candidate honoring quota and constraints
  ExprTree sample(Rng& g);
  // history entry for the adaptive update
  void record(const ExprTree& t, double loss);
  // KNN-scored refresh of the size table (and, when adaptive_alloc, of the
  // function/leaf propensities); all tables stay floored and normalized
  void update();

  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<double>& size_weights() const { return size_weights_; }
  const std::vector<double>& function_weights() const { return fn_weights_; }
  const std::vector<double>& leaf_weights() const { return leaf_weights_; }

  static bool satisfies(const ExprTree& t, const StructureConstraint& c);

 private:
  std::vector<FbtTopology> tops_;
  std::size_t n_features_;
  FunctionSet fs_;
  SamplingStrategy strategy_;
  StructureConstraint constraints_;
  std::vector<int> sizes_;                  // distinct topology sizes, ascending
  std::vector<std::size_t> size_of_top_;    // topology index -> size class index
  std::vector<std::vector<std::size_t>> tops_of_size_;
  std::vector<double> size_weights_;        // per size class, sums to 1, floored
  std::vector<double> fn_weights_;          // per fs_.ops entry
  std::vector<double> leaf_weights_;        // features + trailing unit constant

  struct HistoryItem {
    std::vector<double> descriptor;  // (size, per-op counts, per-leaf counts)
    double loss;
  };
  std::deque<HistoryItem> history_;

  // quota_state: -1 no quota, 0 exclude the quota feature, 1 include it
  ExprTree try_sample(Rng& g, int quota_state, bool& ok);
  std::size_t draw_topology(Rng& g, const std::vector<char>& allowed);
};

struct LvLogEntry {
  std::string key;
  std::size_t size = 0;
  double loss = 0, a = 0, b = 0;
};

struct LvResult {
  LvCandidate best;
  ExprTree fitted;            // a*T(x)+b, or bare T(x) when the fit is distrusted
  bool fit_applied = true;    // false once eval r2 fell under cfg.fit_r2_floor
  std::string infix;
  std::string key_exact;      // canonical keys of the reported expression
  std::string key_structure;
  MetricsVector train_metrics, eval_metrics;
  std::size_t evaluations = 0;  // distinct candidates fitted
  std::size_t duplicates = 0;
  bool exhausted = false;
  bool stopped_early = false;
  std::vector<LvLogEntry> log;  // populated when cfg.keep_log
};

// sample -> dedup -> fit -> periodic table update, ending at rho evaluations,
// the stop_loss floor, or exhaustion (spaces up to cfg.exhaustive_cap are
// enumerated outright). Returns the global minimum-loss candidate.
LvResult run_lv_sr(const Dataset& d, const LvConfig& cfg, const SamplingStrategy& strategy,
                   const StructureConstraint& constraints);

}  // namespace srkit
