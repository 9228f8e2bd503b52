#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "expr.hpp"
#include "metrics.hpp"

namespace srkit {

struct GaSrConfig {
  int population = 500;
  int generations = 50;
  int init_depth = 3;        // full initialization: every leaf at this depth
  double delta = 0.05;       // royalty fraction copied unchanged
  double crossover_rate = 0.7;
  int max_depth = 10;        // crossover children deeper than this are discarded
  std::vector<double> psi_grid;  // two or more entries switch on the parsimony grid search
  LossSpec loss;
  std::vector<double> leaf_weights;  // n_features+1 (trailing = constant); empty = uniform
  FunctionSet functions = FunctionSet::standard();
  int runs = 20;
  double chi = 0.5;          // stability fraction
  int k = 5;                 // evaluation folds
  double metric_std_threshold = 0.05;  // across-run r2 spread allowed for a stable verdict
  double tp_threshold = 0.8;
  std::uint64_t seed = 0;
};

struct GaRunOutcome {
  ExprTree tree;
  double loss = 0.0;          // fold-mean training loss of the winning tree
  std::string infix;
  std::string key_exact;      // canonical key with constants
  std::string key_structure;  // canonical key with constants masked
  MetricsVector train_metrics;
  MetricsVector eval_metrics;  // test partition when present, train otherwise
};

struct GaSrResult {
  std::vector<GaRunOutcome> runs;
  double psi = 0.0;          // parsimony weight actually used
  bool stable = false;
  std::string winning_key;   // most frequent exact key
  int winning_count = 0;
  std::size_t best_index = 0;  // representative run (lowest loss, within the winning key if stable)
  double metric_std = 0.0;   // std of eval r2 across runs
  double best_tp = 0.0;      // t_p of the representative run
};

// Fold-mean of the composite loss over held-out partitions. The tree is fixed
// (nothing is fitted per fold), so this is the whole-data evaluation split
// into k views and averaged.
double ga_evaluate(const ExprTree& t, const Matrix& X, const std::vector<double>& y,
                   const std::vector<std::size_t>& rows, const LossSpec& loss, int k,
                   std::uint64_t seed);

// Worse chromosomes receive more point mutations: round(3 * (1 - nf)).
int ga_mutation_count(double normalized_fitness);

// One generation: rank by loss, copy the royalty unchanged, fill the rest by
// fitness-proportional selection + per-parent mutations, then pairwise subtree
// crossover over the non-royalty block at cfg.crossover_rate.
std::vector<ExprTree> ga_step(const std::vector<ExprTree>& pop, const std::vector<double>& losses,
                              const GaSrConfig& cfg, const LeafSampler& leaves, Rng& g);

// cfg.runs independent restarts (and an optional parsimony grid search);
// verdict: stable iff one exact canonical key covers >= chi of the runs, the
// across-run eval-r2 std stays under threshold, and the representative run's
// t_p clears tp_threshold.
GaSrResult run_ga_sr(const Dataset& d, const GaSrConfig& cfg);

}  // namespace srkit
