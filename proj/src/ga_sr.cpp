#include "ga_sr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "surrogate.hpp"

namespace srkit {

double ga_evaluate(const ExprTree& t, const Matrix& X, const std::vector<double>& y,
                   const std::vector<std::size_t>& rows, const LossSpec& loss, int k,
                   std::uint64_t seed) {
  if (rows.size() < 2 * std::size_t(k)) throw std::invalid_argument("need at least 2k rows");
  std::vector<double> pred = evaluate(t, X, rows);
  auto fold_of = kfold_assignment(rows.size(), k, seed);
  double acc = 0;
  std::vector<double> p, tr;
  for (int f = 0; f < k; ++f) {
    p.clear();
    tr.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (fold_of[i] != f) continue;
      p.push_back(pred[i]);
      tr.push_back(y[rows[i]]);
    }
    acc += loss_value(loss, t.size(), p, tr);
  }
  return acc / double(k);
}

int ga_mutation_count(double normalized_fitness) {
  return int(std::lround(3.0 * (1.0 - normalized_fitness)));
}

namespace {

// maximize-oriented normalized fitness in [0,1]; non-finite losses get 0
std::vector<double> normalized_fitness(const std::vector<double>& losses) {
  double best = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  for (double l : losses)
    if (std::isfinite(l)) {
      best = std::min(best, l);
      worst = std::max(worst, l);
    }
  std::vector<double> nf(losses.size(), 0.0);
  if (!std::isfinite(best)) return nf;  // nothing finite: degenerate, all zero
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses[i])) continue;
    nf[i] = worst > best ? (worst - losses[i]) / (worst - best) : 1.0;
  }
  return nf;
}

}  // namespace

std::vector<ExprTree> ga_step(const std::vector<ExprTree>& pop, const std::vector<double>& losses,
                              const GaSrConfig& cfg, const LeafSampler& leaves, Rng& g) {
  if (pop.empty() || pop.size() != losses.size())
    throw std::invalid_argument("population and losses sizes disagree");
  const std::size_t P = pop.size();
  std::vector<std::size_t> order(P);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });

  std::size_t royalty = std::min<std::size_t>(P, std::size_t(std::ceil(cfg.delta * double(P))));
  std::vector<ExprTree> next;
  next.reserve(P);
  for (std::size_t i = 0; i < royalty; ++i) next.push_back(pop[order[i]]);

  std::vector<double> nf = normalized_fitness(losses);
  while (next.size() < P) {
    std::size_t pick = weighted_index(g, nf);
    ExprTree child = pop[pick];
    int m = ga_mutation_count(nf[pick]);
    for (int j = 0; j < m; ++j) child = point_mutate(g, child, cfg.functions, leaves).tree;
    next.push_back(std::move(child));
  }

  for (std::size_t i = royalty; i + 1 < P; i += 2) {
    if (uniform01(g) >= cfg.crossover_rate) continue;
    auto [c1, c2] = subtree_crossover(g, next[i], next[i + 1]);
    if (c1.depth() <= cfg.max_depth) next[i] = std::move(c1);
    if (c2.depth() <= cfg.max_depth) next[i + 1] = std::move(c2);
  }
  return next;
}

namespace {

GaRunOutcome single_run(const Dataset& d, const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& eval_rows, const GaSrConfig& cfg,
                        const LossSpec& loss, const LeafSampler& leaves, std::uint64_t run_seed) {
  Rng g = make_rng(run_seed, 3);
  std::vector<ExprTree> pop;
  pop.reserve(std::size_t(cfg.population));
  for (int i = 0; i < cfg.population; ++i)
    pop.push_back(random_full_tree(g, cfg.init_depth, cfg.functions, leaves));

  GaSrConfig step_cfg = cfg;
  step_cfg.loss = loss;
  std::uint64_t fold_seed = mix_seed(run_seed, 8);

  ExprTree best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> losses(pop.size());
  for (int gen = 0;; ++gen) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      losses[i] = ga_evaluate(pop[i], d.X, d.y, rows, loss, cfg.k, fold_seed);
      if (losses[i] < best_loss) {
        best_loss = losses[i];
        best = pop[i];
      }
    }
    if (gen == cfg.generations) break;
    pop = ga_step(pop, losses, step_cfg, leaves, g);
  }

  GaRunOutcome out;
  out.tree = best;
  out.loss = best_loss;
  out.infix = to_infix(best, d.names);
  out.key_exact = canonical_key(best, false);
  out.key_structure = canonical_key(best, true);
  out.train_metrics = compute_metrics(evaluate(best, d.X, rows), [&] {
    std::vector<double> t(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) t[i] = d.y[rows[i]];
    return t;
  }());
  out.eval_metrics = compute_metrics(evaluate(best, d.X, eval_rows), [&] {
    std::vector<double> t(eval_rows.size());
    for (std::size_t i = 0; i < eval_rows.size(); ++i) t[i] = d.y[eval_rows[i]];
    return t;
  }());
  return out;
}

}  // namespace

GaSrResult run_ga_sr(const Dataset& d, const GaSrConfig& cfg) {
  if (cfg.population < 2) throw std::invalid_argument("population must be at least 2");
  if (cfg.runs < 1) throw std::invalid_argument("need at least one run");
  if (cfg.chi < 0 || cfg.chi > 1) throw std::invalid_argument("chi outside [0,1]");
  if (cfg.k < 2) throw std::invalid_argument("need at least 2 folds");

  std::vector<std::size_t> rows = d.train_rows;
  if (rows.empty()) {
    rows.resize(d.rows());
    std::iota(rows.begin(), rows.end(), std::size_t(0));
  }
  const std::vector<std::size_t>& eval_rows = d.test_rows.empty() ? rows : d.test_rows;

  LeafSampler leaves = LeafSampler::uniform(d.features());
  if (!cfg.leaf_weights.empty()) {
    if (cfg.leaf_weights.size() != d.features() + 1)
      throw std::invalid_argument("leaf_weights must have one entry per feature plus one");
    leaves.weights = cfg.leaf_weights;
  }

  std::vector<double> psis =
      cfg.psi_grid.empty() ? std::vector<double>{cfg.loss.psi} : cfg.psi_grid;

  GaSrResult chosen;
  double chosen_score = -std::numeric_limits<double>::infinity();
  for (std::size_t pi = 0; pi < psis.size(); ++pi) {
    LossSpec loss = cfg.loss;
    loss.psi = psis[pi];
    GaSrResult res;
    res.psi = psis[pi];
    double r2_sum = 0;
    for (int r = 0; r < cfg.runs; ++r) {
      std::uint64_t run_seed = mix_seed(cfg.seed, 0xA000 + pi * 1024 + std::size_t(r));
      res.runs.push_back(single_run(d, rows, eval_rows, cfg, loss, leaves, run_seed));
      r2_sum += res.runs.back().eval_metrics.r2;
    }
    double score = r2_sum / double(cfg.runs);
    if (score > chosen_score) {
      chosen_score = score;
      chosen = std::move(res);
    }
  }

  // stability verdict over the chosen runs
  std::map<std::string, int> counts;
  for (const auto& run : chosen.runs) counts[run.key_exact]++;
  for (const auto& [key, count] : counts) {
    if (count > chosen.winning_count) {
      chosen.winning_count = count;
      chosen.winning_key = key;
    }
  }
  bool quorum = double(chosen.winning_count) >= cfg.chi * double(chosen.runs.size());

  std::vector<double> r2s;
  for (const auto& run : chosen.runs) r2s.push_back(run.eval_metrics.r2);
  chosen.metric_std = vec_std(r2s);

  // representative: lowest loss within the winning key when quorum holds
  std::size_t best = 0;
  bool found = false;
  for (std::size_t i = 0; i < chosen.runs.size(); ++i) {
    bool eligible = !quorum || chosen.runs[i].key_exact == chosen.winning_key;
    if (eligible && (!found || chosen.runs[i].loss < chosen.runs[best].loss)) {
      best = i;
      found = true;
    }
  }
  chosen.best_index = best;
  chosen.best_tp = chosen.runs[best].eval_metrics.t_p;
  chosen.stable = quorum && chosen.metric_std <= cfg.metric_std_threshold &&
                  chosen.best_tp >= cfg.tp_threshold;
  return chosen;
}

}  // namespace srkit
