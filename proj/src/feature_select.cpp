#include "feature_select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "surrogate.hpp"

namespace srkit {

double fs_combine(double omega_fs, double m_fitness, std::size_t n_selected,
                  std::size_t n_total) {
  if (omega_fs < 0 || omega_fs > 1) throw std::invalid_argument("omega_fs outside [0,1]");
  if (n_total == 0) throw std::invalid_argument("empty feature pool");
  return omega_fs * m_fitness + (1.0 - omega_fs) * double(n_selected) / double(n_total);
}

std::vector<int> fs_decode(const FsChromosome& c, const FeatureGroups& groups) {
  if (c.alleles.size() != groups.groups.size())
    throw std::invalid_argument("chromosome length does not match group count");
  std::vector<int> cols;
  for (std::size_t i = 0; i < c.alleles.size(); ++i) {
    int a = c.alleles[i];
    if (a == kFsAbsent) continue;
    const auto& members = groups.groups[i];
    if (a < 0 || std::size_t(a) >= members.size())
      throw std::invalid_argument("allele out of range for its group");
    cols.push_back(members[std::size_t(a)]);
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

FsChromosome fs_random(Rng& g, const FeatureGroups& groups, bool strict) {
  FsChromosome c;
  c.alleles.reserve(groups.groups.size());
  for (const auto& members : groups.groups) {
    if (strict)
      c.alleles.push_back(int(uniform_index(g, members.size())));
    else
      c.alleles.push_back(int(uniform_index(g, members.size() + 1)) - 1);
  }
  return c;
}

std::vector<FsChromosome> fs_select(const std::vector<FsChromosome>& pop,
                                    const std::vector<double>& fitness, double delta, Rng& g) {
  if (pop.empty() || pop.size() != fitness.size())
    throw std::invalid_argument("population and fitness sizes disagree");
  const std::size_t P = pop.size();
  std::vector<std::size_t> order(P);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });

  std::size_t royalty = std::min<std::size_t>(P, std::size_t(std::ceil(delta * double(P))));
  std::vector<FsChromosome> parents;
  parents.reserve(P);
  for (std::size_t i = 0; i < royalty; ++i) parents.push_back(pop[order[i]]);

  // invert so that lower fitness gets higher sampling weight
  double worst = fitness[order.back()];
  std::vector<double> w(P);
  for (std::size_t i = 0; i < P; ++i) w[i] = worst - fitness[i];
  while (parents.size() < P) parents.push_back(pop[weighted_index(g, w)]);
  return parents;
}

std::pair<FsChromosome, FsChromosome> fs_crossover(const FsChromosome& a, const FsChromosome& b,
                                                   Rng& g) {
  if (a.alleles.size() != b.alleles.size())
    throw std::invalid_argument("crossover needs equal-length chromosomes");
  const std::size_t l = a.alleles.size();
  std::size_t i = uniform_index(g, l);
  FsChromosome c1, c2;
  c1.alleles.reserve(l);
  c2.alleles.reserve(l);
  for (std::size_t j = 0; j < l; ++j) {
    c1.alleles.push_back(j < i ? a.alleles[j] : b.alleles[j]);
    c2.alleles.push_back(j < i ? b.alleles[j] : a.alleles[j]);
  }
  return {c1, c2};
}

FsChromosome fs_mutate(const FsChromosome& c, const FeatureGroups& groups,
                       std::size_t total_features, bool strict, Rng& g) {
  if (total_features == 0) throw std::invalid_argument("empty feature pool");
  FsChromosome out = c;
  for (std::size_t i = 0; i < out.alleles.size(); ++i) {
    const std::size_t size = groups.groups[i].size();
    double p = double(size) / double(total_features);
    if (uniform01(g) >= p) continue;
    // domain: [0, size) in strict mode, [-1, size) otherwise
    std::size_t domain = strict ? size : size + 1;
    if (domain < 2) continue;  // a strict singleton has no different member
    int base = strict ? 0 : -1;
    std::size_t cur = std::size_t(out.alleles[i] - base);
    std::size_t d = uniform_index(g, domain - 1);
    if (d >= cur) ++d;
    out.alleles[i] = base + int(d);
  }
  return out;
}

namespace {

// Memoized reduced-budget oracle: one forest under k-fold CV on the decoded
// columns. The CV seed hangs off the chromosome content so scores do not
// depend on evaluation order.
class FsOracle {
 public:
  FsOracle(const Dataset& d, const FsConfig& cfg) : d_(d), cfg_(cfg) {
    rows_ = d.train_rows.empty() ? std::vector<std::size_t>() : d.train_rows;
    if (rows_.empty()) {
      rows_.resize(d.rows());
      std::iota(rows_.begin(), rows_.end(), std::size_t(0));
    }
    fold_of_ = kfold_assignment(rows_.size(), cfg.folds, mix_seed(cfg.seed, 40));
  }

  double fitness(const FsChromosome& c) {
    auto it = memo_.find(c);
    if (it != memo_.end()) return it->second;
    double f = score(c);
    memo_.emplace(c, f);
    return f;
  }

  std::size_t evaluations() const { return memo_.size(); }

 private:
  const Dataset& d_;
  const FsConfig& cfg_;
  std::vector<std::size_t> rows_;
  std::vector<int> fold_of_;
  std::map<FsChromosome, double> memo_;

  double score(const FsChromosome& c) {
    std::vector<int> cols = fs_decode(c, d_.groups);
    if (cols.empty()) return 1.0;  // all-absent chromosome
    std::uint64_t cseed =
        mix_seed(cfg_.seed, fnv1a64(c.alleles.data(), c.alleles.size() * sizeof(int)));
    auto model = make_forest(cfg_.oracle_trees, cfg_.oracle_depth);
    std::vector<double> fold_nmae;
    for (int f = 0; f < cfg_.folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < rows_.size(); ++i)
        (fold_of_[i] == f ? te : tr).push_back(rows_[i]);
      model->fit(d_.X, d_.y, tr, cols, mix_seed(cseed, std::uint64_t(f)));
      std::vector<double> pred(te.size()), truth(te.size()), row(cols.size());
      for (std::size_t i = 0; i < te.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j)
          row[j] = d_.X.at(te[i], std::size_t(cols[j]));
        pred[i] = model->predict(row);
        truth[i] = d_.y[te[i]];
      }
      double mae = compute_metrics(pred, truth).mae;
      double tmean = vec_mean(truth), dev = 0;
      for (double t : truth) dev += std::fabs(t - tmean);
      dev /= double(truth.size());
      double nmae = dev > 0 ? std::clamp(mae / dev, 0.0, 1.0) : (mae == 0 ? 0.0 : 1.0);
      fold_nmae.push_back(nmae);
    }
    return fs_combine(cfg_.omega_fs, vec_mean(fold_nmae), cols.size(), d_.features());
  }
};

}  // namespace

FsResult run_feature_selection(const Dataset& d, const FsConfig& cfg) {
  d.groups.validate(d.features());
  if (cfg.population < 2) throw std::invalid_argument("population must be at least 2");
  if (cfg.generations < 0) throw std::invalid_argument("negative generation count");

  FsOracle oracle(d, cfg);
  FsResult res;

  // one-per-group over all singletons leaves a single possible chromosome
  if (cfg.strict && d.groups.all_singletons()) {
    res.best.alleles.assign(d.groups.groups.size(), 0);
    res.selected = fs_decode(res.best, d.groups);
    res.fitness = oracle.fitness(res.best);
    res.trace.push_back(res.fitness);
    res.oracle_evals = oracle.evaluations();
    return res;
  }

  Rng g = make_rng(cfg.seed, 21);
  std::vector<FsChromosome> pop;
  pop.reserve(std::size_t(cfg.population));
  for (int i = 0; i < cfg.population; ++i) pop.push_back(fs_random(g, d.groups, cfg.strict));

  double best_fit = std::numeric_limits<double>::infinity();
  FsChromosome best;
  std::vector<double> fitness(pop.size());
  for (int gen = 0; gen <= cfg.generations; ++gen) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      fitness[i] = oracle.fitness(pop[i]);
      if (fitness[i] < best_fit) {
        best_fit = fitness[i];
        best = pop[i];
      }
    }
    res.trace.push_back(best_fit);
    if (gen == cfg.generations) break;

    auto parents = fs_select(pop, fitness, cfg.delta, g);
    shuffle(g, parents);
    std::vector<FsChromosome> next;
    next.reserve(parents.size());
    for (std::size_t i = 0; i + 1 < parents.size(); i += 2) {
      auto [c1, c2] = fs_crossover(parents[i], parents[i + 1], g);
      next.push_back(std::move(c1));
      next.push_back(std::move(c2));
    }
    if (next.size() < parents.size()) next.push_back(parents.back());
    for (auto& c : next) c = fs_mutate(c, d.groups, d.features(), cfg.strict, g);
    pop = std::move(next);
  }

  res.best = best;
  res.selected = fs_decode(best, d.groups);
  res.fitness = best_fit;
  res.oracle_evals = oracle.evaluations();
  return res;
}

}  // namespace srkit
