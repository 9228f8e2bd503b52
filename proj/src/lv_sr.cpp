#include "lv_sr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace srkit {

namespace {

constexpr std::size_t kHistoryCap = 20000;
constexpr std::size_t kSampleRetries = 1000;
constexpr double kSizeFloor = 1e-4;
constexpr double kHugeLoss = 1e18;

// Rescale to a floored simplex: every entry keeps at least floor_each while the
// remaining mass follows the (clamped) input proportions.
void floor_normalize(std::vector<double>& w, double floor_each) {
  const std::size_t n = w.size();
  if (n == 0) return;
  double eps = std::min(floor_each, 0.5 / double(n));
  double tot = 0.0;
  for (double v : w) tot += std::max(v, 0.0);
  if (!(tot > 0.0)) {
    w.assign(n, 1.0 / double(n));
    return;
  }
  for (double& v : w) v = eps + (1.0 - double(n) * eps) * std::max(v, 0.0) / tot;
}

// Advance past one subtree of the shape without emitting anything, consuming
// the matching assignment slots (used when a unary operator drops its right
// argument but the raw enumeration still has to step through the full space).
void consume_subtree(const std::vector<std::uint8_t>& shape, std::size_t& pos, std::size_t* fi,
                     std::size_t* li) {
  std::size_t need = 1;
  while (need > 0) {
    if (shape[pos]) {
      ++need;
      if (fi) ++*fi;
    } else {
      --need;
      if (li) ++*li;
    }
    ++pos;
  }
}

Node make_leaf(std::size_t slot, std::size_t n_features) {
  return slot < n_features ? Node::variable(std::int32_t(slot)) : Node::constant(1.0);
}

// Realize a shape with random operator / leaf draws. Unary operators keep only
// their left argument; the unused shape positions are skipped outright.
void build_random(const std::vector<std::uint8_t>& shape, std::size_t& pos, Rng& g,
                  const FunctionSet& fs, const std::vector<double>& fn_w,
                  const std::vector<double>& leaf_w, std::size_t n_features,
                  std::vector<Node>& out) {
  if (shape[pos] == 0) {
    ++pos;
    out.push_back(make_leaf(weighted_index(g, leaf_w), n_features));
    return;
  }
  ++pos;
  Op op = fs.ops[weighted_index(g, fn_w)];
  out.push_back(Node::func(op));
  build_random(shape, pos, g, fs, fn_w, leaf_w, n_features, out);
  if (op_arity(op) == 2) {
    build_random(shape, pos, g, fs, fn_w, leaf_w, n_features, out);
  } else {
    consume_subtree(shape, pos, nullptr, nullptr);
  }
}

// Realize a shape from explicit odometer assignments (exhaustive mode).
void build_assigned(const std::vector<std::uint8_t>& shape, std::size_t& pos,
                    const FunctionSet& fs, const std::vector<std::size_t>& fsel, std::size_t& fi,
                    const std::vector<std::size_t>& lsel, std::size_t& li, std::size_t n_features,
                    std::vector<Node>& out) {
  if (shape[pos] == 0) {
    ++pos;
    out.push_back(make_leaf(lsel[li++], n_features));
    return;
  }
  ++pos;
  Op op = fs.ops[fsel[fi++]];
  out.push_back(Node::func(op));
  build_assigned(shape, pos, fs, fsel, fi, lsel, li, n_features, out);
  if (op_arity(op) == 2) {
    build_assigned(shape, pos, fs, fsel, fi, lsel, li, n_features, out);
  } else {
    consume_subtree(shape, pos, &fi, &li);
  }
}

struct OlsFit {
  double a = 0.0, b = 0.0, loss = 0.0;
};

// Closed-form slope + intercept of y ~ a*t + b over the given samples, then
// the composite loss with |g| = tree size + 2 (the fitted pair counts).
OlsFit ols_fit(const std::vector<double>& t, const std::vector<double>& ysub, std::size_t g_size,
               const LossSpec& spec) {
  const std::size_t n = t.size();
  double tm = 0.0, ym = 0.0;
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    finite = finite && std::isfinite(t[i]);
    if (finite) tm += t[i];
    ym += ysub[i];
  }
  tm /= double(n);
  ym /= double(n);

  OlsFit f;
  double stt = 0.0, sty = 0.0;
  if (finite) {
    for (std::size_t i = 0; i < n; ++i) {
      double dt = t[i] - tm;
      stt += dt * dt;
      sty += dt * (ysub[i] - ym);
    }
  }
  if (finite && stt > 1e-12 * double(n) * (1.0 + tm * tm)) {
    f.a = sty / stt;
    f.b = ym - f.a * tm;
  }
  if (!std::isfinite(f.a) || !std::isfinite(f.b)) {
    f.a = 0.0;
    f.b = ym;
  }
  if (f.a == 0.0) f.b = ym;  // constant model: intercept is just the mean

  double l1 = 0.0, sq = 0.0, linf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = f.a == 0.0 ? f.b : f.a * t[i] + f.b;
    double r = pred - ysub[i];
    double ar = std::abs(r);
    l1 += ar;
    sq += r * r;
    linf = std::max(linf, ar);
  }
  f.loss = loss_from_residual_norms(spec, g_size, l1, std::sqrt(sq), linf, n);
  return f;
}

}  // namespace

std::vector<FbtTopology> enumerate_topologies(int xi1, int xi2) {
  if (xi1 < 1 || xi2 < xi1) throw std::invalid_argument("topologies: need 1 <= xi1 <= xi2");
  // Full binary trees only exist at odd sizes; build them bottom up, root
  // first, left subtree sizes ascending.
  std::vector<std::vector<std::vector<std::uint8_t>>> by_size(std::size_t(xi2) + 1);
  by_size[1] = {{0}};
  for (int n = 3; n <= xi2; n += 2) {
    for (int left = 1; left <= n - 2; left += 2) {
      int right = n - 1 - left;
      for (const auto& ls : by_size[std::size_t(left)]) {
        for (const auto& rs : by_size[std::size_t(right)]) {
          std::vector<std::uint8_t> s;
          s.reserve(std::size_t(n));
          s.push_back(1);
          s.insert(s.end(), ls.begin(), ls.end());
          s.insert(s.end(), rs.begin(), rs.end());
          by_size[std::size_t(n)].push_back(std::move(s));
        }
      }
    }
  }
  std::vector<FbtTopology> out;
  for (int n = xi1 % 2 ? xi1 : xi1 + 1; n <= xi2; n += 2) {
    for (const auto& s : by_size[std::size_t(n)]) out.push_back(FbtTopology{s});
  }
  if (out.empty()) throw std::invalid_argument("topologies: empty size range");
  return out;
}

LvCandidate fit_and_score(ExprTree tree, const Matrix& X, const std::vector<double>& y,
                          const std::vector<std::size_t>& rows, const LossSpec& loss) {
  if (tree.empty()) throw std::invalid_argument("fit_and_score: empty tree");
  if (rows.empty()) throw std::invalid_argument("fit_and_score: no rows");
  std::vector<double> t = evaluate(tree, X, rows);
  std::vector<double> ysub;
  ysub.reserve(rows.size());
  for (std::size_t r : rows) ysub.push_back(y[r]);
  OlsFit f = ols_fit(t, ysub, tree.size() + 2, loss);
  LvCandidate c;
  c.key = canonical_key(tree);
  c.tree = std::move(tree);
  c.a = f.a;
  c.b = f.b;
  c.loss = f.loss;
  return c;
}

LvSampler::LvSampler(std::vector<FbtTopology> topologies, std::size_t n_features, FunctionSet fs,
                     SamplingStrategy strategy, StructureConstraint constraints)
    : tops_(std::move(topologies)),
      n_features_(n_features),
      fs_(std::move(fs)),
      strategy_(std::move(strategy)),
      constraints_(std::move(constraints)) {
  if (tops_.empty()) throw std::invalid_argument("sampler: no topologies");
  if (n_features_ == 0) throw std::invalid_argument("sampler: need at least one feature");
  if (fs_.ops.empty()) throw std::invalid_argument("sampler: empty function set");
  if (strategy_.knn < 1) throw std::invalid_argument("sampler: knn must be positive");
  if (strategy_.theta == 0) throw std::invalid_argument("sampler: theta must be positive");

  std::size_t max_leaves = 0;
  for (std::size_t i = 0; i < tops_.size(); ++i) {
    int sz = int(tops_[i].size());
    if (sizes_.empty() || sizes_.back() != sz) {
      sizes_.push_back(sz);
      tops_of_size_.emplace_back();
    }
    size_of_top_.push_back(sizes_.size() - 1);
    tops_of_size_.back().push_back(i);
    max_leaves = std::max(max_leaves, tops_[i].leaf_count());
  }

  auto& req = constraints_.required_features;
  std::sort(req.begin(), req.end());
  req.erase(std::unique(req.begin(), req.end()), req.end());
  for (int f : req) {
    if (f < 0 || std::size_t(f) >= n_features_)
      throw std::invalid_argument("sampler: required feature out of range");
  }
  if (req.size() > max_leaves)
    throw std::invalid_argument("sampler: more required features than leaves");

  if (constraints_.required_subtree) {
    const ExprTree& pat = *constraints_.required_subtree;
    if (pat.empty()) throw std::invalid_argument("sampler: empty required subtree");
    if (pat.size() > tops_.back().size())
      throw std::invalid_argument("sampler: required subtree larger than the size cap");
    for (const Node& nd : pat.nodes) {
      if (nd.kind == Node::Kind::Var && (nd.var < 0 || std::size_t(nd.var) >= n_features_))
        throw std::invalid_argument("sampler: required subtree uses an unknown feature");
    }
  }

  if (strategy_.feature_quota) {
    auto [qf, frac] = *strategy_.feature_quota;
    if (qf < 0 || std::size_t(qf) >= n_features_)
      throw std::invalid_argument("sampler: quota feature out of range");
    if (!(frac >= 0.0 && frac <= 1.0))
      throw std::invalid_argument("sampler: quota fraction outside [0,1]");
    if (std::find(req.begin(), req.end(), qf) != req.end())
      throw std::invalid_argument("sampler: quota feature already required");
    if (constraints_.required_subtree && constraints_.required_subtree->contains_var(qf))
      throw std::invalid_argument("sampler: quota feature appears in the required subtree");
  }

  if (strategy_.size_focus) {
    const auto& [fsizes, frac] = *strategy_.size_focus;
    if (!(frac >= 0.0 && frac <= 1.0))
      throw std::invalid_argument("sampler: size focus fraction outside [0,1]");
    bool any = false;
    for (int s : fsizes)
      any = any || std::find(sizes_.begin(), sizes_.end(), s) != sizes_.end();
    if (!any) throw std::invalid_argument("sampler: size focus misses every available size");
  }

  size_weights_.assign(sizes_.size(), 1.0 / double(sizes_.size()));
  fn_weights_.assign(fs_.ops.size(), 1.0 / double(fs_.ops.size()));
  leaf_weights_.assign(n_features_ + 1, 1.0 / double(n_features_ + 1));
}

std::size_t LvSampler::draw_topology(Rng& g, const std::vector<char>& allowed) {
  // topology weight = its size-class mass split evenly inside the class
  std::vector<double> w(tops_.size(), 0.0);
  for (std::size_t i = 0; i < tops_.size(); ++i) {
    if (!allowed[i]) continue;
    std::size_t cls = size_of_top_[i];
    w[i] = size_weights_[cls] / double(tops_of_size_[cls].size());
  }
  return weighted_index(g, w);
}

ExprTree LvSampler::try_sample(Rng& g, int quota_state, bool& ok) {
  ok = false;

  std::vector<char> allowed(tops_.size(), 1);
  if (strategy_.size_focus) {
    const auto& [fsizes, frac] = *strategy_.size_focus;
    bool focus = uniform01(g) < frac;
    bool any = false;
    for (std::size_t i = 0; i < tops_.size(); ++i) {
      bool in = std::find(fsizes.begin(), fsizes.end(), int(tops_[i].size())) != fsizes.end();
      allowed[i] = char(focus ? in : !in);
      any = any || allowed[i];
    }
    if (!any) allowed.assign(tops_.size(), 1);
  }

  const int qf = quota_state < 0 ? -1 : strategy_.feature_quota->first;
  const bool qinc = quota_state == 1;
  std::vector<double> lw = leaf_weights_;
  if (qf >= 0 && !qinc) lw[std::size_t(qf)] = 0.0;

  const FbtTopology& top = tops_[draw_topology(g, allowed)];
  ExprTree t;
  t.nodes.reserve(top.size());
  std::size_t pos = 0;
  build_random(top.shape, pos, g, fs_, fn_weights_, lw, n_features_, t.nodes);

  // plant the required subtree at a uniformly chosen matching span
  std::size_t pat_lo = t.nodes.size(), pat_hi = t.nodes.size();
  if (constraints_.required_subtree) {
    const auto& pat = constraints_.required_subtree->nodes;
    std::vector<std::size_t> spots;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      if (t.subtree_end(i) - i == pat.size()) spots.push_back(i);
    }
    if (spots.empty()) return t;
    std::size_t at = spots[uniform_index(g, spots.size())];
    std::copy(pat.begin(), pat.end(), t.nodes.begin() + std::ptrdiff_t(at));
    pat_lo = at;
    pat_hi = at + pat.size();
  }

  // plant whatever required features are still absent into free leaves
  std::vector<int> need = constraints_.required_features;
  if (qf >= 0 && qinc && std::find(need.begin(), need.end(), qf) == need.end())
    need.push_back(qf);
  std::vector<int> missing;
  for (int f : need)
    if (!t.contains_var(f)) missing.push_back(f);
  if (!missing.empty()) {
    std::vector<std::size_t> free_leaves;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      if (t.nodes[i].kind != Node::Kind::Func && (i < pat_lo || i >= pat_hi))
        free_leaves.push_back(i);
    }
    if (missing.size() > free_leaves.size()) return t;
    for (int f : missing) {
      std::size_t k = uniform_index(g, free_leaves.size());
      t.nodes[free_leaves[k]] = Node::variable(f);
      free_leaves[k] = free_leaves.back();
      free_leaves.pop_back();
    }
  }

  if (!satisfies(t, constraints_)) return t;
  if (qf >= 0 && t.contains_var(qf) != qinc) return t;
  ok = true;
  return t;
}

ExprTree LvSampler::sample(Rng& g) {
  // The quota side is decided once per emitted candidate and held fixed across
  // build retries; otherwise constraint rejections would skew the long-run
  // inclusion fraction away from the configured x.
  int quota_state = -1;
  if (strategy_.feature_quota)
    quota_state = uniform01(g) < strategy_.feature_quota->second ? 1 : 0;
  for (std::size_t attempt = 0; attempt < kSampleRetries; ++attempt) {
    bool ok = false;
    ExprTree t = try_sample(g, quota_state, ok);
    if (ok) return t;
  }
  throw std::runtime_error("sampler: constraints were never satisfied; check their feasibility");
}

void LvSampler::record(const ExprTree& t, double loss) {
  HistoryItem item;
  item.descriptor.assign(1 + fs_.ops.size() + n_features_ + 1, 0.0);
  item.descriptor[0] = double(t.size());
  for (const Node& nd : t.nodes) {
    if (nd.kind == Node::Kind::Func) {
      for (std::size_t oi = 0; oi < fs_.ops.size(); ++oi) {
        if (fs_.ops[oi] == nd.op) {
          item.descriptor[1 + oi] += 1.0;
          break;
        }
      }
    } else if (nd.kind == Node::Kind::Var) {
      item.descriptor[1 + fs_.ops.size() + std::size_t(nd.var)] += 1.0;
    } else {
      item.descriptor[1 + fs_.ops.size() + n_features_] += 1.0;
    }
  }
  item.loss = std::isfinite(loss) ? loss : kHugeLoss;
  history_.push_back(std::move(item));
  if (history_.size() > kHistoryCap) history_.pop_front();
}

void LvSampler::update() {
  if (history_.empty()) return;
  const std::size_t R = sizes_.size();
  const std::size_t H = history_.size();
  const std::size_t D = history_.front().descriptor.size();

  // class centroids; realized sizes (unary pruning shrinks trees) map to the
  // nearest recorded size class
  std::vector<std::vector<double>> centroid(R, std::vector<double>(D, 0.0));
  std::vector<std::size_t> count(R, 0);
  for (const HistoryItem& it : history_) {
    int sz = int(it.descriptor[0]);
    std::size_t best = 0;
    int bd = std::abs(sizes_[0] - sz);
    for (std::size_t r = 1; r < R; ++r) {
      int dr = std::abs(sizes_[r] - sz);
      if (dr < bd) {
        bd = dr;
        best = r;
      }
    }
    ++count[best];
    for (std::size_t d = 0; d < D; ++d) centroid[best][d] += it.descriptor[d];
  }

  // score each class by the mean loss of the history's K nearest neighbors to
  // its centroid: low losses near a region -> high score
  const std::size_t K = std::min(std::size_t(strategy_.knn), H);
  std::vector<double> score(R, -1.0);
  double ssum = 0.0;
  std::size_t sdef = 0;
  std::vector<std::pair<double, double>> dl(H);
  for (std::size_t r = 0; r < R; ++r) {
    if (count[r] == 0) continue;
    for (double& c : centroid[r]) c /= double(count[r]);
    std::size_t i = 0;
    for (const HistoryItem& it : history_) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < D; ++d) {
        double z = it.descriptor[d] - centroid[r][d];
        d2 += z * z;
      }
      dl[i++] = {d2, it.loss};
    }
    std::partial_sort(dl.begin(), dl.begin() + std::ptrdiff_t(K), dl.end());
    double ml = 0.0;
    for (std::size_t k = 0; k < K; ++k) ml += dl[k].second;
    ml /= double(K);
    score[r] = 1.0 / (1e-9 + ml);
    ssum += score[r];
    ++sdef;
  }
  double neutral = sdef ? ssum / double(sdef) : 1.0;
  for (double& s : score)
    if (s < 0.0) s = neutral;
  size_weights_ = score;
  floor_normalize(size_weights_, kSizeFloor);

  if (!strategy_.adaptive_alloc) return;

  // refresh function / leaf propensities from the lowest-loss slice
  std::vector<std::size_t> order(H);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return history_[a].loss < history_[b].loss;
  });
  std::size_t elite = std::min(H, std::max<std::size_t>(H / 10, 50));
  std::vector<double> fn_cnt(fs_.ops.size(), 0.0), leaf_cnt(n_features_ + 1, 0.0);
  for (std::size_t e = 0; e < elite; ++e) {
    const auto& desc = history_[order[e]].descriptor;
    for (std::size_t oi = 0; oi < fn_cnt.size(); ++oi) fn_cnt[oi] += desc[1 + oi];
    for (std::size_t li = 0; li < leaf_cnt.size(); ++li)
      leaf_cnt[li] += desc[1 + fn_cnt.size() + li];
  }
  fn_weights_ = fn_cnt;
  floor_normalize(fn_weights_, 0.02);
  leaf_weights_ = leaf_cnt;
  floor_normalize(leaf_weights_, 0.02);
}

bool LvSampler::satisfies(const ExprTree& t, const StructureConstraint& c) {
  for (int f : c.required_features)
    if (!t.contains_var(f)) return false;
  if (c.required_subtree) {
    const auto& pat = c.required_subtree->nodes;
    if (pat.empty() || pat.size() > t.nodes.size()) return false;
    bool found = false;
    for (std::size_t i = 0; !found && i + pat.size() <= t.nodes.size(); ++i) {
      if (t.subtree_end(i) - i != pat.size()) continue;
      found = std::equal(pat.begin(), pat.end(), t.nodes.begin() + std::ptrdiff_t(i));
    }
    if (!found) return false;
  }
  return true;
}

LvResult run_lv_sr(const Dataset& d, const LvConfig& cfg, const SamplingStrategy& strategy,
                   const StructureConstraint& constraints) {
  d.validate();
  if (cfg.functions.ops.empty()) throw std::invalid_argument("lv: empty function set");
  if (strategy.rho == 0) throw std::invalid_argument("lv: rho must be positive");

  std::vector<std::size_t> rows = d.train_rows;
  if (rows.empty()) {
    rows.resize(d.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  const std::vector<std::size_t>& eval_rows = d.test_rows.empty() ? rows : d.test_rows;

  auto tops = enumerate_topologies(cfg.xi1, cfg.xi2);

  // raw allocation count decides between outright enumeration and sampling
  const double F = double(cfg.functions.ops.size());
  const double L = double(d.features() + 1);
  double space = 0.0;
  for (const auto& top : tops) {
    space += std::pow(F, double(top.internals())) * std::pow(L, double(top.leaf_count()));
    if (space > 1e18) break;
  }
  const bool exhaustive = space <= double(std::min(cfg.exhaustive_cap, strategy.rho));

  LvResult res;
  Evaluator ev(d.X, rows);
  std::vector<double> ysub;
  ysub.reserve(rows.size());
  for (std::size_t r : rows) ysub.push_back(d.y[r]);
  std::vector<double> tvals;
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(std::min<std::size_t>(strategy.rho, 1 << 21));

  const auto t0 = std::chrono::steady_clock::now();
  auto wall_exceeded = [&] {
    if (cfg.wall_ms == 0) return false;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    return std::uint64_t(ms) >= cfg.wall_ms;
  };

  struct EvalOut {
    bool fresh = false;
    double loss = 0.0;
  };
  auto evaluate_candidate = [&](const ExprTree& tree) -> EvalOut {
    std::string key = canonical_key(tree);
    if (!seen.insert(fnv1a64(key.data(), key.size())).second) {
      ++res.duplicates;
      return {};
    }
    ev.run(tree, tvals);
    OlsFit f = ols_fit(tvals, ysub, tree.size() + 2, cfg.loss);
    ++res.evaluations;
    if (cfg.keep_log) res.log.push_back({key, tree.size(), f.loss, f.a, f.b});
    if (f.loss < res.best.loss || (f.loss == res.best.loss && key < res.best.key)) {
      res.best.tree = tree;
      res.best.a = f.a;
      res.best.b = f.b;
      res.best.loss = f.loss;
      res.best.key = std::move(key);
    }
    return {true, f.loss};
  };

  if (exhaustive) {
    bool stop = false;
    const std::size_t Fn = cfg.functions.ops.size();
    const std::size_t Ln = d.features() + 1;
    for (const auto& top : tops) {
      if (stop) break;
      const std::size_t ni = top.internals(), nl = top.leaf_count();
      std::vector<std::size_t> fsel(ni, 0), lsel(nl, 0);
      while (true) {
        ExprTree t;
        t.nodes.reserve(top.size());
        std::size_t pos = 0, fi = 0, li = 0;
        build_assigned(top.shape, pos, cfg.functions, fsel, fi, lsel, li, d.features(), t.nodes);
        if (LvSampler::satisfies(t, constraints)) {
          EvalOut e = evaluate_candidate(t);
          if (e.fresh && res.best.loss <= cfg.stop_loss) {
            res.stopped_early = true;
            stop = true;
            break;
          }
        }
        if (((res.evaluations + res.duplicates) & 1023) == 0 && wall_exceeded()) {
          res.stopped_early = true;
          stop = true;
          break;
        }
        // mixed-radix increment: functions first, then leaves
        std::size_t i = 0;
        for (; i < ni; ++i) {
          if (++fsel[i] < Fn) break;
          fsel[i] = 0;
        }
        if (i < ni) continue;
        for (i = 0; i < nl; ++i) {
          if (++lsel[i] < Ln) break;
          lsel[i] = 0;
        }
        if (i == nl) break;
      }
    }
    res.exhausted = !stop;
  } else {
    LvSampler sampler(tops, d.features(), cfg.functions, strategy, constraints);
    Rng g = make_rng(cfg.seed, 31);
    const std::size_t dup_guard = strategy.rho * 50 + 1000;
    std::size_t since_update = 0;
    while (res.evaluations < strategy.rho && res.duplicates < dup_guard) {
      if (((res.evaluations + res.duplicates) & 1023) == 0 && wall_exceeded()) {
        res.stopped_early = true;
        break;
      }
      ExprTree t = sampler.sample(g);
      EvalOut e = evaluate_candidate(t);
      if (!e.fresh) continue;
      sampler.record(t, e.loss);
      if (++since_update >= strategy.theta) {
        sampler.update();
        since_update = 0;
      }
      if (res.best.loss <= cfg.stop_loss) {
        res.stopped_early = true;
        break;
      }
    }
  }

  if (res.evaluations == 0)
    throw std::runtime_error("lv: no candidate satisfied the constraints");

  // assemble a*T(x)+b as one expression
  const LvCandidate& bc = res.best;
  auto assemble = [&]() {
    res.fitted.nodes.clear();
    if (!res.fit_applied) {
      res.fitted = bc.tree;
    } else if (bc.a == 0.0) {
      res.fitted.nodes.push_back(Node::constant(bc.b));
    } else {
      std::vector<Node> scaled;
      scaled.reserve(bc.tree.size() + 4);
      scaled.push_back(Node::func(Op::Mul));
      scaled.push_back(Node::constant(bc.a));
      scaled.insert(scaled.end(), bc.tree.nodes.begin(), bc.tree.nodes.end());
      if (bc.b != 0.0) {
        res.fitted.nodes.push_back(Node::func(Op::Add));
        res.fitted.nodes.insert(res.fitted.nodes.end(), scaled.begin(), scaled.end());
        res.fitted.nodes.push_back(Node::constant(bc.b));
      } else {
        res.fitted.nodes = std::move(scaled);
      }
    }
    res.infix = to_infix(res.fitted, d.names);
    res.key_exact = canonical_key(res.fitted);
    res.key_structure = canonical_key(res.fitted, true);
  };
  auto metrics_on = [&](const std::vector<std::size_t>& rr) {
    std::vector<double> p;
    if (res.fit_applied && bc.a == 0.0) {
      p.assign(rr.size(), bc.b);  // the raw tree may be non-finite; never touch it
    } else {
      p = evaluate(bc.tree, d.X, rr);
      if (res.fit_applied)
        for (double& v : p) v = bc.a * v + bc.b;
    }
    std::vector<double> truth;
    truth.reserve(rr.size());
    for (std::size_t r : rr) truth.push_back(d.y[r]);
    return compute_metrics(p, truth);
  };
  assemble();
  res.train_metrics = metrics_on(rows);
  res.eval_metrics = metrics_on(eval_rows);
  // a fit that generalizes worse than the floor is not trusted: report the
  // bare structure on its raw scale, where the miss is visible
  if (bc.a != 0.0 && res.eval_metrics.r2 < cfg.fit_r2_floor) {
    res.fit_applied = false;
    assemble();
    res.train_metrics = metrics_on(rows);
    res.eval_metrics = metrics_on(eval_rows);
  }
  return res;
}

}  // namespace srkit
