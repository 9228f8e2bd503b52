#include "surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace srkit {

namespace {

std::vector<double> gather_active(const Matrix& X, std::size_t row, const std::vector<int>& cols) {
  std::vector<double> out(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) out[j] = X.at(row, std::size_t(cols[j]));
  return out;
}

// ---------------------------------------------------------------------- knn

class KnnModel : public Model {
 public:
  explicit KnnModel(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("knn needs k >= 1");
  }

  void fit(const Matrix& X, const std::vector<double>& y, const std::vector<std::size_t>& rows,
           const std::vector<int>& cols, std::uint64_t) override {
    lo_.assign(cols.size(), 0);
    span_.assign(cols.size(), 1);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      auto st = column_stats(X, std::size_t(cols[j]), rows);
      lo_[j] = st.lo;
      span_[j] = st.hi > st.lo ? st.hi - st.lo : 1.0;
    }
    train_.assign(rows.size() * cols.size(), 0);
    y_.resize(rows.size());
    dims_ = cols.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j)
        train_[i * dims_ + j] = (X.at(rows[i], std::size_t(cols[j])) - lo_[j]) / span_[j];
      y_[i] = y[rows[i]];
    }
  }

  double predict(const std::vector<double>& row) const override {
    std::vector<std::pair<double, std::size_t>> dist(y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i) {
      double s = 0;
      for (std::size_t j = 0; j < dims_; ++j) {
        double q = (row[j] - lo_[j]) / span_[j];
        double d = train_[i * dims_ + j] - q;
        s += d * d;
      }
      dist[i] = {s, i};
    }
    std::size_t k = std::min<std::size_t>(std::size_t(k_), y_.size());
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += y_[dist[i].second];
    return sum / double(k);
  }

  std::string provenance() const override {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "knn_k%02d", k_);
    return buf;
  }

 private:
  int k_;
  std::size_t dims_ = 0;
  std::vector<double> train_, y_, lo_, span_;
};

// -------------------------------------------------------------------- forest

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1, right = -1;
  double value = 0;
};

class ForestModel : public Model {
 public:
  ForestModel(int trees, int max_depth) : trees_(trees), max_depth_(max_depth) {
    if (trees < 1 || max_depth < 1) throw std::invalid_argument("bad forest parameters");
  }

  void fit(const Matrix& X, const std::vector<double>& y, const std::vector<std::size_t>& rows,
           const std::vector<int>& cols, std::uint64_t seed) override {
    dims_ = cols.size();
    data_.assign(rows.size() * dims_, 0);
    targets_.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < dims_; ++j) data_[i * dims_ + j] = X.at(rows[i], std::size_t(cols[j]));
      targets_[i] = y[rows[i]];
    }
    forest_.assign(std::size_t(trees_), {});
    for (int t = 0; t < trees_; ++t) {
      Rng g = make_rng(seed, 300 + std::uint64_t(t));
      std::vector<std::size_t> sample(rows.size());
      for (auto& s : sample) s = uniform_index(g, rows.size());
      build(forest_[std::size_t(t)], sample, 0, g);
    }
  }

  double predict(const std::vector<double>& row) const override {
    double sum = 0;
    for (const auto& tree : forest_) {
      int node = 0;
      while (tree[std::size_t(node)].feature >= 0) {
        const TreeNode& n = tree[std::size_t(node)];
        node = row[std::size_t(n.feature)] <= n.threshold ? n.left : n.right;
      }
      sum += tree[std::size_t(node)].value;
    }
    return sum / double(forest_.size());
  }

  std::string provenance() const override {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rf_t%03d_d%02d", trees_, max_depth_);
    return buf;
  }

 private:
  int trees_, max_depth_;
  std::size_t dims_ = 0;
  std::vector<double> data_, targets_;
  std::vector<std::vector<TreeNode>> forest_;

  int build(std::vector<TreeNode>& tree, const std::vector<std::size_t>& idx, int depth, Rng& g) {
    TreeNode node;
    double mean = 0;
    for (std::size_t i : idx) mean += targets_[i];
    mean /= double(idx.size());
    node.value = mean;

    bool pure = true;
    for (std::size_t i : idx) pure = pure && targets_[i] == targets_[idx[0]];
    if (depth >= max_depth_ || idx.size() < 5 || pure) {
      tree.push_back(node);
      return int(tree.size()) - 1;
    }

    std::size_t mtry = std::max<std::size_t>(1, dims_ / 3);
    std::vector<std::size_t> feats(dims_);
    for (std::size_t j = 0; j < dims_; ++j) feats[j] = j;
    shuffle(g, feats);
    feats.resize(mtry);

    double best_sse = std::numeric_limits<double>::infinity();
    std::size_t best_feat = 0;
    double best_thresh = 0;
    std::vector<std::pair<double, double>> vals;  // (x, y)
    for (std::size_t f : feats) {
      vals.clear();
      for (std::size_t i : idx) vals.emplace_back(data_[i * dims_ + f], targets_[i]);
      std::sort(vals.begin(), vals.end());
      double total = 0, total2 = 0;
      for (auto& [x, yv] : vals) {
        total += yv;
        total2 += yv * yv;
      }
      double lsum = 0, lsum2 = 0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        lsum += vals[i].second;
        lsum2 += vals[i].second * vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        double nl = double(i + 1), nr = double(vals.size()) - nl;
        double sse = (lsum2 - lsum * lsum / nl) + ((total2 - lsum2) - (total - lsum) * (total - lsum) / nr);
        if (sse < best_sse) {
          best_sse = sse;
          best_feat = f;
          best_thresh = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (!std::isfinite(best_sse)) {
      tree.push_back(node);
      return int(tree.size()) - 1;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (data_[i * dims_ + best_feat] <= best_thresh ? left : right).push_back(i);
    if (left.empty() || right.empty()) {
      tree.push_back(node);
      return int(tree.size()) - 1;
    }
    node.feature = int(best_feat);
    node.threshold = best_thresh;
    int self = int(tree.size());
    tree.push_back(node);
    tree[std::size_t(self)].left = build(tree, left, depth + 1, g);
    tree[std::size_t(self)].right = build(tree, right, depth + 1, g);
    return self;
  }
};

// --------------------------------------------------------------- ridge poly2

class RidgePoly2Model : public Model {
 public:
  explicit RidgePoly2Model(double lambda) : lambda_(lambda) {
    if (lambda <= 0) throw std::invalid_argument("ridge needs lambda > 0");
  }

  void fit(const Matrix& X, const std::vector<double>& y, const std::vector<std::size_t>& rows,
           const std::vector<int>& cols, std::uint64_t) override {
    dims_ = cols.size();
    const std::size_t n = rows.size();
    const std::size_t p = expanded_size();
    std::vector<double> Z(n * p);
    std::vector<double> rowbuf(dims_), ebuf(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dims_; ++j) rowbuf[j] = X.at(rows[i], std::size_t(cols[j]));
      expand(rowbuf, ebuf);
      for (std::size_t j = 0; j < p; ++j) Z[i * p + j] = ebuf[j];
    }
    mean_.assign(p, 0);
    sd_.assign(p, 1);
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0, s2 = 0;
      for (std::size_t i = 0; i < n; ++i) s += Z[i * p + j];
      mean_[j] = s / double(n);
      for (std::size_t i = 0; i < n; ++i) {
        double d = Z[i * p + j] - mean_[j];
        s2 += d * d;
      }
      double sd = std::sqrt(s2 / double(n));
      sd_[j] = sd > 1e-12 ? sd : 0.0;  // 0 marks a dropped constant column
    }
    y_mean_ = 0;
    for (std::size_t i = 0; i < n; ++i) y_mean_ += y[rows[i]];
    y_mean_ /= double(n);

    // normal equations on the standardized expansion
    std::vector<double> A(p * p, 0), b(p, 0);
    std::vector<double> zrow(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j)
        zrow[j] = sd_[j] > 0 ? (Z[i * p + j] - mean_[j]) / sd_[j] : 0.0;
      double yc = y[rows[i]] - y_mean_;
      for (std::size_t j = 0; j < p; ++j) {
        if (zrow[j] == 0.0) continue;
        b[j] += zrow[j] * yc;
        const double zj = zrow[j];
        double* Aj = &A[j * p];
        for (std::size_t k = j; k < p; ++k) Aj[k] += zj * zrow[k];
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < j; ++k) A[j * p + k] = A[k * p + j];
      A[j * p + j] += lambda_ * double(n);
    }
    beta_ = cholesky_solve(A, b, p);
  }

  double predict(const std::vector<double>& row) const override {
    std::vector<double> e(expanded_size());
    expand(row, e);
    double out = y_mean_;
    for (std::size_t j = 0; j < e.size(); ++j)
      if (sd_[j] > 0) out += beta_[j] * (e[j] - mean_[j]) / sd_[j];
    return out;
  }

  std::string provenance() const override {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ridge_l%.3f", lambda_);
    return buf;
  }

 private:
  double lambda_;
  std::size_t dims_ = 0;
  double y_mean_ = 0;
  std::vector<double> mean_, sd_, beta_;

  std::size_t expanded_size() const { return dims_ + dims_ * (dims_ + 1) / 2; }

  void expand(const std::vector<double>& row, std::vector<double>& out) const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < dims_; ++i) out[k++] = row[i];
    for (std::size_t i = 0; i < dims_; ++i)
      for (std::size_t j = i; j < dims_; ++j) out[k++] = row[i] * row[j];
  }

  static std::vector<double> cholesky_solve(std::vector<double> A, std::vector<double> b,
                                            std::size_t p) {
    // LL^T with a jitter retry; A is SPD by construction up to rounding
    for (int attempt = 0; attempt < 3; ++attempt) {
      std::vector<double> L(A);
      bool ok = true;
      for (std::size_t j = 0; j < p && ok; ++j) {
        double d = L[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= L[j * p + k] * L[j * p + k];
        if (d <= 0) {
          ok = false;
          break;
        }
        double diag = std::sqrt(d);
        L[j * p + j] = diag;
        for (std::size_t i = j + 1; i < p; ++i) {
          double s = L[i * p + j];
          for (std::size_t k = 0; k < j; ++k) s -= L[i * p + k] * L[j * p + k];
          L[i * p + j] = s / diag;
        }
      }
      if (!ok) {
        double trace = 0;
        for (std::size_t j = 0; j < p; ++j) trace += A[j * p + j];
        double jitter = std::max(1e-10 * trace / double(p), 1e-10);
        for (std::size_t j = 0; j < p; ++j) A[j * p + j] += jitter;
        continue;
      }
      std::vector<double> x(b);
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < i; ++k) x[i] -= L[i * p + k] * x[k];
        x[i] /= L[i * p + i];
      }
      for (std::size_t ii = p; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < p; ++k) x[ii] -= L[k * p + ii] * x[k];
        x[ii] /= L[ii * p + ii];
      }
      return x;
    }
    throw std::runtime_error("cholesky failed after jitter retries");
  }
};

}  // namespace

std::unique_ptr<Model> make_knn(int k) { return std::make_unique<KnnModel>(k); }
std::unique_ptr<Model> make_forest(int trees, int depth) {
  return std::make_unique<ForestModel>(trees, depth);
}
std::unique_ptr<Model> make_ridge_poly2(double lambda) {
  return std::make_unique<RidgePoly2Model>(lambda);
}

std::vector<std::unique_ptr<Model>> default_model_family() {
  std::vector<std::unique_ptr<Model>> fam;
  for (int k : {3, 5, 10}) fam.push_back(make_knn(k));
  for (int t : {50, 100})
    for (int d : {6, 12}) fam.push_back(make_forest(t, d));
  for (double l : {1e-3, 1e-1}) fam.push_back(make_ridge_poly2(l));
  return fam;
}

MetricsVector CvMetrics::mean() const {
  MetricsVector m;
  if (folds.empty()) return m;
  for (const auto& f : folds) {
    m.mae += f.mae;
    m.mse += f.mse;
    m.r2 += f.r2;
    m.t_p += f.t_p;
  }
  double n = double(folds.size());
  m.mae /= n;
  m.mse /= n;
  m.r2 /= n;
  m.t_p /= n;
  return m;
}

MetricsVector CvMetrics::stdev() const {
  MetricsVector sd;
  if (folds.size() < 2) return sd;
  MetricsVector m = mean();
  for (const auto& f : folds) {
    sd.mae += (f.mae - m.mae) * (f.mae - m.mae);
    sd.mse += (f.mse - m.mse) * (f.mse - m.mse);
    sd.r2 += (f.r2 - m.r2) * (f.r2 - m.r2);
    sd.t_p += (f.t_p - m.t_p) * (f.t_p - m.t_p);
  }
  double n = double(folds.size());
  sd.mae = std::sqrt(sd.mae / n);
  sd.mse = std::sqrt(sd.mse / n);
  sd.r2 = std::sqrt(sd.r2 / n);
  sd.t_p = std::sqrt(sd.t_p / n);
  return sd;
}

double CvMetrics::nmae_mean() const { return vec_mean(fold_nmae); }
double CvMetrics::nmae_std() const { return vec_std(fold_nmae); }

std::vector<int> kfold_assignment(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("need at least 2 folds");
  if (n < std::size_t(folds)) throw std::invalid_argument("fewer rows than folds");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng g = make_rng(seed, 55);
  shuffle(g, order);
  std::vector<int> fold(n, 0);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = int(i % std::size_t(folds));
  return fold;
}

namespace {

CvMetrics cross_validate(Model& model, const Matrix& X, const std::vector<double>& y,
                         const std::vector<std::size_t>& rows, const std::vector<int>& cols,
                         const std::vector<int>& fold_of, int folds, std::uint64_t seed) {
  CvMetrics cv;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < rows.size(); ++i)
      (fold_of[i] == f ? te : tr).push_back(rows[i]);
    model.fit(X, y, tr, cols, mix_seed(seed, std::uint64_t(f)));
    std::vector<double> pred(te.size()), truth(te.size());
    for (std::size_t i = 0; i < te.size(); ++i) {
      pred[i] = model.predict(gather_active(X, te[i], cols));
      truth[i] = y[te[i]];
    }
    cv.folds.push_back(compute_metrics(pred, truth));
    double dev = 0, tmean = vec_mean(truth);
    for (double t : truth) dev += std::fabs(t - tmean);
    dev /= double(truth.size());
    double nmae;
    if (dev > 0)
      nmae = std::clamp(cv.folds.back().mae / dev, 0.0, 1.0);
    else
      nmae = cv.folds.back().mae == 0 ? 0.0 : 1.0;
    cv.fold_nmae.push_back(nmae);
  }
  return cv;
}

}  // namespace

SurrogateResult search_model(const Matrix& X, const std::vector<double>& y,
                             const std::vector<std::size_t>& rows, const std::vector<int>& cols,
                             int folds, int budget, std::uint64_t seed) {
  auto family = default_model_family();
  std::vector<std::size_t> members(family.size());
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;

  SurrogateResult res;
  if (budget > 0 && std::size_t(budget) < family.size()) {
    Rng g = make_rng(seed, 12);
    shuffle(g, members);
    members.resize(std::size_t(budget));
    std::sort(members.begin(), members.end());
    res.budget_clipped = true;
  }

  auto fold_of = kfold_assignment(rows.size(), folds, seed);
  int best = -1;
  for (std::size_t mi : members) {
    Model& m = *family[mi];
    CvMetrics cv = cross_validate(m, X, y, rows, cols, fold_of, folds, mix_seed(seed, 1000 + mi));
    double score = pareto_score(cv.folds);
    res.evaluated.push_back(m.provenance());
    bool better = best < 0 || score > res.score ||
                  (score == res.score && m.provenance() < res.provenance);
    if (better) {
      best = int(mi);
      res.score = score;
      res.cv = cv;
      res.provenance = m.provenance();
    }
  }
  if (best < 0) throw std::runtime_error("model search evaluated nothing");
  res.model = std::move(family[std::size_t(best)]);
  res.model->fit(X, y, rows, cols, mix_seed(seed, 500 + std::uint64_t(best)));
  return res;
}

bool gate_check(const CvMetrics& cv, double zeta_mean, double zeta_std) {
  return cv.nmae_mean() <= zeta_mean && cv.nmae_std() <= zeta_std;
}

AugmentResult augment(Dataset& d, const Model& model, const SyntheticSpec& spec,
                      std::uint64_t seed) {
  if (spec.radius <= 0) throw std::invalid_argument("radius must be positive");
  if (spec.kappa < 1) throw std::invalid_argument("kappa must be >= 1");

  // the acceptance test and the bounding box use only original (non-synthetic)
  // training rows
  std::vector<std::size_t> pool;
  for (std::size_t r : d.train_rows)
    if (d.synthetic.empty() || !d.synthetic[r]) pool.push_back(r);
  if (pool.size() < 2) throw std::invalid_argument("not enough rows to augment");

  const std::size_t m = d.features();
  std::vector<double> lo(m), hi(m), span(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto st = column_stats(d.X, j, pool);
    lo[j] = st.lo;
    hi[j] = st.hi;
    span[j] = spec.normalized_radius ? (st.hi > st.lo ? st.hi - st.lo : 1.0) : 1.0;
  }
  // snapshot of the pool in (possibly normalized) coordinates
  std::vector<double> ref(pool.size() * m);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) ref[i * m + j] = d.X.at(pool[i], j) / span[j];

  AugmentResult out;
  out.requested = spec.tau_abs ? *spec.tau_abs
                               : std::size_t(std::lround(spec.tau_fraction * double(pool.size())));
  std::size_t max_rej = spec.max_rejections ? spec.max_rejections : 200 * out.requested + 1000;
  const double r2 = spec.radius * spec.radius;

  if (d.synthetic.empty()) d.synthetic.assign(d.rows(), 0);

  Rng g = make_rng(seed, 9000);
  std::vector<double> cand(m), cand_n(m);
  std::size_t rejections = 0;
  while (out.accepted < out.requested && rejections < max_rej) {
    for (std::size_t j = 0; j < m; ++j) {
      cand[j] = uniform(g, lo[j], hi[j]);
      cand_n[j] = cand[j] / span[j];
    }
    std::size_t close = 0;
    for (std::size_t i = 0; i < pool.size() && close < spec.kappa; ++i) {
      double s = 0;
      const double* p = &ref[i * m];
      for (std::size_t j = 0; j < m; ++j) {
        double dd = p[j] - cand_n[j];
        s += dd * dd;
      }
      if (s <= r2) ++close;
    }
    if (close < spec.kappa) {
      ++rejections;
      continue;
    }
    double target = model.predict(cand);
    d.X.append_row(cand);
    d.y.push_back(target);
    d.synthetic.push_back(1);
    d.train_rows.push_back(d.rows() - 1);
    ++out.accepted;
  }
  out.shortfall = out.accepted < out.requested;
  return out;
}

std::vector<double> feature_importance(const Model& model, const Matrix& X,
                                       const std::vector<double>& y,
                                       const std::vector<std::size_t>& rows,
                                       const std::vector<int>& cols, std::uint64_t seed) {
  const int kShuffles = 10;
  std::vector<std::vector<double>> active(rows.size());
  std::vector<double> base_pred(rows.size()), truth(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    active[i] = gather_active(X, rows[i], cols);
    base_pred[i] = model.predict(active[i]);
    truth[i] = y[rows[i]];
  }
  double base_mae = compute_metrics(base_pred, truth).mae;

  std::vector<double> importance(cols.size(), 0);
  std::vector<double> column(rows.size()), pred(rows.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    double acc = 0;
    for (int s = 0; s < kShuffles; ++s) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = active[i][j];
      Rng g = make_rng(seed, 7000 + j * 64 + std::size_t(s));
      shuffle(g, column);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> row = active[i];
        row[j] = column[i];
        pred[i] = model.predict(row);
      }
      acc += compute_metrics(pred, truth).mae;
    }
    importance[j] = acc / kShuffles - base_mae;
  }
  return importance;
}

}  // namespace srkit
