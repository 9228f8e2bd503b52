#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "metrics.hpp"

namespace srkit {

// Regression model over a fixed column subset. fit() copies what it needs;
// predict() takes a row of the active columns only, in the same order.
class Model {
 public:
  virtual ~Model() = default;
  virtual void fit(const Matrix& X, const std::vector<double>& y,
                   const std::vector<std::size_t>& rows, const std::vector<int>& cols,
                   std::uint64_t seed) = 0;
  virtual double predict(const std::vector<double>& active_row) const = 0;
  virtual std::string provenance() const = 0;
};

std::unique_ptr<Model> make_knn(int k);
std::unique_ptr<Model> make_forest(int trees, int max_depth);
std::unique_ptr<Model> make_ridge_poly2(double lambda);

// The fixed candidate family searched by search_model, in provenance order:
// knn k in {3,5,10}; forest trees in {50,100} x depth in {6,12};
// quadratic ridge lambda in {1e-3, 1e-1}.
std::vector<std::unique_ptr<Model>> default_model_family();

struct CvMetrics {
  std::vector<MetricsVector> folds;
  std::vector<double> fold_nmae;  // normalized MAE per fold, clamped to [0,1]
  MetricsVector mean() const;
  MetricsVector stdev() const;
  double nmae_mean() const;
  double nmae_std() const;
};

struct SurrogateResult {
  std::unique_ptr<Model> model;  // refit on all given rows
  std::string provenance;
  CvMetrics cv;
  double score = 0;  // pareto score over fold metric vectors
  bool budget_clipped = false;
  std::vector<std::string> evaluated;  // provenance of each family member tried
};

// K-fold search over the model family; winner by pareto score, ties broken by
// lexicographic provenance. budget < family size evaluates a seeded subset and
// sets budget_clipped.
SurrogateResult search_model(const Matrix& X, const std::vector<double>& y,
                             const std::vector<std::size_t>& rows, const std::vector<int>& cols,
                             int folds, int budget, std::uint64_t seed);

// Data-quality gate on fold-mean and fold-std of normalized MAE.
bool gate_check(const CvMetrics& cv, double zeta_mean, double zeta_std);

// Synthetic rows are only kept when at least kappa original rows lie within
// `radius` of the candidate (distances in the original rows' min-max
// normalized space when normalized_radius, raw units otherwise).
struct SyntheticSpec {
  double tau_fraction = 0.10;            // synthetic rows as a share of the original pool
  std::optional<std::size_t> tau_abs;    // overrides the fraction when set
  double radius = 0.025;
  bool normalized_radius = true;
  std::size_t kappa = 3;
  std::size_t max_rejections = 0;        // 0 = auto (200*tau + 1000)
};

struct AugmentResult {
  std::size_t requested = 0;
  std::size_t accepted = 0;
  bool shortfall = false;
};

// Appends accepted rows to d (flagged synthetic, added to train_rows) with
// targets from the model. Original rows are never modified.
AugmentResult augment(Dataset& d, const Model& model, const SyntheticSpec& spec,
                      std::uint64_t seed);

// Permutation importance: mean MAE increase over 10 column shuffles, one entry
// per active column.
std::vector<double> feature_importance(const Model& model, const Matrix& X,
                                       const std::vector<double>& y,
                                       const std::vector<std::size_t>& rows,
                                       const std::vector<int>& cols, std::uint64_t seed);

// Deterministic fold assignment: returns fold index per position in rows.
std::vector<int> kfold_assignment(std::size_t n, int folds, std::uint64_t seed);

}  // namespace srkit
