#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"

namespace srkit {

struct MetricsVector {
  double mae = 0.0;
  double mse = 0.0;
  double r2 = 0.0;
  double t_p = 1.0;
  // set when the truth vector is constant, in which case r2 is reported as 0
  bool degenerate_truth = false;
};

// Two-sided unpaired Welch test p-value between two samples. Equal constant
// samples give 1.0; non-finite inputs give 0.0.
double welch_t_p(const std::vector<double>& a, const std::vector<double>& b);

MetricsVector compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth);

// Residual-norm training loss: w1*|r|_1 + w2*|r|_2 + w3*|r|_inf + psi*|g|,
// where |g| is the expression size. A custom formula over the named values
// {l1, l2, linf, mae, mse, n, g} can replace the weighted-norm part.
struct LossSpec {
  std::array<double, 3> weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double psi = 0.05;
  std::optional<ExprTree> custom;
  std::string custom_text;

  LossSpec() = default;
  // validates the weight simplex (non-negative, sums to 1)
  static LossSpec make(std::array<double, 3> w, double psi);
  static LossSpec with_custom(const std::string& formula, double psi);
  static const std::vector<std::string>& custom_names();
};

double loss_value(const LossSpec& spec, std::size_t g_size, const std::vector<double>& pred,
                  const std::vector<double>& truth);

// Same loss, reusing residuals already computed by the caller.
double loss_from_residual_norms(const LossSpec& spec, std::size_t g_size, double l1, double l2,
                                double linf, std::size_t n);

// Scalar quality score: 4-d hypervolume (reference at the origin) of the
// non-dominated subset after orienting every metric to [0,1] maximization:
// (1/(1+mae), 1/(1+mse), clamp(r2,0,1), clamp(t_p,0,1)).
double pareto_score(const std::vector<MetricsVector>& points);

}  // namespace srkit
