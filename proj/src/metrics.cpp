#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace srkit {

double welch_t_p(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) return 1.0;
  double n1 = double(a.size()), n2 = double(b.size());
  double m1 = 0, m2 = 0;
  for (double v : a) m1 += v;
  for (double v : b) m2 += v;
  m1 /= n1;
  m2 /= n2;
  if (!std::isfinite(m1) || !std::isfinite(m2)) return 0.0;
  double v1 = 0, v2 = 0;
  for (double v : a) v1 += (v - m1) * (v - m1);
  for (double v : b) v2 += (v - m2) * (v - m2);
  v1 /= n1 - 1;
  v2 /= n2 - 1;
  if (!std::isfinite(v1) || !std::isfinite(v2)) return 0.0;
  if (v1 + v2 == 0.0) return m1 == m2 ? 1.0 : 0.0;
  double se1 = v1 / n1, se2 = v2 / n2;
  double se = se1 + se2;
  double t = (m1 - m2) / std::sqrt(se);
  double df = se * se / (se1 * se1 / (n1 - 1) + se2 * se2 / (n2 - 1));
  if (!(df > 0) || !std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(dist, -std::fabs(t));
}

MetricsVector compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("compute_metrics: size mismatch");
  MetricsVector m;
  const std::size_t n = pred.size();
  bool finite = true;
  for (double v : pred) finite = finite && std::isfinite(v);
  if (!finite) {
    m.mae = m.mse = std::numeric_limits<double>::infinity();
    m.r2 = 0.0;
    m.t_p = 0.0;
    return m;
  }
  double abs_sum = 0, sq_sum = 0, ty_mean = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = pred[i] - truth[i];
    abs_sum += std::fabs(d);
    sq_sum += d * d;
    ty_mean += truth[i];
  }
  ty_mean /= double(n);
  m.mae = abs_sum / double(n);
  m.mse = sq_sum / double(n);
  double ss_tot = 0;
  for (double v : truth) ss_tot += (v - ty_mean) * (v - ty_mean);
  if (ss_tot == 0.0) {
    m.degenerate_truth = true;
    m.r2 = 0.0;
  } else {
    m.r2 = 1.0 - sq_sum / ss_tot;
  }
  m.t_p = welch_t_p(pred, truth);
  return m;
}

const std::vector<std::string>& LossSpec::custom_names() {
  static const std::vector<std::string> names{"l1", "l2", "linf", "mae", "mse", "n", "g"};
  return names;
}

LossSpec LossSpec::make(std::array<double, 3> w, double psi) {
  double sum = w[0] + w[1] + w[2];
  for (double x : w)
    if (x < 0) throw std::invalid_argument("loss weights must be non-negative");
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("loss weights must sum to 1");
  if (psi < 0) throw std::invalid_argument("psi must be non-negative");
  LossSpec s;
  s.weights = w;
  s.psi = psi;
  return s;
}

LossSpec LossSpec::with_custom(const std::string& formula, double psi) {
  if (psi < 0) throw std::invalid_argument("psi must be non-negative");
  LossSpec s;
  s.custom = parse_infix(formula, custom_names());
  s.custom_text = formula;
  s.psi = psi;
  return s;
}

double loss_from_residual_norms(const LossSpec& spec, std::size_t g_size, double l1, double l2,
                                double linf, std::size_t n) {
  double base;
  if (spec.custom) {
    double env[7] = {l1, l2, linf, l1 / double(n), l2 * l2 / double(n),
                     double(n), double(g_size)};
    base = evaluate_row(*spec.custom, env);
  } else {
    base = spec.weights[0] * l1 + spec.weights[1] * l2 + spec.weights[2] * linf;
  }
  return base + spec.psi * double(g_size);
}

double loss_value(const LossSpec& spec, std::size_t g_size, const std::vector<double>& pred,
                  const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("loss_value: size mismatch");
  double l1 = 0, sq = 0, linf = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = std::fabs(pred[i] - truth[i]);
    l1 += d;
    sq += d * d;
    linf = std::max(linf, d);
  }
  if (!std::isfinite(l1) || !std::isfinite(sq))
    return std::numeric_limits<double>::infinity();
  return loss_from_residual_norms(spec, g_size, l1, std::sqrt(sq), linf, pred.size());
}

namespace {

using Point4 = std::array<double, 4>;

bool dominates(const Point4& a, const Point4& b) {
  bool strict = false;
  for (int i = 0; i < 4; ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

// Union volume of the axis-aligned boxes [0, p], sliced along the last active
// dimension: the slab between consecutive heights is the lower-dimensional
// union of every box at least that tall.
double union_volume(std::vector<Point4> pts, int dims) {
  if (pts.empty()) return 0.0;
  if (dims == 1) {
    double best = 0;
    for (const auto& p : pts) best = std::max(best, p[0]);
    return best;
  }
  int d = dims - 1;
  std::sort(pts.begin(), pts.end(), [d](const Point4& a, const Point4& b) { return a[d] > b[d]; });
  double vol = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double upper = pts[i][d];
    double lower = i + 1 < pts.size() ? pts[i + 1][d] : 0.0;
    if (upper <= lower) continue;
    double base = union_volume(std::vector<Point4>(pts.begin(), pts.begin() + i + 1), dims - 1);
    vol += base * (upper - lower);
  }
  return vol;
}

}  // namespace

double pareto_score(const std::vector<MetricsVector>& points) {
  std::vector<Point4> oriented;
  oriented.reserve(points.size());
  for (const auto& m : points) {
    double mae = std::isfinite(m.mae) ? m.mae : std::numeric_limits<double>::max();
    double mse = std::isfinite(m.mse) ? m.mse : std::numeric_limits<double>::max();
    oriented.push_back({1.0 / (1.0 + mae), 1.0 / (1.0 + mse),
                        std::clamp(m.r2, 0.0, 1.0), std::clamp(m.t_p, 0.0, 1.0)});
  }
  std::vector<Point4> front;
  for (std::size_t i = 0; i < oriented.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < oriented.size() && !dominated; ++j)
      dominated = j != i && dominates(oriented[j], oriented[i]);
    if (!dominated) front.push_back(oriented[i]);
  }
  return union_volume(std::move(front), 4);
}

}  // namespace srkit
