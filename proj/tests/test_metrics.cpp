#include <cmath>
#include <vector>

#include "doctest.h"
#include "metrics.hpp"
#include "rng.hpp"

using namespace srkit;

TEST_SUITE("metrics") {

TEST_CASE("weighted norm loss on a pinned residual vector") {
  // residuals (3, -4): l1 = 7, l2 = 5, linf = 4
  std::vector<double> pred{3.0, -4.0};
  std::vector<double> truth{0.0, 0.0};
  LossSpec equal = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.0);
  CHECK(loss_value(equal, 5, pred, truth) == doctest::Approx(16.0 / 3).epsilon(1e-12));

  LossSpec l1_only = LossSpec::make({1, 0, 0}, 0.0);
  CHECK(loss_value(l1_only, 5, pred, truth) == doctest::Approx(7.0).epsilon(1e-12));
  LossSpec l2_only = LossSpec::make({0, 1, 0}, 0.0);
  CHECK(loss_value(l2_only, 5, pred, truth) == doctest::Approx(5.0).epsilon(1e-12));
  LossSpec linf_only = LossSpec::make({0, 0, 1}, 0.0);
  CHECK(loss_value(linf_only, 5, pred, truth) == doctest::Approx(4.0).epsilon(1e-12));

  // complexity term psi*|g|
  LossSpec with_psi = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.05);
  CHECK(loss_value(with_psi, 9, pred, truth) == doctest::Approx(16.0 / 3 + 0.45).epsilon(1e-12));
}

TEST_CASE("custom loss formula replaces the weighted-norm part") {
  LossSpec custom = LossSpec::with_custom("0.5*l1 + 0.5*l2/linf", 0.0);
  std::vector<double> pred{3.0, -4.0};
  std::vector<double> truth{0.0, 0.0};
  // 0.5*7 + 0.5*5/4 = 4.125
  CHECK(loss_value(custom, 5, pred, truth) == doctest::Approx(4.125).epsilon(1e-12));

  LossSpec custom_psi = LossSpec::with_custom("0.5*l1 + 0.5*l2/linf", 0.1);
  CHECK(loss_value(custom_psi, 5, pred, truth) == doctest::Approx(4.125 + 0.5).epsilon(1e-12));

  CHECK_THROWS_AS(LossSpec::with_custom("0.5*bogus", 0.0), std::invalid_argument);
}

TEST_CASE("weight simplex is enforced at construction") {
  CHECK_THROWS_AS(LossSpec::make({0.5, 0.5, 0.5}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(LossSpec::make({1.2, -0.2, 0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, -0.1), std::invalid_argument);
  CHECK_NOTHROW(LossSpec::make({0.2, 0.3, 0.5}, 0.0));
}

TEST_CASE("welch t-test wiring against a hand-checked value") {
  // a = 1..5, b = 2..6: t = -1, df = 8, two-sided p = 0.34659
  std::vector<double> a{1, 2, 3, 4, 5};
  std::vector<double> b{2, 3, 4, 5, 6};
  CHECK(welch_t_p(a, b) == doctest::Approx(0.34659).epsilon(1e-3));
  CHECK(welch_t_p(a, b) == welch_t_p(b, a));

  // identical samples: p = 1
  CHECK(welch_t_p(a, a) == 1.0);
  std::vector<double> c(50, 3.0);
  CHECK(welch_t_p(c, c) == 1.0);

  // strongly shifted samples: p ~ 0
  Rng g = make_rng(3);
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) {
    double v = normal01(g);
    x.push_back(v);
    y.push_back(v + 10.0);
  }
  CHECK(welch_t_p(x, y) < 1e-6);
}

TEST_CASE("metric vector basics") {
  std::vector<double> truth{1, 2, 3, 4, 5, 6};
  auto perfect = compute_metrics(truth, truth);
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.r2 == 1.0);
  CHECK(perfect.t_p == 1.0);
  CHECK(!perfect.degenerate_truth);

  std::vector<double> pred{1.5, 2.5, 2.5, 4.5, 4.5, 6.5};
  auto m = compute_metrics(pred, truth);
  CHECK(m.mae == doctest::Approx(0.5));
  CHECK(m.mse == doctest::Approx(0.25));
  CHECK(m.r2 == doctest::Approx(1.0 - 1.5 / 17.5));

  // constant truth: r2 pinned to 0 with the degenerate flag set
  std::vector<double> const_truth(6, 2.0);
  auto d = compute_metrics(pred, const_truth);
  CHECK(d.degenerate_truth);
  CHECK(d.r2 == 0.0);

  // non-finite predictions rank as worst, deterministically
  std::vector<double> bad{1, 2, std::numeric_limits<double>::infinity(), 4, 5, 6};
  auto w = compute_metrics(bad, truth);
  CHECK(std::isinf(w.mae));
  CHECK(w.t_p == 0.0);
}

TEST_CASE("pareto score: hypervolume of the non-dominated set") {
  // a single all-good vector scores near 1
  MetricsVector good;
  good.mae = 0.001;
  good.mse = 0.0001;
  good.r2 = 0.99;
  good.t_p = 0.99;
  double s = pareto_score({good});
  CHECK(s > 0.95);
  CHECK(s == doctest::Approx((1 / 1.001) * (1 / 1.0001) * 0.99 * 0.99).epsilon(1e-12));

  // adding a dominated point does not change the score
  MetricsVector worse = good;
  worse.mae = 0.5;
  worse.r2 = 0.2;
  worse.t_p = 0.5;
  CHECK(pareto_score({good, worse}) == doctest::Approx(s).epsilon(1e-12));

  // two-point union volume, verified by inclusion-exclusion:
  // orientations (a,b) = (1/(1+mae), r2) with mse=0 -> 1, t_p -> 1
  MetricsVector p1;
  p1.mae = 0.0;  // -> 1.0
  p1.mse = 0.0;
  p1.r2 = 0.4;
  p1.t_p = 1.0;
  MetricsVector p2;
  p2.mae = 1.0;  // -> 0.5
  p2.mse = 0.0;
  p2.r2 = 0.9;
  p2.t_p = 1.0;
  // union = 1.0*0.4 + 0.5*0.9 - 0.5*0.4 = 0.65
  CHECK(pareto_score({p1, p2}) == doctest::Approx(0.65).epsilon(1e-12));

  // empty input
  CHECK(pareto_score({}) == 0.0);

  // negative r2 clamps to zero; the point contributes nothing on that axis
  MetricsVector neg;
  neg.mae = 0.0;
  neg.mse = 0.0;
  neg.r2 = -3.0;
  neg.t_p = 1.0;
  CHECK(pareto_score({neg}) == 0.0);
}

}  // TEST_SUITE
