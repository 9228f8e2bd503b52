#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lv_sr.hpp"

using namespace srkit;

namespace {

Dataset uniform_dataset(std::size_t n, std::size_t m, std::uint64_t seed) {
  Dataset d;
  d.X = Matrix(n, m);
  Rng g = make_rng(seed, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) d.X.at(i, j) = uniform(g, 1.0, 10.0);
  d.y.assign(n, 0.0);
  for (std::size_t j = 0; j < m; ++j) d.names.push_back("x" + std::to_string(j + 1));
  d.groups = FeatureGroups::singletons(m);
  return d;
}

ExprTree leaf_tree(std::size_t slot, std::size_t n_features) {
  ExprTree t;
  t.nodes.push_back(slot < n_features ? Node::variable(std::int32_t(slot)) : Node::constant(1.0));
  return t;
}

// every (op, left leaf, right leaf) allocation at size 3
std::vector<ExprTree> all_size3(const FunctionSet& fs, std::size_t n_features) {
  std::vector<ExprTree> out;
  const std::size_t L = n_features + 1;
  for (Op op : fs.ops) {
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) {
        ExprTree t;
        t.nodes.push_back(Node::func(op));
        if (op_arity(op) == 2) {
          t.nodes.push_back(leaf_tree(a, n_features).nodes[0]);
          t.nodes.push_back(leaf_tree(b, n_features).nodes[0]);
        } else {
          t.nodes.push_back(leaf_tree(a, n_features).nodes[0]);
        }
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

LvCandidate brute_force_best(const std::vector<ExprTree>& trees, const Dataset& d,
                             const LossSpec& loss) {
  std::vector<std::size_t> rows(d.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  LvCandidate best;
  std::set<std::string> seen;
  for (const ExprTree& t : trees) {
    LvCandidate c = fit_and_score(t, d.X, d.y, rows, loss);
    if (!seen.insert(c.key).second) continue;
    if (c.loss < best.loss || (c.loss == best.loss && c.key < best.key)) best = std::move(c);
  }
  return best;
}

bool valid_fbt_prefix(const std::vector<std::uint8_t>& shape) {
  std::size_t need = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (need == 0) return false;  // ended before consuming everything
    need += shape[i] ? 1 : std::size_t(-1);
  }
  return need == 0;
}

}  // namespace

TEST_SUITE_BEGIN("lv_sr");

TEST_CASE("topology counts match the catalan recurrence") {
  // independent oracle: C_0..C_8 via the convolution recurrence
  std::vector<long long> cat(9, 0);
  cat[0] = 1;
  for (std::size_t k = 1; k < cat.size(); ++k)
    for (std::size_t i = 0; i < k; ++i) cat[k] += cat[i] * cat[k - 1 - i];

  auto tops = enumerate_topologies(1, 17);
  std::map<std::size_t, long long> per_size;
  for (const auto& t : tops) ++per_size[t.size()];
  for (std::size_t k = 0; k < cat.size(); ++k) {
    CAPTURE(k);
    CHECK(per_size[2 * k + 1] == cat[k]);
  }
  long long total = 0;
  for (long long c : cat) total += c;
  CHECK(static_cast<long long>(tops.size()) == total);
}

TEST_CASE("topology shapes are valid, distinct, and deterministically ordered") {
  auto tops = enumerate_topologies(3, 9);
  std::set<std::vector<std::uint8_t>> uniq;
  std::size_t prev = 0;
  for (const auto& t : tops) {
    CHECK(valid_fbt_prefix(t.shape));
    CHECK(t.size() % 2 == 1);
    CHECK(t.size() >= prev);
    prev = t.size();
    CHECK(t.internals() + t.leaf_count() == t.size());
    CHECK(uniq.insert(t.shape).second);
  }
  CHECK(tops.size() == 1 + 2 + 5 + 14);
  CHECK(tops.front().shape == std::vector<std::uint8_t>{1, 0, 0});

  auto again = enumerate_topologies(3, 9);
  REQUIRE(again.size() == tops.size());
  for (std::size_t i = 0; i < tops.size(); ++i) CHECK(again[i].shape == tops[i].shape);

  CHECK(enumerate_topologies(1, 1).size() == 1);
  CHECK(enumerate_topologies(3, 7).size() == 8);
  CHECK(enumerate_topologies(4, 7).size() == 7);  // even lower bound rounds up
  CHECK_THROWS_AS((void)enumerate_topologies(0, 5), std::invalid_argument);
  CHECK_THROWS_AS((void)enumerate_topologies(5, 3), std::invalid_argument);
}

TEST_CASE("ols slope and intercept are recovered exactly on clean targets") {
  Dataset d = uniform_dataset(60, 2, 77);
  std::vector<std::size_t> rows(d.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  ExprTree prod;
  prod.nodes = {Node::func(Op::Mul), Node::variable(0), Node::variable(1)};
  LossSpec loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.05);

  SUBCASE("pure scale") {
    for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = 13.08 * d.X.at(i, 0) * d.X.at(i, 1);
    LvCandidate c = fit_and_score(prod, d.X, d.y, rows, loss);
    CHECK(c.a == doctest::Approx(13.08).epsilon(1e-9));
    CHECK(c.b == doctest::Approx(0.0).scale(100.0).epsilon(1e-9));
    // residuals vanish, so the loss is the parsimony term with |g| = size + 2
    CHECK(c.loss == doctest::Approx(0.05 * (3 + 2)).epsilon(1e-6));
    CHECK(c.key == canonical_key(prod));
  }
  SUBCASE("identity plus offset") {
    for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = d.X.at(i, 0) * d.X.at(i, 1) - 4.0;
    LvCandidate c = fit_and_score(prod, d.X, d.y, rows, loss);
    CHECK(c.a == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c.b == doctest::Approx(-4.0).epsilon(1e-9));
  }
  SUBCASE("constant tree falls back to the target mean") {
    for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = d.X.at(i, 0);
    ExprTree unit;
    unit.nodes = {Node::constant(1.0)};
    LvCandidate c = fit_and_score(unit, d.X, d.y, rows, loss);
    CHECK(c.a == 0.0);
    double mean = 0.0;
    for (double v : d.y) mean += v;
    mean /= double(d.rows());
    CHECK(c.b == doctest::Approx(mean).epsilon(1e-12));
  }
  SUBCASE("zero parsimony weight makes a perfect fit free") {
    for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = 2.0 * d.X.at(i, 0) * d.X.at(i, 1);
    LossSpec free_loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.0);
    LvCandidate c = fit_and_score(prod, d.X, d.y, rows, free_loss);
    CHECK(c.loss == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  }
  SUBCASE("empty inputs are rejected") {
    CHECK_THROWS_AS((void)fit_and_score(ExprTree{}, d.X, d.y, rows, loss), std::invalid_argument);
    CHECK_THROWS_AS((void)fit_and_score(prod, d.X, d.y, {}, loss), std::invalid_argument);
  }
}

TEST_CASE("unconstrained sampling covers size-3 allocations uniformly") {
  auto tops = enumerate_topologies(3, 3);
  LvSampler s(tops, 2, FunctionSet::standard(), SamplingStrategy{}, StructureConstraint{});
  Rng g = make_rng(404, 2);

  auto leaf_code = [](const Node& n) {
    return n.kind == Node::Kind::Var ? std::size_t(n.var) : std::size_t(2);
  };
  const auto& ops = FunctionSet::standard().ops;
  std::vector<std::size_t> cells(ops.size() * 9, 0);
  const std::size_t draws = 36000;
  for (std::size_t i = 0; i < draws; ++i) {
    ExprTree t = s.sample(g);
    REQUIRE(t.size() == 3);
    std::size_t oi = std::size_t(std::find(ops.begin(), ops.end(), t.nodes[0].op) - ops.begin());
    ++cells[oi * 9 + leaf_code(t.nodes[1]) * 3 + leaf_code(t.nodes[2])];
  }
  double expected = double(draws) / double(cells.size());
  double chi2 = 0.0;
  for (std::size_t c : cells) {
    double dlt = double(c) - expected;
    chi2 += dlt * dlt / expected;
  }
  // df = 35; the 99.9th percentile is ~66.6
  CHECK(chi2 < 66.6);
}

TEST_CASE("feature quota hits its inclusion fraction exactly in expectation") {
  auto tops = enumerate_topologies(3, 5);
  SamplingStrategy st;
  st.feature_quota = {0, 0.8};
  LvSampler s(tops, 3, FunctionSet::standard(), st, StructureConstraint{});
  Rng g = make_rng(11, 3);
  std::size_t with = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) with += s.sample(g).contains_var(0) ? 1 : 0;
  double frac = double(with) / double(n);
  CHECK(frac > 0.78);
  CHECK(frac < 0.82);
}

TEST_CASE("required features and subtrees appear in every sample") {
  auto tops = enumerate_topologies(3, 7);
  StructureConstraint c;
  c.required_features = {3};
  ExprTree pat;
  pat.nodes = {Node::func(Op::Mul), Node::variable(0), Node::variable(1)};
  c.required_subtree = pat;
  SamplingStrategy st;
  st.feature_quota = {2, 0.5};
  LvSampler s(tops, 4, FunctionSet::standard(), st, c);
  Rng g = make_rng(12, 4);
  std::size_t quota_hits = 0;
  for (std::size_t i = 0; i < 800; ++i) {
    ExprTree t = s.sample(g);
    CHECK(LvSampler::satisfies(t, c));
    CHECK(t.contains_var(3));
    // three pattern nodes plus the required leaf cannot fit in a size-3 tree
    CHECK(t.size() >= 5);
    quota_hits += t.contains_var(2) ? 1 : 0;
  }
  double frac = double(quota_hits) / 800.0;
  CHECK(frac > 0.42);
  CHECK(frac < 0.58);

  SUBCASE("satisfies rejects trees missing either part") {
    ExprTree bad;
    bad.nodes = {Node::func(Op::Mul), Node::variable(0), Node::variable(3)};
    CHECK_FALSE(LvSampler::satisfies(bad, c));  // no mul(x0,x1) span
    ExprTree bad2;
    bad2.nodes = {Node::func(Op::Mul), Node::variable(0), Node::variable(1)};
    CHECK_FALSE(LvSampler::satisfies(bad2, c));  // missing x3
    ExprTree good;
    good.nodes = {Node::func(Op::Add), Node::func(Op::Mul), Node::variable(0),
                  Node::variable(1), Node::variable(3)};
    CHECK(LvSampler::satisfies(good, c));
  }
}

TEST_CASE("infeasible constraint configurations are rejected or time out") {
  auto tops3 = enumerate_topologies(3, 3);
  StructureConstraint too_many;
  too_many.required_features = {0, 1, 2};  // size-3 trees carry two leaves
  CHECK_THROWS_AS(LvSampler(tops3, 4, FunctionSet::standard(), SamplingStrategy{}, too_many),
                  std::invalid_argument);

  StructureConstraint bad_range;
  bad_range.required_features = {7};
  CHECK_THROWS_AS(LvSampler(tops3, 4, FunctionSet::standard(), SamplingStrategy{}, bad_range),
                  std::invalid_argument);

  SamplingStrategy quota_conflict;
  quota_conflict.feature_quota = {1, 0.5};
  StructureConstraint req1;
  req1.required_features = {1};
  CHECK_THROWS_AS(LvSampler(tops3, 4, FunctionSet::standard(), quota_conflict, req1),
                  std::invalid_argument);

  // pattern fills the whole tree, leaving nowhere for the required feature
  StructureConstraint stuck;
  ExprTree pat;
  pat.nodes = {Node::func(Op::Mul), Node::variable(0), Node::variable(1)};
  stuck.required_subtree = pat;
  stuck.required_features = {2};
  LvSampler s(tops3, 4, FunctionSet::standard(), SamplingStrategy{}, stuck);
  Rng g = make_rng(5, 5);
  CHECK_THROWS_AS((void)s.sample(g), std::runtime_error);
}

TEST_CASE("equal losses leave the size table uniform") {
  auto tops = enumerate_topologies(3, 5);
  LvSampler s(tops, 2, FunctionSet::standard(), SamplingStrategy{}, StructureConstraint{});
  Rng g = make_rng(21, 6);
  for (std::size_t i = 0; i < 200; ++i) s.record(s.sample(g), 2.5);
  s.update();
  REQUIRE(s.size_weights().size() == 2);
  CHECK(s.size_weights()[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s.size_weights()[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("a dominant size class gains mass and the floor protects the rest") {
  auto tops = enumerate_topologies(3, 5);
  SamplingStrategy st;
  StructureConstraint none;
  LvSampler s(tops, 2, FunctionSet::standard(), st, none);
  Rng g = make_rng(22, 7);
  std::size_t small = 0, large = 0;
  while (small < 100 || large < 100) {
    ExprTree t = s.sample(g);
    if (t.size() == 3 && small < 100) {
      s.record(t, 1e-9);
      ++small;
    } else if (t.size() == 5 && large < 100) {
      s.record(t, 1e9);
      ++large;
    }
  }
  s.update();
  const auto& w = s.size_weights();
  CHECK(w[0] > 0.9);
  CHECK(w[1] >= 0.99e-4);  // floored, never starved
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("adaptive allocation learns elite function and leaf propensities") {
  auto tops = enumerate_topologies(3, 5);
  LvSampler s(tops, 2, FunctionSet::standard(), SamplingStrategy{}, StructureConstraint{});
  ExprTree elite;
  elite.nodes = {Node::func(Op::Mul), Node::variable(0), Node::variable(0)};
  ExprTree junk;
  junk.nodes = {Node::func(Op::Add), Node::constant(1.0), Node::constant(1.0)};
  for (std::size_t i = 0; i < 50; ++i) s.record(elite, 0.01);
  for (std::size_t i = 0; i < 450; ++i) s.record(junk, 100.0);
  s.update();

  const auto& ops = FunctionSet::standard().ops;
  std::size_t mul_i = std::size_t(std::find(ops.begin(), ops.end(), Op::Mul) - ops.begin());
  const auto& fw = s.function_weights();
  const auto& lw = s.leaf_weights();
  CHECK(fw[mul_i] > 0.9);
  CHECK(lw[0] > 0.9);
  double fsum = 0.0, lsum = 0.0;
  for (double v : fw) {
    CHECK(v >= 0.019);
    fsum += v;
  }
  for (double v : lw) {
    CHECK(v >= 0.019);
    lsum += v;
  }
  CHECK(fsum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lsum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exhaustive search equals the brute-force minimum at size 3") {
  Dataset d = uniform_dataset(40, 2, 91);
  for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = d.X.at(i, 0) * d.X.at(i, 1) + 0.5;
  LvConfig cfg;
  cfg.xi1 = 3;
  cfg.xi2 = 3;
  cfg.loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.05);
  cfg.stop_loss = -1.0;  // force a full sweep
  LvResult res = run_lv_sr(d, cfg, SamplingStrategy{}, StructureConstraint{});

  LvCandidate oracle = brute_force_best(all_size3(cfg.functions, 2), d, cfg.loss);
  CHECK(res.exhausted);
  CHECK_FALSE(res.stopped_early);
  CHECK(res.evaluations + res.duplicates == 36);
  CHECK(res.best.loss == oracle.loss);
  CHECK(res.best.key == oracle.key);
  CHECK(res.best.a == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.best.b == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res.train_metrics.r2 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exhaustive search matches brute force on many random targets") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    CAPTURE(seed);
    Dataset d = uniform_dataset(20, 2, seed);
    Rng g = make_rng(seed, 9);
    double c0 = uniform(g, -3.0, 3.0), c1 = uniform(g, -3.0, 3.0), c2 = uniform(g, -3.0, 3.0);
    for (std::size_t i = 0; i < d.rows(); ++i) {
      double x0 = d.X.at(i, 0), x1 = d.X.at(i, 1);
      d.y[i] = c0 * x0 + c1 * x1 * x1 + c2 + normal(g, 0.0, 0.5);
    }
    LvConfig cfg;
    cfg.xi1 = 3;
    cfg.xi2 = 3;
    cfg.loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.025);
    cfg.stop_loss = -1.0;
    LvResult res = run_lv_sr(d, cfg, SamplingStrategy{}, StructureConstraint{});
    LvCandidate oracle = brute_force_best(all_size3(cfg.functions, 2), d, cfg.loss);
    CHECK(res.best.loss == oracle.loss);
    CHECK(res.best.key == oracle.key);
  }
}

TEST_CASE("unary operators prune their dead branch everywhere") {
  FunctionSet fs;
  fs.ops = {Op::Add, Op::Sqrt};
  Dataset d = uniform_dataset(30, 2, 15);
  for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = std::sqrt(d.X.at(i, 0));

  // sampling side: realized trees stay valid prefix encodings
  auto tops = enumerate_topologies(3, 5);
  LvSampler s(tops, 2, fs, SamplingStrategy{}, StructureConstraint{});
  Rng g = make_rng(33, 8);
  bool saw_even = false;
  for (std::size_t i = 0; i < 300; ++i) {
    ExprTree t = s.sample(g);
    CHECK(t.subtree_end(0) == t.size());
    CHECK(t.size() <= 5);
    saw_even = saw_even || (t.size() % 2 == 0);
  }
  CHECK(saw_even);  // sqrt nodes drop one child, giving even sizes

  // exhaustive side: the raw odometer still lands on the right winner
  LvConfig cfg;
  cfg.xi1 = 3;
  cfg.xi2 = 3;
  cfg.functions = fs;
  cfg.loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.05);
  cfg.stop_loss = -1.0;
  LvResult res = run_lv_sr(d, cfg, SamplingStrategy{}, StructureConstraint{});
  CHECK(res.exhausted);
  CHECK(res.evaluations + res.duplicates == 18);  // 2 ops x 3 x 3 raw allocations
  ExprTree want;
  want.nodes = {Node::func(Op::Sqrt), Node::variable(0)};
  CHECK(res.best.key == canonical_key(want));
  CHECK(res.best.a == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sampling mode dedups, logs, and honors the evaluation cap") {
  Dataset d = uniform_dataset(50, 5, 61);
  for (std::size_t i = 0; i < d.rows(); ++i)
    d.y[i] = 2.0 * d.X.at(i, 0) + d.X.at(i, 3) * d.X.at(i, 4);
  LvConfig cfg;
  cfg.xi1 = 3;
  cfg.xi2 = 9;
  cfg.loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.05);
  cfg.stop_loss = -1.0;
  cfg.keep_log = true;
  cfg.seed = 7;
  SamplingStrategy st;
  st.rho = 2000;
  st.theta = 500;
  LvResult res = run_lv_sr(d, cfg, st, StructureConstraint{});

  CHECK_FALSE(res.exhausted);
  CHECK(res.evaluations == 2000);
  CHECK(res.log.size() == res.evaluations);
  std::set<std::string> keys;
  double min_loss = std::numeric_limits<double>::infinity();
  for (const auto& e : res.log) {
    CHECK(keys.insert(e.key).second);  // every logged candidate is distinct
    min_loss = std::min(min_loss, e.loss);
  }
  CHECK(res.best.loss == min_loss);

  LvResult again = run_lv_sr(d, cfg, st, StructureConstraint{});
  CHECK(again.infix == res.infix);
  CHECK(again.best.loss == res.best.loss);
  CHECK(again.evaluations == res.evaluations);
  CHECK(again.duplicates == res.duplicates);

  cfg.seed = 8;
  LvResult other = run_lv_sr(d, cfg, st, StructureConstraint{});
  CHECK(other.evaluations == 2000);  // same cap, independent stream
}

TEST_CASE("constraints and stop conditions shape the run") {
  Dataset d = uniform_dataset(40, 3, 27);
  for (std::size_t i = 0; i < d.rows(); ++i) d.y[i] = d.X.at(i, 1) + 3.0;
  LvConfig cfg;
  cfg.xi1 = 3;
  cfg.xi2 = 5;
  cfg.loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.05);
  cfg.seed = 3;

  SUBCASE("required feature reaches the winner") {
    cfg.stop_loss = -1.0;
    cfg.exhaustive_cap = 0;  // force sampling even for this small space
    SamplingStrategy st;
    st.rho = 800;
    StructureConstraint c;
    c.required_features = {2};
    LvResult res = run_lv_sr(d, cfg, st, c);
    CHECK(res.evaluations > 0);
    CHECK(res.best.tree.contains_var(2));
    CHECK(LvSampler::satisfies(res.best.tree, c));
  }
  SUBCASE("a generous stop loss ends the search immediately") {
    cfg.stop_loss = 1e12;
    cfg.exhaustive_cap = 0;
    SamplingStrategy st;
    st.rho = 800;
    LvResult res = run_lv_sr(d, cfg, st, StructureConstraint{});
    CHECK(res.stopped_early);
    CHECK(res.evaluations == 1);
  }
  SUBCASE("stop loss also short-circuits exhaustion") {
    cfg.stop_loss = 1e12;
    LvResult res = run_lv_sr(d, cfg, SamplingStrategy{}, StructureConstraint{});
    CHECK(res.stopped_early);
    CHECK_FALSE(res.exhausted);
    CHECK(res.evaluations == 1);
  }
}

TEST_CASE("planted product is recovered with its scale and offset") {
  Dataset d = uniform_dataset(80, 3, 55);
  for (std::size_t i = 0; i < d.rows(); ++i)
    d.y[i] = 2.5 * d.X.at(i, 0) * d.X.at(i, 1) + 1.0;
  LvConfig cfg;
  cfg.xi1 = 3;
  cfg.xi2 = 3;
  cfg.loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.05);
  cfg.stop_loss = -1.0;
  LvResult res = run_lv_sr(d, cfg, SamplingStrategy{}, StructureConstraint{});

  ExprTree want;
  want.nodes = {Node::func(Op::Mul), Node::variable(0), Node::variable(1)};
  CHECK(res.best.key == canonical_key(want));
  CHECK(res.best.a == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(res.best.b == doctest::Approx(1.0).epsilon(1e-9));

  // the assembled expression reproduces a*T+b row by row
  std::vector<std::size_t> rows(d.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> fit_vals = evaluate(res.fitted, d.X, rows);
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(fit_vals[i] == doctest::Approx(d.y[i]).epsilon(1e-9));
  CHECK_FALSE(res.infix.empty());
  CHECK(res.key_exact == canonical_key(res.fitted));
  CHECK(res.key_structure == canonical_key(res.fitted, true));
  CHECK(res.train_metrics.r2 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_SUITE_END();
