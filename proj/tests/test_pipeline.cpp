#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pipeline.hpp"
#include "rng.hpp"

using namespace srkit;

namespace {

// y = f(x) over i.i.d. uniform [1,10] features, deterministic per seed
template <class F>
Dataset make_data(std::size_t n, std::size_t m, std::uint64_t seed, F f) {
  Dataset d;
  d.X = Matrix(n, m);
  d.y.resize(n);
  Rng g = make_rng(seed, 901);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) d.X.at(i, j) = uniform(g, 1.0, 10.0);
    d.y[i] = f(d.X.row(i));
  }
  d.names.resize(m);
  for (std::size_t j = 0; j < m; ++j) d.names[j] = "x" + std::to_string(j + 1);
  d.groups = FeatureGroups::singletons(m);
  return d;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.test_fraction = 0.25;
  c.folds = 3;
  c.fs_population = 10;
  c.fs_generations = 4;
  c.ga_population = 60;
  c.ga_generations = 12;
  c.ga_runs = 3;
  c.xi1 = 3;
  c.xi2 = 5;
  c.theta = 500;
  c.rho = 3000;
  c.seed = 3;
  return c;
}

const StageEntry* find_stage(const RunReport& r, const std::string& name) {
  for (const auto& s : r.stages)
    if (s.stage == name) return &s;
  return nullptr;
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("alert is a pure conjunction of surrogate strength and symbolic failure") {
  auto a = missing_feature_alert(0.95, 0.000);
  REQUIRE(a.has_value());
  CHECK(a->find("0.950") != std::string::npos);
  CHECK(a->find("0.000") != std::string::npos);
  CHECK(a->find("missing") != std::string::npos);

  CHECK_FALSE(missing_feature_alert(0.986, 0.994).has_value());  // symbolic fit is fine
  CHECK_FALSE(missing_feature_alert(0.30, 0.010).has_value());   // nothing learns the data
  CHECK_FALSE(missing_feature_alert(0.95, 0.20).has_value());
  CHECK(missing_feature_alert(0.90, 0.05).has_value());  // thresholds are inclusive
  CHECK(missing_feature_alert(0.85, 0.08, 0.8, 0.1).has_value());
  CHECK_FALSE(missing_feature_alert(0.85, 0.08).has_value());
}

TEST_CASE("config validation catches contradictions") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());

  c = PipelineConfig{};
  c.use_surrogate = false;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // augmentation needs the surrogate
  c.use_augmentation = false;
  CHECK_NOTHROW(c.validate());

  c = PipelineConfig{};
  c.test_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PipelineConfig{};
  c.folds = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PipelineConfig{};
  c.chi = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PipelineConfig{};
  c.xi1 = 7;
  c.xi2 = 5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PipelineConfig{};
  c.functions = {"add", "banana"};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PipelineConfig{};
  c.functions.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("pipeline and knowledge configs round-trip through json") {
  PipelineConfig c = small_config();
  c.lv_mode = LvMode::On;
  c.psi_grid = {0.01, 0.02};
  c.functions = {"add", "mul", "sqrt"};
  auto j = c.to_json();
  PipelineConfig back = PipelineConfig::from_json(j);
  CHECK(back.to_json().dump() == j.dump());
  CHECK(back.lv_mode == LvMode::On);
  CHECK(back.rho == c.rho);

  nlohmann::ordered_json bad{{"ga_poplation", 10}};
  CHECK_THROWS_AS(PipelineConfig::from_json(bad), std::invalid_argument);
  nlohmann::ordered_json badmode{{"lv_mode", "sometimes"}};
  CHECK_THROWS_AS(PipelineConfig::from_json(badmode), std::invalid_argument);

  KnowledgeConfig k;
  CHECK_FALSE(k.any());
  CHECK(k.to_json().dump() == "{}");
  k.group_ranges = std::vector<std::pair<int, int>>{{1, 3}, {4, 4}};
  k.loss_formula = "0.5*l1 + 0.5*l2";
  k.sr_feature_weights = std::vector<std::pair<std::string, double>>{{"x1", 3.0}, {"const", 0.5}};
  k.lv_feature_quota = std::pair<std::string, double>{"x2", 0.8};
  k.lv_size_focus = std::pair<std::vector<int>, double>{{5, 7}, 0.6};
  k.lv_required_features = std::vector<std::string>{"x1"};
  k.lv_required_subtree = "x1*x2";
  CHECK(k.any());
  auto kj = k.to_json();
  KnowledgeConfig kb = KnowledgeConfig::from_json(kj);
  CHECK(kb.to_json().dump() == kj.dump());
  CHECK(kb.lv_feature_quota->first == "x2");
  CHECK(kb.group_ranges->size() == 2);

  nlohmann::ordered_json kbad{{"required_subtree", "x1"}};
  CHECK_THROWS_AS(KnowledgeConfig::from_json(kbad), std::invalid_argument);
}

TEST_CASE("a clean target yields a stable verdict and the randomized stage is skipped") {
  Dataset d = make_data(120, 3, 11, [](const double* x) { return x[0]; });
  PipelineConfig cfg = small_config();
  cfg.use_feature_selection = false;
  RunReport r = run_pipeline(d, cfg, {});

  REQUIRE_FALSE(r.incomplete);
  CHECK(r.ga_ran);
  CHECK(r.ga.stable);
  CHECK(r.equation_source == "ga");
  CHECK(r.stable);
  CHECK(r.equation_key_exact == canonical_key(parse_infix("x1", d.names)));
  CHECK(r.final_eval.r2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(r.lv_ran);
  const StageEntry* lv = find_stage(r, "lv_sr");
  REQUIRE(lv != nullptr);
  CHECK_FALSE(lv->ran);
  CHECK(lv->note.find("stable") != std::string::npos);
  CHECK_FALSE(r.alert.has_value());

  // surrogate learned an exact relation, gate passes, augmentation ran
  CHECK(r.surrogate_ran);
  CHECK(r.surrogate.gate_passed);
  const StageEntry* au = find_stage(r, "augmentation");
  REQUIRE(au != nullptr);
  CHECK(au->ran);

  // stage log preserves the execution order
  std::vector<std::string> order;
  for (const auto& s : r.stages) order.push_back(s.stage);
  std::vector<std::string> expected{"split",      "feature_selection", "surrogate",
                                    "augmentation", "ga_sr",           "lv_sr",
                                    "alert"};
  CHECK(order == expected);
}

TEST_CASE("same seed gives byte-identical reports and the config echo reproduces the run") {
  auto data = [] { return make_data(100, 3, 21, [](const double* x) { return x[0] + x[1] * x[2]; }); };
  PipelineConfig cfg = small_config();
  cfg.use_feature_selection = false;
  cfg.ga_runs = 2;
  cfg.seed = 7;

  RunReport r1 = run_pipeline(data(), cfg, {});
  RunReport r2 = run_pipeline(data(), cfg, {});
  const std::string d1 = r1.to_json(false).dump(2);
  CHECK(d1 == r2.to_json(false).dump(2));

  // all-junctions-off knowledge is the no-knowledge run
  KnowledgeConfig off;
  RunReport r3 = run_pipeline(data(), cfg, off);
  CHECK(d1 == r3.to_json(false).dump(2));

  // the echo alone is enough to re-run
  PipelineConfig cfg2 = PipelineConfig::from_json(r1.config_echo.at("pipeline"));
  KnowledgeConfig kc2 = KnowledgeConfig::from_json(r1.config_echo.at("knowledge"));
  RunReport r4 = run_pipeline(data(), cfg2, kc2);
  CHECK(d1 == r4.to_json(false).dump(2));

  cfg.seed = 8;
  RunReport r5 = run_pipeline(data(), cfg, {});
  CHECK(d1 != r5.to_json(false).dump(2));
}

TEST_CASE("disabling the evolutionary stage escalates to the randomized stage") {
  Dataset d = make_data(100, 3, 31, [](const double* x) { return x[0] * x[1]; });
  PipelineConfig cfg = small_config();
  cfg.use_feature_selection = false;
  cfg.use_ga_sr = false;
  RunReport r = run_pipeline(d, cfg, {});

  REQUIRE_FALSE(r.incomplete);
  CHECK_FALSE(r.ga_ran);
  CHECK(r.lv_ran);
  CHECK(r.equation_source == "lv");
  CHECK_FALSE(r.stable);  // only the evolutionary verdict can be stable
  const StageEntry* lv = find_stage(r, "lv_sr");
  REQUIRE(lv != nullptr);
  CHECK(lv->ran);
  CHECK(lv->note.find("disabled") != std::string::npos);

  ExprTree target = parse_infix("x1*x2", d.names);
  CHECK(canonical_key(r.lv.best.tree) == canonical_key(target));
  CHECK(r.lv.best.a == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r.lv.best.b) < 1e-6);
}

TEST_CASE("forcing the randomized stage keeps the stable evolutionary headline") {
  Dataset d = make_data(120, 3, 11, [](const double* x) { return x[0]; });
  PipelineConfig cfg = small_config();
  cfg.use_feature_selection = false;
  cfg.lv_mode = LvMode::On;
  RunReport r = run_pipeline(d, cfg, {});

  REQUIRE_FALSE(r.incomplete);
  CHECK(r.ga_ran);
  CHECK(r.lv_ran);
  const StageEntry* lv = find_stage(r, "lv_sr");
  REQUIRE(lv != nullptr);
  CHECK(lv->note.find("forced") != std::string::npos);
  if (r.ga.stable) {
    CHECK(r.equation_source == "ga");
    CHECK(r.stable);
  }
}

TEST_CASE("a failed surrogate gate skips augmentation and the run flags it") {
  // target is pure noise: nothing can clear the gate
  Dataset d = make_data(100, 3, 41, [](const double*) { return 0.0; });
  Rng g = make_rng(41, 902);
  for (auto& v : d.y) v = uniform(g, -50.0, 50.0);
  PipelineConfig cfg = small_config();
  cfg.use_feature_selection = false;
  cfg.ga_population = 20;
  cfg.ga_generations = 3;
  cfg.ga_runs = 2;
  cfg.lv_mode = LvMode::Off;
  RunReport r = run_pipeline(d, cfg, {});

  REQUIRE_FALSE(r.incomplete);
  CHECK(r.surrogate_ran);
  CHECK_FALSE(r.surrogate.gate_passed);
  CHECK_FALSE(r.augmented);
  CHECK(r.synthetic_accepted == 0);
  const StageEntry* au = find_stage(r, "augmentation");
  REQUIRE(au != nullptr);
  CHECK_FALSE(au->ran);
  CHECK(au->note.find("gate failed") != std::string::npos);
  CHECK_FALSE(r.alert.has_value());  // surrogate is poor too, different diagnosis
}

TEST_CASE("knowledge junctions wire through by name and skip dropped features") {
  // y depends on x1 and x3 only; groups pair (x1,x2) and (x3,x4)
  Dataset d = make_data(160, 4, 51, [](const double* x) { return x[0] * x[2]; });
  PipelineConfig cfg = small_config();
  cfg.use_ga_sr = false;
  cfg.lv_mode = LvMode::On;
  KnowledgeConfig kc;
  kc.group_ranges = std::vector<std::pair<int, int>>{{1, 2}, {3, 4}};
  kc.loss_formula = "0.5*l1 + 0.5*l2";
  kc.lv_feature_quota = std::pair<std::string, double>{"x3", 0.9};
  kc.lv_required_features = std::vector<std::string>{"x1"};
  kc.lv_required_subtree = "x2*x4";  // both dropped by selection, must be skipped
  RunReport r = run_pipeline(d, cfg, kc);

  REQUIRE_FALSE(r.incomplete);
  const StageEntry* gr = find_stage(r, "knowledge.groups");
  REQUIRE(gr != nullptr);
  CHECK(gr->note.find("2 groups") != std::string::npos);
  const StageEntry* lo = find_stage(r, "knowledge.loss");
  REQUIRE(lo != nullptr);
  CHECK(lo->note == "0.5*l1 + 0.5*l2");

  REQUIRE(r.fs_ran);
  CHECK(r.selected_features == std::vector<std::string>{"x1", "x3"});

  const StageEntry* kl = find_stage(r, "knowledge.lv");
  REQUIRE(kl != nullptr);
  CHECK(kl->note.find("quota x3") != std::string::npos);
  CHECK(kl->note.find("required x1") != std::string::npos);
  CHECK(kl->note.find("skipped") != std::string::npos);
  CHECK(kl->note.find("x2*x4") != std::string::npos);

  REQUIRE(r.lv_ran);
  int x1_idx = -1;
  for (std::size_t i = 0; i < 2; ++i)
    if (r.selected_features[i] == "x1") x1_idx = int(i);
  REQUIRE(x1_idx >= 0);
  CHECK(r.lv.best.tree.contains_var(x1_idx));
}

TEST_CASE("leaf-weight hints reach the evolutionary stage and unknown names are noted") {
  Dataset d = make_data(80, 2, 61, [](const double* x) { return x[0]; });
  PipelineConfig cfg = small_config();
  cfg.use_feature_selection = false;
  cfg.use_surrogate = false;
  cfg.use_augmentation = false;
  cfg.ga_population = 20;
  cfg.ga_generations = 2;
  cfg.ga_runs = 1;
  cfg.lv_mode = LvMode::Off;
  KnowledgeConfig kc;
  kc.sr_feature_weights = std::vector<std::pair<std::string, double>>{
      {"x1", 5.0}, {"const", 0.25}, {"zebra", 2.0}};
  RunReport r = run_pipeline(d, cfg, kc);

  REQUIRE_FALSE(r.incomplete);
  const StageEntry* kw = find_stage(r, "knowledge.sr_weights");
  REQUIRE(kw != nullptr);
  CHECK(kw->note.find("x1 x5") != std::string::npos);
  CHECK(kw->note.find("const x0.25") != std::string::npos);
  CHECK(kw->note.find("skipped: zebra") != std::string::npos);
}

TEST_CASE("stage failures surface as incomplete reports with partial logs") {
  Dataset d = make_data(60, 3, 71, [](const double* x) { return x[0] + x[1]; });

  PipelineConfig bad;
  bad.use_surrogate = false;  // augmentation still on: contradiction
  RunReport r1 = run_pipeline(d, bad, {});
  CHECK(r1.incomplete);
  CHECK(r1.error.find("augmentation") != std::string::npos);
  REQUIRE_FALSE(r1.stages.empty());
  CHECK(r1.stages.back().stage == "abort");

  PipelineConfig badw = small_config();
  badw.loss_weights = {0.5, 0.5, 0.5};  // not a simplex
  RunReport r2 = run_pipeline(d, badw, {});
  CHECK(r2.incomplete);
  CHECK(find_stage(r2, "split") != nullptr);  // stages before the failure were logged

  // infeasible structural constraints fail inside the randomized stage
  PipelineConfig cfg = small_config();
  cfg.use_feature_selection = false;
  cfg.use_ga_sr = false;
  cfg.xi2 = 3;
  KnowledgeConfig kc;
  kc.lv_required_subtree = "x1*x2";  // fills every size-3 tree
  kc.lv_required_features = std::vector<std::string>{"x3"};  // no room left
  RunReport r3 = run_pipeline(d, cfg, kc);
  CHECK(r3.incomplete);
  CHECK_FALSE(r3.error.empty());
  CHECK(find_stage(r3, "surrogate") != nullptr);
  CHECK(r3.equation_source == "none");
}

TEST_SUITE_END();
