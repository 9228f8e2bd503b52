#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "bench.hpp"

using namespace srkit;

TEST_SUITE_BEGIN("bench");

TEST_CASE("desk presets are valid configs with sensible scales") {
  for (char e : {'A', 'B', 'C', 'D', 'E', 'F'}) {
    CAPTURE(e);
    CHECK_NOTHROW(desk_config(e).validate());
    CHECK(desk_samples(e) >= 400);
  }
  CHECK(desk_config('A').test_fraction == doctest::Approx(0.75));
  CHECK(desk_config('C').psi_grid.size() == 4);
  CHECK(desk_config('B').lv_mode == LvMode::On);
  CHECK_THROWS_AS(desk_config('Q'), std::invalid_argument);

  CHECK_FALSE(desk_knowledge('A').any());
  CHECK_FALSE(desk_knowledge('E').any());
  KnowledgeConfig f = desk_knowledge('F');
  CHECK(f.group_ranges->size() == 10);
  CHECK(f.loss_formula.has_value());
  CHECK(f.sr_feature_weights->size() == 4);
  CHECK(f.lv_feature_quota->first == "h3");
  CHECK(f.lv_required_features->front() == "h1");
}

TEST_CASE("junction masks switch exactly the chosen hints") {
  CHECK_FALSE(knowledge_for_mask(0).any());
  CHECK(knowledge_for_mask(1).group_ranges.has_value());
  CHECK_FALSE(knowledge_for_mask(1).loss_formula.has_value());
  CHECK(knowledge_for_mask(2).loss_formula.has_value());
  CHECK(knowledge_for_mask(4).sr_feature_weights.has_value());
  CHECK(knowledge_for_mask(8).lv_feature_quota.has_value());
  CHECK(knowledge_for_mask(16).lv_required_features.has_value());
  KnowledgeConfig all = knowledge_for_mask(31);
  CHECK(all.group_ranges.has_value());
  CHECK(all.loss_formula.has_value());
  CHECK(all.sr_feature_weights.has_value());
  CHECK(all.lv_feature_quota.has_value());
  CHECK(all.lv_required_features.has_value());
}

TEST_CASE("benchmark repeats vote on structure and measure the prefactor") {
  PipelineConfig cfg = desk_config('A');
  cfg.test_fraction = 0.25;
  cfg.ga_population = 100;
  cfg.ga_generations = 15;
  cfg.ga_runs = 3;
  BenchmarkOutcome o = run_benchmark('A', 120, 3, 5, &cfg);

  CHECK(o.experiment == 'A');
  CHECK(o.samples == 120);
  CHECK(o.repeats == 3);
  REQUIRE(o.runs.size() == 3);
  CHECK(o.target_structure == "x1 + x2*x3");
  CHECK_FALSE(o.target_key.empty());
  CHECK(o.voted_count <= 3);

  int matched = 0;
  for (const auto& r : o.runs) {
    CHECK_FALSE(r.incomplete);
    CHECK(r.source != "none");
    matched += r.matched ? 1 : 0;
    if (r.matched) {
      CHECK(r.key_structure_global == o.target_key);
      CHECK(r.prefactor == doctest::Approx(1.0).epsilon(0.1));
    }
  }
  CHECK(o.matches == matched);
  REQUIRE(o.structural_match);  // an easy target at this budget
  CHECK(o.voted_key == o.target_key);
  CHECK(o.prefactor == doctest::Approx(1.0).epsilon(0.1));
  CHECK(o.prefactor_rel_error < 0.1);

  // aggregation is deterministic given the seed (timings aside)
  BenchmarkOutcome o2 = run_benchmark('A', 120, 3, 5, &cfg);
  CHECK(o2.voted_key == o.voted_key);
  CHECK(o2.matches == o.matches);
  CHECK(o2.prefactor == o.prefactor);
  for (std::size_t i = 0; i < o.runs.size(); ++i)
    CHECK(o2.runs[i].key_structure_global == o.runs[i].key_structure_global);

  auto j = o.to_json();
  CHECK(j.at("structural_match").get<bool>());
  CHECK(j.at("runs").size() == 3);
  CHECK(j.at("target_prefactor").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("selection renumbering still yields globally comparable keys") {
  // 33 columns shrink to the 9 group representatives before the search; the
  // recovered product must still land on the y30*y31 target key
  PipelineConfig cfg = desk_config('B');
  cfg.fs_population = 6;
  cfg.fs_generations = 2;
  cfg.use_ga_sr = false;
  cfg.xi2 = 5;
  cfg.rho = 50000;
  BenchmarkOutcome o = run_benchmark('B', 240, 2, 9, &cfg);

  REQUIRE(o.runs.size() == 2);
  for (const auto& r : o.runs) {
    CHECK_FALSE(r.incomplete);
    REQUIRE(r.selected.size() == 9);
    CHECK(std::find(r.selected.begin(), r.selected.end(), "y30") != r.selected.end());
    CHECK(std::find(r.selected.begin(), r.selected.end(), "y31") != r.selected.end());
    REQUIRE(r.lv_ran);
    CHECK(r.lv_matched);
    CHECK(r.lv_a == doctest::Approx(1.33).epsilon(0.05));
  }
  CHECK(o.structural_match);
  CHECK(o.lv_matches == 2);
  CHECK(o.lv_prefactor == doctest::Approx(1.33).epsilon(0.053));
  CHECK(o.lv_prefactor_rel_error < 0.07);
}

TEST_CASE("the junction ablation grid pairs seeds across masks") {
  PipelineConfig cfg = desk_config('F');
  cfg.fs_population = 6;
  cfg.fs_generations = 2;
  cfg.ga_population = 30;
  cfg.ga_generations = 3;
  cfg.ga_runs = 2;
  cfg.rho = 4000;
  cfg.xi2 = 7;
  auto rows = knowledge_ablation(2, 13, true, 80, &cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mask == 0u);
  CHECK(rows[1].mask == 31u);
  CHECK(rows[0].repeats == 2);
  CHECK(rows[0].normalized_time == doctest::Approx(1.0));
  CHECK(rows[1].normalized_time > 0.0);
  for (const auto& r : rows) {
    CHECK(r.success_rate == doctest::Approx(double(r.successes) / 2.0));
    CHECK(r.mean_ms > 0.0);
  }

  std::string csv = ablation_csv(rows);
  CHECK(csv.rfind("groups,custom_loss,sr_weights,lv_quota,lv_required", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("\n0,0,0,0,0,") != std::string::npos);
  CHECK(csv.find("\n1,1,1,1,1,") != std::string::npos);
}

TEST_CASE("the noise sweep reports per-cell fractions for both components") {
  auto cells = noise_sweep('A', {0.0}, {NoiseMode::Target}, 2, 17);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].component == "ga");
  CHECK(cells[1].component == "lv");
  for (const auto& c : cells) {
    CHECK(c.experiment == 'A');
    CHECK(c.repeats == 2);
    CHECK(c.fraction == doctest::Approx(double(c.successes) / 2.0));
  }
  // a noiseless five-node target is recovered at full budget
  CHECK(cells[0].fraction == doctest::Approx(1.0));
  CHECK(cells[1].fraction == doctest::Approx(1.0));

  std::string csv = sweep_csv(cells);
  CHECK(csv.rfind("experiment,level,mode,component", 0) == 0);
  CHECK(csv.find("A,0.0000,target,ga,2,") != std::string::npos);
  CHECK(csv.find("A,0.0000,target,lv,2,") != std::string::npos);

  CHECK_THROWS_AS(noise_sweep('B', {0.0}, {NoiseMode::Target}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(noise_sweep('A', {0.0}, {NoiseMode::Target}, 0, 1), std::invalid_argument);
}

TEST_SUITE_END();
