#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dataset.hpp"
#include "feature_select.hpp"
#include "ga_sr.hpp"
#include "lv_sr.hpp"
#include "metrics.hpp"
#include "surrogate.hpp"

namespace srkit {

// Expert knowledge enters at five independent junctions. Features are named so
// the hints survive column selection; hints that reference a dropped feature
// are skipped with a note rather than failing the run.
struct KnowledgeConfig {
  // 1: feature groups as 1-based inclusive column ranges
  std::optional<std::vector<std::pair<int, int>>> group_ranges;
  // 2: custom training loss over {l1, l2, linf, mae, mse, n, g}
  std::optional<std::string> loss_formula;
  // 3: multiplicative leaf-weight hints for the evolutionary search
  //    ("const" addresses the constant slot)
  std::optional<std::vector<std::pair<std::string, double>>> sr_feature_weights;
  // 4: sampling-strategy hints for the randomized search
  std::optional<std::pair<std::string, double>> lv_feature_quota;
  std::optional<std::pair<std::vector<int>, double>> lv_size_focus;
  // 5: structural constraints for the randomized search
  std::optional<std::vector<std::string>> lv_required_features;
  std::optional<std::string> lv_required_subtree;  // infix over feature names

  bool any() const;
  nlohmann::ordered_json to_json() const;
  static KnowledgeConfig from_json(const nlohmann::ordered_json& j);
};

enum class LvMode { Auto, On, Off };

struct PipelineConfig {
  // component switches
  bool use_feature_selection = true;
  bool use_surrogate = true;
  bool use_augmentation = true;  // requires the surrogate
  bool use_ga_sr = true;
  LvMode lv_mode = LvMode::Auto;  // Auto = only when the evolutionary verdict is unstable

  // data handling
  double test_fraction = 0.2;  // 0 keeps the dataset's own split (or trains on everything)
  int folds = 5;

  // feature selection
  double omega_fs = 0.9;
  double fs_delta = 0.05;
  int fs_population = 50;
  int fs_generations = 20;

  // surrogate gate + synthetic augmentation
  double zeta_mean = 0.1;
  double zeta_std = 0.02;
  int surrogate_budget = 0;  // 0 = whole family
  double tau_fraction = 0.10;
  double synth_radius = 0.025;
  int kappa = 3;

  // shared SR loss
  std::array<double, 3> loss_weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double psi = 0.05;
  std::vector<double> psi_grid;  // two or more entries switch on the grid search

  // evolutionary SR
  int ga_population = 500;
  int ga_generations = 50;
  int ga_runs = 20;
  double ga_delta = 0.05;
  double crossover_rate = 0.7;
  int init_depth = 3;
  double chi = 0.5;
  double metric_std_threshold = 0.05;
  double tp_threshold = 0.8;

  // randomized SR
  int xi1 = 3;
  int xi2 = 13;
  std::uint64_t theta = 1000;
  std::uint64_t rho = 10000000;
  int lv_knn = 5;
  bool lv_adaptive = true;
  double lv_stop_loss = 0.0;
  std::uint64_t lv_wall_ms = 0;

  std::vector<std::string> functions{"add", "sub", "mul", "div"};
  std::uint64_t seed = 0;

  void validate() const;  // throws invalid_argument on contradictions
  nlohmann::ordered_json to_json() const;
  static PipelineConfig from_json(const nlohmann::ordered_json& j);
};

struct SurrogateSummary {
  std::string provenance;
  double nmae_mean = 0, nmae_std = 0;
  double r2_mean = 0, r2_std = 0;
  double mae_mean = 0, mse_mean = 0, tp_mean = 0;
  bool gate_passed = false;
  std::size_t evaluated = 0;
};

struct StageEntry {
  std::string stage;
  bool ran = false;
  std::string note;
  double ms = 0.0;
};

struct RunReport {
  nlohmann::ordered_json config_echo;  // pipeline + knowledge, re-runnable
  std::uint64_t seed = 0;

  bool fs_ran = false;
  std::vector<std::string> selected_features;
  double fs_fitness = 0.0;
  std::size_t fs_oracle_evals = 0;

  bool surrogate_ran = false;
  SurrogateSummary surrogate;

  bool augmented = false;
  std::size_t synthetic_requested = 0, synthetic_accepted = 0;
  bool synthetic_shortfall = false;

  bool ga_ran = false;
  GaSrResult ga;
  bool lv_ran = false;
  LvResult lv;

  std::optional<std::string> alert;

  // headline result
  std::string equation_source = "none";  // "ga" | "lv" | "none"
  std::string equation_infix;
  std::string equation_key_exact, equation_key_structure;
  bool stable = false;
  MetricsVector final_train, final_eval;

  std::vector<StageEntry> stages;
  bool incomplete = false;
  std::string error;
  double total_ms = 0.0;

  // with include_timing=false the output is byte-stable for a given seed
  nlohmann::ordered_json to_json(bool include_timing = true) const;
};

// Raised when a strong general model coexists with a failing symbolic fit:
// the data is learnable, but not expressible over the visible features.
std::optional<std::string> missing_feature_alert(double surrogate_r2, double sr_tp,
                                                 double r2_threshold = 0.9,
                                                 double tp_threshold = 0.05);

// Stage order: selection -> surrogate + gate -> augmentation -> evolutionary
// SR -> randomized SR (on instability, force, or when the evolutionary stage
// is off) -> alert -> report. Stage failures mark the report incomplete
// instead of throwing.
RunReport run_pipeline(Dataset d, const PipelineConfig& cfg, const KnowledgeConfig& knowledge);

}  // namespace srkit
