#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipeline.hpp"

namespace srkit {

// Desk-scale experiment presets: small enough for a laptop, same shape as the
// full-scale settings (which remain one config change away).
std::size_t desk_samples(char experiment);
PipelineConfig desk_config(char experiment);
// Expert hints for the knowledge experiment (empty for everything else).
KnowledgeConfig desk_knowledge(char experiment);
// Subset of the knowledge experiment's five junctions, one bit each:
// 1 = feature groups, 2 = custom loss, 4 = SR leaf weights, 8 = sampling
// quota, 16 = required feature.
KnowledgeConfig knowledge_for_mask(unsigned mask);

struct BenchRepeat {
  std::uint64_t data_seed = 0, pipeline_seed = 0;
  std::string source;  // ga | lv | none
  bool stable = false;
  bool incomplete = false;
  // headline equation with variables renumbered back to the generated columns
  ExprTree equation_global;  // numeric equation (constants included)
  ExprTree vote_tree_global;  // bare structure used for voting
  std::string key_structure_global;
  bool matched = false;
  double loss = 0.0;
  double prefactor = 0.0, offset = 0.0;  // equation regressed on the target structure
  bool lv_ran = false;
  ExprTree lv_tree_global;
  std::string lv_key_structure_global;
  bool lv_matched = false;
  double lv_a = 0.0, lv_b = 0.0, lv_loss = 0.0, lv_tp = 1.0;
  double lv_prefactor = 0.0, lv_offset = 0.0;
  double surrogate_r2 = -1.0;
  bool gate_passed = false;
  bool alert = false;
  std::vector<std::string> selected;  // feature-selection output
  double ms = 0.0;
};

struct BenchmarkOutcome {
  char experiment = '?';
  std::size_t samples = 0;
  int repeats = 0;
  std::string target_structure;  // empty when no closed form exists over the columns
  std::string target_key;
  double target_prefactor = 0.0;
  std::vector<BenchRepeat> runs;
  // most repeated structure across repeats, compared against the target
  std::string voted_key;
  int voted_count = 0;
  bool structural_match = false;
  int matches = 0, lv_matches = 0, alerts = 0, stables = 0;
  // from the median-loss matching repeat
  double prefactor = 0.0, offset = 0.0, prefactor_rel_error = 0.0;
  double lv_prefactor = 0.0, lv_offset = 0.0, lv_prefactor_rel_error = 0.0;
  double mean_ms = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Generates repeat datasets at desk scale, runs the pipeline on each, votes on
// the masked-constant canonical key, and reports the prefactor from the
// median-loss matching repeat. samples = 0 uses the experiment default;
// overrides replace the desk presets when given.
BenchmarkOutcome run_benchmark(char experiment, std::size_t samples, int repeats,
                               std::uint64_t seed, const PipelineConfig* cfg_override = nullptr,
                               const KnowledgeConfig* kc_override = nullptr);

struct AblationRow {
  unsigned mask = 0;
  int repeats = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_ms = 0.0;
  double normalized_time = 0.0;  // relative to the all-off row
};

// Junction on/off grid on the knowledge experiment; identical seeds across
// masks so rows differ only in the supplied hints. corners_only restricts the
// grid to all-off and all-on.
std::vector<AblationRow> knowledge_ablation(int repeats, std::uint64_t seed, bool corners_only,
                                            std::size_t samples = 0,
                                            const PipelineConfig* cfg_override = nullptr);
std::string ablation_csv(const std::vector<AblationRow>& rows);

struct SweepCell {
  char experiment = '?';
  double level = 0.0;
  NoiseMode mode = NoiseMode::Target;
  std::string component;  // "ga" | "lv"
  int repeats = 0;
  int successes = 0;
  double fraction = 0.0;
};

// Noise-robustness grid: per (level, mode) both SR components run directly on
// freshly drawn data, success = masked-constant structural recovery.
std::vector<SweepCell> noise_sweep(char experiment, const std::vector<double>& levels,
                                   const std::vector<NoiseMode>& modes, int repeats,
                                   std::uint64_t seed);
std::string sweep_csv(const std::vector<SweepCell>& cells);

const char* noise_mode_name(NoiseMode m);

}  // namespace srkit
