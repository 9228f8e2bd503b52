#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "lv_sr.hpp"

namespace srkit {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

char data_experiment(char experiment) { return experiment == 'F' ? 'E' : experiment; }

ExprTree remap_vars(ExprTree t, const std::vector<int>& to_global) {
  for (auto& n : t.nodes)
    if (n.kind == Node::Kind::Var) n.var = to_global.at(std::size_t(n.var));
  return t;
}

// slope/intercept of f regressed on s
std::pair<double, double> ols_pair(const std::vector<double>& f, const std::vector<double>& s) {
  const double n = double(s.size());
  double sm = 0, fm = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sm += s[i];
    fm += f[i];
  }
  sm /= n;
  fm /= n;
  double sss = 0, ssf = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sss += (s[i] - sm) * (s[i] - sm);
    ssf += (s[i] - sm) * (f[i] - fm);
  }
  if (!(sss > 0)) return {0.0, fm};
  double a = ssf / sss;
  if (!std::isfinite(a)) return {0.0, fm};
  return {a, fm - a * sm};
}

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.rows());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

LossSpec config_loss(const PipelineConfig& cfg, const KnowledgeConfig& kc) {
  if (kc.loss_formula) return LossSpec::with_custom(*kc.loss_formula, cfg.psi);
  return LossSpec::make(cfg.loss_weights, cfg.psi);
}

}  // namespace

const char* noise_mode_name(NoiseMode m) {
  switch (m) {
    case NoiseMode::Input: return "input";
    case NoiseMode::Target: return "target";
    default: return "both";
  }
}

std::size_t desk_samples(char experiment) {
  switch (experiment) {
    case 'A': return 400;
    case 'F': return 1000;
    default: return 2000;
  }
}

PipelineConfig desk_config(char experiment) {
  PipelineConfig c;
  c.psi = 0.02;
  c.chi = 0.6;
  c.folds = 5;
  switch (experiment) {
    case 'A':
      c.test_fraction = 0.75;  // 100 train / 300 test
      c.ga_population = 500;
      c.ga_generations = 50;
      c.ga_runs = 20;
      c.lv_mode = LvMode::Auto;
      c.rho = 100000;
      break;
    case 'B':
      c.test_fraction = 0.2;
      c.fs_population = 30;
      c.fs_generations = 10;
      c.ga_population = 200;
      c.ga_generations = 15;
      c.ga_runs = 5;
      c.lv_mode = LvMode::On;
      c.rho = 100000;
      break;
    case 'C':
      c.test_fraction = 0.2;
      c.psi_grid = {0.010, 0.015, 0.020, 0.025};
      c.ga_population = 300;
      c.ga_generations = 25;
      c.ga_runs = 10;
      c.lv_mode = LvMode::On;
      c.rho = 1000000;
      break;
    case 'D':
      c.test_fraction = 0.2;
      c.ga_population = 300;
      c.ga_generations = 25;
      c.ga_runs = 10;
      c.lv_mode = LvMode::On;
      c.rho = 100000;
      break;
    case 'E':
    case 'F':
      c.test_fraction = 0.2;
      c.ga_population = 200;
      c.ga_generations = 15;
      c.ga_runs = 5;
      c.lv_mode = LvMode::Auto;
      c.rho = 300000;
      break;
    default:
      throw std::invalid_argument(std::string("unknown experiment '") + experiment + "'");
  }
  return c;
}

KnowledgeConfig knowledge_for_mask(unsigned mask) {
  KnowledgeConfig k;
  if (mask & 1u)
    k.group_ranges = std::vector<std::pair<int, int>>{
        {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 6}, {7, 7}, {8, 8}, {9, 10}, {11, 11}, {12, 12}};
  if (mask & 2u) k.loss_formula = "0.5*l1 + 0.5*l2/linf";
  // h3, h4 matter for the target; h7, h8 are deliberately wrong hints
  if (mask & 4u)
    k.sr_feature_weights = std::vector<std::pair<std::string, double>>{
        {"h3", 3.0}, {"h4", 3.0}, {"h7", 3.0}, {"h8", 3.0}};
  if (mask & 8u) k.lv_feature_quota = std::pair<std::string, double>{"h3", 0.8};
  if (mask & 16u) k.lv_required_features = std::vector<std::string>{"h1"};
  return k;
}

KnowledgeConfig desk_knowledge(char experiment) {
  if (experiment == 'F') return knowledge_for_mask(31u);
  return {};
}

BenchmarkOutcome run_benchmark(char experiment, std::size_t samples, int repeats,
                               std::uint64_t seed, const PipelineConfig* cfg_override,
                               const KnowledgeConfig* kc_override) {
  const char dexp = data_experiment(experiment);
  const BenchmarkInfo& info = benchmark_info(dexp);
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (samples == 0) samples = desk_samples(experiment);
  const PipelineConfig cfg = cfg_override ? *cfg_override : desk_config(experiment);
  const KnowledgeConfig kc = kc_override ? *kc_override : desk_knowledge(experiment);

  BenchmarkOutcome out;
  out.experiment = experiment;
  out.samples = samples;
  out.repeats = repeats;
  out.target_structure = info.structure;
  out.target_prefactor = info.prefactor;

  const std::vector<std::string> gnames = generate_benchmark(dexp, 4, 1).names;
  ExprTree s_tree;
  const bool has_target = !info.structure.empty();
  if (has_target) {
    s_tree = parse_infix(info.structure, gnames);
    out.target_key = canonical_key(s_tree, true);
  }

  for (int r = 0; r < repeats; ++r) {
    const std::uint64_t dseed = mix_seed(seed, 1000 + std::uint64_t(r));
    Dataset d = generate_benchmark_with_default_noise(dexp, samples, dseed);
    train_test_split(d, cfg.test_fraction, mix_seed(seed, 3000 + std::uint64_t(r)));

    PipelineConfig rc = cfg;
    rc.seed = mix_seed(seed, 2000 + std::uint64_t(r));
    // once the loss of the true structure is reached there is nothing left to
    // find; the margin absorbs fitting slack on synthetic rows
    if (has_target && rc.lv_stop_loss == 0.0) {
      LvCandidate truth = fit_and_score(s_tree, d.X, d.y, d.train_rows, config_loss(rc, kc));
      if (std::isfinite(truth.loss)) rc.lv_stop_loss = truth.loss * 1.15;
    }

    const auto t0 = Clock::now();
    RunReport rep = run_pipeline(d, rc, kc);
    BenchRepeat br;
    br.ms = ms_since(t0);
    br.data_seed = dseed;
    br.pipeline_seed = rc.seed;
    br.incomplete = rep.incomplete;
    br.source = rep.equation_source;
    br.stable = rep.stable;
    br.alert = rep.alert.has_value();
    br.selected = rep.selected_features;
    if (rep.surrogate_ran) {
      br.surrogate_r2 = rep.surrogate.r2_mean;
      br.gate_passed = rep.surrogate.gate_passed;
    }

    // the pipeline renumbers columns after selection; take results back to the
    // generated column order so keys are comparable across repeats
    std::vector<int> to_global;
    const std::vector<std::string>& post = rep.fs_ran ? rep.selected_features : gnames;
    for (const auto& n : post) {
      auto it = std::find(gnames.begin(), gnames.end(), n);
      to_global.push_back(int(it - gnames.begin()));
    }

    if (rep.equation_source == "ga") {
      const GaRunOutcome& o = rep.ga.runs[rep.ga.best_index];
      br.equation_global = remap_vars(o.tree, to_global);
      br.vote_tree_global = br.equation_global;
      br.loss = o.loss;
    } else if (rep.equation_source == "lv") {
      br.equation_global = remap_vars(rep.lv.fitted, to_global);
      br.vote_tree_global = remap_vars(rep.lv.best.tree, to_global);
      br.loss = rep.lv.best.loss;
    }
    if (!br.vote_tree_global.empty()) {
      br.key_structure_global = canonical_key(br.vote_tree_global, true);
      br.matched = has_target && br.key_structure_global == out.target_key;
    }
    if (br.matched) {
      std::vector<double> sv = evaluate(s_tree, d.X, all_rows(d));
      std::vector<double> fv = evaluate(br.equation_global, d.X, all_rows(d));
      auto ab = ols_pair(fv, sv);
      br.prefactor = ab.first;
      br.offset = ab.second;
    }

    if (rep.lv_ran) {
      br.lv_ran = true;
      br.lv_tree_global = remap_vars(rep.lv.best.tree, to_global);
      br.lv_key_structure_global = canonical_key(br.lv_tree_global, true);
      br.lv_matched = has_target && br.lv_key_structure_global == out.target_key;
      br.lv_a = rep.lv.best.a;
      br.lv_b = rep.lv.best.b;
      br.lv_loss = rep.lv.best.loss;
      br.lv_tp = rep.lv.eval_metrics.t_p;
      if (br.lv_matched) {
        std::vector<double> sv = evaluate(s_tree, d.X, all_rows(d));
        std::vector<double> tv = evaluate(br.lv_tree_global, d.X, all_rows(d));
        for (auto& v : tv) v = br.lv_a * v + br.lv_b;
        auto ab = ols_pair(tv, sv);
        br.lv_prefactor = ab.first;
        br.lv_offset = ab.second;
      }
    }
    out.runs.push_back(std::move(br));
  }

  // plurality vote on the masked-constant key; ties break lexicographically
  std::map<std::string, int> votes;
  for (const auto& br : out.runs)
    if (!br.key_structure_global.empty()) ++votes[br.key_structure_global];
  for (const auto& kv : votes)
    if (kv.second > out.voted_count) {
      out.voted_key = kv.first;
      out.voted_count = kv.second;
    }
  out.structural_match = has_target && out.voted_key == out.target_key;

  double total_ms = 0;
  for (const auto& br : out.runs) {
    total_ms += br.ms;
    out.matches += br.matched ? 1 : 0;
    out.lv_matches += br.lv_matched ? 1 : 0;
    out.alerts += br.alert ? 1 : 0;
    out.stables += br.stable ? 1 : 0;
  }
  out.mean_ms = total_ms / double(repeats);

  auto median_pick = [](std::vector<const BenchRepeat*>& v,
                        double (*lossf)(const BenchRepeat&)) -> const BenchRepeat* {
    if (v.empty()) return nullptr;
    std::sort(v.begin(), v.end(), [&](const BenchRepeat* a, const BenchRepeat* b) {
      return lossf(*a) < lossf(*b);
    });
    return v[v.size() / 2];
  };
  std::vector<const BenchRepeat*> matched, lv_matched;
  for (const auto& br : out.runs) {
    if (br.matched) matched.push_back(&br);
    if (br.lv_matched) lv_matched.push_back(&br);
  }
  if (const BenchRepeat* m =
          median_pick(matched, [](const BenchRepeat& b) { return b.loss; })) {
    out.prefactor = m->prefactor;
    out.offset = m->offset;
    if (info.prefactor != 0.0)
      out.prefactor_rel_error = std::abs(out.prefactor - info.prefactor) / std::abs(info.prefactor);
  }
  if (const BenchRepeat* m =
          median_pick(lv_matched, [](const BenchRepeat& b) { return b.lv_loss; })) {
    out.lv_prefactor = m->lv_prefactor;
    out.lv_offset = m->lv_offset;
    if (info.prefactor != 0.0)
      out.lv_prefactor_rel_error =
          std::abs(out.lv_prefactor - info.prefactor) / std::abs(info.prefactor);
  }
  return out;
}

nlohmann::ordered_json BenchmarkOutcome::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = std::string(1, experiment);
  j["samples"] = samples;
  j["repeats"] = repeats;
  j["target_structure"] = target_structure;
  j["target_key"] = target_key;
  j["target_prefactor"] = target_prefactor;
  j["voted_key"] = voted_key;
  j["voted_count"] = voted_count;
  j["structural_match"] = structural_match;
  j["matches"] = matches;
  j["lv_matches"] = lv_matches;
  j["alerts"] = alerts;
  j["stable_runs"] = stables;
  j["prefactor"] = prefactor;
  j["offset"] = offset;
  j["prefactor_rel_error"] = prefactor_rel_error;
  j["lv_prefactor"] = lv_prefactor;
  j["lv_offset"] = lv_offset;
  j["lv_prefactor_rel_error"] = lv_prefactor_rel_error;
  j["mean_ms"] = mean_ms;
  nlohmann::ordered_json rr = nlohmann::ordered_json::array();
  for (const auto& b : runs) {
    nlohmann::ordered_json e;
    e["data_seed"] = b.data_seed;
    e["source"] = b.source;
    e["stable"] = b.stable;
    e["incomplete"] = b.incomplete;
    e["key"] = b.key_structure_global;
    e["matched"] = b.matched;
    e["loss"] = b.loss;
    e["prefactor"] = b.prefactor;
    e["offset"] = b.offset;
    if (b.lv_ran) {
      e["lv_key"] = b.lv_key_structure_global;
      e["lv_matched"] = b.lv_matched;
      e["lv_a"] = b.lv_a;
      e["lv_b"] = b.lv_b;
      e["lv_t_p"] = b.lv_tp;
    }
    e["surrogate_r2"] = b.surrogate_r2;
    e["alert"] = b.alert;
    e["selected"] = b.selected;
    e["ms"] = b.ms;
    rr.push_back(std::move(e));
  }
  j["runs"] = std::move(rr);
  return j;
}

std::vector<AblationRow> knowledge_ablation(int repeats, std::uint64_t seed, bool corners_only,
                                            std::size_t samples,
                                            const PipelineConfig* cfg_override) {
  std::vector<unsigned> masks;
  if (corners_only)
    masks = {0u, 31u};
  else
    for (unsigned m = 0; m < 32u; ++m) masks.push_back(m);

  const PipelineConfig cfg = cfg_override ? *cfg_override : desk_config('F');
  std::vector<AblationRow> rows;
  double base_ms = 0;
  for (unsigned mask : masks) {
    KnowledgeConfig kc = knowledge_for_mask(mask);
    // identical seed across masks: rows differ only in the supplied hints
    BenchmarkOutcome o = run_benchmark('F', samples, repeats, seed, &cfg, &kc);
    AblationRow row;
    row.mask = mask;
    row.repeats = repeats;
    row.successes = o.matches;
    row.success_rate = double(o.matches) / double(repeats);
    row.mean_ms = o.mean_ms;
    if (mask == 0u) base_ms = o.mean_ms;
    rows.push_back(row);
  }
  for (auto& row : rows) row.normalized_time = base_ms > 0 ? row.mean_ms / base_ms : 0.0;
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string s =
      "groups,custom_loss,sr_weights,lv_quota,lv_required,repeats,successes,success_rate,mean_ms,"
      "normalized_time\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%d,%d,%d,%.4f,%.1f,%.4f\n", int(r.mask & 1u),
                  int((r.mask >> 1) & 1u), int((r.mask >> 2) & 1u), int((r.mask >> 3) & 1u),
                  int((r.mask >> 4) & 1u), r.repeats, r.successes, r.success_rate, r.mean_ms,
                  r.normalized_time);
    s += buf;
  }
  return s;
}

namespace {

struct SweepSettings {
  std::size_t samples;
  double test_fraction;
  GaSrConfig ga;
  LvConfig lv;
  SamplingStrategy strat;
};

SweepSettings sweep_settings(char experiment) {
  SweepSettings s;
  s.ga.loss = LossSpec::make({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.02);
  s.ga.chi = 0.6;
  s.lv.loss = s.ga.loss;
  if (experiment == 'A') {
    s.samples = 400;
    s.test_fraction = 0.75;
    s.ga.population = 500;
    s.ga.generations = 30;
    s.ga.runs = 7;
    s.strat.rho = 100000;
  } else {  // C
    s.samples = 800;
    s.test_fraction = 0.2;
    s.ga.population = 300;
    s.ga.generations = 25;
    s.ga.runs = 5;
    s.strat.rho = 200000;
  }
  return s;
}

}  // namespace

std::vector<SweepCell> noise_sweep(char experiment, const std::vector<double>& levels,
                                   const std::vector<NoiseMode>& modes, int repeats,
                                   std::uint64_t seed) {
  if (experiment != 'A' && experiment != 'C')
    throw std::invalid_argument("noise sweeps cover experiments A and C");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  const BenchmarkInfo& info = benchmark_info(experiment);
  SweepSettings set = sweep_settings(experiment);
  const std::vector<std::string> gnames = generate_benchmark(experiment, 4, 1).names;
  const ExprTree s_tree = parse_infix(info.structure, gnames);
  const std::string target = canonical_key(s_tree, true);

  std::vector<SweepCell> cells;
  std::uint64_t cell_idx = 0;
  for (double level : levels) {
    for (NoiseMode mode : modes) {
      int ga_hits = 0, lv_hits = 0;
      for (int r = 0; r < repeats; ++r) {
        const std::uint64_t stream = 5000 + 8 * (cell_idx * std::uint64_t(repeats) + std::uint64_t(r));
        Dataset d = generate_benchmark(experiment, set.samples, mix_seed(seed, stream));
        if (level > 0) inject_noise(d, mode, level, mix_seed(seed, stream + 1));
        train_test_split(d, set.test_fraction, mix_seed(seed, stream + 2));

        GaSrConfig gc = set.ga;
        gc.seed = mix_seed(seed, stream + 3);
        GaSrResult ga = run_ga_sr(d, gc);
        if (canonical_key(ga.runs[ga.best_index].tree, true) == target) ++ga_hits;

        LvConfig lc = set.lv;
        lc.seed = mix_seed(seed, stream + 4);
        LvCandidate truth = fit_and_score(s_tree, d.X, d.y, d.train_rows, lc.loss);
        if (std::isfinite(truth.loss)) lc.stop_loss = truth.loss * 1.15;
        LvResult lv = run_lv_sr(d, lc, set.strat, {});
        if (canonical_key(lv.best.tree, true) == target) ++lv_hits;
      }
      cells.push_back({experiment, level, mode, "ga", repeats, ga_hits,
                       double(ga_hits) / double(repeats)});
      cells.push_back({experiment, level, mode, "lv", repeats, lv_hits,
                       double(lv_hits) / double(repeats)});
      ++cell_idx;
    }
  }
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string s = "experiment,level,mode,component,repeats,successes,fraction\n";
  char buf[120];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%c,%.4f,%s,%s,%d,%d,%.4f\n", c.experiment, c.level,
                  noise_mode_name(c.mode), c.component.c_str(), c.repeats, c.successes,
                  c.fraction);
    s += buf;
  }
  return s;
}

}  // namespace srkit
