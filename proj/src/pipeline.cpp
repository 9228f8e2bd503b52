#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

namespace srkit {
namespace {

using Clock = std::chrono::steady_clock;
using ojson = nlohmann::ordered_json;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmtd(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

ojson metrics_json(const MetricsVector& m) {
  ojson j{{"mae", m.mae}, {"mse", m.mse}, {"r2", m.r2}, {"t_p", m.t_p}};
  if (m.degenerate_truth) j["degenerate_truth"] = true;
  return j;
}

int find_name(const std::vector<std::string>& names, const std::string& n) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == n) return int(i);
  return -1;
}

void reject_unknown_keys(const ojson& j, const std::set<std::string>& known, const char* what) {
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw std::invalid_argument(std::string("unknown ") + what + " key: " + item.key());
}

}  // namespace

bool KnowledgeConfig::any() const {
  return group_ranges || loss_formula || sr_feature_weights || lv_feature_quota || lv_size_focus ||
         lv_required_features || lv_required_subtree;
}

ojson KnowledgeConfig::to_json() const {
  ojson j = ojson::object();
  if (group_ranges) {
    ojson a = ojson::array();
    for (const auto& r : *group_ranges) a.push_back({r.first, r.second});
    j["feature_groups"] = std::move(a);
  }
  if (loss_formula) j["loss_formula"] = *loss_formula;
  if (sr_feature_weights) {
    ojson o = ojson::object();
    for (const auto& w : *sr_feature_weights) o[w.first] = w.second;
    j["sr_feature_weights"] = std::move(o);
  }
  if (lv_feature_quota)
    j["lv_feature_quota"] = {{"feature", lv_feature_quota->first},
                             {"fraction", lv_feature_quota->second}};
  if (lv_size_focus)
    j["lv_size_focus"] = {{"sizes", lv_size_focus->first}, {"fraction", lv_size_focus->second}};
  if (lv_required_features) j["lv_required_features"] = *lv_required_features;
  if (lv_required_subtree) j["lv_required_subtree"] = *lv_required_subtree;
  return j;
}

KnowledgeConfig KnowledgeConfig::from_json(const ojson& j) {
  static const std::set<std::string> known{
      "feature_groups",   "loss_formula",  "sr_feature_weights",  "lv_feature_quota",
      "lv_size_focus",    "lv_required_features", "lv_required_subtree"};
  reject_unknown_keys(j, known, "knowledge");
  KnowledgeConfig k;
  if (j.contains("feature_groups")) {
    std::vector<std::pair<int, int>> rs;
    for (const auto& e : j.at("feature_groups"))
      rs.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    k.group_ranges = std::move(rs);
  }
  if (j.contains("loss_formula")) k.loss_formula = j.at("loss_formula").get<std::string>();
  if (j.contains("sr_feature_weights")) {
    std::vector<std::pair<std::string, double>> ws;
    for (const auto& item : j.at("sr_feature_weights").items())
      ws.emplace_back(item.key(), item.value().get<double>());
    k.sr_feature_weights = std::move(ws);
  }
  if (j.contains("lv_feature_quota")) {
    const auto& q = j.at("lv_feature_quota");
    k.lv_feature_quota = {q.at("feature").get<std::string>(), q.at("fraction").get<double>()};
  }
  if (j.contains("lv_size_focus")) {
    const auto& f = j.at("lv_size_focus");
    k.lv_size_focus = {f.at("sizes").get<std::vector<int>>(), f.at("fraction").get<double>()};
  }
  if (j.contains("lv_required_features"))
    k.lv_required_features = j.at("lv_required_features").get<std::vector<std::string>>();
  if (j.contains("lv_required_subtree"))
    k.lv_required_subtree = j.at("lv_required_subtree").get<std::string>();
  return k;
}

void PipelineConfig::validate() const {
  if (use_augmentation && !use_surrogate)
    throw std::invalid_argument("augmentation requires the surrogate stage");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must lie in [0, 1)");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (fs_population < 2 || fs_generations < 1)
    throw std::invalid_argument("feature-selection population/generations out of range");
  if (!(omega_fs >= 0.0 && omega_fs <= 1.0))
    throw std::invalid_argument("omega_fs must lie in [0, 1]");
  if (!(tau_fraction >= 0.0) || !(synth_radius > 0.0) || kappa < 0)
    throw std::invalid_argument("augmentation parameters out of range");
  if (psi < 0.0) throw std::invalid_argument("psi must be non-negative");
  for (double p : psi_grid)
    if (p < 0.0) throw std::invalid_argument("psi grid entries must be non-negative");
  if (ga_population < 4 || ga_generations < 1 || ga_runs < 1)
    throw std::invalid_argument("evolutionary SR population/generations/runs out of range");
  if (!(chi > 0.0 && chi <= 1.0)) throw std::invalid_argument("chi must lie in (0, 1]");
  if (xi1 < 1 || xi2 < xi1) throw std::invalid_argument("size range [xi1, xi2] is empty");
  if (theta < 1 || rho < 1) throw std::invalid_argument("theta and rho must be positive");
  if (lv_knn < 1) throw std::invalid_argument("lv_knn must be positive");
  if (functions.empty()) throw std::invalid_argument("function set is empty");
  FunctionSet::from_names(functions);  // throws on unknown names
}

ojson PipelineConfig::to_json() const {
  ojson j;
  j["use_feature_selection"] = use_feature_selection;
  j["use_surrogate"] = use_surrogate;
  j["use_augmentation"] = use_augmentation;
  j["use_ga_sr"] = use_ga_sr;
  j["lv_mode"] = lv_mode == LvMode::Auto ? "auto" : lv_mode == LvMode::On ? "on" : "off";
  j["test_fraction"] = test_fraction;
  j["folds"] = folds;
  j["omega_fs"] = omega_fs;
  j["fs_delta"] = fs_delta;
  j["fs_population"] = fs_population;
  j["fs_generations"] = fs_generations;
  j["zeta_mean"] = zeta_mean;
  j["zeta_std"] = zeta_std;
  j["surrogate_budget"] = surrogate_budget;
  j["tau_fraction"] = tau_fraction;
  j["synth_radius"] = synth_radius;
  j["kappa"] = kappa;
  j["loss_weights"] = loss_weights;
  j["psi"] = psi;
  j["psi_grid"] = psi_grid;
  j["ga_population"] = ga_population;
  j["ga_generations"] = ga_generations;
  j["ga_runs"] = ga_runs;
  j["ga_delta"] = ga_delta;
  j["crossover_rate"] = crossover_rate;
  j["init_depth"] = init_depth;
  j["chi"] = chi;
  j["metric_std_threshold"] = metric_std_threshold;
  j["tp_threshold"] = tp_threshold;
  j["xi1"] = xi1;
  j["xi2"] = xi2;
  j["theta"] = theta;
  j["rho"] = rho;
  j["lv_knn"] = lv_knn;
  j["lv_adaptive"] = lv_adaptive;
  j["lv_stop_loss"] = lv_stop_loss;
  j["lv_wall_ms"] = lv_wall_ms;
  j["functions"] = functions;
  j["seed"] = seed;
  return j;
}

PipelineConfig PipelineConfig::from_json(const ojson& j) {
  static const std::set<std::string> known{
      "use_feature_selection", "use_surrogate", "use_augmentation", "use_ga_sr", "lv_mode",
      "test_fraction", "folds", "omega_fs", "fs_delta", "fs_population", "fs_generations",
      "zeta_mean", "zeta_std", "surrogate_budget", "tau_fraction", "synth_radius", "kappa",
      "loss_weights", "psi", "psi_grid", "ga_population", "ga_generations", "ga_runs", "ga_delta",
      "crossover_rate", "init_depth", "chi", "metric_std_threshold", "tp_threshold", "xi1", "xi2",
      "theta", "rho", "lv_knn", "lv_adaptive", "lv_stop_loss", "lv_wall_ms", "functions", "seed"};
  reject_unknown_keys(j, known, "pipeline config");
  PipelineConfig c;
  auto get = [&j](const char* key, auto& into) {
    if (j.contains(key)) into = j.at(key).template get<std::decay_t<decltype(into)>>();
  };
  get("use_feature_selection", c.use_feature_selection);
  get("use_surrogate", c.use_surrogate);
  get("use_augmentation", c.use_augmentation);
  get("use_ga_sr", c.use_ga_sr);
  if (j.contains("lv_mode")) {
    const std::string m = j.at("lv_mode").get<std::string>();
    if (m == "auto") c.lv_mode = LvMode::Auto;
    else if (m == "on") c.lv_mode = LvMode::On;
    else if (m == "off") c.lv_mode = LvMode::Off;
    else throw std::invalid_argument("lv_mode must be auto, on, or off");
  }
  get("test_fraction", c.test_fraction);
  get("folds", c.folds);
  get("omega_fs", c.omega_fs);
  get("fs_delta", c.fs_delta);
  get("fs_population", c.fs_population);
  get("fs_generations", c.fs_generations);
  get("zeta_mean", c.zeta_mean);
  get("zeta_std", c.zeta_std);
  get("surrogate_budget", c.surrogate_budget);
  get("tau_fraction", c.tau_fraction);
  get("synth_radius", c.synth_radius);
  get("kappa", c.kappa);
  get("loss_weights", c.loss_weights);
  get("psi", c.psi);
  get("psi_grid", c.psi_grid);
  get("ga_population", c.ga_population);
  get("ga_generations", c.ga_generations);
  get("ga_runs", c.ga_runs);
  get("ga_delta", c.ga_delta);
  get("crossover_rate", c.crossover_rate);
  get("init_depth", c.init_depth);
  get("chi", c.chi);
  get("metric_std_threshold", c.metric_std_threshold);
  get("tp_threshold", c.tp_threshold);
  get("xi1", c.xi1);
  get("xi2", c.xi2);
  get("theta", c.theta);
  get("rho", c.rho);
  get("lv_knn", c.lv_knn);
  get("lv_adaptive", c.lv_adaptive);
  get("lv_stop_loss", c.lv_stop_loss);
  get("lv_wall_ms", c.lv_wall_ms);
  get("functions", c.functions);
  get("seed", c.seed);
  return c;
}

std::optional<std::string> missing_feature_alert(double surrogate_r2, double sr_tp,
                                                 double r2_threshold, double tp_threshold) {
  if (!(surrogate_r2 >= r2_threshold && sr_tp <= tp_threshold)) return std::nullopt;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "possible missing dependent variable: a general-purpose model explains the data "
                "(fold-mean R^2 = %.3f >= %.2f) while the best symbolic candidate's predictions "
                "fail the distribution test (t_p = %.3f <= %.2f); consider deriving an additional "
                "feature from domain knowledge",
                surrogate_r2, r2_threshold, sr_tp, tp_threshold);
  return std::string(buf);
}

ojson RunReport::to_json(bool include_timing) const {
  ojson j;
  j["config"] = config_echo;
  j["seed"] = seed;

  ojson fs{{"ran", fs_ran}};
  if (fs_ran) {
    fs["selected"] = selected_features;
    fs["fitness"] = fs_fitness;
    fs["oracle_evals"] = fs_oracle_evals;
  }
  j["feature_selection"] = std::move(fs);

  ojson sg{{"ran", surrogate_ran}};
  if (surrogate_ran) {
    sg["provenance"] = surrogate.provenance;
    sg["nmae_mean"] = surrogate.nmae_mean;
    sg["nmae_std"] = surrogate.nmae_std;
    sg["r2_mean"] = surrogate.r2_mean;
    sg["r2_std"] = surrogate.r2_std;
    sg["mae_mean"] = surrogate.mae_mean;
    sg["mse_mean"] = surrogate.mse_mean;
    sg["t_p_mean"] = surrogate.tp_mean;
    sg["gate_passed"] = surrogate.gate_passed;
    sg["models_evaluated"] = surrogate.evaluated;
  }
  j["surrogate"] = std::move(sg);

  ojson au{{"ran", augmented}};
  au["rows_requested"] = synthetic_requested;
  au["rows_accepted"] = synthetic_accepted;
  au["shortfall"] = synthetic_shortfall;
  j["augmentation"] = std::move(au);

  ojson gj{{"ran", ga_ran}};
  if (ga_ran) {
    gj["psi"] = ga.psi;
    gj["stable"] = ga.stable;
    gj["winning_key"] = ga.winning_key;
    gj["winning_count"] = ga.winning_count;
    gj["best_index"] = ga.best_index;
    gj["metric_std"] = ga.metric_std;
    gj["best_t_p"] = ga.best_tp;
    double n = double(ga.runs.size());
    if (n > 0) {
      MetricsVector mean, var;
      for (const auto& r : ga.runs) {
        mean.mae += r.eval_metrics.mae; mean.mse += r.eval_metrics.mse;
        mean.r2 += r.eval_metrics.r2; mean.t_p += r.eval_metrics.t_p;
      }
      mean.mae /= n; mean.mse /= n; mean.r2 /= n; mean.t_p /= n;
      for (const auto& r : ga.runs) {
        var.mae += (r.eval_metrics.mae - mean.mae) * (r.eval_metrics.mae - mean.mae);
        var.mse += (r.eval_metrics.mse - mean.mse) * (r.eval_metrics.mse - mean.mse);
        var.r2 += (r.eval_metrics.r2 - mean.r2) * (r.eval_metrics.r2 - mean.r2);
        var.t_p += (r.eval_metrics.t_p - mean.t_p) * (r.eval_metrics.t_p - mean.t_p);
      }
      gj["eval_mean"] = metrics_json(mean);
      gj["eval_std"] = ojson{{"mae", std::sqrt(var.mae / n)}, {"mse", std::sqrt(var.mse / n)},
                             {"r2", std::sqrt(var.r2 / n)}, {"t_p", std::sqrt(var.t_p / n)}};
    }
    ojson runs_j = ojson::array();
    for (const auto& r : ga.runs)
      runs_j.push_back({{"infix", r.infix}, {"key_exact", r.key_exact},
                        {"key_structure", r.key_structure}, {"loss", r.loss},
                        {"train", metrics_json(r.train_metrics)},
                        {"eval", metrics_json(r.eval_metrics)}});
    gj["runs"] = std::move(runs_j);
  }
  j["ga_sr"] = std::move(gj);

  ojson lj{{"ran", lv_ran}};
  if (lv_ran) {
    lj["infix"] = lv.infix;
    lj["key_exact"] = lv.key_exact;
    lj["key_structure"] = lv.key_structure;
    lj["a"] = lv.best.a;
    lj["b"] = lv.best.b;
    lj["fit_applied"] = lv.fit_applied;
    lj["loss"] = lv.best.loss;
    lj["evaluations"] = lv.evaluations;
    lj["duplicates"] = lv.duplicates;
    lj["exhausted"] = lv.exhausted;
    lj["stopped_early"] = lv.stopped_early;
    lj["train"] = metrics_json(lv.train_metrics);
    lj["eval"] = metrics_json(lv.eval_metrics);
  }
  j["lv_sr"] = std::move(lj);

  j["alert"] = alert ? ojson(*alert) : ojson(nullptr);

  ojson eq{{"source", equation_source}};
  if (equation_source != "none") {
    eq["infix"] = equation_infix;
    eq["key_exact"] = equation_key_exact;
    eq["key_structure"] = equation_key_structure;
    eq["stable"] = stable;
    eq["train"] = metrics_json(final_train);
    eq["eval"] = metrics_json(final_eval);
  }
  j["equation"] = std::move(eq);

  ojson st = ojson::array();
  for (const auto& s : stages) {
    ojson e{{"stage", s.stage}, {"ran", s.ran}, {"note", s.note}};
    if (include_timing) e["ms"] = s.ms;
    st.push_back(std::move(e));
  }
  j["stages"] = std::move(st);

  j["incomplete"] = incomplete;
  if (incomplete) j["error"] = error;
  if (include_timing) j["total_ms"] = total_ms;
  return j;
}

RunReport run_pipeline(Dataset d, const PipelineConfig& cfg, const KnowledgeConfig& knowledge) {
  const auto t_start = Clock::now();
  RunReport rep;
  rep.seed = cfg.seed;
  rep.config_echo = ojson{{"pipeline", cfg.to_json()}, {"knowledge", knowledge.to_json()}};

  auto add_stage = [&rep](const char* name, bool ran, std::string note, double ms = 0.0) {
    rep.stages.push_back(StageEntry{name, ran, std::move(note), ms});
  };

  try {
    cfg.validate();
    d.validate();

    // junction 1: feature groups override whatever the dataset carried
    if (knowledge.group_ranges) {
      d.groups = FeatureGroups::from_ranges(*knowledge.group_ranges, d.features());
      add_stage("knowledge.groups", true,
                std::to_string(knowledge.group_ranges->size()) + " groups over " +
                    std::to_string(d.features()) + " features");
    }

    {
      auto t0 = Clock::now();
      if (d.train_rows.empty() && d.test_rows.empty() && cfg.test_fraction > 0.0)
        train_test_split(d, cfg.test_fraction, mix_seed(cfg.seed, 70));
      std::size_t ntr = d.train_rows.empty() ? d.rows() : d.train_rows.size();
      add_stage("split", true,
                std::to_string(ntr) + " train / " + std::to_string(d.test_rows.size()) + " test",
                ms_since(t0));
    }

    // junction 2: custom loss formula replaces the weighted residual norms
    LossSpec loss;
    if (knowledge.loss_formula) {
      loss = LossSpec::with_custom(*knowledge.loss_formula, cfg.psi);
      add_stage("knowledge.loss", true, *knowledge.loss_formula);
    } else {
      loss = LossSpec::make(cfg.loss_weights, cfg.psi);
    }

    if (cfg.use_feature_selection) {
      auto t0 = Clock::now();
      FsConfig fc;
      fc.omega_fs = cfg.omega_fs;
      fc.delta = cfg.fs_delta;
      fc.population = cfg.fs_population;
      fc.generations = cfg.fs_generations;
      fc.seed = mix_seed(cfg.seed, 71);
      FsResult fs = run_feature_selection(d, fc);
      rep.fs_ran = true;
      rep.fs_fitness = fs.fitness;
      rep.fs_oracle_evals = fs.oracle_evals;
      for (int c : fs.selected) rep.selected_features.push_back(d.names[std::size_t(c)]);
      std::size_t before = d.features();
      d = d.select_columns(fs.selected);
      add_stage("feature_selection", true,
                std::to_string(before) + " -> " + std::to_string(d.features()) +
                    " features, fitness " + fmtd(fs.fitness),
                ms_since(t0));
    } else {
      add_stage("feature_selection", false, "disabled");
    }

    SurrogateResult sres;
    bool gate_ok = false;
    if (cfg.use_surrogate) {
      auto t0 = Clock::now();
      std::vector<int> cols(d.features());
      std::iota(cols.begin(), cols.end(), 0);
      std::vector<std::size_t> rows = d.train_rows;
      if (rows.empty()) {
        rows.resize(d.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      }
      sres = search_model(d.X, d.y, rows, cols, cfg.folds, cfg.surrogate_budget,
                          mix_seed(cfg.seed, 72));
      gate_ok = gate_check(sres.cv, cfg.zeta_mean, cfg.zeta_std);
      rep.surrogate_ran = true;
      rep.surrogate.provenance = sres.provenance;
      rep.surrogate.nmae_mean = sres.cv.nmae_mean();
      rep.surrogate.nmae_std = sres.cv.nmae_std();
      MetricsVector m = sres.cv.mean(), sd = sres.cv.stdev();
      rep.surrogate.r2_mean = m.r2;
      rep.surrogate.r2_std = sd.r2;
      rep.surrogate.mae_mean = m.mae;
      rep.surrogate.mse_mean = m.mse;
      rep.surrogate.tp_mean = m.t_p;
      rep.surrogate.gate_passed = gate_ok;
      rep.surrogate.evaluated = sres.evaluated.size();
      add_stage("surrogate", true,
                sres.provenance + ", nmae " + fmtd(rep.surrogate.nmae_mean) + " +- " +
                    fmtd(rep.surrogate.nmae_std) + ", gate " + (gate_ok ? "passed" : "failed"),
                ms_since(t0));
    } else {
      add_stage("surrogate", false, "disabled");
    }

    if (cfg.use_augmentation && cfg.use_surrogate) {
      if (gate_ok) {
        auto t0 = Clock::now();
        SyntheticSpec spec;
        spec.tau_fraction = cfg.tau_fraction;
        spec.radius = cfg.synth_radius;
        spec.kappa = std::size_t(cfg.kappa);
        AugmentResult ar = augment(d, *sres.model, spec, mix_seed(cfg.seed, 73));
        rep.augmented = true;
        rep.synthetic_requested = ar.requested;
        rep.synthetic_accepted = ar.accepted;
        rep.synthetic_shortfall = ar.shortfall;
        add_stage("augmentation", true,
                  std::to_string(ar.accepted) + "/" + std::to_string(ar.requested) +
                      " synthetic rows accepted",
                  ms_since(t0));
      } else {
        add_stage("augmentation", false, "skipped: surrogate gate failed, SR runs on raw data");
      }
    } else if (cfg.use_augmentation) {
      add_stage("augmentation", false, "skipped: surrogate disabled");
    } else {
      add_stage("augmentation", false, "disabled");
    }

    if (cfg.use_ga_sr) {
      // junction 3: leaf-weight hints, resolved against the post-selection names
      std::vector<double> leaf_weights;
      if (knowledge.sr_feature_weights) {
        leaf_weights.assign(d.features() + 1, 1.0);
        std::string note, skipped;
        for (const auto& w : *knowledge.sr_feature_weights) {
          if (w.first == "const") {
            leaf_weights.back() *= w.second;
            note += (note.empty() ? "" : ", ") + w.first + " x" + fmtd(w.second);
            continue;
          }
          int idx = find_name(d.names, w.first);
          if (idx < 0) {
            skipped += (skipped.empty() ? "" : ", ") + w.first;
            continue;
          }
          leaf_weights[std::size_t(idx)] *= w.second;
          note += (note.empty() ? "" : ", ") + w.first + " x" + fmtd(w.second);
        }
        if (!skipped.empty()) note += "; not present after selection, skipped: " + skipped;
        add_stage("knowledge.sr_weights", true, note);
      }

      auto t0 = Clock::now();
      GaSrConfig gc;
      gc.population = cfg.ga_population;
      gc.generations = cfg.ga_generations;
      gc.init_depth = cfg.init_depth;
      gc.delta = cfg.ga_delta;
      gc.crossover_rate = cfg.crossover_rate;
      gc.psi_grid = cfg.psi_grid;
      gc.loss = loss;
      gc.leaf_weights = leaf_weights;
      gc.functions = FunctionSet::from_names(cfg.functions);
      gc.runs = cfg.ga_runs;
      gc.chi = cfg.chi;
      gc.k = cfg.folds;
      gc.metric_std_threshold = cfg.metric_std_threshold;
      gc.tp_threshold = cfg.tp_threshold;
      gc.seed = mix_seed(cfg.seed, 74);
      rep.ga = run_ga_sr(d, gc);
      rep.ga_ran = true;
      add_stage("ga_sr", true,
                std::string(rep.ga.stable ? "stable" : "unstable") + " (" +
                    std::to_string(rep.ga.winning_count) + "/" +
                    std::to_string(rep.ga.runs.size()) + " agree, psi " + fmtd(rep.ga.psi) + ")",
                ms_since(t0));
    } else {
      add_stage("ga_sr", false, "disabled");
    }

    // escalation rule: randomized SR runs iff the evolutionary verdict is
    // unstable, the evolutionary stage is off, or it is forced on
    bool lv_should = cfg.lv_mode == LvMode::On ||
                     (cfg.lv_mode == LvMode::Auto && (!cfg.use_ga_sr || !rep.ga.stable));
    if (lv_should) {
      auto t0 = Clock::now();
      SamplingStrategy strat;
      strat.knn = cfg.lv_knn;
      strat.theta = cfg.theta;
      strat.rho = cfg.rho;
      strat.adaptive_alloc = cfg.lv_adaptive;
      StructureConstraint cons;
      std::string knote, skipped;
      // junction 4: sampling hints
      if (knowledge.lv_feature_quota) {
        int idx = find_name(d.names, knowledge.lv_feature_quota->first);
        if (idx < 0) {
          skipped += "quota feature " + knowledge.lv_feature_quota->first;
        } else {
          strat.feature_quota = {idx, knowledge.lv_feature_quota->second};
          knote += "quota " + knowledge.lv_feature_quota->first + " at " +
                   fmtd(knowledge.lv_feature_quota->second);
        }
      }
      if (knowledge.lv_size_focus) {
        strat.size_focus = *knowledge.lv_size_focus;
        knote += std::string(knote.empty() ? "" : ", ") + "size focus at " +
                 fmtd(knowledge.lv_size_focus->second);
      }
      // junction 5: structural constraints
      if (knowledge.lv_required_features) {
        std::string present;
        for (const auto& n : *knowledge.lv_required_features) {
          int idx = find_name(d.names, n);
          if (idx < 0)
            skipped += std::string(skipped.empty() ? "" : ", ") + "required feature " + n;
          else {
            cons.required_features.push_back(idx);
            present += (present.empty() ? "" : " ") + n;
          }
        }
        if (!present.empty())
          knote += std::string(knote.empty() ? "" : ", ") + "required " + present;
      }
      if (knowledge.lv_required_subtree) {
        try {
          cons.required_subtree = parse_infix(*knowledge.lv_required_subtree, d.names);
          knote += std::string(knote.empty() ? "" : ", ") + "required subtree " +
                   *knowledge.lv_required_subtree;
        } catch (const std::invalid_argument&) {
          skipped += std::string(skipped.empty() ? "" : ", ") + "required subtree " +
                     *knowledge.lv_required_subtree;
        }
      }
      if (!knote.empty() || !skipped.empty()) {
        if (!skipped.empty())
          knote += std::string(knote.empty() ? "" : "; ") + "not present after selection, skipped: " + skipped;
        add_stage("knowledge.lv", true, knote);
      }

      LvConfig lc;
      lc.xi1 = cfg.xi1;
      lc.xi2 = cfg.xi2;
      lc.loss = loss;
      // a parsimony grid search settles psi inside the evolutionary stage; the
      // randomized stage reuses its choice
      if (rep.ga_ran) lc.loss.psi = rep.ga.psi;
      lc.functions = FunctionSet::from_names(cfg.functions);
      lc.stop_loss = cfg.lv_stop_loss;
      // the quality bar doubles as the fit-trust floor: candidates that cannot
      // clear it are reported on their raw scale
      lc.fit_r2_floor = cfg.chi;
      lc.wall_ms = cfg.lv_wall_ms;
      lc.seed = mix_seed(cfg.seed, 75);
      rep.lv = run_lv_sr(d, lc, strat, cons);
      rep.lv_ran = true;
      const char* why = cfg.lv_mode == LvMode::On  ? "forced on"
                        : !cfg.use_ga_sr           ? "evolutionary stage disabled"
                                                   : "evolutionary verdict unstable";
      add_stage("lv_sr", true,
                std::string(why) + "; " + std::to_string(rep.lv.evaluations) + " evaluations, " +
                    (rep.lv.exhausted ? "exhausted" : "sampled"),
                ms_since(t0));
    } else {
      add_stage("lv_sr", false,
                cfg.lv_mode == LvMode::Off ? "disabled" : "skipped: evolutionary verdict stable");
    }

    // the alert pairs the surrogate with the last symbolic stage that ran
    if (rep.surrogate_ran && (rep.lv_ran || rep.ga_ran)) {
      double sr_tp = rep.lv_ran ? rep.lv.eval_metrics.t_p : rep.ga.best_tp;
      rep.alert = missing_feature_alert(rep.surrogate.r2_mean, sr_tp);
      add_stage("alert", true, rep.alert ? *rep.alert : "no alert");
    } else {
      add_stage("alert", false, "needs both the surrogate and a symbolic stage");
    }

    if (rep.ga_ran && rep.ga.stable && !rep.ga.runs.empty()) {
      const GaRunOutcome& o = rep.ga.runs[rep.ga.best_index];
      rep.equation_source = "ga";
      rep.equation_infix = o.infix;
      rep.equation_key_exact = o.key_exact;
      rep.equation_key_structure = o.key_structure;
      rep.stable = true;
      rep.final_train = o.train_metrics;
      rep.final_eval = o.eval_metrics;
    } else if (rep.lv_ran) {
      rep.equation_source = "lv";
      rep.equation_infix = rep.lv.infix;
      rep.equation_key_exact = rep.lv.key_exact;
      rep.equation_key_structure = rep.lv.key_structure;
      rep.stable = false;
      rep.final_train = rep.lv.train_metrics;
      rep.final_eval = rep.lv.eval_metrics;
    } else if (rep.ga_ran && !rep.ga.runs.empty()) {
      const GaRunOutcome& o = rep.ga.runs[rep.ga.best_index];
      rep.equation_source = "ga";
      rep.equation_infix = o.infix;
      rep.equation_key_exact = o.key_exact;
      rep.equation_key_structure = o.key_structure;
      rep.stable = false;
      rep.final_train = o.train_metrics;
      rep.final_eval = o.eval_metrics;
    }
  } catch (const std::exception& e) {
    rep.incomplete = true;
    rep.error = e.what();
    add_stage("abort", true, e.what());
  }

  rep.total_ms = ms_since(t_start);
  return rep;
}

}  // namespace srkit
