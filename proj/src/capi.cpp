#include "srkit.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "bench.hpp"
#include "dataset.hpp"
#include "pipeline.hpp"
#include "json.hpp"

using srkit::Dataset;

struct srk_dataset {
  Dataset d;
};

namespace {

thread_local std::string g_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

srk_status fail(srk_status code, const std::string& msg) {
  g_error = msg;
  return code;
}

// Runs fn inside a catch-all so exceptions never cross the C boundary.
template <typename Fn>
srk_status guarded(Fn&& fn) {
  try {
    g_error.clear();
    return fn();
  } catch (const std::invalid_argument& e) {
    return fail(SRK_ERR_INVALID, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(SRK_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(SRK_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(SRK_ERR_RUNTIME, "unknown error");
  }
}

std::vector<srkit::NoiseMode> parse_modes(const char* modes) {
  std::vector<srkit::NoiseMode> out;
  std::string text = modes ? modes : "";
  if (text.empty()) text = "input,target,both";
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (item == "input")
      out.push_back(srkit::NoiseMode::Input);
    else if (item == "target")
      out.push_back(srkit::NoiseMode::Target);
    else if (item == "both")
      out.push_back(srkit::NoiseMode::Both);
    else if (!item.empty())
      throw std::invalid_argument("unknown noise mode '" + item + "' (expected input, target, both)");
  }
  if (out.empty()) throw std::invalid_argument("no noise modes given");
  return out;
}

}  // namespace

extern "C" {

const char* srk_version(void) { return "0.1.0"; }

const char* srk_last_error(void) { return g_error.c_str(); }

void srk_string_free(char* s) { std::free(s); }

srk_status srk_dataset_generate(char experiment, size_t samples, uint64_t seed,
                                int apply_default_noise, srk_dataset** out) {
  return guarded([&]() {
    if (!out) return fail(SRK_ERR_INVALID, "out is null");
    Dataset d = apply_default_noise
                    ? srkit::generate_benchmark_with_default_noise(experiment, samples, seed)
                    : srkit::generate_benchmark(experiment, samples, seed);
    *out = new srk_dataset{std::move(d)};
    return SRK_OK;
  });
}

srk_status srk_dataset_load_csv(const char* path, srk_dataset** out) {
  return guarded([&]() {
    if (!path || !out) return fail(SRK_ERR_INVALID, "path or out is null");
    try {
      Dataset d = srkit::load_csv(path);
      *out = new srk_dataset{std::move(d)};
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      return fail(SRK_ERR_IO, e.what());
    }
    return SRK_OK;
  });
}

srk_status srk_dataset_save_csv(const srk_dataset* d, const char* path) {
  return guarded([&]() {
    if (!d || !path) return fail(SRK_ERR_INVALID, "dataset or path is null");
    try {
      srkit::save_csv(d->d, path);
    } catch (const std::exception& e) {
      return fail(SRK_ERR_IO, e.what());
    }
    return SRK_OK;
  });
}

size_t srk_dataset_rows(const srk_dataset* d) { return d ? d->d.rows() : 0; }

size_t srk_dataset_features(const srk_dataset* d) { return d ? d->d.features() : 0; }

void srk_dataset_free(srk_dataset* d) { delete d; }

srk_status srk_generation_manifest(char experiment, size_t samples, uint64_t seed,
                                   int with_default_noise, char** out_json) {
  return guarded([&]() {
    if (!out_json) return fail(SRK_ERR_INVALID, "out_json is null");
    srkit::NoiseSpec applied{0.0, 0.0};
    if (with_default_noise) applied = srkit::benchmark_info(experiment).default_noise;
    *out_json = dup_string(srkit::benchmark_manifest_json(experiment, samples, seed, applied));
    return SRK_OK;
  });
}

srk_status srk_fit(const srk_dataset* d, const char* pipeline_json, const char* knowledge_json,
                   int include_timing, char** out_report_json) {
  return guarded([&]() {
    if (!d || !out_report_json) return fail(SRK_ERR_INVALID, "dataset or out_report_json is null");
    srkit::PipelineConfig cfg;
    if (pipeline_json && *pipeline_json)
      cfg = srkit::PipelineConfig::from_json(nlohmann::ordered_json::parse(pipeline_json));
    srkit::KnowledgeConfig kc;
    if (knowledge_json && *knowledge_json)
      kc = srkit::KnowledgeConfig::from_json(nlohmann::ordered_json::parse(knowledge_json));
    srkit::RunReport rep = srkit::run_pipeline(d->d, cfg, kc);
    *out_report_json = dup_string(rep.to_json(include_timing != 0).dump(2) + "\n");
    if (rep.incomplete) return fail(SRK_ERR_RUNTIME, rep.error.empty() ? "pipeline incomplete" : rep.error);
    return SRK_OK;
  });
}

srk_status srk_benchmark(char experiment, size_t samples, int repeats, uint64_t seed,
                         char** out_json) {
  return guarded([&]() {
    if (!out_json) return fail(SRK_ERR_INVALID, "out_json is null");
    if (repeats < 1) return fail(SRK_ERR_INVALID, "repeats must be >= 1");
    srkit::BenchmarkOutcome out = srkit::run_benchmark(experiment, samples, repeats, seed);
    *out_json = dup_string(out.to_json().dump(2) + "\n");
    return SRK_OK;
  });
}

srk_status srk_knowledge_ablation(int repeats, uint64_t seed, int corners_only, size_t samples,
                                  char** out_csv) {
  return guarded([&]() {
    if (!out_csv) return fail(SRK_ERR_INVALID, "out_csv is null");
    if (repeats < 1) return fail(SRK_ERR_INVALID, "repeats must be >= 1");
    auto rows = srkit::knowledge_ablation(repeats, seed, corners_only != 0, samples);
    *out_csv = dup_string(srkit::ablation_csv(rows));
    return SRK_OK;
  });
}

srk_status srk_noise_sweep(char experiment, const double* levels, size_t n_levels,
                           const char* modes, int repeats, uint64_t seed, char** out_csv) {
  return guarded([&]() {
    if (!out_csv) return fail(SRK_ERR_INVALID, "out_csv is null");
    if (!levels || n_levels == 0) return fail(SRK_ERR_INVALID, "at least one noise level is required");
    if (repeats < 1) return fail(SRK_ERR_INVALID, "repeats must be >= 1");
    std::vector<double> lv(levels, levels + n_levels);
    auto cells = srkit::noise_sweep(experiment, lv, parse_modes(modes), repeats, seed);
    *out_csv = dup_string(srkit::sweep_csv(cells));
    return SRK_OK;
  });
}

}  // extern "C"
