// Command-line front end. Talks to the engine exclusively through the C API.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "srkit.h"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

// Takes ownership of the C string.
std::string take(char* s) {
  std::string out = s ? s : "";
  srk_string_free(s);
  return out;
}

struct cli_error : std::runtime_error {
  explicit cli_error(const std::string& what) : std::runtime_error(what + ": " + srk_last_error()) {}
};

char experiment_letter(const std::string& s) {
  if (s.size() != 1) throw std::runtime_error("experiment must be a single letter");
  return s[0];
}

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  if (out.empty()) throw std::runtime_error("--levels needs at least one value");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equation discovery from tabular data"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "run the discovery pipeline on a csv");
  std::string data_path, config_path, knowledge_path, report_path;
  bool no_timing = false;
  fit->add_option("--data", data_path, "input csv (header row, last or 'target' column is y)")
      ->required();
  fit->add_option("--config", config_path, "pipeline config json");
  fit->add_option("--knowledge", knowledge_path, "expert-hint json");
  fit->add_option("--out", report_path, "report json path")->required();
  fit->add_flag("--no-timing", no_timing,
                "omit wall-clock fields so identical seeds give byte-identical reports");

  // generate
  auto* gen = app.add_subcommand("generate", "draw one of the bundled benchmark datasets");
  std::string gen_exp, gen_out;
  std::size_t gen_samples = 0;
  std::uint64_t gen_seed = 0;
  bool noiseless = false;
  gen->add_option("--experiment", gen_exp, "problem letter A..E")->required();
  gen->add_option("--samples", gen_samples, "number of rows")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "csv path")->required();
  gen->add_flag("--noiseless", noiseless, "skip the problem's default noise");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "repeated pipeline runs on a bundled problem");
  std::string bench_exp, bench_dir;
  int bench_repeats = 20;
  std::size_t bench_samples = 0;
  std::uint64_t bench_seed = 0;
  bool corners = false;
  bench->add_option("--experiment", bench_exp, "problem letter A..F")->required();
  bench->add_option("--repeats", bench_repeats, "pipeline runs per setting");
  bench->add_option("--samples", bench_samples, "rows per dataset (0 = problem default)");
  bench->add_option("--seed", bench_seed, "harness seed");
  bench->add_option("--out", bench_dir, "output directory")->required();
  bench->add_flag("--corners", corners, "experiment F: only all-off and all-on hint rows");

  // noise-sweep
  auto* sweep = app.add_subcommand("noise-sweep", "recovery rate vs noise level");
  std::string sweep_exp, sweep_levels, sweep_out;
  std::string sweep_modes = "input,target,both";
  int sweep_repeats = 20;
  std::uint64_t sweep_seed = 0;
  sweep->add_option("--experiment", sweep_exp, "problem letter A or C")->required();
  sweep->add_option("--levels", sweep_levels, "comma-separated noise fractions, e.g. 0,0.02,0.05")
      ->required();
  sweep->add_option("--modes", sweep_modes, "subset of input,target,both");
  sweep->add_option("--repeats", sweep_repeats, "runs per cell");
  sweep->add_option("--seed", sweep_seed, "harness seed");
  sweep->add_option("--out", sweep_out, "csv path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      srk_dataset* d = nullptr;
      if (srk_dataset_load_csv(data_path.c_str(), &d) != SRK_OK) throw cli_error("load");
      std::string cfg = config_path.empty() ? "" : read_file(config_path);
      std::string hints = knowledge_path.empty() ? "" : read_file(knowledge_path);
      char* report = nullptr;
      srk_status st = srk_fit(d, cfg.c_str(), hints.c_str(), no_timing ? 0 : 1, &report);
      srk_dataset_free(d);
      if (st != SRK_OK && !report) throw cli_error("fit");
      std::string why = srk_last_error();
      write_file(report_path, take(report));
      std::printf("report written to %s\n", report_path.c_str());
      if (st != SRK_OK) {
        std::fprintf(stderr, "warning: run incomplete: %s\n", why.c_str());
        return 2;
      }
      return 0;
    }

    if (*gen) {
      char exp = experiment_letter(gen_exp);
      srk_dataset* d = nullptr;
      if (srk_dataset_generate(exp, gen_samples, gen_seed, noiseless ? 0 : 1, &d) != SRK_OK)
        throw cli_error("generate");
      srk_status st = srk_dataset_save_csv(d, gen_out.c_str());
      srk_dataset_free(d);
      if (st != SRK_OK) throw cli_error("save");
      char* manifest = nullptr;
      if (srk_generation_manifest(exp, gen_samples, gen_seed, noiseless ? 0 : 1, &manifest) != SRK_OK)
        throw cli_error("manifest");
      write_file(gen_out + ".manifest.json", take(manifest));
      std::printf("wrote %s (+ manifest)\n", gen_out.c_str());
      return 0;
    }

    if (*bench) {
      char exp = experiment_letter(bench_exp);
      std::filesystem::create_directories(bench_dir);
      if (exp == 'F') {
        char* csv = nullptr;
        if (srk_knowledge_ablation(bench_repeats, bench_seed, corners ? 1 : 0, bench_samples,
                                   &csv) != SRK_OK)
          throw cli_error("benchmark");
        std::string path = bench_dir + "/knowledge_grid.csv";
        write_file(path, take(csv));
        std::printf("wrote %s\n", path.c_str());
      } else {
        char* json = nullptr;
        if (srk_benchmark(exp, bench_samples, bench_repeats, bench_seed, &json) != SRK_OK)
          throw cli_error("benchmark");
        std::string path = bench_dir + std::string("/benchmark_") + exp + ".json";
        write_file(path, take(json));
        std::printf("wrote %s\n", path.c_str());
      }
      return 0;
    }

    if (*sweep) {
      std::vector<double> levels = parse_levels(sweep_levels);
      char* csv = nullptr;
      if (srk_noise_sweep(experiment_letter(sweep_exp), levels.data(), levels.size(),
                          sweep_modes.c_str(), sweep_repeats, sweep_seed, &csv) != SRK_OK)
        throw cli_error("noise-sweep");
      write_file(sweep_out, take(csv));
      std::printf("wrote %s\n", sweep_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  return 0;
}
