#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace srkit {

// Feature groups partition the columns; selection picks one member per group
// (or optionally none). Default is one singleton group per column.
struct FeatureGroups {
  std::vector<std::vector<int>> groups;

  static FeatureGroups singletons(std::size_t m);
  // 1-based inclusive [lo, hi] ranges, e.g. {{1,7},{8,14},...}
  static FeatureGroups from_ranges(const std::vector<std::pair<int, int>>& ranges, std::size_t m);
  void validate(std::size_t m) const;  // throws unless a partition of 0..m-1
  bool all_singletons() const;
};

struct NoiseSpec {
  double input_level = 0.0;   // percent noise: each value v becomes v*(1 + N(0, level))
  double target_level = 0.0;  // same for the target column
  bool additive = false;      // alternative model: v + N(0, level * column sd)
};

struct Dataset {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> names;
  std::string target_name = "target";
  FeatureGroups groups;
  std::vector<std::size_t> train_rows, test_rows;
  std::vector<std::uint8_t> synthetic;  // per-row flag, grows with augmentation

  std::size_t rows() const { return X.n; }
  std::size_t features() const { return X.m; }
  void validate() const;
  // Copies the selected columns (order preserved) into a new dataset; groups
  // reset to singletons, split and synthetic flags carry over.
  Dataset select_columns(const std::vector<int>& cols) const;
};

// CSV with a header row; the column named "target" (or the last column when
// absent) is the regression target.
Dataset load_csv(const std::string& path);
std::string dataset_to_csv(const Dataset& d);
void save_csv(const Dataset& d, const std::string& path);

// Deterministic shuffled split. test_fraction in (0,1); both partitions end up
// non-empty.
void train_test_split(Dataset& d, double test_fraction, std::uint64_t seed);

// Multiplicative gaussian percent noise v*(1+eps) by default; the additive
// flag switches to v + N(0, level * column std). Deterministic under seed.
enum class NoiseMode { Input, Target, Both };
void inject_noise(Dataset& d, NoiseMode mode, double level, std::uint64_t seed,
                  bool additive = false);

// Bundled benchmark problems. Features are i.i.d. uniform on [1,10]; problem D
// generates a hidden fourth variable that depends on the visible three and
// omits its column, so no exact closed form over the visible features exists.
struct BenchmarkInfo {
  char experiment;
  std::string formula;           // over the visible feature names
  double prefactor;              // leading constant of the target structure
  std::string structure;        // formula with the constants stripped
  NoiseSpec default_noise;
  std::size_t default_samples;
};

const std::vector<BenchmarkInfo>& benchmark_catalog();
const BenchmarkInfo& benchmark_info(char experiment);

// Noiseless draw; apply inject_noise (or default_noise via the helper below)
// separately.
Dataset generate_benchmark(char experiment, std::size_t samples, std::uint64_t seed);
Dataset generate_benchmark_with_default_noise(char experiment, std::size_t samples, std::uint64_t seed);

std::string benchmark_manifest_json(char experiment, std::size_t samples, std::uint64_t seed,
                                    const NoiseSpec& applied);

}  // namespace srkit
