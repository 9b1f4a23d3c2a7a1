#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shiftdiag/feature_select.hpp"
#include "shiftdiag/forest.hpp"
#include "shiftdiag/grid.hpp"
#include "shiftdiag/indicator_matrix.hpp"
#include "shiftdiag/signal_sim.hpp"

namespace shiftdiag {

struct SplitSpec {
  std::size_t train_normal = 500;
  // Shared evenly by the three shift kinds, remainder to the earlier kinds.
  std::size_t train_anomalous = 500;
  std::size_t groups = 10;
  std::size_t group_size = 500;
  // Deal the test pool to groups class by class instead of at random.
  bool stratify_groups = false;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::vector<std::size_t>> groups;
};

// Stratified training draw plus disjoint test groups from the remainder.
// Throws kSplit when a quota or the group layout cannot be met.
DatasetSplit split_dataset(std::span<const LabeledSignal> dataset, const SplitSpec& spec,
                           std::uint64_t seed);

struct ExperimentConfig {
  DatasetSpec dataset;
  // Empty means the built-in grid-810 manifest.
  std::optional<std::filesystem::path> grid_manifest;
  SplitSpec split;
  ForestParams forest;
  // Empty means default_schedule(grid size).
  std::vector<std::size_t> schedule;
  std::size_t top_k = 10;
  std::uint64_t root_seed = 0;
  // Empty disables artifact output.
  std::filesystem::path out_dir;
  unsigned threads = 0;
  bool quick = false;

  // Full-size protocol: 6000 signals, 1000 train, 10 x 500 test, 500 trees.
  static ExperimentConfig full(Family family, std::uint64_t seed);
  // CI profile: 1200 signals, 400 train, 8 x 100 test, 200 trees, short schedule.
  static ExperimentConfig quick_profile(Family family, std::uint64_t seed);
};

// Overrides fields of `base` with those present in a JSON config file.
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        ExperimentConfig base);

struct TopEntry {
  std::size_t rank = 0;
  std::string config_id;
  TestKind test = TestKind::kMannWhitneyU;
  double relevance = 0.0;
  double score = 0.0;
};

struct ExperimentReport {
  Family family = Family::kA;
  std::uint64_t root_seed = 0;
  std::size_t signals = 0;
  std::size_t grid_size = 0;
  std::size_t train_rows = 0;
  std::vector<std::size_t> group_sizes;
  Evaluation full_grid;
  std::vector<TopEntry> top;
  std::vector<ForwardPoint> curve;
  std::vector<std::string> warnings;

  const ForwardPoint* at_k(std::size_t k) const;
  std::size_t top_count(TestKind test) const;
};

// Failure of one pipeline stage; `stage` names it and `exit_code` is the
// process status the CLI reports for it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

// Stage exit codes shared with the CLI.
namespace stage_code {
inline constexpr int kSimulate = 10;
inline constexpr int kIndicators = 11;
inline constexpr int kSplit = 12;
inline constexpr int kTrain = 13;
inline constexpr int kSelect = 14;
inline constexpr int kForward = 15;
inline constexpr int kReport = 16;
}  // namespace stage_code

// simulate -> indicators -> split -> full-grid forest -> mRMR (train rows
// only) -> forward curve. Writes every intermediate artifact to out_dir.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Tab-separated top-k table: rank, type, level, window length, smoothed, step.
std::string emit_topk_table(const Ranking& ranking, std::size_t k);

// Per-k rows: k, train, oob, test min/q1/median/q3/max, mean, std.
std::string emit_curve_data(std::span<const ForwardPoint> curve);

// Linear-interpolated quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);

std::string report_to_json(const ExperimentReport& report);
std::string report_summary(const ExperimentReport& report);

}  // namespace shiftdiag
