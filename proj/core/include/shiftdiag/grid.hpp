#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "shiftdiag/stat_tests.hpp"

namespace shiftdiag {

enum class RuleKind { kBase, kRateAtLeast, kConsecutiveRun, kKofN };

// Reduction of a window decision sequence to one bit.
struct AggregationRule {
  RuleKind kind = RuleKind::kBase;
  double beta = 0.0;        // rate / run families
  std::size_t k = 0;        // k-of-n family
  std::size_t n_consec = 0;

  static AggregationRule base() { return {}; }
  static AggregationRule rate_at_least(double beta) {
    return {RuleKind::kRateAtLeast, beta, 0, 0};
  }
  static AggregationRule consecutive_run(double beta) {
    return {RuleKind::kConsecutiveRun, beta, 0, 0};
  }
  static AggregationRule k_of_n(std::size_t k, std::size_t n) {
    return {RuleKind::kKofN, 0.0, k, n};
  }

  friend bool operator==(const AggregationRule&, const AggregationRule&) = default;
};

// Manifest spelling: "base", "rate(0.1)", "run(0.3)", "kofn(2,3)".
std::string to_string(const AggregationRule& rule);
AggregationRule parse_rule(std::string_view text);

// Window of `window_length` observations split at its center into two samples
// of window_length / 2; consecutive windows start `step` observations apart.
struct WindowPlan {
  std::size_t window_length = 0;
  std::size_t step = 1;

  std::size_t half() const { return window_length / 2; }
};

// Number of window positions in a signal of n_effective values (0 when none fit).
std::size_t window_count(std::size_t n_effective, const WindowPlan& plan);

// A fully parameterized binary indicator. The configured window length is
// nominal: it resolves to min(n - 2, window_length) for a signal of length n.
struct IndicatorConfig {
  TestKind test = TestKind::kMannWhitneyU;
  double level = 0.05;
  std::size_t window_length = 50;
  std::size_t step = 1;
  bool smoothed = false;
  AggregationRule rule;

  WindowPlan resolve(std::size_t signal_length) const;
  // Stable id in the tabular style, e.g. "confu(2,3) / 0.005 / 50 / 5".
  std::string id() const;

  friend bool operator==(const IndicatorConfig&, const IndicatorConfig&) = default;
};

// Smoothing applied by smoothed configs.
inline constexpr std::size_t kSmoothingWidth = 5;

// One manifest entry expands to the cross product of its lists, in the
// nesting order test > rule > level > window > step > smoothing.
struct ManifestEntry {
  std::vector<TestKind> tests;
  std::vector<AggregationRule> rules;
  std::vector<double> levels;
  std::vector<std::size_t> windows;
  std::vector<std::size_t> steps;
  std::vector<bool> smoothing;
};

struct GridManifest {
  std::string name;
  std::vector<ManifestEntry> entries;
};

using Grid = std::vector<IndicatorConfig>;

GridManifest parse_manifest(std::string_view json_text);
GridManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const GridManifest& manifest);

// The shipped "grid-810" manifest (also installed as data/grid-810.json).
std::string_view default_manifest_json();
GridManifest default_manifest();

// Ordered, duplicate-free expansion. Throws kManifest naming duplicates.
Grid build_grid(const GridManifest& manifest);

}  // namespace shiftdiag
