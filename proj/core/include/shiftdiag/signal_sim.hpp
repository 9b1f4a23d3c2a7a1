#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shiftdiag/rng.hpp"

namespace shiftdiag {

enum class Family { kA, kB };

enum class AnomalyKind {
  kNone,
  kCorruptedNone,
  kVarianceShift,
  kMeanShift,
  kSlopeShift,
};

inline constexpr std::array<AnomalyKind, 5> kAllKinds = {
    AnomalyKind::kNone, AnomalyKind::kCorruptedNone,
    AnomalyKind::kVarianceShift, AnomalyKind::kMeanShift,
    AnomalyKind::kSlopeShift};

std::string_view to_string(Family family);
std::string_view to_string(AnomalyKind kind);
Family parse_family(std::string_view text);
AnomalyKind parse_kind(std::string_view text);

// True for the three shift kinds; these are the positive class.
constexpr bool is_anomalous(AnomalyKind kind) {
  return kind == AnomalyKind::kVarianceShift ||
         kind == AnomalyKind::kMeanShift || kind == AnomalyKind::kSlopeShift;
}

// Kind plus the drawn shift magnitude. For set A variance shifts the
// magnitude is the post-change standard deviation; for set B it is the
// post-change chi-squared degrees of freedom.
struct Anomaly {
  AnomalyKind kind = AnomalyKind::kNone;
  std::optional<double> magnitude;
};

struct LabeledSignal {
  std::string id;
  Family family = Family::kA;
  Anomaly label;
  // Index of the first post-change observation.
  std::optional<std::size_t> change_point;
  std::vector<double> values;

  std::size_t length() const { return values.size(); }
  bool anomalous() const { return is_anomalous(label.kind); }
};

// Parameter ranges of the two benchmark families.
struct SimulationParams {
  std::size_t min_length_a = 100, max_length_a = 200;
  std::size_t min_length_b = 100, max_length_b = 150;
  double sigma_lo = 1.01, sigma_hi = 5.0;   // set A variance shift (sd)
  double mu_lo = 1.01, mu_hi = 5.0;         // mean shift, both sets
  double slope_lo = 0.02, slope_hi = 3.0;   // slope shift, both sets
  int base_dof_b = 4;
  int shift_dof_lo = 8, shift_dof_hi = 16;
  double sine_amplitude = 1.0;
  double sine_period_fraction = 2.0 / 3.0;
  double sine_phase = 0.0;
};

struct ClassCounts {
  std::size_t none = 3000;
  std::size_t corrupted = 0;
  std::size_t variance = 1000;
  std::size_t mean = 1000;
  std::size_t slope = 1000;

  std::size_t total() const { return none + corrupted + variance + mean + slope; }
  std::size_t count(AnomalyKind kind) const;
};

struct DatasetSpec {
  Family family = Family::kA;
  ClassCounts counts;
  std::uint64_t seed = 0;
  SimulationParams params;

  // 3000 normal + 3 x 1000 shifted; set B marks 1200 normals as corrupted.
  static DatasetSpec defaults(Family family, std::uint64_t seed);
};

// Index uniform on [ceil(2n/10), floor(8n/10)]. Throws kInvalidLength if n < 10.
std::size_t sample_change_point(std::size_t n, Rng& rng);

// Draw the kind's magnitude from the family's ranges.
Anomaly draw_anomaly(Family family, AnomalyKind kind, const SimulationParams& params,
                     Rng& rng);

// Gaussian residual family. Throws kWrongFamily for set-B-only kinds.
LabeledSignal gen_signal_a(AnomalyKind kind, Rng& rng,
                           const SimulationParams& params = {});
// Same with a fixed magnitude (used by tests and power studies).
LabeledSignal gen_signal_a(const Anomaly& anomaly, Rng& rng,
                           const SimulationParams& params = {});

// Chi-squared(4) noise family with slow sinusoidal corruption.
LabeledSignal gen_signal_b(AnomalyKind kind, Rng& rng,
                           const SimulationParams& params = {});
LabeledSignal gen_signal_b(const Anomaly& anomaly, Rng& rng,
                           const SimulationParams& params = {});

// Signals ordered by kind (None, Corrupted, Variance, Mean, Slope); signal i
// draws from its own stream derived from (seed, i), so the result does not
// depend on scheduling.
std::vector<LabeledSignal> gen_dataset(const DatasetSpec& spec, unsigned threads = 0);

}  // namespace shiftdiag
