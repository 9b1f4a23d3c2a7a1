#include "shiftdiag/signal_sim.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "shiftdiag/error.hpp"
#include "shiftdiag/parallel.hpp"

namespace shiftdiag {

std::string_view to_string(Family family) {
  return family == Family::kA ? "A" : "B";
}

std::string_view to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kNone: return "none";
    case AnomalyKind::kCorruptedNone: return "corrupted";
    case AnomalyKind::kVarianceShift: return "variance";
    case AnomalyKind::kMeanShift: return "mean";
    case AnomalyKind::kSlopeShift: return "slope";
  }
  return "none";
}

Family parse_family(std::string_view text) {
  if (text == "A" || text == "a") return Family::kA;
  if (text == "B" || text == "b") return Family::kB;
  throw Error(ErrorCode::kConfig, fmt::format("unknown family '{}'", text));
}

AnomalyKind parse_kind(std::string_view text) {
  for (AnomalyKind kind : kAllKinds) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(ErrorCode::kConfig, fmt::format("unknown anomaly kind '{}'", text));
}

std::size_t ClassCounts::count(AnomalyKind kind) const {
  switch (kind) {
    case AnomalyKind::kNone: return none;
    case AnomalyKind::kCorruptedNone: return corrupted;
    case AnomalyKind::kVarianceShift: return variance;
    case AnomalyKind::kMeanShift: return mean;
    case AnomalyKind::kSlopeShift: return slope;
  }
  return 0;
}

DatasetSpec DatasetSpec::defaults(Family family, std::uint64_t seed) {
  DatasetSpec spec;
  spec.family = family;
  spec.seed = seed;
  if (family == Family::kB) {
    spec.counts.none = 1800;
    spec.counts.corrupted = 1200;
  }
  return spec;
}

std::size_t sample_change_point(std::size_t n, Rng& rng) {
  if (n < 10) {
    throw Error(ErrorCode::kInvalidLength,
                fmt::format("signal length {} is below the minimum of 10", n));
  }
  const auto lo = static_cast<std::int64_t>((2 * n + 9) / 10);
  const auto hi = static_cast<std::int64_t>((8 * n) / 10);
  return static_cast<std::size_t>(rng.uniform_int(lo, hi));
}

Anomaly draw_anomaly(Family family, AnomalyKind kind, const SimulationParams& params,
                     Rng& rng) {
  switch (kind) {
    case AnomalyKind::kNone:
    case AnomalyKind::kCorruptedNone:
      return {kind, std::nullopt};
    case AnomalyKind::kVarianceShift:
      if (family == Family::kA) {
        return {kind, rng.uniform(params.sigma_lo, params.sigma_hi)};
      }
      return {kind, static_cast<double>(
                        rng.uniform_int(params.shift_dof_lo, params.shift_dof_hi))};
    case AnomalyKind::kMeanShift:
      return {kind, rng.uniform(params.mu_lo, params.mu_hi)};
    case AnomalyKind::kSlopeShift:
      return {kind, rng.uniform(params.slope_lo, params.slope_hi)};
  }
  return {};
}

namespace {

std::size_t draw_length(std::size_t lo, std::size_t hi, Rng& rng) {
  return static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

void require_magnitude(const Anomaly& anomaly) {
  if (is_anomalous(anomaly.kind) && !anomaly.magnitude) {
    throw Error(ErrorCode::kConfig,
                fmt::format("{} anomaly needs a magnitude", to_string(anomaly.kind)));
  }
}

}  // namespace

LabeledSignal gen_signal_a(AnomalyKind kind, Rng& rng, const SimulationParams& params) {
  if (kind == AnomalyKind::kCorruptedNone) {
    throw Error(ErrorCode::kWrongFamily, "corrupted signals only exist in set B");
  }
  return gen_signal_a(draw_anomaly(Family::kA, kind, params, rng), rng, params);
}

LabeledSignal gen_signal_a(const Anomaly& anomaly, Rng& rng,
                           const SimulationParams& params) {
  if (anomaly.kind == AnomalyKind::kCorruptedNone) {
    throw Error(ErrorCode::kWrongFamily, "corrupted signals only exist in set B");
  }
  require_magnitude(anomaly);

  LabeledSignal signal;
  signal.family = Family::kA;
  signal.label = anomaly;
  const std::size_t n = draw_length(params.min_length_a, params.max_length_a, rng);
  if (is_anomalous(anomaly.kind)) signal.change_point = sample_change_point(n, rng);

  signal.values.resize(n);
  const std::size_t tau = signal.change_point.value_or(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.normal();
    if (i < tau) {
      signal.values[i] = z;
      continue;
    }
    const double shift = *anomaly.magnitude;
    switch (anomaly.kind) {
      case AnomalyKind::kVarianceShift:
        signal.values[i] = shift * z;
        break;
      case AnomalyKind::kMeanShift:
        signal.values[i] = shift + z;
        break;
      case AnomalyKind::kSlopeShift:
        signal.values[i] = shift * static_cast<double>(i - tau) + z;
        break;
      default:
        signal.values[i] = z;
    }
  }
  return signal;
}

LabeledSignal gen_signal_b(AnomalyKind kind, Rng& rng, const SimulationParams& params) {
  return gen_signal_b(draw_anomaly(Family::kB, kind, params, rng), rng, params);
}

LabeledSignal gen_signal_b(const Anomaly& anomaly, Rng& rng,
                           const SimulationParams& params) {
  require_magnitude(anomaly);
  if (anomaly.kind == AnomalyKind::kVarianceShift) {
    const double dof = *anomaly.magnitude;
    if (dof < 1.0 || dof != std::floor(dof)) {
      throw Error(ErrorCode::kWrongFamily,
                  fmt::format("set B variance shift needs integral degrees of "
                              "freedom, got {}",
                              dof));
    }
  }

  LabeledSignal signal;
  signal.family = Family::kB;
  signal.label = anomaly;
  const std::size_t n = draw_length(params.min_length_b, params.max_length_b, rng);
  if (is_anomalous(anomaly.kind)) signal.change_point = sample_change_point(n, rng);

  signal.values.resize(n);
  const std::size_t tau = signal.change_point.value_or(n);
  const double period = params.sine_period_fraction * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double value;
    if (i >= tau && anomaly.kind == AnomalyKind::kVarianceShift) {
      value = rng.chi_squared(static_cast<int>(*anomaly.magnitude));
    } else {
      value = rng.chi_squared(params.base_dof_b);
    }
    if (anomaly.kind == AnomalyKind::kCorruptedNone) {
      value += params.sine_amplitude *
               std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / period +
                        params.sine_phase);
    } else if (i >= tau && anomaly.kind == AnomalyKind::kMeanShift) {
      value += *anomaly.magnitude;
    } else if (i >= tau && anomaly.kind == AnomalyKind::kSlopeShift) {
      value += *anomaly.magnitude * static_cast<double>(i - tau);
    }
    signal.values[i] = value;
  }
  return signal;
}

std::vector<LabeledSignal> gen_dataset(const DatasetSpec& spec, unsigned threads) {
  if (spec.family == Family::kA && spec.counts.corrupted > 0) {
    throw Error(ErrorCode::kWrongFamily, "corrupted signals only exist in set B");
  }
  std::vector<AnomalyKind> kinds;
  kinds.reserve(spec.counts.total());
  for (AnomalyKind kind : kAllKinds) kinds.insert(kinds.end(), spec.counts.count(kind), kind);

  std::vector<LabeledSignal> out(kinds.size());
  parallel_for(kinds.size(), threads, [&](std::size_t i) {
    Rng rng(derive_seed(spec.seed, stream::kDataset, i));
    out[i] = spec.family == Family::kA ? gen_signal_a(kinds[i], rng, spec.params)
                                       : gen_signal_b(kinds[i], rng, spec.params);
    out[i].id = fmt::format("{}-{:05d}", to_string(spec.family), i);
  });
  return out;
}

}  // namespace shiftdiag
