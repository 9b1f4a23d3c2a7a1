#include "shiftdiag/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "shiftdiag/error.hpp"

namespace shiftdiag {

std::vector<double> window_p_values(std::span<const double> signal, TestKind test,
                                    const WindowPlan& plan) {
  const std::size_t m = window_count(signal.size(), plan);
  if (m == 0) {
    throw Error(ErrorCode::kEmptyPlan,
                fmt::format("signal of length {} cannot hold a window of {} (step {})",
                            signal.size(), plan.window_length, plan.step));
  }
  const std::size_t h = plan.half();
  std::vector<double> p(m);
  for (std::size_t w = 0; w < m; ++w) {
    const std::size_t start = w * plan.step;
    const auto before = signal.subspan(start, h);
    const auto after = signal.subspan(start + h, h);
    try {
      p[w] = run_test(test, before, after).p_value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateSample) throw;
      p[w] = 1.0;
    }
  }
  return p;
}

DecisionSequence window_decisions(std::span<const double> signal, TestKind test,
                                  const WindowPlan& plan, double level) {
  const std::vector<double> p = window_p_values(signal, test, plan);
  DecisionSequence out;
  out.bits.reserve(p.size());
  for (double value : p) out.bits.push_back(value < level ? 1 : 0);
  return out;
}

bool aggregate(const DecisionSequence& decisions, const AggregationRule& rule) {
  const std::size_t m = decisions.windows();
  if (m == 0) throw Error(ErrorCode::kEmptyPlan, "no window decisions to aggregate");
  const auto& bits = decisions.bits;
  switch (rule.kind) {
    case RuleKind::kBase:
      return std::any_of(bits.begin(), bits.end(), [](auto b) { return b != 0; });
    case RuleKind::kRateAtLeast: {
      const auto ones = static_cast<double>(std::count(bits.begin(), bits.end(), 1));
      return ones >= rule.beta * static_cast<double>(m);
    }
    case RuleKind::kConsecutiveRun: {
      const auto needed =
          static_cast<std::size_t>(std::ceil(rule.beta * static_cast<double>(m)));
      std::size_t run = 0;
      for (auto b : bits) {
        run = b ? run + 1 : 0;
        if (run >= std::max<std::size_t>(needed, 1)) return true;
      }
      return false;
    }
    case RuleKind::kKofN: {
      if (m < rule.n_consec) {
        throw Error(ErrorCode::kInsufficientWindows,
                    fmt::format("{} needs {} windows, have {}", to_string(rule),
                                rule.n_consec, m));
      }
      std::size_t in_window = 0;
      for (std::size_t i = 0; i < m; ++i) {
        in_window += bits[i];
        if (i >= rule.n_consec) in_window -= bits[i - rule.n_consec];
        if (i + 1 >= rule.n_consec && in_window >= rule.k) return true;
      }
      return false;
    }
  }
  return false;
}

namespace {

struct PValueKey {
  TestKind test;
  std::size_t window_length;
  bool smoothed;

  friend bool operator==(const PValueKey&, const PValueKey&) = default;
};

struct PValueEntry {
  PValueKey key;
  std::optional<std::vector<double>> p;  // step-1 sequence; empty if no window fits
};

}  // namespace

IndicatorVector compute_indicator_vector(std::span<const double> values, const Grid& grid) {
  if (grid.empty()) throw Error(ErrorCode::kEmptyPlan, "indicator grid is empty");
  const std::size_t n = values.size();

  std::vector<double> smoothed;
  bool need_smoothing = std::any_of(grid.begin(), grid.end(),
                                    [](const IndicatorConfig& c) { return c.smoothed; });
  if (need_smoothing && n >= kSmoothingWidth) smoothed = moving_average(values, kSmoothingWidth);

  std::vector<PValueEntry> cache;
  auto p_values_for = [&](const IndicatorConfig& config,
                          const WindowPlan& plan) -> const std::optional<std::vector<double>>& {
    const PValueKey key{config.test, plan.window_length, config.smoothed};
    for (const PValueEntry& entry : cache) {
      if (entry.key == key) return entry.p;
    }
    std::span<const double> source = values;
    if (config.smoothed) source = smoothed;
    PValueEntry entry{key, std::nullopt};
    const WindowPlan unit{plan.window_length, 1};
    if (window_count(source.size(), unit) > 0) {
      entry.p = window_p_values(source, config.test, unit);
    }
    cache.push_back(std::move(entry));
    return cache.back().p;
  };

  IndicatorVector out;
  out.bits.assign(grid.size(), 0);
  DecisionSequence decisions;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const IndicatorConfig& config = grid[i];
    const WindowPlan plan = config.resolve(n);
    const auto& p = p_values_for(config, plan);
    if (!p) {
      out.shortfalls.push_back(i);
      continue;
    }
    decisions.bits.clear();
    for (std::size_t w = 0; w < p->size(); w += plan.step) {
      decisions.bits.push_back((*p)[w] < config.level ? 1 : 0);
    }
    if (config.rule.kind == RuleKind::kKofN && decisions.windows() < config.rule.n_consec) {
      out.shortfalls.push_back(i);
      continue;
    }
    out.bits[i] = aggregate(decisions, config.rule) ? 1 : 0;
  }
  return out;
}

IndicatorVector compute_indicator_vector(const LabeledSignal& signal, const Grid& grid) {
  return compute_indicator_vector(signal.values, grid);
}

}  // namespace shiftdiag
