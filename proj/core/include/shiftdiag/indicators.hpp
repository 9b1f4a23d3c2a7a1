#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shiftdiag/grid.hpp"
#include "shiftdiag/signal_sim.hpp"
#include "shiftdiag/stat_tests.hpp"

namespace shiftdiag {

// One test decision per window position; 1 means the test rejected.
struct DecisionSequence {
  std::vector<std::uint8_t> bits;

  std::size_t windows() const { return bits.size(); }
};

// p-value of `test` at every window position (step applied). Window p holds
// samples [p*step, p*step + h) and [p*step + h, p*step + 2h), h = L / 2.
// Zero-variance windows of the F test report p = 1.
// Throws kEmptyPlan when no window fits.
std::vector<double> window_p_values(std::span<const double> signal, TestKind test,
                                    const WindowPlan& plan);

// Bit = (p < level) per window position.
DecisionSequence window_decisions(std::span<const double> signal, TestKind test,
                                  const WindowPlan& plan, double level);

// Base: any rejection. RateAtLeast: ones/m >= beta. ConsecutiveRun: a run of
// at least ceil(beta*m) ones. KofN: some n consecutive windows hold >= k ones.
// Throws kEmptyPlan on m = 0 and kInsufficientWindows on KofN with m < n.
bool aggregate(const DecisionSequence& decisions, const AggregationRule& rule);

struct IndicatorVector {
  std::vector<std::uint8_t> bits;
  // Grid positions forced to 0 because the signal was too short for them.
  std::vector<std::size_t> shortfalls;
};

// Evaluates every grid config on one signal. p-values are shared between
// configs with the same (test, resolved window, smoothing).
IndicatorVector compute_indicator_vector(std::span<const double> values, const Grid& grid);
IndicatorVector compute_indicator_vector(const LabeledSignal& signal, const Grid& grid);

}  // namespace shiftdiag
