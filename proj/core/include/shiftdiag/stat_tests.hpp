#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace shiftdiag {

enum class TestKind { kMannWhitneyU, kKolmogorovSmirnov2, kFVariance };

inline constexpr std::array<TestKind, 3> kAllTests = {
    TestKind::kMannWhitneyU, TestKind::kKolmogorovSmirnov2, TestKind::kFVariance};

// Short code used in grid manifests and the CLI: "u", "ks", "f".
std::string_view test_code(TestKind kind);
TestKind parse_test(std::string_view code);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

struct UTestOptions {
  // Tie-free samples with n1 + n2 at or below this use the exact null law.
  std::size_t exact_max_total = 12;
};

// Two-sided Mann-Whitney U. The statistic is U for x (rank sum of x minus
// n1(n1+1)/2, average ranks on ties). Large or tied samples use the normal
// approximation with tie and continuity corrections.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          const UTestOptions& options = {});

// Two-sample Kolmogorov-Smirnov; D is evaluated over the pooled sample points
// and p comes from the asymptotic Kolmogorov law at n1*n2/(n1+n2).
TestResult kolmogorov_smirnov_2(std::span<const double> x, std::span<const double> y);

// Two-sided F test of equal variances, F = var(x) / var(y).
TestResult f_test_variance(std::span<const double> x, std::span<const double> y);

TestResult run_test(TestKind kind, std::span<const double> x, std::span<const double> y);

// Trailing-window mean: out[i] = mean(signal[i .. i + width)).
std::vector<double> moving_average(std::span<const double> signal, std::size_t width);

}  // namespace shiftdiag
