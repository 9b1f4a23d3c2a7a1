#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace shiftdiag::oracle {

double u_test_enumerated(std::span<const double> x, std::span<const double> y) {
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n = pooled.size();
  const std::size_t n1 = x.size();

  auto u_of = [&](const std::vector<bool>& in_x) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_x[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!in_x[j] && pooled[i] > pooled[j]) u += 1.0;
      }
    }
    return u;
  };
  std::vector<bool> observed(n, false);
  for (std::size_t i = 0; i < n1; ++i) observed[i] = true;
  const double u_obs = u_of(observed);

  std::size_t lower = 0, upper = 0, total = 0;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n1), true);
  // prev_permutation walks every n1-subset exactly once.
  do {
    const double u = u_of(mask);
    ++total;
    if (u <= u_obs) ++lower;
    if (u >= u_obs) ++upper;
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) /
                           static_cast<double>(total));
}

double ks_statistic_direct(std::span<const double> x, std::span<const double> y) {
  auto ecdf = [](std::span<const double> s, double t) {
    double c = 0.0;
    for (double v : s) c += v <= t ? 1.0 : 0.0;
    return c / static_cast<double>(s.size());
  };
  double d = 0.0;
  for (auto s : {x, y}) {
    for (double t : s) d = std::max(d, std::fabs(ecdf(x, t) - ecdf(y, t)));
  }
  return d;
}

double incomplete_beta_quadrature(double a, double b, double x) {
  // density of t ~ Beta(a, b) with t = s^2: 2 s^(2a-1) (1 - s^2)^(b-1) / B(a,b)
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto f = [&](double s) {
    if (s <= 0.0) return (2.0 * a - 1.0) == 0.0 ? 2.0 / std::exp(log_beta) : 0.0;
    const double base = 1.0 - s * s;
    if (base <= 0.0) return 0.0;
    return 2.0 * std::exp((2.0 * a - 1.0) * std::log(s) + (b - 1.0) * std::log(base) - log_beta);
  };
  const double upper = std::sqrt(x);
  const int panels = 200000;
  const double h = upper / panels;
  double sum = f(0.0) + f(upper);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return sum * h / 3.0;
}

double mutual_information_counts(double n00, double n01, double n10, double n11) {
  const double n = n00 + n01 + n10 + n11;
  const double cells[2][2] = {{n00, n01}, {n10, n11}};
  double mi = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      if (cells[a][b] == 0.0) continue;
      const double pa = (cells[a][0] + cells[a][1]) / n;
      const double pb = (cells[0][b] + cells[1][b]) / n;
      const double pab = cells[a][b] / n;
      mi += pab * std::log(pab / (pa * pb)) / std::log(2.0);
    }
  }
  return mi;
}

namespace {

double mi_columns(const IndicatorMatrix& m, std::size_t a, bool a_is_label, std::size_t b,
                  bool b_is_label) {
  double counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const int va = a_is_label ? m.labels()[r] : m.bit(r, a);
    const int vb = b_is_label ? m.labels()[r] : m.bit(r, b);
    counts[va][vb] += 1.0;
  }
  return mutual_information_counts(counts[0][0], counts[0][1], counts[1][0], counts[1][1]);
}

}  // namespace

std::vector<double> mrmr_step_scores(const IndicatorMatrix& matrix,
                                     std::span<const std::size_t> selected) {
  std::vector<double> scores(matrix.cols(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    if (std::find(selected.begin(), selected.end(), c) != selected.end()) continue;
    double score = mi_columns(matrix, c, false, 0, true);
    if (!selected.empty()) {
      double redundancy = 0.0;
      for (std::size_t s : selected) redundancy += mi_columns(matrix, c, false, s, false);
      score -= redundancy / static_cast<double>(selected.size());
    }
    scores[c] = score;
  }
  return scores;
}

std::vector<std::size_t> mrmr_brute_force(const IndicatorMatrix& matrix, std::size_t count) {
  std::vector<std::size_t> selected;
  for (std::size_t step = 0; step < count; ++step) {
    const std::vector<double> scores = mrmr_step_scores(matrix, selected);
    std::size_t best = matrix.cols();
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < scores.size(); ++c) {
      // Scores within rounding of each other count as ties; lowest index wins.
      if (!std::isnan(scores[c]) && scores[c] > best_score + 1e-12) {
        best = c;
        best_score = scores[c];
      }
    }
    selected.push_back(best);
  }
  return selected;
}

double ols_slope(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = static_cast<double>(i);
    sx += t;
    sy += values[i];
    sxx += t * t;
    sxy += t * values[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::size_t periodogram_peak(std::span<const double> values) {
  const std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  std::size_t best = 1;
  double best_power = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      re += (values[t] - mean) * std::cos(angle);
      im -= (values[t] - mean) * std::sin(angle);
    }
    const double power = re * re + im * im;
    if (power > best_power) {
      best_power = power;
      best = k;
    }
  }
  return best;
}

}  // namespace shiftdiag::oracle
