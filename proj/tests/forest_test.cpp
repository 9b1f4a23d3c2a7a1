#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "shiftdiag/error.hpp"
#include "shiftdiag/forest.hpp"
#include "shiftdiag/rng.hpp"

namespace shiftdiag {
namespace {

// Label = column 0; the other columns are noise or label copies with flips.
IndicatorMatrix synthetic(std::uint64_t seed, std::size_t rows, std::size_t cols,
                          double flip = 0.0) {
  Rng rng(seed);
  std::vector<std::string> ids, names;
  for (std::size_t c = 0; c < cols; ++c) ids.push_back("f" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) names.push_back("r" + std::to_string(r));
  std::vector<std::uint8_t> labels(rows), bits(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    labels[r] = static_cast<std::uint8_t>(r % 2);
    for (std::size_t c = 0; c < cols; ++c) {
      std::uint8_t b = static_cast<std::uint8_t>(rng.uniform_int(0, 1));
      if (c == 0) b = rng.uniform() < flip ? 1 - labels[r] : labels[r];
      bits[r * cols + c] = b;
    }
  }
  return {ids, names, labels, bits};
}

ForestParams params(std::size_t trees, std::uint64_t seed) {
  ForestParams p;
  p.n_trees = trees;
  p.seed = seed;
  return p;
}

TEST(Forest, LearnsSeparableData) {
  const IndicatorMatrix m = synthetic(1, 200, 10);
  ForestParams p = params(100, 7);
  p.mtry = 10;
  const Forest f = train_forest(m, p);
  const auto preds = predict_matrix(f, m);
  EXPECT_EQ(accuracy(preds, m.labels()), 1.0);
  EXPECT_EQ(oob_accuracy(f, m).accuracy, 1.0);
  const auto imp = feature_importance(f);
  EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 0);
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-12);
  EXPECT_GT(imp[0], 0.99);
}

TEST(Forest, DeterministicAcrossThreadCounts) {
  const IndicatorMatrix m = synthetic(2, 150, 12, 0.2);
  ForestParams a = params(60, 11);
  a.threads = 1;
  ForestParams b = a;
  b.threads = 6;
  const Forest fa = train_forest(m, a);
  const Forest fb = train_forest(m, b);
  EXPECT_EQ(forest_to_json(fa), forest_to_json(fb));
  ForestParams c = a;
  c.seed = 12;
  EXPECT_NE(forest_to_json(train_forest(m, c)), forest_to_json(fa));
}

TEST(Forest, OutOfBagShareIsNearExpectation) {
  const IndicatorMatrix m = synthetic(3, 300, 8, 0.1);
  const Forest f = train_forest(m, params(200, 5));
  double oob_share = 0.0;
  for (const auto& t : f.trees) {
    ASSERT_EQ(t.in_bag.size(), m.rows());
    oob_share += static_cast<double>(std::count(t.in_bag.begin(), t.in_bag.end(), 0)) /
                 static_cast<double>(m.rows());
  }
  oob_share /= static_cast<double>(f.trees.size());
  // (1 - 1/n)^n is about 0.3673 for n = 300.
  EXPECT_GE(oob_share, 0.30);
  EXPECT_LE(oob_share, 0.44);
  EXPECT_NEAR(oob_share, std::pow(1.0 - 1.0 / 300.0, 300.0), 0.01);
  const OobEstimate oob = oob_accuracy(f, m);
  EXPECT_EQ(oob.rows, 300u);
  EXPECT_EQ(oob.covered, 300u);
  // Label noise caps accuracy at 0.9; noise columns cost a little more.
  EXPECT_GT(oob.accuracy, 0.78);
  EXPECT_LT(oob.accuracy, 0.95);
}

TEST(Forest, SplitsNeverIncreaseImpurity) {
  const IndicatorMatrix m = synthetic(4, 120, 15, 0.3);
  const Forest f = train_forest(m, params(30, 9));
  auto gini = [](double c0, double c1) {
    const double n = c0 + c1;
    return n > 0 ? 1.0 - (c0 / n) * (c0 / n) - (c1 / n) * (c1 / n) : 0.0;
  };
  for (const auto& t : f.trees) {
    for (const auto& node : t.nodes) {
      if (node.is_leaf()) continue;
      const auto& l = t.nodes[node.left];
      const auto& r = t.nodes[node.right];
      EXPECT_EQ(l.count0 + r.count0, node.count0);
      EXPECT_EQ(l.count1 + r.count1, node.count1);
      const double parent = gini(node.count0, node.count1);
      const double n = node.count0 + node.count1;
      const double child = ((l.count0 + l.count1) * gini(l.count0, l.count1) +
                            (r.count0 + r.count1) * gini(r.count0, r.count1)) /
                           n;
      EXPECT_LE(child, parent + 1e-12);
    }
  }
}

TEST(Forest, VoteIsInvariantToTreeOrder) {
  const IndicatorMatrix m = synthetic(5, 100, 10, 0.25);
  const Forest f = train_forest(m, params(41, 3));
  Forest reversed = f;
  std::reverse(reversed.trees.begin(), reversed.trees.end());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Prediction a = predict(f, m.row(r));
    const Prediction b = predict(reversed, m.row(r));
    EXPECT_EQ(a.label, b.label);
    EXPECT_DOUBLE_EQ(a.vote_fraction, b.vote_fraction);
    EXPECT_GE(a.vote_fraction, 0.5);
  }
}

TEST(Forest, DepthAndLeafLimits) {
  const IndicatorMatrix m = synthetic(6, 200, 10, 0.3);
  ForestParams p = params(20, 1);
  p.max_depth = 2;
  for (const auto& t : train_forest(m, p).trees) EXPECT_LE(t.depth(), 2u);
  ForestParams q = params(20, 1);
  q.min_leaf = 15;
  for (const auto& t : train_forest(m, q).trees) {
    for (const auto& node : t.nodes) {
      if (node.is_leaf()) EXPECT_GE(node.count0 + node.count1, 15u);
    }
  }
}

TEST(Forest, ConstantFeaturesAreIgnored) {
  IndicatorMatrix base = synthetic(7, 80, 1);
  std::vector<std::string> ids = {"const0", "signal", "const1"};
  std::vector<std::uint8_t> bits;
  for (std::size_t r = 0; r < base.rows(); ++r) {
    bits.insert(bits.end(), {1, base.bit(r, 0), 0});
  }
  const IndicatorMatrix m(ids, base.signal_ids(), {base.labels().begin(), base.labels().end()},
                          bits);
  ForestParams p = params(10, 2);
  p.mtry = 1;
  const Forest f = train_forest(m, p);
  EXPECT_EQ(accuracy(predict_matrix(f, m), m.labels()), 1.0);
  EXPECT_EQ(f.gini_decrease[0], 0.0);
  EXPECT_EQ(f.gini_decrease[2], 0.0);
}

TEST(Forest, JsonRoundTripPreservesPredictions) {
  const IndicatorMatrix m = synthetic(8, 90, 7, 0.2);
  const Forest f = train_forest(m, params(25, 4));
  const Forest back = forest_from_json(forest_to_json(f));
  EXPECT_EQ(forest_to_json(back), forest_to_json(f));
  EXPECT_EQ(back.train_fingerprint, m.fingerprint());
  const auto a = predict_matrix(f, m);
  const auto b = predict_matrix(back, m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(a[i].vote_fraction, b[i].vote_fraction);
  }
  EXPECT_EQ(oob_accuracy(back, m).accuracy, oob_accuracy(f, m).accuracy);
}

TEST(Forest, EvaluationSummaries) {
  Evaluation e;
  e.group_accuracies = {0.9, 0.8, 1.0};
  EXPECT_NEAR(e.test_mean(), 0.9, 1e-12);
  EXPECT_NEAR(e.test_std(), 0.1, 1e-12);
  e.group_accuracies = {0.7};
  EXPECT_EQ(e.test_std(), 0.0);
}

TEST(Forest, ErrorPaths) {
  const IndicatorMatrix m = synthetic(9, 40, 4);
  const std::vector<std::size_t> zeros = {0, 2, 4, 6};
  const IndicatorMatrix one_class = m.select_rows(zeros);
  try {
    train_forest(one_class, params(5, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateTraining);
  }

  ForestParams p = params(5, 1);
  p.mtry = 5;
  EXPECT_THROW(train_forest(m, p), Error);

  const Forest f = train_forest(m, params(5, 1));
  const std::vector<std::uint8_t> short_row = {1, 0};
  try {
    predict(f, short_row);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
  const IndicatorMatrix other = synthetic(10, 40, 4);
  try {
    oob_accuracy(f, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWrongMatrix);
  }
  const std::vector<std::size_t> cols = {1, 0, 2, 3};
  EXPECT_THROW(predict_matrix(f, m.select_columns(cols)), Error);
}

}  // namespace
}  // namespace shiftdiag
