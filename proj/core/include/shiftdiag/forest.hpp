#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftdiag/indicator_matrix.hpp"

namespace shiftdiag {

struct ForestParams {
  std::size_t n_trees = 500;
  // Features examined per split; defaults to ceil(sqrt(p)).
  std::optional<std::size_t> mtry;
  // Unlimited depth grows every tree to purity.
  std::optional<std::size_t> max_depth;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  std::size_t resolved_mtry(std::size_t features) const;
};

// Internal nodes split on "bit == 1" (right) versus "bit == 0" (left);
// counts are bootstrap-weighted class totals reaching the node.
struct TreeNode {
  std::int32_t feature = -1;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t count0 = 0;
  std::uint32_t count1 = 0;

  bool is_leaf() const { return feature < 0; }
  // Majority class; ties go to class 0.
  int leaf_class() const { return count1 > count0 ? 1 : 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  // 1 where the training row was drawn at least once into this tree's sample.
  std::vector<std::uint8_t> in_bag;

  int predict(std::span<const std::uint8_t> row) const;
  std::size_t depth() const;
};

struct Prediction {
  int label = 0;
  // Share of trees voting for `label`.
  double vote_fraction = 0.0;
};

struct OobEstimate {
  double accuracy = 0.0;
  std::size_t covered = 0;  // rows with at least one out-of-bag tree
  std::size_t rows = 0;

  double coverage() const { return rows ? static_cast<double>(covered) / rows : 0.0; }
};

class Forest {
 public:
  ForestParams params;
  std::vector<std::string> config_ids;
  std::size_t train_rows = 0;
  std::uint64_t train_fingerprint = 0;
  std::vector<DecisionTree> trees;
  // Summed Gini decrease per feature over all trees (unnormalized).
  std::vector<double> gini_decrease;

  std::size_t features() const { return config_ids.size(); }
};

// Bootstrap + random-subspace CART on binary features, Gini criterion.
// Throws kDegenerateTraining when only one class is present.
Forest train_forest(const IndicatorMatrix& matrix, const ForestParams& params);

// Majority vote, ties to class 0. Throws kShape on a length mismatch.
Prediction predict(const Forest& forest, std::span<const std::uint8_t> row);

// Predictions for every row; the matrix columns must match the forest ids.
std::vector<Prediction> predict_matrix(const Forest& forest, const IndicatorMatrix& matrix,
                                       unsigned threads = 0);

double accuracy(std::span<const Prediction> predictions, std::span<const std::uint8_t> labels);

// Each training row is voted on only by trees whose bootstrap excluded it.
// Throws kWrongMatrix when `matrix` is not the training matrix.
OobEstimate oob_accuracy(const Forest& forest, const IndicatorMatrix& matrix);

// Train, OOB and per-group test accuracy of one model.
struct Evaluation {
  double train_accuracy = 0.0;
  OobEstimate oob;
  std::vector<double> group_accuracies;

  double test_mean() const;
  // Sample standard deviation across groups (0 for fewer than two groups).
  double test_std() const;
};

// `train` must be the training matrix; each group is scored separately.
Evaluation evaluate(const Forest& forest, const IndicatorMatrix& train,
                    std::span<const IndicatorMatrix> groups, unsigned threads = 0);

// Mean Gini decrease, normalized to sum to 1 (all zeros if no split was made).
std::vector<double> feature_importance(const Forest& forest);

void save_forest(const std::filesystem::path& path, const Forest& forest);
Forest load_forest(const std::filesystem::path& path);
std::string forest_to_json(const Forest& forest);
Forest forest_from_json(std::string_view text);

}  // namespace shiftdiag
