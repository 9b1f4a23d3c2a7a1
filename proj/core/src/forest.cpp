#include "shiftdiag/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "shiftdiag/error.hpp"
#include "shiftdiag/parallel.hpp"
#include "shiftdiag/rng.hpp"

namespace shiftdiag {

std::size_t ForestParams::resolved_mtry(std::size_t features) const {
  const std::size_t value =
      mtry.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(features)))));
  if (value == 0 || value > features) {
    throw Error(ErrorCode::kConfig,
                fmt::format("mtry {} invalid for {} features", value, features));
  }
  return value;
}

int DecisionTree::predict(std::span<const std::uint8_t> row) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& node = nodes[at];
    at = row[static_cast<std::size_t>(node.feature)] ? node.right : node.left;
  }
  return nodes[at].leaf_class();
}

std::size_t DecisionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[at].is_leaf()) {
      stack.emplace_back(nodes[at].left, d + 1);
      stack.emplace_back(nodes[at].right, d + 1);
    }
  }
  return deepest;
}

namespace {

double gini(double c0, double c1) {
  const double total = c0 + c1;
  if (total <= 0.0) return 0.0;
  const double p0 = c0 / total;
  const double p1 = c1 / total;
  return 1.0 - p0 * p0 - p1 * p1;
}

// Column-major view of the training bits.
struct Columns {
  std::size_t rows = 0;
  std::vector<std::vector<std::uint8_t>> bits;
};

class TreeBuilder {
 public:
  TreeBuilder(const Columns& columns, std::span<const std::uint8_t> labels,
              const ForestParams& params, std::size_t mtry, std::uint64_t seed,
              std::vector<double>& gini_decrease)
      : columns_(columns),
        labels_(labels),
        params_(params),
        mtry_(mtry),
        rng_(seed),
        gini_decrease_(gini_decrease) {}

  DecisionTree build() {
    const std::size_t n = columns_.rows;
    const std::size_t p = columns_.bits.size();
    weights_.assign(n, 0);
    for (std::size_t draw = 0; draw < n; ++draw) {
      ++weights_[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(n) - 1))];
    }
    DecisionTree tree;
    tree.in_bag.resize(n);
    std::vector<std::uint32_t> rows;
    for (std::size_t r = 0; r < n; ++r) {
      tree.in_bag[r] = weights_[r] > 0 ? 1 : 0;
      if (weights_[r] > 0) rows.push_back(static_cast<std::uint32_t>(r));
    }
    order_.resize(p);
    std::iota(order_.begin(), order_.end(), 0u);

    struct Task {
      std::uint32_t node;
      std::size_t begin, end, depth;
    };
    tree.nodes.emplace_back();
    std::vector<Task> stack{{0, 0, rows.size(), 0}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      std::uint32_t c0 = 0, c1 = 0;
      for (std::size_t i = task.begin; i < task.end; ++i) {
        (labels_[rows[i]] ? c1 : c0) += weights_[rows[i]];
      }
      tree.nodes[task.node].count0 = c0;
      tree.nodes[task.node].count1 = c1;
      if (c0 == 0 || c1 == 0) continue;
      if (params_.max_depth && task.depth >= *params_.max_depth) continue;
      if (c0 + c1 < 2 * params_.min_leaf) continue;

      const auto split = best_split(rows, task.begin, task.end, c0, c1);
      if (!split) continue;
      const auto [feature, gain] = *split;
      gini_decrease_[feature] += gain;

      const auto& col = columns_.bits[feature];
      const auto mid = std::partition(
          rows.begin() + static_cast<std::ptrdiff_t>(task.begin),
          rows.begin() + static_cast<std::ptrdiff_t>(task.end),
          [&](std::uint32_t r) { return col[r] == 0; });
      const auto split_at = static_cast<std::size_t>(mid - rows.begin());

      const auto left = static_cast<std::uint32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[task.node].feature = static_cast<std::int32_t>(feature);
      tree.nodes[task.node].left = left;
      tree.nodes[task.node].right = left + 1;
      stack.push_back({left + 1, split_at, task.end, task.depth + 1});
      stack.push_back({left, task.begin, split_at, task.depth + 1});
    }
    return tree;
  }

 private:
  // Samples features without replacement until mtry of them can split the
  // node; constant features do not count toward mtry.
  std::optional<std::pair<std::size_t, double>> best_split(
      const std::vector<std::uint32_t>& rows, std::size_t begin, std::size_t end,
      std::uint32_t c0, std::uint32_t c1) {
    const std::size_t p = order_.size();
    const double parent = static_cast<double>(c0 + c1) * gini(c0, c1);
    std::optional<std::pair<std::size_t, double>> best;
    std::size_t usable = 0;
    for (std::size_t i = 0; i < p && usable < mtry_; ++i) {
      const auto j = static_cast<std::size_t>(
          rng_.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(p) - 1));
      std::swap(order_[i], order_[j]);
      const std::size_t f = order_[i];
      const auto& col = columns_.bits[f];
      double on0 = 0.0, on1 = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::uint32_t r = rows[k];
        if (col[r]) (labels_[r] ? on1 : on0) += weights_[r];
      }
      const double off0 = c0 - on0;
      const double off1 = c1 - on1;
      const double on = on0 + on1;
      const double off = off0 + off1;
      if (on < static_cast<double>(params_.min_leaf) ||
          off < static_cast<double>(params_.min_leaf)) {
        continue;
      }
      ++usable;
      const double gain = parent - on * gini(on0, on1) - off * gini(off0, off1);
      if (!best || gain > best->second || (gain == best->second && f < best->first)) {
        best = {f, gain};
      }
    }
    if (best) best->second = std::max(0.0, best->second);
    return best;
  }

  const Columns& columns_;
  std::span<const std::uint8_t> labels_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<double>& gini_decrease_;
  std::vector<std::uint32_t> weights_;
  std::vector<std::uint32_t> order_;
};

void check_row(const Forest& forest, std::size_t length) {
  if (length != forest.features()) {
    throw Error(ErrorCode::kShape, fmt::format("row has {} bits, forest expects {}", length,
                                               forest.features()));
  }
}

}  // namespace

Forest train_forest(const IndicatorMatrix& matrix, const ForestParams& params) {
  const std::size_t n = matrix.rows();
  const std::size_t p = matrix.cols();
  if (p == 0) throw Error(ErrorCode::kDegenerateTraining, "matrix has no features");
  if (params.n_trees == 0) throw Error(ErrorCode::kConfig, "n_trees must be at least 1");
  if (params.min_leaf == 0) throw Error(ErrorCode::kConfig, "min_leaf must be at least 1");
  const auto labels = matrix.labels();
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || static_cast<std::size_t>(positives) == n) {
    throw Error(ErrorCode::kDegenerateTraining,
                "training labels contain a single class");
  }
  const std::size_t mtry = params.resolved_mtry(p);

  Columns columns;
  columns.rows = n;
  columns.bits.resize(p);
  for (std::size_t c = 0; c < p; ++c) columns.bits[c] = matrix.column(c);

  Forest forest;
  forest.params = params;
  forest.config_ids = matrix.config_ids();
  forest.train_rows = n;
  forest.train_fingerprint = matrix.fingerprint();
  forest.trees.resize(params.n_trees);
  std::vector<std::vector<double>> decrease(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    decrease[t].assign(p, 0.0);
    TreeBuilder builder(columns, labels, params, mtry,
                        derive_seed(params.seed, stream::kForest, t), decrease[t]);
    forest.trees[t] = builder.build();
  });
  forest.gini_decrease.assign(p, 0.0);
  for (const auto& per_tree : decrease) {
    for (std::size_t f = 0; f < p; ++f) forest.gini_decrease[f] += per_tree[f];
  }
  return forest;
}

Prediction predict(const Forest& forest, std::span<const std::uint8_t> row) {
  check_row(forest, row.size());
  std::size_t ones = 0;
  for (const auto& tree : forest.trees) ones += static_cast<std::size_t>(tree.predict(row));
  const std::size_t zeros = forest.trees.size() - ones;
  const int label = ones > zeros ? 1 : 0;
  const double agree = static_cast<double>(label ? ones : zeros);
  return {label, agree / static_cast<double>(forest.trees.size())};
}

std::vector<Prediction> predict_matrix(const Forest& forest, const IndicatorMatrix& matrix,
                                       unsigned threads) {
  check_row(forest, matrix.cols());
  if (matrix.config_ids() != forest.config_ids) {
    throw Error(ErrorCode::kShape, "matrix indicator ids differ from the model's");
  }
  std::vector<Prediction> out(matrix.rows());
  parallel_for(matrix.rows(), threads,
               [&](std::size_t r) { out[r] = predict(forest, matrix.row(r)); });
  return out;
}

double accuracy(std::span<const Prediction> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kShape, "prediction and label counts differ");
  }
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += predictions[i].label == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

OobEstimate oob_accuracy(const Forest& forest, const IndicatorMatrix& matrix) {
  if (matrix.rows() != forest.train_rows || matrix.cols() != forest.features() ||
      matrix.fingerprint() != forest.train_fingerprint) {
    throw Error(ErrorCode::kWrongMatrix, "matrix is not the one this forest was trained on");
  }
  OobEstimate out;
  out.rows = matrix.rows();
  std::size_t hits = 0;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    std::size_t ones = 0, total = 0;
    const auto row = matrix.row(r);
    for (const auto& tree : forest.trees) {
      if (tree.in_bag[r]) continue;
      ++total;
      ones += static_cast<std::size_t>(tree.predict(row));
    }
    if (total == 0) continue;
    ++out.covered;
    const int label = ones > total - ones ? 1 : 0;
    hits += label == matrix.labels()[r] ? 1 : 0;
  }
  out.accuracy = out.covered ? static_cast<double>(hits) / static_cast<double>(out.covered) : 0.0;
  return out;
}

double Evaluation::test_mean() const {
  if (group_accuracies.empty()) return 0.0;
  return std::accumulate(group_accuracies.begin(), group_accuracies.end(), 0.0) /
         static_cast<double>(group_accuracies.size());
}

double Evaluation::test_std() const {
  const std::size_t g = group_accuracies.size();
  if (g < 2) return 0.0;
  const double mean = test_mean();
  double ss = 0.0;
  for (double a : group_accuracies) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / static_cast<double>(g - 1));
}

Evaluation evaluate(const Forest& forest, const IndicatorMatrix& train,
                    std::span<const IndicatorMatrix> groups, unsigned threads) {
  Evaluation out;
  out.train_accuracy = accuracy(predict_matrix(forest, train, threads), train.labels());
  out.oob = oob_accuracy(forest, train);
  for (const auto& group : groups) {
    out.group_accuracies.push_back(
        accuracy(predict_matrix(forest, group, threads), group.labels()));
  }
  return out;
}

std::vector<double> feature_importance(const Forest& forest) {
  std::vector<double> out(forest.gini_decrease.size(), 0.0);
  const double total =
      std::accumulate(forest.gini_decrease.begin(), forest.gini_decrease.end(), 0.0);
  if (total <= 0.0) return out;
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = forest.gini_decrease[f] / total;
  return out;
}

using nlohmann::json;

namespace {

constexpr std::string_view kModelFormat = "shiftdiag-forest";
constexpr int kModelVersion = 1;

}  // namespace

std::string forest_to_json(const Forest& forest) {
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  json params = {{"n_trees", forest.params.n_trees},
                 {"mtry", forest.params.resolved_mtry(forest.features())},
                 {"max_depth", nullptr},
                 {"min_leaf", forest.params.min_leaf},
                 {"seed", forest.params.seed}};
  if (forest.params.max_depth) params["max_depth"] = *forest.params.max_depth;
  doc["params"] = params;
  doc["config_ids"] = forest.config_ids;
  doc["train_rows"] = forest.train_rows;
  doc["train_fingerprint"] = fmt::format("{:016x}", forest.train_fingerprint);
  doc["gini_decrease"] = forest.gini_decrease;
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      nodes.push_back({node.feature, node.left, node.right, node.count0, node.count1});
    }
    std::string mask;
    mask.reserve(tree.in_bag.size());
    for (auto b : tree.in_bag) mask.push_back(b ? '1' : '0');
    trees.push_back({{"nodes", std::move(nodes)}, {"in_bag", std::move(mask)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

Forest forest_from_json(std::string_view text) {
  Forest forest;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != kModelFormat) throw Error(ErrorCode::kIo, "not a shiftdiag model");
    if (doc.at("version") != kModelVersion) {
      throw Error(ErrorCode::kIo,
                  fmt::format("unsupported model version {}", doc.at("version").dump()));
    }
    const json& params = doc.at("params");
    forest.params.n_trees = params.at("n_trees");
    forest.params.mtry = params.at("mtry").get<std::size_t>();
    if (!params.at("max_depth").is_null()) {
      forest.params.max_depth = params.at("max_depth").get<std::size_t>();
    }
    forest.params.min_leaf = params.at("min_leaf");
    forest.params.seed = params.at("seed");
    forest.config_ids = doc.at("config_ids").get<std::vector<std::string>>();
    forest.train_rows = doc.at("train_rows");
    forest.train_fingerprint =
        std::stoull(doc.at("train_fingerprint").get<std::string>(), nullptr, 16);
    forest.gini_decrease = doc.at("gini_decrease").get<std::vector<double>>();
    const std::size_t p = forest.config_ids.size();
    for (const json& t : doc.at("trees")) {
      DecisionTree tree;
      for (const json& n : t.at("nodes")) {
        TreeNode node{n.at(0), n.at(1), n.at(2), n.at(3), n.at(4)};
        tree.nodes.push_back(node);
      }
      for (char c : t.at("in_bag").get<std::string>()) tree.in_bag.push_back(c == '1' ? 1 : 0);
      for (const auto& node : tree.nodes) {
        if (!node.is_leaf() && (static_cast<std::size_t>(node.feature) >= p ||
                                node.left >= tree.nodes.size() ||
                                node.right >= tree.nodes.size())) {
          throw Error(ErrorCode::kIo, "model tree references an invalid node or feature");
        }
      }
      if (tree.nodes.empty() || tree.in_bag.size() != forest.train_rows) {
        throw Error(ErrorCode::kIo, "model tree is malformed");
      }
      forest.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, fmt::format("malformed model: {}", e.what()));
  }
  return forest;
}

void save_forest(const std::filesystem::path& path, const Forest& forest) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << forest_to_json(forest) << '\n';
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return forest_from_json(buffer.str());
}

}  // namespace shiftdiag
