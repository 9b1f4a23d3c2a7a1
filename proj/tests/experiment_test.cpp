#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "shiftdiag/error.hpp"
#include "shiftdiag/experiment.hpp"
#include "shiftdiag/rng.hpp"

namespace shiftdiag {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shiftdiag-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<LabeledSignal> labelled(const ClassCounts& counts) {
  std::vector<LabeledSignal> out;
  for (AnomalyKind kind : kAllKinds) {
    for (std::size_t i = 0; i < counts.count(kind); ++i) {
      LabeledSignal s;
      s.label.kind = kind;
      s.id = std::to_string(out.size());
      out.push_back(s);
    }
  }
  return out;
}

TEST(Split, PartitionAndQuotas) {
  const auto data = labelled({1800, 1200, 1000, 1000, 1000});
  const SplitSpec spec;
  const DatasetSplit split = split_dataset(data, spec, 17);
  ASSERT_EQ(split.train.size(), 1000u);
  ASSERT_EQ(split.groups.size(), 10u);

  std::map<AnomalyKind, std::size_t> train_kinds;
  for (std::size_t i : split.train) ++train_kinds[data[i].label.kind];
  EXPECT_EQ(train_kinds[AnomalyKind::kNone], 300u);
  EXPECT_EQ(train_kinds[AnomalyKind::kCorruptedNone], 200u);
  EXPECT_EQ(train_kinds[AnomalyKind::kVarianceShift], 167u);
  EXPECT_EQ(train_kinds[AnomalyKind::kMeanShift], 167u);
  EXPECT_EQ(train_kinds[AnomalyKind::kSlopeShift], 166u);

  std::set<std::size_t> seen(split.train.begin(), split.train.end());
  for (const auto& g : split.groups) {
    EXPECT_EQ(g.size(), 500u);
    for (std::size_t i : g) EXPECT_TRUE(seen.insert(i).second) << "index reused " << i;
  }
  EXPECT_EQ(seen.size(), 6000u);
  EXPECT_EQ(split_dataset(data, spec, 17).groups, split.groups);
  EXPECT_NE(split_dataset(data, spec, 18).train, split.train);
}

TEST(Split, StratifiedGroupsShareClassMix) {
  const auto data = labelled({300, 0, 100, 100, 100});
  SplitSpec spec{100, 99, 4, 100, true};
  const DatasetSplit split = split_dataset(data, spec, 3);
  for (const auto& g : split.groups) {
    const auto anomalous = std::count_if(g.begin(), g.end(),
                                         [&](std::size_t i) { return data[i].anomalous(); });
    EXPECT_NEAR(static_cast<double>(anomalous), 50.25, 1.0);
  }
}

TEST(Split, ImpossibleLayoutsAreRejected) {
  const auto data = labelled({20, 0, 10, 10, 10});
  auto code = [&](const SplitSpec& spec) {
    try {
      split_dataset(data, spec, 1);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code({30, 10, 1, 1}), ErrorCode::kSplit);
  EXPECT_EQ(code({10, 45, 1, 1}), ErrorCode::kSplit);
  EXPECT_EQ(code({10, 10, 4, 10}), ErrorCode::kSplit);
  EXPECT_EQ(split_dataset(data, {10, 10, 3, 10}, 1).groups.size(), 3u);
}

TEST(Quantile, TypeSevenInterpolation) {
  const std::vector<double> v = {4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({7.0}, 0.3), 7.0);
}

TEST(Emitters, TopkTableColumns) {
  Ranking r;
  r.entries.push_back({4, "F test / 0.005 / 100 / 5", 0.3, 0.0, 0.3});
  r.entries.push_back({9, "confu(2,3) / 0.1 / 50 / 1 / smoothed", 0.2, 0.1, 0.1});
  r.entries.push_back({1, "U test / 0.5 / 30 / 10", 0.1, 0.1, 0.0});
  EXPECT_EQ(emit_topk_table(r, 2),
            "rank\ttype\tlevel\twindow_length\tsmoothed\twindow_step\n"
            "1\tF test\t0.005\t100\tno\t5\n"
            "2\tconfu(2,3)\t0.1\t50\tyes\t1\n");
  r.entries.push_back({2, "bogus", 0, 0, 0});
  EXPECT_THROW(emit_topk_table(r, 4), Error);
}

TEST(Emitters, CurveRows) {
  ForwardPoint p;
  p.k = 3;
  p.evaluation.train_accuracy = 1.0;
  p.evaluation.oob.accuracy = 0.9;
  p.evaluation.group_accuracies = {0.8, 0.9, 1.0};
  const std::vector<ForwardPoint> curve = {p};
  const std::string text = emit_curve_data(curve);
  EXPECT_NE(text.find("3\t1.000000\t0.900000\t0.800000\t0.850000\t0.900000\t0.950000\t1.000000"
                      "\t0.900000\t0.100000\n"),
            std::string::npos)
      << text;
}

TEST(Config, FileOverridesBase) {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "cfg.json") << R"j({"family":"B","seed":9,
      "counts":{"none":40,"corrupted":20},
      "split":{"train_normal":30,"groups":2},
      "forest":{"n_trees":33,"mtry":4},
      "schedule":[1,2,3],"top_k":5})j";
  const ExperimentConfig c = load_experiment_config(dir / "cfg.json", ExperimentConfig::full(Family::kA, 1));
  EXPECT_EQ(c.dataset.family, Family::kB);
  EXPECT_EQ(c.root_seed, 9u);
  EXPECT_EQ(c.dataset.counts.none, 40u);
  EXPECT_EQ(c.dataset.counts.corrupted, 20u);
  EXPECT_EQ(c.dataset.counts.variance, 1000u);
  EXPECT_EQ(c.split.train_normal, 30u);
  EXPECT_EQ(c.split.groups, 2u);
  EXPECT_EQ(c.split.group_size, 500u);
  EXPECT_EQ(c.forest.n_trees, 33u);
  EXPECT_EQ(c.forest.mtry, 4u);
  EXPECT_EQ(c.schedule, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(c.top_k, 5u);

  std::ofstream(dir / "bad.json") << "{";
  EXPECT_THROW(load_experiment_config(dir / "bad.json", c), Error);
  EXPECT_THROW(load_experiment_config(dir / "missing.json", c), Error);
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c = ExperimentConfig::quick_profile(Family::kA, 5);
  c.dataset.counts = {150, 0, 50, 50, 50};
  c.split = {60, 60, 3, 60, false};
  c.forest.n_trees = 40;
  c.schedule = {1, 5, 20, 1000};
  c.out_dir = out;
  const fs::path grid = out / "small-grid.json";
  std::ofstream(grid) << R"j({"name":"small","entries":[
      {"tests":["u","ks","f"],"rules":["base","kofn(2,3)"],"levels":[0.005,0.1],
       "windows":[30,50],"steps":[5],"smoothing":[false]}]})j";
  c.grid_manifest = grid;
  return c;
}

TEST(Pipeline, ArtifactsAgreeWithReport) {
  const fs::path out = scratch("pipeline");
  const ExperimentConfig c = small_config(out);
  const ExperimentReport report = run_experiment(c);
  EXPECT_EQ(report.grid_size, 24u);
  EXPECT_EQ(report.signals, 300u);
  EXPECT_EQ(report.train_rows, 120u);
  EXPECT_EQ(report.group_sizes, (std::vector<std::size_t>{60, 60, 60}));
  ASSERT_EQ(report.curve.size(), 3u);
  EXPECT_EQ(report.curve.back().k, 20u);
  EXPECT_EQ(report.top.size(), 10u);
  EXPECT_NE(report.at_k(5), nullptr);
  EXPECT_EQ(report.at_k(7), nullptr);

  for (const char* name : {"dataset.jsonl", "grid.json", "matrix.tsv", "split.json", "model.json",
                           "predictions.tsv", "importance.tsv", "ranking.tsv", "topk.tsv",
                           "curve.tsv", "report.json", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }

  // Group accuracies recomputed from the prediction dump.
  std::ifstream in(out / "predictions.tsv");
  std::string line;
  std::getline(in, line);
  std::vector<double> correct(3, 0.0), total(3, 0.0);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::size_t group;
    std::string id;
    int label, predicted;
    double vote;
    row >> group >> id >> label >> predicted >> vote;
    correct[group] += label == predicted ? 1.0 : 0.0;
    total[group] += 1.0;
    EXPECT_GE(vote, 0.5);
  }
  for (std::size_t g = 0; g < 3; ++g) {
    EXPECT_NEAR(correct[g] / total[g], report.full_grid.group_accuracies[g], 1e-12);
  }
  EXPECT_EQ(report_to_json(report) + "\n", slurp(out / "report.json"));
}

TEST(Pipeline, RerunIsByteIdentical) {
  const fs::path a = scratch("rerun-a");
  const fs::path b = scratch("rerun-b");
  ExperimentConfig ca = small_config(a);
  ExperimentConfig cb = small_config(b);
  ca.threads = 1;
  cb.threads = 4;
  cb.grid_manifest = ca.grid_manifest;
  run_experiment(ca);
  run_experiment(cb);
  for (const char* name : {"dataset.jsonl", "matrix.tsv", "split.json", "model.json",
                           "predictions.tsv", "ranking.tsv", "curve.tsv", "report.json"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
}

TEST(Pipeline, StageFailuresCarryExitCodes) {
  const fs::path out = scratch("stage");
  ExperimentConfig c = small_config(out);
  c.split.train_normal = 10000;
  try {
    run_experiment(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "split");
    EXPECT_EQ(e.exit_code(), stage_code::kSplit);
  }
}

}  // namespace
}  // namespace shiftdiag
