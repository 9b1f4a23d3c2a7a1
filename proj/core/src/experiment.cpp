#include "shiftdiag/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "shiftdiag/dataset_io.hpp"
#include "shiftdiag/error.hpp"
#include "shiftdiag/rng.hpp"

namespace shiftdiag {

using nlohmann::json;

namespace {

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(items[i - 1], items[j]);
  }
}

// Largest-remainder apportionment of `total` proportional to `weights`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> out(weights.size(), 0);
  if (sum == 0) return out;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * static_cast<double>(weights[i]) /
                         static_cast<double>(sum);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned) {
    ++out[remainders[i].second];
  }
  return out;
}

}  // namespace

DatasetSplit split_dataset(std::span<const LabeledSignal> dataset, const SplitSpec& spec,
                           std::uint64_t seed) {
  Rng rng(seed);
  std::map<AnomalyKind, std::vector<std::size_t>> pools;
  for (std::size_t i = 0; i < dataset.size(); ++i) pools[dataset[i].label.kind].push_back(i);

  const std::vector<AnomalyKind> normal_kinds = {AnomalyKind::kNone, AnomalyKind::kCorruptedNone};
  const std::vector<AnomalyKind> shift_kinds = {
      AnomalyKind::kVarianceShift, AnomalyKind::kMeanShift, AnomalyKind::kSlopeShift};

  std::map<AnomalyKind, std::size_t> quota;
  std::vector<std::size_t> normal_sizes;
  for (AnomalyKind kind : normal_kinds) normal_sizes.push_back(pools[kind].size());
  const auto normal_quota = apportion(spec.train_normal, normal_sizes);
  for (std::size_t i = 0; i < normal_kinds.size(); ++i) quota[normal_kinds[i]] = normal_quota[i];
  for (std::size_t i = 0; i < shift_kinds.size(); ++i) {
    quota[shift_kinds[i]] = spec.train_anomalous / 3 + (i < spec.train_anomalous % 3 ? 1 : 0);
  }
  if (spec.train_normal > 0 &&
      std::accumulate(normal_quota.begin(), normal_quota.end(), std::size_t{0}) !=
          spec.train_normal) {
    throw Error(ErrorCode::kSplit, "dataset has no normal signals for the training quota");
  }

  DatasetSplit out;
  std::vector<std::size_t> rest;
  for (AnomalyKind kind : kAllKinds) {
    auto& pool = pools[kind];
    if (pool.size() < quota[kind]) {
      throw Error(ErrorCode::kSplit,
                  fmt::format("training quota of {} {} signals exceeds the {} available",
                              quota[kind], to_string(kind), pool.size()));
    }
    shuffle(pool, rng);
    out.train.insert(out.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[kind]));
    rest.insert(rest.end(), pool.begin() + static_cast<std::ptrdiff_t>(quota[kind]), pool.end());
  }
  std::sort(out.train.begin(), out.train.end());

  const std::size_t needed = spec.groups * spec.group_size;
  if (needed > rest.size()) {
    throw Error(ErrorCode::kSplit, fmt::format("{} test groups of {} need {} signals, {} remain",
                                               spec.groups, spec.group_size, needed,
                                               rest.size()));
  }
  std::sort(rest.begin(), rest.end());
  shuffle(rest, rng);
  if (spec.stratify_groups) {
    std::stable_partition(rest.begin(), rest.end(),
                          [&](std::size_t i) { return !dataset[i].anomalous(); });
    // Deal every pool member round robin, then trim each group to size.
    out.groups.assign(spec.groups, {});
    std::vector<std::size_t> dealt(rest.begin(), rest.end());
    for (std::size_t i = 0; i < dealt.size(); ++i) out.groups[i % spec.groups].push_back(dealt[i]);
    for (auto& group : out.groups) {
      // Keep the class mix of the full deal while trimming.
      std::vector<std::size_t> normals, shifted;
      for (std::size_t idx : group) (dataset[idx].anomalous() ? shifted : normals).push_back(idx);
      const auto keep = apportion(spec.group_size, {normals.size(), shifted.size()});
      group.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(keep[0]));
      group.insert(group.end(), shifted.begin(), shifted.begin() + static_cast<std::ptrdiff_t>(keep[1]));
      std::sort(group.begin(), group.end());
    }
  } else {
    for (std::size_t g = 0; g < spec.groups; ++g) {
      std::vector<std::size_t> group(
          rest.begin() + static_cast<std::ptrdiff_t>(g * spec.group_size),
          rest.begin() + static_cast<std::ptrdiff_t>((g + 1) * spec.group_size));
      std::sort(group.begin(), group.end());
      out.groups.push_back(std::move(group));
    }
  }
  return out;
}

ExperimentConfig ExperimentConfig::full(Family family, std::uint64_t seed) {
  ExperimentConfig config;
  config.dataset = DatasetSpec::defaults(family, seed);
  config.root_seed = seed;
  config.forest.n_trees = 500;
  return config;
}

ExperimentConfig ExperimentConfig::quick_profile(Family family, std::uint64_t seed) {
  ExperimentConfig config = full(family, seed);
  config.quick = true;
  config.dataset.counts = ClassCounts{600, 0, 200, 200, 200};
  if (family == Family::kB) {
    config.dataset.counts.none = 360;
    config.dataset.counts.corrupted = 240;
  }
  config.split = SplitSpec{200, 200, 8, 100, false};
  config.forest.n_trees = 200;
  config.schedule = {1, 2, 5, 10, 20, 40, 100, 200, 400, 810};
  return config;
}

namespace {

ClassCounts counts_override(const json& j, ClassCounts counts) {
  counts.none = j.value("none", counts.none);
  counts.corrupted = j.value("corrupted", counts.corrupted);
  counts.variance = j.value("variance", counts.variance);
  counts.mean = j.value("mean", counts.mean);
  counts.slope = j.value("slope", counts.slope);
  return counts;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  try {
    const json doc = json::parse(in);
    if (doc.contains("family")) {
      base.dataset.family = parse_family(doc.at("family").get<std::string>());
    }
    if (doc.contains("seed")) {
      base.root_seed = doc.at("seed").get<std::uint64_t>();
      base.dataset.seed = base.root_seed;
    }
    if (doc.contains("counts")) base.dataset.counts = counts_override(doc.at("counts"), base.dataset.counts);
    if (doc.contains("grid")) base.grid_manifest = doc.at("grid").get<std::string>();
    if (doc.contains("split")) {
      const json& s = doc.at("split");
      base.split.train_normal = s.value("train_normal", base.split.train_normal);
      base.split.train_anomalous = s.value("train_anomalous", base.split.train_anomalous);
      base.split.groups = s.value("groups", base.split.groups);
      base.split.group_size = s.value("group_size", base.split.group_size);
      base.split.stratify_groups = s.value("stratify_groups", base.split.stratify_groups);
    }
    if (doc.contains("forest")) {
      const json& f = doc.at("forest");
      base.forest.n_trees = f.value("n_trees", base.forest.n_trees);
      if (f.contains("mtry")) base.forest.mtry = f.at("mtry").get<std::size_t>();
      if (f.contains("max_depth")) base.forest.max_depth = f.at("max_depth").get<std::size_t>();
      base.forest.min_leaf = f.value("min_leaf", base.forest.min_leaf);
    }
    if (doc.contains("schedule")) base.schedule = doc.at("schedule").get<std::vector<std::size_t>>();
    base.top_k = doc.value("top_k", base.top_k);
    if (doc.contains("out")) base.out_dir = doc.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
  if (base.dataset.family == Family::kA) base.dataset.counts.corrupted = 0;
  return base;
}

const ForwardPoint* ExperimentReport::at_k(std::size_t k) const {
  for (const auto& point : curve) {
    if (point.k == k) return &point;
  }
  return nullptr;
}

std::size_t ExperimentReport::top_count(TestKind test) const {
  return static_cast<std::size_t>(
      std::count_if(top.begin(), top.end(), [&](const TopEntry& e) { return e.test == test; }));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::vector<std::string> split_id(const std::string& id) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto at = id.find(" / ", start);
    parts.push_back(id.substr(start, at - start));
    if (at == std::string::npos) break;
    start = at + 3;
  }
  return parts;
}

}  // namespace

std::string emit_topk_table(const Ranking& ranking, std::size_t k) {
  std::string out = "rank\ttype\tlevel\twindow_length\tsmoothed\twindow_step\n";
  k = std::min(k, ranking.entries.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto parts = split_id(ranking.entries[i].config_id);
    if (parts.size() < 4) {
      throw Error(ErrorCode::kShape,
                  fmt::format("indicator id '{}' is not in table form", ranking.entries[i].config_id));
    }
    const bool smoothed = parts.size() > 4 && parts[4] == "smoothed";
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", i + 1, parts[0], parts[1], parts[2],
                       smoothed ? "yes" : "no", parts[3]);
  }
  return out;
}

std::string emit_curve_data(std::span<const ForwardPoint> curve) {
  std::string out =
      "k\ttrain\toob\ttest_min\ttest_q1\ttest_median\ttest_q3\ttest_max\ttest_mean\ttest_std\n";
  for (const auto& point : curve) {
    const auto& e = point.evaluation;
    const auto& g = e.group_accuracies;
    out += fmt::format("{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n",
                       point.k, e.train_accuracy, e.oob.accuracy, quantile(g, 0.0),
                       quantile(g, 0.25), quantile(g, 0.5), quantile(g, 0.75), quantile(g, 1.0),
                       e.test_mean(), e.test_std());
  }
  return out;
}

namespace {

json evaluation_json(const Evaluation& e) {
  return {{"train_accuracy", e.train_accuracy},
          {"oob_accuracy", e.oob.accuracy},
          {"oob_coverage", e.oob.coverage()},
          {"test_mean", e.test_mean()},
          {"test_std", e.test_std()},
          {"group_accuracies", e.group_accuracies}};
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json doc;
  doc["format"] = "shiftdiag-report";
  doc["version"] = 1;
  doc["family"] = to_string(report.family);
  doc["root_seed"] = report.root_seed;
  doc["signals"] = report.signals;
  doc["grid_size"] = report.grid_size;
  doc["train_rows"] = report.train_rows;
  doc["group_sizes"] = report.group_sizes;
  doc["full_grid"] = evaluation_json(report.full_grid);
  json top = json::array();
  for (const auto& e : report.top) {
    top.push_back({{"rank", e.rank},
                   {"config_id", e.config_id},
                   {"test", test_code(e.test)},
                   {"relevance", e.relevance},
                   {"score", e.score}});
  }
  doc["top"] = std::move(top);
  json curve = json::array();
  for (const auto& point : report.curve) {
    json item = evaluation_json(point.evaluation);
    item["k"] = point.k;
    curve.push_back(std::move(item));
  }
  doc["curve"] = std::move(curve);
  doc["warnings"] = report.warnings;
  return doc.dump(2);
}

std::string report_summary(const ExperimentReport& report) {
  std::string out;
  out += fmt::format("data set {}  seed {}  signals {}  indicators {}\n",
                     to_string(report.family), report.root_seed, report.signals,
                     report.grid_size);
  out += fmt::format("training rows {}  test groups {}\n\n", report.train_rows,
                     report.group_sizes.size());
  const auto& f = report.full_grid;
  out += "all indicators\n";
  out += fmt::format("  train accuracy {:.4f}\n  OOB accuracy   {:.4f} (coverage {:.3f})\n",
                     f.train_accuracy, f.oob.accuracy, f.oob.coverage());
  out += fmt::format("  test accuracy  {:.4f} ({:.4f})\n\n", f.test_mean(), f.test_std());
  out += fmt::format("best {} indicators by mRMR\n", report.top.size());
  for (const auto& e : report.top) {
    out += fmt::format("  {:>2}  {}\n", e.rank, e.config_id);
  }
  out += "\nforward selection\n     k   train     OOB    test (sd)\n";
  for (const auto& point : report.curve) {
    const auto& e = point.evaluation;
    out += fmt::format("  {:>4}  {:.4f}  {:.4f}  {:.4f} ({:.4f})\n", point.k, e.train_accuracy,
                       e.oob.accuracy, e.test_mean(), e.test_std());
  }
  if (!report.warnings.empty()) {
    constexpr std::size_t kShown = 5;
    out += fmt::format("\n{} warnings (full list in report.json)\n", report.warnings.size());
    for (std::size_t i = 0; i < std::min(kShown, report.warnings.size()); ++i) {
      out += "  " + report.warnings[i] + "\n";
    }
    if (report.warnings.size() > kShown) out += "  ...\n";
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << text;
}

template <typename Fn>
auto run_stage(std::string_view stage, int code, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), code, e.what());
  }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const bool persist = !config.out_dir.empty();
  if (persist) {
    run_stage("setup", stage_code::kSimulate,
              [&] { std::filesystem::create_directories(config.out_dir); });
  }
  auto path = [&](std::string_view name) { return config.out_dir / name; };

  ExperimentReport report;
  report.family = config.dataset.family;
  report.root_seed = config.root_seed;

  DatasetSpec dataset_spec = config.dataset;
  dataset_spec.seed = config.root_seed;
  const auto signals = run_stage("simulate", stage_code::kSimulate, [&] {
    auto out = gen_dataset(dataset_spec, config.threads);
    if (persist) save_dataset(path("dataset.jsonl"), dataset_spec, out);
    return out;
  });
  report.signals = signals.size();

  const auto [grid, build] = run_stage("indicators", stage_code::kIndicators, [&] {
    const GridManifest manifest =
        config.grid_manifest ? load_manifest(*config.grid_manifest) : default_manifest();
    Grid g = build_grid(manifest);
    MatrixBuild b = compute_matrix(signals, g, config.threads);
    if (persist) {
      write_text(path("grid.json"), manifest_to_json(manifest) + "\n");
      save_matrix(path("matrix.tsv"), b.matrix);
    }
    return std::pair{std::move(g), std::move(b)};
  });
  report.grid_size = grid.size();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (build.shortfalls[c] > 0) {
      report.warnings.push_back(fmt::format("{}: {} signals too short, indicator set to 0",
                                            grid[c].id(), build.shortfalls[c]));
    }
  }

  const std::uint64_t split_seed = derive_seed(config.root_seed, stream::kSplit);
  const auto split = run_stage("split", stage_code::kSplit, [&] {
    DatasetSplit s = split_dataset(signals, config.split, split_seed);
    if (persist) {
      json doc = {{"seed", split_seed}, {"train", s.train}, {"groups", s.groups}};
      write_text(path("split.json"), doc.dump() + "\n");
    }
    return s;
  });
  const IndicatorMatrix train = build.matrix.select_rows(split.train);
  std::vector<IndicatorMatrix> groups;
  for (const auto& g : split.groups) {
    groups.push_back(build.matrix.select_rows(g));
    report.group_sizes.push_back(g.size());
  }
  report.train_rows = train.rows();

  ForestParams forest_params = config.forest;
  forest_params.seed = derive_seed(config.root_seed, stream::kForest);
  forest_params.threads = config.threads;
  report.full_grid = run_stage("train", stage_code::kTrain, [&] {
    const Forest forest = train_forest(train, forest_params);
    Evaluation e = evaluate(forest, train, groups, config.threads);
    if (persist) {
      save_forest(path("model.json"), forest);
      std::string text = "group\tsignal\tlabel\tpredicted\tvote_fraction\n";
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto predictions = predict_matrix(forest, groups[g], config.threads);
        for (std::size_t r = 0; r < groups[g].rows(); ++r) {
          text += fmt::format("{}\t{}\t{}\t{}\t{:.17g}\n", g, groups[g].signal_ids()[r],
                              int{groups[g].labels()[r]}, predictions[r].label,
                              predictions[r].vote_fraction);
        }
      }
      write_text(path("predictions.tsv"), text);
      std::string importance = "column\tconfig_id\timportance\n";
      const auto scores = feature_importance(forest);
      for (std::size_t c = 0; c < scores.size(); ++c) {
        importance += fmt::format("{}\t{}\t{:.17g}\n", c, forest.config_ids[c], scores[c]);
      }
      write_text(path("importance.tsv"), importance);
    }
    return e;
  });

  const Ranking ranking = run_stage("select", stage_code::kSelect, [&] {
    Ranking r = mrmr_rank(train, train.cols());
    if (persist) {
      save_ranking(path("ranking.tsv"), r);
      write_text(path("topk.tsv"), emit_topk_table(r, config.top_k));
    }
    return r;
  });
  for (std::size_t i = 0; i < std::min(config.top_k, ranking.entries.size()); ++i) {
    const auto& e = ranking.entries[i];
    report.top.push_back({i + 1, e.config_id, grid[e.column].test, e.relevance, e.score});
  }

  report.curve = run_stage("forward", stage_code::kForward, [&] {
    std::vector<std::size_t> schedule = config.schedule;
    if (schedule.empty()) schedule = default_schedule(grid.size());
    std::erase_if(schedule, [&](std::size_t k) { return k == 0 || k > grid.size(); });
    auto curve = forward_curve(train, ranking, schedule, forest_params, groups);
    if (persist) write_text(path("curve.tsv"), emit_curve_data(curve));
    return curve;
  });

  if (persist) {
    run_stage("report", stage_code::kReport, [&] {
      write_text(path("report.json"), report_to_json(report) + "\n");
      write_text(path("summary.txt"), report_summary(report));
    });
  }
  return report;
}

}  // namespace shiftdiag
