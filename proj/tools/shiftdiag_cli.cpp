// shiftdiag: simulate change-point signals, turn them into binary indicator
// vectors, rank indicators with mRMR and classify with a random forest.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "shiftdiag/dataset_io.hpp"
#include "shiftdiag/error.hpp"
#include "shiftdiag/experiment.hpp"
#include "shiftdiag/feature_select.hpp"
#include "shiftdiag/forest.hpp"
#include "shiftdiag/grid.hpp"
#include "shiftdiag/indicator_matrix.hpp"
#include "shiftdiag/signal_sim.hpp"
#include "shiftdiag/stat_tests.hpp"

namespace fs = std::filesystem;
using namespace shiftdiag;

namespace {

// Exit codes for single-stage subcommands match the pipeline stage codes.
int fail(std::string_view stage, int code, const std::exception& e) {
  std::string detail;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    detail = fmt::format(" [{}]", to_string(err->code()));
  }
  std::cerr << fmt::format("shiftdiag: stage {} failed{}: {}\n", stage, detail, e.what());
  return code;
}

ClassCounts parse_counts(const std::vector<std::size_t>& values, Family family) {
  ClassCounts counts = DatasetSpec::defaults(family, 0).counts;
  if (values.empty()) return counts;
  if (values.size() != 5) {
    throw Error(ErrorCode::kConfig,
                "--counts takes five values: none,corrupted,variance,mean,slope");
  }
  return {values[0], values[1], values[2], values[3], values[4]};
}

Grid grid_from(const std::optional<std::string>& path) {
  return build_grid(path ? load_manifest(*path) : default_manifest());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary indicator fusion for change-point diagnosis"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a benchmark data set");
  std::string family_text = "A";
  std::uint64_t seed = 1;
  std::string out_path;
  std::vector<std::size_t> counts;
  sim->add_option("--family", family_text, "A or B")->check(CLI::IsMember({"A", "B", "a", "b"}));
  sim->add_option("--seed", seed, "Root seed");
  sim->add_option("--out", out_path, "Output dataset (JSON lines)")->required();
  sim->add_option("--counts", counts, "none,corrupted,variance,mean,slope")->delimiter(',');

  // indicators
  auto* ind = app.add_subcommand("indicators", "Compute the indicator matrix of a data set");
  std::string data_path;
  std::optional<std::string> grid_path;
  ind->add_option("--data", data_path, "Dataset file")->required()->check(CLI::ExistingFile);
  ind->add_option("--grid", grid_path, "Grid manifest (default: built-in grid-810)");
  ind->add_option("--out", out_path, "Output matrix")->required();

  // select
  auto* sel = app.add_subcommand("select", "Rank indicators with mRMR");
  std::string matrix_path;
  std::size_t count = 0;
  bool quotient = false;
  std::size_t top_k = 10;
  sel->add_option("--matrix", matrix_path, "Training matrix")->required()->check(CLI::ExistingFile);
  sel->add_option("--count", count, "Indicators to rank (0 = all)");
  sel->add_option("--out", out_path, "Output ranking")->required();
  sel->add_flag("--miq", quotient, "Use the quotient criterion instead of the difference");
  sel->add_option("--top", top_k, "Rows of the printed top-k table");

  // train
  auto* train = app.add_subcommand("train", "Fit a random forest on an indicator matrix");
  ForestParams params;
  std::size_t mtry = 0;
  std::size_t max_depth = 0;
  train->add_option("--matrix", matrix_path, "Training matrix")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_path, "Output model")->required();
  train->add_option("--trees", params.n_trees, "Number of trees");
  train->add_option("--mtry", mtry, "Features per split (0 = ceil(sqrt(p)))");
  train->add_option("--max-depth", max_depth, "Depth cap (0 = grow to purity)");
  train->add_option("--min-leaf", params.min_leaf, "Minimum leaf weight");
  train->add_option("--seed", seed, "Forest seed");

  // predict / evaluate / oob
  std::string model_path;
  auto* pred = app.add_subcommand("predict", "Predict every row of a matrix");
  pred->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  pred->add_option("--matrix", matrix_path, "Matrix")->required()->check(CLI::ExistingFile);
  pred->add_option("--out", out_path, "Predictions (default stdout)");

  auto* eval = app.add_subcommand("evaluate", "Accuracy of a model on a labeled matrix");
  eval->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--matrix", matrix_path, "Matrix")->required()->check(CLI::ExistingFile);

  auto* oob = app.add_subcommand("oob", "Out-of-bag accuracy on the training matrix");
  oob->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  oob->add_option("--matrix", matrix_path, "Training matrix")->required()->check(CLI::ExistingFile);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run the whole protocol and write a report");
  std::optional<std::string> config_path;
  bool quick = false;
  pipe->add_option("--family", family_text, "A or B")->check(CLI::IsMember({"A", "B", "a", "b"}));
  pipe->add_option("--seed", seed, "Root seed");
  pipe->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  pipe->add_flag("--quick", quick, "Desk-scale CI profile");
  pipe->add_option("--out", out_path, "Output directory")->required();
  pipe->add_option("--grid", grid_path, "Grid manifest (default: built-in grid-810)");

  // test
  auto* test = app.add_subcommand("test", "Run one two-sample test on two files");
  std::string kind_text;
  std::string x_path, y_path;
  test->add_option("--kind", kind_text, "u, ks or f")->required()->check(CLI::IsMember({"u", "ks", "f"}));
  test->add_option("--x", x_path, "First sample")->required()->check(CLI::ExistingFile);
  test->add_option("--y", y_path, "Second sample")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (*sim) {
    try {
      const Family family = parse_family(family_text);
      DatasetSpec spec = DatasetSpec::defaults(family, seed);
      spec.counts = parse_counts(counts, family);
      const auto signals = gen_dataset(spec, threads);
      save_dataset(out_path, spec, signals);
      std::cout << fmt::format("wrote {} signals (set {}, seed {}) to {}\n", signals.size(),
                               to_string(family), seed, out_path);
      return 0;
    } catch (const std::exception& e) {
      return fail("simulate", stage_code::kSimulate, e);
    }
  }

  if (*ind) {
    try {
      const Dataset data = load_dataset(data_path);
      const Grid grid = grid_from(grid_path);
      const MatrixBuild build = compute_matrix(data.signals, grid, threads);
      save_matrix(out_path, build.matrix);
      std::size_t short_configs = 0;
      for (std::size_t c = 0; c < grid.size(); ++c) {
        if (build.shortfalls[c] == 0) continue;
        ++short_configs;
        std::cerr << fmt::format("warning: {}: {} signals too short, set to 0\n", grid[c].id(),
                                 build.shortfalls[c]);
      }
      std::cout << fmt::format("wrote {} x {} matrix to {} ({} configs with short signals)\n",
                               build.matrix.rows(), build.matrix.cols(), out_path, short_configs);
      return 0;
    } catch (const std::exception& e) {
      return fail("indicators", stage_code::kIndicators, e);
    }
  }

  if (*sel) {
    try {
      const IndicatorMatrix matrix = load_matrix(matrix_path);
      const Ranking ranking =
          mrmr_rank(matrix, count == 0 ? matrix.cols() : count,
                    quotient ? MrmrCriterion::kQuotient : MrmrCriterion::kDifference);
      save_ranking(out_path, ranking);
      std::cout << emit_topk_table(ranking, top_k);
      return 0;
    } catch (const std::exception& e) {
      return fail("select", stage_code::kSelect, e);
    }
  }

  if (*train) {
    try {
      const IndicatorMatrix matrix = load_matrix(matrix_path);
      if (mtry > 0) params.mtry = mtry;
      if (max_depth > 0) params.max_depth = max_depth;
      params.seed = seed;
      params.threads = threads;
      const Forest forest = train_forest(matrix, params);
      save_forest(out_path, forest);
      const OobEstimate estimate = oob_accuracy(forest, matrix);
      std::cout << fmt::format("trained {} trees on {} x {}; OOB accuracy {:.4f} (coverage {:.3f})\n",
                               forest.trees.size(), matrix.rows(), matrix.cols(),
                               estimate.accuracy, estimate.coverage());
      return 0;
    } catch (const std::exception& e) {
      return fail("train", stage_code::kTrain, e);
    }
  }

  if (*pred || *eval || *oob) {
    try {
      const Forest forest = load_forest(model_path);
      const IndicatorMatrix matrix = load_matrix(matrix_path);
      if (*oob) {
        const OobEstimate estimate = oob_accuracy(forest, matrix);
        std::cout << fmt::format("oob_accuracy\t{:.6f}\ncoverage\t{:.6f}\n", estimate.accuracy,
                                 estimate.coverage());
        return 0;
      }
      const auto predictions = predict_matrix(forest, matrix, threads);
      if (*eval) {
        std::cout << fmt::format("accuracy\t{:.6f}\nrows\t{}\n",
                                 accuracy(predictions, matrix.labels()), matrix.rows());
        return 0;
      }
      std::ofstream file;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", out_path));
      }
      std::ostream& out = out_path.empty() ? std::cout : file;
      out << "signal\tlabel\tpredicted\tvote_fraction\n";
      for (std::size_t r = 0; r < matrix.rows(); ++r) {
        out << fmt::format("{}\t{}\t{}\t{:.6f}\n", matrix.signal_ids()[r],
                           int{matrix.labels()[r]}, predictions[r].label,
                           predictions[r].vote_fraction);
      }
      return 0;
    } catch (const std::exception& e) {
      return fail("evaluate", stage_code::kReport, e);
    }
  }

  if (*pipe) {
    try {
      const Family family = parse_family(family_text);
      ExperimentConfig config = quick ? ExperimentConfig::quick_profile(family, seed)
                                      : ExperimentConfig::full(family, seed);
      if (config_path) config = load_experiment_config(*config_path, config);
      if (grid_path) config.grid_manifest = *grid_path;
      config.out_dir = out_path;
      config.threads = threads;
      const ExperimentReport report = run_experiment(config);
      std::cout << report_summary(report);
      return 0;
    } catch (const StageError& e) {
      std::cerr << fmt::format("shiftdiag: stage {} failed: {}\n", e.stage(), e.what());
      return e.exit_code();
    } catch (const std::exception& e) {
      return fail("config", 2, e);
    }
  }

  if (*test) {
    try {
      const auto x = load_sample(x_path);
      const auto y = load_sample(y_path);
      const TestResult r = run_test(parse_test(kind_text), x, y);
      std::cout << fmt::format("statistic\t{:.17g}\np_value\t{:.17g}\nn1\t{}\nn2\t{}\n",
                               r.statistic, r.p_value, r.n1, r.n2);
      return 0;
    } catch (const std::exception& e) {
      return fail("test", 2, e);
    }
  }
  return 0;
}
