#include "shiftdiag/feature_select.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "shiftdiag/error.hpp"

namespace shiftdiag {

MutualInfoTable contingency(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorCode::kShape, fmt::format("mutual information needs equal non-empty "
                                               "columns, got {} and {}",
                                               x.size(), y.size()));
  }
  MutualInfoTable table;
  for (std::size_t i = 0; i < x.size(); ++i) ++table.counts[x[i] ? 1 : 0][y[i] ? 1 : 0];
  return table;
}

double mutual_information(const MutualInfoTable& table) {
  const auto total = static_cast<double>(table.total());
  if (total == 0.0) return 0.0;
  double px[2], py[2];
  for (int a = 0; a < 2; ++a) {
    px[a] = static_cast<double>(table.counts[a][0] + table.counts[a][1]) / total;
    py[a] = static_cast<double>(table.counts[0][a] + table.counts[1][a]) / total;
  }
  double mi = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double joint = static_cast<double>(table.counts[a][b]) / total;
      if (joint > 0.0) mi += joint * std::log2(joint / (px[a] * py[b]));
    }
  }
  return std::max(0.0, mi);
}

double mutual_information(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y) {
  return mutual_information(contingency(x, y));
}

std::vector<std::size_t> Ranking::columns(std::size_t k) const {
  std::vector<std::size_t> out;
  k = std::min(k, entries.size());
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(entries[i].column);
  return out;
}

namespace {

// Columns packed 64 rows per word so joint counts reduce to popcounts.
class PackedColumns {
 public:
  explicit PackedColumns(std::size_t rows) : rows_(rows), words_((rows + 63) / 64) {}

  void add(std::span<const std::uint8_t> column) {
    std::vector<std::uint64_t> packed(words_, 0);
    for (std::size_t r = 0; r < column.size(); ++r) {
      if (column[r]) packed[r / 64] |= std::uint64_t{1} << (r % 64);
    }
    ones_.push_back(popcount(packed));
    data_.push_back(std::move(packed));
  }

  MutualInfoTable table(std::size_t a, std::size_t b) const {
    std::uint64_t both = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      both += static_cast<std::uint64_t>(std::popcount(data_[a][w] & data_[b][w]));
    }
    MutualInfoTable t;
    t.counts[1][1] = both;
    t.counts[1][0] = ones_[a] - both;
    t.counts[0][1] = ones_[b] - both;
    t.counts[0][0] = rows_ - ones_[a] - ones_[b] + both;
    return t;
  }

 private:
  static std::uint64_t popcount(const std::vector<std::uint64_t>& words) {
    std::uint64_t total = 0;
    for (auto w : words) total += static_cast<std::uint64_t>(std::popcount(w));
    return total;
  }

  std::size_t rows_;
  std::size_t words_;
  std::vector<std::vector<std::uint64_t>> data_;
  std::vector<std::uint64_t> ones_;
};

double combine(MrmrCriterion criterion, double relevance, double redundancy) {
  if (criterion == MrmrCriterion::kDifference) return relevance - redundancy;
  constexpr double kFloor = 1e-12;
  return relevance / std::max(redundancy, kFloor);
}

}  // namespace

Ranking mrmr_rank(const IndicatorMatrix& matrix, std::size_t count, MrmrCriterion criterion) {
  const std::size_t p = matrix.cols();
  if (count > p) {
    throw Error(ErrorCode::kShape,
                fmt::format("cannot rank {} of {} indicators", count, p));
  }
  const auto labels = matrix.labels();
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (matrix.rows() == 0 || positives == 0 || static_cast<std::size_t>(positives) == matrix.rows()) {
    throw Error(ErrorCode::kNoSignal, "mRMR needs both classes in the labels");
  }

  // Column p of the packed store is the class label.
  PackedColumns packed(matrix.rows());
  for (std::size_t c = 0; c < p; ++c) packed.add(matrix.column(c));
  packed.add(labels);

  std::vector<double> relevance(p);
  for (std::size_t c = 0; c < p; ++c) relevance[c] = mutual_information(packed.table(c, p));

  Ranking ranking;
  std::vector<double> redundancy_sum(p, 0.0);
  std::vector<bool> taken(p, false);
  for (std::size_t step = 0; step < count; ++step) {
    std::size_t best = p;
    double best_score = -std::numeric_limits<double>::infinity();
    double best_redundancy = 0.0;
    for (std::size_t c = 0; c < p; ++c) {
      if (taken[c]) continue;
      const double redundancy =
          step == 0 ? 0.0 : redundancy_sum[c] / static_cast<double>(step);
      const double score = step == 0 ? relevance[c] : combine(criterion, relevance[c], redundancy);
      if (best == p || score > best_score) {
        best = c;
        best_score = score;
        best_redundancy = redundancy;
      }
    }
    taken[best] = true;
    ranking.entries.push_back(
        {best, matrix.config_ids()[best], relevance[best], best_redundancy, best_score});
    if (step + 1 == count) break;
    for (std::size_t c = 0; c < p; ++c) {
      if (!taken[c]) redundancy_sum[c] += mutual_information(packed.table(c, best));
    }
  }
  return ranking;
}

void write_ranking(std::ostream& out, const Ranking& ranking) {
  out << "rank\tcolumn\tconfig_id\trelevance\tredundancy\tscore\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& e = ranking.entries[i];
    out << fmt::format("{}\t{}\t{}\t{:.17g}\t{:.17g}\t{:.17g}\n", i + 1, e.column, e.config_id,
                       e.relevance, e.redundancy, e.score);
  }
}

Ranking read_ranking(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("rank\tcolumn\tconfig_id", 0) != 0) {
    throw Error(ErrorCode::kIo, "not a ranking file");
  }
  Ranking ranking;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 6) throw Error(ErrorCode::kIo, fmt::format("ranking line {} malformed", line_no));
    try {
      ranking.entries.push_back({std::stoul(f[1]), f[2], std::stod(f[3]), std::stod(f[4]),
                                 std::stod(f[5])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIo, fmt::format("ranking line {} malformed", line_no));
    }
  }
  return ranking;
}

void save_ranking(const std::filesystem::path& path, const Ranking& ranking) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  write_ranking(out, ranking);
}

Ranking load_ranking(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  return read_ranking(in);
}

std::vector<std::size_t> default_schedule(std::size_t features) {
  std::vector<std::size_t> out;
  auto push = [&](std::size_t k) {
    if (k >= 1 && k <= features && (out.empty() || out.back() < k)) out.push_back(k);
  };
  for (std::size_t k = 1; k <= 20; ++k) push(k);
  for (std::size_t k = 25; k <= 100; k += 5) push(k);
  for (std::size_t k = 150; k <= 800; k += 50) push(k);
  push(features);
  return out;
}

std::vector<ForwardPoint> forward_curve(const IndicatorMatrix& train, const Ranking& ranking,
                                        std::span<const std::size_t> schedule,
                                        const ForestParams& params,
                                        std::span<const IndicatorMatrix> groups) {
  std::vector<ForwardPoint> out;
  out.reserve(schedule.size());
  for (std::size_t k : schedule) {
    if (k == 0 || k > ranking.entries.size()) {
      throw Error(ErrorCode::kShape, fmt::format("schedule value {} outside ranking of {}", k,
                                                 ranking.entries.size()));
    }
    const std::vector<std::size_t> cols = ranking.columns(k);
    const IndicatorMatrix sub_train = train.select_columns(cols);
    std::vector<IndicatorMatrix> sub_groups;
    sub_groups.reserve(groups.size());
    for (const auto& g : groups) sub_groups.push_back(g.select_columns(cols));
    const Forest forest = train_forest(sub_train, params);
    out.push_back({k, evaluate(forest, sub_train, sub_groups, params.threads)});
  }
  return out;
}

}  // namespace shiftdiag
