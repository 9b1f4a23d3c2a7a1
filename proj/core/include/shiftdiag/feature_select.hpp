#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shiftdiag/forest.hpp"
#include "shiftdiag/indicator_matrix.hpp"

namespace shiftdiag {

// Joint counts of (x bit, y bit); counts[a][b] for x = a, y = b.
struct MutualInfoTable {
  std::array<std::array<std::uint64_t, 2>, 2> counts{};

  std::uint64_t total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
};

MutualInfoTable contingency(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y);

// Plug-in mutual information in bits, with 0 log 0 = 0.
double mutual_information(const MutualInfoTable& table);
// Throws kShape when the lengths differ or are zero.
double mutual_information(std::span<const std::uint8_t> x, std::span<const std::uint8_t> y);

enum class MrmrCriterion {
  kDifference,  // relevance - mean redundancy (MID)
  kQuotient,    // relevance / mean redundancy (MIQ)
};

struct RankedIndicator {
  std::size_t column = 0;
  std::string config_id;
  double relevance = 0.0;
  double redundancy = 0.0;  // mean MI with the previously selected indicators
  double score = 0.0;
};

struct Ranking {
  std::vector<RankedIndicator> entries;

  std::vector<std::size_t> columns(std::size_t k) const;
};

// Greedy mRMR against the matrix labels; ties go to the lowest column.
// Throws kNoSignal for single-class labels, kShape if count > columns.
Ranking mrmr_rank(const IndicatorMatrix& matrix, std::size_t count,
                  MrmrCriterion criterion = MrmrCriterion::kDifference);

// Tab-separated: rank, column, config_id, relevance, redundancy, score.
void write_ranking(std::ostream& out, const Ranking& ranking);
Ranking read_ranking(std::istream& in);
void save_ranking(const std::filesystem::path& path, const Ranking& ranking);
Ranking load_ranking(const std::filesystem::path& path);

// 1..20, 25..100 by 5, 150..800 by 50, then `features`; capped at `features`.
std::vector<std::size_t> default_schedule(std::size_t features);

struct ForwardPoint {
  std::size_t k = 0;
  Evaluation evaluation;
};

// For each k, fits a forest on the top-k ranked columns of `train` and scores
// it on train, OOB and every test group.
std::vector<ForwardPoint> forward_curve(const IndicatorMatrix& train, const Ranking& ranking,
                                        std::span<const std::size_t> schedule,
                                        const ForestParams& params,
                                        std::span<const IndicatorMatrix> groups);

}  // namespace shiftdiag
