#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shiftdiag/grid.hpp"
#include "shiftdiag/signal_sim.hpp"

namespace shiftdiag {

// Signals x indicators bit matrix, row-major, with the binarized class label
// (1 = anomalous) of every row.
class IndicatorMatrix {
 public:
  IndicatorMatrix() = default;
  IndicatorMatrix(std::vector<std::string> config_ids, std::vector<std::string> signal_ids,
                  std::vector<std::uint8_t> labels, std::vector<std::uint8_t> bits);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return config_ids_.size(); }

  std::uint8_t bit(std::size_t row, std::size_t col) const { return bits_[row * cols() + col]; }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return {bits_.data() + r * cols(), cols()};
  }
  std::vector<std::uint8_t> column(std::size_t c) const;

  std::span<const std::uint8_t> labels() const { return labels_; }
  const std::vector<std::string>& config_ids() const { return config_ids_; }
  const std::vector<std::string>& signal_ids() const { return signal_ids_; }

  IndicatorMatrix select_rows(std::span<const std::size_t> rows) const;
  IndicatorMatrix select_columns(std::span<const std::size_t> cols) const;

  // FNV-1a over ids, labels and bits; identifies the matrix a model was fit on.
  std::uint64_t fingerprint() const;

  friend bool operator==(const IndicatorMatrix&, const IndicatorMatrix&) = default;

 private:
  std::vector<std::string> config_ids_;
  std::vector<std::string> signal_ids_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::uint8_t> bits_;
};

struct MatrixBuild {
  IndicatorMatrix matrix;
  // Per grid position, how many signals were too short for the config.
  std::vector<std::size_t> shortfalls;
};

// Rows follow dataset order. Parallel over signals; output is schedule-free.
MatrixBuild compute_matrix(std::span<const LabeledSignal> dataset, const Grid& grid,
                           unsigned threads = 0);

// Text format: a "#shiftdiag-matrix v1" line, a tab-separated header
// "signal<TAB>label<TAB>id_1<TAB>...", then "signal<TAB>label<TAB>0101..." rows.
void write_matrix(std::ostream& out, const IndicatorMatrix& matrix);
IndicatorMatrix read_matrix(std::istream& in);
void save_matrix(const std::filesystem::path& path, const IndicatorMatrix& matrix);
IndicatorMatrix load_matrix(const std::filesystem::path& path);

}  // namespace shiftdiag
