#include "shiftdiag/indicator_matrix.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "shiftdiag/error.hpp"
#include "shiftdiag/indicators.hpp"
#include "shiftdiag/parallel.hpp"

namespace shiftdiag {

namespace {

constexpr std::string_view kMagic = "#shiftdiag-matrix v1";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

IndicatorMatrix::IndicatorMatrix(std::vector<std::string> config_ids,
                                 std::vector<std::string> signal_ids,
                                 std::vector<std::uint8_t> labels,
                                 std::vector<std::uint8_t> bits)
    : config_ids_(std::move(config_ids)),
      signal_ids_(std::move(signal_ids)),
      labels_(std::move(labels)),
      bits_(std::move(bits)) {
  if (signal_ids_.size() != labels_.size() ||
      bits_.size() != labels_.size() * config_ids_.size()) {
    throw Error(ErrorCode::kShape,
                fmt::format("matrix shape mismatch: {} ids, {} labels, {} bits for {} "
                            "columns",
                            signal_ids_.size(), labels_.size(), bits_.size(),
                            config_ids_.size()));
  }
}

std::vector<std::uint8_t> IndicatorMatrix::column(std::size_t c) const {
  std::vector<std::uint8_t> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = bit(r, c);
  return out;
}

IndicatorMatrix IndicatorMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> bits;
  ids.reserve(rows.size());
  labels.reserve(rows.size());
  bits.reserve(rows.size() * cols());
  for (std::size_t r : rows) {
    ids.push_back(signal_ids_.at(r));
    labels.push_back(labels_[r]);
    const auto src = row(r);
    bits.insert(bits.end(), src.begin(), src.end());
  }
  return {config_ids_, std::move(ids), std::move(labels), std::move(bits)};
}

IndicatorMatrix IndicatorMatrix::select_columns(std::span<const std::size_t> cols) const {
  std::vector<std::string> ids;
  ids.reserve(cols.size());
  for (std::size_t c : cols) ids.push_back(config_ids_.at(c));
  std::vector<std::uint8_t> bits;
  bits.reserve(rows() * cols.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c : cols) bits.push_back(bit(r, c));
  }
  return {std::move(ids), signal_ids_, labels_, std::move(bits)};
}

std::uint64_t IndicatorMatrix::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  auto feed_string = [&](const std::string& s) {
    for (char c : s) feed(static_cast<unsigned char>(c));
    feed(0);
  };
  for (const auto& id : config_ids_) feed_string(id);
  for (const auto& id : signal_ids_) feed_string(id);
  for (auto label : labels_) feed(label);
  for (auto b : bits_) feed(b);
  return h;
}

MatrixBuild compute_matrix(std::span<const LabeledSignal> dataset, const Grid& grid,
                           unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::kEmptyPlan, "indicator grid is empty");
  if (dataset.empty()) throw Error(ErrorCode::kShape, "dataset is empty");
  const std::size_t p = grid.size();
  std::vector<std::string> config_ids;
  config_ids.reserve(p);
  for (const auto& config : grid) config_ids.push_back(config.id());

  std::vector<std::string> signal_ids(dataset.size());
  std::vector<std::uint8_t> labels(dataset.size());
  std::vector<std::uint8_t> bits(dataset.size() * p);
  std::vector<std::vector<std::size_t>> row_shortfalls(dataset.size());

  parallel_for(dataset.size(), threads, [&](std::size_t r) {
    IndicatorVector vec = compute_indicator_vector(dataset[r], grid);
    std::copy(vec.bits.begin(), vec.bits.end(), bits.begin() + static_cast<std::ptrdiff_t>(r * p));
    signal_ids[r] = dataset[r].id;
    labels[r] = dataset[r].anomalous() ? 1 : 0;
    row_shortfalls[r] = std::move(vec.shortfalls);
  });

  MatrixBuild out;
  out.shortfalls.assign(p, 0);
  for (const auto& list : row_shortfalls) {
    for (std::size_t c : list) ++out.shortfalls[c];
  }
  out.matrix = IndicatorMatrix(std::move(config_ids), std::move(signal_ids),
                               std::move(labels), std::move(bits));
  return out;
}

void write_matrix(std::ostream& out, const IndicatorMatrix& matrix) {
  out << kMagic << '\n' << "signal\tlabel";
  for (const auto& id : matrix.config_ids()) out << '\t' << id;
  out << '\n';
  std::string row_text;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    row_text.clear();
    for (auto b : matrix.row(r)) row_text.push_back(b ? '1' : '0');
    out << matrix.signal_ids()[r] << '\t' << int{matrix.labels()[r]} << '\t' << row_text
        << '\n';
  }
}

IndicatorMatrix read_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw Error(ErrorCode::kIo, "not a shiftdiag indicator matrix");
  }
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "matrix header missing");
  std::vector<std::string> header = split_tabs(line);
  if (header.size() < 2 || header[0] != "signal" || header[1] != "label") {
    throw Error(ErrorCode::kIo, "malformed matrix header");
  }
  std::vector<std::string> config_ids(header.begin() + 2, header.end());
  if (config_ids.size() == 1 && config_ids[0].empty()) config_ids.clear();

  std::vector<std::string> signal_ids;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> bits;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    const std::string bit_text = fields.size() > 2 ? fields[2] : std::string{};
    if (fields.size() < 2 || fields.size() > 3 || (fields[1] != "0" && fields[1] != "1") ||
        bit_text.size() != config_ids.size()) {
      throw Error(ErrorCode::kIo, fmt::format("matrix line {} is malformed", line_no));
    }
    signal_ids.push_back(fields[0]);
    labels.push_back(fields[1] == "1" ? 1 : 0);
    for (char c : bit_text) {
      if (c != '0' && c != '1') {
        throw Error(ErrorCode::kIo, fmt::format("matrix line {} has a non-bit", line_no));
      }
      bits.push_back(c == '1' ? 1 : 0);
    }
  }
  return {std::move(config_ids), std::move(signal_ids), std::move(labels), std::move(bits)};
}

void save_matrix(const std::filesystem::path& path, const IndicatorMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  write_matrix(out, matrix);
}

IndicatorMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  return read_matrix(in);
}

}  // namespace shiftdiag
