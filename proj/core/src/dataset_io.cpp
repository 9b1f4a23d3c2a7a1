#include "shiftdiag/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "shiftdiag/error.hpp"

namespace shiftdiag {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "shiftdiag-dataset";
constexpr int kVersion = 1;

json counts_to_json(const ClassCounts& c) {
  return {{"none", c.none},
          {"corrupted", c.corrupted},
          {"variance", c.variance},
          {"mean", c.mean},
          {"slope", c.slope}};
}

ClassCounts counts_from_json(const json& j) {
  ClassCounts c;
  c.none = j.at("none").get<std::size_t>();
  c.corrupted = j.at("corrupted").get<std::size_t>();
  c.variance = j.at("variance").get<std::size_t>();
  c.mean = j.at("mean").get<std::size_t>();
  c.slope = j.at("slope").get<std::size_t>();
  return c;
}

json params_to_json(const SimulationParams& p) {
  return {{"min_length_a", p.min_length_a},   {"max_length_a", p.max_length_a},
          {"min_length_b", p.min_length_b},   {"max_length_b", p.max_length_b},
          {"sigma", {p.sigma_lo, p.sigma_hi}}, {"mu", {p.mu_lo, p.mu_hi}},
          {"slope", {p.slope_lo, p.slope_hi}}, {"base_dof_b", p.base_dof_b},
          {"shift_dof", {p.shift_dof_lo, p.shift_dof_hi}},
          {"sine_amplitude", p.sine_amplitude},
          {"sine_period_fraction", p.sine_period_fraction},
          {"sine_phase", p.sine_phase}};
}

SimulationParams params_from_json(const json& j) {
  SimulationParams p;
  p.min_length_a = j.at("min_length_a");
  p.max_length_a = j.at("max_length_a");
  p.min_length_b = j.at("min_length_b");
  p.max_length_b = j.at("max_length_b");
  p.sigma_lo = j.at("sigma").at(0);
  p.sigma_hi = j.at("sigma").at(1);
  p.mu_lo = j.at("mu").at(0);
  p.mu_hi = j.at("mu").at(1);
  p.slope_lo = j.at("slope").at(0);
  p.slope_hi = j.at("slope").at(1);
  p.base_dof_b = j.at("base_dof_b");
  p.shift_dof_lo = j.at("shift_dof").at(0);
  p.shift_dof_hi = j.at("shift_dof").at(1);
  p.sine_amplitude = j.at("sine_amplitude");
  p.sine_period_fraction = j.at("sine_period_fraction");
  p.sine_phase = j.at("sine_phase");
  return p;
}

}  // namespace

void write_dataset(std::ostream& out, const DatasetSpec& spec,
                   std::span<const LabeledSignal> signals) {
  const json header = {{"format", kFormat},
                       {"version", kVersion},
                       {"family", to_string(spec.family)},
                       {"seed", spec.seed},
                       {"generator", kGeneratorName},
                       {"counts", counts_to_json(spec.counts)},
                       {"params", params_to_json(spec.params)}};
  out << header.dump() << '\n';
  for (const LabeledSignal& s : signals) {
    json record = {{"id", s.id},
                   {"family", to_string(s.family)},
                   {"label", to_string(s.label.kind)},
                   {"change_point", nullptr},
                   {"magnitude", nullptr},
                   {"values", s.values}};
    if (s.change_point) record["change_point"] = *s.change_point;
    if (s.label.magnitude) record["magnitude"] = *s.label.magnitude;
    out << record.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  try {
    if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "dataset is empty");
    ++line_no;
    const json header = json::parse(line);
    if (header.at("format") != kFormat) {
      throw Error(ErrorCode::kIo, "not a shiftdiag dataset file");
    }
    if (header.at("version") != kVersion) {
      throw Error(ErrorCode::kIo, fmt::format("unsupported dataset version {}",
                                              header.at("version").dump()));
    }
    data.spec.family = parse_family(header.at("family").get<std::string>());
    data.spec.seed = header.at("seed").get<std::uint64_t>();
    data.spec.counts = counts_from_json(header.at("counts"));
    data.spec.params = params_from_json(header.at("params"));
    data.generator = header.at("generator").get<std::string>();

    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json record = json::parse(line);
      LabeledSignal s;
      s.id = record.at("id").get<std::string>();
      s.family = parse_family(record.at("family").get<std::string>());
      s.label.kind = parse_kind(record.at("label").get<std::string>());
      if (!record.at("change_point").is_null()) {
        s.change_point = record.at("change_point").get<std::size_t>();
      }
      if (!record.at("magnitude").is_null()) {
        s.label.magnitude = record.at("magnitude").get<double>();
      }
      s.values = record.at("values").get<std::vector<double>>();
      data.signals.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo,
                fmt::format("dataset line {}: {}", line_no, e.what()));
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const DatasetSpec& spec,
                  std::span<const LabeledSignal> signals) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  write_dataset(out, spec, signals);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  return read_dataset(in);
}

std::vector<double> load_sample(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  for (char& c : text) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream tokens(text);
  std::vector<double> out;
  std::string token;
  while (tokens >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIo,
                  fmt::format("{}: '{}' is not a number", path.string(), token));
    }
  }
  return out;
}

}  // namespace shiftdiag
