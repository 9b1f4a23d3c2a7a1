#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shiftdiag/signal_sim.hpp"

namespace shiftdiag {

// A dataset file is JSON Lines: one header object carrying the spec, seed and
// generator name, then one object per signal.
struct Dataset {
  DatasetSpec spec;
  std::string generator;
  std::vector<LabeledSignal> signals;
};

void write_dataset(std::ostream& out, const DatasetSpec& spec,
                   std::span<const LabeledSignal> signals);
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const DatasetSpec& spec,
                  std::span<const LabeledSignal> signals);
Dataset load_dataset(const std::filesystem::path& path);

// Plain numeric sample: whitespace, comma or newline separated.
std::vector<double> load_sample(const std::filesystem::path& path);

}  // namespace shiftdiag
