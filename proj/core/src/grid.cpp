#include "shiftdiag/grid.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "shiftdiag/error.hpp"

namespace shiftdiag {

using nlohmann::json;

namespace {

constexpr std::string_view kDefaultManifest = R"json({
  "name": "grid-810",
  "comment": "Entries expand to the cross product of their lists, nested test > rule > level > window > step > smoothing. Window 100 resolves to min(n-2,100) per signal. Aggregated entries keep the six rules seen in practice (rate 0.1, run 0.1/0.3, kofn 2-3/3-5/4-5) out of the nine-rule menu, at levels 0.005 and 0.1.",
  "entries": [
    {
      "tests": ["u", "ks", "f"],
      "rules": ["base"],
      "levels": [0.005, 0.1, 0.5],
      "windows": [30, 50, 100],
      "steps": [1, 5, 10],
      "smoothing": [false, true]
    },
    {
      "tests": ["u", "ks", "f"],
      "rules": ["rate(0.1)", "run(0.1)", "run(0.3)", "kofn(2,3)", "kofn(3,5)", "kofn(4,5)"],
      "levels": [0.005, 0.1],
      "windows": [30, 50, 100],
      "steps": [1, 5, 10],
      "smoothing": [false, true]
    }
  ]
}
)json";

std::string_view test_suffix(TestKind kind) { return test_code(kind); }

std::string_view base_name(TestKind kind) {
  switch (kind) {
    case TestKind::kMannWhitneyU: return "U test";
    case TestKind::kKolmogorovSmirnov2: return "KS test";
    case TestKind::kFVariance: return "F test";
  }
  return "U test";
}

[[noreturn]] void bad_rule(std::string_view text) {
  throw Error(ErrorCode::kManifest, fmt::format("malformed rule '{}'", text));
}

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad_rule(context);
  return value;
}

}  // namespace

std::string to_string(const AggregationRule& rule) {
  switch (rule.kind) {
    case RuleKind::kBase: return "base";
    case RuleKind::kRateAtLeast: return fmt::format("rate({})", rule.beta);
    case RuleKind::kConsecutiveRun: return fmt::format("run({})", rule.beta);
    case RuleKind::kKofN: return fmt::format("kofn({},{})", rule.k, rule.n_consec);
  }
  return "base";
}

AggregationRule parse_rule(std::string_view text) {
  if (text == "base") return AggregationRule::base();
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') bad_rule(text);
  const std::string_view name = text.substr(0, open);
  const std::string_view args = text.substr(open + 1, text.size() - open - 2);
  if (name == "rate" || name == "run") {
    const double beta = parse_number(args, text);
    if (!(beta > 0.0 && beta <= 1.0)) bad_rule(text);
    return name == "rate" ? AggregationRule::rate_at_least(beta)
                          : AggregationRule::consecutive_run(beta);
  }
  if (name == "kofn") {
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) bad_rule(text);
    const double k = parse_number(args.substr(0, comma), text);
    const double n = parse_number(args.substr(comma + 1), text);
    if (k != static_cast<std::size_t>(k) || n != static_cast<std::size_t>(n) || k < 1 ||
        k > n) {
      bad_rule(text);
    }
    return AggregationRule::k_of_n(static_cast<std::size_t>(k),
                                   static_cast<std::size_t>(n));
  }
  bad_rule(text);
}

std::size_t window_count(std::size_t n_effective, const WindowPlan& plan) {
  const std::size_t span = 2 * plan.half();
  if (span == 0 || plan.step == 0 || n_effective < span) return 0;
  return (n_effective - span) / plan.step + 1;
}

WindowPlan IndicatorConfig::resolve(std::size_t signal_length) const {
  const std::size_t cap = signal_length >= 2 ? signal_length - 2 : 0;
  return {std::min(window_length, cap), step};
}

std::string IndicatorConfig::id() const {
  std::string type;
  const std::string_view suffix = test_suffix(test);
  switch (rule.kind) {
    case RuleKind::kBase: type = base_name(test); break;
    case RuleKind::kRateAtLeast: type = fmt::format("rate{}({})", suffix, rule.beta); break;
    case RuleKind::kConsecutiveRun:
      type = fmt::format("lseq{}({})", suffix, rule.beta);
      break;
    case RuleKind::kKofN:
      type = fmt::format("conf{}({},{})", suffix, rule.k, rule.n_consec);
      break;
  }
  std::string out = fmt::format("{} / {} / {} / {}", type, level, window_length, step);
  if (smoothed) out += " / smoothed";
  return out;
}

GridManifest parse_manifest(std::string_view json_text) {
  GridManifest manifest;
  std::vector<std::string> problems;
  try {
    const json doc = json::parse(json_text);
    manifest.name = doc.value("name", std::string{});
    const json& entries = doc.at("entries");
    if (!entries.is_array()) throw Error(ErrorCode::kManifest, "'entries' must be an array");
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const json& item = entries[e];
      ManifestEntry entry;
      auto where = [&](std::string_view field) {
        return fmt::format("entry {} field '{}'", e, field);
      };
      auto list = [&](std::string_view field) -> const json& {
        const json& value = item.at(std::string(field));
        if (!value.is_array() || value.empty()) {
          throw Error(ErrorCode::kManifest, where(field) + " must be a non-empty array");
        }
        return value;
      };
      for (const json& t : list("tests")) entry.tests.push_back(parse_test(t.get<std::string>()));
      for (const json& r : list("rules")) entry.rules.push_back(parse_rule(r.get<std::string>()));
      for (const json& l : list("levels")) {
        const double level = l.get<double>();
        if (!(level > 0.0 && level < 1.0)) {
          problems.push_back(fmt::format("{}: level {} outside (0,1)", where("levels"), level));
        }
        entry.levels.push_back(level);
      }
      for (const json& w : list("windows")) {
        const auto window = w.get<std::size_t>();
        if (window < 4) {
          problems.push_back(fmt::format("{}: window {} below 4", where("windows"), window));
        }
        entry.windows.push_back(window);
      }
      for (const json& s : list("steps")) {
        const auto step = s.get<std::size_t>();
        if (step == 0) problems.push_back(where("steps") + ": step 0");
        entry.steps.push_back(step);
      }
      for (const json& s : list("smoothing")) entry.smoothing.push_back(s.get<bool>());
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kManifest, fmt::format("malformed manifest: {}", e.what()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kManifest) throw;
    throw Error(ErrorCode::kManifest, e.what());
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::kManifest,
                fmt::format("invalid manifest entries: {}", fmt::join(problems, "; ")));
  }
  return manifest;
}

GridManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

std::string manifest_to_json(const GridManifest& manifest) {
  json doc;
  doc["name"] = manifest.name;
  doc["entries"] = json::array();
  for (const ManifestEntry& entry : manifest.entries) {
    json item;
    item["tests"] = json::array();
    for (TestKind t : entry.tests) item["tests"].push_back(test_code(t));
    item["rules"] = json::array();
    for (const AggregationRule& r : entry.rules) item["rules"].push_back(to_string(r));
    item["levels"] = entry.levels;
    item["windows"] = entry.windows;
    item["steps"] = entry.steps;
    item["smoothing"] = entry.smoothing;
    doc["entries"].push_back(std::move(item));
  }
  return doc.dump(2);
}

std::string_view default_manifest_json() { return kDefaultManifest; }

GridManifest default_manifest() { return parse_manifest(kDefaultManifest); }

Grid build_grid(const GridManifest& manifest) {
  Grid grid;
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> duplicates;
  for (const ManifestEntry& entry : manifest.entries) {
    for (TestKind test : entry.tests) {
      for (const AggregationRule& rule : entry.rules) {
        for (double level : entry.levels) {
          for (std::size_t window : entry.windows) {
            for (std::size_t step : entry.steps) {
              for (bool smoothed : entry.smoothing) {
                IndicatorConfig config{test, level, window, step, smoothed, rule};
                std::string id = config.id();
                if (!seen.emplace(id, grid.size()).second) {
                  duplicates.push_back(std::move(id));
                  continue;
                }
                grid.push_back(config);
              }
            }
          }
        }
      }
    }
  }
  if (!duplicates.empty()) {
    throw Error(ErrorCode::kManifest,
                fmt::format("duplicate indicator configs: {}", fmt::join(duplicates, ", ")));
  }
  return grid;
}

}  // namespace shiftdiag
