#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace shiftdiag {

// Name recorded in dataset metadata so files identify their generator.
inline constexpr std::string_view kGeneratorName = "mt19937_64/splitmix64-streams";

// SplitMix64 finalizer; used only to decorrelate stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for the independent stream identified by (root, tag, index).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag,
                          std::uint64_t index = 0) noexcept;

// Well-known stream tags. Keeping them fixed keeps artifacts reproducible.
namespace stream {
inline constexpr std::uint64_t kDataset = 0x5349474e414cULL;  // "SIGNAL"
inline constexpr std::uint64_t kSplit = 0x53504c4954ULL;      // "SPLIT"
inline constexpr std::uint64_t kForest = 0x464f52455354ULL;   // "FOREST"
}  // namespace stream

// Seeded 64-bit generator with portable variate transforms. The std::
// distributions are implementation-defined, so they are avoided here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on the closed interval [lo, hi].
  double uniform(double lo, double hi);
  // Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Chi-squared variate with an integral number of degrees of freedom.
  double chi_squared(int dof);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace shiftdiag
