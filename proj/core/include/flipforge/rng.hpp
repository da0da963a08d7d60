#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

namespace flipforge {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seedable generator with platform-independent output.
///
/// Backed by Boost's mt19937_64 together with Boost's distributions, whose
/// algorithms (unlike the std:: ones) are fixed across standard libraries,
/// so a seed yields the same doubles on every machine. Child streams are
/// derived with `split`, which mixes the parent seed and a stream index
/// through SplitMix64.
class Rng {
 public:
  static constexpr std::string_view kName = "boost::mt19937_64+splitmix64";

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  /// Independent generator for stream `index` of this seed.
  Rng split(std::uint64_t index) const;

  double normal();
  /// Uniform integer in [0, bound).
  std::size_t uniform_index(std::size_t bound);
  /// Uniformly random k-subset of {0..n-1}, returned sorted ascending.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);
  /// Uniformly random permutation of {0..n-1}.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  boost::random::mt19937_64 engine_;
};

}  // namespace flipforge
