#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flipforge/dictionary.hpp"

namespace flipforge {

/// Sidecar metadata stored next to a dictionary CSV.
struct DictionaryMeta {
  double beta = 1.0;
  std::size_t d = 0;
  std::size_t n = 0;
  std::string source;  // "gaussian", "low_coherence", "dataset", ...
  std::optional<std::uint64_t> seed;
  std::optional<double> coherence;
};

/// `<csv path>.meta.json`
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

/// Writes V as d rows x n columns and the sidecar metadata. `meta.d`/`meta.n`
/// and `meta.beta` are taken from the dictionary.
void write_dictionary(const std::filesystem::path& path, const FlipDictionary& dict,
                      DictionaryMeta meta = {});
/// Reads V; beta and coherence come from the sidecar when it exists (beta = 1 otherwise).
FlipDictionary read_dictionary(const std::filesystem::path& path,
                               DictionaryMeta* meta_out = nullptr);

/// One comparison per row: label (+1/-1) then d feature-difference values.
std::vector<Comparison> read_comparisons(const std::filesystem::path& path);
void write_comparisons(const std::filesystem::path& path, const std::vector<Comparison>& data);

/// Single-column CSV of reals.
Vector read_vector(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, const Vector& v);

/// Single-column CSV of 0/1 entries.
FlipVector read_flips(const std::filesystem::path& path);
void write_flips(const std::filesystem::path& path, const FlipVector& flips);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

}  // namespace flipforge
