#pragma once

#include <filesystem>
#include <string>

#include "flipforge/harness.hpp"

namespace flipforge {

/// Deterministic JSON text of a report (fixed key order, round-trip doubles).
std::string report_to_json(const Report& report);
/// Inverse of report_to_json. Throws ParseError on malformed text and
/// InvalidInput on an unknown format_version or schema mismatch.
Report report_from_json(const std::string& text);

void write_report(const Report& report, const std::filesystem::path& path);
Report read_report(const std::filesystem::path& path);

/// Config files use the same schema as the report's "config" block.
ExperimentConfig read_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace flipforge
