#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "robocoder/orchestrator.hpp"

namespace robocoder {

/// Everything in the report except timings; stable across identical runs.
nlohmann::json report_to_json(const RunReport& report);
/// Reads the summary fields (entities, counts, cumulative passes, space sizes).
RunReport report_from_json(const nlohmann::json& j);

nlohmann::json timings_to_json(const RunReport& report);

/// entity,iteration,passed,total,pass_rate for iterations 1..N, entities in
/// report order followed by "All".
std::string pass_rate_csv(const RunReport& report);

/// Line chart of cumulative pass rate per entity; x axis runs 1..N.
std::string pass_rate_svg(const RunReport& report);

/// Writes results.json, pass_rate.csv, pass_rate.svg and timing.json into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);

/// Re-renders the CSV and SVG from an existing results.json.
void render_report(const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace robocoder
