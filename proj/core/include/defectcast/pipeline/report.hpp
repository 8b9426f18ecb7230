#pragma once

#include "defectcast/pipeline/pipeline.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace defectcast::pipeline {

enum class ReportFormat { Json, Csv, Markdown };

/// "json", "csv" or "markdown"/"md"; anything else is a ConfigError.
ReportFormat parse_report_format(std::string_view text);

std::string report_to_json(const StudyReport &report);
/// Inverse of report_to_json (tuples are not part of the JSON form).
StudyReport report_from_json(std::string_view text);
std::string stats_to_json(const StudyReport &report);
std::string report_to_markdown(const StudyReport &report);
/// errors.csv, runs.csv, importance.csv, consensus.csv and ablation.csv.
void write_csv_bundle(const StudyReport &report, const std::filesystem::path &dir);

/// Serializes `report` into `dir` in the requested format.
void emit_report(const StudyReport &report, ReportFormat format, const std::filesystem::path &dir);

} // namespace defectcast::pipeline
