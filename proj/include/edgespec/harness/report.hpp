#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "edgespec/harness/csv.hpp"
#include "edgespec/harness/decode_study.hpp"
#include "edgespec/harness/uara.hpp"

namespace edgespec::harness {

std::vector<DecodeRow> decode_rows_from_csv(const CsvTable& table);

/// Lowest mean latency among the non-learned policies at one w, if any ran.
const PolicySummary* best_baseline(const std::vector<PolicySummary>& summaries, double w);

/// Markdown summary: per-w policy tables with 95% CIs and improvement over
/// the best baseline, battery-tier energy across w, and the best draft
/// length per decoding setting. Throws ConfigError when both inputs are empty.
std::string render_report(const std::vector<SlotRow>& slots, const std::vector<DecodeRow>& decode);

/// Reads every CSV (slot or decode tables, told apart by header) and renders.
std::string report_from_files(const std::vector<std::filesystem::path>& files);

}  // namespace edgespec::harness
