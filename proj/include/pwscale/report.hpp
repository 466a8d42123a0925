#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pwscale/outliers.hpp"
#include "pwscale/stats.hpp"

namespace pwscale {

inline constexpr const char* kToolName = "pwscale";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

/// One scaled analysis (pooled, or one piece of content).
struct Analysis {
  std::optional<std::string> content;  // empty for pooled analysis
  std::vector<std::string> conditions;
  ScaleResult scale;
  std::optional<BootstrapResult> bootstrap;
  std::optional<SignificanceReport> significance;
  std::optional<OutlierReport> outliers;
  std::vector<std::string> observer_ids;  // row order of outlier report
};

struct ReportProvenance {
  std::string input;
  std::uint64_t seed = 0;
  ScaleOptions opts;
  int bootstrap_samples = 0;
  double alpha = 0.05;
  std::optional<std::string> reference;
  bool per_content = false;
};

nlohmann::json make_scale_report(const std::vector<Analysis>& analyses,
                                 const ReportProvenance& provenance,
                                 const std::vector<std::string>& warnings);

nlohmann::json make_outlier_report(const Analysis& analysis,
                                   const ReportProvenance& provenance);

/// JOD scores with CI error bars; no CI drawn for the anchor condition.
std::string render_errorbar_svg(const Analysis& analysis);

/// Conditions on a JOD axis; neighbour edges solid when the difference
/// is significant, dashed otherwise.
std::string render_significance_svg(const Analysis& analysis);

/// All pairs as "condition_a,condition_b,p_value,significant" rows.
std::string significance_edge_list(const Analysis& analysis);

/// CSV extract: condition,jod,ci_low,ci_high rows.
std::string scale_csv(const Analysis& analysis);

}  // namespace pwscale
