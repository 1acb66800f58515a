#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prefall/harness.hpp"

namespace prefall {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

// Feature dump, header `sequence,frame,theta1..theta6,valid_mask`; angles
// with 6 decimals, mask as six 0/1 chars in feature order.
std::string format_feature_dump(const std::vector<FeatureSequence>& sequences);

// `group,feature,min,q1,median,q3,max,mean,stddev` with group fall/nonfall.
std::string format_box_stats(const BoxStats& fall, const BoxStats& nonfall);

// One record per window: `sequence,label,window_start,lead_ms,k` followed by
// the K*6 feature values frame-major. Values use the shortest round-trip
// form so a dataset file carries the exact training inputs.
std::string format_dataset(const std::vector<WindowSample>& windows);

// Structured text with the per-class, macro, weighted and confusion fields.
std::string format_metrics_report(const MetricsReport& report);

// `lead_ms,K,seed,fall_p,fall_r,fall_f1,macro_f1,weighted_f1`; infeasible
// rows keep their key columns and leave the metrics empty.
std::string format_sweep_csv(const SweepResult& result);

// One `frame,label,logprob_fall` line per emission.
std::string format_alert_stream(const StreamResult& result);

// Per-cell mean and range of macro F1 across seeds, for console summaries.
std::string format_sweep_summary(const SweepResult& result);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace prefall
