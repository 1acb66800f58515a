#include "prefall/reports.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "prefall/csv.hpp"

namespace prefall {

namespace {

std::string fixed6(double v) { return csv::format_fixed(v, 6); }

std::int64_t to_lead_ms(double lead_s) {
  return static_cast<std::int64_t>(std::floor(lead_s * 1000.0 + 0.5));
}

}  // namespace

std::string format_feature_dump(const std::vector<FeatureSequence>& sequences) {
  std::ostringstream out;
  out << "sequence,frame,theta1,theta2,theta3,theta4,theta5,theta6,valid_mask\n";
  for (const auto& fs : sequences) {
    for (std::size_t r = 0; r < fs.rows.size(); ++r) {
      out << fs.sequence_id << "," << fs.frame_indices[r];
      for (int j = 0; j < kNumFeatures; ++j) out << "," << fixed6(fs.rows[r].theta_deg(j));
      out << ",";
      for (int j = 0; j < kNumFeatures; ++j) out << (fs.rows[r].valid[j] ? '1' : '0');
      out << "\n";
    }
  }
  return out.str();
}

std::string format_box_stats(const BoxStats& fall, const BoxStats& nonfall) {
  std::ostringstream out;
  out << "group,feature,min,q1,median,q3,max,mean,stddev\n";
  auto rows = [&](const char* group, const BoxStats& stats) {
    for (int j = 0; j < kNumFeatures; ++j) {
      const auto& f = stats.per_feature[static_cast<std::size_t>(j)];
      out << group << "," << kFeatureJointNames[static_cast<std::size_t>(j)] << ","
          << fixed6(f.min) << "," << fixed6(f.q1) << "," << fixed6(f.median) << ","
          << fixed6(f.q3) << "," << fixed6(f.max) << "," << fixed6(f.mean) << ","
          << fixed6(f.stddev) << "\n";
    }
  };
  rows("fall", fall);
  rows("nonfall", nonfall);
  return out.str();
}

std::string format_dataset(const std::vector<WindowSample>& windows) {
  std::ostringstream out;
  out << "# prefall-dataset v" << kDatasetFormatVersion << "\n";
  for (const auto& w : windows) {
    out << w.sequence_id << "," << to_string(w.label) << "," << w.window_start << ",";
    if (w.lead_time_s) out << to_lead_ms(*w.lead_time_s);
    out << "," << w.features.rows();
    for (Eigen::Index r = 0; r < w.features.rows(); ++r)
      for (Eigen::Index c = 0; c < w.features.cols(); ++c)
        out << "," << csv::format_double(w.features(r, c));
    out << "\n";
  }
  return out.str();
}

std::string format_metrics_report(const MetricsReport& rep) {
  std::ostringstream out;
  out << "# prefall-metrics v" << kReportFormatVersion << "\n";
  out << "class,precision,recall,f1,support\n";
  auto row = [&](const char* name, const ClassMetrics& m) {
    out << name << "," << fixed6(m.precision) << "," << fixed6(m.recall) << ","
        << fixed6(m.f1) << "," << m.support << "\n";
  };
  row("nonfall", rep.nonfall);
  row("fall", rep.fall);
  out << "macro," << fixed6(rep.macro_precision) << "," << fixed6(rep.macro_recall)
      << "," << fixed6(rep.macro_f1) << "," << rep.total << "\n";
  out << "weighted," << fixed6(rep.weighted_precision) << ","
      << fixed6(rep.weighted_recall) << "," << fixed6(rep.weighted_f1) << ","
      << rep.total << "\n";
  out << "accuracy," << fixed6(rep.accuracy) << "\n";
  // order: truth nonfall/pred nonfall, truth nonfall/pred fall,
  //        truth fall/pred nonfall, truth fall/pred fall
  out << "confusion," << rep.confusion[0][0] << "," << rep.confusion[0][1] << ","
      << rep.confusion[1][0] << "," << rep.confusion[1][1] << "\n";
  return out.str();
}

std::string format_sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "lead_ms,K,seed,fall_p,fall_r,fall_f1,macro_f1,weighted_f1\n";
  for (const auto& row : result.rows) {
    out << to_lead_ms(row.lead_time_s) << "," << row.k << "," << row.seed << ",";
    if (row.feasible) {
      out << fixed6(row.metrics.fall.precision) << "," << fixed6(row.metrics.fall.recall)
          << "," << fixed6(row.metrics.fall.f1) << "," << fixed6(row.metrics.macro_f1)
          << "," << fixed6(row.metrics.weighted_f1);
    } else {
      out << ",,,,";
    }
    out << "\n";
  }
  return out.str();
}

std::string format_alert_stream(const StreamResult& result) {
  std::ostringstream out;
  out << "frame,label,logprob_fall\n";
  for (const auto& e : result.emissions)
    out << e.window_end_frame << ","
        << to_string(static_cast<Label>(e.predicted)) << ","
        << fixed6(e.fall_log_prob) << "\n";
  return out.str();
}

std::string format_sweep_summary(const SweepResult& result) {
  // key: (lead_ms, k) in first-seen order
  std::vector<std::pair<std::int64_t, int>> keys;
  std::map<std::pair<std::int64_t, int>, std::vector<double>> f1s;
  std::map<std::pair<std::int64_t, int>, std::size_t> infeasible;
  for (const auto& row : result.rows) {
    const auto key = std::make_pair(to_lead_ms(row.lead_time_s), row.k);
    if (!f1s.count(key)) {
      keys.push_back(key);
      f1s[key] = {};
    }
    if (row.feasible)
      f1s[key].push_back(row.metrics.macro_f1);
    else
      infeasible[key]++;
  }

  std::ostringstream out;
  for (const auto& key : keys) {
    const auto& values = f1s[key];
    out << "lead " << key.first << " ms, K " << key.second << ": ";
    if (values.empty()) {
      out << "infeasible\n";
      continue;
    }
    double lo = values[0], hi = values[0], sum = 0;
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    out << "macro F1 " << fixed6(sum / static_cast<double>(values.size()));
    if (values.size() > 1)
      out << " (range " << fixed6(lo) << ".." << fixed6(hi) << ", " << values.size()
          << " seeds)";
    else
      out << " (single seed)";
    if (infeasible.count(key)) out << " [" << infeasible[key] << " infeasible]";
    out << "\n";
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  csv::write_file(path.string(), content);
}

}  // namespace prefall
