#include "prefall/windows.hpp"

#include <algorithm>
#include <cmath>

#include "prefall/error.hpp"
#include "prefall/rng.hpp"

namespace prefall {

std::int64_t lead_frames(double lead_time_s, double fps) {
  return static_cast<std::int64_t>(std::floor(lead_time_s * fps + 0.5));
}

namespace {

// Position of frame_index `want` in fs, if present.
std::optional<std::size_t> find_position(const FeatureSequence& fs, std::int64_t want) {
  auto it = std::lower_bound(fs.frame_indices.begin(), fs.frame_indices.end(), want);
  if (it == fs.frame_indices.end() || *it != want) return std::nullopt;
  return static_cast<std::size_t>(it - fs.frame_indices.begin());
}

// Window rows [pos, pos+k) must cover k consecutive frame indices.
bool contiguous_at(const FeatureSequence& fs, std::size_t pos, int k) {
  return fs.frame_indices[pos + static_cast<std::size_t>(k) - 1] ==
         fs.frame_indices[pos] + k - 1;
}

bool fully_valid_at(const FeatureSequence& fs, std::size_t pos, int k) {
  for (int r = 0; r < k; ++r)
    if (!fs.rows[pos + static_cast<std::size_t>(r)].all_valid()) return false;
  return true;
}

Mat copy_window(const FeatureSequence& fs, std::size_t pos, int k) {
  Mat m(k, kNumFeatures);
  for (int r = 0; r < k; ++r)
    m.row(r) = fs.rows[pos + static_cast<std::size_t>(r)].theta_deg.transpose();
  return m;
}

}  // namespace

WindowSample extract_fall_window(const FeatureSequence& fs, double lead_time_s, int k) {
  if (fs.label != Label::Fall || !fs.impact_frame)
    fail(ErrorKind::Config, fs.sequence_id + ": fall window requested from a non-fall sequence");
  if (k < 1) fail(ErrorKind::Config, "window size must be >= 1");
  if (lead_time_s < 0.0) fail(ErrorKind::Config, "lead time must be >= 0");

  const std::int64_t last = *fs.impact_frame - lead_frames(lead_time_s, fs.fps);
  const std::int64_t first = last - (k - 1);
  if (fs.frame_indices.empty() || first < fs.frame_indices.front() || last > fs.frame_indices.back())
    fail(ErrorKind::Extraction,
         fs.sequence_id + ": window [" + std::to_string(first) + ", " +
             std::to_string(last) + "] outside sequence (too short for this lead/K)");
  auto pos = find_position(fs, first);
  if (!pos || !contiguous_at(fs, *pos, k))
    fail(ErrorKind::Extraction,
         fs.sequence_id + ": window [" + std::to_string(first) + ", " +
             std::to_string(last) + "] crosses missing frames");
  if (!fully_valid_at(fs, *pos, k))
    fail(ErrorKind::MaskedData,
         fs.sequence_id + ": window [" + std::to_string(first) + ", " +
             std::to_string(last) + "] contains invalid features");

  WindowSample w;
  w.features = copy_window(fs, *pos, k);
  w.label = Label::Fall;
  w.sequence_id = fs.sequence_id;
  w.window_start = first;
  w.lead_time_s = lead_time_s;
  return w;
}

WindowSample extract_nonfall_window(const FeatureSequence& fs, int k,
                                    std::uint64_t rng_seed) {
  if (fs.label != Label::NonFall)
    fail(ErrorKind::Config, fs.sequence_id + ": non-fall window requested from a fall sequence");
  if (k < 1) fail(ErrorKind::Config, "window size must be >= 1");
  if (fs.rows.size() < static_cast<std::size_t>(k))
    fail(ErrorKind::Extraction, fs.sequence_id + ": sequence shorter than window (" +
                                    std::to_string(fs.rows.size()) + " < " +
                                    std::to_string(k) + ")");

  std::vector<std::size_t> starts;
  for (std::size_t pos = 0; pos + static_cast<std::size_t>(k) <= fs.rows.size(); ++pos)
    if (contiguous_at(fs, pos, k) && fully_valid_at(fs, pos, k)) starts.push_back(pos);
  if (starts.empty())
    fail(ErrorKind::MaskedData,
         fs.sequence_id + ": no fully valid window placement of size " + std::to_string(k));

  Rng rng(rng_seed);
  std::size_t pos = starts[rng.next_index(starts.size())];

  WindowSample w;
  w.features = copy_window(fs, pos, k);
  w.label = Label::NonFall;
  w.sequence_id = fs.sequence_id;
  w.window_start = fs.frame_indices[pos];
  return w;
}

namespace {

// Train count for one stratum: nearest to ratio*n, but both sides non-empty
// whenever n >= 2.
std::size_t stratum_train_count(std::size_t n, double ratio) {
  auto t = static_cast<std::int64_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
  if (n >= 2) t = std::clamp<std::int64_t>(t, 1, static_cast<std::int64_t>(n) - 1);
  else t = std::clamp<std::int64_t>(t, 0, static_cast<std::int64_t>(n));
  return static_cast<std::size_t>(t);
}

}  // namespace

DatasetSplit collate_split(std::vector<WindowSample> samples, double ratio,
                           std::uint64_t seed) {
  if (samples.empty()) fail(ErrorKind::Config, "cannot split an empty sample list");
  if (!(ratio > 0.0) || !(ratio < 1.0))
    fail(ErrorKind::Config, "split ratio must lie in (0, 1)");

  std::size_t n_fall = 0, n_nonfall = 0;
  for (const auto& s : samples) (s.label == Label::Fall ? n_fall : n_nonfall)++;
  const bool both_present = n_fall > 0 && n_nonfall > 0;
  const bool stratified = !both_present || (n_fall >= 2 && n_nonfall >= 2);

  DatasetSplit split;
  split.seed = seed;
  split.ratio = ratio;
  split.stratified = stratified && both_present;

  Rng rng(mix_seed(seed, 1));
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  if (split.stratified) {
    std::vector<std::size_t> fall_idx, nonfall_idx;
    for (std::size_t i : order)
      (samples[i].label == Label::Fall ? fall_idx : nonfall_idx).push_back(i);
    const std::size_t fall_train = stratum_train_count(fall_idx.size(), ratio);
    const std::size_t nonfall_train = stratum_train_count(nonfall_idx.size(), ratio);
    for (std::size_t i = 0; i < fall_idx.size(); ++i)
      (i < fall_train ? split.train : split.test).push_back(std::move(samples[fall_idx[i]]));
    for (std::size_t i = 0; i < nonfall_idx.size(); ++i)
      (i < nonfall_train ? split.train : split.test).push_back(std::move(samples[nonfall_idx[i]]));
  } else {
    const std::size_t n_train = stratum_train_count(order.size(), ratio);
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < n_train ? split.train : split.test).push_back(std::move(samples[order[i]]));
  }
  return split;
}

DatasetSplit collate_split_by_subject(
    std::vector<WindowSample> samples, double ratio, std::uint64_t seed,
    const std::map<std::string, std::string>& subject_by_sequence) {
  if (samples.empty()) fail(ErrorKind::Config, "cannot split an empty sample list");
  if (!(ratio > 0.0) || !(ratio < 1.0))
    fail(ErrorKind::Config, "split ratio must lie in (0, 1)");

  auto subject_of = [&](const WindowSample& s) -> std::string {
    auto it = subject_by_sequence.find(s.sequence_id);
    return it == subject_by_sequence.end() ? s.sequence_id : it->second;
  };

  std::vector<std::string> subjects;
  for (const auto& s : samples) {
    std::string subj = subject_of(s);
    if (std::find(subjects.begin(), subjects.end(), subj) == subjects.end())
      subjects.push_back(subj);
  }
  std::sort(subjects.begin(), subjects.end());

  Rng rng(mix_seed(seed, 1));
  rng.shuffle(subjects);

  // Assign whole subjects to train until the sample quota is met.
  const auto target = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(samples.size()) + 0.5));
  std::map<std::string, std::size_t> subject_count;
  for (const auto& s : samples) subject_count[subject_of(s)]++;

  std::map<std::string, bool> to_train;
  std::size_t assigned = 0;
  for (const auto& subj : subjects) {
    bool train_side = assigned < target;
    to_train[subj] = train_side;
    if (train_side) assigned += subject_count[subj];
  }

  DatasetSplit split;
  split.seed = seed;
  split.ratio = ratio;
  split.stratified = false;
  for (auto& s : samples)
    (to_train[subject_of(s)] ? split.train : split.test).push_back(std::move(s));
  if (split.train.empty() || split.test.empty())
    fail(ErrorKind::Config, "subject-wise split left one side empty; need more subjects");
  return split;
}

namespace {

// Type-7 quantile: linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BoxStats feature_stats(const std::vector<WindowSample>& samples) {
  if (samples.empty()) fail(ErrorKind::Config, "feature_stats needs at least one window");

  BoxStats stats;
  for (int f = 0; f < kNumFeatures; ++f) {
    std::vector<double> values;
    for (const auto& s : samples)
      for (Eigen::Index r = 0; r < s.features.rows(); ++r)
        values.push_back(s.features(r, f));
    std::sort(values.begin(), values.end());

    FeatureStats& fs = stats.per_feature[static_cast<std::size_t>(f)];
    fs.min = values.front();
    fs.max = values.back();
    fs.q1 = quantile_sorted(values, 0.25);
    fs.median = quantile_sorted(values, 0.5);
    fs.q3 = quantile_sorted(values, 0.75);
    double sum = 0;
    for (double v : values) sum += v;
    fs.mean = sum / static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - fs.mean) * (v - fs.mean);
    fs.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    stats.n_values = values.size();
  }
  return stats;
}

}  // namespace prefall
