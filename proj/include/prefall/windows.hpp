#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prefall/features.hpp"

namespace prefall {

struct WindowSample {
  Mat features;  // K x 6, degrees, every row fully valid
  Label label = Label::NonFall;
  std::string sequence_id;
  std::int64_t window_start = 0;       // frame index of the first row
  std::optional<double> lead_time_s;   // fall windows only
};

struct DatasetSplit {
  std::vector<WindowSample> train;
  std::vector<WindowSample> test;
  std::uint64_t seed = 0;
  double ratio = 0.8;
  bool stratified = true;  // false when a class had < 2 samples
};

struct FeatureStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double mean = 0, stddev = 0;
};

struct BoxStats {
  std::array<FeatureStats, 6> per_feature;
  std::size_t n_values = 0;  // pooled values per feature
};

// round-half-up of lead_time_s * fps
std::int64_t lead_frames(double lead_time_s, double fps);

// The window ENDS at impact_frame - lead_frames, so every frame in it is at
// least lead_time_s before impact. Throws Extraction when the range exits
// the sequence (or crosses a gap in frame indices), MaskedData when it
// overlaps invalid features.
WindowSample extract_fall_window(const FeatureSequence& fs, double lead_time_s, int k);

// Start drawn uniformly over all placements that are contiguous and fully
// valid; pure function of the seed.
WindowSample extract_nonfall_window(const FeatureSequence& fs, int k,
                                    std::uint64_t rng_seed);

// Seeded shuffle then split, stratified by label when every present class
// has at least 2 samples.
DatasetSplit collate_split(std::vector<WindowSample> samples, double ratio,
                           std::uint64_t seed);

// Same contract, but whole subjects go to one side. The map carries
// sequence_id -> subject_id; sequences missing from it form their own group.
DatasetSplit collate_split_by_subject(
    std::vector<WindowSample> samples, double ratio, std::uint64_t seed,
    const std::map<std::string, std::string>& subject_by_sequence);

// Pooled over all frames of all windows. Quartiles use linear interpolation
// between order statistics; stddev is the population form.
BoxStats feature_stats(const std::vector<WindowSample>& samples);

}  // namespace prefall
