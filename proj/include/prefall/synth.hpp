#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "prefall/ingest.hpp"

namespace prefall {

// Deterministic skeletal-sequence generator. Kinematics are defined directly
// in angle space (the quantity the feature pipeline measures) and converted
// to 25-joint keypoints at fixed limb lengths, so recomputing features from
// the generated coordinates reproduces the generating angles exactly.
struct SynthSpec {
  std::uint64_t seed = 0;
  double fps = 18.0;
  double duration_s = 4.0;
  Label label = Label::NonFall;
  double impact_time_s = 3.0;            // fall only
  double deviation_amplitude_deg = 40.0; // angle reached at impact
  double onset_lead_s = 1.0;             // deviation begins this long before impact
  double noise_stddev_deg = 0.0;

  std::string sequence_id = "synth";
  std::string subject_id = "s01";
  std::string activity_id;  // empty -> "1" for falls, "6" for non-falls
  std::string trial_id = "1";

  void validate() const;  // throws Config
};

// Noise-free angle trajectory at a frame, feature order. Non-fall sequences
// hold small per-joint baselines; fall sequences ramp each joint linearly
// from its baseline to dir * amplitude between onset and impact, where dir
// (+1 or -1, the side the body falls to) is derived from the seed.
Vec6 synth_target_angles_deg(const SynthSpec& spec, std::int64_t frame);

std::int64_t synth_impact_frame(const SynthSpec& spec);
std::int64_t synth_frame_count(const SynthSpec& spec);

SkeletonSequence gen_sequence(const SynthSpec& spec);

ManifestEntry manifest_entry_for(const SynthSpec& spec);

struct CorpusSpec {
  SynthSpec base;  // label, seed and ids are overridden per sequence
  int n_fall = 0;
  int n_nonfall = 0;
  std::uint64_t base_seed = 0;
};

// In-memory corpus; sequence i gets seed mix_seed(base_seed, i) and ids
// cycling over the UP-Fall-style grid (17 subjects, activities 1..5 for
// falls and 6..11 for non-falls, 3 trials).
std::vector<SkeletonSequence> gen_corpus_sequences(const CorpusSpec& spec);

// Writes keypoints/<id>.csv per sequence plus manifest.csv and
// activity_map.txt under out_dir; returns the manifest entries.
std::vector<ManifestEntry> gen_corpus(const std::filesystem::path& out_dir,
                                      const CorpusSpec& spec);

}  // namespace prefall
