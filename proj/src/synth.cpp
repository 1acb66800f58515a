#include "prefall/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "prefall/error.hpp"
#include "prefall/rng.hpp"

namespace prefall {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Head position and limb lengths (pixels) for the generated 25-joint body.
constexpr double kHeadX = 128.0;
constexpr double kHeadY = 40.0;
constexpr std::array<double, 6> kLimbLength = {60.0, 60.0, 100.0, 100.0, 140.0, 140.0};

// Stationary per-joint baseline angles, feature order.
constexpr std::array<double, 6> kBaselineDeg = {-8.0, 8.0, -5.0, 5.0, -3.0, 3.0};

double fall_direction(std::uint64_t seed) {
  return (mix_seed(seed, 17) & 1u) ? 1.0 : -1.0;
}

}  // namespace

void SynthSpec::validate() const {
  if (!(fps > 0.0)) fail(ErrorKind::Config, "synth fps must be > 0");
  if (!(duration_s > 0.0)) fail(ErrorKind::Config, "synth duration must be > 0");
  if (deviation_amplitude_deg < 0.0 || noise_stddev_deg < 0.0)
    fail(ErrorKind::Config, "synth amplitudes must be nonnegative");
  if (label == Label::Fall) {
    if (!(impact_time_s > 0.0) || impact_time_s > duration_s)
      fail(ErrorKind::Config, "impact time must lie in (0, duration]");
    if (!(onset_lead_s > 0.0) || onset_lead_s >= impact_time_s)
      fail(ErrorKind::Config, "onset lead must lie in (0, impact time)");
  }
}

std::int64_t synth_impact_frame(const SynthSpec& spec) {
  return static_cast<std::int64_t>(std::floor(spec.impact_time_s * spec.fps + 0.5));
}

std::int64_t synth_frame_count(const SynthSpec& spec) {
  auto n = static_cast<std::int64_t>(std::floor(spec.duration_s * spec.fps + 0.5));
  return std::max<std::int64_t>(n, 1);
}

Vec6 synth_target_angles_deg(const SynthSpec& spec, std::int64_t frame) {
  Vec6 angles;
  for (int j = 0; j < kNumFeatures; ++j)
    angles(j) = kBaselineDeg[static_cast<std::size_t>(j)];
  if (spec.label != Label::Fall) return angles;

  const double t = static_cast<double>(frame) / spec.fps;
  const double onset_t = spec.impact_time_s - spec.onset_lead_s;
  double progress = (t - onset_t) / spec.onset_lead_s;
  progress = std::clamp(progress, 0.0, 1.0);
  // At the impact frame the rounded frame time can sit a hair before
  // impact_time_s; the target there is exactly dir * amplitude.
  if (frame >= synth_impact_frame(spec)) progress = 1.0;

  const double dir = fall_direction(spec.seed);
  for (int j = 0; j < kNumFeatures; ++j)
    angles(j) += progress * (dir * spec.deviation_amplitude_deg - angles(j));
  return angles;
}

SkeletonSequence gen_sequence(const SynthSpec& spec) {
  spec.validate();
  const std::int64_t n_frames = synth_frame_count(spec);

  SkeletonSequence seq;
  seq.sequence_id = spec.sequence_id;
  seq.subject_id = spec.subject_id;
  seq.activity_id = spec.activity_id.empty()
                        ? (spec.label == Label::Fall ? "1" : "6")
                        : spec.activity_id;
  seq.trial_id = spec.trial_id;
  seq.fps = spec.fps;
  seq.label = spec.label;
  if (spec.label == Label::Fall) seq.impact_frame = synth_impact_frame(spec);

  const JointMap jm = JointMap::body25();
  const auto mapped = jm.indices();

  Rng rng(mix_seed(spec.seed, 3));
  seq.frames.reserve(static_cast<std::size_t>(n_frames));
  for (std::int64_t f = 0; f < n_frames; ++f) {
    SkeletonFrame frame;
    frame.frame_index = f;
    frame.keypoints.assign(25, Keypoint{});

    // Static filler for the 18 unmapped joints: a fixed grid under the head.
    for (std::size_t j = 0; j < frame.keypoints.size(); ++j) {
      frame.keypoints[j].x = kHeadX + 4.0 * (static_cast<double>(j % 5) - 2.0);
      frame.keypoints[j].y = kHeadY + 6.0 * static_cast<double>(j / 5);
      frame.keypoints[j].confidence = 1.0;
    }

    frame.keypoints[static_cast<std::size_t>(mapped[0])] = {kHeadX, kHeadY, 1.0};

    Vec6 angles = synth_target_angles_deg(spec, f);
    for (int j = 0; j < kNumFeatures; ++j) {
      double theta = angles(j);
      if (spec.noise_stddev_deg > 0.0)
        theta += spec.noise_stddev_deg * rng.next_gaussian();
      const double rad = theta * kDegToRad;
      const double len = kLimbLength[static_cast<std::size_t>(j)];
      Keypoint kp;
      kp.x = kHeadX + len * std::sin(rad);
      kp.y = kHeadY + len * std::cos(rad);
      kp.confidence = 1.0;
      frame.keypoints[static_cast<std::size_t>(mapped[static_cast<std::size_t>(j) + 1])] = kp;
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

ManifestEntry manifest_entry_for(const SynthSpec& spec) {
  ManifestEntry e;
  e.file = "keypoints/" + spec.sequence_id + ".csv";
  e.subject_id = spec.subject_id;
  e.activity_id = spec.activity_id.empty()
                      ? (spec.label == Label::Fall ? "1" : "6")
                      : spec.activity_id;
  e.trial_id = spec.trial_id;
  e.label = spec.label;
  e.fps = spec.fps;
  if (spec.label == Label::Fall) e.impact_frame = synth_impact_frame(spec);
  return e;
}

namespace {

SynthSpec corpus_member(const CorpusSpec& corpus, Label label, int index, int global_index) {
  SynthSpec s = corpus.base;
  s.label = label;
  s.seed = mix_seed(corpus.base_seed, static_cast<std::uint64_t>(global_index));

  char id[32];
  std::snprintf(id, sizeof id, "%s%03d", label == Label::Fall ? "f" : "n", index);
  s.sequence_id = id;
  char subj[16];
  std::snprintf(subj, sizeof subj, "s%02d", global_index % 17 + 1);
  s.subject_id = subj;
  const int base_activity = label == Label::Fall ? 1 : 6;
  const int n_activities = label == Label::Fall ? 5 : 6;
  s.activity_id = std::to_string(base_activity + index % n_activities);
  s.trial_id = std::to_string(index % 3 + 1);
  return s;
}

}  // namespace

std::vector<SkeletonSequence> gen_corpus_sequences(const CorpusSpec& spec) {
  if (spec.n_fall < 0 || spec.n_nonfall < 0)
    fail(ErrorKind::Config, "corpus counts must be >= 0");
  std::vector<SkeletonSequence> out;
  out.reserve(static_cast<std::size_t>(spec.n_fall + spec.n_nonfall));
  int global = 0;
  for (int i = 0; i < spec.n_fall; ++i, ++global)
    out.push_back(gen_sequence(corpus_member(spec, Label::Fall, i, global)));
  for (int i = 0; i < spec.n_nonfall; ++i, ++global)
    out.push_back(gen_sequence(corpus_member(spec, Label::NonFall, i, global)));
  return out;
}

std::vector<ManifestEntry> gen_corpus(const std::filesystem::path& out_dir,
                                      const CorpusSpec& spec) {
  if (spec.n_fall < 0 || spec.n_nonfall < 0)
    fail(ErrorKind::Config, "corpus counts must be >= 0");

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "keypoints", ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + (out_dir / "keypoints").string());

  std::vector<ManifestEntry> entries;
  int global = 0;
  auto emit = [&](Label label, int index) {
    const SynthSpec member = corpus_member(spec, label, index, global++);
    write_keypoint_file(out_dir / "keypoints" / (member.sequence_id + ".csv"),
                        gen_sequence(member));
    entries.push_back(manifest_entry_for(member));
  };
  for (int i = 0; i < spec.n_fall; ++i) emit(Label::Fall, i);
  for (int i = 0; i < spec.n_nonfall; ++i) emit(Label::NonFall, i);

  write_manifest(out_dir / "manifest.csv", entries);
  write_activity_map(out_dir / "activity_map.txt", default_activity_map());
  return entries;
}

}  // namespace prefall
