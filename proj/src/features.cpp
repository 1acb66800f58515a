#include "prefall/features.hpp"

#include <cmath>
#include <numbers>

#include "prefall/ingest.hpp"

namespace prefall {

FallFeatureVector frame_features(const SevenJointFrame& sjf) {
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;
  FallFeatureVector out;
  const bool head_ok = sjf.valid[0];
  for (int j = 0; j < kNumFeatures; ++j) {
    const auto js = static_cast<std::size_t>(j);
    if (!head_ok || !sjf.valid[js + 1]) continue;  // stays invalid, theta 0
    const double dx = sjf.joints[js].x - sjf.head.x;
    const double dy = sjf.joints[js].y - sjf.head.y;
    if (dx == 0.0 && dy == 0.0) continue;  // D = 0, degenerate
    out.theta_deg(j) = std::atan2(dx, dy) * kRadToDeg;
    out.valid[js] = true;
  }
  return out;
}

FeatureSequence sequence_features(const SkeletonSequence& seq, const JointMap& jm,
                                  double conf_threshold) {
  FeatureSequence fs;
  fs.sequence_id = seq.sequence_id;
  fs.label = seq.label;
  fs.fps = seq.fps;
  fs.impact_frame = seq.impact_frame;
  fs.frame_indices.reserve(seq.frames.size());
  fs.rows.reserve(seq.frames.size());
  for (const auto& frame : seq.frames) {
    fs.frame_indices.push_back(frame.frame_index);
    fs.rows.push_back(frame_features(map_joints(frame, jm, conf_threshold)));
  }
  return fs;
}

}  // namespace prefall
