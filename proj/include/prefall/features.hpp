#pragma once

#include <optional>
#include <vector>

#include "prefall/types.hpp"

namespace prefall {

// Six signed angles, degrees, between the downward vertical through the head
// and the segments head -> {hips, knees, ankles}. Positive means the joint
// sits to the image-right of the head. Range (-180, 180].
struct FallFeatureVector {
  Vec6 theta_deg = Vec6::Zero();
  std::array<bool, 6> valid{};

  bool all_valid() const {
    for (bool v : valid)
      if (!v) return false;
    return true;
  }
};

struct FeatureSequence {
  std::string sequence_id;
  Label label = Label::NonFall;
  double fps = 18.0;
  std::optional<std::int64_t> impact_frame;
  std::vector<std::int64_t> frame_indices;  // aligned with rows
  std::vector<FallFeatureVector> rows;
};

// theta = atan2(dx, dy) with dx = x_joint - x_head, dy = y_joint - y_head
// (image coords, y downward). Below the head this equals the signed
// sin^-1(dx/D) and it extends continuously to all quadrants. A coincident
// joint (D = 0) or a joint flagged invalid upstream yields valid = false
// with theta carried as 0.
FallFeatureVector frame_features(const SevenJointFrame& sjf);

FeatureSequence sequence_features(const SkeletonSequence& seq, const JointMap& jm,
                                  double conf_threshold = 0.0);

}  // namespace prefall
