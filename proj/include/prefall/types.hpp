#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefall {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline constexpr int kNumFeatures = 6;

enum class Label : int { NonFall = 0, Fall = 1 };

const char* to_string(Label label);
Label label_from_string(std::string_view text);  // throws Parse on anything else

// Image coordinates: x rightward, y downward. Confidence defaults to 1
// when the source file leaves it empty.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 1.0;
};

struct SkeletonFrame {
  std::int64_t frame_index = 0;
  std::vector<Keypoint> keypoints;
};

struct SkeletonSequence {
  std::string sequence_id;
  std::string subject_id;
  std::string activity_id;
  std::string trial_id;
  double fps = 18.0;
  std::vector<SkeletonFrame> frames;  // strictly increasing frame_index
  Label label = Label::NonFall;
  std::optional<std::int64_t> impact_frame;  // present iff label == Fall
};

// Feature order is fixed project-wide: left_hip, right_hip, left_knee,
// right_knee, left_ankle, right_ankle. Index into Vec6/valid arrays.
inline constexpr std::array<const char*, 6> kFeatureJointNames = {
    "left_hip", "right_hip", "left_knee",
    "right_knee", "left_ankle", "right_ankle"};

struct JointMap {
  int head = 0;
  int left_hip = 0;
  int right_hip = 0;
  int left_knee = 0;
  int right_knee = 0;
  int left_ankle = 0;
  int right_ankle = 0;

  // head first, then the six joints in feature order
  std::array<int, 7> indices() const {
    return {head, left_hip, right_hip, left_knee, right_knee, left_ankle,
            right_ankle};
  }

  static JointMap body25();  // OpenPose BODY_25 layout; head -> nose
  static JointMap coco17();  // COCO 17-keypoint layout; head -> nose
};

struct SevenJointFrame {
  Keypoint head;
  std::array<Keypoint, 6> joints;  // feature order
  std::array<bool, 7> valid{};     // [0] head, [1..6] joints
};

struct ManifestEntry {
  std::string file;  // keypoint csv path as written in the manifest
  std::string subject_id;
  std::string activity_id;
  std::string trial_id;
  Label label = Label::NonFall;
  double fps = 18.0;
  std::optional<std::int64_t> impact_frame;
};

}  // namespace prefall
