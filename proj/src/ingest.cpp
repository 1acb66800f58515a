#include "prefall/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prefall/csv.hpp"
#include "prefall/error.hpp"

namespace prefall {

const char* to_string(Label label) {
  return label == Label::Fall ? "fall" : "nonfall";
}

Label label_from_string(std::string_view text) {
  if (text == "fall") return Label::Fall;
  if (text == "nonfall") return Label::NonFall;
  fail(ErrorKind::Parse, "unknown label '" + std::string(text) + "' (expected fall|nonfall)");
}

JointMap JointMap::body25() {
  // OpenPose BODY_25: 0 nose, 9 RHip, 10 RKnee, 11 RAnkle, 12 LHip,
  // 13 LKnee, 14 LAnkle.
  JointMap jm;
  jm.head = 0;
  jm.left_hip = 12;
  jm.right_hip = 9;
  jm.left_knee = 13;
  jm.right_knee = 10;
  jm.left_ankle = 14;
  jm.right_ankle = 11;
  return jm;
}

JointMap JointMap::coco17() {
  // COCO: 0 nose, 11 LHip, 12 RHip, 13 LKnee, 14 RKnee, 15 LAnkle, 16 RAnkle.
  JointMap jm;
  jm.head = 0;
  jm.left_hip = 11;
  jm.right_hip = 12;
  jm.left_knee = 13;
  jm.right_knee = 14;
  jm.left_ankle = 15;
  jm.right_ankle = 16;
  return jm;
}

ActivityMap default_activity_map() {
  ActivityMap map;
  for (int a = 1; a <= 5; ++a) map[std::to_string(a)] = Label::Fall;
  for (int a = 6; a <= 11; ++a) map[std::to_string(a)] = Label::NonFall;
  return map;
}

ActivityMap load_activity_map(const std::filesystem::path& path) {
  ActivityMap map;
  auto lines = csv::read_lines(path.string());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(i + 1) +
                                 ": expected 'activity=label'");
    std::string id(line.substr(0, eq));
    map[id] = label_from_string(line.substr(eq + 1));
  }
  if (map.empty()) fail(ErrorKind::Parse, path.string() + ": empty activity map");
  return map;
}

void write_activity_map(const std::filesystem::path& path, const ActivityMap& map) {
  std::ostringstream out;
  out << "# activity id -> label (fall|nonfall)\n";
  for (const auto& [id, label] : map) out << id << "=" << to_string(label) << "\n";
  csv::write_file(path.string(), out.str());
}

namespace {

constexpr std::string_view kKeypointHeader = "frame,joint,x,y,conf";
constexpr std::string_view kManifestHeader = "file,subject,activity,trial,label,fps,impact_frame";

std::string loc(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

SkeletonSequence parse_keypoint_file(const std::filesystem::path& path,
                                     const ManifestEntry& entry) {
  auto lines = csv::read_lines(path.string());
  if (lines.empty() || lines[0] != kKeypointHeader)
    fail(ErrorKind::Parse, path.string() + ": missing header '" + std::string(kKeypointHeader) + "'");

  SkeletonSequence seq;
  seq.sequence_id = std::filesystem::path(entry.file).stem().string();
  seq.subject_id = entry.subject_id;
  seq.activity_id = entry.activity_id;
  seq.trial_id = entry.trial_id;
  seq.fps = entry.fps;
  seq.label = entry.label;
  seq.impact_frame = entry.impact_frame;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = csv::split(lines[i]);
    if (fields.size() != 5)
      fail(ErrorKind::Parse, loc(path, i + 1) + ": expected 5 fields, got " +
                                 std::to_string(fields.size()));
    std::int64_t frame = csv::parse_int(fields[0], loc(path, i + 1));
    std::int64_t joint = csv::parse_int(fields[1], loc(path, i + 1));
    Keypoint kp;
    kp.x = csv::parse_double(fields[2], loc(path, i + 1));
    kp.y = csv::parse_double(fields[3], loc(path, i + 1));
    kp.confidence = fields[4].empty() ? 1.0 : csv::parse_double(fields[4], loc(path, i + 1));
    if (!std::isfinite(kp.x) || !std::isfinite(kp.y))
      fail(ErrorKind::Parse, loc(path, i + 1) + ": non-finite coordinate");
    if (kp.confidence < 0.0 || kp.confidence > 1.0)
      fail(ErrorKind::Parse, loc(path, i + 1) + ": confidence outside [0,1]");

    if (seq.frames.empty() || seq.frames.back().frame_index != frame) {
      if (!seq.frames.empty() && frame <= seq.frames.back().frame_index)
        fail(ErrorKind::Structure,
             loc(path, i + 1) + ": frame index " + std::to_string(frame) +
                 " not strictly increasing (previous " +
                 std::to_string(seq.frames.back().frame_index) + ")");
      seq.frames.push_back({frame, {}});
    }
    // joints within a frame block may arrive in any order
    auto& kps = seq.frames.back().keypoints;
    if (joint < 0)
      fail(ErrorKind::Structure, loc(path, i + 1) + ": negative joint index");
    const auto slot = static_cast<std::size_t>(joint);
    if (slot >= kps.size()) kps.resize(slot + 1, Keypoint{0, 0, -1.0});
    if (kps[slot].confidence >= 0.0)
      fail(ErrorKind::Structure, loc(path, i + 1) + ": duplicate joint " +
                                     std::to_string(joint) + " in frame " +
                                     std::to_string(frame));
    kps[slot] = kp;
  }

  if (seq.frames.empty()) fail(ErrorKind::Structure, path.string() + ": no frames");

  std::size_t joint_count = seq.frames.front().keypoints.size();
  for (const auto& f : seq.frames) {
    if (f.keypoints.size() != joint_count)
      fail(ErrorKind::Structure, path.string() + ": frame " +
                                     std::to_string(f.frame_index) +
                                     " has " + std::to_string(f.keypoints.size()) +
                                     " joints, expected " + std::to_string(joint_count));
    for (std::size_t j = 0; j < f.keypoints.size(); ++j)
      if (f.keypoints[j].confidence < 0.0)
        fail(ErrorKind::Structure, path.string() + ": frame " +
                                       std::to_string(f.frame_index) +
                                       " is missing joint " + std::to_string(j));
  }

  if (seq.label == Label::Fall) {
    if (!seq.impact_frame)
      fail(ErrorKind::Annotation, path.string() + ": fall sequence without impact_frame");
    std::int64_t last = seq.frames.back().frame_index;
    if (*seq.impact_frame < 0 || *seq.impact_frame > last)
      fail(ErrorKind::Annotation, path.string() + ": impact_frame " +
                                      std::to_string(*seq.impact_frame) +
                                      " outside [0, " + std::to_string(last) + "]");
  } else if (seq.impact_frame) {
    fail(ErrorKind::Annotation, path.string() + ": non-fall sequence carries impact_frame");
  }

  return seq;
}

void write_keypoint_file(const std::filesystem::path& path, const SkeletonSequence& seq) {
  std::ostringstream out;
  out << kKeypointHeader << "\n";
  for (const auto& frame : seq.frames) {
    for (std::size_t j = 0; j < frame.keypoints.size(); ++j) {
      const Keypoint& kp = frame.keypoints[j];
      out << frame.frame_index << "," << j << "," << csv::format_double(kp.x)
          << "," << csv::format_double(kp.y) << ","
          << csv::format_double(kp.confidence) << "\n";
    }
  }
  csv::write_file(path.string(), out.str());
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path,
                                         const ActivityMap& activities) {
  auto lines = csv::read_lines(path.string());
  if (lines.empty() || lines[0] != kManifestHeader)
    fail(ErrorKind::Parse, path.string() + ": missing header '" + std::string(kManifestHeader) + "'");

  std::vector<ManifestEntry> entries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = csv::split(lines[i]);
    if (fields.size() != 7)
      fail(ErrorKind::Parse, loc(path, i + 1) + ": expected 7 fields, got " +
                                 std::to_string(fields.size()));
    ManifestEntry e;
    e.file = std::string(fields[0]);
    e.subject_id = std::string(fields[1]);
    e.activity_id = std::string(fields[2]);
    e.trial_id = std::string(fields[3]);
    if (e.file.empty()) fail(ErrorKind::Parse, loc(path, i + 1) + ": empty file field");

    auto it = activities.find(e.activity_id);
    if (it == activities.end())
      fail(ErrorKind::Mapping, loc(path, i + 1) + ": activity id '" +
                                   e.activity_id + "' not in activity map");
    e.label = it->second;
    if (!fields[4].empty()) {
      Label declared = label_from_string(fields[4]);
      if (declared != e.label)
        fail(ErrorKind::Annotation, loc(path, i + 1) + ": label column '" +
                                        std::string(fields[4]) +
                                        "' disagrees with activity map for activity '" +
                                        e.activity_id + "'");
    }
    e.fps = fields[5].empty() ? 18.0 : csv::parse_double(fields[5], loc(path, i + 1));
    if (!(e.fps > 0.0)) fail(ErrorKind::Parse, loc(path, i + 1) + ": fps must be > 0");

    if (!fields[6].empty()) e.impact_frame = csv::parse_int(fields[6], loc(path, i + 1));
    if (e.label == Label::Fall && !e.impact_frame)
      fail(ErrorKind::Annotation, loc(path, i + 1) + ": fall entry without impact_frame");
    if (e.label == Label::NonFall && e.impact_frame)
      fail(ErrorKind::Annotation, loc(path, i + 1) + ": non-fall entry carries impact_frame");

    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  out << kManifestHeader << "\n";
  for (const auto& e : entries) {
    out << e.file << "," << e.subject_id << "," << e.activity_id << ","
        << e.trial_id << "," << to_string(e.label) << ","
        << csv::format_double(e.fps) << ",";
    if (e.impact_frame) out << *e.impact_frame;
    out << "\n";
  }
  csv::write_file(path.string(), out.str());
}

std::filesystem::path resolve_sequence_path(const std::filesystem::path& manifest_path,
                                            const ManifestEntry& entry) {
  std::filesystem::path file(entry.file);
  if (file.is_absolute()) return file;
  return manifest_path.parent_path() / file;
}

SevenJointFrame map_joints(const SkeletonFrame& frame, const JointMap& jm,
                           double conf_threshold) {
  const auto idx = jm.indices();
  const int n = static_cast<int>(frame.keypoints.size());
  for (int i : idx)
    if (i < 0 || i >= n)
      fail(ErrorKind::Config, "joint map index " + std::to_string(i) +
                                  " out of range for " + std::to_string(n) +
                                  "-joint skeleton");
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      if (idx[a] == idx[b])
        fail(ErrorKind::Config,
             "joint map indices must be distinct (index " +
                 std::to_string(idx[a]) + " repeated)");

  SevenJointFrame out;
  out.head = frame.keypoints[static_cast<std::size_t>(idx[0])];
  out.valid[0] = out.head.confidence >= conf_threshold;
  for (int j = 0; j < kNumFeatures; ++j) {
    out.joints[static_cast<std::size_t>(j)] =
        frame.keypoints[static_cast<std::size_t>(idx[static_cast<std::size_t>(j) + 1])];
    out.valid[static_cast<std::size_t>(j) + 1] =
        out.joints[static_cast<std::size_t>(j)].confidence >= conf_threshold;
  }
  return out;
}

}  // namespace prefall
