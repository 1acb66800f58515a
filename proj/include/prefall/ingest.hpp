#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "prefall/types.hpp"

namespace prefall {

// activity id -> label. Shipped default: ids "1".."5" are falls,
// "6".."11" are non-falls (UP-Fall activity layout).
using ActivityMap = std::map<std::string, Label>;

ActivityMap default_activity_map();

// Key-value text: one `id=fall|nonfall` per line, '#' starts a comment.
ActivityMap load_activity_map(const std::filesystem::path& path);
void write_activity_map(const std::filesystem::path& path, const ActivityMap& map);

// Keypoint CSV, header `frame,joint,x,y,conf`; one row per (frame, joint),
// joints 0-indexed, `conf` may be empty. Frames must appear in strictly
// increasing order and every frame must carry the same joint count.
SkeletonSequence parse_keypoint_file(const std::filesystem::path& path,
                                     const ManifestEntry& entry);
void write_keypoint_file(const std::filesystem::path& path,
                         const SkeletonSequence& seq);

// Manifest CSV, header `file,subject,activity,trial,label,fps,impact_frame`.
// The label column may be left empty, in which case the activity map decides;
// a non-empty label must agree with the map. fps empty -> 18.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path,
                                         const ActivityMap& activities = default_activity_map());
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

// Manifests reference keypoint files relative to their own directory.
std::filesystem::path resolve_sequence_path(const std::filesystem::path& manifest_path,
                                            const ManifestEntry& entry);

// Project the seven feature joints out of a full skeleton. Pure selection;
// coordinates are never transformed. Joints with confidence below the
// threshold are flagged invalid.
SevenJointFrame map_joints(const SkeletonFrame& frame, const JointMap& jm,
                           double conf_threshold = 0.0);

}  // namespace prefall
