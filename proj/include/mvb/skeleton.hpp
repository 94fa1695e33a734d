#pragma once

#include <array>
#include <string>
#include <vector>

namespace mvb {

enum class BoneClass { metacarpal, proximal, other };
enum class JointClass { wrist, mcp, pip, dip, tip };

/// 21-keypoint hand model: keypoint 0 is the wrist, followed by five fingers
/// (thumb, index, middle, ring, little) of four keypoints each, ordered base
/// to tip. Bones connect the wrist to each finger base and consecutive
/// keypoints within a finger.
struct HandSkeleton {
  static constexpr int keypoint_count = 21;
  static constexpr int wrist = 0;
  static constexpr int finger_count = 5;
  static constexpr int finger_size = 4;

  struct Bone {
    int parent = 0;
    int child = 0;
    BoneClass cls = BoneClass::other;
  };

  std::array<std::array<int, finger_size>, finger_count> fingers{};
  std::vector<Bone> bones;  // 20 bones

  /// Finger index owning a keypoint, -1 for the wrist.
  int finger_of(int keypoint) const;
  JointClass joint_class(int keypoint) const;

  /// Throws InvariantError unless the groups partition {1..20} and every bone
  /// references valid keypoints.
  void validate() const;
};

const HandSkeleton& hand_skeleton();

const char* to_string(BoneClass c);
const char* to_string(JointClass c);

}  // namespace mvb
