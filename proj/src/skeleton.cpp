#include "mvb/skeleton.hpp"

#include <algorithm>

#include "mvb/error.hpp"

namespace mvb {

namespace {

HandSkeleton build() {
  HandSkeleton s;
  for (int f = 0; f < HandSkeleton::finger_count; ++f)
    for (int k = 0; k < HandSkeleton::finger_size; ++k)
      s.fingers[f][k] = 1 + f * HandSkeleton::finger_size + k;

  for (int f = 0; f < HandSkeleton::finger_count; ++f) {
    const auto& fg = s.fingers[f];
    s.bones.push_back({HandSkeleton::wrist, fg[0], BoneClass::metacarpal});
    s.bones.push_back({fg[0], fg[1], BoneClass::proximal});
    s.bones.push_back({fg[1], fg[2], BoneClass::other});
    s.bones.push_back({fg[2], fg[3], BoneClass::other});
  }
  return s;
}

}  // namespace

int HandSkeleton::finger_of(int keypoint) const {
  if (keypoint == wrist) return -1;
  if (keypoint < 1 || keypoint >= keypoint_count)
    throw DomainError("finger_of: keypoint out of range");
  return (keypoint - 1) / finger_size;
}

JointClass HandSkeleton::joint_class(int keypoint) const {
  if (keypoint == wrist) return JointClass::wrist;
  if (keypoint < 1 || keypoint >= keypoint_count)
    throw DomainError("joint_class: keypoint out of range");
  switch ((keypoint - 1) % finger_size) {
    case 0: return JointClass::mcp;
    case 1: return JointClass::pip;
    case 2: return JointClass::dip;
    default: return JointClass::tip;
  }
}

void HandSkeleton::validate() const {
  std::array<int, keypoint_count> seen{};
  seen[wrist] = 1;
  for (const auto& finger : fingers)
    for (int kp : finger) {
      if (kp <= 0 || kp >= keypoint_count)
        throw InvariantError("skeleton: finger keypoint out of range");
      ++seen[kp];
    }
  if (!std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }))
    throw InvariantError("skeleton: finger groups and wrist do not partition the keypoints");
  if (bones.size() != 20) throw InvariantError("skeleton: expected 20 bones");
  for (const auto& b : bones)
    if (b.parent < 0 || b.parent >= keypoint_count || b.child <= 0 || b.child >= keypoint_count ||
        b.parent == b.child)
      throw InvariantError("skeleton: bone references invalid keypoints");
}

const HandSkeleton& hand_skeleton() {
  static const HandSkeleton s = build();
  return s;
}

const char* to_string(BoneClass c) {
  switch (c) {
    case BoneClass::metacarpal: return "metacarpal";
    case BoneClass::proximal: return "proximal";
    default: return "other";
  }
}

const char* to_string(JointClass c) {
  switch (c) {
    case JointClass::wrist: return "wrist";
    case JointClass::mcp: return "mcp";
    case JointClass::pip: return "pip";
    case JointClass::dip: return "dip";
    default: return "tip";
  }
}

}  // namespace mvb
