#pragma once

#include "animgan/quaternion.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace animgan {

/// Channel layout of one BVH joint, kept so a parsed rig can be written back unchanged.
struct ChannelLayout {
  /// Position channel axes in file order (empty when the joint has none).
  std::vector<int> position_axes;
  /// Rotation order; absent when the joint declares no rotation channels.
  std::optional<EulerOrder> rotation;
  /// True when position channels precede rotation channels.
  bool positions_first = true;

  std::size_t channel_count() const { return position_axes.size() + (rotation ? 3 : 0); }
  friend bool operator==(const ChannelLayout&, const ChannelLayout&) = default;
};

struct Joint {
  std::string name;
  std::optional<int> parent;
  Vec3 offset = Vec3::Zero();  // centimeters
  std::optional<Vec3> end_site;
  std::optional<ChannelLayout> channels;

  friend bool operator==(const Joint&, const Joint&) = default;
};

/// Joint hierarchy with a single root at index 0 and parents preceding children.
class Skeleton {
 public:
  explicit Skeleton(std::vector<Joint> joints);

  std::size_t size() const { return joints_.size(); }
  const Joint& joint(std::size_t i) const { return joints_[i]; }
  const std::vector<Joint>& joints() const { return joints_; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws Data error if absent

  /// Parent index per joint, -1 for the root.
  std::vector<int> parents() const;

  /// Same topology and offsets; channel layouts and end sites are ignored.
  bool same_rig(const Skeleton& other) const;

  friend bool operator==(const Skeleton&, const Skeleton&) = default;

 private:
  std::vector<Joint> joints_;
};

using SkeletonPtr = std::shared_ptr<const Skeleton>;

namespace canonical {

inline constexpr std::size_t kJointCount = 21;

enum JointId : std::size_t {
  Hips, Spine, Spine1, Neck, Head,
  LeftShoulder, LeftArm, LeftForeArm, LeftHand,
  RightShoulder, RightArm, RightForeArm, RightHand,
  LeftUpLeg, LeftLeg, LeftFoot, LeftToe,
  RightUpLeg, RightLeg, RightFoot, RightToe,
};

const std::array<std::string_view, kJointCount>& joint_names();

/// The shared 21-joint rig (a ~170 cm humanoid, Y up, facing +Z, left = +X).
SkeletonPtr skeleton();

bool is_canonical(const Skeleton& skeleton);

/// Left/right counterpart of each joint (self for midline joints).
std::size_t mirror_of(std::size_t joint);

/// Legs and toes; crossover takes these from the second sequence.
bool is_lower_body(std::size_t joint);

}  // namespace canonical

/// Hip-relative joint positions of one frame, in centimeters.
using JointPositions = std::vector<Vec3>;
/// Joint indices that drive the conditioning loss, sorted and unique.
using MainJointSet = std::vector<std::size_t>;

/// Local joint rotations of one frame, one unit quaternion per joint.
struct Pose {
  std::vector<Quat> rotations;

  std::size_t size() const { return rotations.size(); }
  static Pose identity(std::size_t joints);
};

/// Hip-relative forward kinematics. Root translation never enters; the root sits at the origin.
JointPositions forward_kinematics(const Skeleton& skeleton, const Pose& pose);

}  // namespace animgan
