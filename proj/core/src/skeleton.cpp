#include "animgan/skeleton.hpp"

#include "animgan/error.hpp"

#include <cmath>
#include <unordered_set>

namespace animgan {

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints)) {
  require(!joints_.empty(), ErrorKind::Data, "skeleton has no joints");
  require(!joints_[0].parent.has_value(), ErrorKind::Data, "first joint must be the root");
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const Joint& j = joints_[i];
    require(names.insert(j.name).second, ErrorKind::Data, "duplicate joint name '" + j.name + "'");
    if (i == 0) {
      continue;
    }
    require(j.parent.has_value(), ErrorKind::Data, "joint '" + j.name + "' is a second root");
    require(*j.parent >= 0 && static_cast<std::size_t>(*j.parent) < i, ErrorKind::Data,
            "joint '" + j.name + "' does not follow its parent");
    require(j.offset.allFinite(), ErrorKind::Data, "joint '" + j.name + "' has a non-finite offset");
  }
}

std::optional<std::size_t> Skeleton::find(std::string_view name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (joints_[i].name == name) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t Skeleton::index_of(std::string_view name) const {
  const auto found = find(name);
  require(found.has_value(), ErrorKind::Data, "no joint named '" + std::string(name) + "'");
  return *found;
}

std::vector<int> Skeleton::parents() const {
  std::vector<int> out(joints_.size(), -1);
  for (std::size_t i = 1; i < joints_.size(); ++i) {
    out[i] = *joints_[i].parent;
  }
  return out;
}

bool Skeleton::same_rig(const Skeleton& other) const {
  if (other.size() != size()) {
    return false;
  }
  for (std::size_t i = 0; i < size(); ++i) {
    const Joint& a = joints_[i];
    const Joint& b = other.joints_[i];
    if (a.name != b.name || a.parent != b.parent || a.offset != b.offset) {
      return false;
    }
  }
  return true;
}

Pose Pose::identity(std::size_t joints) {
  return Pose{std::vector<Quat>(joints, Quat::Identity())};
}

JointPositions forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
  require(pose.size() == skeleton.size(), ErrorKind::Data,
          "pose has " + std::to_string(pose.size()) + " rotations for " +
              std::to_string(skeleton.size()) + " joints");
  JointPositions positions(skeleton.size(), Vec3::Zero());
  std::vector<Mat3> global(skeleton.size());
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    const Quat& q = pose.rotations[i];
    require(is_unit(q), ErrorKind::Numeric,
            "joint '" + skeleton.joint(i).name + "' rotation is not unit length");
    const Mat3 local = q.toRotationMatrix();
    const auto& parent = skeleton.joint(i).parent;
    if (!parent) {
      global[i] = local;
      continue;
    }
    const auto p = static_cast<std::size_t>(*parent);
    positions[i] = positions[p] + global[p] * skeleton.joint(i).offset;
    global[i] = global[p] * local;
  }
  return positions;
}

namespace canonical {

namespace {

const std::array<std::string_view, kJointCount> kNames = {
    "Hips",          "Spine",        "Spine1",      "Neck",         "Head",
    "LeftShoulder",  "LeftArm",      "LeftForeArm", "LeftHand",     "RightShoulder",
    "RightArm",      "RightForeArm", "RightHand",   "LeftUpLeg",    "LeftLeg",
    "LeftFoot",      "LeftToe",      "RightUpLeg",  "RightLeg",     "RightFoot",
    "RightToe",
};

struct JointTemplate {
  int parent;
  Vec3 offset;
  std::optional<Vec3> end_site;
};

std::vector<Joint> build() {
  // Centimeters. Left side is +X; the mirrored right side is derived below.
  const std::array<JointTemplate, kJointCount> t = {{
      {-1, {0.0, 0.0, 0.0}, {}},
      {Hips, {0.0, 10.0, 0.0}, {}},
      {Spine, {0.0, 16.0, 0.0}, {}},
      {Spine1, {0.0, 22.0, 0.0}, {}},
      {Neck, {0.0, 10.0, 1.0}, Vec3{0.0, 16.0, 0.0}},
      {Spine1, {4.0, 17.0, 0.0}, {}},
      {LeftShoulder, {14.0, 0.0, 0.0}, {}},
      {LeftArm, {28.0, 0.0, 0.0}, {}},
      {LeftForeArm, {25.0, 0.0, 0.0}, Vec3{9.0, 0.0, 0.0}},
      {Spine1, {-4.0, 17.0, 0.0}, {}},
      {RightShoulder, {-14.0, 0.0, 0.0}, {}},
      {RightArm, {-28.0, 0.0, 0.0}, {}},
      {RightForeArm, {-25.0, 0.0, 0.0}, Vec3{-9.0, 0.0, 0.0}},
      {Hips, {9.0, -4.0, 0.0}, {}},
      {LeftUpLeg, {0.0, -43.0, 0.0}, {}},
      {LeftLeg, {0.0, -42.0, 0.0}, {}},
      {LeftFoot, {0.0, -7.0, 13.0}, Vec3{0.0, 0.0, 5.0}},
      {Hips, {-9.0, -4.0, 0.0}, {}},
      {RightUpLeg, {0.0, -43.0, 0.0}, {}},
      {RightLeg, {0.0, -42.0, 0.0}, {}},
      {RightFoot, {0.0, -7.0, 13.0}, Vec3{0.0, 0.0, 5.0}},
  }};
  std::vector<Joint> joints;
  joints.reserve(kJointCount);
  for (std::size_t i = 0; i < kJointCount; ++i) {
    Joint j;
    j.name = std::string(kNames[i]);
    if (t[i].parent >= 0) {
      j.parent = t[i].parent;
    }
    j.offset = t[i].offset;
    j.end_site = t[i].end_site;
    joints.push_back(std::move(j));
  }
  return joints;
}

}  // namespace

const std::array<std::string_view, kJointCount>& joint_names() { return kNames; }

SkeletonPtr skeleton() {
  static const SkeletonPtr rig = std::make_shared<const Skeleton>(build());
  return rig;
}

bool is_canonical(const Skeleton& s) { return s.same_rig(*skeleton()); }

std::size_t mirror_of(std::size_t joint) {
  if (joint >= LeftShoulder && joint <= LeftHand) return joint + 4;
  if (joint >= RightShoulder && joint <= RightHand) return joint - 4;
  if (joint >= LeftUpLeg && joint <= LeftToe) return joint + 4;
  if (joint >= RightUpLeg && joint <= RightToe) return joint - 4;
  return joint;
}

bool is_lower_body(std::size_t joint) { return joint >= LeftUpLeg; }

}  // namespace canonical

}  // namespace animgan
