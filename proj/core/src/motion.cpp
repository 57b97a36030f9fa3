#include "animgan/motion.hpp"

#include "animgan/error.hpp"

#include <cmath>
#include <set>

namespace animgan {

const char* to_string(SequenceSource source) {
  switch (source) {
    case SequenceSource::Real: return "real";
    case SequenceSource::Generated: return "generated";
    case SequenceSource::Augmented: return "augmented";
    case SequenceSource::HardNegative: return "hard_negative";
  }
  return "real";
}

SequenceSource source_from_string(std::string_view text) {
  if (text == "real") return SequenceSource::Real;
  if (text == "generated") return SequenceSource::Generated;
  if (text == "augmented") return SequenceSource::Augmented;
  if (text == "hard_negative") return SequenceSource::HardNegative;
  fail(ErrorKind::Data, "unknown sequence source '" + std::string(text) + "'");
}

void MotionSequence::validate() const {
  require(skeleton != nullptr, ErrorKind::Data, "motion has no skeleton");
  require(!frames.empty(), ErrorKind::Data, "motion has no frames");
  require(std::isfinite(fps) && fps > 0.0, ErrorKind::Data, "motion fps must be positive");
  require(root_translation.size() == frames.size(), ErrorKind::Data,
          "root translation track length differs from frame count");
  for (const Pose& pose : frames) {
    require(pose.size() == skeleton->size(), ErrorKind::Data,
            "frame joint count differs from skeleton");
    for (const Quat& q : pose.rotations) {
      require(q.coeffs().allFinite() && is_unit(q), ErrorKind::Data,
              "frame holds a non-unit rotation");
    }
  }
}

std::vector<JointPositions> MotionSequence::positions() const {
  std::vector<JointPositions> out;
  out.reserve(frames.size());
  for (const Pose& pose : frames) {
    out.push_back(forward_kinematics(*skeleton, pose));
  }
  return out;
}

MotionSequence resample(const MotionSequence& motion, double target_fps) {
  require(std::isfinite(target_fps) && target_fps > 0.0, ErrorKind::Usage,
          "target fps must be positive");
  require(target_fps <= motion.fps * (1.0 + 1e-12), ErrorKind::Usage,
          "resample cannot upsample (" + std::to_string(motion.fps) + " -> " +
              std::to_string(target_fps) + " fps)");
  motion.validate();
  if (std::abs(target_fps - motion.fps) <= 1e-12 * motion.fps) {
    return motion;
  }

  const std::size_t source_frames = motion.frame_count();
  const double ratio = motion.fps / target_fps;
  const auto count = static_cast<std::size_t>(
      std::floor(static_cast<double>(source_frames - 1) / ratio + 1e-9)) + 1;

  MotionSequence out = motion;
  out.fps = target_fps;
  out.frames.clear();
  out.root_translation.clear();
  out.frames.reserve(count);
  out.root_translation.reserve(count);

  const double nearest = std::round(ratio);
  const bool integer_ratio = std::abs(ratio - nearest) < 1e-9;
  for (std::size_t i = 0; i < count; ++i) {
    if (integer_ratio) {
      const auto src = static_cast<std::size_t>(i * static_cast<std::size_t>(nearest));
      out.frames.push_back(motion.frames[src]);
      out.root_translation.push_back(motion.root_translation[src]);
      continue;
    }
    const double t = static_cast<double>(i) * ratio;
    const auto lo = std::min(static_cast<std::size_t>(std::floor(t)), source_frames - 1);
    const std::size_t hi = std::min(lo + 1, source_frames - 1);
    const double alpha = t - static_cast<double>(lo);
    Pose pose;
    pose.rotations.reserve(motion.joint_count());
    for (std::size_t j = 0; j < motion.joint_count(); ++j) {
      pose.rotations.push_back(
          slerp(motion.frames[lo].rotations[j], motion.frames[hi].rotations[j], alpha));
    }
    out.frames.push_back(std::move(pose));
    out.root_translation.push_back((1.0 - alpha) * motion.root_translation[lo] +
                                   alpha * motion.root_translation[hi]);
  }
  return out;
}

MotionSequence trim(const MotionSequence& motion, std::size_t max_frames) {
  require(max_frames >= 1, ErrorKind::Usage, "max_frames must be at least 1");
  if (motion.frame_count() <= max_frames) {
    return motion;
  }
  MotionSequence out = motion;
  out.frames.resize(max_frames);
  out.root_translation.resize(max_frames);
  return out;
}

JointMap canonical_identity_map() {
  JointMap map;
  for (const auto name : canonical::joint_names()) {
    map.emplace(std::string(name), std::string(name));
  }
  return map;
}

MotionSequence retarget_to_canonical(const Skeleton& skeleton, const MotionSequence& motion,
                                     const JointMap& joint_map) {
  require(motion.skeleton && motion.skeleton->same_rig(skeleton), ErrorKind::Data,
          "motion does not reference the given skeleton");
  const SkeletonPtr target = canonical::skeleton();

  std::vector<std::optional<std::size_t>> source_of(canonical::kJointCount);
  for (const auto& [source_name, canonical_name] : joint_map) {
    const auto target_index = target->find(canonical_name);
    require(target_index.has_value(), ErrorKind::Data,
            "joint map targets unknown canonical joint '" + canonical_name + "'");
    require(!source_of[*target_index].has_value(), ErrorKind::Data,
            "duplicate assignment to canonical joint '" + canonical_name + "'");
    source_of[*target_index] = skeleton.index_of(source_name);
  }
  for (std::size_t c = 0; c < canonical::kJointCount; ++c) {
    require(source_of[c].has_value(), ErrorKind::Data,
            "incomplete joint map: canonical joint '" +
                std::string(canonical::joint_names()[c]) + "' is unmapped");
  }

  MotionSequence out;
  out.skeleton = target;
  out.fps = motion.fps;
  out.label = motion.label;
  out.source = motion.source;
  out.root_translation = motion.root_translation;
  out.frames.reserve(motion.frame_count());
  for (const Pose& pose : motion.frames) {
    Pose mapped;
    mapped.rotations.reserve(canonical::kJointCount);
    for (std::size_t c = 0; c < canonical::kJointCount; ++c) {
      mapped.rotations.push_back(pose.rotations[*source_of[c]]);
    }
    out.frames.push_back(std::move(mapped));
  }
  return out;
}

MotionSequence normalize_for_training(const MotionSequence& motion) {
  return trim(resample(motion, kTargetFps), kMaxFrames);
}

Eigen::MatrixXd pose_matrix(const MotionSequence& motion) {
  const auto joints = static_cast<Eigen::Index>(motion.joint_count());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(motion.frame_count()), 4 * joints);
  for (std::size_t t = 0; t < motion.frame_count(); ++t) {
    for (Eigen::Index j = 0; j < joints; ++j) {
      const Quat& q = motion.frames[t].rotations[static_cast<std::size_t>(j)];
      const auto row = static_cast<Eigen::Index>(t);
      out(row, 4 * j + 0) = q.w();
      out(row, 4 * j + 1) = q.x();
      out(row, 4 * j + 2) = q.y();
      out(row, 4 * j + 3) = q.z();
    }
  }
  return out;
}

Pose pose_from_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  require(row.size() % 4 == 0, ErrorKind::Data, "pose row width is not a multiple of 4");
  Pose pose;
  pose.rotations.reserve(static_cast<std::size_t>(row.size() / 4));
  for (Eigen::Index j = 0; j < row.size() / 4; ++j) {
    pose.rotations.push_back(
        normalized_canonical(Quat(row(4 * j), row(4 * j + 1), row(4 * j + 2), row(4 * j + 3))));
  }
  return pose;
}

}  // namespace animgan
