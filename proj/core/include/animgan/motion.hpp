#pragma once

#include "animgan/skeleton.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace animgan {

enum class SequenceSource { Real, Generated, Augmented, HardNegative };

const char* to_string(SequenceSource source);
SequenceSource source_from_string(std::string_view text);

/// Ordered frames of one skeleton at a fixed rate.
struct MotionSequence {
  SkeletonPtr skeleton;
  std::vector<Pose> frames;
  std::vector<Vec3> root_translation;  // centimeters, one per frame
  double fps = 5.0;
  std::optional<std::string> label;
  SequenceSource source = SequenceSource::Real;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t joint_count() const { return skeleton->size(); }

  /// Throws Data errors when a structural invariant is broken.
  void validate() const;

  /// Hip-relative positions for every frame.
  std::vector<JointPositions> positions() const;
};

inline constexpr double kTargetFps = 5.0;
inline constexpr std::size_t kMaxFrames = 300;

/// Frames at uniform target timestamps. Integer rate ratios select frames,
/// others interpolate spherically.
MotionSequence resample(const MotionSequence& motion, double target_fps);

/// Keeps at most max_frames leading frames.
MotionSequence trim(const MotionSequence& motion, std::size_t max_frames);

/// Maps source joint name -> canonical joint name.
using JointMap = std::map<std::string, std::string>;

/// Identity mapping for rigs that already use canonical names.
JointMap canonical_identity_map();

MotionSequence retarget_to_canonical(const Skeleton& skeleton, const MotionSequence& motion,
                                     const JointMap& joint_map);

/// Resample to 5 fps, then trim to 300 frames.
MotionSequence normalize_for_training(const MotionSequence& motion);

/// Pose flattened to k x (4 * joints) rows of (w, x, y, z).
Eigen::MatrixXd pose_matrix(const MotionSequence& motion);
Pose pose_from_row(const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace animgan
