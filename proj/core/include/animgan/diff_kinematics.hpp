#pragma once

#include "animgan/ndl/ops.hpp"
#include "animgan/skeleton.hpp"

namespace animgan {

/// Per-joint quaternion normalization of a k x 4J matrix of (w, x, y, z) groups,
/// with the sign flipped so w >= 0. Groups with norm below kDegenerateNorm become
/// the identity quaternion and pass no gradient.
ndl::Var quat_normalize(ndl::Var raw);
ndl::Matrix quat_normalize(const ndl::Matrix& raw);

/// Hip-relative forward kinematics of every row: k x 4J rotations to k x 3J positions
/// (x, y, z per joint). Rotations are read as rotation matrices via the unit-quaternion
/// polynomial, so inputs should already be normalized.
ndl::Var forward_kinematics(const Skeleton& skeleton, ndl::Var rotations);
ndl::Matrix forward_kinematics(const Skeleton& skeleton, const ndl::Matrix& rotations);

/// k x 3J matrix of frame positions, laid out like forward_kinematics output.
ndl::Matrix positions_matrix(const std::vector<JointPositions>& frames);
std::vector<JointPositions> positions_from_matrix(const ndl::Matrix& positions);

}  // namespace animgan
