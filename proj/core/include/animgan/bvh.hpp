#pragma once

#include "animgan/motion.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace animgan::bvh {

struct Document {
  SkeletonPtr skeleton;
  MotionSequence motion;
};

/// Parses a BVH document. Errors carry the line number of the offending token.
Document parse(std::string_view text);

/// Serializes with six decimal places. Joints without a recorded channel
/// layout are written with ZXY rotation channels (root also gets XYZ positions).
std::string write(const Skeleton& skeleton, const MotionSequence& motion);

Document read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Skeleton& skeleton,
                const MotionSequence& motion);

}  // namespace animgan::bvh
