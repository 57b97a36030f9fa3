#pragma once

#include "animgan/motion.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace animgan {

/// One sequence of an on-disk dataset together with its provenance.
struct DatasetEntry {
  std::string id;  // file stem
  MotionSequence motion;
  std::string op = "original";
  std::vector<std::string> parents;
  std::optional<std::uint64_t> seed;
};

using Dataset = std::vector<DatasetEntry>;

inline constexpr const char* kManifestName = "manifest.json";

/// A dataset directory holds one BVH file per sequence plus manifest.json listing
/// file, label, source, op, parents and seed per entry. Without a manifest every
/// *.bvh file is loaded (sorted by name) as an unlabeled real sequence.
Dataset load_dataset(const std::filesystem::path& dir);
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

std::vector<MotionSequence> motions_of(const Dataset& dataset);

/// Entries named "<prefix>-<index>" with zero-padded indices.
Dataset dataset_from_motions(std::vector<MotionSequence> motions, const std::string& prefix);

}  // namespace animgan
