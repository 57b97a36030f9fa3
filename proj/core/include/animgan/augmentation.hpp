#pragma once

#include "animgan/motion.hpp"
#include "animgan/pose_codec.hpp"

#include <string>

namespace animgan {

/// Each joint rotation of each frame composed with a random-axis rotation whose angle
/// is drawn from N(0, noise_degrees^2). Source becomes augmented.
MotionSequence mutate(const MotionSequence& motion, double noise_degrees, std::uint64_t seed);

/// Upper body (and root translation) from a, legs from b.
MotionSequence crossover(const MotionSequence& a, const MotionSequence& b);

/// Every rotation replaced by the spherical midpoint between identity and itself.
MotionSequence halve(const MotionSequence& motion);

/// Reflection across the YZ plane: left/right tracks swapped, (w, x, y, z) -> (w, x, -y, -z),
/// root x negated. Canonical rig only.
MotionSequence mirror(const MotionSequence& motion);

enum class HardNegativeKind { Reversal, BigNoise, Bounce };
inline constexpr double kBigNoiseDegrees = 45.0;

const char* to_string(HardNegativeKind kind);
HardNegativeKind hard_negative_from_string(std::string_view text);

/// Reversal conjugates every rotation, big_noise mutates at 45 degrees, bounce plays the
/// first ceil(k/2) frames and then walks back through them.
MotionSequence synth_hard_negative(const MotionSequence& motion, HardNegativeKind kind,
                                   std::uint64_t seed);

/// Per-sequence mean pose embedding.
PoseEmbedding mean_embedding(const AutoencoderModel& codec, const MotionSequence& motion);

struct ClusterModel {
  Eigen::MatrixXd centroids;            // k x 20
  std::vector<std::size_t> assignment;  // cluster of each sequence
  std::vector<std::size_t> sizes;
};

/// k-means (k-means++ seeding, Lloyd iterations) on rows of points.
ClusterModel kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed);
ClusterModel cluster_sequences(const std::vector<MotionSequence>& dataset,
                               const AutoencoderModel& codec, std::size_t k, std::uint64_t seed);

struct ClusterSchedule {
  std::size_t start = 4;
  std::size_t increment = 2;

  /// Cluster count used in a round (0-based).
  std::size_t clusters_at(std::size_t round) const { return start + increment * round; }
};

enum class AugmentOp { Mutate, Crossover, Halve, Mirror };
const char* to_string(AugmentOp op);

struct AugmentationRecord {
  std::size_t index = 0;  // position in the augmented dataset
  AugmentOp op = AugmentOp::Mutate;
  std::vector<std::size_t> parents;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  std::size_t clusters = 0;
};

struct BalanceResult {
  std::vector<MotionSequence> dataset;  // originals first, then synthesized sequences
  std::vector<AugmentationRecord> records;
};

inline constexpr double kMutateDegrees = 5.0;

/// Rounds of: cluster with the scheduled k (capped at the dataset size), pick the smallest
/// cluster (lowest index on ties), synthesize one sequence from its members with a uniformly
/// chosen operator. Stops when the dataset reaches target_size.
BalanceResult balance_dataset(const std::vector<MotionSequence>& dataset,
                              const AutoencoderModel& codec, const ClusterSchedule& schedule,
                              std::size_t target_size, std::uint64_t seed);

}  // namespace animgan
