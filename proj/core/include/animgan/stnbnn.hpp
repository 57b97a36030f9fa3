#pragma once

#include "animgan/motion.hpp"

#include <string>

namespace animgan {

/// Per-(stage, joint) descriptors of one sequence. Descriptor (t, j) concatenates the
/// hip-relative positions of joint j over the frames of stage t.
struct StageDescriptors {
  std::size_t stages = 0;
  std::size_t joints = 0;
  std::size_t points_per_stage = 0;
  /// Row t * joints + j holds descriptor (t, j), 3 * points_per_stage values.
  Eigen::MatrixXd rows;

  Eigen::Ref<const Eigen::RowVectorXd> at(std::size_t stage, std::size_t joint) const {
    return rows.row(static_cast<Eigen::Index>(stage * joints + joint));
  }
};

/// Splits the sequence into `stages` contiguous near-equal stages. When a stage's frame
/// count differs from points_per_stage (0 = ceil(frames / stages)), its positions are
/// linearly resampled in time so descriptors of different sequences stay comparable.
StageDescriptors extract_stage_descriptors(const MotionSequence& motion, std::size_t stages,
                                           std::size_t points_per_stage = 0);
StageDescriptors extract_stage_descriptors(const std::vector<JointPositions>& positions,
                                           std::size_t stages, std::size_t points_per_stage = 0);

struct StnbnnConfig {
  std::size_t stages = 10;
  std::size_t main_joints = 8;
  std::size_t rounds = 5;
  double temperature = 2.0;  // entropy pull toward uniform weights
};

struct ClassWeights {
  std::string label;
  Eigen::VectorXd spatial;   // one per joint, sums to 1
  Eigen::VectorXd temporal;  // one per stage, sums to 1
};

struct StnbnnModel {
  std::size_t stages = 10;
  std::size_t main_joints = 8;
  std::size_t points_per_stage = 0;
  std::size_t joints = canonical::kJointCount;
  Eigen::VectorXd spatial;   // v
  Eigen::VectorXd temporal;  // u
  std::vector<ClassWeights> classes;
  /// Per class, per joint: every stored descriptor of that joint, one per row.
  std::vector<std::vector<Eigen::MatrixXd>> store;
  /// Store member ids, aligned with classes (one entry per stored sequence).
  std::vector<std::vector<std::size_t>> members;
  bool trained = false;

  std::string store_digest() const;
};

struct LabeledSequence {
  const MotionSequence* motion = nullptr;
  std::string label;
};

/// Fits per-class spatial and temporal weights by alternately maximizing the mean bilinear
/// margin v' M u plus temperature-weighted entropy, starting from uniform weights. Margins
/// are rival-class minus own-class nearest-neighbour distances over the mean distance.
/// The model's spatial / temporal weights are the class average.
StnbnnModel train_stnbnn(const std::vector<LabeledSequence>& corpus, const StnbnnConfig& config);

/// joints x stages matrix of squared distances from each query descriptor to its nearest
/// neighbour among the class's stored descriptors of the same joint. exclude_member drops
/// one stored sequence (leave-one-out).
Eigen::MatrixXd class_distances(const StnbnnModel& model, const StageDescriptors& query,
                                std::size_t class_index,
                                std::optional<std::size_t> exclude_member = std::nullopt);

/// Class whose store is nearest in unweighted total distance.
std::size_t nearest_class(const StnbnnModel& model, const StageDescriptors& query);

/// The J largest entries of weights; ties go to the lower joint index. Result is sorted.
MainJointSet top_joints(const Eigen::VectorXd& weights, std::size_t count);

/// Main joints of a sequence: the top-J spatial weights of the nearest class, or of the
/// model-wide weights when the model carries no class store.
MainJointSet main_joints(const StnbnnModel& model, const MotionSequence& motion);
MainJointSet main_joints(const StnbnnModel& model, const std::vector<JointPositions>& positions);

/// Fallback for unlabeled data: joints ranked by summed squared frame-to-frame displacement.
MainJointSet motion_energy_joints(const std::vector<JointPositions>& positions, std::size_t count);
Eigen::VectorXd motion_energy(const std::vector<JointPositions>& positions);

std::string stnbnn_to_json(const StnbnnModel& model);

}  // namespace animgan
